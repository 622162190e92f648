#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "chipcost/config_io.hpp"
#include "chipcost/cost_engine.hpp"
#include "chipcost/sweep.hpp"

namespace support {

std::filesystem::path FixtureDir();
std::filesystem::path DataDir();

std::shared_ptr<const chipcost::ProcessLibrary> LoadLibrary(const std::filesystem::path& dir);

/// tests/fixtures/hand, validated.
chipcost::ValidatedSystem HandSystem();

/// The shipped graph processor with the homogeneous split rule of
/// data/sweeps/chiplet_count.json applied for `count` chiplets.
chipcost::SystemSpec GraphProcessor();
chipcost::SweepSpec ChipletCountSweep();

/// Total cost for each chiplet count of the sweep, in sweep order.
struct CountCurve {
  std::vector<int> counts;
  std::vector<double> totals;
  std::vector<double> scrap;
  int argmin() const;
};
CountCurve SweepCounts(const chipcost::ProcessLibrary& library, const std::vector<int>& counts,
                       chipcost::GeometryCache* cache = nullptr);

bool Near(double a, double b, double rel, double abs = 0.0);

// Random systems ------------------------------------------------------------

struct RandomSystem {
  std::shared_ptr<const chipcost::ProcessLibrary> library;
  chipcost::SystemSpec spec;
};

/// Library and chip tree with depth <= max_depth below the root and fanout
/// <= max_fanout, plus a random netlist including external endpoints.
RandomSystem GenerateSystem(std::mt19937_64& rng, int max_depth = 3, int max_fanout = 8);

struct HarnessResult {
  int systems = 0;
  int feasible = 0;
  int sweeps_compared = 0;
  std::vector<std::string> failures;   // first few, for diagnostics
  int failure_count = 0;
};

/// Generates `count` systems and checks the module invariants on each.
HarnessResult RunPropertyHarness(std::uint64_t seed, int count, chipcost::GeometryCache& cache);

}  // namespace support
