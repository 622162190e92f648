#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chipcost/cost_engine.hpp"
#include "chipcost/library.hpp"
#include "chipcost/system.hpp"

namespace chipcost {

inline constexpr int kSweepSpecVersion = 1;

using SweepValue = std::variant<double, std::string>;

/// One swept parameter. Target grammar:
///   library.<kind>[NAME].<field>   kind: layer, io, waferprocess, assembly, test
///   system.chip[NAME].<field>      NAME may be `*` or end in `*` (prefix match)
///   system.net[INDEX|*].<field>
///   split.count                    chiplet count of the homogeneous split rule
struct SweepParameter {
  std::string target;
  std::vector<SweepValue> values;
};

/// Replaces `template_chip` under `parent` with N identical chiplets that
/// share `total_core_area` and `total_core_power`, wired as a sqrt(N) x
/// sqrt(N) mesh. Each mesh edge carries bisection_bandwidth / sqrt(N) so the
/// bisection stays constant; each chiplet gets external_bandwidth / N to an
/// off-package endpoint. The chiplet quantity is the template's times N, since
/// all chiplets share one design.
struct HomogeneousSplit {
  std::string parent;
  std::string template_chip;
  int count = 1;
  double total_core_area = 0.0;
  double total_core_power = 0.0;
  double bisection_bandwidth = 0.0;
  double external_bandwidth = 0.0;
  std::string io;
  std::string external_io;        // defaults to `io`
  std::string external_endpoint = "host";
};

struct SweepSpec {
  std::vector<SweepParameter> parameters;
  std::optional<HomogeneousSplit> split;

  /// Number of points in the cartesian product.
  std::size_t size() const;
};

/// Parses the JSON sweep description. Throws ParseError / ValidationError.
SweepSpec ParseSweepSpec(std::string_view json, const std::string& source);

/// Applies the split rule to a system spec. Throws ValidationError when the
/// parent, template or IO type cannot be found or N is not a perfect square.
/// Nets touching the template are dropped. Unidirectional IO types get one
/// net per direction; bidirectional ones a single net per link.
void ApplyHomogeneousSplit(SystemSpec& system, const HomogeneousSplit& rule,
                           const ProcessLibrary& library);

/// Sets one target to a value. Throws ValidationError if the target does not
/// resolve or the value has the wrong type.
void ApplyTarget(SystemSpec& system, ProcessLibrary& library, HomogeneousSplit* split,
                 const std::string& target, const SweepValue& value);

struct SweepRow {
  std::vector<SweepValue> values;   // one per parameter
  bool feasible = true;
  std::string diagnostic;
  double total_cost = 0.0;
  double re_cost = 0.0;
  double nre_cost = 0.0;
  CostBreakdown breakdown;
  double root_area = 0.0;
  double root_power = 0.0;
  double root_yield = 0.0;
  double leaf_core_area = 0.0;      // core area of the first split chiplet or first leaf
  int leaf_count = 0;
};

struct SweepOptions {
  int jobs = 1;
  GeometryCache* geometry = nullptr;
};

/// Checks every target against the base inputs without evaluating anything.
void CheckSweep(const SweepSpec& spec, const SystemSpec& system, const ProcessLibrary& library);

/// Evaluates every point of the cartesian product, first parameter outermost.
/// Rows come back in that order regardless of `jobs`.
std::vector<SweepRow> RunSweep(const SweepSpec& spec, const SystemSpec& system,
                               const ProcessLibrary& library, const SweepOptions& options = {});

/// Deterministic CSV: schema comment, header, one line per row, %.9g floats.
std::string SweepToCsv(const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace chipcost
