#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chipcost/system.hpp"

namespace chipcost {

/// IO-cell instance counts for one IO type. Rows are transmitting chips,
/// columns receiving chips, both indexed by pre-order chip index. Nets with an
/// endpoint outside the system are kept in `external_tx` / `external_rx`.
class ConnectionMatrix {
 public:
  ConnectionMatrix(const IODefinition* io, std::size_t n);

  const IODefinition& io() const { return *io_; }
  std::size_t size() const { return n_; }

  std::int64_t at(std::size_t from, std::size_t to) const { return counts_[from * n_ + to]; }
  std::int64_t external_tx(std::size_t chip) const { return ext_tx_[chip]; }
  std::int64_t external_rx(std::size_t chip) const { return ext_rx_[chip]; }

  /// TX instances on `chip`, including those driving external endpoints.
  std::int64_t row_sum(std::size_t chip) const { return row_[chip]; }
  /// RX instances on `chip`, including those fed from external endpoints.
  std::int64_t col_sum(std::size_t chip) const { return col_[chip]; }

  /// Self-connections are dropped.
  void add(int from, int to, std::int64_t count);

 private:
  const IODefinition* io_;
  std::size_t n_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> ext_tx_, ext_rx_, row_, col_;
};

/// Instances needed to carry `bandwidth` on cells of `cell_bandwidth` each.
std::int64_t InstancesForBandwidth(double bandwidth, double cell_bandwidth);

/// Instances a net contributes: its explicit count, or the bandwidth ceiling.
std::int64_t NetInstances(const ResolvedNet& net);

/// One matrix per IO type referenced by the netlist, sorted by IO name.
std::vector<ConnectionMatrix> BuildMatrices(const ValidatedSystem& system);

/// IO-cell area of one chip: sum over IO types of tx_area * TX instances plus
/// rx_area * RX instances.
double IOArea(std::size_t chip, const std::vector<ConnectionMatrix>& matrices);

struct StackChild {
  double area = 0.0;
  bool buried = false;
};

/// Footprint taken by the children on their parent, each widened by the die
/// separation and the group framed by the edge exclusion. Buried children
/// take no area.
double StackArea(const std::vector<StackChild>& children, const AssemblyProcessDef& process);

/// Power one pad can deliver: V * J_max * pi * (pitch/4)^2.
double PowerPerPad(double voltage, const AssemblyProcessDef& process);

/// 2 * ceil(power / PowerPerPad), half supply and half return.
std::int64_t PowerPadCount(double power, double voltage, const AssemblyProcessDef& process);

/// Scan-test IOs: chains * IOs per chain + offset.
std::int64_t TestIOCount(const TestProcessDef& test);

/// Width of the perimeter band reachable by an IO cell: (reach - separation)/2.
double PlacementBandWidth(double reach, double die_separation);

/// Pads of area pitch^2 that fit in a band of width `band` around a square
/// die with side `side`.
std::int64_t BandCapacity(double side, double band, double pitch);

struct PadGroup {
  std::string io_type;
  double reach = 0.0;
  double band_width = 0.0;
  std::int64_t pads = 0;
};

struct PadPlacementInput {
  double base_side = 0.0;              // side before growth, sqrt of max(core + IO, stack)
  std::vector<PadGroup> signal;        // any order; sorted by reach internally
  std::int64_t power_pads = 0;
  std::int64_t test_pads = 0;
  double pitch = 0.1;
};

struct PadPlacement {
  double side = 0.0;                   // final side length
  double pad_area = 0.0;               // pads * pitch^2, or side^2 after growth
  bool grew = false;
  std::vector<PadGroup> signal;        // sorted by reach, shortest first
};

/// Places signal pads in their reach bands (shortest reach outermost), then
/// power and test pads anywhere. Grows the side length one pitch at a time
/// until everything fits. Throws ConfigError if a signal IO's reach does not
/// exceed the die separation.
PadPlacement PlacePads(const PadPlacementInput& input, double die_separation,
                       const std::string& chip_path);

/// Derived physical quantities of one chip.
struct DerivedChip {
  int index = 0;
  double core_area = 0.0;
  double io_area = 0.0;
  double stack_area = 0.0;
  double pad_area = 0.0;
  double area = 0.0;            // chip area used for cost
  double yield_area = 0.0;      // area exposed to defects: core + IO, or black box
  double side_x = 0.0;
  double side_y = 0.0;
  double core_power = 0.0;
  double io_power = 0.0;
  double power = 0.0;           // total including stacked chips
  std::int64_t signal_pads = 0;
  std::int64_t power_pads = 0;
  std::int64_t test_ios = 0;
  std::vector<PadGroup> pad_groups;
  bool grew_for_pads = false;

  std::int64_t total_pads() const { return signal_pads + power_pads + test_ios; }
};

struct DerivedSystem {
  ValidatedSystem system;
  std::vector<ConnectionMatrix> matrices;
  std::vector<DerivedChip> chips;   // pre-order index
};

/// Post-order derivation: power first (it depends only on children and IO
/// traffic), then pads, then area. Throws ConfigError on structural problems.
DerivedSystem Derive(const ValidatedSystem& system);

/// Chips a net is routed through without terminating on them (bumps only).
/// Internal nets stop below their lowest common ancestor; external nets leave
/// through every ancestor of their resolving endpoint.
std::vector<int> PassThroughChips(const ValidatedSystem& system, const ResolvedNet& net);

}  // namespace chipcost
