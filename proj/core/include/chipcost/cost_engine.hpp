#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chipcost/library.hpp"
#include "chipcost/system.hpp"
#include "chipcost/system_graph.hpp"
#include "chipcost/wafer_geometry.hpp"

namespace chipcost {

// Yield ---------------------------------------------------------------------

/// Negative binomial defect yield (1 + d0 * critical_area / alpha)^-alpha.
double DefectYield(double defect_density, double critical_area, double alpha);

/// One layer: stitch_yield^k_stitch times the defect yield of
/// yield_area * critical_area_ratio.
double LayerYield(const LayerDef& layer, double yield_area, int k_stitch);

/// Product of LayerYield over the stack.
double DieYield(const std::vector<const LayerDef*>& layers, double yield_area, int k_stitch);

/// 1 - coverage * (1 - true_yield).
double TestedYield(double coverage, double true_yield);

/// Fraction of test passers that are good: true_yield / tested_yield.
double Quality(double true_yield, double tested_yield);

/// bond_yield^pins * alignment_yield^dies / (1 + dielectric_defects * bonded_area).
double AssemblyYield(std::int64_t pins, int dies, double bonded_area, const AssemblyProcessDef& p);

// Cost ----------------------------------------------------------------------

/// Wafer cost per mm^2 spread over the dies actually obtained:
/// cost_per_mm2 * pi r^2 / (dies * die_x * die_y). Infinite when dies is 0.
double EffectiveCostPerMm2(double cost_per_mm2, std::int64_t dies, double die_x, double die_y,
                           double usable_radius);

/// Lithography share scaled by reticle utilization: 1 - P + P / U.
double LithoMultiplier(double litho_fraction, double utilization);

/// Cost of one layer of one die.
double LayerCost(const LayerDef& layer, double area, double effective_cost_per_mm2,
                 double utilization);

/// machine_rate * patterns * scan_chain_length * clock_period.
double TestCost(const TestProcessDef& test);

/// Machine time for pick-and-place and bonding plus material on the bonded area.
double AssemblyCost(int dies, double bonded_area, const AssemblyProcessDef& p);

/// Design (front and back end) plus shared mask cost, per unit manufactured.
double NreCost(const ChipSpec& chip, const std::vector<const LayerDef*>& layers,
               const WaferProcessDef& wafer);

// Propagation ---------------------------------------------------------------

struct NodeCosts {
  int index = 0;
  int parent = -1;
  std::string name;
  std::string path;
  bool feasible = true;

  std::int64_t dies_per_wafer = 0;
  ReticleFit reticle;

  double c_die = 0.0;             // untested silicon
  double c_test_self = 0.0;
  double y_true = 1.0;            // die yield
  double y_tested = 1.0;
  double q_self = 1.0;
  double c_re_self = 0.0;

  int n_children = 0;
  std::int64_t n_pins = 0;        // pads bonded between this chip and its children
  double bonded_area = 0.0;
  double c_assembly = 0.0;
  double c_test_assembly = 0.0;
  double y_assembly = 1.0;
  double y_quality = 1.0;         // product of incoming child qualities
  double y_true_assembly = 1.0;
  double y_tested_assembly = 1.0;

  double quality = 1.0;           // outgoing quality seen by the parent
  double y_chip = 1.0;            // y_true * y_assembly * y_quality
  double c_re = 0.0;
  double c_nre_self = 0.0;
  double c_nre = 0.0;
  double c_total = 0.0;
};

struct CostBreakdown {
  double silicon = 0.0;   // raw die cost of every chip
  double assembly = 0.0;  // assembly machine time and material
  double test = 0.0;      // self and assembly test
  double scrap = 0.0;     // cost added by discarding failing parts
  double nre = 0.0;

  double total() const { return silicon + assembly + test + scrap + nre; }
};

struct CostReport {
  std::string system_name;
  bool feasible = true;
  std::string diagnostic;            // first infeasible chip and why
  std::vector<NodeCosts> nodes;      // pre-order, root first
  std::vector<DerivedChip> derived;  // pre-order
  CostBreakdown breakdown;

  const NodeCosts& root() const { return nodes.front(); }
  double total_cost() const { return nodes.front().c_total; }
};

struct EvaluateOptions {
  /// Shared dies-per-wafer memo; a private one is used when null.
  GeometryCache* geometry = nullptr;
};

/// Evaluates a derived system bottom up. Never throws for infeasible
/// designs; those come back with feasible = false and infinite costs.
CostReport Evaluate(const DerivedSystem& system, const EvaluateOptions& options = {});

/// Derive + Evaluate.
CostReport Evaluate(const ValidatedSystem& system, const EvaluateOptions& options = {});

}  // namespace chipcost
