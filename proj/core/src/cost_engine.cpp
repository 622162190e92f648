#include "chipcost/cost_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace chipcost {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double DefectYield(double defect_density, double critical_area, double alpha) {
  return std::pow(1.0 + defect_density * critical_area / alpha, -alpha);
}

double LayerYield(const LayerDef& layer, double yield_area, int k_stitch) {
  const double stitch = std::pow(layer.stitch_yield, k_stitch);
  return stitch * DefectYield(layer.defect_density, yield_area * layer.critical_area_ratio,
                              layer.clustering);
}

double DieYield(const std::vector<const LayerDef*>& layers, double yield_area, int k_stitch) {
  double y = 1.0;
  for (const LayerDef* l : layers) y *= LayerYield(*l, yield_area, k_stitch);
  return y;
}

double TestedYield(double coverage, double true_yield) {
  // Same as 1 - c(1 - y), but exact at c = 1 for tiny y.
  return (1.0 - coverage) + coverage * true_yield;
}

double Quality(double true_yield, double tested_yield) {
  return tested_yield > 0 ? std::min(1.0, true_yield / tested_yield) : 0.0;
}

double AssemblyYield(std::int64_t pins, int dies, double bonded_area, const AssemblyProcessDef& p) {
  return std::pow(p.bond_yield_per_pin, static_cast<double>(pins)) *
         std::pow(p.alignment_yield_per_die, dies) /
         (1.0 + p.dielectric_defect_density * bonded_area);
}

double EffectiveCostPerMm2(double cost_per_mm2, std::int64_t dies, double die_x, double die_y,
                           double usable_radius) {
  if (dies <= 0) return kInf;
  const double wafer_area = std::numbers::pi * usable_radius * usable_radius;
  return cost_per_mm2 * wafer_area / (static_cast<double>(dies) * die_x * die_y);
}

double LithoMultiplier(double litho_fraction, double utilization) {
  return 1.0 - litho_fraction + litho_fraction / utilization;
}

double LayerCost(const LayerDef& layer, double area, double effective_cost_per_mm2,
                 double utilization) {
  return area * effective_cost_per_mm2 * LithoMultiplier(layer.litho_fraction, utilization);
}

double TestCost(const TestProcessDef& t) {
  return t.machine_rate * t.pattern_count * t.scan_chain_length * t.test_clock_period;
}

double AssemblyCost(int dies, double bonded_area, const AssemblyProcessDef& p) {
  if (dies <= 0) return 0.0;
  const double pnp_steps = std::ceil(static_cast<double>(dies) / p.group_pnp);
  const double bond_steps = std::ceil(static_cast<double>(dies) / p.group_bond);
  return p.rate_pnp * pnp_steps * p.t_pnp + p.rate_bond * bond_steps * p.t_bond +
         p.material_cost * bonded_area;
}

double NreCost(const ChipSpec& chip, const std::vector<const LayerDef*>& layers,
               const WaferProcessDef& wafer) {
  const auto& f = chip.design_fractions;
  auto design = [&](const DesignRates& r) {
    return chip.core_area * (r.logic * f.logic + r.memory * f.memory + r.analog * f.analog);
  };
  double masks = 0.0;
  for (const LayerDef* l : layers) masks += l->mask_cost;
  return (design(wafer.nre_frontend) + design(wafer.nre_backend) + chip.reticle_share * masks) /
         chip.quantity;
}

CostReport Evaluate(const DerivedSystem& ds, const EvaluateOptions& options) {
  const ValidatedSystem& sys = ds.system;
  GeometryCache local;
  GeometryCache& geometry = options.geometry ? *options.geometry : local;

  CostReport report;
  report.system_name = sys.spec().name;
  report.nodes.resize(sys.size());
  report.derived = ds.chips;

  auto fail = [&](NodeCosts& n, const std::string& why) {
    n.feasible = false;
    if (report.feasible) {
      report.feasible = false;
      report.diagnostic = n.path + ": " + why;
    }
  };

  for (int i : sys.post_order()) {
    const ResolvedChip& rc = sys.chip(i);
    const DerivedChip& d = ds.chips[i];
    NodeCosts& n = report.nodes[i];
    n.index = i;
    n.parent = rc.parent;
    n.name = rc.spec->name;
    n.path = rc.path;

    // Silicon.
    const WaferProcessDef& wafer = *rc.wafer;
    n.reticle = FitReticle(d.area, wafer.reticle_area());
    n.dies_per_wafer = geometry.DiesPerWafer(d.side_x, d.side_y, wafer).dies_per_wafer;
    const double eff = EffectiveCostPerMm2(1.0, n.dies_per_wafer, d.side_x, d.side_y,
                                           wafer.usable_radius());
    n.c_die = 0.0;
    for (const LayerDef* l : rc.layers)
      n.c_die += LayerCost(*l, d.area, eff * l->cost_per_mm2, n.reticle.utilization);
    if (n.dies_per_wafer == 0) fail(n, "die does not fit on the wafer (0 dies per wafer)");

    n.y_true = DieYield(rc.layers, d.yield_area, n.reticle.k_stitch);
    if (!(n.y_true > 0)) fail(n, "die yield is 0");

    n.c_test_self = TestCost(*rc.self_test);
    n.y_tested = TestedYield(rc.self_test->fault_coverage, n.y_true);
    n.q_self = Quality(n.y_true, n.y_tested);
    n.c_re_self = n.y_tested > 0 ? (n.c_die + n.c_test_self) / n.y_tested : kInf;

    // Assembly of the children onto this chip.
    n.n_children = static_cast<int>(rc.children.size());
    n.c_nre_self = NreCost(*rc.spec, rc.layers, wafer);
    n.c_nre = n.c_nre_self;
    if (rc.children.empty()) {
      n.quality = n.q_self;
      n.y_chip = n.y_true;
      n.c_re = n.c_re_self;
    } else {
      double child_re = 0.0;
      for (int c : rc.children) {
        const NodeCosts& cn = report.nodes[c];
        n.n_pins += ds.chips[c].total_pads();
        n.bonded_area += ds.chips[c].area;
        n.y_quality *= cn.quality;
        child_re += cn.c_re;
        n.c_nre += cn.c_nre;
      }
      const AssemblyProcessDef& proc = *rc.assembly;
      n.c_assembly = AssemblyCost(n.n_children, n.bonded_area, proc);
      n.y_assembly = AssemblyYield(n.n_pins, n.n_children, n.bonded_area, proc);
      n.y_true_assembly = n.q_self * n.y_assembly * n.y_quality;
      n.c_test_assembly = TestCost(*rc.assembly_test);
      n.y_tested_assembly = TestedYield(rc.assembly_test->fault_coverage, n.y_true_assembly);
      n.quality = Quality(n.y_true_assembly, n.y_tested_assembly);
      n.y_chip = n.y_true * n.y_assembly * n.y_quality;
      if (!(n.y_tested_assembly > 0)) fail(n, "assembly yield is 0");
      n.c_re = n.y_tested_assembly > 0
                   ? (n.c_assembly + n.c_test_assembly + n.c_re_self + child_re) / n.y_tested_assembly
                   : kInf;
    }
    if (!n.feasible) n.c_re = kInf;
    n.c_total = n.c_re + n.c_nre;
    if (n.feasible && !std::isfinite(n.c_total) && report.feasible) {
      bool child_failed = false;
      for (int c : rc.children) child_failed |= !report.nodes[c].feasible;
      if (!child_failed) fail(n, "cost is not finite");
    }
  }

  CostBreakdown& b = report.breakdown;
  for (const NodeCosts& n : report.nodes) {
    b.silicon += n.c_die;
    b.assembly += n.c_assembly;
    b.test += n.c_test_self + n.c_test_assembly;
  }
  const NodeCosts& root = report.nodes.front();
  b.nre = root.c_nre;
  b.scrap = report.feasible ? root.c_re - (b.silicon + b.assembly + b.test) : kInf;
  return report;
}

CostReport Evaluate(const ValidatedSystem& system, const EvaluateOptions& options) {
  return Evaluate(Derive(system), options);
}

}  // namespace chipcost
