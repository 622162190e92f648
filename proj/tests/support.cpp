#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "chipcost/errors.hpp"
#include "chipcost/report.hpp"

namespace support {

using namespace chipcost;

std::filesystem::path FixtureDir() { return CHIPCOST_TEST_FIXTURES; }
std::filesystem::path DataDir() { return CHIPCOST_DATA_DIR; }

std::shared_ptr<const ProcessLibrary> LoadLibrary(const std::filesystem::path& dir) {
  auto lib = std::make_shared<const ProcessLibrary>(ParseLibrary(dir));
  ValidateLibrary(*lib);
  return lib;
}

ValidatedSystem HandSystem() {
  const auto dir = FixtureDir() / "hand";
  auto lib = std::make_shared<const ProcessLibrary>(
      ParseLibraryXml(ReadTextFile(dir / "library.xml"), "library.xml"));
  ValidateLibrary(*lib);
  return ParseSystem(dir / "system.xml", dir / "netlist.xml", lib);
}

SystemSpec GraphProcessor() {
  const auto dir = DataDir() / "systems";
  return ParseSystemXml(ReadTextFile(dir / "graph_processor.xml"), "graph_processor.xml");
}

SweepSpec ChipletCountSweep() {
  const auto path = DataDir() / "sweeps" / "chiplet_count.json";
  return ParseSweepSpec(ReadTextFile(path), path.string());
}

int CountCurve::argmin() const {
  return counts[std::min_element(totals.begin(), totals.end()) - totals.begin()];
}

CountCurve SweepCounts(const ProcessLibrary& library, const std::vector<int>& counts,
                       GeometryCache* cache) {
  SweepSpec spec = ChipletCountSweep();
  spec.parameters.front().values.clear();
  for (int n : counts) spec.parameters.front().values.emplace_back(static_cast<double>(n));
  const auto rows = RunSweep(spec, GraphProcessor(), library, {1, cache});
  CountCurve out;
  out.counts = counts;
  for (const auto& r : rows) {
    out.totals.push_back(r.total_cost);
    out.scrap.push_back(r.breakdown.scrap);
  }
  return out;
}

bool Near(double a, double b, double rel, double abs) {
  return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
}

// Random systems ------------------------------------------------------------

namespace {

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int Pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool Chance(std::mt19937_64& rng, double p) { return Uniform(rng, 0, 1) < p; }

template <typename Map>
std::string AnyName(std::mt19937_64& rng, const Map& m) {
  auto it = m.begin();
  std::advance(it, Pick(rng, 0, static_cast<int>(m.size()) - 1));
  return it->first;
}

ProcessLibrary RandomLibrary(std::mt19937_64& rng) {
  ProcessLibrary lib;
  for (int i = 0, n = Pick(rng, 1, 3); i < n; ++i) {
    LayerDef l;
    l.name = "layer" + std::to_string(i);
    l.cost_per_mm2 = Uniform(rng, 0.01, 0.3);
    l.defect_density = Chance(rng, 0.1) ? 0.0 : Uniform(rng, 0.0005, 0.02);
    l.clustering = Uniform(rng, 0.5, 5);
    l.critical_area_ratio = Uniform(rng, 0.2, 1);
    l.litho_fraction = Uniform(rng, 0, 0.4);
    l.mask_cost = Uniform(rng, 0, 1e7);
    l.stitch_yield = Uniform(rng, 0.9, 1);
    lib.layers[l.name] = l;
  }
  for (int i = 0, n = Pick(rng, 1, 3); i < n; ++i) {
    IODefinition io;
    io.name = "io" + std::to_string(i);
    io.bidirectional = Chance(rng, 0.3);
    io.tx_area = Uniform(rng, 0.01, 0.5);
    io.rx_area = io.bidirectional ? io.tx_area : Uniform(rng, 0.01, 0.5);
    io.bandwidth = Uniform(rng, 16, 2048);
    io.reach = Uniform(rng, 0.5, 10);
    io.wires_per_instance = Pick(rng, 1, 80);
    io.energy_per_bit = Uniform(rng, 0, 2);
    lib.ios[io.name] = io;
  }
  {
    WaferProcessDef w;
    w.name = "wafer";
    w.wafer_diameter = 300;
    w.edge_exclusion = Uniform(rng, 1, 5);
    w.scribe_x = Uniform(rng, 0.05, 0.2);
    w.scribe_y = Uniform(rng, 0.05, 0.2);
    w.grid_dicing = Chance(rng, 0.5);
    w.nre_frontend = {Uniform(rng, 0, 1e5), Uniform(rng, 0, 1e4), Uniform(rng, 0, 2e5)};
    w.nre_backend = {Uniform(rng, 0, 1e5), Uniform(rng, 0, 1e4), Uniform(rng, 0, 2e5)};
    lib.wafer_processes[w.name] = w;
  }
  for (int i = 0, n = Pick(rng, 1, 2); i < n; ++i) {
    AssemblyProcessDef a;
    a.name = "asm" + std::to_string(i);
    a.t_pnp = Uniform(rng, 0, 20);
    a.t_bond = Uniform(rng, 0, 60);
    a.group_pnp = Pick(rng, 1, 4);
    a.group_bond = Pick(rng, 1, 16);
    a.rate_pnp = Uniform(rng, 0, 0.05);
    a.rate_bond = Uniform(rng, 0, 0.05);
    a.material_cost = Uniform(rng, 0, 0.01);
    a.die_separation = Uniform(rng, 0, 0.4);
    a.stack_edge_exclusion = Uniform(rng, 0, 1);
    a.bonding_pitch = Uniform(rng, 0.01, 0.15);
    a.max_current_density = Uniform(rng, 20, 500);
    a.bond_yield_per_pin = 1 - Uniform(rng, 0, 1e-6);
    a.alignment_yield_per_die = Uniform(rng, 0.99, 1);
    a.dielectric_defect_density = Chance(rng, 0.3) ? Uniform(rng, 0, 1e-3) : 0.0;
    lib.assembly_processes[a.name] = a;
  }
  for (int i = 0, n = Pick(rng, 1, 3); i < n; ++i) {
    TestProcessDef t;
    t.name = "test" + std::to_string(i);
    t.machine_rate = Uniform(rng, 0, 0.2);
    t.pattern_count = Uniform(rng, 0, 1e5);
    t.scan_chain_length = Uniform(rng, 0, 1e4);
    t.test_clock_period = Uniform(rng, 1e-9, 1e-7);
    t.fault_coverage = Chance(rng, 0.1) ? 1.0 : Uniform(rng, 0, 1);
    t.num_scan_chains = Pick(rng, 0, 64);
    t.ios_per_scan_chain = Pick(rng, 0, 4);
    t.test_io_offset = Pick(rng, 0, 16);
    lib.test_processes[t.name] = t;
  }
  return lib;
}

}  // namespace

RandomSystem GenerateSystem(std::mt19937_64& rng, int max_depth, int max_fanout) {
  RandomSystem out;
  ProcessLibrary lib = RandomLibrary(rng);
  int counter = 0;
  int budget = 60;   // keeps the worst case (8^3 leaves) out of a single run

  std::function<ChipSpec(int)> make = [&](int depth) {
    ChipSpec c;
    c.name = "c" + std::to_string(counter++);
    c.core_voltage = Uniform(rng, 0.6, 1.2);
    c.quantity = std::pow(10.0, Uniform(rng, 3, 9));
    c.design_fractions = {0, 0, 0};
    const double f1 = Uniform(rng, 0, 1), f2 = Uniform(rng, 0, 1 - f1);
    c.design_fractions = {f1, f2, 1 - f1 - f2};
    c.reticle_share = Uniform(rng, 0.1, 1);
    for (int i = 0, n = Pick(rng, 1, static_cast<int>(lib.layers.size())); i < n; ++i)
      c.layer_stack.push_back(AnyName(rng, lib.layers));
    c.wafer_process = "wafer";
    c.assembly_process = AnyName(rng, lib.assembly_processes);
    c.test_process_self = AnyName(rng, lib.test_processes);
    c.test_process_assembly = AnyName(rng, lib.test_processes);

    int fanout = 0;
    if (depth < max_depth && budget > 0) {
      fanout = depth == 0 ? Pick(rng, 1, max_fanout) : Pick(rng, 0, max_fanout);
      fanout = std::min(fanout, budget);
      budget -= fanout;
    }
    for (int i = 0; i < fanout; ++i) c.children.push_back(make(depth + 1));

    if (c.children.empty()) {
      if (Chance(rng, 0.1)) {
        c.black_box_area = Uniform(rng, 10, 150);
        if (Chance(rng, 0.5)) c.black_box_power = Uniform(rng, 0, 50);
      } else {
        c.core_area = Uniform(rng, 10, 150);
        c.core_power = Uniform(rng, 0, 60);
      }
      c.buried = depth > 0 && Chance(rng, 0.05);
    } else {
      c.core_area = Chance(rng, 0.5) ? 0.0 : Uniform(rng, 10, 200);
      c.core_power = c.core_area > 0 ? Uniform(rng, 0, 40) : 0.0;
    }
    return c;
  };
  out.spec.name = "random";
  out.spec.root = make(0);

  std::vector<std::string> names;
  std::function<void(const ChipSpec&)> collect = [&](const ChipSpec& c) {
    names.push_back(c.name);
    for (const auto& ch : c.children) collect(ch);
  };
  collect(out.spec.root);
  const int nets = Pick(rng, 0, 2 * static_cast<int>(names.size()));
  for (int i = 0; i < nets; ++i) {
    NetSpec n;
    n.from = names[Pick(rng, 0, static_cast<int>(names.size()) - 1)];
    n.to = Chance(rng, 0.15) ? "offchip" : names[Pick(rng, 0, static_cast<int>(names.size()) - 1)];
    if (n.from == n.to) continue;
    if (Chance(rng, 0.5)) std::swap(n.from, n.to);
    n.io_type = AnyName(rng, lib.ios);
    if (Chance(rng, 0.2)) n.count = Pick(rng, 1, 8);
    else n.bandwidth = Chance(rng, 0.05) ? 0.0 : Uniform(rng, 1, 4096);
    n.average_utilization = Uniform(rng, 0, 1);
    out.spec.nets.push_back(n);
  }
  out.library = std::make_shared<const ProcessLibrary>(std::move(lib));
  return out;
}

namespace {

struct Checker {
  HarnessResult& result;
  int system = 0;

  void fail(const std::string& what) {
    ++result.failure_count;
    if (result.failures.size() < 10)
      result.failures.push_back("system " + std::to_string(system) + ": " + what);
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
};

bool AnyBlackBoxPower(const ChipSpec& c) {
  if (c.black_box_power) return true;
  for (const auto& ch : c.children)
    if (AnyBlackBoxPower(ch)) return true;
  return false;
}

void CheckSystem(Checker& ck, const RandomSystem& rs, GeometryCache& cache, bool compare_sweep) {
  const ValidatedSystem vs = ValidatedSystem::Validate(rs.spec, rs.library);
  DerivedSystem ds = [&] {
    try {
      return Derive(vs);
    } catch (const ConfigError&) {
      // Only a black-box parent smaller than a child can trigger this here.
      return DerivedSystem{vs, {}, {}};
    }
  }();
  if (ds.chips.empty()) return;
  const double tol = 1e-9;

  // Area law and pad feasibility.
  for (const auto& rc : vs.chips()) {
    const DerivedChip& d = ds.chips[rc.index];
    const std::string at = rc.path;
    if (rc.spec->black_box_area) {
      ck.expect(d.area == *rc.spec->black_box_area, at + ": black box area not kept");
      continue;
    }
    const double terms[] = {d.core_area + d.io_area, d.stack_area, d.pad_area};
    bool equal_one = false;
    for (double t : terms) {
      ck.expect(d.area >= t * (1 - tol), at + ": area below a lower bound");
      equal_one |= Near(d.area, t, 1e-12);
    }
    ck.expect(equal_one, at + ": area equals none of its terms");
    const AssemblyProcessDef& attach = *rc.attach;
    const double p = attach.bonding_pitch;
    std::int64_t cumulative = 0;
    for (const auto& g : d.pad_groups) {
      cumulative += g.pads;
      const double w = (g.reach - attach.die_separation) / 2;
      const double inner = std::max(0.0, d.side_x - 2 * w);
      const double cap = std::floor((d.side_x * d.side_x - inner * inner) / (p * p) + 1e-9);
      ck.expect(static_cast<double>(cumulative) <= cap, at + ": pads outside their reach band");
    }
    ck.expect(static_cast<double>(d.total_pads()) <= std::floor(d.area / (p * p) + 1e-9),
              at + ": pads exceed die area");
  }

  // Power conservation.
  if (!AnyBlackBoxPower(rs.spec.root)) {
    double sum = 0.0;
    for (const auto& d : ds.chips) sum += d.core_power + d.io_power;
    ck.expect(Near(ds.chips.front().power, sum, 1e-12, 1e-12), "root power != sum of node powers");
  }

  // Connection matrices have empty diagonals.
  for (const auto& m : ds.matrices)
    for (std::size_t i = 0; i < m.size(); ++i) ck.expect(m.at(i, i) == 0, "matrix diagonal not 0");

  const CostReport report = Evaluate(ds, {&cache});
  if (report.feasible) ++ck.result.feasible;
  for (const auto& n : report.nodes) {
    ck.expect(n.y_true >= 0 && n.y_true <= 1, n.path + ": y_true out of [0, 1]");
    ck.expect(n.y_chip >= 0 && n.y_chip <= 1 + tol, n.path + ": y_chip out of [0, 1]");
    if (n.feasible) ck.expect(n.quality > 0 && n.quality <= 1 + tol, n.path + ": quality out of (0, 1]");
    if (!n.feasible) continue;
    // Q = 1 iff coverage = 1, checked where the stage has defects to catch.
    const double cov = vs.chip(n.index).self_test->fault_coverage;
    if (cov == 1.0) ck.expect(n.q_self == 1.0, n.path + ": full coverage but q_self < 1");
    if (cov < 1 - 1e-9 && n.y_true < 1 - 1e-9)
      ck.expect(n.q_self < 1.0, n.path + ": partial coverage but q_self = 1");
    if (n.n_children > 0) {
      const double acov = vs.chip(n.index).assembly_test->fault_coverage;
      if (acov == 1.0) ck.expect(n.quality == 1.0, n.path + ": full assembly coverage but quality < 1");
      if (acov < 1 - 1e-9 && n.y_true_assembly < 1 - 1e-9)
        ck.expect(n.quality < 1.0, n.path + ": partial assembly coverage but quality = 1");
    }
  }

  if (report.feasible) {
    const CostBreakdown& b = report.breakdown;
    ck.expect(Near(b.total(), report.total_cost(), 1e-9), "breakdown does not sum to total");
    const double c = report.total_cost();
    for (double part : {b.silicon, b.assembly, b.test, b.nre})
      ck.expect(part >= 0, "negative breakdown category");
    ck.expect(b.scrap >= -1e-9 * c, "negative scrap");
    // Scrap identity at every assembly node.
    for (const auto& n : report.nodes) {
      if (n.n_children == 0) continue;
      double child = 0.0;
      for (const auto& m : report.nodes)
        if (m.parent == n.index) child += m.c_re;
      const double lhs = n.c_re * n.y_tested_assembly;
      const double rhs = n.c_assembly + n.c_test_assembly + n.c_re_self + child;
      ck.expect(Near(lhs, rhs, 1e-12), n.path + ": scrap identity");
    }
  }

  // Determinism.
  ck.expect(ReportToJson(Evaluate(ds, {&cache})) == ReportToJson(report), "evaluation not deterministic");

  // NRE independent of defect densities; RE non-increasing as defects vanish.
  ProcessLibrary clean = *rs.library;
  for (auto& [name, l] : clean.layers) l.defect_density = 0.0;
  const ValidatedSystem vs_clean =
      ValidatedSystem::Validate(rs.spec, std::make_shared<const ProcessLibrary>(clean));
  const CostReport clean_report = Evaluate(vs_clean, {&cache});
  for (std::size_t i = 0; i < report.nodes.size(); ++i) {
    ck.expect(clean_report.nodes[i].c_nre == report.nodes[i].c_nre, "NRE depends on defect density");
    if (report.nodes[i].feasible && clean_report.nodes[i].feasible)
      ck.expect(clean_report.nodes[i].c_re <= report.nodes[i].c_re * (1 + 1e-12),
                "RE rose when defects were removed");
  }

  if (compare_sweep) {
    SweepSpec spec;
    spec.parameters.push_back({"library.layer[*].defect_density", {0.0, 0.001, 0.005, 0.02}});
    spec.parameters.push_back({"system.chip[*].quantity", {1e3, 1e6}});
    const auto serial = RunSweep(spec, rs.spec, *rs.library, {1, &cache});
    const auto parallel = RunSweep(spec, rs.spec, *rs.library, {4, &cache});
    ck.expect(SweepToCsv(spec, serial) == SweepToCsv(spec, parallel), "parallel sweep != serial");
    ++ck.result.sweeps_compared;
  }
}

}  // namespace

HarnessResult RunPropertyHarness(std::uint64_t seed, int count, GeometryCache& cache) {
  HarnessResult result;
  std::mt19937_64 rng(seed);
  Checker ck{result};
  for (int i = 0; i < count; ++i) {
    ck.system = i;
    const RandomSystem rs = GenerateSystem(rng);
    try {
      CheckSystem(ck, rs, cache, i % 10 == 0);
    } catch (const std::exception& e) {
      ck.fail(std::string("exception: ") + e.what());
    }
    ++result.systems;
  }
  return result;
}

}  // namespace support
