#include "chipcost/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace chipcost {

namespace {

using nlohmann::json;

json Num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json NodeJson(const NodeCosts& n, const DerivedChip& d, int parent) {
  json pad_groups = json::array();
  for (const auto& g : d.pad_groups) {
    pad_groups.push_back({{"io", g.io_type},
                          {"reach", Num(g.reach)},
                          {"band_width", Num(g.band_width)},
                          {"pads", g.pads}});
  }
  return {
      {"name", n.name},
      {"path", n.path},
      {"parent", parent},
      {"feasible", n.feasible},
      {"geometry",
       {{"area", Num(d.area)},
        {"core_area", Num(d.core_area)},
        {"io_area", Num(d.io_area)},
        {"stack_area", Num(d.stack_area)},
        {"pad_area", Num(d.pad_area)},
        {"yield_area", Num(d.yield_area)},
        {"side_x", Num(d.side_x)},
        {"side_y", Num(d.side_y)},
        {"grew_for_pads", d.grew_for_pads},
        {"signal_pads", d.signal_pads},
        {"power_pads", d.power_pads},
        {"test_ios", d.test_ios},
        {"pad_groups", pad_groups},
        {"dies_per_wafer", n.dies_per_wafer},
        {"reticle",
         {{"k_reticle", n.reticle.k_reticle},
          {"utilization", Num(n.reticle.utilization)},
          {"n_reticles", n.reticle.n_reticles},
          {"k_stitch", n.reticle.k_stitch}}}}},
      {"power", {{"core", Num(d.core_power)}, {"io", Num(d.io_power)}, {"total", Num(d.power)}}},
      {"yield",
       {{"y_true", Num(n.y_true)},
        {"y_tested", Num(n.y_tested)},
        {"q_self", Num(n.q_self)},
        {"y_assembly", Num(n.y_assembly)},
        {"y_quality", Num(n.y_quality)},
        {"y_true_assembly", Num(n.y_true_assembly)},
        {"y_tested_assembly", Num(n.y_tested_assembly)},
        {"quality", Num(n.quality)},
        {"y_chip", Num(n.y_chip)}}},
      {"cost",
       {{"c_die", Num(n.c_die)},
        {"c_test_self", Num(n.c_test_self)},
        {"c_re_self", Num(n.c_re_self)},
        {"c_assembly", Num(n.c_assembly)},
        {"c_test_assembly", Num(n.c_test_assembly)},
        {"c_re", Num(n.c_re)},
        {"c_nre_self", Num(n.c_nre_self)},
        {"c_nre", Num(n.c_nre)},
        {"c_total", Num(n.c_total)}}},
      {"assembly",
       {{"children", n.n_children}, {"pins", n.n_pins}, {"bonded_area", Num(n.bonded_area)}}},
  };
}

}  // namespace

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string ReportToJson(const CostReport& r) {
  json nodes = json::array();
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    nodes.push_back(NodeJson(r.nodes[i], r.derived[i], r.nodes[i].parent));
  }
  const NodeCosts& root = r.root();
  json doc = {
      {"report_version", 1},
      {"system", r.system_name},
      {"feasible", r.feasible},
      {"total_cost", Num(root.c_total)},
      {"re_cost", Num(root.c_re)},
      {"nre_cost", Num(root.c_nre)},
      {"y_chip", Num(root.y_chip)},
      {"quality", Num(root.quality)},
      {"breakdown",
       {{"silicon", Num(r.breakdown.silicon)},
        {"assembly", Num(r.breakdown.assembly)},
        {"test", Num(r.breakdown.test)},
        {"scrap", Num(r.breakdown.scrap)},
        {"nre", Num(r.breakdown.nre)}}},
      {"nodes", nodes},
  };
  if (!r.feasible) doc["diagnostic"] = r.diagnostic;
  return doc.dump(2) + "\n";
}

std::string ReportToCsv(const CostReport& r) {
  std::ostringstream out;
  out << "# chipcost report csv schema v1\n";
  out << "name,path,feasible,area,power,dies_per_wafer,y_true,y_tested,quality,y_chip,"
         "c_die,c_test_self,c_re_self,c_assembly,c_test_assembly,c_re,c_nre,c_total\n";
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const NodeCosts& n = r.nodes[i];
    const DerivedChip& d = r.derived[i];
    out << n.name << ',' << n.path << ',' << (n.feasible ? "true" : "false") << ','
        << FormatNumber(d.area) << ',' << FormatNumber(d.power) << ',' << n.dies_per_wafer << ','
        << FormatNumber(n.y_true) << ',' << FormatNumber(n.y_tested) << ','
        << FormatNumber(n.quality) << ',' << FormatNumber(n.y_chip) << ','
        << FormatNumber(n.c_die) << ',' << FormatNumber(n.c_test_self) << ','
        << FormatNumber(n.c_re_self) << ',' << FormatNumber(n.c_assembly) << ','
        << FormatNumber(n.c_test_assembly) << ',' << FormatNumber(n.c_re) << ','
        << FormatNumber(n.c_nre) << ',' << FormatNumber(n.c_total) << '\n';
  }
  return out.str();
}

}  // namespace chipcost
