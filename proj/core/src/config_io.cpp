#include "chipcost/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "chipcost/errors.hpp"

namespace chipcost {

namespace pt = boost::property_tree;

namespace {

constexpr const char* kAttr = "<xmlattr>";

std::string_view Trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

pt::ptree ReadXml(std::string_view xml, const std::string& source) {
  pt::ptree tree;
  std::istringstream in{std::string(xml)};
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace | pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(source, static_cast<long>(e.line()), e.message());
  }
  return tree;
}

// Attribute accessor with strict schema checking: every attribute present on
// the element must be consumed, so misspelled names surface as errors.
class Attrs {
 public:
  Attrs(const pt::ptree& node, std::string path) : path_(std::move(path)) {
    if (auto attrs = node.get_child_optional(kAttr)) {
      for (const auto& [key, value] : *attrs) values_[key] = value.data();
    }
  }

  const std::string& path() const { return path_; }
  void set_path(std::string path) { path_ = std::move(path); }

  bool Has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> Raw(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return std::string(Trim(it->second));
  }

  std::string String(const std::string& key) {
    auto v = Raw(key);
    if (!v || v->empty()) throw ValidationError(path_, key, "required attribute missing");
    return *v;
  }

  std::string String(const std::string& key, const std::string& fallback) {
    auto v = Raw(key);
    return v ? *v : fallback;
  }

  std::optional<double> OptDouble(const std::string& key) {
    auto v = Raw(key);
    if (!v) return std::nullopt;
    return ToDouble(key, *v);
  }

  double Double(const std::string& key) {
    auto v = OptDouble(key);
    if (!v) throw ValidationError(path_, key, "required attribute missing");
    return *v;
  }

  double Double(const std::string& key, double fallback) {
    return OptDouble(key).value_or(fallback);
  }

  std::optional<std::int64_t> OptInt(const std::string& key) {
    auto v = Raw(key);
    if (!v) return std::nullopt;
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size())
      throw ValidationError(path_, key, "'" + *v + "' is not an integer");
    return out;
  }

  int Int(const std::string& key) {
    auto v = OptInt(key);
    if (!v) throw ValidationError(path_, key, "required attribute missing");
    return static_cast<int>(*v);
  }

  int Int(const std::string& key, int fallback) {
    auto v = OptInt(key);
    return v ? static_cast<int>(*v) : fallback;
  }

  bool Bool(const std::string& key, bool fallback) {
    auto v = Raw(key);
    if (!v) return fallback;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ValidationError(path_, key, "'" + *v + "' is not a boolean");
  }

  /// Defect densities may be given per cm^2; normalize to per mm^2.
  double DefectDensity(const std::string& key, std::optional<double> fallback) {
    auto v = OptDouble(key);
    if (!v) {
      if (!fallback) throw ValidationError(path_, key, "required attribute missing");
      v = fallback;
    }
    const std::string unit = String(key + "_unit", "mm2");
    if (unit == "mm2" || unit == "per_mm2") return *v;
    if (unit == "cm2" || unit == "per_cm2") return *v / 100.0;
    throw ValidationError(path_, key + "_unit", "unit must be 'mm2' or 'cm2', got '" + unit + "'");
  }

  void Finish() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) throw ValidationError(path_, key, "unknown attribute");
    }
  }

 private:
  double ToDouble(const std::string& key, const std::string& s) const {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ValidationError(path_, key, "'" + s + "' is not a number");
    return out;
  }

  std::string path_;
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

void CheckVersion(const pt::ptree& root, const std::string& path) {
  Attrs a(root, path);
  if (auto v = a.Raw("version"); v && *v != std::to_string(kSchemaVersion))
    throw ValidationError(path, "version", "unsupported schema version '" + *v + "'");
}

const pt::ptree& RootElement(const pt::ptree& tree, const char* name, const std::string& source) {
  auto root = tree.get_child_optional(name);
  if (!root) throw ParseError(source, 0, std::string("expected <") + name + "> root element");
  return *root;
}

template <typename Def>
void Insert(std::map<std::string, Def>& table, Def def, const char* kind, const std::string& source) {
  std::string name = def.name;
  if (!table.emplace(name, std::move(def)).second)
    throw ConflictError(source + ": duplicate " + kind + " '" + name + "'");
}

LayerDef ParseLayer(Attrs& a) {
  LayerDef l;
  l.name = a.String("name");
  l.cost_per_mm2 = a.Double("cost_per_mm2");
  l.defect_density = a.DefectDensity("defect_density", std::nullopt);
  l.clustering = a.Double("clustering");
  l.critical_area_ratio = a.Double("critical_area_ratio");
  l.litho_fraction = a.Double("litho_fraction", 0.0);
  l.mask_cost = a.Double("mask_cost", 0.0);
  l.stitch_yield = a.Double("stitch_yield", 1.0);
  return l;
}

IODefinition ParseIO(Attrs& a) {
  IODefinition io;
  io.name = a.String("name");
  io.bidirectional = a.Bool("bidirectional", false);
  io.tx_area = a.Double("tx_area");
  io.rx_area = a.Double("rx_area", io.tx_area);
  io.bandwidth = a.Double("bandwidth");
  io.reach = a.Double("reach");
  io.wires_per_instance = a.Int("wires", 1);
  io.energy_per_bit = a.Double("energy_per_bit", 0.0);
  return io;
}

WaferProcessDef ParseWafer(Attrs& a) {
  WaferProcessDef w;
  w.name = a.String("name");
  w.wafer_diameter = a.Double("diameter");
  w.edge_exclusion = a.Double("edge_exclusion");
  w.scribe_x = a.Double("scribe_x");
  w.scribe_y = a.Double("scribe_y");
  w.reticle_x = a.Double("reticle_x");
  w.reticle_y = a.Double("reticle_y");
  w.grid_dicing = a.Bool("grid_dicing", true);
  w.nre_frontend = {a.Double("nre_fe_logic", 0.0), a.Double("nre_fe_memory", 0.0),
                    a.Double("nre_fe_analog", 0.0)};
  w.nre_backend = {a.Double("nre_be_logic", 0.0), a.Double("nre_be_memory", 0.0),
                   a.Double("nre_be_analog", 0.0)};
  return w;
}

AssemblyProcessDef ParseAssembly(Attrs& a) {
  AssemblyProcessDef p;
  p.name = a.String("name");
  p.t_pnp = a.Double("t_pnp");
  p.t_bond = a.Double("t_bond");
  p.group_pnp = a.Int("group_pnp");
  p.group_bond = a.Int("group_bond");
  p.rate_pnp = a.Double("rate_pnp");
  p.rate_bond = a.Double("rate_bond");
  p.material_cost = a.Double("material_cost", 0.0);
  p.die_separation = a.Double("die_separation");
  p.stack_edge_exclusion = a.Double("edge_exclusion", 0.0);
  p.bonding_pitch = a.Double("bonding_pitch");
  p.max_current_density = a.Double("max_current_density");
  p.bond_yield_per_pin = a.Double("bond_yield");
  p.alignment_yield_per_die = a.Double("alignment_yield");
  p.dielectric_defect_density = a.DefectDensity("dielectric_defect_density", 0.0);
  return p;
}

TestProcessDef ParseTest(Attrs& a) {
  TestProcessDef t;
  t.name = a.String("name");
  t.machine_rate = a.Double("machine_rate");
  t.pattern_count = a.Double("pattern_count");
  t.scan_chain_length = a.Double("scan_chain_length");
  t.test_clock_period = a.Double("clock_period");
  t.fault_coverage = a.Double("fault_coverage");
  t.num_scan_chains = a.Int("scan_chains", 0);
  t.ios_per_scan_chain = a.Int("ios_per_scan_chain", 0);
  t.test_io_offset = a.Int("test_io_offset", 0);
  return t;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::string_view rest = s;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto item = Trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

ChipSpec ParseChip(const pt::ptree& node, const std::string& parent_path) {
  ChipSpec c;
  c.name = Attrs(node, parent_path + "/chip").String("name");
  Attrs at(node, parent_path + "/chip[" + c.name + "]");
  at.Raw("name");
  c.core_area = at.Double("core_area", 0.0);
  c.core_power = at.Double("core_power", 0.0);
  c.core_voltage = at.Double("core_voltage");
  c.black_box_area = at.OptDouble("black_box_area");
  c.black_box_power = at.OptDouble("black_box_power");
  c.quantity = at.Double("quantity");
  c.buried = at.Bool("buried", false);
  const bool any_fraction =
      at.Has("logic_fraction") || at.Has("memory_fraction") || at.Has("analog_fraction");
  c.design_fractions.logic = at.Double("logic_fraction", any_fraction ? 0.0 : 1.0);
  c.design_fractions.memory = at.Double("memory_fraction", 0.0);
  c.design_fractions.analog = at.Double("analog_fraction", 0.0);
  c.reticle_share = at.Double("reticle_share", 1.0);
  c.layer_stack = SplitList(at.String("layers"));
  c.wafer_process = at.String("wafer_process");
  c.assembly_process = at.String("assembly_process");
  c.test_process_self = at.String("self_test");
  c.test_process_assembly = at.String("assembly_test");
  at.Finish();

  const std::string path = parent_path + "/chip[" + c.name + "]";
  for (const auto& [tag, child] : node) {
    if (tag == kAttr) continue;
    if (tag != "chip") throw ValidationError(path, tag, "unexpected element <" + tag + ">");
    c.children.push_back(ParseChip(child, path));
  }
  return c;
}

// Shortest representation that round-trips.
std::string Fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string Fmt(bool v) { return v ? "true" : "false"; }

class AttrWriter {
 public:
  explicit AttrWriter(pt::ptree& node) : node_(node) {}
  AttrWriter& Set(const char* key, const std::string& v) {
    node_.put(std::string(kAttr) + "." + key, v);
    return *this;
  }
  AttrWriter& Set(const char* key, double v) { return Set(key, Fmt(v)); }
  AttrWriter& Set(const char* key, int v) { return Set(key, std::to_string(v)); }
  AttrWriter& Set(const char* key, bool v) { return Set(key, Fmt(v)); }

 private:
  pt::ptree& node_;
};

std::string WriteXml(const pt::ptree& tree) {
  std::ostringstream out;
  pt::write_xml(out, tree, pt::xml_writer_make_settings<std::string>(' ', 2));
  return out.str();
}

pt::ptree ChipTree(const ChipSpec& c) {
  pt::ptree node;
  AttrWriter w(node);
  w.Set("name", c.name)
      .Set("core_area", c.core_area)
      .Set("core_power", c.core_power)
      .Set("core_voltage", c.core_voltage)
      .Set("quantity", c.quantity)
      .Set("buried", c.buried)
      .Set("logic_fraction", c.design_fractions.logic)
      .Set("memory_fraction", c.design_fractions.memory)
      .Set("analog_fraction", c.design_fractions.analog)
      .Set("reticle_share", c.reticle_share);
  if (c.black_box_area) w.Set("black_box_area", *c.black_box_area);
  if (c.black_box_power) w.Set("black_box_power", *c.black_box_power);
  std::string layers;
  for (const auto& l : c.layer_stack) layers += (layers.empty() ? "" : ",") + l;
  w.Set("layers", layers)
      .Set("wafer_process", c.wafer_process)
      .Set("assembly_process", c.assembly_process)
      .Set("self_test", c.test_process_self)
      .Set("assembly_test", c.test_process_assembly);
  for (const auto& child : c.children) node.add_child("chip", ChipTree(child));
  return node;
}

}  // namespace

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProcessLibrary ParseLibraryXml(std::string_view xml, const std::string& source) {
  const pt::ptree tree = ReadXml(xml, source);
  const pt::ptree& root = RootElement(tree, "library", source);
  CheckVersion(root, source + ":library");

  ProcessLibrary lib;
  for (const auto& [tag, node] : root) {
    if (tag == kAttr) continue;
    const std::string where = source + ":library/" + tag;
    Attrs a(node, where);
    if (auto name = a.Raw("name")) a.set_path(where + "[" + *name + "]");
    // Path with the entry name once it is known.
    auto named = [&](const std::string& name) { return where + "[" + name + "]"; };
    if (tag == "layer") {
      auto def = ParseLayer(a);
      a.Finish();
      const std::string at = named(def.name);
      Insert(lib.layers, std::move(def), "layer", at);
    } else if (tag == "io") {
      auto def = ParseIO(a);
      a.Finish();
      const std::string at = named(def.name);
      Insert(lib.ios, std::move(def), "io", at);
    } else if (tag == "waferprocess") {
      auto def = ParseWafer(a);
      a.Finish();
      const std::string at = named(def.name);
      Insert(lib.wafer_processes, std::move(def), "waferprocess", at);
    } else if (tag == "assembly") {
      auto def = ParseAssembly(a);
      a.Finish();
      const std::string at = named(def.name);
      Insert(lib.assembly_processes, std::move(def), "assembly", at);
    } else if (tag == "test") {
      auto def = ParseTest(a);
      a.Finish();
      const std::string at = named(def.name);
      Insert(lib.test_processes, std::move(def), "test", at);
    } else {
      throw ValidationError(source + ":library", tag, "unexpected element <" + tag + ">");
    }
  }
  ValidateLibrary(lib);
  return lib;
}

void MergeLibrary(ProcessLibrary& into, ProcessLibrary from, const std::string& source) {
  auto merge = [&](auto& dst, auto& src, const char* kind) {
    for (auto& [name, def] : src) {
      if (dst.count(name))
        throw ConflictError(source + ": duplicate " + kind + " '" + name +
                            "' (already defined in another library file)");
    }
    for (auto& [name, def] : src) dst.emplace(name, std::move(def));
  };
  merge(into.layers, from.layers, "layer");
  merge(into.ios, from.ios, "io");
  merge(into.wafer_processes, from.wafer_processes, "waferprocess");
  merge(into.assembly_processes, from.assembly_processes, "assembly");
  merge(into.test_processes, from.test_processes, "test");
}

ProcessLibrary ParseLibrary(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory, ec))
    throw ParseError(directory.string(), 0, "library path is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ProcessLibrary lib;
  for (const auto& f : files) {
    MergeLibrary(lib, ParseLibraryXml(ReadTextFile(f), f.string()), f.string());
  }
  return lib;
}

SystemSpec ParseSystemXml(std::string_view chips_xml, const std::string& chips_source,
                          std::optional<std::string_view> netlist_xml,
                          const std::string& netlist_source) {
  SystemSpec sys;
  {
    const pt::ptree tree = ReadXml(chips_xml, chips_source);
    const pt::ptree& root = RootElement(tree, "system", chips_source);
    Attrs a(root, "system");
    sys.name = a.String("name", "system");
    if (auto v = a.Raw("version"); v && *v != std::to_string(kSchemaVersion))
      throw ValidationError("system", "version", "unsupported schema version '" + *v + "'");
    a.Finish();
    int chips = 0;
    for (const auto& [tag, node] : root) {
      if (tag == kAttr) continue;
      if (tag != "chip") throw ValidationError("system", tag, "unexpected element <" + tag + ">");
      if (++chips > 1) throw ValidationError("system", "chip", "exactly one root <chip> is allowed");
      sys.root = ParseChip(node, "system");
    }
    if (chips == 0) throw ValidationError("system", "chip", "no <chip> element found");
  }

  if (netlist_xml) {
    const pt::ptree tree = ReadXml(*netlist_xml, netlist_source);
    const pt::ptree& root = RootElement(tree, "netlist", netlist_source);
    CheckVersion(root, "netlist");
    for (const auto& [tag, node] : root) {
      if (tag == kAttr) continue;
      const std::string path = "netlist/net[" + std::to_string(sys.nets.size()) + "]";
      if (tag != "net") throw ValidationError("netlist", tag, "unexpected element <" + tag + ">");
      Attrs a(node, path);
      NetSpec n;
      n.from = a.String("from");
      n.to = a.String("to");
      a.set_path(path + "(" + n.from + "->" + n.to + ")");
      n.io_type = a.String("io");
      n.bandwidth = a.OptDouble("bandwidth");
      n.count = a.OptInt("count");
      n.average_utilization = a.Double("utilization", 1.0);
      a.Finish();
      sys.nets.push_back(std::move(n));
    }
  }
  return sys;
}

ValidatedSystem ParseSystem(const std::filesystem::path& chips_path,
                            const std::optional<std::filesystem::path>& netlist_path,
                            std::shared_ptr<const ProcessLibrary> library) {
  const std::string chips = ReadTextFile(chips_path);
  std::optional<std::string> netlist;
  if (netlist_path) netlist = ReadTextFile(*netlist_path);
  SystemSpec spec = ParseSystemXml(
      chips, chips_path.string(),
      netlist ? std::optional<std::string_view>(*netlist) : std::nullopt,
      netlist_path ? netlist_path->string() : std::string("netlist"));
  return ValidatedSystem::Validate(std::move(spec), std::move(library));
}

std::string SerializeLibrary(const ProcessLibrary& lib) {
  pt::ptree root;
  AttrWriter(root).Set("version", kSchemaVersion);
  for (const auto& [name, l] : lib.layers) {
    pt::ptree n;
    AttrWriter(n)
        .Set("name", l.name)
        .Set("cost_per_mm2", l.cost_per_mm2)
        .Set("defect_density", l.defect_density)
        .Set("clustering", l.clustering)
        .Set("critical_area_ratio", l.critical_area_ratio)
        .Set("litho_fraction", l.litho_fraction)
        .Set("mask_cost", l.mask_cost)
        .Set("stitch_yield", l.stitch_yield);
    root.add_child("layer", n);
  }
  for (const auto& [name, io] : lib.ios) {
    pt::ptree n;
    AttrWriter(n)
        .Set("name", io.name)
        .Set("tx_area", io.tx_area)
        .Set("rx_area", io.rx_area)
        .Set("bandwidth", io.bandwidth)
        .Set("reach", io.reach)
        .Set("wires", io.wires_per_instance)
        .Set("energy_per_bit", io.energy_per_bit)
        .Set("bidirectional", io.bidirectional);
    root.add_child("io", n);
  }
  for (const auto& [name, w] : lib.wafer_processes) {
    pt::ptree n;
    AttrWriter(n)
        .Set("name", w.name)
        .Set("diameter", w.wafer_diameter)
        .Set("edge_exclusion", w.edge_exclusion)
        .Set("scribe_x", w.scribe_x)
        .Set("scribe_y", w.scribe_y)
        .Set("reticle_x", w.reticle_x)
        .Set("reticle_y", w.reticle_y)
        .Set("grid_dicing", w.grid_dicing)
        .Set("nre_fe_logic", w.nre_frontend.logic)
        .Set("nre_fe_memory", w.nre_frontend.memory)
        .Set("nre_fe_analog", w.nre_frontend.analog)
        .Set("nre_be_logic", w.nre_backend.logic)
        .Set("nre_be_memory", w.nre_backend.memory)
        .Set("nre_be_analog", w.nre_backend.analog);
    root.add_child("waferprocess", n);
  }
  for (const auto& [name, a] : lib.assembly_processes) {
    pt::ptree n;
    AttrWriter(n)
        .Set("name", a.name)
        .Set("t_pnp", a.t_pnp)
        .Set("t_bond", a.t_bond)
        .Set("group_pnp", a.group_pnp)
        .Set("group_bond", a.group_bond)
        .Set("rate_pnp", a.rate_pnp)
        .Set("rate_bond", a.rate_bond)
        .Set("material_cost", a.material_cost)
        .Set("die_separation", a.die_separation)
        .Set("edge_exclusion", a.stack_edge_exclusion)
        .Set("bonding_pitch", a.bonding_pitch)
        .Set("max_current_density", a.max_current_density)
        .Set("bond_yield", a.bond_yield_per_pin)
        .Set("alignment_yield", a.alignment_yield_per_die)
        .Set("dielectric_defect_density", a.dielectric_defect_density);
    root.add_child("assembly", n);
  }
  for (const auto& [name, t] : lib.test_processes) {
    pt::ptree n;
    AttrWriter(n)
        .Set("name", t.name)
        .Set("machine_rate", t.machine_rate)
        .Set("pattern_count", t.pattern_count)
        .Set("scan_chain_length", t.scan_chain_length)
        .Set("clock_period", t.test_clock_period)
        .Set("fault_coverage", t.fault_coverage)
        .Set("scan_chains", t.num_scan_chains)
        .Set("ios_per_scan_chain", t.ios_per_scan_chain)
        .Set("test_io_offset", t.test_io_offset);
    root.add_child("test", n);
  }
  pt::ptree doc;
  doc.add_child("library", root);
  return WriteXml(doc);
}

std::string SerializeChips(const SystemSpec& system) {
  pt::ptree root;
  AttrWriter(root).Set("name", system.name).Set("version", kSchemaVersion);
  root.add_child("chip", ChipTree(system.root));
  pt::ptree doc;
  doc.add_child("system", root);
  return WriteXml(doc);
}

std::string SerializeNetlist(const SystemSpec& system) {
  pt::ptree root;
  AttrWriter(root).Set("version", kSchemaVersion);
  for (const auto& n : system.nets) {
    pt::ptree node;
    AttrWriter w(node);
    w.Set("from", n.from).Set("to", n.to).Set("io", n.io_type);
    if (n.bandwidth) w.Set("bandwidth", *n.bandwidth);
    if (n.count) w.Set("count", std::to_string(*n.count));
    w.Set("utilization", n.average_utilization);
    root.add_child("net", node);
  }
  pt::ptree doc;
  doc.add_child("netlist", root);
  return WriteXml(doc);
}

}  // namespace chipcost
