#include "chipcost/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "chipcost/errors.hpp"
#include "chipcost/report.hpp"
#include "json.hpp"

namespace chipcost {

namespace {

using nlohmann::json;

const char* kSweepPath = "sweep";

// Target parsing ------------------------------------------------------------

struct Target {
  std::string scope;   // library, system, split
  std::string kind;    // layer, io, chip, net, ...
  std::string key;     // NAME inside the brackets
  std::string field;
};

Target ParseTarget(const std::string& text) {
  auto bad = [&](const std::string& why) {
    return ValidationError(kSweepPath, text, "cannot resolve target: " + why);
  };
  Target t;
  const auto dot = text.find('.');
  if (dot == std::string::npos) throw bad("expected <scope>.<...>");
  t.scope = text.substr(0, dot);
  const std::string rest = text.substr(dot + 1);
  if (t.scope == "split") {
    t.field = rest;
    return t;
  }
  if (t.scope != "library" && t.scope != "system") throw bad("unknown scope '" + t.scope + "'");
  const auto open = rest.find('[');
  const auto close = rest.find("].");
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw bad("expected <kind>[NAME].<field>");
  t.kind = rest.substr(0, open);
  t.key = rest.substr(open + 1, close - open - 1);
  t.field = rest.substr(close + 2);
  if (t.key.empty() || t.field.empty()) throw bad("empty name or field");
  return t;
}

bool NameMatches(const std::string& pattern, const std::string& name) {
  if (pattern == "*") return true;
  if (!pattern.empty() && pattern.back() == '*')
    return name.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
  return pattern == name;
}

double AsNumber(const SweepValue& v, const std::string& target) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw ValidationError(kSweepPath, target, "expects a number, got \"" + std::get<std::string>(v) + "\"");
}

const std::string& AsString(const SweepValue& v, const std::string& target) {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  throw ValidationError(kSweepPath, target, "expects a string");
}

int AsInt(const SweepValue& v, const std::string& target) {
  const double d = AsNumber(v, target);
  if (d != std::floor(d) || std::abs(d) > 2e9)
    throw ValidationError(kSweepPath, target, "expects an integer");
  return static_cast<int>(d);
}

bool AsBool(const SweepValue& v, const std::string& target) {
  const double d = AsNumber(v, target);
  if (d != 0.0 && d != 1.0) throw ValidationError(kSweepPath, target, "expects 0 or 1");
  return d != 0.0;
}

template <typename T>
using Setter = std::function<void(T&, const SweepValue&, const std::string&)>;

template <typename T>
Setter<T> Real(double T::*member) {
  return [member](T& obj, const SweepValue& v, const std::string& t) { obj.*member = AsNumber(v, t); };
}

template <typename T>
Setter<T> Integer(int T::*member) {
  return [member](T& obj, const SweepValue& v, const std::string& t) { obj.*member = AsInt(v, t); };
}

template <typename T>
Setter<T> Rate(DesignRates T::*group, double DesignRates::*member) {
  return [group, member](T& obj, const SweepValue& v, const std::string& t) {
    (obj.*group).*member = AsNumber(v, t);
  };
}

const std::map<std::string, Setter<LayerDef>>& LayerFields() {
  static const std::map<std::string, Setter<LayerDef>> f = {
      {"cost_per_mm2", Real(&LayerDef::cost_per_mm2)},
      {"defect_density", Real(&LayerDef::defect_density)},
      {"clustering", Real(&LayerDef::clustering)},
      {"critical_area_ratio", Real(&LayerDef::critical_area_ratio)},
      {"litho_fraction", Real(&LayerDef::litho_fraction)},
      {"mask_cost", Real(&LayerDef::mask_cost)},
      {"stitch_yield", Real(&LayerDef::stitch_yield)},
  };
  return f;
}

const std::map<std::string, Setter<IODefinition>>& IOFields() {
  static const std::map<std::string, Setter<IODefinition>> f = {
      {"tx_area", Real(&IODefinition::tx_area)},
      {"rx_area", Real(&IODefinition::rx_area)},
      {"area",
       [](IODefinition& io, const SweepValue& v, const std::string& t) {
         io.tx_area = io.rx_area = AsNumber(v, t);
       }},
      {"bandwidth", Real(&IODefinition::bandwidth)},
      {"reach", Real(&IODefinition::reach)},
      {"wires", Integer(&IODefinition::wires_per_instance)},
      {"energy_per_bit", Real(&IODefinition::energy_per_bit)},
  };
  return f;
}

const std::map<std::string, Setter<WaferProcessDef>>& WaferFields() {
  using W = WaferProcessDef;
  static const std::map<std::string, Setter<W>> f = {
      {"diameter", Real(&W::wafer_diameter)},
      {"edge_exclusion", Real(&W::edge_exclusion)},
      {"scribe_x", Real(&W::scribe_x)},
      {"scribe_y", Real(&W::scribe_y)},
      {"reticle_x", Real(&W::reticle_x)},
      {"reticle_y", Real(&W::reticle_y)},
      {"grid_dicing",
       [](W& w, const SweepValue& v, const std::string& t) { w.grid_dicing = AsBool(v, t); }},
      {"nre_fe_logic", Rate(&W::nre_frontend, &DesignRates::logic)},
      {"nre_fe_memory", Rate(&W::nre_frontend, &DesignRates::memory)},
      {"nre_fe_analog", Rate(&W::nre_frontend, &DesignRates::analog)},
      {"nre_be_logic", Rate(&W::nre_backend, &DesignRates::logic)},
      {"nre_be_memory", Rate(&W::nre_backend, &DesignRates::memory)},
      {"nre_be_analog", Rate(&W::nre_backend, &DesignRates::analog)},
  };
  return f;
}

const std::map<std::string, Setter<AssemblyProcessDef>>& AssemblyFields() {
  using A = AssemblyProcessDef;
  static const std::map<std::string, Setter<A>> f = {
      {"t_pnp", Real(&A::t_pnp)},
      {"t_bond", Real(&A::t_bond)},
      {"group_pnp", Integer(&A::group_pnp)},
      {"group_bond", Integer(&A::group_bond)},
      {"rate_pnp", Real(&A::rate_pnp)},
      {"rate_bond", Real(&A::rate_bond)},
      {"material_cost", Real(&A::material_cost)},
      {"die_separation", Real(&A::die_separation)},
      {"edge_exclusion", Real(&A::stack_edge_exclusion)},
      {"bonding_pitch", Real(&A::bonding_pitch)},
      {"max_current_density", Real(&A::max_current_density)},
      {"bond_yield", Real(&A::bond_yield_per_pin)},
      {"alignment_yield", Real(&A::alignment_yield_per_die)},
      {"dielectric_defect_density", Real(&A::dielectric_defect_density)},
  };
  return f;
}

const std::map<std::string, Setter<TestProcessDef>>& TestFields() {
  using T = TestProcessDef;
  static const std::map<std::string, Setter<T>> f = {
      {"machine_rate", Real(&T::machine_rate)},
      {"pattern_count", Real(&T::pattern_count)},
      {"scan_chain_length", Real(&T::scan_chain_length)},
      {"clock_period", Real(&T::test_clock_period)},
      {"fault_coverage", Real(&T::fault_coverage)},
      {"scan_chains", Integer(&T::num_scan_chains)},
      {"ios_per_scan_chain", Integer(&T::ios_per_scan_chain)},
      {"test_io_offset", Integer(&T::test_io_offset)},
  };
  return f;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

const std::map<std::string, Setter<ChipSpec>>& ChipFields() {
  using C = ChipSpec;
  auto optional = [](std::optional<double> C::*member) -> Setter<C> {
    return [member](C& c, const SweepValue& v, const std::string& t) { c.*member = AsNumber(v, t); };
  };
  auto text = [](std::string C::*member) -> Setter<C> {
    return [member](C& c, const SweepValue& v, const std::string& t) { c.*member = AsString(v, t); };
  };
  auto fraction = [](double DesignFractions::*member) -> Setter<C> {
    return [member](C& c, const SweepValue& v, const std::string& t) {
      c.design_fractions.*member = AsNumber(v, t);
    };
  };
  static const std::map<std::string, Setter<C>> f = {
      {"core_area", Real(&C::core_area)},
      {"core_power", Real(&C::core_power)},
      {"core_voltage", Real(&C::core_voltage)},
      {"black_box_area", optional(&C::black_box_area)},
      {"black_box_power", optional(&C::black_box_power)},
      {"quantity", Real(&C::quantity)},
      {"buried", [](C& c, const SweepValue& v, const std::string& t) { c.buried = AsBool(v, t); }},
      {"logic_fraction", fraction(&DesignFractions::logic)},
      {"memory_fraction", fraction(&DesignFractions::memory)},
      {"analog_fraction", fraction(&DesignFractions::analog)},
      {"reticle_share", Real(&C::reticle_share)},
      {"layers",
       [](C& c, const SweepValue& v, const std::string& t) { c.layer_stack = SplitList(AsString(v, t)); }},
      {"wafer_process", text(&C::wafer_process)},
      {"assembly_process", text(&C::assembly_process)},
      {"self_test", text(&C::test_process_self)},
      {"assembly_test", text(&C::test_process_assembly)},
  };
  return f;
}

const std::map<std::string, Setter<NetSpec>>& NetFields() {
  using N = NetSpec;
  static const std::map<std::string, Setter<N>> f = {
      {"bandwidth",
       [](N& n, const SweepValue& v, const std::string& t) {
         n.bandwidth = AsNumber(v, t);
         n.count.reset();
       }},
      {"count",
       [](N& n, const SweepValue& v, const std::string& t) {
         n.count = AsInt(v, t);
         n.bandwidth.reset();
       }},
      {"utilization",
       [](N& n, const SweepValue& v, const std::string& t) { n.average_utilization = AsNumber(v, t); }},
      {"io", [](N& n, const SweepValue& v, const std::string& t) { n.io_type = AsString(v, t); }},
  };
  return f;
}

const std::map<std::string, Setter<HomogeneousSplit>>& SplitFields() {
  using H = HomogeneousSplit;
  auto text = [](std::string H::*member) -> Setter<H> {
    return [member](H& h, const SweepValue& v, const std::string& t) { h.*member = AsString(v, t); };
  };
  static const std::map<std::string, Setter<H>> f = {
      {"count", Integer(&H::count)},
      {"total_core_area", Real(&H::total_core_area)},
      {"total_core_power", Real(&H::total_core_power)},
      {"bisection_bandwidth", Real(&H::bisection_bandwidth)},
      {"external_bandwidth", Real(&H::external_bandwidth)},
      {"io", text(&H::io)},
      {"external_io", text(&H::external_io)},
  };
  return f;
}

template <typename T>
const Setter<T>& Field(const std::map<std::string, Setter<T>>& fields, const std::string& field,
                       const std::string& target) {
  auto it = fields.find(field);
  if (it == fields.end())
    throw ValidationError(kSweepPath, target, "cannot resolve target: unknown field '" + field + "'");
  return it->second;
}

template <typename T>
void SetInTable(std::map<std::string, T>& table, const std::map<std::string, Setter<T>>& fields,
                const Target& t, const std::string& target, const SweepValue& value) {
  const auto& set = Field(fields, t.field, target);
  int hits = 0;
  for (auto& [name, def] : table) {
    if (!NameMatches(t.key, name)) continue;
    set(def, value, target);
    ++hits;
  }
  if (hits == 0)
    throw ValidationError(kSweepPath, target,
                          "cannot resolve target: no " + t.kind + " named '" + t.key + "'");
}

int SetOnChips(ChipSpec& chip, const Setter<ChipSpec>& set, const std::string& pattern,
               const std::string& target, const SweepValue& value) {
  int hits = 0;
  if (NameMatches(pattern, chip.name)) {
    set(chip, value, target);
    ++hits;
  }
  for (auto& child : chip.children) hits += SetOnChips(child, set, pattern, target, value);
  return hits;
}

ChipSpec* FindChip(ChipSpec& chip, const std::string& name) {
  if (chip.name == name) return &chip;
  for (auto& c : chip.children)
    if (ChipSpec* hit = FindChip(c, name)) return hit;
  return nullptr;
}

const ChipSpec* FirstLeaf(const ChipSpec& chip) {
  return chip.children.empty() ? &chip : FirstLeaf(chip.children.front());
}

int CountLeaves(const ChipSpec& chip) {
  if (chip.children.empty()) return 1;
  int n = 0;
  for (const auto& c : chip.children) n += CountLeaves(c);
  return n;
}

// JSON helpers ---------------------------------------------------------------

void RejectUnknownKeys(const json& obj, std::initializer_list<const char*> keys,
                       const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known |= it.key() == k;
    if (!known) throw ValidationError(path, it.key(), "unknown key");
  }
}

double JsonNumber(const json& obj, const char* key, const std::string& path,
                  std::optional<double> fallback = std::nullopt) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw ValidationError(path, key, "required key missing");
  }
  if (!it->is_number()) throw ValidationError(path, key, "must be a number");
  return it->get<double>();
}

std::string JsonString(const json& obj, const char* key, const std::string& path,
                       std::optional<std::string> fallback = std::nullopt) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (fallback) return *fallback;
    throw ValidationError(path, key, "required key missing");
  }
  if (!it->is_string()) throw ValidationError(path, key, "must be a string");
  return it->get<std::string>();
}

std::vector<SweepValue> ExpandRange(const json& range, const std::string& path) {
  RejectUnknownKeys(range, {"start", "stop", "step"}, path);
  const double start = JsonNumber(range, "start", path);
  const double stop = JsonNumber(range, "stop", path);
  const double step = JsonNumber(range, "step", path);
  if (step == 0.0 || !std::isfinite(step)) throw ValidationError(path, "step", "must be non-zero");
  const double span = (stop - start) / step;
  if (span < -1e-9) throw ValidationError(path, "step", "step points away from stop; range is empty");
  const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  if (n > 10'000'000) throw ValidationError(path, "step", "range has too many points");
  std::vector<SweepValue> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(start + static_cast<double>(i) * step);
  return out;
}

long LineOfByte(std::string_view text, std::size_t byte) {
  long line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Evaluation -----------------------------------------------------------------

struct Point {
  SystemSpec system;
  std::shared_ptr<const ProcessLibrary> library;
  std::optional<HomogeneousSplit> split;
};

Point BuildPoint(const SweepSpec& spec, const std::vector<SweepValue>& values,
                 const SystemSpec& base_system, const std::shared_ptr<const ProcessLibrary>& base_lib) {
  Point p{base_system, base_lib, spec.split};
  std::vector<std::size_t> system_params;
  std::shared_ptr<ProcessLibrary> lib;
  HomogeneousSplit* split = p.split ? &*p.split : nullptr;
  for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
    const std::string& target = spec.parameters[i].target;
    if (target.rfind("system.", 0) == 0) {
      system_params.push_back(i);
      continue;
    }
    if (target.rfind("library.", 0) == 0 && !lib) lib = std::make_shared<ProcessLibrary>(*base_lib);
    ProcessLibrary scratch;
    ApplyTarget(p.system, lib ? *lib : scratch, split, target, values[i]);
  }
  if (lib) {
    ValidateLibrary(*lib);
    p.library = lib;
  }
  if (p.split) ApplyHomogeneousSplit(p.system, *p.split, *p.library);
  ProcessLibrary unused;
  for (std::size_t i : system_params)
    ApplyTarget(p.system, unused, split, spec.parameters[i].target, values[i]);
  return p;
}

std::vector<SweepValue> PointValues(const SweepSpec& spec, std::size_t index) {
  std::vector<SweepValue> values(spec.parameters.size());
  for (std::size_t k = spec.parameters.size(); k-- > 0;) {
    const auto& vs = spec.parameters[k].values;
    values[k] = vs[index % vs.size()];
    index /= vs.size();
  }
  return values;
}

std::string CsvField(const SweepValue& v) {
  if (const double* d = std::get_if<double>(&v)) return FormatNumber(*d);
  const std::string& s = std::get<std::string>(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::size_t SweepSpec::size() const {
  std::size_t n = 1;
  for (const auto& p : parameters) n *= p.values.size();
  return n;
}

SweepSpec ParseSweepSpec(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, LineOfByte(text, e.byte), e.what());
  }
  if (!doc.is_object()) throw ParseError(source, 1, "sweep description must be a JSON object");
  RejectUnknownKeys(doc, {"version", "parameters", "derived_rules", "description"}, kSweepPath);
  if (auto v = doc.find("version"); v != doc.end() && *v != kSweepSpecVersion)
    throw ValidationError(kSweepPath, "version", "unsupported sweep version " + v->dump());

  SweepSpec spec;
  const json params = doc.value("parameters", json::array());
  if (!params.is_array()) throw ValidationError(kSweepPath, "parameters", "must be an array");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string path = std::string(kSweepPath) + "/parameters[" + std::to_string(i) + "]";
    const json& p = params[i];
    if (!p.is_object()) throw ValidationError(path, "", "must be an object");
    RejectUnknownKeys(p, {"target", "values", "range"}, path);
    SweepParameter param;
    param.target = JsonString(p, "target", path);
    ParseTarget(param.target);
    const bool has_values = p.contains("values"), has_range = p.contains("range");
    if (has_values == has_range)
      throw ValidationError(path, "values", "give exactly one of 'values' or 'range'");
    if (has_values) {
      const json& vs = p["values"];
      if (!vs.is_array()) throw ValidationError(path, "values", "must be an array");
      for (const auto& v : vs) {
        if (v.is_number()) param.values.emplace_back(v.get<double>());
        else if (v.is_string()) param.values.emplace_back(v.get<std::string>());
        else throw ValidationError(path, "values", "entries must be numbers or strings");
      }
    } else {
      param.values = ExpandRange(p["range"], path + "/range");
    }
    if (param.values.empty()) throw ValidationError(path, "values", "must not be empty");
    spec.parameters.push_back(std::move(param));
  }

  const json rules = doc.value("derived_rules", json::array());
  if (!rules.is_array()) throw ValidationError(kSweepPath, "derived_rules", "must be an array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string path = std::string(kSweepPath) + "/derived_rules[" + std::to_string(i) + "]";
    const json& r = rules[i];
    if (!r.is_object()) throw ValidationError(path, "", "must be an object");
    const std::string kind = JsonString(r, "rule", path);
    if (kind != "homogeneous_split") throw ValidationError(path, "rule", "unknown rule '" + kind + "'");
    if (spec.split) throw ValidationError(path, "rule", "only one homogeneous_split rule is allowed");
    RejectUnknownKeys(r,
                      {"rule", "parent", "template", "count", "total_core_area", "total_core_power",
                       "bisection_bandwidth", "external_bandwidth", "io", "external_io",
                       "external_endpoint"},
                      path);
    HomogeneousSplit h;
    h.parent = JsonString(r, "parent", path);
    h.template_chip = JsonString(r, "template", path);
    const double count = JsonNumber(r, "count", path, 1.0);
    if (count != std::floor(count) || count < 1) throw ValidationError(path, "count", "must be a positive integer");
    h.count = static_cast<int>(count);
    h.total_core_area = JsonNumber(r, "total_core_area", path);
    h.total_core_power = JsonNumber(r, "total_core_power", path, 0.0);
    h.bisection_bandwidth = JsonNumber(r, "bisection_bandwidth", path, 0.0);
    h.external_bandwidth = JsonNumber(r, "external_bandwidth", path, 0.0);
    h.io = JsonString(r, "io", path);
    h.external_io = JsonString(r, "external_io", path, h.io);
    h.external_endpoint = JsonString(r, "external_endpoint", path, std::string("host"));
    spec.split = h;
  }
  return spec;
}

void ApplyTarget(SystemSpec& system, ProcessLibrary& library, HomogeneousSplit* split,
                 const std::string& target, const SweepValue& value) {
  const Target t = ParseTarget(target);
  if (t.scope == "split") {
    if (!split)
      throw ValidationError(kSweepPath, target, "cannot resolve target: no homogeneous_split rule");
    Field(SplitFields(), t.field, target)(*split, value, target);
    return;
  }
  if (t.scope == "library") {
    if (t.kind == "layer") SetInTable(library.layers, LayerFields(), t, target, value);
    else if (t.kind == "io") SetInTable(library.ios, IOFields(), t, target, value);
    else if (t.kind == "waferprocess") SetInTable(library.wafer_processes, WaferFields(), t, target, value);
    else if (t.kind == "assembly") SetInTable(library.assembly_processes, AssemblyFields(), t, target, value);
    else if (t.kind == "test") SetInTable(library.test_processes, TestFields(), t, target, value);
    else throw ValidationError(kSweepPath, target, "cannot resolve target: unknown library kind '" + t.kind + "'");
    return;
  }
  if (t.kind == "chip") {
    const auto& set = Field(ChipFields(), t.field, target);
    if (SetOnChips(system.root, set, t.key, target, value) == 0)
      throw ValidationError(kSweepPath, target, "cannot resolve target: no chip named '" + t.key + "'");
    return;
  }
  if (t.kind == "net") {
    const auto& set = Field(NetFields(), t.field, target);
    if (t.key == "*") {
      if (system.nets.empty())
        throw ValidationError(kSweepPath, target, "cannot resolve target: the netlist is empty");
      for (auto& n : system.nets) set(n, value, target);
      return;
    }
    std::size_t index = 0;
    try {
      std::size_t used = 0;
      index = std::stoul(t.key, &used);
      if (used != t.key.size()) throw std::invalid_argument(t.key);
    } catch (const std::exception&) {
      throw ValidationError(kSweepPath, target, "cannot resolve target: net index must be a number or *");
    }
    if (index >= system.nets.size())
      throw ValidationError(kSweepPath, target, "cannot resolve target: no net with index " + t.key);
    set(system.nets[index], value, target);
    return;
  }
  throw ValidationError(kSweepPath, target, "cannot resolve target: unknown system kind '" + t.kind + "'");
}

void ApplyHomogeneousSplit(SystemSpec& system, const HomogeneousSplit& rule,
                           const ProcessLibrary& library) {
  const std::string path = std::string(kSweepPath) + "/derived_rules[homogeneous_split]";
  ChipSpec* parent = FindChip(system.root, rule.parent);
  if (!parent) throw ValidationError(path, "parent", "no chip named '" + rule.parent + "'");
  auto tmpl = std::find_if(parent->children.begin(), parent->children.end(),
                           [&](const ChipSpec& c) { return c.name == rule.template_chip; });
  if (tmpl == parent->children.end())
    throw ValidationError(path, "template",
                          "'" + rule.template_chip + "' is not a child of '" + rule.parent + "'");
  const int n = rule.count;
  const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (n < 1 || k * k != n)
    throw ValidationError(path, "count", std::to_string(n) + " is not a perfect square");
  auto io_it = library.ios.find(rule.io);
  if (io_it == library.ios.end()) throw ValidationError(path, "io", "unknown io type '" + rule.io + "'");
  auto ext_it = library.ios.find(rule.external_io);
  if (ext_it == library.ios.end())
    throw ValidationError(path, "external_io", "unknown io type '" + rule.external_io + "'");

  const ChipSpec proto = *tmpl;
  std::vector<ChipSpec> chiplets;
  auto name_of = [&](int i) { return proto.name + "_" + std::to_string(i); };
  for (int i = 0; i < n; ++i) {
    ChipSpec c = proto;
    c.name = name_of(i);
    c.core_area = rule.total_core_area / n;
    c.core_power = rule.total_core_power / n;
    c.quantity = proto.quantity * n;
    chiplets.push_back(std::move(c));
  }
  const auto at = parent->children.erase(tmpl);
  parent->children.insert(at, chiplets.begin(), chiplets.end());

  std::erase_if(system.nets, [&](const NetSpec& net) {
    return net.from == proto.name || net.to == proto.name;
  });
  auto link = [&](const std::string& a, const std::string& b, const IODefinition& io, double bw) {
    if (!(bw > 0)) return;
    system.nets.push_back({a, b, io.name, bw, std::nullopt, 1.0});
    if (!io.bidirectional) system.nets.push_back({b, a, io.name, bw, std::nullopt, 1.0});
  };
  const double edge = rule.bisection_bandwidth / k;
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      const int i = r * k + c;
      if (c + 1 < k) link(name_of(i), name_of(i + 1), io_it->second, edge);
      if (r + 1 < k) link(name_of(i), name_of(i + k), io_it->second, edge);
    }
  }
  for (int i = 0; i < n; ++i)
    link(name_of(i), rule.external_endpoint, ext_it->second, rule.external_bandwidth / n);
}

void CheckSweep(const SweepSpec& spec, const SystemSpec& system, const ProcessLibrary& library) {
  for (const auto& p : spec.parameters) {
    for (const auto& v : p.values) {
      SystemSpec s = system;
      ProcessLibrary l = library;
      std::optional<HomogeneousSplit> split = spec.split;
      if (p.target.rfind("system.", 0) == 0 && split) ApplyHomogeneousSplit(s, *split, l);
      ApplyTarget(s, l, split ? &*split : nullptr, p.target, v);
    }
  }
  if (spec.split) {
    SystemSpec s = system;
    ApplyHomogeneousSplit(s, *spec.split, library);
  }
}

std::vector<SweepRow> RunSweep(const SweepSpec& spec, const SystemSpec& system,
                               const ProcessLibrary& library, const SweepOptions& options) {
  const auto base_lib = std::make_shared<const ProcessLibrary>(library);
  const std::size_t total = spec.size();
  std::vector<SweepRow> rows(total);
  std::vector<std::exception_ptr> errors(total);
  GeometryCache local;
  GeometryCache& geometry = options.geometry ? *options.geometry : local;

  auto run_one = [&](std::size_t index) {
    SweepRow& row = rows[index];
    row.values = PointValues(spec, index);
    Point p = BuildPoint(spec, row.values, system, base_lib);
    const ValidatedSystem vs = ValidatedSystem::Validate(std::move(p.system), p.library);
    const CostReport report = Evaluate(vs, {&geometry});
    row.feasible = report.feasible;
    row.diagnostic = report.diagnostic;
    const NodeCosts& root = report.root();
    row.total_cost = root.c_total;
    row.re_cost = root.c_re;
    row.nre_cost = root.c_nre;
    row.breakdown = report.breakdown;
    row.root_area = report.derived.front().area;
    row.root_power = report.derived.front().power;
    row.root_yield = root.y_chip;
    row.leaf_core_area = p.split ? p.split->total_core_area / p.split->count
                                 : FirstLeaf(vs.spec().root)->core_area;
    row.leaf_count = CountLeaves(vs.spec().root);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        run_one(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(total)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::string SweepToCsv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "# chipcost sweep csv schema v1\n";
  for (const auto& p : spec.parameters) out << CsvField(SweepValue(p.target)) << ',';
  out << "total_cost,re_cost,nre_cost,silicon,assembly,test,scrap,nre,root_area,root_power,"
         "root_yield,leaf_core_area,leaf_count,status\n";
  for (const auto& r : rows) {
    for (const auto& v : r.values) out << CsvField(v) << ',';
    const CostBreakdown& b = r.breakdown;
    for (double x : {r.total_cost, r.re_cost, r.nre_cost, b.silicon, b.assembly, b.test, b.scrap,
                     b.nre, r.root_area, r.root_power, r.root_yield, r.leaf_core_area})
      out << FormatNumber(x) << ',';
    out << r.leaf_count << ',' << (r.feasible ? "ok" : "infeasible") << '\n';
  }
  return out.str();
}

}  // namespace chipcost
