#include "chipcost/system.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "chipcost/errors.hpp"

namespace chipcost {

namespace {

std::string Num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void RequireAtLeast(const std::string& path, const char* field, double v, double lo) {
  if (!(v >= lo) || !std::isfinite(v))
    throw ValidationError(path, field, "value " + Num(v) + " must be >= " + Num(lo));
}

void RequireAbove(const std::string& path, const char* field, double v, double lo) {
  if (!(v > lo) || !std::isfinite(v))
    throw ValidationError(path, field, "value " + Num(v) + " must be > " + Num(lo));
}

void RequireUnit(const std::string& path, const char* field, double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError(path, field, "value " + Num(v) + " must be in [0, 1]");
}

void RequireYield(const std::string& path, const char* field, double v) {
  if (!(v > 0.0 && v <= 1.0))
    throw ValidationError(path, field, "value " + Num(v) + " must be in (0, 1]");
}

void ValidateLayer(const LayerDef& l) {
  const std::string path = "library/layer[" + l.name + "]";
  RequireAtLeast(path, "cost_per_mm2", l.cost_per_mm2, 0.0);
  RequireAtLeast(path, "defect_density", l.defect_density, 0.0);
  RequireAbove(path, "clustering", l.clustering, 0.0);
  RequireUnit(path, "critical_area_ratio", l.critical_area_ratio);
  RequireUnit(path, "litho_fraction", l.litho_fraction);
  RequireAtLeast(path, "mask_cost", l.mask_cost, 0.0);
  RequireYield(path, "stitch_yield", l.stitch_yield);
}

void ValidateIO(const IODefinition& io) {
  const std::string path = "library/io[" + io.name + "]";
  RequireAtLeast(path, "tx_area", io.tx_area, 0.0);
  RequireAtLeast(path, "rx_area", io.rx_area, 0.0);
  RequireAbove(path, "bandwidth", io.bandwidth, 0.0);
  RequireAbove(path, "reach", io.reach, 0.0);
  RequireAtLeast(path, "wires", io.wires_per_instance, 1.0);
  RequireAtLeast(path, "energy_per_bit", io.energy_per_bit, 0.0);
  if (io.bidirectional && io.tx_area != io.rx_area)
    throw ValidationError(path, "rx_area", "bidirectional IO must have tx_area == rx_area");
}

void ValidateWafer(const WaferProcessDef& w) {
  const std::string path = "library/waferprocess[" + w.name + "]";
  RequireAbove(path, "diameter", w.wafer_diameter, 0.0);
  RequireAtLeast(path, "edge_exclusion", w.edge_exclusion, 0.0);
  if (!(w.usable_radius() > 0.0))
    throw ValidationError(path, "edge_exclusion", "usable radius diameter/2 - edge_exclusion must be > 0");
  RequireAtLeast(path, "scribe_x", w.scribe_x, 0.0);
  RequireAtLeast(path, "scribe_y", w.scribe_y, 0.0);
  RequireAbove(path, "reticle_x", w.reticle_x, 0.0);
  RequireAbove(path, "reticle_y", w.reticle_y, 0.0);
  RequireAtLeast(path, "nre_fe_logic", w.nre_frontend.logic, 0.0);
  RequireAtLeast(path, "nre_fe_memory", w.nre_frontend.memory, 0.0);
  RequireAtLeast(path, "nre_fe_analog", w.nre_frontend.analog, 0.0);
  RequireAtLeast(path, "nre_be_logic", w.nre_backend.logic, 0.0);
  RequireAtLeast(path, "nre_be_memory", w.nre_backend.memory, 0.0);
  RequireAtLeast(path, "nre_be_analog", w.nre_backend.analog, 0.0);
}

void ValidateAssembly(const AssemblyProcessDef& a) {
  const std::string path = "library/assembly[" + a.name + "]";
  RequireAtLeast(path, "t_pnp", a.t_pnp, 0.0);
  RequireAtLeast(path, "t_bond", a.t_bond, 0.0);
  RequireAtLeast(path, "group_pnp", a.group_pnp, 1.0);
  RequireAtLeast(path, "group_bond", a.group_bond, 1.0);
  RequireAtLeast(path, "rate_pnp", a.rate_pnp, 0.0);
  RequireAtLeast(path, "rate_bond", a.rate_bond, 0.0);
  RequireAtLeast(path, "material_cost", a.material_cost, 0.0);
  RequireAtLeast(path, "die_separation", a.die_separation, 0.0);
  RequireAtLeast(path, "edge_exclusion", a.stack_edge_exclusion, 0.0);
  RequireAbove(path, "bonding_pitch", a.bonding_pitch, 0.0);
  RequireAbove(path, "max_current_density", a.max_current_density, 0.0);
  RequireYield(path, "bond_yield", a.bond_yield_per_pin);
  RequireYield(path, "alignment_yield", a.alignment_yield_per_die);
  RequireAtLeast(path, "dielectric_defect_density", a.dielectric_defect_density, 0.0);
}

void ValidateTest(const TestProcessDef& t) {
  const std::string path = "library/test[" + t.name + "]";
  RequireAtLeast(path, "machine_rate", t.machine_rate, 0.0);
  RequireAtLeast(path, "pattern_count", t.pattern_count, 0.0);
  RequireAtLeast(path, "scan_chain_length", t.scan_chain_length, 0.0);
  RequireAtLeast(path, "clock_period", t.test_clock_period, 0.0);
  RequireUnit(path, "fault_coverage", t.fault_coverage);
  RequireAtLeast(path, "scan_chains", t.num_scan_chains, 0.0);
  RequireAtLeast(path, "ios_per_scan_chain", t.ios_per_scan_chain, 0.0);
  RequireAtLeast(path, "test_io_offset", t.test_io_offset, 0.0);
}

template <typename Def>
const Def* Resolve(const std::map<std::string, Def>& table, const std::string& name,
                   const std::string& path, const char* field) {
  auto it = table.find(name);
  if (it == table.end())
    throw ValidationError(path, field, "unknown " + std::string(field) + " '" + name + "'");
  return &it->second;
}

void ValidateChip(const ChipSpec& c, const std::string& path) {
  if (c.name.empty()) throw ValidationError(path, "name", "chip name must not be empty");
  RequireAtLeast(path, "core_area", c.core_area, 0.0);
  RequireAtLeast(path, "core_power", c.core_power, 0.0);
  RequireAbove(path, "core_voltage", c.core_voltage, 0.0);
  if (c.black_box_area) RequireAtLeast(path, "black_box_area", *c.black_box_area, 0.0);
  if (c.black_box_power) RequireAtLeast(path, "black_box_power", *c.black_box_power, 0.0);
  RequireAbove(path, "quantity", c.quantity, 0.0);
  const auto& f = c.design_fractions;
  RequireUnit(path, "logic_fraction", f.logic);
  RequireUnit(path, "memory_fraction", f.memory);
  RequireUnit(path, "analog_fraction", f.analog);
  if (std::abs(f.logic + f.memory + f.analog - 1.0) > 1e-9)
    throw ValidationError(path, "logic_fraction",
                          "logic + memory + analog fractions must sum to 1 (got " +
                              Num(f.logic + f.memory + f.analog) + ")");
  if (!(c.reticle_share > 0.0 && c.reticle_share <= 1.0))
    throw ValidationError(path, "reticle_share", "value " + Num(c.reticle_share) + " must be in (0, 1]");
  if (c.layer_stack.empty()) throw ValidationError(path, "layers", "at least one layer is required");
}

}  // namespace

void ValidateLibrary(const ProcessLibrary& library) {
  for (const auto& [name, l] : library.layers) ValidateLayer(l);
  for (const auto& [name, io] : library.ios) ValidateIO(io);
  for (const auto& [name, w] : library.wafer_processes) ValidateWafer(w);
  for (const auto& [name, a] : library.assembly_processes) ValidateAssembly(a);
  for (const auto& [name, t] : library.test_processes) ValidateTest(t);
}

ValidatedSystem ValidatedSystem::Validate(SystemSpec spec,
                                          std::shared_ptr<const ProcessLibrary> library) {
  if (!library) throw ValidationError("library", "", "no library supplied");
  const ProcessLibrary& lib = *library;

  auto data = std::make_shared<Data>();
  data->spec = std::move(spec);
  const std::string sys_path = "system";

  // Flatten in pre-order; pointers refer into data->spec which no longer moves.
  std::function<void(const ChipSpec&, int, int, const std::string&)> visit =
      [&](const ChipSpec& c, int parent, int depth, const std::string& parent_path) {
        const std::string path = parent_path + "/chip[" + c.name + "]";
        ValidateChip(c, path);
        if (!data->by_name.emplace(c.name, static_cast<int>(data->chips.size())).second)
          throw ValidationError(path, "name", "duplicate chip name '" + c.name + "'");

        ResolvedChip rc;
        rc.spec = &c;
        rc.index = static_cast<int>(data->chips.size());
        rc.parent = parent;
        rc.depth = depth;
        rc.path = path;
        for (const auto& layer : c.layer_stack)
          rc.layers.push_back(Resolve(lib.layers, layer, path, "layer"));
        rc.wafer = Resolve(lib.wafer_processes, c.wafer_process, path, "wafer_process");
        rc.assembly = Resolve(lib.assembly_processes, c.assembly_process, path, "assembly_process");
        rc.self_test = Resolve(lib.test_processes, c.test_process_self, path, "self_test");
        rc.assembly_test =
            Resolve(lib.test_processes, c.test_process_assembly, path, "assembly_test");
        rc.attach = parent < 0 ? rc.assembly : data->chips[parent].assembly;

        const int index = rc.index;
        data->chips.push_back(std::move(rc));
        if (parent >= 0) data->chips[parent].children.push_back(index);
        for (const auto& child : c.children) visit(child, index, depth + 1, path);
      };
  visit(data->spec.root, -1, 0, sys_path);

  // Post-order: reverse pre-order visits every child before its parent.
  data->post_order.reserve(data->chips.size());
  for (int i = static_cast<int>(data->chips.size()) - 1; i >= 0; --i) data->post_order.push_back(i);

  for (std::size_t i = 0; i < data->spec.nets.size(); ++i) {
    const NetSpec& n = data->spec.nets[i];
    const std::string path = "netlist/net[" + std::to_string(i) + "](" + n.from + "->" + n.to + ")";
    ResolvedNet rn;
    rn.spec = &n;
    rn.index = static_cast<int>(i);
    rn.path = path;
    auto io = lib.ios.find(n.io_type);
    if (io == lib.ios.end())
      throw ValidationError(path, "io", "unknown io type '" + n.io_type + "'");
    rn.io = &io->second;
    if (n.from == n.to) throw ValidationError(path, "to", "net connects a chip to itself");
    if (n.bandwidth.has_value() == n.count.has_value())
      throw ValidationError(path, "bandwidth", "exactly one of bandwidth or count must be given");
    if (n.bandwidth) RequireAtLeast(path, "bandwidth", *n.bandwidth, 0.0);
    if (n.count && *n.count < 1)
      throw ValidationError(path, "count", "count must be >= 1");
    RequireUnit(path, "utilization", n.average_utilization);
    auto from = data->by_name.find(n.from);
    auto to = data->by_name.find(n.to);
    rn.from = from == data->by_name.end() ? kExternal : from->second;
    rn.to = to == data->by_name.end() ? kExternal : to->second;
    if (rn.from == kExternal && rn.to == kExternal)
      throw ValidationError(path, "from", "neither endpoint names a chip in the system");
    data->nets.push_back(std::move(rn));
  }

  ValidatedSystem out;
  out.data_ = std::move(data);
  out.library_ = std::move(library);
  return out;
}

int ValidatedSystem::index_of(std::string_view name) const {
  auto it = data_->by_name.find(std::string(name));
  return it == data_->by_name.end() ? -1 : it->second;
}

}  // namespace chipcost
