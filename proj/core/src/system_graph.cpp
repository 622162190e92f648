#include "chipcost/system_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "chipcost/errors.hpp"

namespace chipcost {

ConnectionMatrix::ConnectionMatrix(const IODefinition* io, std::size_t n)
    : io_(io), n_(n), counts_(n * n, 0), ext_tx_(n, 0), ext_rx_(n, 0), row_(n, 0), col_(n, 0) {}

void ConnectionMatrix::add(int from, int to, std::int64_t count) {
  if (count == 0 || from == to) return;
  if (from != kExternal && to != kExternal) {
    counts_[static_cast<std::size_t>(from) * n_ + static_cast<std::size_t>(to)] += count;
  } else if (from != kExternal) {
    ext_tx_[from] += count;
  } else if (to != kExternal) {
    ext_rx_[to] += count;
  }
  if (from != kExternal) row_[from] += count;
  if (to != kExternal) col_[to] += count;
}

std::int64_t InstancesForBandwidth(double bandwidth, double cell_bandwidth) {
  if (!(bandwidth > 0)) return 0;
  return static_cast<std::int64_t>(std::ceil(bandwidth / cell_bandwidth - 1e-9));
}

std::int64_t NetInstances(const ResolvedNet& net) {
  if (net.spec->count) return *net.spec->count;
  return InstancesForBandwidth(net.spec->bandwidth.value_or(0.0), net.io->bandwidth);
}

std::vector<ConnectionMatrix> BuildMatrices(const ValidatedSystem& system) {
  std::map<std::string, ConnectionMatrix> by_type;
  for (const auto& net : system.nets()) {
    auto it = by_type.find(net.io->name);
    if (it == by_type.end())
      it = by_type.emplace(net.io->name, ConnectionMatrix(net.io, system.size())).first;
    it->second.add(net.from, net.to, NetInstances(net));
  }
  std::vector<ConnectionMatrix> out;
  for (auto& [name, m] : by_type) out.push_back(std::move(m));
  return out;
}

double IOArea(std::size_t chip, const std::vector<ConnectionMatrix>& matrices) {
  double area = 0.0;
  for (const auto& m : matrices) {
    area += m.io().tx_area * static_cast<double>(m.row_sum(chip)) +
            m.io().rx_area * static_cast<double>(m.col_sum(chip));
  }
  return area;
}

double StackArea(const std::vector<StackChild>& children, const AssemblyProcessDef& process) {
  double sum = 0.0;
  bool any = false;
  for (const auto& c : children) {
    if (c.buried) continue;
    const double side = std::sqrt(c.area) + process.die_separation;
    sum += side * side;
    any = true;
  }
  if (!any) return 0.0;
  const double side = std::sqrt(sum) + 2.0 * process.stack_edge_exclusion;
  return side * side;
}

double PowerPerPad(double voltage, const AssemblyProcessDef& process) {
  const double radius = process.bonding_pitch / 4.0;
  return voltage * process.max_current_density * std::numbers::pi * radius * radius;
}

std::int64_t PowerPadCount(double power, double voltage, const AssemblyProcessDef& process) {
  if (!(power > 0)) return 0;
  return 2 * static_cast<std::int64_t>(std::ceil(power / PowerPerPad(voltage, process) - 1e-9));
}

std::int64_t TestIOCount(const TestProcessDef& test) {
  return static_cast<std::int64_t>(test.num_scan_chains) * test.ios_per_scan_chain +
         test.test_io_offset;
}

double PlacementBandWidth(double reach, double die_separation) {
  return (reach - die_separation) / 2.0;
}

std::int64_t BandCapacity(double side, double band, double pitch) {
  if (!(side > 0) || !(band > 0)) return 0;
  const double inner = std::max(0.0, side - 2.0 * band);
  return static_cast<std::int64_t>(std::floor((side * side - inner * inner) / (pitch * pitch) + 1e-9));
}

PadPlacement PlacePads(const PadPlacementInput& in, double die_separation,
                       const std::string& chip_path) {
  PadPlacement out;
  for (const auto& g : in.signal) {
    if (g.pads <= 0) continue;
    PadGroup group = g;
    if (!(g.reach > die_separation))
      throw ConfigError(chip_path + ": io '" + g.io_type + "' reach " + std::to_string(g.reach) +
                        " mm does not exceed die separation " + std::to_string(die_separation) +
                        " mm, so no pad can be placed");
    group.band_width = PlacementBandWidth(g.reach, die_separation);
    out.signal.push_back(group);
  }
  std::stable_sort(out.signal.begin(), out.signal.end(),
                   [](const PadGroup& a, const PadGroup& b) { return a.reach < b.reach; });

  std::int64_t total = in.power_pads + in.test_pads;
  for (const auto& g : out.signal) total += g.pads;
  const double p = in.pitch;

  auto fits = [&](double side) {
    std::int64_t cumulative = 0;
    for (const auto& g : out.signal) {
      cumulative += g.pads;
      if (cumulative > BandCapacity(side, g.band_width, p)) return false;
    }
    return total <= static_cast<std::int64_t>(std::floor(side * side / (p * p) + 1e-9));
  };

  const double s0 = std::max(0.0, in.base_side);
  if (fits(s0)) {
    out.side = s0;
    out.pad_area = static_cast<double>(total) * p * p;
    return out;
  }
  std::int64_t lo = 0, hi = 1;
  while (!fits(s0 + static_cast<double>(hi) * p)) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (fits(s0 + static_cast<double>(mid) * p)) hi = mid;
    else lo = mid;
  }
  out.side = s0 + static_cast<double>(hi) * p;
  out.pad_area = out.side * out.side;
  out.grew = true;
  return out;
}

std::vector<int> PassThroughChips(const ValidatedSystem& system, const ResolvedNet& net) {
  std::vector<int> out;
  if (net.external()) {
    const int end = net.from == kExternal ? net.to : net.from;
    for (int c = system.chip(end).parent; c >= 0; c = system.chip(c).parent) out.push_back(c);
    return out;
  }
  // Internal nets rise from each endpoint to the lowest common ancestor, which
  // routes them laterally and needs no bumps of its own.
  int a = net.from, b = net.to;
  while (system.chip(a).depth > system.chip(b).depth) {
    a = system.chip(a).parent;
    if (a != b) out.push_back(a);
  }
  while (system.chip(b).depth > system.chip(a).depth) {
    b = system.chip(b).parent;
    if (a != b) out.push_back(b);
  }
  while (a != b) {
    a = system.chip(a).parent;
    b = system.chip(b).parent;
    if (a != b) {
      out.push_back(a);
      out.push_back(b);
    }
  }
  return out;
}

DerivedSystem Derive(const ValidatedSystem& system) {
  DerivedSystem out{system, BuildMatrices(system), {}};
  const std::size_t n = system.size();
  out.chips.resize(n);

  // Signal pads per chip and IO type, and IO power per chip.
  std::vector<std::map<std::string, PadGroup>> pads(n);
  std::vector<double> io_power(n, 0.0);
  for (const auto& net : system.nets()) {
    const std::int64_t inst = NetInstances(net);
    const std::int64_t wires = inst * net.io->wires_per_instance;
    auto add_pads = [&](int chip) {
      if (wires == 0) return;
      auto& g = pads[chip][net.io->name];
      g.io_type = net.io->name;
      g.reach = net.io->reach;
      g.pads += wires;
    };
    const double bandwidth = net.spec->bandwidth
                                 ? *net.spec->bandwidth
                                 : static_cast<double>(*net.spec->count) * net.io->bandwidth;
    // pJ/bit * Gbit/s = mW.
    const double watts = net.io->energy_per_bit * bandwidth * net.spec->average_utilization * 1e-3;
    for (int end : {net.from, net.to}) {
      if (end == kExternal) continue;
      add_pads(end);
      io_power[end] += watts;
    }
    for (int c : PassThroughChips(system, net)) add_pads(c);
  }

  for (int i : system.post_order()) {
    const ResolvedChip& rc = system.chip(i);
    const ChipSpec& spec = *rc.spec;
    DerivedChip& d = out.chips[i];
    d.index = i;
    d.core_area = spec.core_area;
    d.io_area = IOArea(static_cast<std::size_t>(i), out.matrices);
    d.core_power = spec.core_power;
    d.io_power = io_power[i];

    std::vector<StackChild> stack;
    double child_power = 0.0;
    for (int c : rc.children) {
      stack.push_back({out.chips[c].area, system.chip(c).spec->buried});
      child_power += out.chips[c].power;
    }
    d.power = spec.black_box_power ? *spec.black_box_power : d.core_power + child_power + d.io_power;
    d.stack_area = StackArea(stack, *rc.assembly);

    d.test_ios = TestIOCount(*rc.self_test);
    d.power_pads = PowerPadCount(d.power, spec.core_voltage, *rc.attach);

    PadPlacementInput in;
    for (auto& [name, g] : pads[i]) in.signal.push_back(g);
    in.power_pads = d.power_pads;
    in.test_pads = d.test_ios;
    in.pitch = rc.attach->bonding_pitch;

    if (spec.black_box_area) {
      in.base_side = std::sqrt(*spec.black_box_area);
      // Area is fixed; placement is run only to check the reach rules.
      PadPlacement placed = PlacePads(in, rc.attach->die_separation, rc.path);
      d.pad_groups = placed.signal;
      d.area = *spec.black_box_area;
      d.pad_area = 0.0;
      for (const auto& g : placed.signal) d.pad_area += static_cast<double>(g.pads);
      d.pad_area = (d.pad_area + static_cast<double>(in.power_pads + in.test_pads)) * in.pitch * in.pitch;
      d.yield_area = d.area;
    } else {
      const double base = std::max(d.core_area + d.io_area, d.stack_area);
      in.base_side = std::sqrt(base);
      PadPlacement placed = PlacePads(in, rc.attach->die_separation, rc.path);
      d.pad_groups = placed.signal;
      d.pad_area = placed.pad_area;
      d.grew_for_pads = placed.grew;
      d.area = std::max(base, d.pad_area);
      d.yield_area = d.core_area + d.io_area;
    }
    d.signal_pads = 0;
    for (const auto& g : d.pad_groups) d.signal_pads += g.pads;
    d.side_x = d.side_y = std::sqrt(d.area);

    for (int c : rc.children) {
      if (system.chip(c).spec->buried) continue;
      if (out.chips[c].area > d.area * (1 + 1e-9))
        throw ConfigError(system.chip(c).path + ": area " + std::to_string(out.chips[c].area) +
                          " mm^2 exceeds the area of the chip it is stacked on (" +
                          std::to_string(d.area) + " mm^2)");
    }
  }
  return out;
}

}  // namespace chipcost
