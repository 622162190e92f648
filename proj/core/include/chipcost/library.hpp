#pragma once

#include <map>
#include <string>

namespace chipcost {

// Units used throughout: mm, mm^2, W, V, A/mm^2, USD, s, Gbit/s,
// defects/mm^2, pJ/bit. Loaders normalize to these on the way in.

struct IODefinition {
  std::string name;
  double tx_area = 0.0;            // mm^2 per transmit cell
  double rx_area = 0.0;            // mm^2 per receive cell
  double bandwidth = 1.0;          // Gbit/s per instance
  double reach = 1.0;              // mm
  int wires_per_instance = 1;      // bumps per instance
  double energy_per_bit = 0.0;     // pJ/bit
  bool bidirectional = false;

  bool operator==(const IODefinition&) const = default;
};

struct LayerDef {
  std::string name;
  double cost_per_mm2 = 0.0;         // fully utilized wafer, no waste
  double defect_density = 0.0;       // defects/mm^2
  double clustering = 1.0;           // negative binomial alpha
  double critical_area_ratio = 1.0;
  double litho_fraction = 0.0;       // share of layer cost spent in lithography
  double mask_cost = 0.0;
  double stitch_yield = 1.0;         // yield per reticle stitch

  bool operator==(const LayerDef&) const = default;
};

/// Split of design effort by area class.
struct DesignRates {
  double logic = 0.0;   // USD/mm^2
  double memory = 0.0;
  double analog = 0.0;

  bool operator==(const DesignRates&) const = default;
};

struct WaferProcessDef {
  std::string name;
  double wafer_diameter = 300.0;
  double edge_exclusion = 3.0;
  double scribe_x = 0.1;
  double scribe_y = 0.1;
  double reticle_x = 33.0;
  double reticle_y = 26.0;
  bool grid_dicing = true;
  DesignRates nre_frontend;
  DesignRates nre_backend;

  double usable_radius() const { return wafer_diameter / 2.0 - edge_exclusion; }
  double reticle_area() const { return reticle_x * reticle_y; }

  bool operator==(const WaferProcessDef&) const = default;
};

struct AssemblyProcessDef {
  std::string name;
  double t_pnp = 0.0;                  // s per pick-and-place step
  double t_bond = 0.0;                 // s per bonding step
  int group_pnp = 1;
  int group_bond = 1;
  double rate_pnp = 0.0;               // USD/s
  double rate_bond = 0.0;              // USD/s
  double material_cost = 0.0;          // USD/mm^2 of bonded area
  double die_separation = 0.1;
  double stack_edge_exclusion = 0.0;
  double bonding_pitch = 0.1;
  double max_current_density = 1.0;    // A/mm^2
  double bond_yield_per_pin = 1.0;
  double alignment_yield_per_die = 1.0;
  double dielectric_defect_density = 0.0;  // defects/mm^2, hybrid bonding only

  bool operator==(const AssemblyProcessDef&) const = default;
};

struct TestProcessDef {
  std::string name;
  double machine_rate = 0.0;       // USD/s
  double pattern_count = 0.0;
  double scan_chain_length = 0.0;
  double test_clock_period = 0.0;  // s
  double fault_coverage = 0.0;
  int num_scan_chains = 0;
  int ios_per_scan_chain = 0;
  int test_io_offset = 0;

  bool operator==(const TestProcessDef&) const = default;
};

/// Named process definitions referenced by chips. Immutable once loaded;
/// share through `std::shared_ptr<const ProcessLibrary>`.
struct ProcessLibrary {
  std::map<std::string, LayerDef> layers;
  std::map<std::string, IODefinition> ios;
  std::map<std::string, WaferProcessDef> wafer_processes;
  std::map<std::string, AssemblyProcessDef> assembly_processes;
  std::map<std::string, TestProcessDef> test_processes;

  bool empty() const {
    return layers.empty() && ios.empty() && wafer_processes.empty() &&
           assembly_processes.empty() && test_processes.empty();
  }

  bool operator==(const ProcessLibrary&) const = default;
};

}  // namespace chipcost
