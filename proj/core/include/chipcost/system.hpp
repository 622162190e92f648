#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chipcost/library.hpp"

namespace chipcost {

/// Fractions of core area that are logic, memory and analog design.
struct DesignFractions {
  double logic = 1.0;
  double memory = 0.0;
  double analog = 0.0;

  bool operator==(const DesignFractions&) const = default;
};

/// One element of the stack: a die, an interposer, a substrate or a PCB.
/// Chips bonded on top of this one are held in `children`.
struct ChipSpec {
  std::string name;
  double core_area = 0.0;     // mm^2
  double core_power = 0.0;    // W
  double core_voltage = 1.0;  // V
  std::optional<double> black_box_area;
  std::optional<double> black_box_power;
  double quantity = 1.0;      // units manufactured, amortizes NRE
  bool buried = false;        // embedded bridge: takes no surface area on the parent
  DesignFractions design_fractions;
  double reticle_share = 1.0;
  std::vector<std::string> layer_stack;
  std::string wafer_process;
  std::string assembly_process;  // bonds children onto this chip
  std::string test_process_self;
  std::string test_process_assembly;
  std::vector<ChipSpec> children;

  bool operator==(const ChipSpec&) const = default;
};

struct NetSpec {
  std::string from;
  std::string to;
  std::string io_type;
  std::optional<double> bandwidth;     // Gbit/s
  std::optional<std::int64_t> count;   // explicit IO-cell instances
  double average_utilization = 1.0;

  bool operator==(const NetSpec&) const = default;
};

/// Unvalidated system description as read from the chip and netlist files.
struct SystemSpec {
  std::string name;
  ChipSpec root;
  std::vector<NetSpec> nets;

  bool operator==(const SystemSpec&) const = default;
};

/// A chip after validation: flattened into pre-order with every process
/// reference resolved against the library.
struct ResolvedChip {
  const ChipSpec* spec = nullptr;  // points into ValidatedSystem's SystemSpec
  int index = 0;
  int parent = -1;
  int depth = 0;
  std::vector<int> children;
  std::string path;
  std::vector<const LayerDef*> layers;
  const WaferProcessDef* wafer = nullptr;
  const AssemblyProcessDef* assembly = nullptr;  // bonds this chip's children
  const AssemblyProcessDef* attach = nullptr;    // bonds this chip to its parent
  const TestProcessDef* self_test = nullptr;
  const TestProcessDef* assembly_test = nullptr;
};

constexpr int kExternal = -1;

struct ResolvedNet {
  const NetSpec* spec = nullptr;
  int index = 0;
  int from = kExternal;
  int to = kExternal;
  const IODefinition* io = nullptr;
  std::string path;

  bool external() const { return from == kExternal || to == kExternal; }
};

/// Immutable, fully cross-referenced system. Cheap to share across threads.
class ValidatedSystem {
 public:
  /// Throws ValidationError naming the offending element path.
  static ValidatedSystem Validate(SystemSpec spec, std::shared_ptr<const ProcessLibrary> library);

  const SystemSpec& spec() const { return data_->spec; }
  const ProcessLibrary& library() const { return *library_; }
  std::shared_ptr<const ProcessLibrary> library_ptr() const { return library_; }

  std::span<const ResolvedChip> chips() const { return data_->chips; }
  std::span<const ResolvedNet> nets() const { return data_->nets; }
  const ResolvedChip& chip(int index) const { return data_->chips.at(index); }
  const ResolvedChip& root() const { return data_->chips.front(); }
  std::size_t size() const { return data_->chips.size(); }

  /// -1 when the name is not part of the tree.
  int index_of(std::string_view name) const;

  /// Children before parents.
  const std::vector<int>& post_order() const { return data_->post_order; }

 private:
  struct Data {
    SystemSpec spec;
    std::vector<ResolvedChip> chips;
    std::vector<ResolvedNet> nets;
    std::unordered_map<std::string, int> by_name;
    std::vector<int> post_order;
  };

  std::shared_ptr<const Data> data_;
  std::shared_ptr<const ProcessLibrary> library_;
};

/// Range-checks every library entry. Throws ValidationError.
void ValidateLibrary(const ProcessLibrary& library);

}  // namespace chipcost
