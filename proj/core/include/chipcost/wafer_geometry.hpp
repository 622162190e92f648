#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <tuple>
#include <vector>

#include "chipcost/library.hpp"

namespace chipcost {

/// Result of packing identical rectangular dies on a round wafer.
struct DiePackingResult {
  std::int64_t dies_per_wafer = 0;
  /// Dies per row of the winning placement, bottom row first. Rows without
  /// dies are omitted.
  std::vector<int> row_counts;
  /// Lattice origin of the winning placement, taken modulo the die pitch.
  double offset_x = 0.0;
  double offset_y = 0.0;
};

struct ReticleFit {
  int k_reticle = 1;          // copies of the die per reticle field
  double utilization = 1.0;   // fraction of the exposure field that is used
  int n_reticles = 1;         // exposures needed for one die
  int k_stitch = 0;           // stitched edges between those exposures
};

// The packing kernels take the die pitch (die plus scribe) and the usable
// wafer radius directly. Cells must lie fully inside the closed disk.

/// Best axis-aligned lattice placement over every lattice origin.
DiePackingResult PackGrid(double pitch_x, double pitch_y, double radius);

/// Lattice placement found by growing the first column from the left edge
/// one die at a time and keeping the best count. Never beats PackGrid.
DiePackingResult PackGridFirstColumn(double pitch_x, double pitch_y, double radius);

/// Rows placed independently (free dicing): each row holds floor(chord / X)
/// dies, and the vertical row offset is searched exactly.
DiePackingResult PackFree(double pitch_x, double pitch_y, double radius);

/// Dispatches on `wafer.grid_dicing` after adding scribe and edge exclusion.
/// Dies larger than the usable circle give 0.
DiePackingResult DiesPerWafer(double die_x, double die_y, const WaferProcessDef& wafer);

ReticleFit FitReticle(double area, double reticle_area);

/// Stitched edges when `n_reticles` exposures are laid out as the largest
/// square that fits, followed by one more column and then one more row.
int StitchCount(int n_reticles);

/// Thread-safe memo for DiesPerWafer. Owned by the caller, typically shared by
/// every evaluation in a sweep.
class GeometryCache {
 public:
  DiePackingResult DiesPerWafer(double die_x, double die_y, const WaferProcessDef& wafer);
  std::size_t size() const;
  void clear();

 private:
  using Key = std::tuple<double, double, double, bool>;
  mutable std::shared_mutex mutex_;
  std::map<Key, DiePackingResult> entries_;
};

}  // namespace chipcost
