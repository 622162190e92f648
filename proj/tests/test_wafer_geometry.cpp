#include <cmath>
#include <numeric>
#include <random>

#include "chipcost/wafer_geometry.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace chipcost;

namespace {

WaferProcessDef Wafer300(bool grid) {
  WaferProcessDef w;
  w.wafer_diameter = 300;
  w.edge_exclusion = 3;
  w.scribe_x = w.scribe_y = 0.1;
  w.grid_dicing = grid;
  return w;
}

}  // namespace

TEST_CASE("10 x 10 die on a 300 mm wafer matches the grid enumerator") {
  const auto r = DiesPerWafer(10, 10, Wafer300(true));
  const oracle::Bounds b = oracle::GridDies(10.1, 10.1, 147.0);
  CHECK(r.dies_per_wafer >= b.lo);
  CHECK(r.dies_per_wafer <= b.hi);
  CHECK(std::accumulate(r.row_counts.begin(), r.row_counts.end(), std::int64_t{0}) ==
        r.dies_per_wafer);
}

TEST_CASE("die of side r matches the enumerator") {
  const auto r = PackGrid(147.0, 147.0, 147.0);
  const oracle::Bounds b = oracle::GridDies(147.0, 147.0, 147.0, 0.5);
  CHECK(r.dies_per_wafer >= b.lo);
  CHECK(r.dies_per_wafer <= b.hi);
  // Two side by side would need a half-diagonal of sqrt(147^2 + 73.5^2) > r.
  CHECK(r.dies_per_wafer == 1);
}

TEST_CASE("dies that cannot fit give zero") {
  CHECK(DiesPerWafer(220, 220, Wafer300(true)).dies_per_wafer == 0);
  CHECK(DiesPerWafer(220, 220, Wafer300(false)).dies_per_wafer == 0);
  CHECK(PackFree(10, 2 * 147.0, 147.0).dies_per_wafer == 0);
  CHECK(PackGrid(10, 2 * 147.0, 147.0).dies_per_wafer == 0);
}

TEST_CASE("free dicing matches the row oracle and never loses to the grid") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> side(2.0, 40.0);
  for (int i = 0; i < 25; ++i) {
    const double x = side(rng), y = side(rng);
    CAPTURE(x);
    CAPTURE(y);
    const auto free = PackFree(x, y, 147.0);
    const auto grid = PackGrid(x, y, 147.0);
    const oracle::Bounds b = oracle::FreeDies(x, y, 147.0, 0.01);
    CHECK(free.dies_per_wafer >= b.lo);
    CHECK(free.dies_per_wafer <= b.hi);
    CHECK(free.dies_per_wafer >= grid.dies_per_wafer);
  }
}

TEST_CASE("first-column growth never beats the full origin search") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> side(3.0, 60.0);
  for (int i = 0; i < 50; ++i) {
    const double x = side(rng), y = side(rng);
    CHECK(PackGridFirstColumn(x, y, 147.0).dies_per_wafer <= PackGrid(x, y, 147.0).dies_per_wafer);
  }
}

TEST_CASE("grid count does not increase with pitch and covers at most the wafer") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> side(2.0, 50.0), grow(1.0, 1.5);
  for (int i = 0; i < 60; ++i) {
    const double x = side(rng), y = side(rng), k = grow(rng);
    const auto small = PackGrid(x, y, 147.0);
    CHECK(PackGrid(x * k, y, 147.0).dies_per_wafer <= small.dies_per_wafer);
    CHECK(PackGrid(x, y * k, 147.0).dies_per_wafer <= small.dies_per_wafer);
    CHECK(static_cast<double>(small.dies_per_wafer) * x * y <= M_PI * 147.0 * 147.0);
  }
}

TEST_CASE("reticle fit") {
  SUBCASE("exact fit") {
    const ReticleFit f = FitReticle(858, 858);
    CHECK(f.k_reticle == 1);
    CHECK(f.utilization == doctest::Approx(1.0));
    CHECK(f.k_stitch == 0);
  }
  SUBCASE("four copies of a 200 mm^2 die") {
    const ReticleFit f = FitReticle(200, 858);
    CHECK(f.k_reticle == 4);
    CHECK(f.utilization == doctest::Approx(800.0 / 858.0));
    CHECK(f.utilization == doctest::Approx(0.9324).epsilon(1e-4));
  }
  SUBCASE("stitched die") {
    const ReticleFit f = FitReticle(2000, 858);
    CHECK(f.n_reticles == 3);
    CHECK(f.k_stitch == StitchCount(3));
  }
}

TEST_CASE("stitch counts") {
  CHECK(StitchCount(1) == 0);
  CHECK(StitchCount(2) == 1);
  CHECK(StitchCount(4) == 4);
  CHECK(StitchCount(9) == 12);
  for (int n = 1; n <= 50; ++n) CHECK(StitchCount(n) == oracle::StitchEdgesByConstruction(n));
}

TEST_CASE("geometry cache returns what the direct call returns") {
  GeometryCache cache;
  const WaferProcessDef w = Wafer300(true);
  const auto a = cache.DiesPerWafer(12, 9, w);
  const auto b = cache.DiesPerWafer(12, 9, w);
  CHECK(cache.size() == 1);
  CHECK(a.dies_per_wafer == DiesPerWafer(12, 9, w).dies_per_wafer);
  CHECK(b.row_counts == a.row_counts);
}
