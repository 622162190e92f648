#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include <boost/multiprecision/cpp_dec_float.hpp>

namespace oracle {

namespace {

// Lattice cells [u + iX, u + (i+1)X] x [v + jY, v + (j+1)Y] inside the disk.
std::int64_t LatticeCount(double X, double Y, double r, double u, double v) {
  std::int64_t total = 0;
  const int jlo = static_cast<int>(std::floor((-r - v) / Y)) - 1;
  const int jhi = static_cast<int>(std::ceil((r - v) / Y)) + 1;
  for (int j = jlo; j <= jhi; ++j) {
    const double y0 = v + j * Y, y1 = y0 + Y;
    if (y0 < -r || y1 > r) continue;
    const double m = std::max(std::abs(y0), std::abs(y1));
    const double c = std::sqrt(r * r - m * m);
    // i with u + iX >= -c and u + (i+1)X <= c
    const double first = std::ceil((-c - u) / X);
    const double last = std::floor((c - u) / X) - 1;
    if (last >= first) total += static_cast<std::int64_t>(last - first + 1);
  }
  return total;
}

std::int64_t FreeCount(double X, double Y, double r, double v) {
  std::int64_t total = 0;
  const int jlo = static_cast<int>(std::floor((-r - v) / Y)) - 1;
  const int jhi = static_cast<int>(std::ceil((r - v) / Y)) + 1;
  for (int j = jlo; j <= jhi; ++j) {
    const double y0 = v + j * Y, y1 = y0 + Y;
    if (y0 < -r || y1 > r) continue;
    const double m = std::max(std::abs(y0), std::abs(y1));
    total += static_cast<std::int64_t>(std::floor(2 * std::sqrt(r * r - m * m) / X));
  }
  return total;
}

}  // namespace

Bounds GridDies(double X, double Y, double r, double step) {
  const double grow = step * std::sqrt(2.0) / 2 + 1e-6;
  Bounds b;
  for (double u = 0; u < X; u += step) {
    for (double v = 0; v < Y; v += step) {
      b.lo = std::max(b.lo, LatticeCount(X, Y, r, u, v));
      b.hi = std::max(b.hi, LatticeCount(X, Y, r + grow, u, v));
    }
  }
  return b;
}

Bounds FreeDies(double X, double Y, double r, double step) {
  const double grow = step / 2 + 1e-6;
  Bounds b;
  for (double v = 0; v < Y; v += step) {
    b.lo = std::max(b.lo, FreeCount(X, Y, r, v));
    b.hi = std::max(b.hi, FreeCount(X, Y, r + grow, v));
  }
  return b;
}

std::int64_t FreeDiesScan(double X, double Y, double r, double step) {
  std::int64_t best = 0;
  for (double v = 0; v < Y; v += step) best = std::max(best, FreeCount(X, Y, r, v));
  return best;
}

int StitchEdgesByConstruction(int n) {
  std::set<std::pair<int, int>> cells;
  int side = 0;
  while ((side + 1) * (side + 1) <= n) ++side;
  for (int x = 0; x < side; ++x)
    for (int y = 0; y < side; ++y) cells.insert({x, y});
  int left = n - side * side;
  for (int y = 0; y < side && left > 0; ++y, --left) cells.insert({side, y});
  for (int x = 0; x < side && left > 0; ++x, --left) cells.insert({x, side});
  int edges = 0;
  for (const auto& [x, y] : cells) {
    edges += cells.count({x + 1, y});
    edges += cells.count({x, y + 1});
  }
  return edges;
}

double DefectYieldHighPrecision(double d_times_a, double alpha) {
  using big = boost::multiprecision::cpp_dec_float_50;
  const big a(alpha);
  return static_cast<double>(boost::multiprecision::pow(big(1) + big(d_times_a) / a, -a));
}

HandResult HandFixture() {
  // Library (tests/fixtures/hand/library.xml).
  const double kPi = std::numbers::pi;
  const double r = 300.0 / 2 - 5;              // usable radius
  const double scribe = 0.1;
  const double reticle = 33.0 * 26.0;          // 858
  const double pitch = 0.1, j_max = 1000.0;
  const double p_pad = 1.0 * j_max * kPi * (pitch / 4) * (pitch / 4);  // V = 1 everywhere

  // Net a -> b: 100 Gbit/s over 50 Gbit/s cells = 2 instances, 10 wires each.
  const double instances = 2, wires = 20;
  const double io_watts = 1.0 * 100 * 0.5 * 1e-3;

  // Die a: core 36, two TX cells of 0.5.
  const double a_core = 36 + instances * 0.5;
  const double a_power = 10 + io_watts;
  const double a_pads = wires + 2 * std::ceil(a_power / p_pad) + (2 * 2 + 1);
  // Die b: core 64, two RX cells of 0.25.
  const double b_core = 64 + instances * 0.25;
  const double b_power = 20 + io_watts;
  const double b_pads = wires + 2 * std::ceil(b_power / p_pad) + (2 * 2 + 1);

  HandResult h;
  // Pads are small next to the cores, so the core + IO term sets the area.
  h.area_a = std::max(a_core, a_pads * pitch * pitch);
  h.area_b = std::max(b_core, b_pads * pitch * pitch);
  // Interposer: children packed with no separation inside a 1 mm ring.
  const double stack_side = std::sqrt(h.area_a + h.area_b) + 2 * 1.0;
  const double i_power = a_power + b_power;
  const double i_pads = 2 * std::ceil(i_power / p_pad);
  h.area_interposer = std::max(stack_side * stack_side, i_pads * pitch * pitch);

  auto dies = [&](double area) {
    const double side = std::sqrt(area);
    return FreeDiesScan(side + scribe, side + scribe, r);
  };
  h.dpw_a = dies(h.area_a);
  h.dpw_b = dies(h.area_b);
  h.dpw_interposer = dies(h.area_interposer);

  auto wafer_share = [&](double cost, std::int64_t n) { return cost * kPi * r * r / n; };
  auto litho = [&](double p, double area) {
    const double k = std::floor(reticle / area);
    return 1 - p + p / (k * area / reticle);
  };

  // Self test: 0.05 USD/s * 1000 patterns * 1000 cells * 1 us.
  const double sort_cost = 0.05 * 1000 * 1000 * 1e-6;
  const double final_cost = 0.05 * 2000 * 1000 * 1e-6;

  const double ya = std::pow(1 + 0.002 * (a_core * 0.5) / 2, -2.0);
  const double yb = std::pow(1 + 0.002 * (b_core * 0.5) / 2, -2.0);
  const double ya_t = 1 - 0.9 * (1 - ya), yb_t = 1 - 0.9 * (1 - yb);
  const double ca = (wafer_share(0.1, h.dpw_a) * litho(0.2, h.area_a) + sort_cost) / ya_t;
  const double cb = (wafer_share(0.1, h.dpw_b) * litho(0.2, h.area_b) + sort_cost) / yb_t;
  const double qa = ya / ya_t, qb = yb / yb_t;

  // Interposer has no core or IO area, no stitches and no self test.
  const double ci = wafer_share(0.01, h.dpw_interposer);

  // Assembly: 2 dies, pick-and-place one at a time, bond two at a time.
  const double c_asm = 0.01 * 2 * 10 + 0.02 * 1 * 20 + 0.001 * (h.area_a + h.area_b);
  const double pins = a_pads + b_pads;
  const double y_asm = std::pow(0.99999, pins) * std::pow(0.999, 2);
  const double y_true = 1.0 * y_asm * qa * qb;
  const double y_tested = 1 - 0.8 * (1 - y_true);
  h.c_re = (c_asm + final_cost + ci + ca + cb) / y_tested;
  h.quality = y_true / y_tested;
  h.y_chip = 1.0 * y_asm * qa * qb;

  const double nre_a = (36 * (1000 * 0.5 + 100 * 0.5) + 36 * (500 * 0.5 + 50 * 0.5) + 1e6) / 1000;
  const double nre_b = (64 * 1000 + 64 * 500 + 1e6) / 2000;
  const double nre_i = 1e5 / 1000;
  h.c_nre = nre_a + nre_b + nre_i;
  return h;
}

}  // namespace oracle
