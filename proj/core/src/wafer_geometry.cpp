#include "chipcost/wafer_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace chipcost {

namespace {

// Slack that lets a die touch the wafer edge exactly.
constexpr double kEps = 1e-9;

// Geometry of row `j` whose bottom edge sits at v + j*Y.
class RowModel {
 public:
  RowModel(double X, double Y, double r) : X_(X), Y_(Y), r_(r) {}

  // Chord length available to row j, or -1 if the row leaves the disk.
  double Chord(int j, double v) const {
    const double y0 = v + j * Y_;
    const double y1 = y0 + Y_;
    if (y0 < -r_ - kEps || y1 > r_ + kEps) return -1.0;
    const double m = std::max(std::abs(y0), std::abs(y1));
    return 2.0 * std::sqrt(std::max(0.0, r_ * r_ - m * m));
  }

  int Fit(double L) const { return static_cast<int>(std::floor((L + kEps) / X_)); }

  // Range of v in [0, Y/2] where row j stays inside the disk.
  std::pair<double, double> Domain(int j) const {
    return {std::max(0.0, -r_ - j * Y_), std::min(Y_ / 2.0, r_ - (j + 1) * Y_)};
  }

  double X() const { return X_; }

  // Solutions v of L_j(v) + L_k(v) = T. On [0, Y/2] the farthest edge of row
  // j from the diameter is x_j(v) = p + s*v, so the equation reduces to a
  // quadratic.
  std::vector<double> SumLevel(int j, int k, double T) const {
    std::vector<double> out;
    const auto [p, sp] = Edge(j);
    const auto [q, sq] = Edge(k);
    if (j == k) {
      const double x2 = r_ * r_ - T * T / 16.0;
      if (x2 >= 0) out.push_back((std::sqrt(x2) - p) / sp);
      return out;
    }
    // With a = sqrt(r^2 - x^2), b = sqrt(r^2 - y^2), a + b = t and
    // a - b = (y^2 - x^2)/t, which is linear in v.
    const double t = T / 2.0;
    if (!(t > 0)) return out;
    const double alpha = (t + (q * q - p * p) / t) / 2.0;
    const double beta = (q * sq - p * sp) / t;
    const double A = beta * beta + 1.0;
    const double B = 2.0 * (alpha * beta + p * sp);
    const double C = alpha * alpha + p * p - r_ * r_;
    const double disc = B * B - 4 * A * C;
    if (disc < 0) {
      if (disc > -1e-9 * B * B) out.push_back(-B / (2 * A));
      return out;
    }
    const double root = std::sqrt(disc);
    // Numerically stable pair.
    const double qq = -0.5 * (B + std::copysign(root, B));
    if (qq != 0) {
      out.push_back(qq / A);
      out.push_back(C / qq);
    } else {
      out.push_back(0.0);
    }
    return out;
  }

 private:
  std::pair<double, double> Edge(int j) const {
    return j >= 0 ? std::pair{(j + 1) * Y_, 1.0} : std::pair{-j * Y_, -1.0};
  }

  double X_, Y_, r_;
};

struct Evaluation {
  std::int64_t count = 0;
  double u = 0.0;
};

// Best count over all horizontal offsets for vertical offset v.
//
// A row with chord L holds n = floor(L/X) dies for some horizontal offsets and
// n-1 for the rest. The offsets admitting n form an arc of half width
// h = (L - nX)/2 on the circle R/XZ, centered at 0 when n is even and at X/2
// when n is odd. Folding the circle onto p in [0, X/2], an even row covers
// p <= h and an odd row covers p >= X/2 - h. Call that bound tau. tau moves
// continuously with v (a row changing parity does so at tau = 0 or X/2), so
// the rows stay nearly sorted by tau from one call to the next.
class Evaluator {
 public:
  Evaluator(const RowModel& model, const std::vector<int>& rows) : m_(model) {
    for (int j : rows) items_.push_back({j, 0.0, 0, false});
  }

  Evaluation Run(double v, std::vector<int>* row_counts = nullptr) {
    const double X = m_.X();
    std::int64_t base = 0;
    int evens = 0;
    for (auto& it : items_) {
      const double L = m_.Chord(it.j, v);
      it.n = L < 0 ? 0 : m_.Fit(L);
      if (it.n < 1) {
        it.tau = X;  // sorts last, never counted
        continue;
      }
      const double h = std::clamp((L - it.n * X) / 2.0, 0.0, X / 2.0);
      it.odd = it.n % 2 != 0;
      it.tau = it.odd ? X / 2.0 - h : h;
      base += it.n - 1;
      if (!it.odd) ++evens;
    }
    for (std::size_t i = 1; i < items_.size(); ++i) {
      for (std::size_t k = i; k > 0 && items_[k].tau < items_[k - 1].tau; --k)
        std::swap(items_[k], items_[k - 1]);
    }

    // Cut at each group of equal tau: odd rows at or before it plus even rows
    // at or after it.
    std::int64_t best = evens;
    double best_p = 0.0;
    int odd_before = 0, even_before = 0;
    for (std::size_t i = 0; i < items_.size() && items_[i].n > 0;) {
      std::size_t g = i;
      int odd_here = 0, even_here = 0;
      while (g < items_.size() && items_[g].n > 0 && items_[g].tau - items_[i].tau <= kEps) {
        (items_[g].odd ? odd_here : even_here)++;
        ++g;
      }
      const std::int64_t d = odd_before + odd_here + (evens - even_before);
      if (d > best) {
        best = d;
        best_p = std::clamp(items_[i].tau, 0.0, X / 2.0);
      }
      odd_before += odd_here;
      even_before += even_here;
      i = g;
    }
    if (odd_before > best) {
      best = odd_before;
      best_p = X / 2.0;
    }

    if (row_counts) {
      std::vector<std::pair<int, int>> by_row;
      for (const auto& it : items_) {
        if (it.n < 1) continue;
        const bool covered = it.odd ? best_p >= it.tau - kEps : best_p <= it.tau + kEps;
        by_row.emplace_back(it.j, it.n - 1 + (covered ? 1 : 0));
      }
      std::sort(by_row.begin(), by_row.end());
      row_counts->clear();
      for (const auto& [j, n] : by_row) row_counts->push_back(n);
    }
    return {base + best, best_p};
  }

 private:
  struct Item {
    int j;
    double tau;
    int n;
    bool odd;
  };
  const RowModel& m_;
  std::vector<Item> items_;
};

DiePackingResult CountLattice(double X, double Y, double r, double u, double v) {
  DiePackingResult out;
  out.offset_x = u;
  out.offset_y = v;
  const int jlo = static_cast<int>(std::floor((-r - v) / Y)) - 1;
  const int jhi = static_cast<int>(std::ceil((r - v) / Y)) + 1;
  for (int j = jlo; j <= jhi; ++j) {
    const double y0 = v + j * Y;
    const double y1 = y0 + Y;
    if (y0 < -r - kEps || y1 > r + kEps) continue;
    const double m = std::max(std::abs(y0), std::abs(y1));
    const double c = std::sqrt(std::max(0.0, r * r - m * m));
    const double ilo = std::ceil((-c - u) / X - kEps);
    const double ihi = std::floor((c - u) / X + kEps) - 1;
    if (ihi >= ilo) {
      const int n = static_cast<int>(ihi - ilo + 1);
      out.row_counts.push_back(n);
      out.dies_per_wafer += n;
    }
  }
  return out;
}

bool Degenerate(double X, double Y, double r) {
  return !(X > 0 && Y > 0 && r > 0) || X * X + Y * Y > 4 * r * r + kEps;
}

}  // namespace

DiePackingResult PackGrid(double X, double Y, double r) {
  if (Degenerate(X, Y, r)) return {};
  const RowModel model(X, Y, r);
  const int jlo = static_cast<int>(std::floor(-r / Y)) - 1;
  const int jhi = static_cast<int>(std::ceil(r / Y)) + 1;

  // Rows that can hold a die somewhere in v in [0, Y/2]. Each chord is
  // monotone in v on that range, so its extremes sit at the domain ends.
  struct Span {
    int j;
    double a, b, lmin, lmax;
  };
  std::vector<Span> spans;
  for (int j = jlo; j <= jhi; ++j) {
    auto [a, b] = model.Domain(j);
    if (a > b) continue;
    const double la = model.Chord(j, a), lb = model.Chord(j, b);
    const double lmax = std::max(la, lb);
    if (lmax + kEps < X) continue;
    spans.push_back({j, a, b, std::min(la, lb), lmax});
  }

  // The best count is piecewise constant in v and only changes where two arcs
  // start to overlap or a row gains a die: L_j(v) + L_k(v) = m*X. Sums of the
  // concave chords are concave, so each level is hit at most twice.
  std::vector<double> events{0.0, Y / 2.0};
  for (std::size_t p = 0; p < spans.size(); ++p) {
    for (std::size_t q = p; q < spans.size(); ++q) {
      const Span& s = spans[p];
      const Span& t = spans[q];
      const double a = std::max(s.a, t.a), b = std::min(s.b, t.b);
      if (a > b) continue;
      // Only even m matter: odd multiples leave the arc order unchanged.
      const int m_lo = static_cast<int>(std::ceil((s.lmin + t.lmin) / X - kEps));
      const int m_hi = static_cast<int>(std::floor((s.lmax + t.lmax) / X + kEps));
      if (m_hi < m_lo) continue;
      auto g = [&](double v) {
        return std::max(0.0, model.Chord(s.j, v)) + std::max(0.0, model.Chord(t.j, v));
      };
      for (int m = m_lo + (m_lo % 2 != 0); m <= m_hi; m += 2) {
        const double target = m * X;
        for (double v : model.SumLevel(s.j, t.j, target)) {
          if (v < a - 1e-12 || v > b + 1e-12) continue;
          v = std::clamp(v, a, b);
          if (std::abs(g(v) - target) <= 1e-7 * std::max(1.0, target)) events.push_back(v);
        }
      }
    }
  }
  std::sort(events.begin(), events.end());

  std::vector<int> rows;
  for (const auto& sp : spans) rows.push_back(sp.j);
  Evaluator eval(model, rows);
  Evaluation best;
  double best_v = 0.0;
  // Between events the count is constant and no larger than at the event
  // before (cells are closed sets). One event moves at most two rows, so the
  // count can rise by at most 2 per coinciding event. Skip events whose bound
  // cannot beat the best seen.
  std::int64_t bound = std::numeric_limits<std::int64_t>::max() / 2;
  for (std::size_t i = 0; i < events.size();) {
    const double v = events[i];
    std::size_t k = i;
    while (k < events.size() && events[k] - v <= 1e-12) ++k;
    bound += 2 * static_cast<std::int64_t>(k - i);
    i = k;
    if (bound <= best.count) continue;
    const Evaluation e = eval.Run(v);
    bound = e.count;
    if (e.count > best.count) {
      best = e;
      best_v = v;
    }
  }

  DiePackingResult out;
  out.dies_per_wafer = best.count;
  out.offset_x = best.u;
  out.offset_y = best_v;
  eval.Run(best_v, &out.row_counts);
  return out;
}

DiePackingResult PackGridFirstColumn(double X, double Y, double r) {
  if (Degenerate(X, Y, r)) return {};
  DiePackingResult best;
  const int hmax = static_cast<int>(std::floor(2 * r / Y + kEps));
  for (int h = 1; h <= hmax; ++h) {
    const double half = h * Y / 2.0;
    if (half > r) break;
    const double x0 = -std::sqrt(std::max(0.0, r * r - half * half));
    auto res = CountLattice(X, Y, r, x0, -half);
    if (res.dies_per_wafer > best.dies_per_wafer) best = std::move(res);
  }
  return best;
}

DiePackingResult PackFree(double X, double Y, double r) {
  if (Degenerate(X, Y, r)) return {};
  auto rows = [&](double v) {
    DiePackingResult out;
    out.offset_y = v;
    const int jlo = static_cast<int>(std::floor((-r - v) / Y)) - 1;
    const int jhi = static_cast<int>(std::ceil((r - v) / Y)) + 1;
    for (int j = jlo; j <= jhi; ++j) {
      const double y0 = v + j * Y;
      const double y1 = y0 + Y;
      if (y0 < -r - kEps || y1 > r + kEps) continue;
      const double m = std::max(std::abs(y0), std::abs(y1));
      const double c = std::sqrt(std::max(0.0, r * r - m * m));
      const int n = static_cast<int>(std::floor((2 * c + kEps) / X));
      if (n > 0) {
        out.row_counts.push_back(n);
        out.dies_per_wafer += n;
      }
    }
    return out;
  };
  // A row's count only changes when its far edge crosses sqrt(r^2 - (nX/2)^2)
  // for some n. Counts are upper semicontinuous in v, so the best offset is one
  // that puts a row edge exactly on such a threshold.
  std::vector<double> candidates{0.0, Y / 2.0};
  const int nmax = static_cast<int>(std::floor(2 * r / X + kEps));
  for (int n = 0; n <= nmax; ++n) {
    const double half = std::min(r, n * X / 2.0);
    const double t = std::sqrt(std::max(0.0, r * r - half * half));
    for (double edge : {t, -t}) candidates.push_back(edge - Y * std::floor(edge / Y));
  }
  std::sort(candidates.begin(), candidates.end());
  DiePackingResult best;
  bool first = true;
  for (double v : candidates) {
    auto res = rows(v);
    if (first || res.dies_per_wafer > best.dies_per_wafer) best = std::move(res);
    first = false;
  }
  best.offset_y = best.offset_y - Y * std::floor(best.offset_y / Y);
  return best;
}

DiePackingResult DiesPerWafer(double die_x, double die_y, const WaferProcessDef& wafer) {
  const double X = die_x + wafer.scribe_x;
  const double Y = die_y + wafer.scribe_y;
  const double r = wafer.usable_radius();
  return wafer.grid_dicing ? PackGrid(X, Y, r) : PackFree(X, Y, r);
}

ReticleFit FitReticle(double area, double reticle_area) {
  ReticleFit fit;
  if (!(area > 0) || !(reticle_area > 0)) return fit;
  if (area <= reticle_area * (1 + 1e-12)) {
    fit.k_reticle = std::max(1, static_cast<int>(std::floor(reticle_area / area + 1e-9)));
    fit.utilization = std::min(1.0, fit.k_reticle * area / reticle_area);
    return fit;
  }
  fit.n_reticles = static_cast<int>(std::ceil(area / reticle_area - 1e-9));
  fit.utilization = std::min(1.0, area / (fit.n_reticles * reticle_area));
  fit.k_stitch = StitchCount(fit.n_reticles);
  return fit;
}

int StitchCount(int n) {
  if (n <= 1) return 0;
  int s = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while ((s + 1) * (s + 1) <= n) ++s;
  while (s * s > n) --s;
  const int rest = n - s * s;
  return 2 * s * (s - 1) + 2 * rest - (rest + s - 1) / s;
}

DiePackingResult GeometryCache::DiesPerWafer(double die_x, double die_y,
                                             const WaferProcessDef& wafer) {
  const Key key{die_x + wafer.scribe_x, die_y + wafer.scribe_y, wafer.usable_radius(),
                wafer.grid_dicing};
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  auto result = chipcost::DiesPerWafer(die_x, die_y, wafer);
  std::unique_lock lock(mutex_);
  return entries_.emplace(key, std::move(result)).first->second;
}

std::size_t GeometryCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void GeometryCache::clear() {
  std::unique_lock lock(mutex_);
  entries_.clear();
}

}  // namespace chipcost
