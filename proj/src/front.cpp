#include "gfqi/front.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gfqi {

Interval support_of(const FrontDiagram& D, double tol) {
  Interval I;
  auto grow = [&](double x) {
    if (I.empty) {
      I.lo = I.hi = x;
      I.empty = false;
    } else {
      I.lo = std::min(I.lo, x);
      I.hi = std::max(I.hi, x);
    }
  };
  for (const auto& b : D.branches) {
    bool tail = b.left_cusp < 0 || b.right_cusp < 0;
    for (const auto& s : b.samples)
      if (!tail || std::fabs(s.u) > tol || std::fabs(s.y) > tol) grow(s.x);
  }
  for (const auto& c : D.cusps) grow(c.x);
  return I;
}

double front_condition_defect(const FrontDiagram& D) {
  double worst = 0.0;
  for (const auto& b : D.branches)
    for (std::size_t i = 1; i < b.samples.size(); ++i) {
      const auto& p = b.samples[i - 1];
      const auto& s = b.samples[i];
      double dx = s.x - p.x;
      if (dx == 0.0) continue;
      double r = std::fabs((s.u - p.u) - 0.5 * (s.y + p.y) * dx) / std::fabs(dx);
      worst = std::max(worst, r);
    }
  return worst;
}

std::optional<double> branch_height(const Branch& b, double x) {
  const auto& s = b.samples;
  if (s.empty() || x < s.front().x || x > s.back().x) return std::nullopt;
  auto it = std::lower_bound(s.begin(), s.end(), x,
                             [](const FrontSample& p, double v) { return p.x < v; });
  if (it == s.begin()) return it->u;
  auto prev = it - 1;
  if (it == s.end()) return prev->u;
  double dx = it->x - prev->x;
  if (dx == 0.0) return it->u;
  double t = (x - prev->x) / dx;
  return prev->u + t * (it->u - prev->u);
}

int branch_count_at(const FrontDiagram& D, double x) {
  int n = 0;
  for (const auto& b : D.branches)
    if (!b.samples.empty() && b.samples.front().x <= x && x <= b.samples.back().x) ++n;
  return n;
}

namespace {

struct Seg {
  double x0, u0, x1, u1;
};

double point_seg(double x, double u, const Seg& s) {
  double dx = s.x1 - s.x0, du = s.u1 - s.u0;
  double L = dx * dx + du * du;
  double t = L > 0 ? ((x - s.x0) * dx + (u - s.u0) * du) / L : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double ex = s.x0 + t * dx - x, eu = s.u0 + t * du - u;
  return std::sqrt(ex * ex + eu * eu);
}

// Segments of the front clipped to [lo, hi] in x, in either the (x, u) or
// the (x, y) plane.
std::vector<Seg> segments(const FrontDiagram& D, double lo, double hi, bool slope) {
  std::vector<Seg> out;
  for (const auto& b : D.branches)
    for (std::size_t i = 1; i < b.samples.size(); ++i) {
      const auto& p = b.samples[i - 1];
      const auto& s = b.samples[i];
      double a0 = slope ? p.y : p.u, a1 = slope ? s.y : s.u;
      if (s.x < lo || p.x > hi) continue;
      Seg g{p.x, a0, s.x, a1};
      double dx = s.x - p.x;
      if (dx > 0) {
        if (g.x0 < lo) {
          g.u0 = a0 + (lo - p.x) / dx * (a1 - a0);
          g.x0 = lo;
        }
        if (g.x1 > hi) {
          g.u1 = a0 + (hi - p.x) / dx * (a1 - a0);
          g.x1 = hi;
        }
      }
      out.push_back(g);
    }
  return out;
}

// Directed distance: sup over points of A (vertices and segment midpoints)
// of the distance to B. Segments are bucketed by x for speed.
double directed(const std::vector<Seg>& A, const std::vector<Seg>& B) {
  if (A.empty()) return 0.0;
  if (B.empty()) return std::numeric_limits<double>::infinity();
  std::vector<Seg> sorted = B;
  std::sort(sorted.begin(), sorted.end(), [](const Seg& a, const Seg& b) { return a.x0 < b.x0; });
  double max_len = 0.0;
  for (const auto& s : sorted) max_len = std::max(max_len, s.x1 - s.x0);
  double worst = 0.0;
  auto probe = [&](double x, double u) {
    auto from = [&](double v) {
      return std::lower_bound(sorted.begin(), sorted.end(), v,
                              [](const Seg& s, double t) { return s.x0 < t; });
    };
    double best = std::numeric_limits<double>::infinity();
    for (auto it = from(x - max_len); it != sorted.end() && it->x0 <= x; ++it)
      best = std::min(best, point_seg(x, u, *it));
    if (!std::isfinite(best))
      for (const auto& s : sorted) best = std::min(best, point_seg(x, u, s));
    for (auto it = from(x - best - max_len); it != sorted.end() && it->x0 <= x + best; ++it)
      best = std::min(best, point_seg(x, u, *it));
    worst = std::max(worst, best);
  };
  for (const auto& s : A) {
    probe(s.x0, s.u0);
    probe(s.x1, s.u1);
    for (int k = 1; k < 4; ++k) {
      double t = k / 4.0;
      probe(s.x0 + t * (s.x1 - s.x0), s.u0 + t * (s.u1 - s.u0));
    }
  }
  return worst;
}

}  // namespace

double hausdorff_distance(const FrontDiagram& A, const FrontDiagram& B) {
  double lo = std::max(A.x_min, B.x_min), hi = std::min(A.x_max, B.x_max);
  double d = 0.0;
  for (bool slope : {false, true}) {
    auto sa = segments(A, lo, hi, slope), sb = segments(B, lo, hi, slope);
    d = std::max({d, directed(sa, sb), directed(sb, sa)});
  }
  return d;
}

double max_abs_height(const FrontDiagram& D) {
  double m = 0.0;
  for (const auto& b : D.branches)
    for (const auto& s : b.samples) m = std::max(m, std::fabs(s.u));
  return m;
}

FrontDiagram reflect(const FrontDiagram& D) {
  FrontDiagram R = D;
  R.x_min = -D.x_max;
  R.x_max = -D.x_min;
  R.oriented = false;
  R.components = 0;
  for (auto& b : R.branches) {
    std::reverse(b.samples.begin(), b.samples.end());
    for (auto& s : b.samples) {
      s.x = -s.x;
      s.y = -s.y;
    }
    std::swap(b.left_cusp, b.right_cusp);
    b.direction = 0;
    b.component = -1;
  }
  for (auto& c : R.cusps) {
    c.x = -c.x;
    c.side = c.side == CuspSide::left ? CuspSide::right : CuspSide::left;
    c.sense = Vertical::none;
  }
  for (auto& c : R.crossings) {
    c.x = -c.x;
    c.sign = 0;
  }
  return R;
}

}  // namespace gfqi
