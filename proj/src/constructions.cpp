#include "gfqi/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gfqi {

namespace {

Expr q_var() { return Expr::variable("q"); }

// w_i -> w_{i + offset} for i = 1..k.
Expr shift_fiber(const Expr& e, int k, int offset) {
  if (offset == 0) return e;
  Bindings b;
  for (int i = 1; i <= k; ++i) b.emplace(fiber_var(i), Expr::variable(fiber_var(i + offset)));
  return substitute(e, b);
}

Expr at_base(const Expr& e, const Expr& q) { return substitute(e, {{"q", q}}); }

GFQI finish(GFQI G, const std::string& name) {
  G.name = name;
  return G;
}

std::string label(const GFQI& F) { return F.name.empty() ? "F" : F.name; }

void need_base1(const GFQI& F, const char* op) {
  if (F.base_dim != 1) throw ValidationError(std::string(op) + " needs a base_dim 1 gf");
}

// ----- L_H profile --------------------------------------------------------

constexpr double kWidth = 0.8;    // bump radius of the tilt in w
constexpr double kUpper = 2.2;    // tilt center over the plateau
constexpr double kLower = 0.3;    // tilt center where the pair dies
constexpr double kTilt = 30.0;    // amplitude after the plateau
constexpr double kStep = 0.5;     // keyframe spacing in q
constexpr double kBlend = 1e-3;
constexpr double kMinSpacing = 0.05;
constexpr double kMaxSpacing = 8.0;

// Fiber critical values of w^2 - A (w - m) bump((w - m) / r), in w order.
std::vector<double> profile_values(double A, double m) {
  auto g = [&](double w) {
    double z = (w - m) / kWidth;
    return w * w - A * (w - m) * bump_value(z);
  };
  auto dg = [&](double w) {
    double z = (w - m) / kWidth;
    if (std::fabs(z) >= 1.0) return 2.0 * w;
    double b = bump_value(z), s = 1.0 - z * z;
    return 2.0 * w - A * (b - 2.0 * z * z * b / (s * s));
  };
  std::vector<double> out;
  const int n = 16000;
  const double lo = -m - kWidth - 2.0, hi = m + kWidth + 2.0;
  double pw = lo, pd = dg(lo);
  for (int i = 1; i <= n; ++i) {
    double w = lo + (hi - lo) * i / n, d = dg(w);
    if ((pd < 0) != (d < 0)) {
      double a = pw, b = w, da = pd;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        double c = 0.5 * (a + b), dc = dg(c);
        if ((dc < 0) == (da < 0)) {
          a = c;
          da = dc;
        } else {
          b = c;
        }
      }
      out.push_back(g(0.5 * (a + b)));
    }
    pw = w;
    pd = d;
  }
  return out;
}

// Plateau blend factor sum(phi) / (sum(phi) + eps) at a keyframe node.
constexpr double plateau_scale() { return 1.0 / (1.0 + kBlend); }

double plateau_spacing(double A) {
  auto v = profile_values(A * plateau_scale(), kUpper * plateau_scale());
  if (v.size() < 3) return 0.0;
  return v[1] - v[2];
}

// f = -A(q) (w - m(q)) bump((w - m(q)) / r) with (A, m) blended between
// keyframes placed every kStep in q.
Expr lh_expr(const Expr& plateau, double W, double& R_base) {
  const int J = static_cast<int>(std::ceil(W / kStep - 1e-9));
  struct Key {
    Expr A;
    double m;
  };
  std::vector<std::pair<double, Key>> keys;
  keys.push_back({-(J + 1) * kStep, {Expr::constant(0.0), kUpper}});
  for (int j = -J; j <= J; ++j) keys.push_back({j * kStep, {plateau, kUpper}});
  keys.push_back({(J + 1) * kStep, {Expr::constant(kTilt), kUpper}});
  keys.push_back({(J + 2) * kStep, {Expr::constant(kTilt), kLower}});
  keys.push_back({(J + 3) * kStep, {Expr::constant(0.0), kLower}});
  R_base = (J + 3) * kStep;

  Expr q = q_var();
  std::vector<Expr> phi, num_a, num_m;
  for (const auto& [x, k] : keys) {
    Expr p = bump((q - x) * (1.0 / kStep));
    phi.push_back(p);
    if (!k.A.is_constant(0.0)) num_a.push_back(k.A * p);
    num_m.push_back(k.m * p);
  }
  Expr inv = pow(sum(phi) + kBlend, -1);
  Expr A = sum(num_a) * inv, m = sum(num_m) * inv;
  Expr s = Expr::variable("w1") - m;
  return -(A * s * bump(s * (1.0 / kWidth)));
}

}  // namespace

GFQI GfqiPath::at(double t) const { return slice_gf(cobordism(), t); }

CobordismGF GfqiPath::cobordism() const {
  CobordismGF C;
  C.G = family;
  C.slice0 = start;
  C.slice1 = end;
  C.name = name;
  return C;
}

GFQI mirror_gf(const GFQI& F) {
  need_base1(F, "mirror");
  Expr f = simplify(at_base(F.f, -q_var()));
  return finish(make_gfqi(f, F.Q, 1, F.fiber_dim, F.R_base, F.R_fiber, {}, F.fiber_compact),
                "mirror(" + label(F) + ")");
}

double connect_shift(const GFQI& F, const GFQI& Fp) { return F.R_base + Fp.R_base + 1.0; }

GFQI connect_sum(const GFQI& F, const GFQI& Fp) {
  need_base1(F, "connected sum");
  need_base1(Fp, "connected sum");
  const double T = connect_shift(F, Fp);
  Expr a = at_base(F.f, q_var() + T);
  Expr b = shift_fiber(at_base(Fp.f, q_var() - T), Fp.fiber_dim, F.fiber_dim);
  GFQI G = make_gfqi(simplify(a + b), direct_sum(F.Q, Fp.Q), 1, F.fiber_dim + Fp.fiber_dim,
                     T + std::max(F.R_base, Fp.R_base), std::max(F.R_fiber, Fp.R_fiber), {}, false);
  return finish(G, label(F) + "#" + label(Fp));
}

GFQI smile_sum(const GFQI& F1, const GFQI& F2) {
  if (F1.base_dim != F2.base_dim) throw ValidationError("smile sum needs a common base");
  Expr f = simplify(F1.f + shift_fiber(F2.f, F2.fiber_dim, F1.fiber_dim));
  GFQI G = make_gfqi(f, direct_sum(F1.Q, F2.Q), F1.base_dim, F1.fiber_dim + F2.fiber_dim,
                     std::max(F1.R_base, F2.R_base), std::max(F1.R_fiber, F2.R_fiber), {}, false);
  return finish(G, label(F1) + "+" + label(F2));
}

GFQI half_space(const GFQI& F) {
  need_base1(F, "half-space translation");
  return translate_base(F, -(F.R_base + 1.0));
}

CobordismGF spin_gf(const GFQI& F) {
  GFQI H = half_space(F);
  const double sigma = H.R_base + 1.0;
  {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uq(-H.R_base - 1.0, 0.5), uw(-H.R_fiber - 1.0, H.R_fiber + 1.0);
    auto slots = H.slots();
    CompiledExpr fc(H.f, slots);
    std::vector<double> p(slots.size());
    for (int s = 0; s < 2000; ++s) {
      p[0] = uq(rng);
      for (std::size_t i = 1; i < p.size(); ++i) p[i] = uw(rng);
      if (std::fabs(fc(p)) > 1e-12)
        throw ValidationError("support of " + label(F) + " does not clear the spin axis near q = " +
                              format_double(p[0]));
    }
  }
  Expr t = Expr::variable("t");
  Expr r = sqrt(pow(q_var(), 2) + (sigma * sigma) * pow(t, 2));
  Expr f = at_base(H.f, r);
  GFQI G = make_gfqi(f, H.Q, 2, H.fiber_dim, H.R_base, H.R_fiber, {}, H.fiber_compact);
  G.name = "spin(" + label(F) + ")";
  return make_cobordism(G, sigma);
}

namespace {

GFQI theorem29_form(const GFQI& F, const Expr& c, const Expr& s, int base_dim) {
  need_base1(F, "rotation path");
  GFQI H = half_space(F);
  const int k = H.fiber_dim;
  Bindings b{{"q", -q_var()}};
  for (int i = 1; i <= k; ++i)
    b.emplace(fiber_var(i), c * Expr::variable(fiber_var(i)) + s * Expr::variable(fiber_var(i + k)));
  Expr f = simplify(substitute(H.f, b) + H.f);
  return make_gfqi(f, direct_sum(H.Q, H.Q), base_dim, 2 * k, H.R_base, H.R_fiber, {}, false);
}

}  // namespace

GFQI theorem29_path(const GFQI& F, double t) {
  const double a = 0.5 * std::numbers::pi * t;
  return finish(theorem29_form(F, Expr::constant(std::cos(a)), Expr::constant(std::sin(a)), 1),
                "thm29(" + label(F) + ", " + format_double(t) + ")");
}

GfqiPath theorem29_family(const GFQI& F) {
  Expr a = (0.5 * std::numbers::pi) * Expr::variable("t");
  GfqiPath P;
  P.family = finish(theorem29_form(F, cos(a), sin(a), 2), "thm29(" + label(F) + ")");
  // endpoints in the displayed forms f(-q, w) + f(q, w) and f(-q, wbar) + f(q, w)
  GFQI H = half_space(F);
  const int k = H.fiber_dim;
  Expr mirrored = at_base(H.f, -q_var());
  Expr f0 = simplify(mirrored + H.f);
  Expr f1 = simplify(shift_fiber(mirrored, k, k) + H.f);
  QuadraticForm QQ = direct_sum(H.Q, H.Q);
  P.start = finish(make_gfqi(f0, QQ, 1, 2 * k, H.R_base, H.R_fiber, {}, false), "F0");
  P.end = finish(make_gfqi(f1, QQ, 1, 2 * k, H.R_base, H.R_fiber, {}, false), "F1");
  P.name = P.family.name;
  return P;
}

double lh_min_spacing() { return kMinSpacing; }
double lh_max_spacing() { return kMaxSpacing; }

double lh_amplitude(double H) {
  if (!(H >= kMinSpacing))
    throw ValidationError("L_H spacing " + format_double(H) + " is below the minimum feasible spacing " +
                          format_double(kMinSpacing) + " (the upper strings merge)");
  if (!(H <= kMaxSpacing))
    throw ValidationError("L_H spacing " + format_double(H) + " exceeds the maximum " +
                          format_double(kMaxSpacing) + " (the lower upper string reaches u = 0)");
  // fold of the tilt pair, then the spacing is increasing in the amplitude
  double lo = 0.0, hi = 10.0;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    (plateau_spacing(mid) > 0.0 ? hi : lo) = mid;
  }
  hi = 25.0;
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    (plateau_spacing(mid) < H ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GFQI lh_family(double H, double support_width) {
  if (!(support_width > 0.0)) throw ValidationError("L_H support width must be positive");
  const double A = lh_amplitude(H);
  double R = 0.0;
  Expr f = lh_expr(Expr::constant(A), support_width, R);
  return finish(make_gfqi(f, QuadraticForm::diagonal({1.0}), 1, 1, R, kUpper + kWidth),
                "L_H(" + format_double(H) + ")");
}

double front_height(const FrontDiagram& D) {
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& b : D.branches)
    for (const auto& s : b.samples) {
      lo = std::min(lo, s.u);
      hi = std::max(hi, s.u);
    }
  return hi >= lo ? hi - lo : 0.0;
}

GfqiPath prop34_homotopy(const GFQI& F, double H, double eps, bool verify, const TracerConfig& cfg) {
  need_base1(F, "homotopy");
  FrontDiagram D = trace_front(F, cfg);
  const double h = front_height(D);
  if (!(H > h))
    throw ValidationError("spacing H = " + format_double(H) + " must exceed the front height " + format_double(h));
  if (!(eps > 0.0 && eps < H)) throw ValidationError("eps must lie in (0, H)");
  Interval sup = support_of(D);
  const double W = sup.empty ? 1.5 : std::max(1.5, std::max(std::fabs(sup.lo), std::fabs(sup.hi)) + 0.2);
  const double A0 = lh_amplitude(H), A1 = lh_amplitude(eps);

  GfqiPath P;
  GFQI L0 = lh_family(H, W), L1 = lh_family(eps, W);
  P.start = smile_sum(F, L0);
  P.end = smile_sum(F, L1);
  double R = 0.0;
  Expr Lt = lh_expr(A0 + (A1 - A0) * Expr::variable("t"), W, R);
  Expr f = simplify(F.f + shift_fiber(Lt, 1, F.fiber_dim));
  P.name = "prop34(" + label(F) + ")";
  P.family = finish(make_gfqi(f, direct_sum(F.Q, QuadraticForm::diagonal({1.0})), 2, F.fiber_dim + 1,
                              std::max(F.R_base, R), std::max(F.R_fiber, kUpper + kWidth), {}, false),
                    P.name);
  if (verify) {
    auto ev = detect_cobordism_moments(P.cobordism(), cfg);
    if (!ev.empty())
      throw TraceError("cobordism moment along the homotopy at (q, t) = (" + format_double(ev[0].q) + ", " +
                       format_double(ev[0].t) + ")");
  }
  return P;
}

}  // namespace gfqi
