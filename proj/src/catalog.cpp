#include "gfqi/catalog.hpp"

#include <array>
#include <cmath>
#include <functional>

namespace gfqi {

GFQI zero_section_gf() {
  GFQI F = make_gfqi(Expr::constant(0.0), QuadraticForm::diagonal({1.0}), 1, 1, 1.0, 1.0);
  F.name = "zero";
  return F;
}

GFQI eye_gf() {
  const double A = 8.491583935306668;
  Expr q = Expr::variable("q"), s = Expr::variable("w1") - 1.0;
  Expr f = -(A * bump(q * (1 / 1.3)) * s * bump(s * (1 / 0.2)));
  GFQI F = make_gfqi(f, QuadraticForm::diagonal({1.0}), 1, 1, 1.3, 1.2);
  F.name = "eye";
  return F;
}

GFQI trefoil_gf() {
  // (first amplitude, second amplitude, offset of the second bump)
  static const std::array<std::array<double, 3>, 12> K{{{0, 0, 0.35},
                                                        {12, 0, 0.35},
                                                        {12, 9, 0.36},
                                                        {16.5, 9, 0.35},
                                                        {16.0, 9, 0.33},
                                                        {14.6, 9, 0.31},
                                                        {15.5, 9, 0.28},
                                                        {17.8, 9, 0.30},
                                                        {16.5, 6, 0.30},
                                                        {19.5, 6, 0.30},
                                                        {19.5, 0, 0.30},
                                                        {0, 0, 0.30}}};
  const int n = static_cast<int>(K.size());
  const double h = 0.5, c1 = 1.5, r = 0.4;
  Expr q = Expr::variable("q"), w = Expr::variable("w1");
  std::vector<Expr> phi;
  for (int k = 0; k < n; ++k) phi.push_back(bump((q - (k - (n - 1) / 2.0) * h) * (1 / h)));
  Expr inv = pow(sum(phi) + 1e-3, -1);
  std::array<Expr, 3> N;
  for (int c = 0; c < 3; ++c) {
    std::vector<Expr> t;
    for (int k = 0; k < n; ++k)
      if (K[k][c] != 0) t.push_back(K[k][c] * phi[k]);
    N[c] = sum(t);
  }
  Expr s1 = w - c1, s2 = w - c1 - N[2] * inv;
  const double E = std::exp(-1.0);
  Expr f = -(E * N[0] * inv * s1 * bump(s1 * (1 / r))) - (E * N[1] * inv * s2 * bump(s2 * (1 / r)));
  GFQI F = make_gfqi(f, QuadraticForm::diagonal({1.0}), 1, 1, (n - 1) / 2.0 * h, 2.3);
  F.name = "trefoil";
  return F;
}

CobordismGF saddle_model() {
  const double R = 3.0;
  Expr q = Expr::variable("q"), t = Expr::variable("t"), w = Expr::variable("w1");
  Expr f = bump(q * (1 / R)) * bump(w * (1 / R)) * (pow(w, 3) - 3.0 * (q * q - (t - 0.5)) * w - w * w);
  GFQI G = make_gfqi(f, QuadraticForm::diagonal({1.0}), 2, 1, R, R);
  G.name = "saddle";
  return make_cobordism(G);
}

namespace {

using Curve = std::function<std::pair<double, double>(double)>;  // x -> (u, y)

void append(Branch& b, double x0, double x1, const Curve& c, int n = 64) {
  for (int i = b.samples.empty() ? 0 : 1; i <= n; ++i) {
    double x = x0 + (x1 - x0) * i / n;
    auto [u, y] = c(x);
    FrontSample s;
    s.x = x;
    s.u = u;
    s.y = y;
    b.samples.push_back(s);
  }
}

// Cusp profile on s in [0, 1]: ~ s^(3/2) at 0, flat at 1.
double cusp_shape(double s) { return std::pow(s, 1.5) * (2.5 - 1.5 * s); }
double cusp_slope(double s) { return 3.75 * std::sqrt(s) * (1.0 - s); }

double step_shape(double s) { return s * s * (3.0 - 2.0 * s); }
double step_slope(double s) { return 6.0 * s * (1.0 - s); }

int add_cusp(FrontDiagram& D, CuspSide side, int upper, int lower) {
  Cusp c;
  c.side = side;
  c.upper = upper;
  c.lower = lower;
  const auto& s = side == CuspSide::left ? D.branches[upper].samples.front() : D.branches[upper].samples.back();
  c.x = s.x;
  c.u = s.u;
  D.cusps.push_back(c);
  int id = static_cast<int>(D.cusps.size()) - 1;
  for (int b : {upper, lower}) (side == CuspSide::left ? D.branches[b].left_cusp : D.branches[b].right_cusp) = id;
  return id;
}

void add_zero_section(FrontDiagram& D) {
  Branch z;
  append(z, D.x_min, D.x_max, [](double) { return std::pair{0.0, 0.0}; }, 8);
  D.branches.insert(D.branches.begin(), z);
  for (auto& c : D.cusps) {
    ++c.upper;
    ++c.lower;
  }
  for (auto& c : D.crossings) {
    ++c.a;
    ++c.b;
    ++c.over;
  }
}

}  // namespace

FrontDiagram plat_front(int strands, const std::vector<int>& word, double base) {
  if (strands < 2 || strands % 2) throw Error("plat front needs an even number of strands");
  for (int i : word)
    if (i < 0 || i + 1 >= strands) throw Error("plat crossing position out of range");
  const int L = static_cast<int>(word.size());
  auto level = [&](int p) { return base + (strands - 1 - p); };

  FrontDiagram D;
  D.x_min = -1.0;
  D.x_max = L + 3.0;
  // start[p]: branch entering layer 0 at position p
  std::vector<std::vector<int>> pos(strands, std::vector<int>(L + 1));
  for (int b = 0; b < strands; ++b) {
    pos[b][0] = b;
    for (int l = 1; l <= L; ++l) {
      int p = pos[b][l - 1], i = word[l - 1];
      pos[b][l] = p == i ? i + 1 : p == i + 1 ? i : p;
    }
  }
  for (int b = 0; b < strands; ++b) {
    Branch br;
    const double sl = b % 2 ? -0.5 : 0.5;
    const double ml = 0.5 * (level(b - b % 2) + level(b - b % 2 + 1));
    append(br, 0.0, 1.0, [&](double x) { return std::pair{ml + sl * cusp_shape(x), sl * cusp_slope(x)}; });
    for (int l = 1; l <= L; ++l) {
      double a = level(pos[b][l - 1]), c = level(pos[b][l]);
      append(br, l, l + 1.0, [&, l](double x) {
        return std::pair{a + (c - a) * step_shape(x - l), (c - a) * step_slope(x - l)};
      });
    }
    const int pe = pos[b][L];
    const double sr = pe % 2 ? -0.5 : 0.5;
    const double mr = 0.5 * (level(pe - pe % 2) + level(pe - pe % 2 + 1));
    append(br, L + 1.0, L + 2.0, [&](double x) {
      double s = L + 2.0 - x;
      return std::pair{mr + sr * cusp_shape(s), -sr * cusp_slope(s)};
    });
    D.branches.push_back(std::move(br));
  }
  for (int p = 0; p < strands; p += 2) add_cusp(D, CuspSide::left, p, p + 1);
  for (int p = 0; p < strands; p += 2) {
    int up = -1, lo = -1;
    for (int b = 0; b < strands; ++b) {
      if (pos[b][L] == p) up = b;
      if (pos[b][L] == p + 1) lo = b;
    }
    add_cusp(D, CuspSide::right, up, lo);
  }
  for (int l = 1; l <= L; ++l) {
    int i = word[l - 1], a = -1, b = -1;
    for (int s = 0; s < strands; ++s) {
      if (pos[s][l - 1] == i) a = s;
      if (pos[s][l - 1] == i + 1) b = s;
    }
    Crossing c;
    c.x = l + 0.5;
    c.u = 0.5 * (level(i) + level(i + 1));
    c.a = a;
    c.b = b;
    c.over = a;  // the descending strand has the smaller slope
    D.crossings.push_back(c);
  }
  return D;
}

FrontDiagram left_trefoil_front() {
  FrontDiagram D = plat_front(6, {1, 0, 0, 0, 1, 1, 3});
  add_zero_section(D);
  return D;
}

FrontDiagram stabilized_unknot_front() {
  // tail, right cusp at x = 1, back to a left cusp at x = -1, then on to the right
  FrontDiagram D;
  D.x_min = -3.0;
  D.x_max = 4.0;
  Branch a, b, c;
  append(a, D.x_min, -0.5, [](double) { return std::pair{0.0, 0.0}; }, 8);
  append(a, -0.5, 1.0, [](double x) {
    double s = (1.0 - x) / 1.5;
    return std::pair{-0.25 + 0.25 * cusp_shape(s), -0.25 / 1.5 * cusp_slope(s)};
  });
  append(b, -1.0, 0.0, [](double x) { return std::pair{-0.75 + 0.25 * cusp_shape(x + 1.0), 0.25 * cusp_slope(x + 1.0)}; });
  append(b, 0.0, 1.0, [](double x) { return std::pair{-0.25 - 0.25 * cusp_shape(1.0 - x), 0.25 * cusp_slope(1.0 - x)}; });
  append(c, -1.0, 0.0, [](double x) { return std::pair{-0.75 - 0.25 * cusp_shape(x + 1.0), -0.25 * cusp_slope(x + 1.0)}; });
  append(c, 0.0, 1.2, [](double) { return std::pair{-1.0, 0.0}; }, 8);
  append(c, 1.2, 2.5, [](double x) {
    double s = (x - 1.2) / 1.3;
    return std::pair{-1.0 + step_shape(s), step_slope(s) / 1.3};
  });
  append(c, 2.5, D.x_max, [](double) { return std::pair{0.0, 0.0}; }, 8);
  D.branches = {a, b, c};
  add_cusp(D, CuspSide::right, 0, 1);
  add_cusp(D, CuspSide::left, 1, 2);
  return D;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = [] {
    auto inv = [](int comp, int cross, int cusps, int wr, int tb, int rot, bool zz) {
      KnotInvariants k;
      k.components = comp;
      k.crossings = cross;
      k.cusps = cusps;
      k.writhe = wr;
      k.tb = tb;
      k.rotation = rot;
      k.has_zigzag = zz;
      return k;
    };
    std::vector<CatalogEntry> v;
    v.push_back({"zero", CatalogKind::gfqi, zero_section_gf(), std::nullopt, inv(1, 0, 0, 0, 0, 0, false)});
    v.push_back({"eye", CatalogKind::gfqi, eye_gf(), std::nullopt, inv(2, 0, 2, 0, -1, 0, false)});
    v.push_back({"trefoil", CatalogKind::gfqi, trefoil_gf(), std::nullopt, inv(2, 3, 4, 3, 1, 0, false)});
    v.push_back({"left-trefoil", CatalogKind::front_only, std::nullopt, left_trefoil_front(),
                 inv(2, 7, 6, -3, -6, -1, false)});
    v.push_back({"stabilized-unknot", CatalogKind::front_only, std::nullopt, stabilized_unknot_front(),
                 inv(1, 0, 2, 0, -1, 1, true)});
    return v;
  }();
  return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  std::string known;
  for (const auto& e : catalog()) known += (known.empty() ? "" : ", ") + e.name;
  throw Error("unknown catalog entry '" + name + "' (known: " + known + ")");
}

}  // namespace gfqi
