#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gfqi/catalog.hpp"
#include "gfqi/gf_core.hpp"
#include "gfqi/tracer.hpp"

using namespace gfqi;

namespace {

Expr q = Expr::variable("q");
Expr w1 = Expr::variable("w1");
Expr w2 = Expr::variable("w2");

// Unvalidated gf whose total function is the cubic w^3 + (q^2 - 1)w.
GFQI cubic() {
  GFQI F;
  F.f = pow(w1, 3) + (q * q - 1.0) * w1 - w1 * w1;
  F.Q = QuadraticForm::diagonal({1.0});
  F.R_base = 3.0;
  F.R_fiber = 1.0;
  return F;
}

GFQI bump_bump() { return make_gfqi(bump(q) * bump(w1), QuadraticForm::diagonal({1.0}), 1, 1, 1.0, 1.0); }

// Sorted critical values (u, y) over x.
std::vector<std::pair<double, double>> contour_at(const GFQI& F, double x) {
  std::vector<std::pair<double, double>> c;
  for (const auto& w : fiber_criticals(F, point({x}))) {
    GfJet J = F.jet(point({x}), w);
    c.emplace_back(J.F, J.Fq);
  }
  std::sort(c.begin(), c.end());
  return c;
}

double contour_gap(const GFQI& A, const GFQI& B, double lo, double hi, int n = 50) {
  double gap = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = lo + (hi - lo) * (i + 0.5) / n;
    auto a = contour_at(A, x), b = contour_at(B, x);
    if (a.size() != b.size()) return HUGE_VAL;
    for (std::size_t j = 0; j < a.size(); ++j)
      gap = std::max({gap, std::fabs(a[j].first - b[j].first), std::fabs(a[j].second - b[j].second)});
  }
  return gap;
}

}  // namespace

TEST_CASE("quadratic forms") {
  QuadraticForm Q = QuadraticForm::diagonal({1.0, -1.0});
  CHECK(Q.dim() == 2);
  CHECK(Q.index() == 1);
  CHECK(Q(point({1.0, 2.0})) == doctest::Approx(-3.0));
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 2, 4;
  CHECK_THROWS_AS(QuadraticForm{A}, ValidationError);
  A << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(QuadraticForm{A}, ValidationError);
  CHECK_THROWS_AS(QuadraticForm::diagonal({0.0}), ValidationError);
  QuadraticForm S = direct_sum(QuadraticForm::diagonal({2.0}), Q);
  CHECK(S.dim() == 3);
  CHECK(S.index() == 1);
  CHECK(S.matrix()(0, 0) == 2.0);
}

TEST_CASE("make_gfqi validation") {
  GFQI Z = zero_section_gf();
  CHECK(Z.fiber_dim == 1);
  CHECK(bump_bump().base_dim == 1);
  // support leaks past R_base
  CHECK_THROWS_AS(make_gfqi(bump(q * 0.5) * bump(w1), QuadraticForm::diagonal({1.0}), 1, 1, 1.0, 1.0),
                  ValidationError);
  // support leaks past R_fiber
  CHECK_THROWS_AS(make_gfqi(bump(q) * w1, QuadraticForm::diagonal({1.0}), 1, 1, 1.0, 1.0), ValidationError);
  CHECK_NOTHROW(make_gfqi(bump(q) * w1, QuadraticForm::diagonal({1.0}), 1, 1, 1.0, 1.0, {}, false));
  CHECK_THROWS_AS(make_gfqi(Expr::constant(0.0), QuadraticForm{}, 1, 1, 1.0, 1.0), ValidationError);
  auto rep = validate(cubic());
  CHECK_FALSE(rep.ok);
  CHECK_FALSE(rep.violations.empty());
}

TEST_CASE("eval_F") {
  GFQI Z = zero_section_gf();
  CHECK(eval_F(Z, point({3.0}), point({2.0})) == 4.0);
  CHECK(eval_F(bump_bump(), point({0.0}), point({0.0})) == 1.0);
  for (const auto& e : catalog())
    if (e.gf) CHECK(eval_F(*e.gf, point({e.gf->R_base + 0.5}), point({0.0})) == 0.0);
}

TEST_CASE("fiber gradient and Hessian") {
  GFQI Z = zero_section_gf();
  CHECK(grad_fiber(Z, point({0.7}), point({0.0}))[0] == 0.0);
  CHECK(hess_fiber(Z, point({0.7}), point({0.3}))(0, 0) == 2.0);
  const double r = 1.0 / std::sqrt(3.0);
  GFQI C = cubic();
  CHECK(std::fabs(grad_fiber(C, point({0.0}), point({r}))[0]) <= 1e-10);
  CHECK(hess_fiber(C, point({0.0}), point({r}))(0, 0) == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-9));

  GFQI D = zero_section_like(1, QuadraticForm::diagonal({1.0, -1.0}));
  Eigen::VectorXd g = grad_fiber(D, point({0.0}), point({1.0, 1.0}));
  CHECK(g[0] == 2.0);
  CHECK(g[1] == -2.0);
  Eigen::MatrixXd H = hess_fiber(D, point({0.0}), point({1.0, 1.0}));
  CHECK(H(0, 0) == 2.0);
  CHECK(H(1, 1) == -2.0);
  CHECK(H(0, 1) == 0.0);
  CHECK(morse_index(H) == 1);
}

TEST_CASE("fiber criticals of the cubic") {
  GFQI C = cubic();
  auto ws = fiber_criticals(C, point({0.0}));
  REQUIRE(ws.size() == 2);
  CHECK(std::fabs(ws[0][0] + 1.0 / std::sqrt(3.0)) <= 1e-9);
  CHECK(std::fabs(ws[1][0] - 1.0 / std::sqrt(3.0)) <= 1e-9);
  // 3w^2 + 3 has no real root
  CHECK(fiber_criticals(C, point({2.0})).empty());
  auto z = fiber_criticals(zero_section_gf(), point({0.4}));
  REQUIRE(z.size() == 1);
  CHECK(std::fabs(z[0][0]) <= 1e-12);
}

TEST_CASE("stabilization") {
  GFQI S = stabilize(zero_section_gf(), QuadraticForm::diagonal({-1.0}));
  CHECK(S.fiber_dim == 2);
  CHECK(S.Q.matrix()(0, 0) == 1.0);
  CHECK(S.Q.matrix()(1, 1) == -1.0);
  CHECK_THROWS_AS(stabilize(zero_section_gf(), QuadraticForm{}), ValidationError);
  GFQI E = eye_gf();
  for (auto Qp : {QuadraticForm::diagonal({1.0}), QuadraticForm::diagonal({-1.0}),
                  QuadraticForm::diagonal({1.0, -1.0})})
    CHECK(contour_gap(E, stabilize(E, Qp), -2.0, 2.0) <= 1e-6);
}

TEST_CASE("fiberwise composition") {
  GFQI E = eye_gf();
  GFQI I = fiberwise_compose(E, {w1});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    double x = U(rng), w = U(rng);
    CHECK(eval_F(I, point({x}), point({w})) == doctest::Approx(eval_F(E, point({x}), point({w}))).epsilon(1e-12));
  }
  GFQI P = fiberwise_compose(E, {w1 + 0.1 * bump(q) * bump(w1)});
  CHECK(contour_gap(E, P, -2.0, 2.0) <= 1e-6);
  GFQI R = fiberwise_compose(E, {-w1});
  CHECK(contour_gap(E, R, -2.0, 2.0) <= 1e-6);
  CHECK_THROWS_AS(fiberwise_compose(E, {w1, w2}), ValidationError);
  CHECK_THROWS_AS(fiberwise_compose(E, {Expr::constant(0.5) + 0.0 * w1}), ValidationError);
}

TEST_CASE("base translation") {
  GFQI E = eye_gf();
  GFQI T0 = translate_base(E, 0.0);
  GFQI B = translate_base(translate_base(E, 2.5), -2.5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    double x = U(rng), w = U(rng);
    CHECK(eval_F(T0, point({x}), point({w})) == eval_F(E, point({x}), point({w})));
    CHECK(std::fabs(eval_F(B, point({x}), point({w})) - eval_F(E, point({x}), point({w}))) <= 1e-12);
  }
  GFQI S = translate_base(E, 5.0);
  CHECK(eval_F(S, point({-5.0}), point({1.0})) == doctest::Approx(eval_F(E, point({0.0}), point({1.0}))));
  CHECK(S.R_base >= 6.0);
}
