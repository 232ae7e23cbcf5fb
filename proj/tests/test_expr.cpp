#include <cmath>
#include <random>

#include "doctest.h"
#include "gfqi/expr.hpp"
#include "random_expr.hpp"

using namespace gfqi;
using namespace gfqi::testing;

TEST_CASE("eval basics") {
  Expr cubic = pow(w, 3) + (pow(q, 2) - 1.0) * w;
  CHECK(eval(cubic, {{"q", 0.0}, {"w", 1.0}}) == 0.0);
  CHECK(eval(bump(q), {{"q", 0.0}}) == 1.0);
  CHECK(eval(bump(q), {{"q", 1.5}}) == 0.0);
  CHECK(eval(bump(q), {{"q", -1.0}}) == 0.0);
  CHECK(eval(bump(q), {{"q", 0.5}}) == doctest::Approx(std::exp(1 - 1 / 0.75)));
}

TEST_CASE("eval errors") {
  try {
    eval(q + w, {{"q", 1.0}});
    FAIL("expected error");
  } catch (const UnboundVariable& e) {
    CHECK(e.variable == "w");
  }
  CHECK_THROWS_AS(eval(sqrt(q), {{"q", -1.0}}), DomainError);
  CHECK(eval(sqrt(q), {{"q", 0.0}}) == 0.0);
}

TEST_CASE("diff examples") {
  Expr cubic = pow(w, 3) + (pow(q, 2) - 1.0) * w;
  Expr d = diff(cubic, "w");
  for (double qq : {-1.0, 0.3, 2.0})
    for (double ww : {-0.7, 0.0, 1.2})
      CHECK(eval(d, {{"q", qq}, {"w", ww}}) == doctest::Approx(3 * ww * ww + qq * qq - 1).epsilon(1e-14));
  CHECK(diff(Expr::constant(4.0), "q").is_constant(0.0));
  Expr db = diff(bump(q), "q");
  CHECK(eval(db, {{"q", 0.0}}) == 0.0);
  double h = 1e-5;
  double central = (bump_value(h) - bump_value(-h)) / (2 * h);
  CHECK(std::fabs(central - eval(db, {{"q", 0.0}})) <= 1e-8);
}

TEST_CASE("bump derivatives vanish outside support") {
  Expr e = bump(q);
  for (int n = 0; n < 4; ++n) {
    for (double x : {-3.0, -1.0, 1.0, 1.0000001, 2.5}) CHECK(eval(e, {{"q", x}}) == 0.0);
    for (double x : {-0.999999, 0.99999999}) CHECK(std::isfinite(eval(e, {{"q", x}})));
    e = diff(e, "q");
  }
  Expr scaled = bump(0.5 * q - 1.0);
  Expr d2 = diff(diff(scaled, "q"), "q");
  CHECK(eval(d2, {{"q", 0.0}}) == 0.0);
  CHECK(eval(d2, {{"q", 4.0}}) == 0.0);
}

TEST_CASE("substitute") {
  Expr e = substitute(pow(w, 2), {{"w", q + w}});
  CHECK(eval(e, {{"q", 1.0}, {"w", 2.0}}) == 9.0);
  CHECK(substitute(q, {}).id() == q.id());
  CHECK(eval(substitute(sin(w), {{"w", Expr::constant(0.0)}}), {}) == 0.0);
  Expr swap = substitute(q - w, {{"q", w}, {"w", q}});
  CHECK(eval(swap, {{"q", 1.0}, {"w", 5.0}}) == 4.0);
}

TEST_CASE("simplify examples") {
  CHECK(to_prefix(simplify(0.0 * w + q)) == "q");
  CHECK(to_prefix(simplify(1.0 * (w + 0.0))) == "w");
  CHECK(to_prefix(simplify((Expr::constant(2.0) + Expr::constant(3.0)) * q)) == "(* 5 q)");
  CHECK(to_prefix(simplify(pow(q, 1))) == "q");
  CHECK(to_prefix(simplify(pow(Expr::constant(2.0), 3))) == "8");
}

TEST_CASE("prefix round trip") {
  Expr cubic = pow(w, 3) + (pow(q, 2) + -1.0) * w;
  CHECK(to_prefix(cubic) == "(+ (pow w 3) (* (+ (pow q 2) -1) w))");
  Expr back = parse_prefix(to_prefix(cubic));
  CHECK(to_prefix(back) == to_prefix(cubic));
  Expr c = Expr::constant(0.1);
  CHECK(eval(parse_prefix(to_prefix(c)), {}) == 0.1);
  Expr e = parse_prefix(" (- (bump (* 0.5 q))  (sqrt (exp w)))");
  CHECK(eval(e, {{"q", 0.0}, {"w", 0.0}}) == 0.0);
  CHECK(free_variables(e) == std::set<std::string>{"q", "w"});
}

TEST_CASE("parse errors carry offsets") {
  auto offset_of = [](const char* s) -> std::size_t {
    try {
      parse_prefix(s);
    } catch (const ParseError& e) {
      return e.offset;
    }
    return std::string::npos;
  };
  CHECK(offset_of("(+ q") == 0);
  CHECK(offset_of("(foo q)") == 1);
  CHECK(offset_of("(pow q 1.5)") == 7);
  CHECK(offset_of("q )") == 2);
  CHECK(offset_of("(sin q w)") == 1);
  CHECK(offset_of("") == 0);
  CHECK(offset_of("(+ 3x q)") == 3);
}

TEST_CASE("derivatives agree with central differences on random trees") {
  RandomExpr gen(20240611);
  std::mt19937_64 prng(7);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Expr e = gen.gen(6);
    Assignment p{{"q", coord(prng)}, {"w", coord(prng)}};
    for (const char* v : {"q", "w"}) {
      double val = eval(e, p);
      double exact = eval(diff(e, v), p);
      double num = fd(e, p, v);
      INFO(to_prefix(e), " d/d", std::string(v), " at q=", p["q"], " w=", p["w"]);
      CHECK(std::fabs(exact - num) <= 1e-6 * (1 + std::fabs(exact)));
      (void)val;
      ++checked;
    }
  }
  CHECK(checked == 2000);
}

TEST_CASE("simplify is exact and idempotent") {
  RandomExpr gen(99);
  std::mt19937_64 prng(3);
  std::uniform_real_distribution<double> coord(-2, 2);
  for (int i = 0; i < 300; ++i) {
    Expr e = gen.gen(5);
    Expr s = simplify(e);
    CHECK(to_prefix(simplify(s)) == to_prefix(s));
    for (int j = 0; j < 100 / 10; ++j) {
      Assignment p{{"q", coord(prng)}, {"w", coord(prng)}};
      double a = eval(e, p), b = eval(s, p);
      CHECK((a == b || (std::isnan(a) && std::isnan(b))));
    }
  }
}

TEST_CASE("compiled tape matches tree evaluation") {
  RandomExpr gen(5);
  std::mt19937_64 prng(11);
  std::uniform_real_distribution<double> coord(-2, 2);
  for (int i = 0; i < 200; ++i) {
    Expr e = gen.gen(6);
    Expr d = diff(e, "w");
    CompiledExpr c({e, d}, {"q", "w"});
    double in[2] = {coord(prng), coord(prng)}, out[2];
    c.eval_all(in, out);
    CHECK(out[0] == eval(e, {{"q", in[0]}, {"w", in[1]}}));
    CHECK(out[1] == eval(d, {{"q", in[0]}, {"w", in[1]}}));
  }
  CHECK_THROWS_AS(CompiledExpr(q + w, {"q"}), UnboundVariable);
}
