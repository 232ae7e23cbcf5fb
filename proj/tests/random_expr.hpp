#pragma once

#include <cmath>
#include <random>
#include <string>

#include "gfqi/expr.hpp"

namespace gfqi::testing {

inline const Expr q = Expr::variable("q");
inline const Expr w = Expr::variable("w");

inline double fd(const Expr& e, Assignment p, const std::string& v, double h = 1e-5) {
  double x = p[v];
  p[v] = x + h;
  double a = eval(e, p);
  p[v] = x - h;
  double b = eval(e, p);
  return (a - b) / (2 * h);
}

// Random trees over {q, w}. sqrt only wraps strictly positive arguments, pow
// exponents stay non-negative and pow bases are leaves or bounded functions,
// so a fixed step central difference is an accurate reference.
struct RandomExpr {
  std::mt19937_64 rng;
  explicit RandomExpr(std::uint64_t seed) : rng(seed) {}
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  double real(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

  Expr leaf() {
    switch (pick(3)) {
      case 0: return q;
      case 1: return w;
      default: return Expr::constant(std::round(real(-2, 2) * 4) / 4);
    }
  }
  Expr gen(int depth) {
    if (depth == 0 || pick(5) == 0) return leaf();
    switch (pick(9)) {
      case 0: return sum({gen(depth - 1), gen(depth - 1), gen(depth - 1)});
      case 1: return gen(depth - 1) + gen(depth - 1);
      case 2: return gen(depth - 1) * gen(depth - 1);
      case 3: return pow(pick(2) ? leaf() : sin(gen(depth - 1)), pick(4));
      case 4: return sqrt(1.5 + pow(gen(depth - 1), 2));
      case 5: return sin(gen(depth - 1));
      case 6: return cos(gen(depth - 1));
      case 7: return exp(0.3 * sin(gen(depth - 1)));
      default: return bump(0.4 * sin(gen(depth - 1)));
    }
  }
};

}  // namespace gfqi::testing
