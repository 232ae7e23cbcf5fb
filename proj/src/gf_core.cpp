#include "gfqi/gf_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gfqi {

QuadraticForm::QuadraticForm(Eigen::MatrixXd A) : A_(std::move(A)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols())
    throw ValidationError("quadratic form needs a square matrix of dimension >= 1");
  for (int i = 0; i < A_.rows(); ++i)
    for (int j = 0; j < i; ++j)
      if (std::fabs(A_(i, j) - A_(j, i)) > 1e-12)
        throw ValidationError("quadratic form matrix is not symmetric");
  if (std::fabs(A_.determinant()) <= 1e-9) throw ValidationError("quadratic form is degenerate");
  index_ = morse_index(A_);
}

QuadraticForm QuadraticForm::diagonal(std::vector<double> d) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) A(i, i) = d[i];
  return QuadraticForm(A);
}

Expr QuadraticForm::expr(const std::vector<std::string>& vars) const {
  std::vector<Expr> terms;
  for (int i = 0; i < dim(); ++i)
    for (int j = i; j < dim(); ++j) {
      double c = i == j ? A_(i, i) : 2.0 * A_(i, j);
      if (c == 0.0) continue;
      Expr wi = Expr::variable(vars[i]);
      terms.push_back(i == j ? product({Expr::constant(c), pow(wi, 2)})
                             : product({Expr::constant(c), wi, Expr::variable(vars[j])}));
    }
  return simplify(sum(std::move(terms)));
}

QuadraticForm direct_sum(const QuadraticForm& a, const QuadraticForm& b) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(a.dim() + b.dim(), a.dim() + b.dim());
  A.topLeftCorner(a.dim(), a.dim()) = a.A_;
  A.bottomRightCorner(b.dim(), b.dim()) = b.A_;
  return QuadraticForm(A);
}

int morse_index(const Eigen::MatrixXd& H) {
  if (H.rows() == 1) return H(0, 0) < 0.0 ? 1 : 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  int n = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) n += es.eigenvalues()[i] < 0.0;
  return n;
}

std::string fiber_var(int i) { return "w" + std::to_string(i); }

std::vector<std::string> fiber_vars(int k) {
  std::vector<std::string> v;
  for (int i = 1; i <= k; ++i) v.push_back(fiber_var(i));
  return v;
}

std::vector<std::string> base_vars(int m) {
  if (m == 1) return {"q"};
  return {"q", "t"};
}

Expr GFQI::total() const { return simplify(f + Q.expr(fiber_vars(fiber_dim))); }

std::vector<std::string> GFQI::slots() const {
  auto s = base_vars(base_dim);
  auto w = fiber_vars(fiber_dim);
  s.insert(s.end(), w.begin(), w.end());
  return s;
}

const GfTape& GFQI::tape() const {
  if (tape_ && tape_key_ == f.id()) return *tape_;
  auto t = std::make_shared<GfTape>();
  t->m = base_dim;
  t->k = fiber_dim;
  Expr F = total();
  auto bv = base_vars(base_dim);
  auto wv = fiber_vars(fiber_dim);
  auto& out = t->outputs;
  out.push_back(F);
  for (const auto& b : bv) out.push_back(diff(F, b));
  std::vector<Expr> g;
  for (const auto& w : wv) g.push_back(diff(F, w));
  out.insert(out.end(), g.begin(), g.end());
  for (int i = 0; i < fiber_dim; ++i)
    for (int j = i; j < fiber_dim; ++j) out.push_back(diff(g[i], wv[j]));
  for (const auto& b : bv)
    for (int i = 0; i < fiber_dim; ++i) out.push_back(diff(g[i], b));
  t->tape = CompiledExpr(out, slots());
  tape_ = t;
  tape_key_ = f.id();
  return *tape_;
}

GfJet GFQI::jet(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
  const GfTape& t = tape();
  const int m = base_dim, k = fiber_dim;
  std::vector<double> in(m + k), out(t.outputs.size());
  for (int i = 0; i < m; ++i) in[i] = x[i];
  for (int i = 0; i < k; ++i) in[m + i] = w[i];
  t.tape.eval_all(in, out);
  GfJet J;
  std::size_t p = 0;
  J.F = out[p++];
  J.Fq = out[p++];
  if (m == 2) J.Ft = out[p++];
  J.g.resize(k);
  for (int i = 0; i < k; ++i) J.g[i] = out[p++];
  J.H.resize(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j) J.H(i, j) = J.H(j, i) = out[p++];
  J.gq.resize(k);
  for (int i = 0; i < k; ++i) J.gq[i] = out[p++];
  J.gt = Eigen::VectorXd::Zero(k);
  if (m == 2)
    for (int i = 0; i < k; ++i) J.gt[i] = out[p++];
  return J;
}

ValidationReport validate(const GFQI& F, const ValidationOptions& opt) {
  ValidationReport rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.violations.push_back(std::move(msg));
  };
  if (F.base_dim != 1 && F.base_dim != 2) fail("base_dim must be 1 or 2");
  if (F.fiber_dim < 1) fail("fiber_dim must be >= 1");
  if (F.Q.dim() != F.fiber_dim) fail("quadratic form dimension does not match fiber_dim");
  if (!(F.R_base > 0.0) || !(F.R_fiber > 0.0)) fail("support radii must be positive");
  if (!rep.ok) return rep;

  auto allowed = F.slots();
  for (const auto& v : free_variables(F.f))
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      fail("f uses undeclared variable '" + v + "'");
  if (!rep.ok) return rep;

  const int m = F.base_dim, k = F.fiber_dim;
  CompiledExpr fc(F.f, allowed);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), t01(0.0, 1.0);
  const double Rb = F.R_base, Rf = F.R_fiber;
  std::vector<double> p(m + k);
  int bad = 0;
  std::string first_bad;
  for (int s = 0; s < opt.samples; ++s) {
    bool base_side = !F.fiber_compact || s % 2 == 0;
    if (base_side) {
      double r = Rb + (Rb + 2.0) * std::fabs(unit(rng)) + 1e-9;
      p[0] = unit(rng) < 0 ? -r : r;
      for (int i = 0; i < k; ++i) p[m + i] = (Rf + 2.0) * unit(rng);
    } else {
      p[0] = (Rb + 2.0) * unit(rng);
      Eigen::VectorXd dir(k);
      for (int i = 0; i < k; ++i) dir[i] = unit(rng);
      if (dir.norm() < 1e-3) dir.setOnes();
      dir.normalize();
      double r = Rf + (Rf + 2.0) * std::fabs(unit(rng)) + 1e-9;
      for (int i = 0; i < k; ++i) p[m + i] = r * dir[i];
    }
    if (m == 2) p[1] = t01(rng);
    double v;
    try {
      v = fc(p);
    } catch (const Error& e) {
      fail(std::string("f not evaluable outside support: ") + e.what());
      return rep;
    }
    if (!(std::fabs(v) <= opt.tol)) {
      if (bad++ == 0) {
        first_bad = "|f| = " + format_double(std::fabs(v)) + " at (";
        for (std::size_t i = 0; i < p.size(); ++i) first_bad += (i ? ", " : "") + format_double(p[i]);
        first_bad += ")";
      }
    }
  }
  if (bad > 0)
    fail("f is not compactly supported within the declared radii: " + std::to_string(bad) +
         " sample(s) exceed tolerance, first " + first_bad);
  return rep;
}

GFQI make_gfqi(const Expr& f, const QuadraticForm& Q, int base_dim, int fiber_dim, double R_base,
               double R_fiber, const ValidationOptions& opt, bool fiber_compact) {
  if (Q.dim() == 0) throw ValidationError("quadratic form is missing");
  GFQI F;
  F.base_dim = base_dim;
  F.fiber_dim = fiber_dim;
  F.f = f;
  F.Q = Q;
  F.R_base = R_base;
  F.R_fiber = R_fiber;
  F.fiber_compact = fiber_compact;
  auto rep = validate(F, opt);
  if (!rep.ok) {
    std::string msg = "invalid gfqi:";
    for (const auto& v : rep.violations) msg += " " + v + ";";
    throw ValidationError(msg);
  }
  return F;
}

GFQI zero_section_like(int base_dim, const QuadraticForm& Q) {
  return make_gfqi(Expr::constant(0.0), Q, base_dim, Q.dim(), 1.0, 1.0);
}

double eval_F(const GFQI& F, const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  return F.jet(x, w).F;
}

Eigen::VectorXd grad_fiber(const GFQI& F, const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  return F.jet(x, w).g;
}

Eigen::MatrixXd hess_fiber(const GFQI& F, const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  return F.jet(x, w).H;
}

GFQI stabilize(const GFQI& F, const QuadraticForm& Qp, const ValidationOptions& opt) {
  if (Qp.dim() < 1) throw ValidationError("stabilization needs a form of dimension >= 1");
  GFQI G = make_gfqi(F.f, direct_sum(F.Q, Qp), F.base_dim, F.fiber_dim + Qp.dim(), F.R_base,
                     F.R_fiber, opt, false);
  G.name = F.name;
  return G;
}

GFQI fiberwise_compose(const GFQI& F, const std::vector<Expr>& phi, const ValidationOptions& opt) {
  const int m = F.base_dim, k = F.fiber_dim;
  if (static_cast<int>(phi.size()) != k)
    throw ValidationError("fiberwise map must have one component per fiber variable");
  auto slots = F.slots();
  auto wv = fiber_vars(k);
  std::vector<Expr> comps = phi;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) comps.push_back(diff(phi[i], wv[j]));
  CompiledExpr pc(comps, slots);

  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), t01(0.0, 1.0);
  std::vector<double> p(m + k), out(comps.size());
  const double box = F.R_fiber + 1.0;
  for (int s = 0; s < 500; ++s) {
    p[0] = (F.R_base + 1.0) * unit(rng);
    if (m == 2) p[1] = t01(rng);
    for (int i = 0; i < k; ++i) p[m + i] = box * unit(rng);
    pc.eval_all(p, out);
    Eigen::MatrixXd J(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) J(i, j) = out[k + i * k + j];
    if (!(std::fabs(J.determinant()) > 1e-6))
      throw ValidationError("fiberwise map has degenerate Jacobian near sample " + std::to_string(s));
  }
  for (int s = 0; s < opt.samples; ++s) {
    p[0] = (F.R_base + 2.0) * unit(rng);
    if (m == 2) p[1] = t01(rng);
    Eigen::VectorXd dir(k);
    for (int i = 0; i < k; ++i) dir[i] = unit(rng);
    if (dir.norm() < 1e-3) dir.setOnes();
    dir.normalize();
    double r = F.R_fiber + (F.R_fiber + 2.0) * std::fabs(unit(rng)) + 1e-9;
    Eigen::VectorXd w(k), pw(k);
    for (int i = 0; i < k; ++i) p[m + i] = w[i] = r * dir[i];
    pc.eval_all(p, out);
    for (int i = 0; i < k; ++i) pw[i] = out[i];
    if (std::fabs(F.Q(pw) - F.Q(w)) > opt.tol * (1.0 + std::fabs(F.Q(w))))
      throw ValidationError("fiberwise map does not preserve Q outside the fiber radius");
  }

  Bindings b;
  for (int i = 0; i < k; ++i) b.emplace(wv[i], phi[i]);
  Expr composed = substitute(F.total(), b);
  Expr fnew = simplify(composed - F.Q.expr(wv));
  GFQI G = make_gfqi(fnew, F.Q, m, k, F.R_base, F.R_fiber, opt, F.fiber_compact);
  G.name = F.name;
  return G;
}

GFQI translate_base(const GFQI& F, double T) {
  GFQI G = F;
  if (T != 0.0) {
    G.f = substitute(F.f, {{"q", Expr::variable("q") + T}});
    G.R_base = F.R_base + std::fabs(T);
  }
  G = make_gfqi(G.f, G.Q, G.base_dim, G.fiber_dim, G.R_base, G.R_fiber, {}, G.fiber_compact);
  G.name = F.name;
  return G;
}

Eigen::VectorXd point(std::initializer_list<double> v) {
  Eigen::VectorXd p(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

}  // namespace gfqi
