#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gfqi/expr.hpp"

namespace gfqi {

struct ValidationError : Error {
  using Error::Error;
};

/// Q(w) = w^T A w on R^k.
class QuadraticForm {
 public:
  QuadraticForm() = default;
  explicit QuadraticForm(Eigen::MatrixXd A);  // throws ValidationError
  static QuadraticForm diagonal(std::vector<double> d);

  int dim() const { return static_cast<int>(A_.rows()); }
  int index() const { return index_; }
  const Eigen::MatrixXd& matrix() const { return A_; }

  double operator()(const Eigen::VectorXd& w) const { return w.dot(A_ * w); }
  Expr expr(const std::vector<std::string>& vars) const;

  friend QuadraticForm direct_sum(const QuadraticForm& a, const QuadraticForm& b);

 private:
  Eigen::MatrixXd A_;
  int index_ = 0;
};

struct ValidationOptions {
  int samples = 200;
  double tol = 1e-9;
  std::uint64_t seed = 1;
};

std::string fiber_var(int i);  // 1-based: w1, w2, ...
std::vector<std::string> fiber_vars(int k);
std::vector<std::string> base_vars(int m);  // {q} or {q, t}

/// Compiled f+Q together with the derivatives the tracer needs.
///
/// Output layout: F, dF/dq, dF/dt (base_dim 2), g_i = dF/dw_i, then the upper
/// triangle of the fiber Hessian row by row, then d g_i/dq, then d g_i/dt.
struct GfTape {
  int m = 1;
  int k = 1;
  CompiledExpr tape;
  std::vector<Expr> outputs;
};

struct GfJet {
  double F = 0.0;
  double Fq = 0.0;
  double Ft = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  Eigen::VectorXd gq;
  Eigen::VectorXd gt;
};

/// F(x, w) = f(x, w) + Q(w) with f compactly supported.
///
/// base_dim 1 uses base q; base_dim 2 uses (q, t) with t in [0, 1] and the
/// support radius bounding |q| only. When fiber_compact is false f is still
/// checked to vanish for |q| > R_base but may be nonzero for large |w| (this
/// happens after a stabilization, where f is constant in the new variables).
struct GFQI {
  int base_dim = 1;
  int fiber_dim = 1;
  Expr f;
  QuadraticForm Q;
  double R_base = 1.0;
  double R_fiber = 1.0;
  bool fiber_compact = true;
  std::string name;

  Expr total() const;
  std::vector<std::string> slots() const;  // base vars then fiber vars
  const GfTape& tape() const;

  GfJet jet(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;

 private:
  mutable std::shared_ptr<const GfTape> tape_;
  mutable const ExprNode* tape_key_ = nullptr;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

ValidationReport validate(const GFQI& F, const ValidationOptions& opt = {});

GFQI make_gfqi(const Expr& f, const QuadraticForm& Q, int base_dim, int fiber_dim, double R_base,
               double R_fiber, const ValidationOptions& opt = {}, bool fiber_compact = true);

GFQI zero_section_like(int base_dim, const QuadraticForm& Q);

double eval_F(const GFQI& F, const Eigen::VectorXd& x, const Eigen::VectorXd& w);
Eigen::VectorXd grad_fiber(const GFQI& F, const Eigen::VectorXd& x, const Eigen::VectorXd& w);
Eigen::MatrixXd hess_fiber(const GFQI& F, const Eigen::VectorXd& x, const Eigen::VectorXd& w);

int morse_index(const Eigen::MatrixXd& H);

GFQI stabilize(const GFQI& F, const QuadraticForm& Qp, const ValidationOptions& opt = {});

/// Precompose with (x, w) -> (x, phi_x(w)). phi must preserve Q outside the
/// fiber radius (the identity and orthogonal maps of Q both qualify) and have
/// fiber Jacobian determinant bounded away from zero.
GFQI fiberwise_compose(const GFQI& F, const std::vector<Expr>& phi, const ValidationOptions& opt = {});

/// (q, w) -> F(q + T, w).
GFQI translate_base(const GFQI& F, double T);

Eigen::VectorXd point(std::initializer_list<double> v);

}  // namespace gfqi
