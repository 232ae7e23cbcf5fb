#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gfqi/front.hpp"
#include "gfqi/gf_core.hpp"

namespace gfqi {

struct TraceError : Error {
  using Error::Error;
};

/// Plateau families (dF/dw vanishing on open sets) are refused.
struct DegenerateError : TraceError {
  using TraceError::TraceError;
};

struct TracerConfig {
  int grid = 400;            // base columns
  int seeds_per_dim = 32;    // multi-start Newton seeds per fiber dimension
  double margin = 1.0;       // traced window is [-R_base - margin, R_base + margin]
  double fiber_margin = 1.0; // fiber search box is [-R_fiber - margin, R_fiber + margin]^k
  double dedupe = 1e-6;
  double grad_tol = 1e-10;
  int newton_iters = 80;
  double ambiguity = 1e-9;
  int max_refine = 5;
  double cusp_dx = 1e-6;
  double cusp_refine_min = 1e-5;  // smallest offset of the extra samples placed near a cusp
  double tol_front = 1e-3;        // segments are bisected until |du - y dx| <= tol_front |dx|
  double moment_tol = 1e-8;
  double rank_tol = 1e-6;
  int moment_w_grid = 48;
  int moment_seeds_per_dim = 12;  // fiber seeds per dimension on the moment grid, k > 1

  static const std::vector<std::string>& names();
  /// Override a field by name; throws Error for unknown names.
  void set(const std::string& name, double value);
};

struct CriticalPoint {
  Eigen::VectorXd w;
  double F = 0.0;
  double Fq = 0.0;
  int index = 0;
};

/// Fiber-critical solver for one GFQI. The fiber variables are split into
/// blocks that never share a term of F, and each block is solved on its own.
class FiberSystem {
 public:
  FiberSystem(const GFQI& F, const TracerConfig& cfg);

  int base_dim() const { return m_; }
  int fiber_dim() const { return k_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  int reference_index() const { return ref_index_; }

  GfJet jet(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;

  /// Newton-refine w to a critical point at base point x, block by block.
  bool refine(const Eigen::VectorXd& x, Eigen::VectorXd& w) const;

  /// All critical points in the search box, sorted lexicographically. Extra
  /// seeds are refined too.
  std::vector<Eigen::VectorXd> criticals(const Eigen::VectorXd& x,
                                         const std::vector<Eigen::VectorXd>& extra_seeds = {}) const;

  CriticalPoint describe(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;

  double box() const { return box_; }

 private:
  struct Block {
    std::vector<int> vars;  // indices into the fiber
    CompiledExpr tape;      // F_B, dF_B/dq, [dF_B/dt], g, H upper, dg/dq, [dg/dt]
    Eigen::MatrixXd hess_Q; // Hessian of the block's part of Q
  };
  int m_, k_;
  int ref_index_ = 0;
  double box_;
  TracerConfig cfg_;
  CompiledExpr rest_;  // terms free of fiber variables: value, d/dq, [d/dt]
  std::vector<Block> blocks_;

  void block_jet(const Block& b, const Eigen::VectorXd& x, const Eigen::VectorXd& wb, double& F,
                 double& Fq, double& Ft, Eigen::VectorXd& g, Eigen::MatrixXd& H, Eigen::VectorXd& gq,
                 Eigen::VectorXd& gt) const;
  bool refine_block(const Block& b, const Eigen::VectorXd& x, Eigen::VectorXd& wb) const;
  std::vector<Eigen::VectorXd> block_criticals(const Block& b, const Eigen::VectorXd& x,
                                               const std::vector<Eigen::VectorXd>& seeds) const;
};

std::vector<Eigen::VectorXd> fiber_criticals(const GFQI& F, const Eigen::VectorXd& x,
                                             const TracerConfig& cfg = {});

struct BaseGrid {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;  // 0: derived from the support radius and the config
};

FrontDiagram trace_front(const GFQI& F, const TracerConfig& cfg = {}, BaseGrid grid = {});

/// Largest of the (x, u) and (x, y) Hausdorff distances over the common window.
double front_distance(const FrontDiagram& A, const FrontDiagram& B);

// ----- cobordisms -------------------------------------------------------

struct CobordismGF {
  GFQI G;  // base (q, t), t in [0, 1]
  GFQI slice0;
  GFQI slice1;
  double sigma = 1.0;  // t scaling used by spun families, 1 otherwise
  std::string name;
};

CobordismGF make_cobordism(const GFQI& G, double sigma = 1.0);
GFQI slice_gf(const CobordismGF& G, double t0);
CobordismGF constant_extension(const GFQI& F);

struct MomentEvent {
  double q = 0.0;
  double t = 0.0;
  Eigen::VectorXd w;
  bool resolved = true;
  double residual = 0.0;
};

struct SurfaceTrace {
  std::vector<double> t;
  std::vector<FrontDiagram> slices;
  std::vector<MomentEvent> events;
};

SurfaceTrace trace_surface(const CobordismGF& G, int t_grid = 11, const TracerConfig& cfg = {},
                           BaseGrid grid = {});

struct MomentOptions {
  int q_grid = 64;
  int t_grid = 64;
};

std::vector<MomentEvent> detect_cobordism_moments(const CobordismGF& G, const TracerConfig& cfg = {},
                                                  MomentOptions opt = {});

}  // namespace gfqi
