#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "gfqi/tracer.hpp"

namespace gfqi {

namespace {

GFQI slice_at(const GFQI& G, double t0) {
  if (!(t0 >= 0.0 && t0 <= 1.0)) throw Error("slice parameter " + format_double(t0) + " outside [0, 1]");
  Expr f = simplify(substitute(G.f, {{"t", Expr::constant(t0)}}));
  GFQI S = make_gfqi(f, G.Q, 1, G.fiber_dim, G.R_base, G.R_fiber, {}, G.fiber_compact);
  S.name = G.name;
  return S;
}

struct Window {
  double q_lo, q_hi, box;
};

Window window_of(const GFQI& G, const TracerConfig& cfg) {
  return {-G.R_base - cfg.margin, G.R_base + cfg.margin, G.R_fiber + cfg.fiber_margin};
}

void add_event(std::vector<MomentEvent>& out, MomentEvent e, double tol) {
  for (const auto& o : out) {
    if (std::fabs(o.q - e.q) > tol || std::fabs(o.t - e.t) > tol) continue;
    if ((o.w - e.w).norm() <= tol) return;
  }
  out.push_back(std::move(e));
}

void sort_events(std::vector<MomentEvent>& ev) {
  std::sort(ev.begin(), ev.end(), [](const MomentEvent& a, const MomentEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.q != b.q) return a.q < b.q;
    for (int i = 0; i < a.w.size() && i < b.w.size(); ++i)
      if (a.w[i] != b.w[i]) return a.w[i] < b.w[i];
    return false;
  });
}

// One fiber variable: G_w = G_ww = G_wq = 0.
std::vector<MomentEvent> detect_exact(const GFQI& G, const TracerConfig& cfg, const MomentOptions& opt) {
  const Window win = window_of(G, cfg);
  Expr T = G.total();
  Expr gw = simplify(diff(T, "w1"));
  Expr gww = simplify(diff(gw, "w1"));
  Expr gwq = simplify(diff(gw, "q"));
  std::vector<Expr> outs{gw,
                         gww,
                         gwq,
                         simplify(diff(gw, "t")),
                         simplify(diff(gww, "w1")),
                         simplify(diff(gww, "q")),
                         simplify(diff(gww, "t")),
                         simplify(diff(gwq, "q")),
                         simplify(diff(gwq, "t"))};
  CompiledExpr tape(outs, {"q", "t", "w1"});

  const int nq = opt.q_grid, nt = opt.t_grid, nw = cfg.moment_w_grid;
  const double dq = (win.q_hi - win.q_lo) / nq, dt = 1.0 / nt, dw = 2.0 * win.box / nw;
  auto Q = [&](int i) { return win.q_lo + i * dq; };
  auto Tt = [&](int j) { return j * dt; };
  auto W = [&](int l) { return -win.box + l * dw; };

  std::vector<double> corner(static_cast<std::size_t>(nq + 1) * (nt + 1) * (nw + 1) * 3);
  auto at = [&](int i, int j, int l) { return &corner[((static_cast<std::size_t>(i) * (nt + 1) + j) * (nw + 1) + l) * 3]; };
  std::vector<double> out(outs.size());
  for (int i = 0; i <= nq; ++i)
    for (int j = 0; j <= nt; ++j)
      for (int l = 0; l <= nw; ++l) {
        double p[3] = {Q(i), Tt(j), W(l)};
        tape.eval_all(p, out);
        double* c = at(i, j, l);
        c[0] = out[0];
        c[1] = out[1];
        c[2] = out[2];
      }

  std::vector<MomentEvent> events;
  for (int i = 0; i < nq; ++i)
    for (int j = 0; j < nt; ++j)
      for (int l = 0; l < nw; ++l) {
        bool cand = true;
        for (int e = 0; e < 3 && cand; ++e) {
          double lo = HUGE_VAL, hi = -HUGE_VAL;
          for (int c = 0; c < 8; ++c) {
            double v = at(i + (c & 1), j + ((c >> 1) & 1), l + ((c >> 2) & 1))[e];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          cand = lo <= 0.0 && 0.0 <= hi;
        }
        if (!cand) continue;
        Eigen::Vector3d z(Q(i) + 0.5 * dq, Tt(j) + 0.5 * dt, W(l) + 0.5 * dw);
        const Eigen::Vector3d center = z, half(dq, dt, dw);
        bool converged = false, singular = false;
        double res = HUGE_VAL;
        for (int it = 0; it < cfg.newton_iters; ++it) {
          double p[3] = {z[0], z[1], z[2]};
          tape.eval_all(p, out);
          Eigen::Vector3d r(out[0], out[1], out[2]);
          res = r.cwiseAbs().maxCoeff();
          if (res <= cfg.moment_tol) {
            converged = true;
            break;
          }
          Eigen::Matrix3d J;
          J << out[2], out[3], out[1], out[5], out[6], out[4], out[7], out[8], out[5];
          Eigen::FullPivLU<Eigen::Matrix3d> lu(J);
          if (lu.rank() < 3) {
            singular = res <= std::sqrt(cfg.moment_tol);
            break;
          }
          z -= lu.solve(r);
          if (!z.allFinite() || ((z - center).cwiseAbs().array() > 2.0 * half.array()).any()) break;
        }
        MomentEvent ev;
        ev.w = Eigen::VectorXd::Constant(1, z[2]);
        ev.q = z[0];
        ev.t = z[1];
        ev.residual = res;
        if (converged) {
          if (z[1] < -1e-9 || z[1] > 1.0 + 1e-9 || z[0] < win.q_lo || z[0] > win.q_hi ||
              std::fabs(z[2]) > win.box)
            continue;
          add_event(events, ev, 1e-6);
        } else if (singular) {
          ev.resolved = false;
          add_event(events, ev, 1e-6);
        }
      }
  sort_events(events);
  return events;
}

// Several fiber variables: the bordered Hessian [H | g_q] drops rank.
// Newton starts from grid minima of its smallest singular value that are
// small against the matrix entries.
constexpr double kSeedRatio = 0.25;

class RankDetector {
 public:
  RankDetector(const GFQI& G, const TracerConfig& cfg) : G_(G), cfg_(cfg), k_(G.fiber_dim) {
    Expr T = G.total();
    auto w = fiber_vars(k_);
    std::vector<Expr> g(k_), gq(k_);
    std::vector<Expr> outs;
    for (int i = 0; i < k_; ++i) {
      g[i] = simplify(diff(T, w[i]));
      gq[i] = simplify(diff(g[i], "q"));
    }
    std::vector<std::vector<Expr>> H(k_, std::vector<Expr>(k_));
    for (int i = 0; i < k_; ++i)
      for (int j = i; j < k_; ++j) H[i][j] = H[j][i] = simplify(diff(g[i], w[j]));
    for (int i = 0; i < k_; ++i) outs.push_back(g[i]);
    for (int i = 0; i < k_; ++i)
      for (int j = i; j < k_; ++j) outs.push_back(H[i][j]);
    for (int i = 0; i < k_; ++i) outs.push_back(gq[i]);
    for (int i = 0; i < k_; ++i) outs.push_back(simplify(diff(g[i], "t")));
    for (const char* v : {"q", "t"})
      for (int i = 0; i < k_; ++i)
        for (int j = i; j < k_; ++j) outs.push_back(simplify(diff(H[i][j], v)));
    for (int l = 0; l < k_; ++l)
      for (int i = 0; i < k_; ++i)
        for (int j = i; j < k_; ++j) outs.push_back(simplify(diff(H[i][j], w[l])));
    for (int i = 0; i < k_; ++i) outs.push_back(simplify(diff(gq[i], "q")));
    for (int i = 0; i < k_; ++i) outs.push_back(simplify(diff(gq[i], "t")));
    std::vector<std::string> slots{"q", "t"};
    slots.insert(slots.end(), w.begin(), w.end());
    tape_ = CompiledExpr(outs, slots);
    out_.resize(outs.size());
  }

  struct Jet3 {
    Eigen::VectorXd g, gq, gt, gqq, gqt;
    Eigen::MatrixXd H, Hq, Ht;
    std::vector<Eigen::MatrixXd> Hw;
  };

  Jet3 jet(double q, double t, const Eigen::VectorXd& w) const {
    std::vector<double> p(2 + k_);
    p[0] = q;
    p[1] = t;
    for (int i = 0; i < k_; ++i) p[2 + i] = w[i];
    tape_.eval_all(p, out_);
    Jet3 J;
    int o = 0;
    auto vec = [&](Eigen::VectorXd& v) {
      v.resize(k_);
      for (int i = 0; i < k_; ++i) v[i] = out_[o++];
    };
    auto sym = [&](Eigen::MatrixXd& M) {
      M.resize(k_, k_);
      for (int i = 0; i < k_; ++i)
        for (int j = i; j < k_; ++j) M(i, j) = M(j, i) = out_[o++];
    };
    vec(J.g);
    sym(J.H);
    vec(J.gq);
    vec(J.gt);
    sym(J.Hq);
    sym(J.Ht);
    J.Hw.resize(k_);
    for (int l = 0; l < k_; ++l) sym(J.Hw[l]);
    vec(J.gqq);
    vec(J.gqt);
    return J;
  }

  static double sigma_min(const Eigen::MatrixXd& H, const Eigen::VectorXd& gq, Eigen::VectorXd* left = nullptr) {
    const int k = static_cast<int>(H.rows());
    Eigen::MatrixXd M(k, k + 1);
    M << H, gq;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU);
    if (left) *left = svd.matrixU().col(k - 1);
    return svd.singularValues()[k - 1];
  }

  MomentEvent newton(double q, double t, Eigen::VectorXd w, Eigen::VectorXd lam, double dq, double dt,
                     bool& keep) const {
    const int n = 2 * k_ + 2;
    const double q0 = q, t0 = t;
    MomentEvent ev;
    keep = false;
    for (int it = 0; it < cfg_.newton_iters; ++it) {
      Jet3 J = jet(q, t, w);
      Eigen::VectorXd r(n);
      r.head(k_) = J.g;
      r.segment(k_, k_) = J.H * lam;
      r[2 * k_] = J.gq.dot(lam);
      r[2 * k_ + 1] = 0.5 * (lam.squaredNorm() - 1.0);
      double res = r.cwiseAbs().maxCoeff();
      ev.q = q;
      ev.t = t;
      ev.w = w;
      ev.residual = res;
      if (res <= cfg_.moment_tol) {
        keep = t >= -1e-9 && t <= 1.0 + 1e-9 && sigma_min(J.H, J.gq) <= cfg_.rank_tol;
        return ev;
      }
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
      A.block(0, 0, k_, 1) = J.gq;
      A.block(0, 1, k_, 1) = J.gt;
      A.block(0, 2, k_, k_) = J.H;
      A.block(k_, 0, k_, 1) = J.Hq * lam;
      A.block(k_, 1, k_, 1) = J.Ht * lam;
      for (int l = 0; l < k_; ++l) A.block(k_, 2 + l, k_, 1) = J.Hw[l] * lam;
      A.block(k_, 2 + k_, k_, k_) = J.H;
      A(2 * k_, 0) = J.gqq.dot(lam);
      A(2 * k_, 1) = J.gqt.dot(lam);
      A.block(2 * k_, 2, 1, k_) = (J.Hq * lam).transpose();
      A.block(2 * k_, 2 + k_, 1, k_) = J.gq.transpose();
      A.block(2 * k_ + 1, 2 + k_, 1, k_) = lam.transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (lu.rank() < n) {
        // only a near-degenerate point counts; elsewhere the seed was poor
        ev.resolved = false;
        keep = sigma_min(J.H, J.gq) <= std::sqrt(cfg_.rank_tol) && J.g.norm() <= std::sqrt(cfg_.rank_tol);
        return ev;
      }
      Eigen::VectorXd d = lu.solve(-r);
      q += d[0];
      t += d[1];
      w += d.segment(2, k_);
      lam += d.segment(2 + k_, k_);
      if (!d.allFinite() || std::fabs(q - q0) > 2.0 * dq || std::fabs(t - t0) > 2.0 * dt) return ev;
    }
    return ev;
  }

  std::vector<MomentEvent> run(const MomentOptions& opt) const {
    const Window win = window_of(G_, cfg_);
    const int nq = opt.q_grid, nt = opt.t_grid;
    const double dq = (win.q_hi - win.q_lo) / nq, dt = 1.0 / nt;
    TracerConfig scfg = cfg_;
    scfg.seeds_per_dim = cfg_.moment_seeds_per_dim;
    FiberSystem S(G_, scfg);
    struct Crit {
      Eigen::VectorXd w, lam;
      double s, scale;
    };
    std::vector<std::vector<Crit>> grid(static_cast<std::size_t>(nq + 1) * (nt + 1));
    auto cell = [&](int i, int j) -> std::vector<Crit>& { return grid[static_cast<std::size_t>(j) * (nq + 1) + i]; };
    for (int j = 0; j <= nt; ++j) {
      std::vector<Eigen::VectorXd> seeds;
      for (int i = 0; i <= nq; ++i) {
        Eigen::VectorXd x(2);
        x << win.q_lo + i * dq, j * dt;
        if (j > 0)
          for (const auto& c : cell(i, j - 1)) seeds.push_back(c.w);
        auto ws = S.criticals(x, seeds);
        seeds = ws;
        for (const auto& w : ws) {
          GfJet J = S.jet(x, w);
          Crit c;
          c.w = w;
          c.s = sigma_min(J.H, J.gq, &c.lam);
          c.scale = std::max(J.H.cwiseAbs().maxCoeff(), J.gq.cwiseAbs().maxCoeff());
          cell(i, j).push_back(c);
        }
      }
    }
    std::vector<MomentEvent> events;
    for (int j = 0; j <= nt; ++j)
      for (int i = 0; i <= nq; ++i)
        for (const auto& c : cell(i, j)) {
          bool minimum = true;
          for (int dj = -1; dj <= 1 && minimum; ++dj)
            for (int di = -1; di <= 1 && minimum; ++di) {
              if ((!di && !dj) || i + di < 0 || i + di > nq || j + dj < 0 || j + dj > nt) continue;
              const Crit* best = nullptr;
              double bd = HUGE_VAL;
              for (const auto& o : cell(i + di, j + dj)) {
                double d = (o.w - c.w).norm();
                if (d < bd) {
                  bd = d;
                  best = &o;
                }
              }
              if (best && bd < 0.5 && best->s < c.s) minimum = false;
            }
          if (!minimum || c.s > kSeedRatio * c.scale) continue;
          bool keep;
          MomentEvent ev = newton(win.q_lo + i * dq, j * dt, c.w, c.lam, dq, dt, keep);
          if (keep) add_event(events, ev, 1e-6);
        }
    sort_events(events);
    return events;
  }

 private:
  const GFQI& G_;
  TracerConfig cfg_;
  int k_;
  CompiledExpr tape_;
  mutable std::vector<double> out_;
};

}  // namespace

CobordismGF make_cobordism(const GFQI& G, double sigma) {
  if (G.base_dim != 2) throw ValidationError("a cobordism gf needs base variables (q, t)");
  CobordismGF C;
  C.G = G;
  C.sigma = sigma;
  C.name = G.name;
  C.slice0 = slice_at(G, 0.0);
  C.slice1 = slice_at(G, 1.0);
  return C;
}

GFQI slice_gf(const CobordismGF& G, double t0) { return slice_at(G.G, t0); }

CobordismGF constant_extension(const GFQI& F) {
  if (F.base_dim != 1) throw ValidationError("constant extension needs a base_dim 1 gf");
  GFQI G = make_gfqi(F.f, F.Q, 2, F.fiber_dim, F.R_base, F.R_fiber, {}, F.fiber_compact);
  G.name = F.name;
  return make_cobordism(G);
}

SurfaceTrace trace_surface(const CobordismGF& G, int t_grid, const TracerConfig& cfg, BaseGrid grid) {
  if (t_grid < 2) throw TraceError("surface trace needs at least two t values");
  SurfaceTrace S;
  for (int i = 0; i < t_grid; ++i) {
    double t = static_cast<double>(i) / (t_grid - 1);
    S.t.push_back(t);
    S.slices.push_back(trace_front(slice_gf(G, t), cfg, grid));
  }
  S.events = detect_cobordism_moments(G, cfg);
  return S;
}

std::vector<MomentEvent> detect_cobordism_moments(const CobordismGF& G, const TracerConfig& cfg,
                                                  MomentOptions opt) {
  if (opt.q_grid < 1 || opt.t_grid < 1) throw TraceError("moment grid must be positive");
  if (G.G.fiber_dim == 1) return detect_exact(G.G, cfg, opt);
  return RankDetector(G.G, cfg).run(opt);
}

}  // namespace gfqi
