#include "gfqi/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace gfqi {

// ----- config -----------------------------------------------------------

const std::vector<std::string>& TracerConfig::names() {
  static const std::vector<std::string> n = {
      "grid",      "seeds_per_dim", "margin",          "fiber_margin", "dedupe",
      "grad_tol",  "newton_iters",  "ambiguity",       "max_refine",   "cusp_dx",
      "cusp_refine_min", "tol_front", "moment_tol", "rank_tol", "moment_w_grid", "moment_seeds_per_dim"};
  return n;
}

void TracerConfig::set(const std::string& name, double v) {
  if (name == "grid") grid = static_cast<int>(v);
  else if (name == "seeds_per_dim") seeds_per_dim = static_cast<int>(v);
  else if (name == "moment_seeds_per_dim") moment_seeds_per_dim = static_cast<int>(v);
  else if (name == "margin") margin = v;
  else if (name == "fiber_margin") fiber_margin = v;
  else if (name == "dedupe") dedupe = v;
  else if (name == "grad_tol") grad_tol = v;
  else if (name == "newton_iters") newton_iters = static_cast<int>(v);
  else if (name == "ambiguity") ambiguity = v;
  else if (name == "max_refine") max_refine = static_cast<int>(v);
  else if (name == "cusp_dx") cusp_dx = v;
  else if (name == "cusp_refine_min") cusp_refine_min = v;
  else if (name == "tol_front") tol_front = v;
  else if (name == "moment_tol") moment_tol = v;
  else if (name == "rank_tol") rank_tol = v;
  else if (name == "moment_w_grid") moment_w_grid = static_cast<int>(v);
  else throw Error("unknown tolerance '" + name + "'");
}

// ----- fiber system -----------------------------------------------------

namespace {

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

std::vector<int> fiber_indices(const Expr& e, int k) {
  std::vector<int> out;
  for (const auto& v : free_variables(e))
    if (v.size() > 1 && v[0] == 'w') {
      int i = std::atoi(v.c_str() + 1);
      if (i >= 1 && i <= k) out.push_back(i - 1);
    }
  return out;
}

int find(std::vector<int>& p, int i) {
  while (p[i] != i) i = p[i] = p[p[i]];
  return i;
}

}  // namespace

FiberSystem::FiberSystem(const GFQI& F, const TracerConfig& cfg)
    : m_(F.base_dim), k_(F.fiber_dim), box_(F.R_fiber + cfg.fiber_margin), cfg_(cfg) {
  ref_index_ = F.Q.index();
  Expr total = F.total();
  std::vector<Expr> terms;
  auto flatten = [&](auto&& self, const Expr& e) -> void {
    if (e.kind() != ExprKind::sum) {
      terms.push_back(e);
      return;
    }
    for (const auto& c : e.children()) self(self, c);
  };
  flatten(flatten, total);
  std::vector<int> parent(k_);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::vector<int>> term_vars;
  for (const auto& t : terms) {
    term_vars.push_back(fiber_indices(t, k_));
    const auto& tv = term_vars.back();
    for (std::size_t i = 1; i < tv.size(); ++i) parent[find(parent, tv[i])] = find(parent, tv[0]);
  }
  std::map<int, int> block_of_root;
  std::vector<std::vector<int>> vars;
  for (int i = 0; i < k_; ++i) {
    int r = find(parent, i);
    if (!block_of_root.count(r)) {
      block_of_root[r] = static_cast<int>(vars.size());
      vars.emplace_back();
    }
    vars[block_of_root[r]].push_back(i);
  }
  std::vector<std::vector<Expr>> block_terms(vars.size());
  std::vector<Expr> rest_terms;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (term_vars[j].empty()) rest_terms.push_back(terms[j]);
    else block_terms[block_of_root[find(parent, term_vars[j][0])]].push_back(terms[j]);
  }
  auto bv = base_vars(m_);
  Expr rest = sum(rest_terms);
  std::vector<Expr> rest_out{rest};
  for (const auto& b : bv) rest_out.push_back(diff(rest, b));
  rest_ = CompiledExpr(rest_out, bv);

  for (std::size_t bi = 0; bi < vars.size(); ++bi) {
    Block blk;
    blk.vars = vars[bi];
    Expr FB = sum(block_terms[bi]);
    std::vector<std::string> slots = bv;
    std::vector<std::string> wn;
    for (int i : blk.vars) wn.push_back(fiber_var(i + 1));
    slots.insert(slots.end(), wn.begin(), wn.end());
    std::vector<Expr> out{FB};
    for (const auto& b : bv) out.push_back(diff(FB, b));
    std::vector<Expr> g;
    for (const auto& w : wn) g.push_back(diff(FB, w));
    out.insert(out.end(), g.begin(), g.end());
    for (std::size_t i = 0; i < wn.size(); ++i)
      for (std::size_t j = i; j < wn.size(); ++j) out.push_back(diff(g[i], wn[j]));
    for (const auto& b : bv)
      for (std::size_t i = 0; i < wn.size(); ++i) out.push_back(diff(g[i], b));
    blk.tape = CompiledExpr(out, slots);
    blk.hess_Q.resize(blk.vars.size(), blk.vars.size());
    for (std::size_t i = 0; i < blk.vars.size(); ++i)
      for (std::size_t j = 0; j < blk.vars.size(); ++j)
        blk.hess_Q(i, j) = 2.0 * F.Q.matrix()(blk.vars[i], blk.vars[j]);
    blocks_.push_back(std::move(blk));
  }
}

void FiberSystem::block_jet(const Block& b, const Eigen::VectorXd& x, const Eigen::VectorXd& wb,
                            double& F, double& Fq, double& Ft, Eigen::VectorXd& g, Eigen::MatrixXd& H,
                            Eigen::VectorXd& gq, Eigen::VectorXd& gt) const {
  const int kb = static_cast<int>(b.vars.size());
  double in[8];
  std::vector<double> inv;
  double* ip = in;
  if (m_ + kb > 8) {
    inv.resize(m_ + kb);
    ip = inv.data();
  }
  for (int i = 0; i < m_; ++i) ip[i] = x[i];
  for (int i = 0; i < kb; ++i) ip[m_ + i] = wb[i];
  thread_local std::vector<double> out;
  out.resize(b.tape.output_count());
  b.tape.eval_all(std::span<const double>(ip, m_ + kb), out);
  std::size_t p = 0;
  F = out[p++];
  Fq = out[p++];
  Ft = m_ == 2 ? out[p++] : 0.0;
  g.resize(kb);
  for (int i = 0; i < kb; ++i) g[i] = out[p++];
  H.resize(kb, kb);
  for (int i = 0; i < kb; ++i)
    for (int j = i; j < kb; ++j) H(i, j) = H(j, i) = out[p++];
  gq.resize(kb);
  for (int i = 0; i < kb; ++i) gq[i] = out[p++];
  gt = Eigen::VectorXd::Zero(kb);
  if (m_ == 2)
    for (int i = 0; i < kb; ++i) gt[i] = out[p++];
}

GfJet FiberSystem::jet(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
  GfJet J;
  double r[3];
  std::span<const double> xin(x.data(), m_);
  rest_.eval_all(xin, std::span<double>(r, 1 + m_));
  J.F = r[0];
  J.Fq = r[1];
  J.Ft = m_ == 2 ? r[2] : 0.0;
  J.g = Eigen::VectorXd::Zero(k_);
  J.H = Eigen::MatrixXd::Zero(k_, k_);
  J.gq = Eigen::VectorXd::Zero(k_);
  J.gt = Eigen::VectorXd::Zero(k_);
  for (const auto& b : blocks_) {
    const int kb = static_cast<int>(b.vars.size());
    Eigen::VectorXd wb(kb), g, gq, gt;
    Eigen::MatrixXd H;
    for (int i = 0; i < kb; ++i) wb[i] = w[b.vars[i]];
    double F, Fq, Ft;
    block_jet(b, x, wb, F, Fq, Ft, g, H, gq, gt);
    J.F += F;
    J.Fq += Fq;
    J.Ft += Ft;
    for (int i = 0; i < kb; ++i) {
      J.g[b.vars[i]] = g[i];
      J.gq[b.vars[i]] = gq[i];
      J.gt[b.vars[i]] = gt[i];
      for (int j = 0; j < kb; ++j) J.H(b.vars[i], b.vars[j]) = H(i, j);
    }
  }
  return J;
}

bool FiberSystem::refine_block(const Block& b, const Eigen::VectorXd& x, Eigen::VectorXd& wb) const {
  const int kb = static_cast<int>(b.vars.size());
  double F, Fq, Ft;
  Eigen::VectorXd g, gq, gt;
  Eigen::MatrixXd H;
  block_jet(b, x, wb, F, Fq, Ft, g, H, gq, gt);
  double r = g.norm();
  const double max_step = 0.5 * box_;
  for (int it = 0; it < cfg_.newton_iters; ++it) {
    if (!std::isfinite(r)) return false;
    if (r <= cfg_.grad_tol) return true;
    Eigen::VectorXd dw;
    if (kb == 1) {
      if (H(0, 0) == 0.0) return false;
      dw = Eigen::VectorXd::Constant(1, -g[0] / H(0, 0));
    } else {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(H);
      if (qr.rank() < kb) return false;
      dw = qr.solve(-g);
    }
    double n = dw.norm();
    if (!std::isfinite(n)) return false;
    if (n > max_step) dw *= max_step / n;
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::VectorXd trial = wb + alpha * dw;
      Eigen::VectorXd g2, gq2, gt2;
      Eigen::MatrixXd H2;
      double F2, Fq2, Ft2;
      block_jet(b, x, trial, F2, Fq2, Ft2, g2, H2, gq2, gt2);
      double r2 = g2.norm();
      if (std::isfinite(r2) && (r2 < r || (ls == 0 && r2 <= 1e-6 && r2 < 2 * r))) {
        wb = trial;
        g = g2;
        H = H2;
        r = r2;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) return r <= cfg_.grad_tol;
    if (wb.cwiseAbs().maxCoeff() > 4 * box_) return false;
  }
  return r <= cfg_.grad_tol;
}

bool FiberSystem::refine(const Eigen::VectorXd& x, Eigen::VectorXd& w) const {
  for (const auto& b : blocks_) {
    const int kb = static_cast<int>(b.vars.size());
    Eigen::VectorXd wb(kb);
    for (int i = 0; i < kb; ++i) wb[i] = w[b.vars[i]];
    if (!refine_block(b, x, wb)) return false;
    for (int i = 0; i < kb; ++i) w[b.vars[i]] = wb[i];
  }
  return true;
}

namespace {

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

void dedupe(std::vector<Eigen::VectorXd>& v, double tol) {
  std::sort(v.begin(), v.end(), lex_less);
  std::vector<Eigen::VectorXd> out;
  for (auto& p : v) {
    bool dup = false;
    for (const auto& o : out)
      if ((o - p).norm() <= tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(p));
  }
  v = std::move(out);
}

}  // namespace

std::vector<Eigen::VectorXd> FiberSystem::block_criticals(const Block& b, const Eigen::VectorXd& x,
                                                          const std::vector<Eigen::VectorXd>& seeds) const {
  const int kb = static_cast<int>(b.vars.size());
  std::vector<Eigen::VectorXd> found, starts = seeds;
  const int S = cfg_.seeds_per_dim;
  if (kb == 1) {
    // sign-change brackets on a fine scan, then Newton seeds for roots that
    // share a scan cell
    const int M = 8 * S;
    double prev_w = -box_, prev_g = 0.0;
    Eigen::VectorXd wb(1), g, gq, gt;
    Eigen::MatrixXd H;
    double F, Fq, Ft;
    for (int i = 0; i <= M; ++i) {
      wb[0] = -box_ + 2.0 * box_ * i / M;
      block_jet(b, x, wb, F, Fq, Ft, g, H, gq, gt);
      if (i > 0 && ((prev_g < 0) != (g[0] < 0) || g[0] == 0.0)) {
        double lo = prev_w, hi = wb[0], glo = prev_g;
        for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
          Eigen::VectorXd mid = Eigen::VectorXd::Constant(1, 0.5 * (lo + hi));
          block_jet(b, x, mid, F, Fq, Ft, g, H, gq, gt);
          if ((g[0] < 0) == (glo < 0)) {
            lo = mid[0];
            glo = g[0];
          } else {
            hi = mid[0];
          }
        }
        starts.push_back(Eigen::VectorXd::Constant(1, 0.5 * (lo + hi)));
        wb[0] = -box_ + 2.0 * box_ * i / M;
        block_jet(b, x, wb, F, Fq, Ft, g, H, gq, gt);
      }
      prev_w = wb[0];
      prev_g = g[0];
    }
    for (int i = 0; i < S; ++i) starts.push_back(Eigen::VectorXd::Constant(1, -box_ + (2.0 * i + 1) * box_ / S));
  } else {
    // seeds where f is flat to second order all take their first Newton step
    // to the critical point of Q; one seed at the origin stands for them
    std::vector<int> idx(kb, 0);
    bool flat_seed = false;
    Eigen::VectorXd g, gq, gt;
    Eigen::MatrixXd H;
    double F, Fq, Ft;
    for (;;) {
      Eigen::VectorXd s(kb);
      for (int d = 0; d < kb; ++d) s[d] = -box_ + (2.0 * idx[d] + 1) * box_ / S;
      block_jet(b, x, s, F, Fq, Ft, g, H, gq, gt);
      Eigen::VectorXd gQ = b.hess_Q * s;
      if ((g - gQ).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + gQ.cwiseAbs().maxCoeff()) &&
          (H - b.hess_Q).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + b.hess_Q.cwiseAbs().maxCoeff()))
        flat_seed = true;
      else
        starts.push_back(s);
      int d = 0;
      while (d < kb && ++idx[d] == S) idx[d++] = 0;
      if (d == kb) break;
    }
    if (flat_seed) starts.push_back(Eigen::VectorXd::Zero(kb));
  }
  for (auto s : starts) {
    if (refine_block(b, x, s) && s.cwiseAbs().maxCoeff() <= box_ + 1e-9) found.push_back(s);
  }
  dedupe(found, cfg_.dedupe);
  // a 1D block with no sign change and no converging seed has no root in the
  // box; in higher dimension that cannot be told from divergence
  if (found.empty() && kb == 1) return found;
  if (found.empty())
    throw TraceError("Newton failed from every seed at q = " + fmt(x[0]) +
                     " (no fiber critical point found)");
  if (static_cast<int>(found.size()) > 4 * S)
    throw DegenerateError("too many fiber critical points at q = " + fmt(x[0]) +
                          "; dF/dw appears to vanish on an open set");
  for (const auto& r : found) {
    double F, Fq, Ft;
    Eigen::VectorXd g, gq, gt;
    Eigen::MatrixXd H;
    block_jet(b, x, r, F, Fq, Ft, g, H, gq, gt);
    if (std::fabs(H.determinant()) > 1e-12) continue;
    bool flat = true;
    for (int d = 0; d < kb && flat; ++d)
      for (double s : {-1e-3, 1e-3}) {
        Eigen::VectorXd p = r;
        p[d] += s;
        block_jet(b, x, p, F, Fq, Ft, g, H, gq, gt);
        if (g.norm() > 1e-12) flat = false;
      }
    if (flat)
      throw DegenerateError("plateau: dF/dw vanishes on an open set near q = " + fmt(x[0]));
  }
  return found;
}

std::vector<Eigen::VectorXd> FiberSystem::criticals(const Eigen::VectorXd& x,
                                                    const std::vector<Eigen::VectorXd>& extra) const {
  std::vector<Eigen::VectorXd> out{Eigen::VectorXd::Zero(k_)};
  for (const auto& b : blocks_) {
    const int kb = static_cast<int>(b.vars.size());
    std::vector<Eigen::VectorXd> seeds;
    for (const auto& e : extra) {
      Eigen::VectorXd s(kb);
      for (int i = 0; i < kb; ++i) s[i] = e[b.vars[i]];
      seeds.push_back(s);
    }
    auto roots = block_criticals(b, x, seeds);
    std::vector<Eigen::VectorXd> next;
    for (const auto& o : out)
      for (const auto& r : roots) {
        Eigen::VectorXd w = o;
        for (int i = 0; i < kb; ++i) w[b.vars[i]] = r[i];
        next.push_back(w);
      }
    out = std::move(next);
  }
  std::sort(out.begin(), out.end(), lex_less);
  return out;
}

CriticalPoint FiberSystem::describe(const Eigen::VectorXd& x, const Eigen::VectorXd& w) const {
  GfJet J = jet(x, w);
  CriticalPoint c;
  c.w = w;
  c.F = J.F;
  c.Fq = J.Fq;
  c.index = morse_index(J.H) - ref_index_;
  return c;
}

std::vector<Eigen::VectorXd> fiber_criticals(const GFQI& F, const Eigen::VectorXd& x,
                                             const TracerConfig& cfg) {
  return FiberSystem(F, cfg).criticals(x);
}

// ----- front tracing ----------------------------------------------------

namespace {

struct Root {
  double x = 0.0;
  Eigen::VectorXd w;
  double F = 0.0, Fq = 0.0;
  int index = 0;
  Eigen::VectorXd dwdx;  // empty near folds
  int branch = -1;
};

struct Column {
  double x = 0.0;
  std::vector<Root> roots;
};

class Tracer {
 public:
  Tracer(const GFQI& F, const TracerConfig& cfg, BaseGrid grid)
      : S_(F, cfg), cfg_(cfg) {
    lo_ = grid.n > 0 ? grid.lo : -F.R_base - cfg.margin;
    hi_ = grid.n > 0 ? grid.hi : F.R_base + cfg.margin;
    n_ = grid.n > 0 ? grid.n : cfg.grid;
    if (n_ < 2) throw TraceError("base grid needs at least two columns");
  }

  FrontDiagram run();

 private:
  FiberSystem S_;
  TracerConfig cfg_;
  double lo_, hi_;
  int n_;
  FrontDiagram D_;

  Eigen::VectorXd X(double x) const { return Eigen::VectorXd::Constant(1, x); }

  Root make_root(double x, const Eigen::VectorXd& w) const {
    GfJet J = S_.jet(X(x), w);
    Root r;
    r.x = x;
    r.w = w;
    r.F = J.F;
    r.Fq = J.Fq;
    r.index = morse_index(J.H) - S_.reference_index();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J.H);
    if (lu.rank() == J.H.rows()) {
      Eigen::VectorXd d = lu.solve(-J.gq);
      if (d.allFinite()) r.dwdx = d;
    }
    return r;
  }

  Column compute(double x, const std::vector<Eigen::VectorXd>& seeds) const {
    Column c;
    c.x = x;
    for (const auto& w : S_.criticals(X(x), seeds)) c.roots.push_back(make_root(x, w));
    return c;
  }

  // Roots found by continuing 'from' to x, added to c if new.
  void augment(Column& c, const Column& from) const {
    for (const auto& r : from.roots) {
      Eigen::VectorXd w = predict(r, c.x - from.x);
      if (!S_.refine(X(c.x), w) || w.cwiseAbs().maxCoeff() > S_.box() + 1e-9) continue;
      bool dup = false;
      for (const auto& o : c.roots)
        if ((o.w - w).norm() <= cfg_.dedupe) dup = true;
      if (!dup) c.roots.push_back(make_root(c.x, w));
    }
    std::sort(c.roots.begin(), c.roots.end(), [](const Root& a, const Root& b) { return lex_less(a.w, b.w); });
  }

  static Eigen::VectorXd predict(const Root& r, double dx) {
    if (r.dwdx.size() == 0) return r.w;
    Eigen::VectorXd step = r.dwdx * dx;
    if (step.norm() > 0.25) return r.w;
    return r.w + step;
  }

  FrontSample sample(const Root& r) const {
    FrontSample s;
    s.x = r.x;
    s.u = r.F;
    s.y = r.Fq;
    s.w.assign(r.w.data(), r.w.data() + r.w.size());
    return s;
  }

  int new_branch(int index) {
    Branch b;
    b.index = index;
    D_.branches.push_back(b);
    return static_cast<int>(D_.branches.size()) - 1;
  }

  struct Match {
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> lost, born;
    bool ok = true;
  };

  Match match(const Column& A, const Column& B) const;
  bool pair_up(const Column& C, const std::vector<int>& idx, std::vector<std::pair<int, int>>& out) const;
  bool locate_fold(double xa, const Eigen::VectorXd& w1, const Eigen::VectorXd& w2, double xb,
                   double& xc, Eigen::VectorXd& wc) const;
  std::vector<std::pair<Root, Root>> approach(double xc, const Eigen::VectorXd& wc, const Root& r1,
                                              const Root& r2, double x_far) const;
  void link(Column& A, Column& B, int depth);
  void densify();
  void find_crossings();
  double crossing_gap(int a, int b, double x, Eigen::VectorXd& wa, Eigen::VectorXd& wb, double& ya,
                      double& yb, double& ua) const;
};

Tracer::Match Tracer::match(const Column& A, const Column& B) const {
  Match m;
  const double dx = B.x - A.x;
  struct Cand {
    double cost;
    int a, b;
  };
  std::vector<Cand> cands;
  std::vector<Eigen::VectorXd> pa(A.roots.size()), pb(B.roots.size());
  for (std::size_t i = 0; i < A.roots.size(); ++i) pa[i] = predict(A.roots[i], dx);
  for (std::size_t j = 0; j < B.roots.size(); ++j) pb[j] = predict(B.roots[j], -dx);
  for (std::size_t i = 0; i < A.roots.size(); ++i)
    for (std::size_t j = 0; j < B.roots.size(); ++j) {
      if (A.roots[i].index != B.roots[j].index) continue;
      double c = 0.5 * ((pa[i] - B.roots[j].w).norm() + (pb[j] - A.roots[i].w).norm());
      double move = (A.roots[i].w - B.roots[j].w).norm();
      double bound = 0.1 + 4.0 * (pa[i] - A.roots[i].w).norm();
      if (move > bound && c > 0.05) continue;
      cands.push_back({c, static_cast<int>(i), static_cast<int>(j)});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return a.cost != b.cost ? a.cost < b.cost : (a.a != b.a ? a.a < b.a : a.b < b.b);
  });
  std::vector<int> ua(A.roots.size(), -1), ub(B.roots.size(), -1);
  for (const auto& c : cands) {
    if (ua[c.a] >= 0 || ub[c.b] >= 0) continue;
    // ambiguity: an unclaimed competitor at essentially the same cost
    for (const auto& d : cands)
      if (&d != &c && std::fabs(d.cost - c.cost) <= cfg_.ambiguity && ((d.a == c.a && ub[d.b] < 0) || (d.b == c.b && ua[d.a] < 0)) && d.cost > 0)
        m.ok = false;
    ua[c.a] = c.b;
    ub[c.b] = c.a;
    m.pairs.push_back({c.a, c.b});
  }
  for (std::size_t i = 0; i < A.roots.size(); ++i)
    if (ua[i] < 0) m.lost.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < B.roots.size(); ++j)
    if (ub[j] < 0) m.born.push_back(static_cast<int>(j));
  // each matched root should have moved consistently with its predictor
  for (auto [i, j] : m.pairs) {
    double err = (pa[i] - B.roots[j].w).norm();
    double step = (pa[i] - A.roots[i].w).norm();
    if (err > 0.05 + 0.5 * step) m.ok = false;
  }
  return m;
}

bool Tracer::pair_up(const Column& C, const std::vector<int>& idx,
                     std::vector<std::pair<int, int>>& out) const {
  if (idx.size() % 2) return false;
  std::vector<int> left = idx;
  while (!left.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < left.size(); ++i)
      for (std::size_t j = i + 1; j < left.size(); ++j) {
        const Root& a = C.roots[left[i]];
        const Root& b = C.roots[left[j]];
        if (std::abs(a.index - b.index) != 1) continue;
        double d = (a.w - b.w).norm();
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    if (!std::isfinite(best)) return false;
    int a = left[bi], b = left[bj];
    if (C.roots[a].index > C.roots[b].index) std::swap(a, b);
    out.push_back({a, b});  // (lower index, higher index)
    left.erase(left.begin() + bj);
    left.erase(left.begin() + bi);
  }
  return true;
}

// Fold point between xa (where the pair w1, w2 exists) and xb (where it
// does not): Newton on (grad_w F, det H) in (x, w), bisection as fallback.
bool Tracer::locate_fold(double xa, const Eigen::VectorXd& w1, const Eigen::VectorXd& w2, double xb,
                         double& xc, Eigen::VectorXd& wc) const {
  const int k = S_.fiber_dim();
  const double xlo = std::min(xa, xb), xhi = std::max(xa, xb);
  auto detH = [&](double x, const Eigen::VectorXd& w) { return S_.jet(X(x), w).H.determinant(); };
  double x = xa;
  Eigen::VectorXd w = 0.5 * (w1 + w2);
  const double span = (w1 - w2).norm();
  for (int it = 0; it < 60; ++it) {
    GfJet J = S_.jet(X(x), w);
    double phi = J.H.determinant();
    Eigen::VectorXd r(k + 1);
    r.head(k) = J.g;
    r[k] = phi;
    Eigen::MatrixXd Jac(k + 1, k + 1);
    Jac.block(0, 0, k, 1) = J.gq;
    Jac.block(0, 1, k, k) = J.H;
    const double h = 1e-6;
    Jac(k, 0) = (detH(x + h, w) - detH(x - h, w)) / (2 * h);
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
      e[i] = h;
      Jac(k, 1 + i) = (detH(x, w + e) - detH(x, w - e)) / (2 * h);
    }
    Eigen::VectorXd step = Jac.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    double n = step.norm();
    double cap = std::max(xhi - xlo, span) + 1e-3;
    if (n > cap) step *= cap / n;
    x += step[0];
    w += step.tail(k);
    if (step.norm() < 1e-13) break;
  }
  {
    GfJet J = S_.jet(X(x), w);
    double scale = std::max(1.0, J.H.norm());
    bool good = J.g.norm() <= 1e-9 && std::fabs(J.H.determinant()) <= 1e-7 * std::pow(scale, k) &&
                x >= xlo - 1e-9 && x <= xhi + 1e-9 && (w - 0.5 * (w1 + w2)).norm() <= 2 * span + 1e-3;
    if (good) {
      xc = std::clamp(x, xlo, xhi);
      wc = w;
      return true;
    }
  }
  // bisection on existence of the pair
  double a = xa, b = xb;
  Eigen::VectorXd u1 = w1, u2 = w2;
  for (int it = 0; it < 200 && std::fabs(b - a) > cfg_.cusp_dx; ++it) {
    double mid = 0.5 * (a + b);
    Eigen::VectorXd v1 = u1, v2 = u2;
    bool e1 = S_.refine(X(mid), v1), e2 = S_.refine(X(mid), v2);
    bool exists = e1 && e2 && (v1 - v2).norm() > 1e-9 &&
                  morse_index(S_.jet(X(mid), v1).H) != morse_index(S_.jet(X(mid), v2).H);
    if (exists) {
      a = mid;
      u1 = v1;
      u2 = v2;
    } else {
      b = mid;
    }
  }
  if (std::fabs(b - a) > cfg_.cusp_dx) return false;
  xc = a;
  wc = 0.5 * (u1 + u2);
  return true;
}

// Samples on both branches of a fold at geometrically shrinking distance
// from the cusp, ordered from x_far towards the cusp.
std::vector<std::pair<Root, Root>> Tracer::approach(double xc, const Eigen::VectorXd& wc, const Root& r1,
                                                    const Root& r2, double x_far) const {
  std::vector<std::pair<Root, Root>> out;
  double d = x_far - xc;
  Eigen::VectorXd v1 = r1.w, v2 = r2.w;
  double prev = d;
  for (double off = 0.5 * d; std::fabs(off) >= cfg_.cusp_refine_min; off *= 0.5) {
    double x = xc + off;
    double s = std::sqrt(off / prev);
    Eigen::VectorXd s1 = wc + (v1 - wc) * s, s2 = wc + (v2 - wc) * s;
    if (!S_.refine(X(x), s1) || !S_.refine(X(x), s2) || (s1 - s2).norm() < 1e-9) break;
    Root a = make_root(x, s1), b = make_root(x, s2);
    if (a.index != r1.index || b.index != r2.index) break;
    out.push_back({a, b});
    v1 = s1;
    v2 = s2;
    prev = off;
  }
  return out;
}

void Tracer::link(Column& A, Column& B, int depth) {
  Match m = match(A, B);
  std::vector<std::pair<int, int>> deaths, births;
  bool ok = m.ok && pair_up(A, m.lost, deaths) && pair_up(B, m.born, births);
  struct Fold {
    double x;
    Eigen::VectorXd w;
  };
  std::vector<Fold> dfold, bfold;
  if (ok) {
    for (auto [i, j] : deaths) {
      Fold f;
      if (!locate_fold(A.x, A.roots[i].w, A.roots[j].w, B.x, f.x, f.w)) {
        ok = false;
        break;
      }
      dfold.push_back(f);
    }
  }
  if (ok) {
    for (auto [i, j] : births) {
      Fold f;
      if (!locate_fold(B.x, B.roots[i].w, B.roots[j].w, A.x, f.x, f.w)) {
        ok = false;
        break;
      }
      bfold.push_back(f);
    }
  }
  if (!ok) {
    if (depth >= cfg_.max_refine)
      throw TraceError("branch matching unresolved between q = " + fmt(A.x) + " and q = " + fmt(B.x) +
                       " after " + std::to_string(depth) + " refinements");
    Column M = compute(0.5 * (A.x + B.x), {});
    augment(M, A);
    augment(M, B);
    link(A, M, depth + 1);
    link(M, B, depth + 1);
    return;
  }

  for (auto [i, j] : m.pairs) {
    int br = A.roots[i].branch;
    B.roots[j].branch = br;
    D_.branches[br].samples.push_back(sample(B.roots[j]));
  }
  auto cusp_at = [&](const Fold& f, CuspSide side, int b1, int b2, double u1, double u2) {
    Root c = make_root(f.x, f.w);
    Cusp cu;
    cu.x = f.x;
    cu.u = c.F;
    cu.side = side;
    cu.upper = u1 >= u2 ? b1 : b2;
    cu.lower = u1 >= u2 ? b2 : b1;
    cu.w.assign(f.w.data(), f.w.data() + f.w.size());
    D_.cusps.push_back(cu);
    return std::pair<int, FrontSample>(static_cast<int>(D_.cusps.size()) - 1, sample(c));
  };
  for (std::size_t n = 0; n < deaths.size(); ++n) {
    const Root& r1 = A.roots[deaths[n].first];
    const Root& r2 = A.roots[deaths[n].second];
    const Fold& f = dfold[n];
    auto& s1 = D_.branches[r1.branch].samples;
    auto& s2 = D_.branches[r2.branch].samples;
    double u1 = r1.F, u2 = r2.F;
    for (const auto& [a, b] : approach(f.x, f.w, r1, r2, A.x)) {
      if (a.x <= s1.back().x || a.x >= f.x) continue;
      s1.push_back(sample(a));
      s2.push_back(sample(b));
      u1 = a.F;
      u2 = b.F;
    }
    auto [id, cs] = cusp_at(f, CuspSide::right, r1.branch, r2.branch, u1, u2);
    if (cs.x > s1.back().x) s1.push_back(cs);
    if (cs.x > s2.back().x) s2.push_back(cs);
    D_.branches[r1.branch].right_cusp = id;
    D_.branches[r2.branch].right_cusp = id;
  }
  for (std::size_t n = 0; n < births.size(); ++n) {
    Root& r1 = B.roots[births[n].first];
    Root& r2 = B.roots[births[n].second];
    const Fold& f = bfold[n];
    auto near = approach(f.x, f.w, r1, r2, B.x);
    std::reverse(near.begin(), near.end());
    double u1 = near.empty() ? r1.F : near.front().first.F;
    double u2 = near.empty() ? r2.F : near.front().second.F;
    r1.branch = new_branch(r1.index);
    r2.branch = new_branch(r2.index);
    auto [id, cs] = cusp_at(f, CuspSide::left, r1.branch, r2.branch, u1, u2);
    auto& s1 = D_.branches[r1.branch].samples;
    auto& s2 = D_.branches[r2.branch].samples;
    s1.push_back(cs);
    s2.push_back(cs);
    for (const auto& [a, b] : near) {
      if (a.x <= s1.back().x || a.x >= B.x) continue;
      s1.push_back(sample(a));
      s2.push_back(sample(b));
    }
    if (B.x > s1.back().x) s1.push_back(sample(r1));
    if (B.x > s2.back().x) s2.push_back(sample(r2));
    D_.branches[r1.branch].left_cusp = id;
    D_.branches[r2.branch].left_cusp = id;
  }
}

// Bisect branch segments until the discrete front condition holds; this is
// where the sampling gets dense near cusps.
void Tracer::densify() {
  for (auto& b : D_.branches) {
    std::vector<FrontSample> out;
    std::vector<FrontSample> stack;
    const auto& in = b.samples;
    if (in.empty()) continue;
    out.push_back(in.front());
    for (std::size_t i = 1; i < in.size(); ++i) {
      stack.push_back(in[i]);
      while (!stack.empty()) {
        const FrontSample p = out.back();
        const FrontSample s = stack.back();
        double dx = s.x - p.x;
        double defect = dx > 0 ? std::fabs((s.u - p.u) - 0.5 * (s.y + p.y) * dx) / dx : 0.0;
        if (defect <= cfg_.tol_front || dx < 1e-3 * cfg_.cusp_dx) {
          out.push_back(s);
          stack.pop_back();
          continue;
        }
        double xm = 0.5 * (p.x + s.x);
        Eigen::VectorXd w(static_cast<int>(p.w.size()));
        for (int j = 0; j < w.size(); ++j) w[j] = 0.5 * (p.w[j] + s.w[j]);
        bool good = S_.refine(X(xm), w);
        if (good) {
          Root r = make_root(xm, w);
          double span = 0.0;
          for (int j = 0; j < w.size(); ++j) span = std::max(span, std::fabs(p.w[j] - s.w[j]));
          double off = 0.0;
          for (int j = 0; j < w.size(); ++j)
            off = std::max(off, std::fabs(w[j] - 0.5 * (p.w[j] + s.w[j])));
          // flat fiber tracks: accept a small offset if the height follows the Hermite midpoint
          double herm = 0.5 * (p.u + s.u) + 0.125 * (p.y - s.y) * dx;
          bool near = off <= span + 1e-9 || (off <= 1e-2 && std::fabs(r.F - herm) <= defect * dx);
          good = r.index == b.index && near;
          if (good) stack.push_back(sample(r));
        }
        if (!good) {
          out.push_back(s);
          stack.pop_back();
        }
      }
    }
    b.samples = std::move(out);
  }
}

double Tracer::crossing_gap(int a, int b, double x, Eigen::VectorXd& wa, Eigen::VectorXd& wb, double& ya,
                            double& yb, double& ua) const {
  auto witness = [&](int br, Eigen::VectorXd& w, double& u, double& y) {
    const auto& s = D_.branches[br].samples;
    auto it = std::lower_bound(s.begin(), s.end(), x, [](const FrontSample& p, double v) { return p.x < v; });
    if (it == s.end()) --it;
    auto pr = it == s.begin() ? it : it - 1;
    double t = it->x > pr->x ? (x - pr->x) / (it->x - pr->x) : 0.0;
    w.resize(static_cast<int>(it->w.size()));
    for (int i = 0; i < w.size(); ++i) w[i] = pr->w[i] + t * (it->w[i] - pr->w[i]);
    double uu = pr->u + t * (it->u - pr->u);
    if (S_.refine(X(x), w)) {
      GfJet J = S_.jet(X(x), w);
      u = J.F;
      y = J.Fq;
    } else {
      u = uu;
      y = pr->y + t * (it->y - pr->y);
    }
  };
  double ub;
  witness(a, wa, ua, ya);
  witness(b, wb, ub, yb);
  return ua - ub;
}

void Tracer::find_crossings() {
  const int nb = static_cast<int>(D_.branches.size());
  for (int a = 0; a < nb; ++a)
    for (int b = a + 1; b < nb; ++b) {
      const auto& sa = D_.branches[a].samples;
      const auto& sb = D_.branches[b].samples;
      double lo = std::max(sa.front().x, sb.front().x), hi = std::min(sa.back().x, sb.back().x);
      if (!(lo < hi)) continue;
      std::vector<double> xs;
      for (const auto& p : sa)
        if (p.x >= lo && p.x <= hi) xs.push_back(p.x);
      for (const auto& p : sb)
        if (p.x >= lo && p.x <= hi) xs.push_back(p.x);
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
      std::vector<std::pair<double, double>> d;
      for (double x : xs) {
        double g = *branch_height(D_.branches[a], x) - *branch_height(D_.branches[b], x);
        if (std::fabs(g) > 1e-13) d.push_back({x, g});
      }
      for (std::size_t i = 1; i < d.size(); ++i) {
        if ((d[i - 1].second < 0) == (d[i].second < 0)) continue;
        double x0 = d[i - 1].first, x1 = d[i].first, g0 = d[i - 1].second, g1 = d[i].second;
        Eigen::VectorXd wa, wb;
        double ya = 0, yb = 0, ua = 0;
        double x = x0;
        int side = 0;
        for (int it = 0; it < 100 && x1 - x0 > 1e-13; ++it) {
          x = x0 - g0 * (x1 - x0) / (g1 - g0);
          if (!(x > x0 && x < x1)) x = 0.5 * (x0 + x1);
          double g = crossing_gap(a, b, x, wa, wb, ya, yb, ua);
          if (g == 0.0) break;
          if ((g < 0) == (g0 < 0)) {
            x0 = x;
            g0 = g;
            if (side == -1) g1 *= 0.5;
            side = -1;
          } else {
            x1 = x;
            g1 = g;
            if (side == 1) g0 *= 0.5;
            side = 1;
          }
          if (std::fabs(g) < 1e-14) break;
        }
        crossing_gap(a, b, x, wa, wb, ya, yb, ua);
        Crossing c;
        c.x = x;
        c.u = ua;
        c.a = a;
        c.b = b;
        c.over = ya < yb ? a : b;
        D_.crossings.push_back(c);
      }
    }
  std::sort(D_.crossings.begin(), D_.crossings.end(),
            [](const Crossing& p, const Crossing& q) { return p.x != q.x ? p.x < q.x : p.u < q.u; });
}

FrontDiagram Tracer::run() {
  D_ = FrontDiagram{};
  D_.x_min = lo_;
  D_.x_max = hi_;
  std::vector<Column> cols(n_);
  for (int j = 0; j < n_; ++j) {
    double x = j == n_ - 1 ? hi_ : lo_ + (hi_ - lo_) * j / (n_ - 1);
    std::vector<Eigen::VectorXd> seeds;
    if (j > 0)
      for (const auto& r : cols[j - 1].roots) seeds.push_back(predict(r, x - cols[j - 1].x));
    cols[j] = compute(x, seeds);
  }
  for (int j = n_ - 2; j >= 0; --j) augment(cols[j], cols[j + 1]);
  for (int j = 1; j < n_; ++j) augment(cols[j], cols[j - 1]);
  for (auto& r : cols[0].roots) {
    r.branch = new_branch(r.index);
    D_.branches[r.branch].samples.push_back(sample(r));
  }
  for (int j = 0; j + 1 < n_; ++j) link(cols[j], cols[j + 1], 0);
  densify();
  find_crossings();
  return D_;
}

}  // namespace

FrontDiagram trace_front(const GFQI& F, const TracerConfig& cfg, BaseGrid grid) {
  if (F.base_dim != 1) throw TraceError("trace_front needs a one-dimensional base");
  Tracer T(F, cfg, grid);
  return T.run();
}

double front_distance(const FrontDiagram& A, const FrontDiagram& B) { return hausdorff_distance(A, B); }

}  // namespace gfqi
