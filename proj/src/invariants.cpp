#include "gfqi/invariants.hpp"

#include <cmath>
#include <numeric>
#include <vector>

namespace gfqi {

namespace {

const FrontDiagram& ensure_oriented(const FrontDiagram& D, FrontDiagram& tmp) {
  if (D.oriented) return D;
  tmp = orient_front(D);
  return tmp;
}

}  // namespace

FrontDiagram orient_front(const FrontDiagram& D) {
  FrontDiagram R = D;
  const int nb = static_cast<int>(R.branches.size());
  const double edge_tol = 1e-9 * (1.0 + std::fabs(R.x_min) + std::fabs(R.x_max));
  std::vector<int> parent(nb);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < nb; ++i) {
    const Branch& b = R.branches[i];
    if (b.samples.empty()) throw StructureError("branch " + std::to_string(i) + " has no samples");
    if (b.left_cusp < 0 && std::fabs(b.samples.front().x - R.x_min) > edge_tol)
      throw StructureError("branch " + std::to_string(i) + " has a dangling left end");
    if (b.right_cusp < 0 && std::fabs(b.samples.back().x - R.x_max) > edge_tol)
      throw StructureError("branch " + std::to_string(i) + " has a dangling right end");
  }
  for (std::size_t c = 0; c < R.cusps.size(); ++c) {
    const Cusp& cu = R.cusps[c];
    if (cu.upper < 0 || cu.lower < 0 || cu.upper >= nb || cu.lower >= nb || cu.upper == cu.lower)
      throw StructureError("cusp " + std::to_string(c) + " does not join two branches");
    auto attached = [&](int b) {
      return cu.side == CuspSide::left ? R.branches[b].left_cusp == static_cast<int>(c)
                                       : R.branches[b].right_cusp == static_cast<int>(c);
    };
    if (!attached(cu.upper) || !attached(cu.lower))
      throw StructureError("cusp " + std::to_string(c) + " disagrees with its branches");
    parent[find(cu.upper)] = find(cu.lower);
  }

  bool indexed = nb > 0;
  for (const auto& b : R.branches) indexed = indexed && b.index >= 0;
  std::vector<int> dir(nb, 0);
  if (indexed) {
    for (int i = 0; i < nb; ++i) dir[i] = R.branches[i].index % 2 == 0 ? 1 : -1;
  } else {
    std::vector<std::vector<std::pair<int, int>>> adj(nb);
    for (const auto& cu : R.cusps) {
      adj[cu.upper].push_back({cu.lower, 0});
      adj[cu.lower].push_back({cu.upper, 0});
    }
    std::vector<int> order(nb);
    std::iota(order.begin(), order.end(), 0);
    // left tails first so that long components start there
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (R.branches[a].left_cusp < 0) > (R.branches[b].left_cusp < 0);
    });
    for (int start : order) {
      if (dir[start] != 0) continue;
      dir[start] = 1;
      std::vector<int> stack{start};
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (auto [u, _] : adj[v]) {
          if (dir[u] == 0) {
            dir[u] = -dir[v];
            stack.push_back(u);
          }
        }
      }
    }
  }
  for (const auto& cu : R.cusps)
    if (dir[cu.upper] == dir[cu.lower])
      throw StructureError("orientation does not reverse through the cusp at q = " + format_double(cu.x));
  for (int i = 0; i < nb; ++i) {
    const Branch& b = R.branches[i];
    if (b.left_cusp < 0 && dir[i] != 1 && b.right_cusp >= 0)
      throw StructureError("left tail of a long component is not oriented rightward");
  }

  std::vector<int> comp_id(nb, -1);
  int ncomp = 0;
  for (int i = 0; i < nb; ++i) {
    int r = find(i);
    if (comp_id[r] < 0) comp_id[r] = ncomp++;
    R.branches[i].component = comp_id[r];
    R.branches[i].direction = dir[i];
  }
  R.components = ncomp;
  for (auto& cu : R.cusps) {
    if (cu.side == CuspSide::right) {
      int arriving = dir[cu.upper] == 1 ? cu.upper : cu.lower;
      cu.sense = arriving == cu.lower ? Vertical::up : Vertical::down;
    } else {
      int arriving = dir[cu.upper] == -1 ? cu.upper : cu.lower;
      cu.sense = arriving == cu.upper ? Vertical::down : Vertical::up;
    }
  }
  for (auto& c : R.crossings) c.sign = dir[c.a] * dir[c.b];
  R.oriented = true;
  return R;
}

int writhe(const FrontDiagram& D) {
  FrontDiagram tmp;
  const FrontDiagram& O = ensure_oriented(D, tmp);
  int w = 0;
  for (const auto& c : O.crossings) w += c.sign;
  return w;
}

int thurston_bennequin(const FrontDiagram& D) {
  if (D.cusps.size() % 2) throw StructureError("odd number of cusps");
  return writhe(D) - static_cast<int>(D.cusps.size()) / 2;
}

int rotation_number(const FrontDiagram& D) {
  FrontDiagram tmp;
  const FrontDiagram& O = ensure_oriented(D, tmp);
  int down = 0, up = 0;
  for (const auto& c : O.cusps) (c.sense == Vertical::down ? down : up)++;
  if ((down - up) % 2) throw StructureError("down and up cusp counts have different parity");
  return (down - up) / 2;
}

bool has_zigzag(const FrontDiagram& D) {
  FrontDiagram tmp;
  const FrontDiagram& O = ensure_oriented(D, tmp);
  for (int i = 0; i < static_cast<int>(O.branches.size()); ++i) {
    const Branch& b = O.branches[i];
    if (b.left_cusp < 0 || b.right_cusp < 0) continue;
    bool crossed = false;
    for (const auto& c : O.crossings) crossed = crossed || c.a == i || c.b == i;
    if (crossed) continue;
    if (O.cusps[b.left_cusp].sense == O.cusps[b.right_cusp].sense) return true;
  }
  return false;
}

KnotInvariants classify(const FrontDiagram& D) {
  FrontDiagram tmp;
  const FrontDiagram& O = ensure_oriented(D, tmp);
  KnotInvariants k;
  k.components = O.components;
  k.crossings = static_cast<int>(O.crossings.size());
  k.cusps = static_cast<int>(O.cusps.size());
  k.writhe = writhe(O);
  k.tb = thurston_bennequin(O);
  k.rotation = rotation_number(O);
  k.has_zigzag = has_zigzag(O);
  return k;
}

std::string to_string(const KnotInvariants& k) {
  return "components " + std::to_string(k.components) + ", crossings " + std::to_string(k.crossings) +
         ", cusps " + std::to_string(k.cusps) + ", writhe " + std::to_string(k.writhe) + ", tb " +
         std::to_string(k.tb) + ", rot " + std::to_string(k.rotation) + ", zigzag " +
         (k.has_zigzag ? "yes" : "no");
}

}  // namespace gfqi
