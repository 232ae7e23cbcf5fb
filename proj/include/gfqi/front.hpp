#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gfqi {

struct FrontSample {
  double x = 0.0;
  double u = 0.0;
  double y = 0.0;
  std::vector<double> w;
};

/// An x-monotone piece of the front. Its ends are cusps or the edges of the
/// traced window.
struct Branch {
  std::vector<FrontSample> samples;
  int index = -1;       // Morse index of the fiber critical point, -1 if unknown
  int left_cusp = -1;   // -1: runs to the left edge
  int right_cusp = -1;  // -1: runs to the right edge
  int direction = 0;    // +1 rightward, -1 leftward, 0 not oriented
  int component = -1;
};

enum class CuspSide { left, right };
enum class Vertical { none, up, down };

struct Cusp {
  double x = 0.0;
  double u = 0.0;
  CuspSide side = CuspSide::left;
  Vertical sense = Vertical::none;
  int upper = -1;  // branch ids
  int lower = -1;
  std::vector<double> w;
};

struct Crossing {
  double x = 0.0;
  double u = 0.0;
  int a = -1;
  int b = -1;
  int over = -1;
  int sign = 0;
};

struct FrontDiagram {
  std::vector<Branch> branches;
  std::vector<Cusp> cusps;
  std::vector<Crossing> crossings;
  double x_min = 0.0;
  double x_max = 0.0;
  bool oriented = false;
  int components = 0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
};

/// Smallest interval outside which the diagram is the zero section.
Interval support_of(const FrontDiagram& D, double tol = 1e-6);

/// Largest violation of |du - y dx| / |dx| over all branch segments, using the
/// mean of the end slopes.
double front_condition_defect(const FrontDiagram& D);

/// Front height u interpolated on branch b at x, if b covers x.
std::optional<double> branch_height(const Branch& b, double x);

int branch_count_at(const FrontDiagram& D, double x);

/// Symmetric Hausdorff distance between the (x, u) point sets of two
/// diagrams, with polylines densified so that segments count, not only
/// vertices.
double hausdorff_distance(const FrontDiagram& A, const FrontDiagram& B);

/// Largest |u| over all samples.
double max_abs_height(const FrontDiagram& D);

/// Reflect x -> -x and rebuild branch and cusp bookkeeping.
FrontDiagram reflect(const FrontDiagram& D);

}  // namespace gfqi
