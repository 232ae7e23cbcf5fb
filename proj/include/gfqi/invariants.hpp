#pragma once

#include <string>

#include "gfqi/expr.hpp"
#include "gfqi/front.hpp"

namespace gfqi {

struct StructureError : Error {
  using Error::Error;
};

struct KnotInvariants {
  int components = 0;
  int crossings = 0;
  int cusps = 0;
  int writhe = 0;
  int tb = 0;
  int rotation = 0;
  bool has_zigzag = false;

  bool operator==(const KnotInvariants&) const = default;
};

/// Orient every component and fill in cusp senses and crossing signs.
///
/// Traced fronts carry the Morse index of each branch; a branch runs to the
/// right exactly when its index is even. Fronts without index data are
/// oriented by alternating direction through cusps, starting rightward on
/// the left tail of long components and on the lowest-numbered branch of
/// closed ones.
FrontDiagram orient_front(const FrontDiagram& D);

int writhe(const FrontDiagram& D);

/// writhe - cusps / 2 over the whole diagram.
int thurston_bennequin(const FrontDiagram& D);

/// (down cusps - up cusps) / 2.
int rotation_number(const FrontDiagram& D);

/// A cusp-to-cusp branch without crossings whose two cusps have the same
/// vertical sense. This is a syntactic pattern check, not a proof that the
/// knot is a stabilization.
bool has_zigzag(const FrontDiagram& D);

KnotInvariants classify(const FrontDiagram& D);

std::string to_string(const KnotInvariants& k);

}  // namespace gfqi
