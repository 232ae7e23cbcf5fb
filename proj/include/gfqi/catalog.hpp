#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gfqi/front.hpp"
#include "gfqi/gf_core.hpp"
#include "gfqi/invariants.hpp"
#include "gfqi/tracer.hpp"

namespace gfqi {

GFQI zero_section_gf();

/// Zero section together with a closed two-cusp eye over |q| < 1.3.
GFQI eye_gf();

/// Zero section together with a closed right-handed trefoil (tb 1), from a
/// keyframed bump train in one fiber variable.
GFQI trefoil_gf();

/// Zero section together with a closed maximal left-handed trefoil front
/// (tb -6). Front only: its rotation number is odd.
FrontDiagram left_trefoil_front();

/// Zero section with one zigzag.
FrontDiagram stabilized_unknot_front();

/// Front with 2n strands capped by left and right cusps on the pairs
/// (0,1), (2,3), ... and crossings between positions i and i+1 for each i in
/// word, from left to right. Position 0 is the top.
FrontDiagram plat_front(int strands, const std::vector<int>& word, double base = 1.0);

/// Cobordism gf w^3 - 3(q^2 - (t - 1/2))w near the origin, cut off to
/// compact support. Its only moment is at q = 0, t = 1/2, w = 0.
CobordismGF saddle_model();

enum class CatalogKind { gfqi, front_only };

struct CatalogEntry {
  std::string name;
  CatalogKind kind = CatalogKind::gfqi;
  std::optional<GFQI> gf;
  std::optional<FrontDiagram> front;
  KnotInvariants expected;
};

const std::vector<CatalogEntry>& catalog();
const CatalogEntry& catalog_entry(const std::string& name);  // throws Error

}  // namespace gfqi
