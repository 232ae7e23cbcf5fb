#pragma once

#include <string>

#include "gfqi/front.hpp"
#include "gfqi/gf_core.hpp"
#include "gfqi/tracer.hpp"

namespace gfqi {

/// A path t -> F_t of gfqi's, stored as one GFQI over (q, t).
struct GfqiPath {
  GFQI family;
  GFQI start;
  GFQI end;
  std::string name;

  GFQI at(double t) const;
  CobordismGF cobordism() const;
};

/// (q, w) -> F(-q, w).
GFQI mirror_gf(const GFQI& F);

/// Shift used by connect_sum: R_base(F) + R_base(F') + 1.
double connect_shift(const GFQI& F, const GFQI& Fp);

/// F(q + T, w) + F'(q - T, w'), L on the left.
GFQI connect_sum(const GFQI& F, const GFQI& Fp);

/// F1(q, w1) + F2(q, w2) over a shared base.
GFQI smile_sum(const GFQI& F1, const GFQI& F2);

/// Translate F so that its support sits in q >= 1.
GFQI half_space(const GFQI& F);

/// Spun cobordism F(sqrt(q^2 + (sigma t)^2), w) of the half-space translate.
CobordismGF spin_gf(const GFQI& F);

/// f(-q, cos(pi t/2) w + sin(pi t/2) wbar) + f(q, w) + Q(w) + Q(wbar), with f
/// taken from half_space(F).
GFQI theorem29_path(const GFQI& F, double t);
GfqiPath theorem29_family(const GFQI& F);

/// Smallest and largest spacing lh_family accepts.
double lh_min_spacing();
double lh_max_spacing();

/// Tilt amplitude giving plateau spacing H; throws outside the feasible range.
double lh_amplitude(double H);

/// Long strand with three horizontal strings over [-W, W]: one at u = 0 and
/// two above it H apart. The pair is born left of the plateau and dies on the
/// right after passing below the bottom string, so the front has two cusps and
/// one crossing.
GFQI lh_family(double H, double support_width = 1.5);

/// u-extent of a traced front.
double front_height(const FrontDiagram& D);

/// t -> smile_sum(F, L_H) with the L_H spacing shrinking from H to eps. The
/// tilt amplitude moves linearly in t. With verify set the moment detector
/// runs over the family and any event is an error.
GfqiPath prop34_homotopy(const GFQI& F, double H, double eps, bool verify = true,
                         const TracerConfig& cfg = {});

}  // namespace gfqi
