#pragma once

#include <string>

#include "gfqi/front.hpp"

namespace gfqi {

struct SvgOptions {
  int width = 640;
  int height = 360;
  double margin = 20.0;
  double gap = 5.0;  // half-length of the break in the under strand, in pixels
};

/// Branches as paths, cusps as small circles, and the under strand broken at
/// each crossing.
std::string render_svg(const FrontDiagram& D, const SvgOptions& opt = {});

}  // namespace gfqi
