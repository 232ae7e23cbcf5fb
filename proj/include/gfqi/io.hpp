#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gfqi/front.hpp"
#include "gfqi/gf_core.hpp"

namespace gfqi {

/// Plain-text gf file. A base_dim 2 file may carry the t scaling of a spun
/// family.
struct GfFile {
  GFQI gf;
  std::optional<double> sigma;
};

std::string write_gf(const GFQI& F, std::optional<double> sigma = std::nullopt);

/// Throws ParseError (offset into text) for syntax errors and ValidationError
/// when the parsed gf is not a gfqi.
GfFile read_gf(std::string_view text, const ValidationOptions& opt = {});

/// Front file with an invariants block when the diagram can be classified.
std::string write_front(const FrontDiagram& D);
FrontDiagram read_front(std::string_view text);

}  // namespace gfqi
