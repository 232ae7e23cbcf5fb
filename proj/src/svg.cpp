#include "gfqi/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace gfqi {

namespace {

std::string px(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3f", v);
  return b;
}

}  // namespace

std::string render_svg(const FrontDiagram& D, const SvgOptions& opt) {
  double ulo = 0.0, uhi = 0.0;
  for (const auto& b : D.branches)
    for (const auto& s : b.samples) {
      ulo = std::min(ulo, s.u);
      uhi = std::max(uhi, s.u);
    }
  if (uhi - ulo < 1e-9) {
    ulo -= 1.0;
    uhi += 1.0;
  }
  const double xlo = D.x_min, xhi = D.x_max > D.x_min ? D.x_max : D.x_min + 1.0;
  const double sx = (opt.width - 2 * opt.margin) / (xhi - xlo);
  const double su = (opt.height - 2 * opt.margin) / (uhi - ulo);
  auto X = [&](double x) { return opt.margin + (x - xlo) * sx; };
  auto Y = [&](double u) { return opt.height - opt.margin - (u - ulo) * su; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
    << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t bi = 0; bi < D.branches.size(); ++bi) {
    const auto& s = D.branches[bi].samples;
    std::vector<std::pair<double, double>> holes;
    for (const auto& c : D.crossings) {
      int under = c.over == c.a ? c.b : c.a;
      if (under == static_cast<int>(bi)) holes.push_back({X(c.x), Y(c.u)});
    }
    auto hidden = [&](double x, double y) {
      for (auto [hx, hy] : holes)
        if (std::hypot(x - hx, y - hy) < opt.gap) return true;
      return false;
    };
    std::string d;
    bool pen = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      double x = X(s[i].x), y = Y(s[i].u);
      if (hidden(x, y)) {
        pen = false;
        continue;
      }
      d += (pen ? " L" : (d.empty() ? "M" : " M")) + px(x) + ' ' + px(y);
      pen = true;
    }
    if (!d.empty()) o << "<path d=\"" << d << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }
  for (const auto& c : D.cusps)
    o << "<circle cx=\"" << px(X(c.x)) << "\" cy=\"" << px(Y(c.u)) << "\" r=\"2.5\" fill=\""
      << (c.side == CuspSide::left ? "steelblue" : "firebrick") << "\"/>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace gfqi
