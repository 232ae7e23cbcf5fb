#include <random>
#include <regex>

#include "doctest.h"
#include "gfqi/catalog.hpp"
#include "gfqi/constructions.hpp"
#include "gfqi/invariants.hpp"
#include "gfqi/io.hpp"
#include "gfqi/svg.hpp"

using namespace gfqi;

namespace {

int count(const std::string& s, const std::string& pat) {
  int n = 0;
  for (auto p = s.find(pat); p != std::string::npos; p = s.find(pat, p + 1)) ++n;
  return n;
}

std::string replace_once(std::string s, const std::string& a, const std::string& b) {
  auto p = s.find(a);
  REQUIRE(p != std::string::npos);
  return s.replace(p, a.size(), b);
}

}  // namespace

TEST_CASE("gf files round trip") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  std::vector<GFQI> gfs{zero_section_gf(), eye_gf(), trefoil_gf(), connect_sum(eye_gf(), eye_gf()),
                        theorem29_path(eye_gf(), 0.3)};
  for (const auto& F : gfs) {
    CAPTURE(F.name);
    std::string text = write_gf(F);
    GfFile back = read_gf(text);
    CHECK(write_gf(back.gf) == text);
    CHECK_FALSE(back.sigma.has_value());
    CHECK(back.gf.name == F.name);
    CHECK(back.gf.fiber_dim == F.fiber_dim);
    CHECK(back.gf.R_base == F.R_base);
    CHECK(back.gf.fiber_compact == F.fiber_compact);
    CHECK(back.gf.Q.matrix() == F.Q.matrix());
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd w(F.fiber_dim);
      for (int j = 0; j < F.fiber_dim; ++j) w[j] = U(rng);
      double x = U(rng);
      CHECK(eval_F(back.gf, point({x}), w) == eval_F(F, point({x}), w));
    }
  }
  CobordismGF S = spin_gf(eye_gf());
  GfFile sf = read_gf(write_gf(S.G, S.sigma));
  REQUIRE(sf.sigma.has_value());
  CHECK(*sf.sigma == S.sigma);
  CHECK(sf.gf.base_dim == 2);
}

TEST_CASE("gf parse errors") {
  std::string good = write_gf(eye_gf());
  auto offset_of = [](const std::string& text) -> std::size_t {
    try {
      read_gf(text);
    } catch (const ParseError& e) {
      return e.offset;
    }
    FAIL("no parse error");
    return 0;
  };
  CHECK_THROWS_AS(read_gf(""), ParseError);
  CHECK_THROWS_AS(read_gf("gfqi-gf 2\n"), ParseError);
  CHECK_THROWS_AS(read_gf(replace_once(good, "R_base 1.3", "R_base x")), ParseError);
  CHECK_THROWS_AS(read_gf(replace_once(good, "end\n", "")), ParseError);
  // the offset points into the expression line
  std::string bad = replace_once(good, "\nf (", "\nf ((");
  std::size_t off = offset_of(bad);
  CHECK(off > bad.find("\nf "));
  CHECK(off < bad.size());
  // well formed but not a gfqi
  CHECK_THROWS_AS(read_gf(replace_once(good, "R_base 1.3", "R_base 0.5")), ValidationError);
}

TEST_CASE("front files round trip") {
  for (const auto* name : {"zero", "eye", "trefoil", "left-trefoil", "stabilized-unknot"}) {
    CAPTURE(name);
    const CatalogEntry& e = catalog_entry(name);
    FrontDiagram D = e.gf ? trace_front(*e.gf) : *e.front;
    std::string text = write_front(D);
    FrontDiagram back = read_front(text);
    CHECK(write_front(back) == text);
    CHECK(classify(back) == classify(D));
    CHECK(text.find("invariants " + std::to_string(e.expected.components)) != std::string::npos);
  }
  CHECK_THROWS_AS(read_front("gfqi-front 1\nwindow 0\n"), ParseError);
  CHECK_THROWS_AS(read_front("gfqi-gf 1\n"), ParseError);
}

TEST_CASE("svg") {
  std::string zero = render_svg(trace_front(zero_section_gf()));
  CHECK(count(zero, "<path") == 1);
  CHECK(count(zero, "<circle") == 0);
  FrontDiagram E = trace_front(eye_gf());
  std::string eye = render_svg(E);
  CHECK(eye == render_svg(E));
  CHECK(count(eye, "<circle") == 2);
  CHECK(count(eye, " M") == 0);
  std::string tre = render_svg(trace_front(trefoil_gf()));
  CHECK(count(tre, "<circle") == 4);
  // one break in the under strand per crossing
  CHECK(count(tre, " M") == 3);
  CHECK(std::regex_search(tre, std::regex("^<svg [^>]*width=\"640\"")));
}
