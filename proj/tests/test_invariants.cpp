#include "doctest.h"
#include "gfqi/catalog.hpp"
#include "gfqi/constructions.hpp"
#include "gfqi/invariants.hpp"

using namespace gfqi;

namespace {

KnotInvariants K(int comp, int cross, int cusps, int wr, int tb, int rot, bool zz) {
  KnotInvariants k;
  k.components = comp;
  k.crossings = cross;
  k.cusps = cusps;
  k.writhe = wr;
  k.tb = tb;
  k.rotation = rot;
  k.has_zigzag = zz;
  return k;
}

}  // namespace

TEST_CASE("zero section") {
  FrontDiagram D = orient_front(trace_front(zero_section_gf()));
  CHECK(D.components == 1);
  CHECK(D.branches[0].direction == 1);
  CHECK(classify(D) == K(1, 0, 0, 0, 0, 0, false));
}

TEST_CASE("plat oracles") {
  // closed unknot: two cusps, no crossings
  CHECK(classify(plat_front(2, {})) == K(1, 0, 2, 0, -1, 0, false));
  // maximal right trefoil as the closure of three crossings on the middle pair
  KnotInvariants t = classify(plat_front(4, {1, 1, 1}));
  CHECK(t.components == 1);
  CHECK(t.crossings == 3);
  CHECK(t.cusps == 4);
  CHECK(t.tb == 1);
  CHECK(t.rotation == 0);
  // two unlinked unknots
  CHECK(classify(plat_front(4, {})) == K(2, 0, 4, 0, -2, 0, false));
}

TEST_CASE("catalog traces") {
  for (const auto& e : catalog()) {
    CAPTURE(e.name);
    FrontDiagram D = e.gf ? trace_front(*e.gf) : *e.front;
    KnotInvariants k = classify(D);
    CHECK(k == e.expected);
    CHECK(k.tb == writhe(orient_front(D)) - k.cusps / 2);
    CHECK(k.tb == thurston_bennequin(D));
    CHECK(k.rotation == rotation_number(D));
    CHECK(k.has_zigzag == has_zigzag(D));
    if (e.gf) {
      CHECK(k.rotation == 0);
      CHECK_FALSE(k.has_zigzag);
    }
  }
  CHECK(classify(left_trefoil_front()).rotation != 0);
  CHECK(has_zigzag(stabilized_unknot_front()));
}

TEST_CASE("stabilization shifts tb by -1 and rotation by one") {
  KnotInvariants z = classify(trace_front(zero_section_gf()));
  KnotInvariants s = classify(stabilized_unknot_front());
  CHECK(s.tb == z.tb - 1);
  CHECK(std::abs(s.rotation - z.rotation) == 1);
}

TEST_CASE("orientation of traced fronts follows index parity") {
  FrontDiagram D = orient_front(trace_front(eye_gf()));
  CHECK(D.oriented);
  for (const auto& b : D.branches) {
    REQUIRE(b.index >= 0);
    CHECK(b.direction == (b.index % 2 == 0 ? 1 : -1));
  }
  for (const auto& c : D.cusps) CHECK(c.sense != Vertical::none);
}

TEST_CASE("two disjoint eyes") {
  FrontDiagram D = trace_front(connect_sum(eye_gf(), eye_gf()));
  KnotInvariants k = classify(D);
  CHECK(k.components == 3);
  CHECK(k.cusps == 4);
  CHECK(k.tb == -2);
  CHECK(k.rotation == 0);
}

TEST_CASE("invariants do not see base translation") {
  for (const auto* name : {"eye", "trefoil"}) {
    CAPTURE(name);
    const GFQI& F = *catalog_entry(name).gf;
    KnotInvariants k = classify(trace_front(F));
    for (double T : {-10.0, -3.0, 3.0, 10.0}) CHECK(classify(trace_front(translate_base(F, T))) == k);
  }
}

TEST_CASE("mirror keeps tb and negates rotation") {
  for (const auto* name : {"eye", "trefoil"}) {
    CAPTURE(name);
    const GFQI& F = *catalog_entry(name).gf;
    KnotInvariants a = classify(trace_front(F)), b = classify(trace_front(mirror_gf(F)));
    CHECK(b.tb == a.tb);
    CHECK(b.rotation == -a.rotation);
    CHECK(b.crossings == a.crossings);
  }
}

TEST_CASE("writhe ignores the over strand") {
  FrontDiagram D = trace_front(trefoil_gf());
  FrontDiagram E = D;
  for (auto& c : E.crossings) c.over = c.over == c.a ? c.b : c.a;
  CHECK(writhe(E) == writhe(D));
  CHECK(thurston_bennequin(E) == thurston_bennequin(D));
  FrontDiagram L = left_trefoil_front();
  FrontDiagram M = L;
  for (auto& c : M.crossings) c.over = c.over == c.a ? c.b : c.a;
  CHECK(writhe(M) == writhe(L));
}

TEST_CASE("dangling branches are rejected") {
  FrontDiagram D = plat_front(2, {});
  D.branches[0].samples.pop_back();
  D.branches[0].right_cusp = -1;
  D.cusps.pop_back();
  CHECK_THROWS_AS(classify(D), StructureError);
}

TEST_CASE("printing") {
  CHECK(to_string(K(1, 0, 2, 0, -1, 1, true)) ==
        "components 1, crossings 0, cusps 2, writhe 0, tb -1, rot 1, zigzag yes");
}
