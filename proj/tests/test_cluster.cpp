#include <catch2/catch_amalgamated.hpp>

#include "perclab/cluster.hpp"
#include "perclab/sampler.hpp"

using namespace perclab;

namespace {

// Opens the bond between two adjacent sites (bond mode).
void open_bond_between(Configuration& c, const Coords& a, const Coords& b) {
  const BoxSpec& box = c.box();
  const SiteIndex sa = site_index(box, a), sb = site_index(box, b);
  const auto nl = neighbors(box, sa);
  for (const auto& nb : nl.in_box) {
    if (nb.site == sb) {
      c.set(nb.bond, true);
      return;
    }
  }
  throw std::logic_error("open_bond_between: sites not adjacent");
}

}  // namespace

TEST_CASE("full lattice is one cluster") {
  BoxSpec box(2, 6, Mode::Bond, Boundary::Wrapped);
  Configuration c(box);
  c.fill(true);
  const auto l = label_clusters(c);
  REQUIRE(l.num_clusters() == 1);
  CHECK(l.sizes[0] == box.num_sites());
  CHECK(l.giant == 0);
  for (SiteIndex s = 0; s < box.num_sites(); ++s) CHECK(l.on_giant(s));
  CHECK(l.span_mask[0] == 0b11u);
}

TEST_CASE("all closed has zero clusters") {
  for (Mode mode : {Mode::Bond, Mode::Site}) {
    BoxSpec box(2, 5, mode, Boundary::Free);
    Configuration c(box);
    const auto l = label_clusters(c);
    CHECK(l.num_clusters() == 0);
    CHECK(l.giant == ClusterLabeling::kNone);
    for (SiteIndex s = 0; s < box.num_sites(); ++s) CHECK(!l.on_giant(s));
  }
}

TEST_CASE("handcrafted 6x6 fixture has components of sizes 5 and 9") {
  BoxSpec box(2, 6, Mode::Bond, Boundary::Free);
  Configuration c(box);
  // Component A: an L of 5 sites in the lower-left corner.
  open_bond_between(c, {0, 0}, {1, 0});
  open_bond_between(c, {1, 0}, {2, 0});
  open_bond_between(c, {2, 0}, {2, 1});
  open_bond_between(c, {2, 1}, {2, 2});
  // Component B: a 3x3 block in the upper-right corner (9 sites).
  for (std::int64_t x = 3; x <= 5; ++x)
    for (std::int64_t y = 3; y <= 5; ++y) {
      if (x < 5) open_bond_between(c, {x, y}, {x + 1, y});
      if (y < 5) open_bond_between(c, {x, y}, {x, y + 1});
    }

  const auto l = label_clusters(c);
  REQUIRE(l.num_clusters() == 2);
  CHECK(l.sizes[0] == 5);  // first site (0,0) belongs to A
  CHECK(l.sizes[1] == 9);
  CHECK(l.giant == 1);
  CHECK(l.span_mask[0] == 0);
  CHECK(l.span_mask[1] == 0);
}

TEST_CASE("giant ties break to the smaller label") {
  BoxSpec box(2, 4, Mode::Bond, Boundary::Free);
  Configuration c(box);
  open_bond_between(c, {0, 0}, {1, 0});  // size 2, label 0
  open_bond_between(c, {0, 3}, {1, 3});  // size 2, label 1
  const auto l = label_clusters(c);
  REQUIRE(l.num_clusters() == 2);
  CHECK(l.sizes[0] == 2);
  CHECK(l.sizes[1] == 2);
  CHECK(l.giant == 0);
}

TEST_CASE("bond mode leaves bond-isolated sites off every cluster") {
  BoxSpec box(2, 4, Mode::Bond, Boundary::Free);
  Configuration c(box);
  open_bond_between(c, {0, 0}, {1, 0});
  const auto l = label_clusters(c);
  REQUIRE(l.num_clusters() == 1);
  CHECK(l.sizes[0] == 2);
  CHECK(l.label[site_index(box, {3, 3})] == ClusterLabeling::kNone);
}

TEST_CASE("site mode counts isolated open sites as singletons") {
  BoxSpec box(2, 4, Mode::Site, Boundary::Free);
  Configuration c(box);
  c.set(site_index(box, {2, 2}), true);
  const auto l = label_clusters(c);
  REQUIRE(l.num_clusters() == 1);
  CHECK(l.sizes[0] == 1);
  CHECK(l.on_giant(site_index(box, {2, 2})));
}

TEST_CASE("spanning flags report face-to-face clusters") {
  BoxSpec box(2, 4, Mode::Bond, Boundary::Free);
  Configuration c(box);
  for (std::int64_t x = 0; x < 3; ++x) open_bond_between(c, {x, 1}, {x + 1, 1});
  const auto l = label_clusters(c);
  REQUIRE(l.num_clusters() == 1);
  CHECK(l.span_mask[0] == 0b01u);  // spans axis 0 only
}
