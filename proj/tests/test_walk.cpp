#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "perclab/sampler.hpp"
#include "perclab/walk.hpp"

using namespace perclab;

namespace {

// Bond-mode fixture with exactly one open bond (0,0)-(1,0).
struct TwoSiteFixture {
  BoxSpec box{2, 4, Mode::Bond, Boundary::Free};
  Configuration config{box};
  ClusterLabeling labeling;
  TwoSiteFixture() {
    config.set(bond_index(box, site_index(box, {0, 0}), 0), true);
    labeling = label_clusters(config);
  }
};

}  // namespace

TEST_CASE("transition distribution on the full lattice") {
  BoxSpec box(2, 6, Mode::Bond, Boundary::Wrapped);
  Configuration c(box);
  c.fill(true);
  const auto l = label_clusters(c);
  const auto k = make_kernel(c, l);
  const auto t = transition_distribution(k, site_index(box, {2, 3}));
  CHECK(t.denom == 4);
  CHECK(t.stay_num == 0);
  CHECK(t.moves.size() == 4);
}

TEST_CASE("transition distribution with one cluster neighbor") {
  TwoSiteFixture f;
  const auto k = make_kernel(f.config, f.labeling);
  const auto t = transition_distribution(k, site_index(f.box, {0, 0}));
  CHECK(t.denom == 4);
  CHECK(t.stay_num == 3);
  REQUIRE(t.moves.size() == 1);
  CHECK(t.moves[0] == site_index(f.box, {1, 0}));

  CHECK_THROWS_AS(transition_distribution(k, site_index(f.box, {3, 3})),
                  std::invalid_argument);
}

TEST_CASE("transition numerators always sum to 2d") {
  for (int rep = 0; rep < 40; ++rep) {
    BoxSpec box(rep % 2 == 0 ? 2 : 3, 8, rep % 4 < 2 ? Mode::Bond : Mode::Site,
                Boundary::Wrapped);
    const auto c = sample_bernoulli(box, 0.55, 7000 + rep, 0);
    const auto l = label_clusters(c);
    if (l.giant == ClusterLabeling::kNone) continue;
    const auto k = make_kernel(c, l);
    for (SiteIndex s = 0; s < box.num_sites(); ++s) {
      if (!k.on_cluster(s)) continue;
      const auto t = transition_distribution(k, s);
      CHECK(t.stay_num + static_cast<std::int32_t>(t.moves.size()) == t.denom);
      CHECK(t.denom == 2 * box.d);
    }
  }
}

TEST_CASE("zero-step walk is the start point") {
  TwoSiteFixture f;
  const auto k = make_kernel(f.config, f.labeling);
  Rng rng(1);
  const auto path = simulate_walk(k, 0, 0, rng);
  CHECK(path == std::vector<SiteIndex>{0});
}

TEST_CASE("isolated origin stays put forever") {
  BoxSpec box(2, 4, Mode::Site, Boundary::Free);
  Configuration c(box);
  c.set(site_index(box, {1, 1}), true);  // singleton cluster
  const auto l = label_clusters(c);
  const auto k = make_kernel_at(c, l, site_index(box, {1, 1}));
  Rng rng(2);
  const auto path = simulate_walk(k, site_index(box, {1, 1}), 200, rng);
  for (SiteIndex s : path) CHECK(s == site_index(box, {1, 1}));
}

TEST_CASE("full-lattice walk uses each direction at rate 1/4") {
  BoxSpec box(2, 32, Mode::Bond, Boundary::Wrapped);
  Configuration c(box);
  c.fill(true);
  const auto l = label_clusters(c);
  const auto k = make_kernel(c, l);
  Rng rng(33);
  const std::int64_t steps = 1000000;
  const auto path = simulate_walk(k, 0, steps, rng);
  std::int64_t count[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto prev = site_coords(box, path[i - 1]);
    const auto cur = site_coords(box, path[i]);
    for (int a = 0; a < 2; ++a) {
      std::int64_t diff = cur[a] - prev[a];
      if (diff == box.L - 1) diff = -1;
      if (diff == -(box.L - 1)) diff = 1;
      if (diff == 1) ++count[a][0];
      if (diff == -1) ++count[a][1];
    }
  }
  const double sigma = std::sqrt(0.25 * 0.75 * static_cast<double>(steps));
  for (int a = 0; a < 2; ++a)
    for (int sgn = 0; sgn < 2; ++sgn)
      CHECK(std::abs(static_cast<double>(count[a][sgn]) - 0.25 * steps) <
            3.0 * sigma);
}

TEST_CASE("regenerations on the full lattice come every step") {
  BoxSpec box(2, 32, Mode::Bond, Boundary::Wrapped);
  Configuration c(box);
  c.fill(true);
  const auto l = label_clusters(c);
  const auto seq = regeneration_sequence(c, l, {1, 0}, 10);
  REQUIRE(seq.complete);
  REQUIRE(seq.count() == 10);
  for (std::int64_t g : seq.gaps) CHECK(g == 1);
  for (std::int64_t i = 0; i < 10; ++i) CHECK(seq.partials[i] == i + 1);
}

TEST_CASE("first regeneration skips off-cluster multiples") {
  // x and 2x off the giant cluster, 3x on it.
  BoxSpec box(2, 16, Mode::Site, Boundary::Wrapped);
  Configuration c(box);
  for (std::int64_t x = 0; x < 16; ++x) c.set(site_index(box, {x, 1}), true);
  c.set(site_index(box, {0, 0}), true);
  c.set(site_index(box, {3, 0}), true);
  const auto l = label_clusters(c);
  REQUIRE(l.on_giant(0));
  REQUIRE(!l.on_giant(site_index(box, {1, 0})));
  REQUIRE(!l.on_giant(site_index(box, {2, 0})));
  const auto seq = regeneration_sequence(c, l, {1, 0}, 1);
  REQUIRE(seq.complete);
  CHECK(seq.gaps[0] == 3);
  CHECK(seq.sites[0] == site_index(box, {3, 0}));
}

TEST_CASE("regeneration shortfall returns a partial result") {
  BoxSpec box(2, 16, Mode::Bond, Boundary::Wrapped);
  Configuration c(box);
  c.fill(true);
  const auto l = label_clusters(c);
  const auto seq = regeneration_sequence(c, l, {1, 0}, 100);  // cap is 7
  CHECK(!seq.complete);
  CHECK(seq.count() == 7);
  CHECK(seq.k_cap == 7);
}

TEST_CASE("regeneration preconditions") {
  BoxSpec box(2, 16, Mode::Bond, Boundary::Wrapped);
  Configuration c(box);
  const auto l = label_clusters(c);  // empty: origin off giant
  CHECK_THROWS_AS(regeneration_sequence(c, l, {1, 0}, 4), std::invalid_argument);

  Configuration full(box);
  full.fill(true);
  const auto lf = label_clusters(full);
  CHECK_THROWS_AS(regeneration_sequence(full, lf, {0, 0}, 4), std::invalid_argument);

  BoxSpec free_box(2, 16, Mode::Bond, Boundary::Free);
  Configuration cf(free_box);
  cf.fill(true);
  const auto lff = label_clusters(cf);
  CHECK_THROWS_AS(regeneration_sequence(cf, lff, {1, 0}, 4), std::invalid_argument);
}

TEST_CASE("mean regeneration gap tracks the inverse giant density") {
  // Kac-style sanity at unit-test scale; the production-size version is
  // acceptance criterion 4.
  BoxSpec box(2, 96, Mode::Bond, Boundary::Wrapped);
  double gap_sum = 0.0;
  std::int64_t gap_count = 0, on_giant = 0, total = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto c = sample_bernoulli(box, 0.7, 555, rep);
    const auto l = label_clusters(c);
    total += box.num_sites();
    on_giant += l.sizes[l.giant];
    if (!l.on_giant(0)) continue;
    const auto seq = regeneration_sequence(c, l, {1, 0}, 30);
    for (std::int64_t g : seq.gaps) {
      gap_sum += static_cast<double>(g);
      ++gap_count;
    }
  }
  const double density = static_cast<double>(on_giant) / static_cast<double>(total);
  const double mean_gap = gap_sum / static_cast<double>(gap_count);
  CHECK(std::abs(density * mean_gap - 1.0) < 0.1);
}
