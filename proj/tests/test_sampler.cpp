#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "perclab/sampler.hpp"
#include "perclab/stats.hpp"
#include "potts_oracle.hpp"

using namespace perclab;

TEST_CASE("bernoulli degenerate probabilities") {
  BoxSpec box(2, 8, Mode::Bond, Boundary::Wrapped);
  CHECK(sample_bernoulli(box, 0.0, 1, 0).open_count() == 0);
  CHECK(sample_bernoulli(box, 1.0, 1, 0).open_count() == box.num_bonds());
}

TEST_CASE("bernoulli open fraction concentrates") {
  BoxSpec box(2, 64, Mode::Bond, Boundary::Wrapped);
  const auto c = sample_bernoulli(box, 0.5, 2024, 0);
  const double n = static_cast<double>(box.num_bonds());
  const double frac = static_cast<double>(c.open_count()) / n;
  CHECK(std::abs(frac - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("samplers are deterministic in (seed, replica, spec)") {
  BoxSpec box(2, 8, Mode::Bond, Boundary::Free);
  SamplerSpec rc;
  rc.model = ModelKind::RandomCluster;
  rc.p = 0.6;
  rc.q = 1.7;
  rc.sweeps = 5;
  rc.seed = 99;
  rc.replica = 3;
  CHECK(sample(box, rc) == sample(box, rc));
  CHECK(sample_bernoulli(box, 0.4, 7, 1) == sample_bernoulli(box, 0.4, 7, 1));
  const auto at3 = sample(box, rc);
  rc.replica = 4;
  CHECK(!(sample(box, rc) == at3));
}

TEST_CASE("sampler validation") {
  BoxSpec bond_box(2, 4, Mode::Bond, Boundary::Wrapped);
  BoxSpec site_box(2, 4, Mode::Site, Boundary::Wrapped);
  SamplerSpec s;
  s.model = ModelKind::BernoulliSite;
  CHECK(!validate_sampler(bond_box, s).empty());
  CHECK(validate_sampler(site_box, s).empty());

  s.model = ModelKind::RandomCluster;
  s.q = 0.5;
  s.sweeps = 0;
  const auto errs = validate_sampler(bond_box, s);
  CHECK(errs.size() == 2);  // q < 1 and sweeps < 1

  s.q = 2.0;
  s.sweeps = 1;
  s.bc = RcBoundaryCondition::Wired;
  CHECK(!validate_sampler(bond_box, s).empty());  // wired needs a free box
}

TEST_CASE("random cluster at p=1 keeps every bond open") {
  BoxSpec box(2, 6, Mode::Bond, Boundary::Free);
  SamplerSpec s;
  s.model = ModelKind::RandomCluster;
  s.p = 1.0;
  s.q = 2.0;
  s.sweeps = 3;
  s.seed = 5;
  for (RcDynamics dyn : {RcDynamics::HeatBath, RcDynamics::SwendsenWang}) {
    s.dynamics = dyn;
    CHECK(sample(box, s).open_count() == box.num_bonds());
  }
}

namespace {

// Exact random-cluster weight table for the 2x2 free box (4 bonds).
std::vector<double> exact_2x2_distribution(double p, double q) {
  BoxSpec box(2, 2, Mode::Bond, Boundary::Free);
  std::vector<double> w(16);
  double z = 0.0;
  for (int mask = 0; mask < 16; ++mask) {
    Configuration c(box);
    for (int b = 0; b < 4; ++b) c.set(b, (mask >> b) & 1);
    UnionFind uf(4);
    for (BondIndex b = 0; b < 4; ++b) {
      if (!c.open(b)) continue;
      const auto [s, axis] = bond_site_axis(box, b);
      const std::int64_t stride = axis_stride(box, axis);
      uf.unite(s, s + stride);
    }
    int k = 0;
    for (int v = 0; v < 4; ++v) k += uf.find(v) == v ? 1 : 0;
    const int open = __builtin_popcount(static_cast<unsigned>(mask));
    w[mask] = std::pow(p, open) * std::pow(1.0 - p, 4 - open) * std::pow(q, k);
    z += w[mask];
  }
  for (auto& x : w) x /= z;
  return w;
}

int config_mask_2x2(const Configuration& c) {
  int mask = 0;
  for (int b = 0; b < 4; ++b) mask |= (c.open(b) ? 1 : 0) << b;
  return mask;
}

}  // namespace

TEST_CASE("heat-bath is stationary for the exact 2x2 weights") {
  BoxSpec box(2, 2, Mode::Bond, Boundary::Free);
  for (double q : {1.5, 2.0}) {
    const double p = 0.6;
    const auto exact = exact_2x2_distribution(p, q);

    Configuration c(box);
    c.fill(true);
    detail::RcGraph graph(box, false);
    Rng rng(314159, 0, kTagRandomCluster);
    std::vector<std::int64_t> counts(16, 0);
    const int sweeps = 250000;  // 4 single-bond steps each
    for (int i = 0; i < sweeps; ++i) {
      rc_heat_bath_sweep(c, p, q, false, graph, rng);
      ++counts[config_mask_2x2(c)];
    }
    double tv = 0.0;
    for (int m = 0; m < 16; ++m)
      tv += std::abs(static_cast<double>(counts[m]) / sweeps - exact[m]);
    tv *= 0.5;
    INFO("q = " << q << " tv = " << tv);
    CHECK(tv < 0.01);
  }
}

TEST_CASE("swendsen-wang is stationary for the exact 2x2 weights") {
  BoxSpec box(2, 2, Mode::Bond, Boundary::Free);
  const double p = 0.6, q = 2.0;
  const auto exact = exact_2x2_distribution(p, q);
  Configuration c(box);
  c.fill(true);
  Rng rng(2718, 0, kTagRandomCluster);
  std::vector<std::int64_t> counts(16, 0);
  const int sweeps = 200000;
  for (int i = 0; i < sweeps; ++i) {
    rc_swendsen_wang_sweep(c, p, 2, false, rng);
    ++counts[config_mask_2x2(c)];
  }
  double tv = 0.0;
  for (int m = 0; m < 16; ++m)
    tv += std::abs(static_cast<double>(counts[m]) / sweeps - exact[m]);
  tv *= 0.5;
  INFO("tv = " << tv);
  CHECK(tv < 0.01);
}

TEST_CASE("q=1 dynamics reduce to bernoulli sampling") {
  BoxSpec box(2, 8, Mode::Bond, Boundary::Free);
  const double p = 0.7;
  const int reps = 10000;
  const double nb = static_cast<double>(box.num_bonds());

  SamplerSpec rc;
  rc.model = ModelKind::RandomCluster;
  rc.p = p;
  rc.q = 1.0;
  rc.sweeps = 1;
  rc.seed = 1001;

  std::vector<double> rc_counts, be_counts;
  double rc_open = 0.0, be_open = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    rc.replica = static_cast<std::uint64_t>(rep);
    rc.dynamics = rep % 2 == 0 ? RcDynamics::HeatBath : RcDynamics::SwendsenWang;
    const auto a = sample(box, rc);
    const auto b = sample_bernoulli(box, p, 1002, rep);
    rc_counts.push_back(static_cast<double>(a.open_count()));
    be_counts.push_back(static_cast<double>(b.open_count()));
    rc_open += static_cast<double>(a.open_count());
    be_open += static_cast<double>(b.open_count());
  }
  const double total = nb * reps;
  const double diff = (rc_open - be_open) / total;
  const double sigma = std::sqrt(2.0 * p * (1.0 - p) / total);
  CHECK(std::abs(diff) < 3.0 * sigma);  // edge marginals agree at 3 sigma
  CHECK(ks_pass_at_01(rc_counts, be_counts));
}

TEST_CASE("q=2 wired edge density matches the Potts oracle") {
  // Small version of the Edwards-Sokal cross-check; the production-size
  // run lives in the acceptance suite.
  BoxSpec box(2, 8, Mode::Bond, Boundary::Free);
  const double p = 0.7;

  SamplerSpec rc;
  rc.model = ModelKind::RandomCluster;
  rc.p = p;
  rc.q = 2.0;
  rc.bc = RcBoundaryCondition::Wired;
  rc.sweeps = 80;
  rc.seed = 321;

  std::vector<double> rc_frac;
  const double nb = static_cast<double>(box.num_bonds());
  for (int rep = 0; rep < 120; ++rep) {
    rc.replica = static_cast<std::uint64_t>(rep);
    rc_frac.push_back(static_cast<double>(sample(box, rc).open_count()) / nb);
  }
  const auto rc_ci = student_ci(rc_frac);

  perclab_test::PottsGlauber potts(box, 2, p, true, 777);
  for (int i = 0; i < 400; ++i) potts.sweep();
  std::vector<double> es_frac;  // batch means to absorb autocorrelation
  for (int batch = 0; batch < 30; ++batch) {
    Accumulator acc;
    for (int k = 0; k < 10; ++k) {
      for (int i = 0; i < 5; ++i) potts.sweep();
      acc.add(p * potts.equal_pair_fraction());
    }
    es_frac.push_back(acc.mean);
  }
  const auto es_ci = student_ci(es_frac);

  const double se = std::hypot(rc_ci.half / 1.96, es_ci.half / 1.96);
  INFO("rc = " << rc_ci.mean << " es = " << es_ci.mean << " se = " << se);
  CHECK(std::abs(rc_ci.mean - es_ci.mean) < 3.0 * se);
}
