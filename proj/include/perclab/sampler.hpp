#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "perclab/cluster.hpp"
#include "perclab/lattice.hpp"
#include "perclab/rng.hpp"

namespace perclab {

enum class ModelKind : std::uint8_t {
  BernoulliBond = 0,
  BernoulliSite = 1,
  RandomCluster = 2,
};

enum class RcBoundaryCondition : std::uint8_t { Free = 0, Wired = 1 };

// Auto picks Swendsen-Wang when q is an integer, heat-bath otherwise.
enum class RcDynamics : std::uint8_t { Auto = 0, HeatBath = 1, SwendsenWang = 2 };

struct SamplerSpec {
  ModelKind model = ModelKind::BernoulliBond;
  double p = 0.5;
  double q = 1.0;                                        // random-cluster only
  RcBoundaryCondition bc = RcBoundaryCondition::Free;    // random-cluster only
  RcDynamics dynamics = RcDynamics::Auto;
  std::int64_t sweeps = 0;                               // MCMC burn-in
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

inline bool rc_q_is_integer(double q) {
  return q == static_cast<double>(static_cast<std::int64_t>(q));
}

inline std::vector<std::string> validate_sampler(const BoxSpec& box,
                                                 const SamplerSpec& s) {
  std::vector<std::string> errs;
  if (!(s.p >= 0.0 && s.p <= 1.0)) errs.push_back("sampler.p must be in [0,1]");
  switch (s.model) {
    case ModelKind::BernoulliBond:
      if (box.mode != Mode::Bond)
        errs.push_back("bernoulli-bond requires a bond-mode box");
      break;
    case ModelKind::BernoulliSite:
      if (box.mode != Mode::Site)
        errs.push_back("bernoulli-site requires a site-mode box");
      break;
    case ModelKind::RandomCluster:
      if (box.mode != Mode::Bond)
        errs.push_back("random-cluster requires a bond-mode box");
      if (!(s.q >= 1.0))
        errs.push_back("random-cluster requires q >= 1");
      if (s.sweeps < 1)
        errs.push_back("random-cluster requires sweeps >= 1");
      if (box.boundary == Boundary::Wrapped && s.bc == RcBoundaryCondition::Wired)
        errs.push_back("wired boundary condition needs a free-boundary box");
      if (s.dynamics == RcDynamics::SwendsenWang && !rc_q_is_integer(s.q))
        errs.push_back("swendsen-wang dynamics requires integer q");
      break;
  }
  return errs;
}

inline Configuration sample_bernoulli(const BoxSpec& box, double p,
                                      std::uint64_t seed, std::uint64_t replica,
                                      std::uint64_t salt = 0) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("sample_bernoulli: p must be in [0,1]");
  Rng rng(seed, replica, kTagBernoulli, salt);
  Configuration c(box);
  const std::int64_t n = c.num_states();
  for (std::int64_t i = 0; i < n; ++i) c.set(i, rng.bernoulli(p));
  return c;
}

namespace detail {

// Connectivity oracle for the random-cluster dynamics. Wired boundary
// condition identifies all surface sites of a free box as one vertex.
class RcGraph {
 public:
  RcGraph(const BoxSpec& box, bool wired)
      : box_(box), wired_(wired), stamp_(box.num_sites() + 1, 0),
        side_(box.num_sites() + 1, 0), epoch_(0) {
    if (wired_) {
      const std::int64_t n = box.num_sites();
      for (SiteIndex s = 0; s < n; ++s)
        if (is_surface(s)) surface_.push_back(s);
    }
  }

  bool is_surface(SiteIndex s) const {
    std::int64_t rem = s;
    for (std::int32_t a = 0; a < box_.d; ++a) {
      const std::int64_t xi = rem % box_.L;
      rem /= box_.L;
      if (xi == 0 || xi == box_.L - 1) return true;
    }
    return false;
  }

  // Are u and v connected by open bonds when `excluded` is forced closed?
  // Bidirectional BFS, early exit on frontier contact.
  bool connected_without(const Configuration& c, SiteIndex u, SiteIndex v,
                         BondIndex excluded) {
    if (u == v) return true;
    ++epoch_;
    const SiteIndex virt = box_.num_sites();
    std::vector<SiteIndex> fa{u}, fb{v}, next;
    visit(u, 1);
    visit(v, 2);
    if (wired_) {
      if (is_surface(u)) expand_virtual(1, fa);
      if (is_surface(v)) {
        if (stamp_[virt] == epoch_ && side_[virt] == 1) return true;
        expand_virtual(2, fb);
      }
    }
    for (std::int32_t grow = 1; !fa.empty() && !fb.empty();) {
      auto& frontier = fa.size() <= fb.size() ? fa : fb;
      const std::int32_t me = (&frontier == &fa) ? 1 : 2;
      next.clear();
      bool met = false;
      for (SiteIndex s : frontier) {
        for_each_neighbor(box_, s,
                          [&](SiteIndex t, BondIndex b, std::int32_t, std::int32_t) {
                            if (met || b == excluded || !c.bond_open(b)) return;
                            if (stamp_[t] == epoch_) {
                              if (side_[t] != me) met = true;
                              return;
                            }
                            visit(t, me);
                            next.push_back(t);
                            if (wired_ && is_surface(t)) {
                              if (stamp_[virt] == epoch_ && side_[virt] != me)
                                met = true;
                              else
                                expand_virtual(me, next);
                            }
                          });
        if (met) return true;
      }
      if (met) return true;
      frontier.swap(next);
      (void)grow;
    }
    return false;
  }

 private:
  void visit(SiteIndex s, std::int32_t side) {
    stamp_[s] = epoch_;
    side_[s] = side;
  }

  void expand_virtual(std::int32_t me, std::vector<SiteIndex>& frontier) {
    const SiteIndex virt = box_.num_sites();
    if (stamp_[virt] == epoch_) return;
    visit(virt, me);
    for (SiteIndex s : surface_) {
      if (stamp_[s] != epoch_) {
        visit(s, me);
        frontier.push_back(s);
      }
    }
  }

  BoxSpec box_;
  bool wired_;
  std::vector<SiteIndex> surface_;
  std::vector<std::uint64_t> stamp_;
  std::vector<std::int32_t> side_;
  std::uint64_t epoch_;
};

// Full partition of sites into open-bond clusters, singletons included,
// with the wired surface merged into one vertex. Cluster ids are dense and
// ordered by first site index.
inline std::vector<std::int32_t> rc_cluster_ids(const Configuration& c,
                                                bool wired,
                                                std::int32_t* num_clusters) {
  const BoxSpec& box = c.box();
  const std::int64_t n = box.num_sites();
  UnionFind uf(n + 1);
  const std::int64_t virt = n;
  for (SiteIndex s = 0; s < n; ++s) {
    for_each_neighbor(box, s,
                      [&](SiteIndex t, BondIndex b, std::int32_t, std::int32_t sign) {
                        if (sign < 0) return;
                        if (c.bond_open(b)) uf.unite(s, t);
                      });
  }
  if (wired) {
    std::int64_t rem;
    for (SiteIndex s = 0; s < n; ++s) {
      bool surface = false;
      rem = s;
      for (std::int32_t a = 0; a < box.d; ++a) {
        const std::int64_t xi = rem % box.L;
        rem /= box.L;
        if (xi == 0 || xi == box.L - 1) surface = true;
      }
      if (surface) uf.unite(s, virt);
    }
  }
  std::vector<std::int32_t> id(n);
  std::vector<std::int32_t> root_id(n + 1, -1);
  std::int32_t k = 0;
  if (wired) root_id[uf.find(virt)] = k++;  // the wired component is cluster 0
  for (SiteIndex s = 0; s < n; ++s) {
    const std::int64_t r = uf.find(s);
    if (root_id[r] < 0) root_id[r] = k++;
    id[s] = root_id[r];
  }
  *num_clusters = k;
  return id;
}

}  // namespace detail

// One full single-bond heat-bath sweep in bond-index order. The bond is
// opened with probability p when its endpoints stay connected without it
// and p / (p + q(1-p)) otherwise; valid for any real q >= 1.
inline void rc_heat_bath_sweep(Configuration& c, double p, double q,
                               bool wired, detail::RcGraph& graph, Rng& rng) {
  const BoxSpec& box = c.box();
  const std::int64_t nb = box.num_bonds();
  const double pfrozen = p / (p + q * (1.0 - p));
  for (BondIndex b = 0; b < nb; ++b) {
    const auto [s, axis] = bond_site_axis(box, b);
    const std::int64_t stride = axis_stride(box, axis);
    const std::int64_t xi = (s / stride) % box.L;
    const SiteIndex t = xi < box.L - 1 ? s + stride : s - (box.L - 1) * stride;
    const bool conn = graph.connected_without(c, s, t, b);
    c.set(b, rng.bernoulli(conn ? p : pfrozen));
  }
  (void)wired;
}

// One Swendsen-Wang sweep via the Edwards-Sokal coupling: color the bond
// clusters uniformly in {0,...,q-1}, then resample every bond (open with
// probability p iff the endpoint colors agree).
inline void rc_swendsen_wang_sweep(Configuration& c, double p, std::int64_t q,
                                   bool wired, Rng& rng) {
  const BoxSpec& box = c.box();
  std::int32_t k = 0;
  const auto id = detail::rc_cluster_ids(c, wired, &k);
  std::vector<std::uint32_t> color(k);
  for (std::int32_t i = 0; i < k; ++i)
    color[i] = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(q)));
  const std::int64_t nb = box.num_bonds();
  for (BondIndex b = 0; b < nb; ++b) {
    const auto [s, axis] = bond_site_axis(box, b);
    const std::int64_t stride = axis_stride(box, axis);
    const std::int64_t xi = (s / stride) % box.L;
    const SiteIndex t = xi < box.L - 1 ? s + stride : s - (box.L - 1) * stride;
    const bool same = color[id[s]] == color[id[t]];
    const bool draw = rng.bernoulli(p);  // one draw per bond, stream stability
    c.set(b, same && draw);
  }
}

// State of the chain after `sweeps` full sweeps from the all-open state.
inline Configuration sample_random_cluster(const BoxSpec& box,
                                           const SamplerSpec& spec,
                                           std::uint64_t salt = 0) {
  const auto errs = validate_sampler(box, spec);
  if (!errs.empty()) throw std::domain_error("sample_random_cluster: " + errs.front());
  if (spec.model != ModelKind::RandomCluster)
    throw std::domain_error("sample_random_cluster: spec is not a random-cluster model");

  const bool wired = spec.bc == RcBoundaryCondition::Wired;
  const bool use_sw = spec.dynamics == RcDynamics::SwendsenWang ||
                      (spec.dynamics == RcDynamics::Auto && rc_q_is_integer(spec.q));
  Rng rng(spec.seed, spec.replica, kTagRandomCluster, salt);
  Configuration c(box);
  c.fill(true);
  if (use_sw) {
    const auto q = static_cast<std::int64_t>(spec.q);
    for (std::int64_t i = 0; i < spec.sweeps; ++i)
      rc_swendsen_wang_sweep(c, spec.p, q, wired, rng);
  } else {
    detail::RcGraph graph(box, wired);
    for (std::int64_t i = 0; i < spec.sweeps; ++i)
      rc_heat_bath_sweep(c, spec.p, spec.q, wired, graph, rng);
  }
  return c;
}

// Dispatch on the model kind. `salt` separates repeated draws for one
// (seed, replica), e.g. rejection attempts while conditioning.
inline Configuration sample(const BoxSpec& box, const SamplerSpec& spec,
                            std::uint64_t salt = 0) {
  switch (spec.model) {
    case ModelKind::BernoulliBond:
    case ModelKind::BernoulliSite: {
      const auto errs = validate_sampler(box, spec);
      if (!errs.empty()) throw std::domain_error("sample: " + errs.front());
      return sample_bernoulli(box, spec.p, spec.seed, spec.replica, salt);
    }
    case ModelKind::RandomCluster:
      return sample_random_cluster(box, spec, salt);
  }
  throw std::logic_error("sample: unknown model");
}

}  // namespace perclab
