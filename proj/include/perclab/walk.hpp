#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/cluster.hpp"
#include "perclab/lattice.hpp"
#include "perclab/rng.hpp"

namespace perclab {

// Lazy simple random walk on a designated cluster: from x it moves to each
// lattice neighbor on the cluster with probability 1/(2d) and stays put
// with probability (number of remaining directions)/(2d). Membership is by
// cluster label, so in bond mode a step between two cluster sites does not
// require the connecting bond to be open; directions leaving a free box
// count toward the stay probability.
struct WalkKernel {
  const Configuration* config = nullptr;
  const ClusterLabeling* labeling = nullptr;
  std::int32_t cluster = ClusterLabeling::kNone;

  const BoxSpec& box() const { return config->box(); }

  bool on_cluster(SiteIndex s) const { return labeling->label[s] == cluster; }
};

// Kernel on the giant cluster.
inline WalkKernel make_kernel(const Configuration& c, const ClusterLabeling& l) {
  if (l.giant == ClusterLabeling::kNone)
    throw std::invalid_argument("make_kernel: configuration has no clusters");
  return WalkKernel{&c, &l, l.giant};
}

// Kernel on the cluster containing x0 (fixtures and small cases).
inline WalkKernel make_kernel_at(const Configuration& c,
                                 const ClusterLabeling& l, SiteIndex x0) {
  if (l.label[x0] == ClusterLabeling::kNone)
    throw std::invalid_argument("make_kernel_at: site is off every cluster");
  return WalkKernel{&c, &l, l.label[x0]};
}

// Exact one-step law at x. All probabilities are multiples of 1/(2d):
// each entry of `moves` carries 1/(2d), staying carries stay_num/(2d).
struct TransitionDistribution {
  SiteIndex from = 0;
  std::int32_t denom = 0;  // 2d
  std::int32_t stay_num = 0;
  std::vector<SiteIndex> moves;
};

inline TransitionDistribution transition_distribution(const WalkKernel& k,
                                                      SiteIndex x) {
  if (!k.on_cluster(x))
    throw std::invalid_argument("transition_distribution: site off the cluster");
  const BoxSpec& box = k.box();
  TransitionDistribution t;
  t.from = x;
  t.denom = 2 * box.d;
  const std::int32_t exterior = for_each_neighbor(
      box, x, [&](SiteIndex y, BondIndex, std::int32_t, std::int32_t) {
        if (k.on_cluster(y))
          t.moves.push_back(y);
      });
  t.stay_num = t.denom - static_cast<std::int32_t>(t.moves.size());
  (void)exterior;
  return t;
}

// Path of length steps+1 starting at x0. One uniform draw from the 2d
// directions per step; off-cluster directions turn into holds, which
// realizes the kernel exactly.
inline std::vector<SiteIndex> simulate_walk(const WalkKernel& k, SiteIndex x0,
                                            std::int64_t steps, Rng& rng) {
  if (!k.on_cluster(x0))
    throw std::invalid_argument("simulate_walk: start off the cluster");
  const BoxSpec& box = k.box();
  std::vector<SiteIndex> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(x0);
  SiteIndex pos = x0;
  const auto two_d = static_cast<std::uint64_t>(2 * box.d);
  for (std::int64_t i = 0; i < steps; ++i) {
    const auto dir = static_cast<std::int32_t>(rng.below(two_d));
    const std::int32_t axis = dir >> 1;
    const std::int32_t sign = (dir & 1) ? -1 : +1;
    const std::int64_t stride = axis_stride(box, axis);
    const std::int64_t xi = (pos / stride) % box.L;
    SiteIndex target = -1;
    if (sign > 0) {
      if (xi < box.L - 1)
        target = pos + stride;
      else if (box.boundary == Boundary::Wrapped)
        target = pos - (box.L - 1) * stride;
    } else {
      if (xi > 0)
        target = pos - stride;
      else if (box.boundary == Boundary::Wrapped)
        target = pos + (box.L - 1) * stride;
    }
    if (target >= 0 && k.on_cluster(target)) pos = target;
    path.push_back(pos);
  }
  return path;
}

// Successive k >= 1 with k*x on the giant cluster, scanned on the torus.
// The scan stops at the half-box cap so recorded multiples keep unfolded
// displacements; running out of fresh sites yields a partial result
// (complete == false) rather than an error.
struct RegenerationSequence {
  Coords direction;
  std::vector<std::int64_t> gaps;      // T circ Theta^k, k = 0,1,...
  std::vector<std::int64_t> partials;  // T^(n) = prefix sums of gaps
  std::vector<SiteIndex> sites;        // torus site of T^(n) x
  std::int64_t k_cap = 0;
  bool complete = false;

  std::int64_t count() const { return static_cast<std::int64_t>(gaps.size()); }
};

inline RegenerationSequence regeneration_sequence(const Configuration& c,
                                                  const ClusterLabeling& l,
                                                  const Coords& x,
                                                  std::int64_t n) {
  const BoxSpec& box = c.box();
  if (box.boundary != Boundary::Wrapped)
    throw std::invalid_argument("regeneration_sequence: needs a wrapped box");
  if (static_cast<std::int32_t>(x.size()) != box.d || linf_norm(x) == 0)
    throw std::invalid_argument("regeneration_sequence: direction must be nonzero");
  if (n < 1) throw std::invalid_argument("regeneration_sequence: n must be >= 1");
  if (!l.on_giant(0))
    throw std::invalid_argument("regeneration_sequence: origin off the giant cluster");

  RegenerationSequence seq;
  seq.direction = x;
  seq.k_cap = (box.L / 2 - 1) / linf_norm(x);
  std::int64_t last = 0;
  for (std::int64_t k = 1; k <= seq.k_cap && seq.count() < n; ++k) {
    const SiteIndex s = torus_multiple(box, x, k);
    if (l.on_giant(s)) {
      seq.gaps.push_back(k - last);
      seq.partials.push_back(k);
      seq.sites.push_back(s);
      last = k;
    }
  }
  seq.complete = seq.count() == n;
  return seq;
}

}  // namespace perclab
