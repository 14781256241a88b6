#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "perclab/cluster.hpp"
#include "perclab/lattice.hpp"
#include "perclab/stats.hpp"

namespace perclab {

// Chemical distances are graph distances inside open clusters; unreachable
// pairs get this sentinel (serialized as "inf" in CSV output).
inline constexpr std::uint32_t kDistInf = 0xffffffffu;

// BFS over the open-cluster graph from `source`. Off-cluster sites,
// including the source itself when it is not a cluster vertex, stay at
// kDistInf.
inline std::vector<std::uint32_t> chemical_distances(const Configuration& c,
                                                     SiteIndex source) {
  const BoxSpec& box = c.box();
  const std::int64_t n = box.num_sites();
  std::vector<std::uint32_t> dist(n, kDistInf);
  if (source < 0 || source >= n)
    throw std::domain_error("chemical_distances: source out of box");
  if (!c.site_open(source)) return dist;
  if (box.mode == Mode::Bond) {
    bool incident = false;
    for_each_neighbor(box, source,
                      [&](SiteIndex, BondIndex b, std::int32_t, std::int32_t) {
                        incident = incident || c.bond_open(b);
                      });
    if (!incident) return dist;
  }
  std::vector<SiteIndex> frontier{source}, next;
  dist[source] = 0;
  std::uint32_t depth = 0;
  while (!frontier.empty()) {
    ++depth;
    next.clear();
    for (SiteIndex s : frontier) {
      for_each_neighbor(box, s,
                        [&](SiteIndex t, BondIndex b, std::int32_t, std::int32_t) {
                          if (dist[t] != kDistInf || !c.bond_open(b)) return;
                          dist[t] = depth;
                          next.push_back(t);
                        });
    }
    frontier.swap(next);
  }
  return dist;
}

inline std::uint32_t chemical_distance(const Configuration& c, SiteIndex x,
                                       SiteIndex y) {
  const auto dist = chemical_distances(c, x);
  if (y < 0 || y >= c.box().num_sites())
    throw std::domain_error("chemical_distance: target out of box");
  return dist[y];
}

// B_t relative to the origin: cluster sites within chemical distance t.
// The caller must have conditioned on the origin lying on the giant
// cluster; anything else is a precondition error, not an empty result.
inline std::vector<SiteIndex> chemical_ball(const Configuration& c,
                                            const ClusterLabeling& labeling,
                                            double t) {
  if (t < 0) throw std::domain_error("chemical_ball: negative radius");
  const SiteIndex origin = 0;
  if (!labeling.on_giant(origin))
    throw std::invalid_argument("chemical_ball: origin is not on the giant cluster");
  const auto radius = static_cast<std::uint32_t>(std::floor(t));
  // Truncated BFS.
  const BoxSpec& box = c.box();
  std::vector<std::uint32_t> dist(box.num_sites(), kDistInf);
  std::vector<SiteIndex> out, frontier{origin}, next;
  dist[origin] = 0;
  out.push_back(origin);
  std::uint32_t depth = 0;
  while (!frontier.empty() && depth < radius) {
    ++depth;
    next.clear();
    for (SiteIndex s : frontier) {
      for_each_neighbor(box, s,
                        [&](SiteIndex u, BondIndex b, std::int32_t, std::int32_t) {
                          if (dist[u] != kDistInf || !c.bond_open(b)) return;
                          dist[u] = depth;
                          next.push_back(u);
                          out.push_back(u);
                        });
    }
    frontier.swap(next);
  }
  return out;
}

struct TailPoint {
  std::int64_t r = 0;
  std::int64_t count = 0;
  std::int64_t total = 0;
  double freq = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct TailCurve {
  double c1 = 0.0;
  std::vector<TailPoint> points;
  // Stretched-log fit freq ~ exp(-c2 (log r)^(1+c3)) over the usable points.
  double c2_hat = 0.0;
  double c3_hat = 0.0;
  bool fit_ok = false;
};

// Frequency of {0 <-> x, D(0,x) >= c1 |x|_1} over sites at torus L1 radius
// r, pooled across the ensemble. Pooling treats site indicators within one
// configuration as separate trials; the Wilson intervals are therefore
// approximate, which is all the reported curve claims.
inline TailCurve empirical_tail(std::span<const Configuration> ensemble,
                                double c1, std::span<const std::int64_t> radii) {
  if (ensemble.empty()) throw std::domain_error("empirical_tail: empty ensemble");
  if (c1 <= 0) throw std::domain_error("empirical_tail: c1 must be positive");
  const BoxSpec& box = ensemble.front().box();

  // Sites at each requested radius (torus metric, unique fold).
  std::vector<std::vector<SiteIndex>> shells(radii.size());
  const std::int64_t n = box.num_sites();
  for (SiteIndex s = 1; s < n; ++s) {
    const std::int64_t r = site_l1_distance(box, 0, s);
    for (std::size_t i = 0; i < radii.size(); ++i)
      if (r == radii[i]) shells[i].push_back(s);
  }

  TailCurve curve;
  curve.c1 = c1;
  std::vector<std::int64_t> count(radii.size(), 0), total(radii.size(), 0);
  for (const auto& config : ensemble) {
    const auto dist = chemical_distances(config, 0);
    for (std::size_t i = 0; i < radii.size(); ++i) {
      for (SiteIndex s : shells[i]) {
        ++total[i];
        if (dist[s] == kDistInf) continue;  // not connected to the origin
        if (static_cast<double>(dist[s]) >= c1 * static_cast<double>(radii[i]))
          ++count[i];
      }
    }
  }

  std::vector<double> fit_x, fit_y;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    TailPoint pt;
    pt.r = radii[i];
    pt.count = count[i];
    pt.total = total[i];
    if (total[i] == 0)
      throw std::domain_error("empirical_tail: radius exceeds the box");
    pt.freq = static_cast<double>(count[i]) / static_cast<double>(total[i]);
    const auto ci = wilson_interval(count[i], total[i]);
    pt.ci_lo = ci.lo;
    pt.ci_hi = ci.hi;
    curve.points.push_back(pt);
    if (pt.freq > 0.0 && pt.freq < 1.0 && radii[i] >= 2) {
      fit_x.push_back(std::log(std::log(static_cast<double>(radii[i]))));
      fit_y.push_back(std::log(-std::log(pt.freq)));
    }
  }

  const auto fit = fit_line(fit_x, fit_y);
  if (fit.ok) {
    curve.fit_ok = true;
    curve.c2_hat = std::exp(fit.intercept);
    curve.c3_hat = fit.slope - 1.0;
  }
  return curve;
}

}  // namespace perclab
