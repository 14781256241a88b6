#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perclab/chemical.hpp"
#include "perclab/ensemble.hpp"
#include "perclab/hitting.hpp"
#include "perclab/parallel.hpp"
#include "perclab/stats.hpp"
#include "perclab/walk.hpp"

namespace perclab {

// A replica ran out of fresh torus multiples before reaching the requested
// regeneration depth. `found` carries how far it got.
struct RegenerationShortfall : std::runtime_error {
  std::int64_t found;
  RegenerationShortfall(std::int64_t found_, std::int64_t want)
      : std::runtime_error("regeneration shortfall: found " +
                           std::to_string(found_) + " of " +
                           std::to_string(want) +
                           " regenerations before the wrap budget; lower n "
                           "or enlarge the box"),
        found(found_) {}
};

struct TracePoint {
  std::int64_t n = 0;           // regeneration depth of this checkpoint
  double estimate = 0.0;        // mean over replicas of value / T^(n)
  double ci = 0.0;              // 95% half width over replicas
  double mean_per_count = 0.0;  // mean over replicas of value / n
  double mean_per_count_ci = 0.0;
};

struct AlphaPoint {
  double lambda = 0.0;
  double estimate = 0.0;  // deepest checkpoint of the trace
  double ci = 0.0;
  std::vector<TracePoint> trace;
};

struct AlphaCurve {
  Coords x;
  std::int64_t n = 0;
  std::int64_t replicas = 0;
  double p_omega0 = 0.0;
  std::vector<AlphaPoint> points;  // ascending lambda
};

struct MuEstimate {
  Coords x;
  std::int64_t n = 0;
  std::int64_t replicas = 0;
  double p_omega0 = 0.0;
  double estimate = 0.0;
  double ci = 0.0;
  std::vector<TracePoint> trace;
};

namespace detail {

// Checkpoints 1, 2, 4, ... capped by n, with n always included.
inline std::vector<std::int64_t> regen_checkpoints(std::int64_t n) {
  std::vector<std::int64_t> ks;
  for (std::int64_t k = 1; k < n; k *= 2) ks.push_back(k);
  ks.push_back(n);
  return ks;
}

inline void require_direction(const Coords& x) {
  if (linf_norm(x) == 0)
    throw std::invalid_argument("estimator: direction must be nonzero");
}

}  // namespace detail

// Lyapunov-exponent estimator: for each lambda, a_lambda(0, T_x^(n) x) by
// exact solve per replica, divided by T_x^(n), averaged with a Student-t
// interval. The trace keeps the shallower checkpoints (and the per-count
// averages that exhibit the infimum characterization); `checkpoints`
// overrides the default power-of-two ladder, its last entry must be n.
inline AlphaCurve estimate_alpha(std::span<const EnsembleMember> members,
                                 double p_omega0, const Coords& x,
                                 std::span<const double> lambdas,
                                 std::int64_t n, int workers = 1,
                                 std::span<const std::int64_t> checkpoints = {}) {
  detail::require_direction(x);
  if (n < 4) throw std::invalid_argument("estimate_alpha: n must be >= 4");
  if (members.empty()) throw std::invalid_argument("estimate_alpha: empty ensemble");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1]))
      throw std::invalid_argument("estimate_alpha: lambda grid must increase");

  std::vector<std::int64_t> ks(checkpoints.begin(), checkpoints.end());
  if (ks.empty()) ks = detail::regen_checkpoints(n);
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] < 1 || (i > 0 && ks[i] <= ks[i - 1]))
      throw std::invalid_argument("estimate_alpha: bad checkpoint ladder");
  if (ks.back() != n)
    throw std::invalid_argument("estimate_alpha: checkpoints must end at n");
  const std::int64_t R = static_cast<std::int64_t>(members.size());
  const std::int64_t nl = static_cast<std::int64_t>(lambdas.size());
  const std::int64_t nk = static_cast<std::int64_t>(ks.size());

  // values[r][l][k] = a_lambda(0, T^(k) x);  times[r][k] = T^(k)
  std::vector<double> values(static_cast<std::size_t>(R * nl * nk), 0.0);
  std::vector<double> times(static_cast<std::size_t>(R * nk), 0.0);

  parallel_for(R, workers, [&](std::int64_t r) {
    const auto& m = members[static_cast<std::size_t>(r)];
    const auto seq = regeneration_sequence(m.config, m.labeling, x, n);
    if (!seq.complete) throw RegenerationShortfall(seq.count(), n);
    const auto kern = make_kernel(m.config, m.labeling);
    const auto sys = build_cluster_system(kern);
    for (std::int64_t ki = 0; ki < nk; ++ki) {
      const auto idx = static_cast<std::size_t>(ks[ki] - 1);
      times[static_cast<std::size_t>(r * nk + ki)] =
          static_cast<double>(seq.partials[idx]);
      for (std::int64_t li = 0; li < nl; ++li) {
        const double a =
            hitting_laplace_exact(sys, 0, seq.sites[idx], lambdas[li]).value;
        values[static_cast<std::size_t>((r * nl + li) * nk + ki)] = a;
      }
    }
  });

  AlphaCurve curve;
  curve.x = x;
  curve.n = n;
  curve.replicas = R;
  curve.p_omega0 = p_omega0;
  for (std::int64_t li = 0; li < nl; ++li) {
    AlphaPoint pt;
    pt.lambda = lambdas[li];
    for (std::int64_t ki = 0; ki < nk; ++ki) {
      std::vector<double> ratio, per_count;
      ratio.reserve(R);
      per_count.reserve(R);
      for (std::int64_t r = 0; r < R; ++r) {
        const double a = values[static_cast<std::size_t>((r * nl + li) * nk + ki)];
        ratio.push_back(a / times[static_cast<std::size_t>(r * nk + ki)]);
        per_count.push_back(a / static_cast<double>(ks[ki]));
      }
      const auto ci = student_ci(ratio);
      const auto pc = student_ci(per_count);
      TracePoint tp;
      tp.n = ks[ki];
      tp.estimate = ci.mean;
      tp.ci = ci.half;
      tp.mean_per_count = pc.mean;
      tp.mean_per_count_ci = pc.half;
      pt.trace.push_back(tp);
    }
    pt.estimate = pt.trace.back().estimate;
    pt.ci = pt.trace.back().ci;
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

// The alpha(0) = 0 convention as a curve, for the rate function at x = 0.
inline AlphaCurve make_zero_curve(std::span<const double> lambdas,
                                  std::int32_t d) {
  AlphaCurve curve;
  curve.x = Coords(d, 0);
  for (double l : lambdas) {
    AlphaPoint pt;
    pt.lambda = l;
    curve.points.push_back(pt);
  }
  return curve;
}

// Directional-constant estimators; the same pipeline with the chemical
// distance in place of a_lambda. One BFS per replica serves every
// direction.
inline std::vector<MuEstimate> estimate_mu_multi(
    std::span<const EnsembleMember> members, double p_omega0,
    std::span<const Coords> directions, std::int64_t n, int workers = 1) {
  for (const auto& x : directions) detail::require_direction(x);
  if (n < 4) throw std::invalid_argument("estimate_mu: n must be >= 4");
  if (members.empty()) throw std::invalid_argument("estimate_mu: empty ensemble");

  const auto ks = detail::regen_checkpoints(n);
  const std::int64_t R = static_cast<std::int64_t>(members.size());
  const std::int64_t nd = static_cast<std::int64_t>(directions.size());
  const std::int64_t nk = static_cast<std::int64_t>(ks.size());

  std::vector<double> dvalues(static_cast<std::size_t>(R * nd * nk), 0.0);
  std::vector<double> times(static_cast<std::size_t>(R * nd * nk), 0.0);

  parallel_for(R, workers, [&](std::int64_t r) {
    const auto& m = members[static_cast<std::size_t>(r)];
    const auto dist = chemical_distances(m.config, 0);
    for (std::int64_t di = 0; di < nd; ++di) {
      const auto seq =
          regeneration_sequence(m.config, m.labeling, directions[di], n);
      if (!seq.complete) throw RegenerationShortfall(seq.count(), n);
      for (std::int64_t ki = 0; ki < nk; ++ki) {
        const auto idx = static_cast<std::size_t>(ks[ki] - 1);
        const auto d = dist[seq.sites[idx]];
        if (d == kDistInf)
          throw std::logic_error("estimate_mu: regeneration site unreachable");
        const auto slot = static_cast<std::size_t>((r * nd + di) * nk + ki);
        dvalues[slot] = static_cast<double>(d);
        times[slot] = static_cast<double>(seq.partials[idx]);
      }
    }
  });

  std::vector<MuEstimate> out;
  for (std::int64_t di = 0; di < nd; ++di) {
    MuEstimate mu;
    mu.x = directions[di];
    mu.n = n;
    mu.replicas = R;
    mu.p_omega0 = p_omega0;
    for (std::int64_t ki = 0; ki < nk; ++ki) {
      std::vector<double> ratio, per_count;
      for (std::int64_t r = 0; r < R; ++r) {
        const auto slot = static_cast<std::size_t>((r * nd + di) * nk + ki);
        ratio.push_back(dvalues[slot] / times[slot]);
        per_count.push_back(dvalues[slot] / static_cast<double>(ks[ki]));
      }
      const auto ci = student_ci(ratio);
      const auto pc = student_ci(per_count);
      mu.trace.push_back(TracePoint{ks[ki], ci.mean, ci.half, pc.mean, pc.half});
    }
    mu.estimate = mu.trace.back().estimate;
    mu.ci = mu.trace.back().ci;
    out.push_back(std::move(mu));
  }
  return out;
}

inline MuEstimate estimate_mu(std::span<const EnsembleMember> members,
                              double p_omega0, const Coords& x, std::int64_t n,
                              int workers = 1) {
  const std::vector<Coords> dirs{x};
  return estimate_mu_multi(members, p_omega0, dirs, n, workers).front();
}

// Empirical C3 (the chemical-distance linearity constant): max over
// directions of mean D(0, T_x x)/|x|_1, padded by a 1.2 safety factor.
inline double estimate_c3(std::span<const EnsembleMember> members,
                          std::span<const Coords> directions) {
  if (members.empty() || directions.empty())
    throw std::invalid_argument("estimate_c3: empty input");
  double worst = 0.0;
  for (const auto& x : directions) {
    detail::require_direction(x);
    Accumulator acc;
    for (const auto& m : members) {
      const auto seq = regeneration_sequence(m.config, m.labeling, x, 1);
      if (!seq.complete) throw RegenerationShortfall(seq.count(), 1);
      const auto dist = chemical_distances(m.config, 0);
      const auto d = dist[seq.sites[0]];
      if (d == kDistInf)
        throw std::logic_error("estimate_c3: regeneration site unreachable");
      acc.add(static_cast<double>(d) / static_cast<double>(l1_norm(x)));
    }
    worst = std::max(worst, acc.mean);
  }
  return 1.2 * worst;
}

// Rate function I(x) = sup_{lambda >= 0} (alpha_lambda(x) - lambda) over
// the grid. `scale` evaluates I(scale * x) through homogeneity. The sup is
// flagged divergent when the Legendre integrand still climbs at the end of
// the grid (slope above kDivergenceSlope) or the curve itself is +inf.
inline constexpr double kDivergenceSlope = 0.05;

struct RateFunction {
  std::vector<double> x;
  double value = 0.0;
  double lambda_star = 0.0;
  bool diverged = false;
};

inline RateFunction rate_function(const AlphaCurve& curve, double scale = 1.0) {
  if (curve.points.size() < 8)
    throw std::invalid_argument("rate_function: need at least 8 grid points");
  if (scale <= 0.0) throw std::domain_error("rate_function: scale must be > 0");
  RateFunction rf;
  for (auto c : curve.x) rf.x.push_back(scale * static_cast<double>(c));

  std::vector<double> g;
  for (const auto& pt : curve.points)
    g.push_back(scale * pt.estimate - pt.lambda);
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (g[i] > g[best]) best = i;
  rf.value = std::max(0.0, g[best]);  // lambda = 0 always gives >= 0... see below
  rf.lambda_star = curve.points[best].lambda;

  // a_0 = 0 on one cluster, so g(0) = 0 and I >= 0 holds on any grid that
  // includes lambda = 0; max(0, .) guards grids that do not.
  const std::size_t k = g.size() - 1;
  const double dl = curve.points[k].lambda - curve.points[k - 1].lambda;
  const bool tail_inf = std::isinf(curve.points[k].estimate);
  if (tail_inf || (g[k] - g[k - 1]) / dl > kDivergenceSlope) {
    rf.diverged = true;
    rf.value = std::numeric_limits<double>::infinity();
  }
  return rf;
}

// Cesaro averages of P(0, i z1, i z2 all on the giant cluster) over an
// unconditioned ensemble. Runs to the requested depth or the wrap budget,
// whichever comes first (complete marks which).
struct CesaroTrace {
  Coords z1, z2;
  std::int64_t n = 0;       // requested
  std::int64_t n_used = 0;  // computed depths 1..n_used
  bool complete = false;
  std::vector<double> partial_mean;  // index i-1: mean over replicas at depth i
  std::vector<double> partial_ci;
  double final_mean = 0.0;
  double final_ci = 0.0;
};

inline CesaroTrace estimate_triple_density(
    std::span<const EnsembleMember> members, const Coords& z1, const Coords& z2,
    std::int64_t n) {
  if (members.empty())
    throw std::invalid_argument("estimate_triple_density: empty ensemble");
  if (n < 1) throw std::invalid_argument("estimate_triple_density: n must be >= 1");
  const BoxSpec& box = members.front().config.box();
  if (box.boundary != Boundary::Wrapped)
    throw std::invalid_argument("estimate_triple_density: needs a wrapped box");

  CesaroTrace tr;
  tr.z1 = z1;
  tr.z2 = z2;
  tr.n = n;
  const std::int64_t m = std::max(linf_norm(z1), linf_norm(z2));
  if (m == 0) throw std::invalid_argument("estimate_triple_density: zero shifts");
  tr.n_used = std::min(n, (box.L / 2 - 1) / m);
  tr.complete = tr.n_used == n;
  if (tr.n_used < 1)
    throw std::invalid_argument("estimate_triple_density: box too small for z1, z2");

  const std::int64_t R = static_cast<std::int64_t>(members.size());
  // per-replica Cesaro value at every depth
  std::vector<std::vector<double>> partials(
      static_cast<std::size_t>(tr.n_used),
      std::vector<double>(static_cast<std::size_t>(R), 0.0));
  for (std::int64_t r = 0; r < R; ++r) {
    const auto& mbr = members[static_cast<std::size_t>(r)];
    double run = 0.0;
    for (std::int64_t i = 1; i <= tr.n_used; ++i) {
      const bool hit = mbr.labeling.on_giant(0) &&
                       mbr.labeling.on_giant(torus_multiple(box, z1, i)) &&
                       mbr.labeling.on_giant(torus_multiple(box, z2, i));
      run += hit ? 1.0 : 0.0;
      partials[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(r)] =
          run / static_cast<double>(i);
    }
  }
  for (const auto& row : partials) {
    const auto ci = student_ci(row);
    tr.partial_mean.push_back(ci.mean);
    tr.partial_ci.push_back(ci.half);
  }
  tr.final_mean = tr.partial_mean.back();
  tr.final_ci = tr.partial_ci.back();
  return tr;
}

// --- property report ---------------------------------------------------

struct PropertyCheck {
  std::string name;
  bool pass = false;
  double lhs = 0.0;    // checked as lhs <= rhs + slack
  double rhs = 0.0;
  double slack = 0.0;
  double margin = 0.0;  // rhs + slack - lhs
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;
  bool complete = true;  // every requested relation had its directions
  bool all_pass = true;

  void add(std::string name, double lhs, double rhs, double slack) {
    PropertyCheck c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = slack;
    c.margin = rhs + slack - lhs;
    c.pass = c.margin >= 0.0;
    all_pass = all_pass && c.pass;
    checks.push_back(std::move(c));
  }
};

namespace detail {

inline bool coords_equal(const Coords& a, const Coords& b) { return a == b; }

inline bool is_multiple(const Coords& base, const Coords& big, std::int64_t q) {
  if (base.size() != big.size()) return false;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (big[i] != q * base[i]) return false;
  return true;
}

inline std::string coords_str(const Coords& x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(x[i]);
  }
  return s + ")";
}

}  // namespace detail

// Checks subadditivity, homogeneity (q = 2, 3) and the bound sandwich on a
// family of curves sharing one lambda grid. Slack is the sum of the 95%
// half widths of the estimates entering each side, plus a hair of float
// tolerance so exact p = 1 cases pass as equalities.
inline PropertyReport alpha_property_report(std::span<const AlphaCurve> curves,
                                            double c3_hat) {
  PropertyReport rep;
  if (curves.empty()) {
    rep.complete = false;
    return rep;
  }
  const double eps = 1e-9;
  const auto& grid = curves.front();
  for (const auto& c : curves)
    if (c.points.size() != grid.points.size())
      throw std::invalid_argument("alpha_property_report: mismatched grids");
  const std::size_t nl = grid.points.size();
  const std::int32_t d = static_cast<std::int32_t>(grid.x.size());

  bool found_subadd = false, found_q2 = false, found_q3 = false;
  for (std::size_t li = 0; li < nl; ++li) {
    const double lambda = grid.points[li].lambda;
    // bounds for every curve
    for (const auto& c : curves) {
      const auto& pt = c.points[li];
      const double l1 = static_cast<double>(l1_norm(c.x));
      rep.add("lower_bound " + detail::coords_str(c.x) +
                  " lambda=" + std::to_string(lambda),
              lambda * l1, pt.estimate, pt.ci + eps);
      rep.add("upper_bound " + detail::coords_str(c.x) +
                  " lambda=" + std::to_string(lambda),
              pt.estimate,
              (lambda + std::log(2.0 * d)) * c3_hat * c.p_omega0 * l1,
              pt.ci + eps);
    }
    // subadditivity and homogeneity across curves
    for (const auto& a : curves) {
      for (const auto& b : curves) {
        Coords sum(a.x.size());
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = a.x[i] + b.x[i];
        for (const auto& c : curves) {
          if (!detail::coords_equal(c.x, sum)) continue;
          if (&a > &b) continue;  // one orientation is enough
          found_subadd = true;
          rep.add("subadditivity " + detail::coords_str(c.x) + " <= " +
                      detail::coords_str(a.x) + "+" + detail::coords_str(b.x) +
                      " lambda=" + std::to_string(lambda),
                  c.points[li].estimate,
                  a.points[li].estimate + b.points[li].estimate,
                  c.points[li].ci + a.points[li].ci + b.points[li].ci + eps);
        }
      }
      for (std::int64_t q : {2, 3}) {
        for (const auto& big : curves) {
          if (!detail::is_multiple(a.x, big.x, q)) continue;
          if (l1_norm(a.x) == 0) continue;
          (q == 2 ? found_q2 : found_q3) = true;
          const double diff = std::abs(big.points[li].estimate -
                                       static_cast<double>(q) * a.points[li].estimate);
          rep.add("homogeneity " + detail::coords_str(big.x) + " = " +
                      std::to_string(q) + "*" + detail::coords_str(a.x) +
                      " lambda=" + std::to_string(lambda),
                  diff, 0.0,
                  big.points[li].ci + static_cast<double>(q) * a.points[li].ci + eps);
        }
      }
    }
  }
  rep.complete = found_subadd && found_q2 && found_q3;
  return rep;
}

inline PropertyReport mu_property_report(std::span<const MuEstimate> mus,
                                         double c3_hat) {
  PropertyReport rep;
  if (mus.empty()) {
    rep.complete = false;
    return rep;
  }
  const double eps = 1e-9;
  bool found_subadd = false, found_q2 = false, found_q3 = false;
  for (const auto& m : mus) {
    const double l1 = static_cast<double>(l1_norm(m.x));
    rep.add("lower_bound " + detail::coords_str(m.x), l1, m.estimate, m.ci + eps);
    rep.add("upper_bound " + detail::coords_str(m.x), m.estimate, c3_hat * l1,
            m.ci + eps);
  }
  for (const auto& a : mus) {
    for (const auto& b : mus) {
      Coords sum(a.x.size());
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = a.x[i] + b.x[i];
      for (const auto& c : mus) {
        if (!detail::coords_equal(c.x, sum)) continue;
        if (&a > &b) continue;
        found_subadd = true;
        rep.add("subadditivity " + detail::coords_str(c.x) + " <= " +
                    detail::coords_str(a.x) + "+" + detail::coords_str(b.x),
                c.estimate, a.estimate + b.estimate, c.ci + a.ci + b.ci + eps);
      }
    }
    for (std::int64_t q : {2, 3}) {
      for (const auto& big : mus) {
        if (!detail::is_multiple(a.x, big.x, q)) continue;
        if (l1_norm(a.x) == 0) continue;
        (q == 2 ? found_q2 : found_q3) = true;
        const double diff =
            std::abs(big.estimate - static_cast<double>(q) * a.estimate);
        rep.add("homogeneity " + detail::coords_str(big.x) + " = " +
                    std::to_string(q) + "*" + detail::coords_str(a.x),
                diff, 0.0, big.ci + static_cast<double>(q) * a.ci + eps);
      }
    }
  }
  rep.complete = found_subadd && found_q2 && found_q3;
  return rep;
}

}  // namespace perclab
