#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "perclab/rng.hpp"
#include "perclab/walk.hpp"

namespace perclab {

// Compressed view of one cluster: local indexing, move lists (with
// multiplicity; an L=2 torus has parallel edges) and per-site stay counts.
struct ClusterSystem {
  BoxSpec box;
  std::int32_t two_d = 0;
  std::vector<SiteIndex> sites;      // local -> global
  std::vector<std::int32_t> local;   // global -> local, -1 off the cluster
  std::vector<std::int64_t> row_ptr; // CSR over locals
  std::vector<std::int32_t> col;     // move targets, local indices

  std::int64_t size() const { return static_cast<std::int64_t>(sites.size()); }
  std::int32_t degree(std::int64_t v) const {
    return static_cast<std::int32_t>(row_ptr[v + 1] - row_ptr[v]);
  }
  std::int32_t stay_num(std::int64_t v) const { return two_d - degree(v); }
};

inline ClusterSystem build_cluster_system(const WalkKernel& k) {
  const BoxSpec& box = k.box();
  ClusterSystem sys;
  sys.box = box;
  sys.two_d = 2 * box.d;
  const std::int64_t n = box.num_sites();
  sys.local.assign(n, -1);
  for (SiteIndex s = 0; s < n; ++s) {
    if (k.on_cluster(s)) {
      sys.local[s] = static_cast<std::int32_t>(sys.sites.size());
      sys.sites.push_back(s);
    }
  }
  sys.row_ptr.assign(sys.sites.size() + 1, 0);
  for (std::size_t v = 0; v < sys.sites.size(); ++v) {
    sys.row_ptr[v + 1] = sys.row_ptr[v];
    for_each_neighbor(box, sys.sites[v],
                      [&](SiteIndex t, BondIndex, std::int32_t, std::int32_t) {
                        if (sys.local[t] >= 0) {
                          sys.col.push_back(sys.local[t]);
                          ++sys.row_ptr[v + 1];
                        }
                      });
  }
  return sys;
}

enum class LaplaceMethod : std::uint8_t { Exact = 0, MonteCarlo = 1 };

// a_lambda(x, y) = -log E^x[exp(-lambda H_y); H_y < inf], H_y the first
// time >= 0 the walk sits at y (so a(x, x) = 0).
struct LaplaceEstimate {
  SiteIndex x = 0;
  SiteIndex y = 0;
  double lambda = 0.0;
  double value = 0.0;  // +inf when the expectation vanishes
  LaplaceMethod method = LaplaceMethod::Exact;
  // Monte Carlo only:
  double stderr_value = 0.0;      // delta-method standard error of `value`
  double bias_bound = 0.0;        // truncated mass bound exp(-lambda*horizon)
  double mc_mean = 0.0;           // mean of exp(-lambda H), truncation as 0
  std::int64_t horizon_used = 0;
  bool insufficient = false;      // zero mean: horizon too short or disconnected
};

namespace detail {

// Direct elimination is snappy on small systems; on lattice-scale clusters
// Gauss-Seidel beats the factorization by a wide margin because the
// contraction factor e^-lambda keeps the sweep count small.
constexpr std::int64_t kDirectSolveMax = 4096;
constexpr std::int64_t kSolverMax = std::int64_t{1} << 24;
constexpr double kRelTol = 1e-12;        // componentwise relative residual
constexpr double kZeroResid = 1e-315;    // "stuck at underflow" threshold

// The solution u(v) = E^v[e^-lambda H_y] spans exp(-Theta(lambda * dist))
// orders of magnitude, so convergence is judged componentwise: a component
// is converged when its residual is tiny relative to its value, or when it
// has underflowed to zero and its update cannot lift it. The absolute
// max-norm residual of the unscaled system is then <= 1e-10 automatically
// (u <= 1 after unscaling).
inline double componentwise_residual(const ClusterSystem& sys,
                                     std::int32_t absorb, double c,
                                     const std::vector<double>& u) {
  const std::int64_t n = sys.size();
  double worst = 0.0;
  for (std::int64_t v = 0; v < n; ++v) {
    if (v == absorb) continue;
    double s = 0.0;
    for (std::int64_t e = sys.row_ptr[v]; e < sys.row_ptr[v + 1]; ++e)
      s += u[sys.col[e]];
    s = c * (s + static_cast<double>(sys.stay_num(v)) * u[v]);
    const double r = std::abs(u[v] - s);
    if (u[v] >= 1e-280)
      worst = std::max(worst, r / u[v]);
    else if (u[v] == 0.0 && r > kZeroResid)
      worst = std::max(worst, 1.0);
    // Components between 0 and 1e-280 sit at the representability floor;
    // no further sweep can improve them.
  }
  return worst;
}

// Gauss-Seidel on (I - e^-lambda P) u = b with u(absorb) pinned to bscale.
// The matrix is a strictly diagonally dominant M-matrix, so the sweep
// converges for every lambda > 0; starting from zero the iterates increase
// monotonically, which keeps every floating-point sum cancellation-free.
inline void gauss_seidel_hitting(const ClusterSystem& sys, std::int32_t absorb,
                                 double decay, std::vector<double>& u,
                                 double bscale = 1.0) {
  const std::int64_t n = sys.size();
  const double c = decay / static_cast<double>(sys.two_d);
  u.assign(n, 0.0);
  u[absorb] = bscale;
  for (std::int64_t iter = 0;; ++iter) {
    for (std::int64_t v = 0; v < n; ++v) {
      if (v == absorb) continue;
      double s = 0.0;
      for (std::int64_t e = sys.row_ptr[v]; e < sys.row_ptr[v + 1]; ++e)
        s += u[sys.col[e]];
      u[v] = c * s / (1.0 - c * static_cast<double>(sys.stay_num(v)));
    }
    if (iter % 4 != 3) continue;
    if (componentwise_residual(sys, absorb, c, u) <= kRelTol) return;
    if (iter > 1'000'000)
      throw ResourceError("gauss_seidel_hitting: no convergence in budget");
  }
}

// Direct solve of the same system; the matrix is symmetric positive
// definite (off-diagonal -e^-lambda/2d, strict diagonal dominance), and as
// an M-matrix with nonnegative right-hand side the factorized solve is
// componentwise accurate.
inline void direct_hitting(const ClusterSystem& sys, std::int32_t absorb,
                           double decay, std::vector<double>& u,
                           double bscale = 1.0) {
  const std::int64_t n = sys.size();
  const double c = decay / static_cast<double>(sys.two_d);
  const auto row_of = [&](std::int64_t v) {
    return static_cast<std::int32_t>(v < absorb ? v : v - 1);
  };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(sys.row_ptr[n]) + n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n - 1);
  for (std::int64_t v = 0; v < n; ++v) {
    if (v == absorb) continue;
    const std::int32_t rv = row_of(v);
    trip.emplace_back(rv, rv,
                      1.0 - c * static_cast<double>(sys.stay_num(v)));
    for (std::int64_t e = sys.row_ptr[v]; e < sys.row_ptr[v + 1]; ++e) {
      const std::int32_t w = sys.col[e];
      if (w == absorb)
        b[rv] += c * bscale;
      else
        trip.emplace_back(rv, row_of(w), -c);
    }
  }
  Eigen::SparseMatrix<double> A(n - 1, n - 1);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("direct_hitting: factorization failed");
  Eigen::VectorXd sol = solver.solve(b);
  u.assign(n, 0.0);
  u[absorb] = bscale;
  for (std::int64_t v = 0; v < n; ++v)
    if (v != absorb) u[v] = std::max(0.0, sol[row_of(v)]);
  if (componentwise_residual(sys, absorb, c, u) > kRelTol)
    gauss_seidel_hitting(sys, absorb, decay, u, bscale);  // should not happen
}

// Walk-graph distance from `from`, BFS over the move lists. Used to center
// the solve's dynamic range.
inline std::vector<std::int32_t> walk_graph_distances(const ClusterSystem& sys,
                                                      std::int32_t from) {
  std::vector<std::int32_t> dist(sys.size(), -1);
  std::vector<std::int32_t> frontier{from}, next;
  dist[from] = 0;
  std::int32_t depth = 0;
  while (!frontier.empty()) {
    ++depth;
    next.clear();
    for (std::int32_t v : frontier) {
      for (std::int64_t e = sys.row_ptr[v]; e < sys.row_ptr[v + 1]; ++e) {
        const std::int32_t w = sys.col[e];
        if (dist[w] < 0) {
          dist[w] = depth;
          next.push_back(w);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

}  // namespace detail

// Exact solve of u(v) = e^-lambda sum_w P(v,w) u(w), u(y) = 1, over the
// cluster; returns -log u(x). Disconnected pairs give +inf.
inline LaplaceEstimate hitting_laplace_exact(const ClusterSystem& sys,
                                             SiteIndex x, SiteIndex y,
                                             double lambda) {
  if (lambda < 0)
    throw std::domain_error("hitting_laplace_exact: lambda must be >= 0");
  LaplaceEstimate est;
  est.x = x;
  est.y = y;
  est.lambda = lambda;
  est.method = LaplaceMethod::Exact;
  const std::int32_t lx = sys.local[x], ly = sys.local[y];
  if (lx < 0 || ly < 0) {
    est.value = std::numeric_limits<double>::infinity();
    return est;
  }
  if (lx == ly || lambda == 0.0) {
    est.value = 0.0;  // finite irreducible chain hits y almost surely
    return est;
  }
  if (sys.size() > detail::kSolverMax)
    throw ResourceError(
        "hitting_laplace_exact: cluster exceeds the solver budget, use "
        "hitting_laplace_mc");
  // Center the dynamic range: u(x) >= exp(-(lambda + log 2d) d(x,y)) along a
  // walk-graph geodesic, so pinning u(y) = e^s with s at half that bound
  // keeps both ends of the solution inside double range whenever possible.
  const auto dists = detail::walk_graph_distances(sys, ly);
  const double upper =
      (lambda + std::log(static_cast<double>(sys.two_d))) * dists[lx];
  const double s = std::min(700.0, 0.5 * upper);
  std::vector<double> u;
  if (sys.size() <= detail::kDirectSolveMax)
    detail::direct_hitting(sys, ly, std::exp(-lambda), u, std::exp(s));
  else
    detail::gauss_seidel_hitting(sys, ly, std::exp(-lambda), u, std::exp(s));
  const double ux = u[lx];
  est.value = ux > 0 ? std::max(0.0, s - std::log(ux))
                     : std::numeric_limits<double>::infinity();
  return est;
}

inline LaplaceEstimate hitting_laplace_exact(const WalkKernel& k, SiteIndex x,
                                             SiteIndex y, double lambda) {
  return hitting_laplace_exact(build_cluster_system(k), x, y, lambda);
}

// Monte Carlo estimate: mean of exp(-lambda H_y) over `walks` paths, a
// hit later than the horizon contributing 0. Weights below 1e-18 cannot
// move the estimate, so the effective horizon is capped at the step count
// where the weight falls under that floor; the reported bias bound
// exp(-lambda * horizon_used) covers the actual truncation.
inline LaplaceEstimate hitting_laplace_mc(const WalkKernel& k, SiteIndex x,
                                          SiteIndex y, double lambda,
                                          std::int64_t walks,
                                          std::int64_t horizon, Rng& rng) {
  if (walks < 1) throw std::domain_error("hitting_laplace_mc: walks must be >= 1");
  if (horizon < 1) throw std::domain_error("hitting_laplace_mc: horizon must be >= 1");
  if (!k.on_cluster(x) || !k.on_cluster(y))
    throw std::invalid_argument("hitting_laplace_mc: endpoint off the cluster");
  LaplaceEstimate est;
  est.x = x;
  est.y = y;
  est.lambda = lambda;
  est.method = LaplaceMethod::MonteCarlo;
  if (lambda == 0.0) {
    // Ill-posed under truncation; on one finite cluster the answer is exact.
    est.value = 0.0;
    est.horizon_used = 0;
    return est;
  }

  constexpr double kLogWeightFloor = -41.446531673892822;  // ln 1e-18
  const auto cap = static_cast<std::int64_t>(std::ceil(-kLogWeightFloor / lambda));
  const std::int64_t h = std::min(horizon, std::max<std::int64_t>(1, cap));
  est.horizon_used = h;
  est.bias_bound = std::exp(-lambda * static_cast<double>(h));

  const BoxSpec& box = k.box();
  const auto two_d = static_cast<std::uint64_t>(2 * box.d);
  const bool wrapped = box.boundary == Boundary::Wrapped;
  std::vector<std::int64_t> strides(box.d);
  for (std::int32_t a = 0; a < box.d; ++a) strides[a] = axis_stride(box, a);
  const Coords start_coords = site_coords(box, x);
  const std::int32_t* label = k.labeling->label.data();
  const std::int32_t cluster = k.cluster;
  Coords xc(box.d);
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t w = 0; w < walks; ++w) {
    SiteIndex pos = x;
    xc = start_coords;  // coordinates tracked incrementally, no divisions
    double weight = 0.0;
    if (pos == y) {
      weight = 1.0;  // H_y = 0
    } else {
      for (std::int64_t step = 1; step <= h; ++step) {
        const auto dir = static_cast<std::int32_t>(rng.below(two_d));
        const std::int32_t axis = dir >> 1;
        const std::int64_t xi = xc[axis];
        SiteIndex target = -1;
        std::int64_t xi_new = xi;
        if ((dir & 1) == 0) {
          if (xi < box.L - 1) {
            target = pos + strides[axis];
            xi_new = xi + 1;
          } else if (wrapped) {
            target = pos - (box.L - 1) * strides[axis];
            xi_new = 0;
          }
        } else {
          if (xi > 0) {
            target = pos - strides[axis];
            xi_new = xi - 1;
          } else if (wrapped) {
            target = pos + (box.L - 1) * strides[axis];
            xi_new = box.L - 1;
          }
        }
        if (target >= 0 && label[target] == cluster) {
          pos = target;
          xc[axis] = xi_new;
        }
        if (pos == y) {
          weight = std::exp(-lambda * static_cast<double>(step));
          break;
        }
      }
    }
    sum += weight;
    sumsq += weight * weight;
  }

  const double n = static_cast<double>(walks);
  est.mc_mean = sum / n;
  const double var = std::max(0.0, (sumsq - sum * sum / n) / std::max(1.0, n - 1));
  const double se_mean = std::sqrt(var / n);
  if (est.mc_mean <= 0.0) {
    est.value = std::numeric_limits<double>::infinity();
    est.insufficient = true;
    return est;
  }
  est.value = -std::log(est.mc_mean);
  est.stderr_value = se_mean / est.mc_mean;  // delta method
  return est;
}

// Exact law of X_n on the cluster by n sparse kernel applications.
// Indexed by the cluster system's local ordering.
inline std::vector<double> walk_distribution_exact(const ClusterSystem& sys,
                                                   SiteIndex x0,
                                                   std::int64_t n) {
  const std::int32_t l0 = sys.local[x0];
  if (l0 < 0)
    throw std::invalid_argument("walk_distribution_exact: start off the cluster");
  if (n < 0) throw std::domain_error("walk_distribution_exact: negative step count");
  if (sys.size() * std::max<std::int64_t>(n, 1) > (std::int64_t{1} << 31))
    throw ResourceError("walk_distribution_exact: cluster size times steps over budget");
  const std::int64_t m = sys.size();
  const double inv = 1.0 / static_cast<double>(sys.two_d);
  std::vector<double> cur(m, 0.0), next(m, 0.0);
  cur[l0] = 1.0;
  for (std::int64_t step = 0; step < n; ++step) {
    for (std::int64_t v = 0; v < m; ++v)
      next[v] = cur[v] * static_cast<double>(sys.stay_num(v)) * inv;
    for (std::int64_t v = 0; v < m; ++v) {
      const double flow = cur[v] * inv;
      if (flow == 0.0) continue;
      for (std::int64_t e = sys.row_ptr[v]; e < sys.row_ptr[v + 1]; ++e)
        next[sys.col[e]] += flow;
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace perclab
