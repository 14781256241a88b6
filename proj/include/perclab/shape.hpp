#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "perclab/chemical.hpp"
#include "perclab/ensemble.hpp"
#include "perclab/exponents.hpp"
#include "perclab/stats.hpp"

namespace perclab {

using Point2 = std::array<double, 2>;

// Either a rescaled chemical ball (lattice sites over a scale t) or the
// polyhedral unit ball of the directional-constant gauge. The polytope
// geometry is implemented for d = 2, where every acceptance-facing
// comparison (and the SVG output) lives.
struct ShapeSet {
  enum class Kind : std::uint8_t { Empirical, Limit };
  Kind kind = Kind::Empirical;
  std::int32_t d = 2;

  // Empirical: lattice displacements from the origin, compared at x / t.
  std::vector<Coords> sites;
  double t = 1.0;

  // Limit: convex polygon, counter-clockwise vertices.
  std::vector<Point2> verts;
};

namespace geo {

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain; returns CCW hull without collinear points.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Point2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {  // upper
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline double dist_point_segment(const Point2& p, const Point2& a,
                                 const Point2& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = p[0] - a[0], wy = p[1] - a[1];
  const double vv = vx * vx + vy * vy;
  double s = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const double dx = p[0] - (a[0] + s * vx), dy = p[1] - (a[1] + s * vy);
  return std::hypot(dx, dy);
}

inline bool polygon_contains(const std::vector<Point2>& verts, const Point2& p,
                             double eps = 1e-12) {
  const std::size_t n = verts.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = verts[i];
    const auto& b = verts[(i + 1) % n];
    if (cross(a, b, p) < -eps) return false;
  }
  return true;
}

inline double dist_point_polygon(const std::vector<Point2>& verts,
                                 const Point2& p) {
  if (polygon_contains(verts, p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = verts.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, dist_point_segment(p, verts[i], verts[(i + 1) % n]));
  return best;
}

// Distance from a point to an axis-aligned box [c - h, c + h]^2.
inline double dist_point_cell(const Point2& p, const Point2& c, double h) {
  const double dx = std::max(0.0, std::abs(p[0] - c[0]) - h);
  const double dy = std::max(0.0, std::abs(p[1] - c[1]) - h);
  return std::hypot(dx, dy);
}

}  // namespace geo

// Polyhedral unit ball of the positively homogeneous extension of the
// sampled directional constants: the convex hull of the points x / mu(x).
// Needs all +-axis directions so the origin ends up strictly inside;
// asymmetric gauges (mu(x) != mu(-x)) are welcome.
inline ShapeSet build_limit_shape(std::span<const MuEstimate> mus) {
  if (mus.empty()) throw std::domain_error("build_limit_shape: no directions");
  const auto d = static_cast<std::int32_t>(mus.front().x.size());
  if (d != 2)
    throw std::domain_error(
        "build_limit_shape: polytope geometry is implemented for d = 2");

  std::vector<bool> axis_seen(4, false);
  std::vector<Point2> pts;
  for (const auto& m : mus) {
    if (static_cast<std::int32_t>(m.x.size()) != d)
      throw std::domain_error("build_limit_shape: mixed dimensions");
    if (!(m.estimate > 0.0))
      throw std::domain_error("build_limit_shape: nonpositive mu estimate");
    pts.push_back({static_cast<double>(m.x[0]) / m.estimate,
                   static_cast<double>(m.x[1]) / m.estimate});
    if (m.x == Coords{1, 0}) axis_seen[0] = true;
    if (m.x == Coords{-1, 0}) axis_seen[1] = true;
    if (m.x == Coords{0, 1}) axis_seen[2] = true;
    if (m.x == Coords{0, -1}) axis_seen[3] = true;
  }
  for (bool seen : axis_seen)
    if (!seen)
      throw std::domain_error("build_limit_shape: all +-axis directions required");

  ShapeSet s;
  s.kind = ShapeSet::Kind::Limit;
  s.d = 2;
  s.verts = geo::convex_hull(std::move(pts));
  if (s.verts.size() < 3 || !geo::polygon_contains(s.verts, {0.0, 0.0}))
    throw std::domain_error("build_limit_shape: degenerate shape");
  return s;
}

// B_t as a shape: displacements of the giant-cluster sites within chemical
// distance t of the origin.
inline ShapeSet empirical_ball_shape(const Configuration& config,
                                     const ClusterLabeling& labeling, double t) {
  const BoxSpec& box = config.box();
  if (box.boundary == Boundary::Wrapped && t > static_cast<double>(box.L / 2 - 1))
    throw std::domain_error("empirical_ball_shape: t exceeds the box radius");
  ShapeSet s;
  s.kind = ShapeSet::Kind::Empirical;
  s.d = box.d;
  s.t = t;
  for (SiteIndex site : chemical_ball(config, labeling, t))
    s.sites.push_back(torus_displacement(box, site));
  return s;
}

namespace detail {

inline std::vector<Point2> scaled_points(const ShapeSet& s) {
  std::vector<Point2> out;
  out.reserve(s.sites.size());
  for (const auto& c : s.sites)
    out.push_back({static_cast<double>(c[0]) / s.t,
                   static_cast<double>(c[1]) / s.t});
  return out;
}

inline double directed_points_to_points(const std::vector<Point2>& a,
                                        const std::vector<Point2>& b) {
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b)
      best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
    worst = std::max(worst, best);
  }
  return worst;
}

// Empirical sites inflated to unit cells x + [-1/2, 1/2]^2, scaled by 1/t,
// against the polygon. Outward side: the distance to a convex set is
// convex, so cell corners suffice exactly. Return side: polygon vertices
// against the cells, the documented computation for this comparison.
inline double hausdorff_cells_polygon(const ShapeSet& emp, const ShapeSet& lim) {
  const double h = 0.5 / emp.t;
  double out = 0.0;
  for (const auto& c : emp.sites) {
    const Point2 center{static_cast<double>(c[0]) / emp.t,
                        static_cast<double>(c[1]) / emp.t};
    for (int corner = 0; corner < 4; ++corner) {
      const Point2 p{center[0] + (corner & 1 ? h : -h),
                     center[1] + (corner & 2 ? h : -h)};
      out = std::max(out, geo::dist_point_polygon(lim.verts, p));
    }
  }
  double back = 0.0;
  for (const auto& v : lim.verts) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : emp.sites) {
      const Point2 center{static_cast<double>(c[0]) / emp.t,
                          static_cast<double>(c[1]) / emp.t};
      best = std::min(best, geo::dist_point_cell(v, center, h));
    }
    back = std::max(back, best);
  }
  return std::max(out, back);
}

}  // namespace detail

inline double hausdorff_distance(const ShapeSet& a, const ShapeSet& b) {
  const bool a_emp = a.kind == ShapeSet::Kind::Empirical;
  const bool b_emp = b.kind == ShapeSet::Kind::Empirical;
  if (a.d != 2 || b.d != 2)
    throw std::domain_error("hausdorff_distance: implemented for d = 2");
  if ((a_emp && a.sites.empty()) || (!a_emp && a.verts.empty()) ||
      (b_emp && b.sites.empty()) || (!b_emp && b.verts.empty()))
    throw std::domain_error("hausdorff_distance: empty set");

  if (a_emp && b_emp) {
    const auto pa = detail::scaled_points(a);
    const auto pb = detail::scaled_points(b);
    return std::max(detail::directed_points_to_points(pa, pb),
                    detail::directed_points_to_points(pb, pa));
  }
  if (!a_emp && !b_emp) {
    double worst = 0.0;
    for (const auto& v : a.verts)
      worst = std::max(worst, geo::dist_point_polygon(b.verts, v));
    for (const auto& v : b.verts)
      worst = std::max(worst, geo::dist_point_polygon(a.verts, v));
    return worst;
  }
  const ShapeSet& emp = a_emp ? a : b;
  const ShapeSet& lim = a_emp ? b : a;
  return detail::hausdorff_cells_polygon(emp, lim);
}

struct HausdorffReport {
  std::vector<double> t;
  std::vector<double> mean_dist;
  std::vector<double> ci;
  double trend_spearman = 0.0;  // over (t, mean_dist)
};

// Mean Hausdorff distance between B_t / t and the candidate limit shape
// across an origin-conditioned ensemble, per t.
inline HausdorffReport shape_convergence_scan(
    std::span<const EnsembleMember> members, const ShapeSet& limit_shape,
    std::span<const double> t_grid, int workers = 1) {
  if (members.empty())
    throw std::invalid_argument("shape_convergence_scan: empty ensemble");
  if (limit_shape.kind != ShapeSet::Kind::Limit)
    throw std::invalid_argument("shape_convergence_scan: need a limit shape");
  const BoxSpec& box = members.front().config.box();
  if (box.d != 2)
    throw std::domain_error("shape_convergence_scan: implemented for d = 2");
  for (double t : t_grid)
    if (t < 1.0 || (box.boundary == Boundary::Wrapped &&
                    t > static_cast<double>(box.L / 2 - 1)))
      throw std::domain_error("shape_convergence_scan: t outside the box budget");

  const std::int64_t R = static_cast<std::int64_t>(members.size());
  const std::int64_t nt = static_cast<std::int64_t>(t_grid.size());
  std::vector<double> dist(static_cast<std::size_t>(R * nt), 0.0);
  parallel_for(R, workers, [&](std::int64_t r) {
    const auto& m = members[static_cast<std::size_t>(r)];
    const auto d0 = chemical_distances(m.config, 0);
    for (std::int64_t ti = 0; ti < nt; ++ti) {
      ShapeSet emp;
      emp.kind = ShapeSet::Kind::Empirical;
      emp.d = 2;
      emp.t = t_grid[ti];
      for (SiteIndex s = 0; s < box.num_sites(); ++s)
        if (d0[s] != kDistInf && static_cast<double>(d0[s]) <= t_grid[ti])
          emp.sites.push_back(torus_displacement(box, s));
      dist[static_cast<std::size_t>(r * nt + ti)] =
          hausdorff_distance(emp, limit_shape);
    }
  });

  HausdorffReport rep;
  for (std::int64_t ti = 0; ti < nt; ++ti) {
    std::vector<double> xs;
    for (std::int64_t r = 0; r < R; ++r)
      xs.push_back(dist[static_cast<std::size_t>(r * nt + ti)]);
    const auto ci = student_ci(xs);
    rep.t.push_back(t_grid[ti]);
    rep.mean_dist.push_back(ci.mean);
    rep.ci.push_back(ci.half);
  }
  rep.trend_spearman = rep.t.size() >= 2 ? spearman(rep.t, rep.mean_dist) : 0.0;
  return rep;
}

// Overlay plot: the limit polygon plus one rescaled empirical ball.
inline void write_shape_svg(std::ostream& os, const ShapeSet& limit_shape,
                            const ShapeSet* empirical = nullptr) {
  if (limit_shape.kind != ShapeSet::Kind::Limit || limit_shape.d != 2)
    throw std::domain_error("write_shape_svg: need a d = 2 limit shape");
  double radius = 0.1;
  for (const auto& v : limit_shape.verts)
    radius = std::max({radius, std::abs(v[0]), std::abs(v[1])});
  if (empirical) {
    for (const auto& c : empirical->sites)
      radius = std::max({radius, std::abs(c[0] / empirical->t),
                         std::abs(c[1] / empirical->t)});
  }
  const double view = 1.15 * radius;
  const double px = 480.0;
  const auto sx = [&](double x) { return px * (x + view) / (2 * view); };
  const auto sy = [&](double y) { return px * (view - y) / (2 * view); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px
     << "\" height=\"" << px << "\" viewBox=\"0 0 " << px << " " << px
     << "\">\n";
  os << "<rect width=\"" << px << "\" height=\"" << px << "\" fill=\"white\"/>\n";
  os << "<line x1=\"0\" y1=\"" << sy(0) << "\" x2=\"" << px << "\" y2=\""
     << sy(0) << "\" stroke=\"#cccccc\"/>\n";
  os << "<line x1=\"" << sx(0) << "\" y1=\"0\" x2=\"" << sx(0) << "\" y2=\""
     << px << "\" stroke=\"#cccccc\"/>\n";
  if (empirical) {
    const double cell = px / (2 * view) / empirical->t;
    for (const auto& c : empirical->sites) {
      const double x = static_cast<double>(c[0]) / empirical->t;
      const double y = static_cast<double>(c[1]) / empirical->t;
      os << "<rect x=\"" << sx(x) - 0.5 * cell << "\" y=\"" << sy(y) - 0.5 * cell
         << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"#c7dcf5\"/>\n";
    }
  }
  os << "<polygon points=\"";
  for (const auto& v : limit_shape.verts)
    os << sx(v[0]) << "," << sy(v[1]) << " ";
  os << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  os << "</svg>\n";
}

}  // namespace perclab
