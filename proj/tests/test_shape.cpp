#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "perclab/shape.hpp"

using namespace perclab;

namespace {

MuEstimate mu_of(Coords x, double value) {
  MuEstimate m;
  m.x = std::move(x);
  m.estimate = value;
  return m;
}

// All 24 nonzero directions with |x|_inf <= 2 in d = 2.
std::vector<Coords> directions24() {
  std::vector<Coords> out;
  for (std::int64_t a = -2; a <= 2; ++a)
    for (std::int64_t b = -2; b <= 2; ++b)
      if (a != 0 || b != 0) out.push_back({a, b});
  return out;
}

std::vector<MuEstimate> l1_mus() {
  std::vector<MuEstimate> mus;
  for (auto& x : directions24())
    mus.push_back(mu_of(x, static_cast<double>(l1_norm(x))));
  return mus;
}

ShapeSet polygon_of(std::vector<Point2> verts) {
  ShapeSet s;
  s.kind = ShapeSet::Kind::Limit;
  s.d = 2;
  s.verts = std::move(verts);
  return s;
}

ShapeSet points_of(std::vector<Coords> sites, double t) {
  ShapeSet s;
  s.kind = ShapeSet::Kind::Empirical;
  s.d = 2;
  s.sites = std::move(sites);
  s.t = t;
  return s;
}

// Exact-integer convex hull oracle. Input points are given as fractions
// with one global denominator, so orientation tests are exact in 128-bit
// integers; the hull is gift-wrapped.
struct RationalPoint {
  long long num_x, num_y, den;
};

std::vector<RationalPoint> rational_hull(std::vector<RationalPoint> pts) {
  const auto orient = [](const RationalPoint& o, const RationalPoint& a,
                         const RationalPoint& b) -> __int128 {
    // Sign of cross((a-o), (b-o)); denominators are positive, so comparing
    // numerators scaled by the opposite denominators is exact.
    const __int128 ax = static_cast<__int128>(a.num_x) * o.den - static_cast<__int128>(o.num_x) * a.den;
    const __int128 ay = static_cast<__int128>(a.num_y) * o.den - static_cast<__int128>(o.num_y) * a.den;
    const __int128 bx = static_cast<__int128>(b.num_x) * o.den - static_cast<__int128>(o.num_x) * b.den;
    const __int128 by = static_cast<__int128>(b.num_y) * o.den - static_cast<__int128>(o.num_y) * b.den;
    // Common positive factors (a.den * b.den) do not change the sign.
    return ax * by - ay * bx;
  };
  // Start at the lexicographically smallest point.
  auto cmp = [](const RationalPoint& p, const RationalPoint& q) {
    const __int128 px = static_cast<__int128>(p.num_x) * q.den;
    const __int128 qx = static_cast<__int128>(q.num_x) * p.den;
    if (px != qx) return px < qx;
    return static_cast<__int128>(p.num_y) * q.den <
           static_cast<__int128>(q.num_y) * p.den;
  };
  std::size_t start = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (cmp(pts[i], pts[start])) start = i;
  std::vector<RationalPoint> hull;
  std::size_t cur = start;
  for (;;) {
    hull.push_back(pts[cur]);
    std::size_t next = (cur + 1) % pts.size();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == cur) continue;
      const auto o = orient(pts[cur], pts[next], pts[i]);
      if (o < 0) {
        next = i;  // i lies clockwise of cur->next: wrap tighter
      } else if (o == 0) {
        // Collinear: keep the farther point so edge-interior points never
        // become hull vertices (matches the minimal-hull convention).
        const auto& c = pts[cur];
        const auto& n = pts[next];
        const auto& p = pts[i];
        const __int128 dn =
            static_cast<__int128>(n.num_x * c.den - c.num_x * n.den) *
                (n.num_x * c.den - c.num_x * n.den) +
            static_cast<__int128>(n.num_y * c.den - c.num_y * n.den) *
                (n.num_y * c.den - c.num_y * n.den);
        const __int128 dp =
            static_cast<__int128>(p.num_x * c.den - c.num_x * p.den) *
                (p.num_x * c.den - c.num_x * p.den) +
            static_cast<__int128>(p.num_y * c.den - c.num_y * p.den) *
                (p.num_y * c.den - c.num_y * p.den);
        // All inputs share one denominator, so the cross factors cancel.
        if (dp > dn) next = i;
      }
    }
    cur = next;
    if (cur == start) break;
    if (hull.size() > pts.size()) FAIL("gift wrapping failed");
  }
  return hull;
}

}  // namespace

TEST_CASE("l1 directional constants give the cross-polytope") {
  const auto shape = build_limit_shape(l1_mus());
  REQUIRE(shape.verts.size() == 4);
  std::set<std::pair<double, double>> got;
  for (const auto& v : shape.verts) got.insert({v[0], v[1]});
  const std::set<std::pair<double, double>> want{
      {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  CHECK(got == want);
}

TEST_CASE("doubling one axis pair halves the shape along that axis") {
  std::vector<MuEstimate> mus{mu_of({1, 0}, 2), mu_of({-1, 0}, 2),
                              mu_of({0, 1}, 1), mu_of({0, -1}, 1)};
  const auto shape = build_limit_shape(mus);
  double max_x = 0.0, max_y = 0.0;
  for (const auto& v : shape.verts) {
    max_x = std::max(max_x, std::abs(v[0]));
    max_y = std::max(max_y, std::abs(v[1]));
  }
  CHECK(std::abs(max_x - 0.5) < 1e-12);
  CHECK(std::abs(max_y - 1.0) < 1e-12);
}

TEST_CASE("limit shape requires every axis direction") {
  std::vector<MuEstimate> mus{mu_of({1, 0}, 1), mu_of({-1, 0}, 1),
                              mu_of({0, 1}, 1)};
  CHECK_THROWS_AS(build_limit_shape(mus), std::domain_error);
}

TEST_CASE("hull matches the exact rational oracle on 8 known directions") {
  // mu values chosen with denominator 6 after inversion: points x / mu.
  struct Row {
    Coords x;
    double mu;
    long long nx, ny, den;  // x / mu as exact fractions over one den
  };
  const std::vector<Row> rows{
      {{1, 0}, 1.0, 6, 0, 6},    {{-1, 0}, 1.5, -4, 0, 6},
      {{0, 1}, 2.0, 0, 3, 6},    {{0, -1}, 1.0, 0, -6, 6},
      {{1, 1}, 2.0, 3, 3, 6},    {{-1, -1}, 3.0, -2, -2, 6},
      {{1, -1}, 1.5, 4, -4, 6},  {{-1, 1}, 2.0, -3, 3, 6},
  };
  std::vector<MuEstimate> mus;
  std::vector<RationalPoint> rpts;
  for (const auto& r : rows) {
    mus.push_back(mu_of(r.x, r.mu));
    rpts.push_back({r.nx, r.ny, r.den});
  }
  const auto shape = build_limit_shape(mus);
  const auto oracle = rational_hull(rpts);
  REQUIRE(shape.verts.size() == oracle.size());
  // Same cyclic order up to rotation; anchor on the lexicographic minimum.
  auto verts = shape.verts;
  std::size_t anchor = 0;
  for (std::size_t i = 1; i < verts.size(); ++i)
    if (verts[i] < verts[anchor]) anchor = i;
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    const auto& v = verts[(anchor + i) % verts.size()];
    const auto& o = oracle[i];
    CHECK(std::abs(v[0] - static_cast<double>(o.num_x) / o.den) < 1e-12);
    CHECK(std::abs(v[1] - static_cast<double>(o.num_y) / o.den) < 1e-12);
  }
}

TEST_CASE("interior direction points do not become vertices") {
  auto mus = l1_mus();
  // A deliberately slow direction: point (1,1)/4 far inside the hull.
  mus.push_back(mu_of({1, 1}, 4.0));
  const auto shape = build_limit_shape(mus);
  CHECK(shape.verts.size() == 4);
}

TEST_CASE("adding directions never shrinks the hull") {
  std::vector<MuEstimate> base{mu_of({1, 0}, 1), mu_of({-1, 0}, 1),
                               mu_of({0, 1}, 1), mu_of({0, -1}, 1)};
  const auto small = build_limit_shape(base);
  base.push_back(mu_of({1, 1}, 1.5));  // consistent with a gauge <= L1
  const auto bigger = build_limit_shape(base);
  // Every vertex of the small shape stays inside the bigger one.
  for (const auto& v : small.verts)
    CHECK(geo::polygon_contains(bigger.verts, v, 1e-9));
  // And the new shape pokes out where the new direction was added.
  CHECK(!geo::polygon_contains(small.verts, {1.0 / 1.5, 1.0 / 1.5}, 1e-9));
}

TEST_CASE("midpoints of hull vertices stay inside (convexity)") {
  const auto shape = build_limit_shape(l1_mus());
  const auto n = shape.verts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Point2 mid{0.5 * (shape.verts[i][0] + shape.verts[j][0]),
                       0.5 * (shape.verts[i][1] + shape.verts[j][1])};
      CHECK(geo::polygon_contains(shape.verts, mid, 1e-12));
    }
}

TEST_CASE("hausdorff distance of a set to itself is zero") {
  const auto poly = polygon_of({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  CHECK(hausdorff_distance(poly, poly) == 0.0);
  const auto pts = points_of({{0, 0}, {1, 2}, {-3, 1}}, 2.0);
  CHECK(hausdorff_distance(pts, pts) == 0.0);
}

TEST_CASE("hausdorff distance between nested L1 balls is the scale gap") {
  const auto unit = polygon_of({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  const auto twice = polygon_of({{2, 0}, {0, 2}, {-2, 0}, {0, -2}});
  CHECK(std::abs(hausdorff_distance(unit, twice) - 1.0) < 1e-12);
}

TEST_CASE("point-set hausdorff equals the brute-force pairwise oracle") {
  Rng rng(2211);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Coords> a, b;
    for (int i = 0; i < 20; ++i)
      a.push_back({static_cast<std::int64_t>(rng.below(21)) - 10,
                   static_cast<std::int64_t>(rng.below(21)) - 10});
    for (int i = 0; i < 15; ++i)
      b.push_back({static_cast<std::int64_t>(rng.below(21)) - 10,
                   static_cast<std::int64_t>(rng.below(21)) - 10});
    const auto sa = points_of(a, 3.0), sb = points_of(b, 2.0);
    // Independent O(|A||B|) evaluation.
    double d_ab = 0.0, d_ba = 0.0;
    for (const auto& p : a) {
      double best = 1e300;
      for (const auto& q : b)
        best = std::min(best, std::hypot(p[0] / 3.0 - q[0] / 2.0,
                                         p[1] / 3.0 - q[1] / 2.0));
      d_ab = std::max(d_ab, best);
    }
    for (const auto& q : b) {
      double best = 1e300;
      for (const auto& p : a)
        best = std::min(best, std::hypot(p[0] / 3.0 - q[0] / 2.0,
                                         p[1] / 3.0 - q[1] / 2.0));
      d_ba = std::max(d_ba, best);
    }
    CHECK(std::abs(hausdorff_distance(sa, sb) - std::max(d_ab, d_ba)) < 1e-9);
  }
}

TEST_CASE("hausdorff is symmetric and satisfies the triangle inequality") {
  const auto a = points_of({{0, 0}, {2, 1}, {4, 4}}, 1.0);
  const auto b = points_of({{1, 1}, {3, 0}}, 1.0);
  const auto c = points_of({{-2, 2}, {0, 3}, {5, -1}}, 1.0);
  const double ab = hausdorff_distance(a, b);
  const double ba = hausdorff_distance(b, a);
  CHECK(std::abs(ab - ba) < 1e-12);
  CHECK(hausdorff_distance(a, c) <= ab + hausdorff_distance(b, c) + 1e-9);
}

TEST_CASE("empty sets are rejected") {
  const auto poly = polygon_of({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  CHECK_THROWS_AS(hausdorff_distance(points_of({}, 1.0), poly),
                  std::domain_error);
}

TEST_CASE("full-lattice balls converge at the discretization rate") {
  BoxSpec box(2, 40, Mode::Bond, Boundary::Wrapped);
  SamplerSpec spec;
  spec.model = ModelKind::BernoulliBond;
  spec.p = 1.0;
  spec.seed = 9;
  const auto ens = make_ensemble(box, spec, 1, true);
  const auto shape = build_limit_shape(l1_mus());
  const std::vector<double> ts{4, 8, 16};
  const auto rep = shape_convergence_scan(ens.members, shape, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(rep.mean_dist[i] <= 2.0 / ts[i] + 1e-9);  // d / t
    CHECK(rep.mean_dist[i] >= 0.0);
  }
  CHECK(rep.trend_spearman == -1.0);
}

TEST_CASE("supercritical scan decreases and the wrong shape stays far") {
  BoxSpec box(2, 80, Mode::Bond, Boundary::Wrapped);
  SamplerSpec spec;
  spec.model = ModelKind::BernoulliBond;
  spec.p = 0.7;
  spec.seed = 4711;
  const auto ens = make_ensemble(box, spec, 10, true, 2);

  // Reference shape from a matching mu run.
  const auto dirs = directions24();
  const auto mus = estimate_mu_multi(ens.members, ens.p_omega0(), dirs, 8, 2);
  const auto shape = build_limit_shape(mus);

  const std::vector<double> ts{8, 16, 32};
  const auto rep = shape_convergence_scan(ens.members, shape, ts, 2);
  CHECK(rep.mean_dist[0] > rep.mean_dist[1]);
  CHECK(rep.mean_dist[1] > rep.mean_dist[2]);
  CHECK(rep.trend_spearman < 0.0);

  // Negative control: the L-infinity unit ball is the wrong shape.
  const auto wrong = polygon_of({{1, -1}, {1, 1}, {-1, 1}, {-1, -1}});
  const auto bad = shape_convergence_scan(ens.members, wrong, ts, 2);
  for (double dist : bad.mean_dist) CHECK(dist > 0.25);
}

TEST_CASE("scan validates the t grid against the box") {
  BoxSpec box(2, 16, Mode::Bond, Boundary::Wrapped);
  SamplerSpec spec;
  spec.model = ModelKind::BernoulliBond;
  spec.p = 1.0;
  spec.seed = 2;
  const auto ens = make_ensemble(box, spec, 1, true);
  const auto shape = build_limit_shape(l1_mus());
  CHECK_THROWS_AS(
      shape_convergence_scan(ens.members, shape, std::vector<double>{10.0}),
      std::domain_error);
}

TEST_CASE("svg output contains the overlay elements") {
  const auto shape = build_limit_shape(l1_mus());
  const auto emp = points_of({{0, 0}, {3, 1}, {-2, -2}}, 4.0);
  std::ostringstream os;
  write_shape_svg(os, shape, &emp);
  const auto svg = os.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<polygon") != std::string::npos);
  CHECK(svg.find("<rect") != std::string::npos);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}
