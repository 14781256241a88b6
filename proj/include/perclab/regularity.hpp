#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/cluster.hpp"
#include "perclab/lattice.hpp"

namespace perclab {

// Coarse-graining regularity event on the block indexed by i at scale N.
//
// The inspected window is the cube of radius floor(5N/4) centered at
// box_center + (2N+1) * i; it must fit inside the lattice box without
// wrapping. With m = floor(N/10) and components taken in the subgraph
// induced on the window, the event holds iff
//   (1) exactly one component touches both opposite faces of the window
//       along the first axis (the crossing cluster),
//   (2) every axis-aligned sub-box of the window with L-infinity diameter
//       greater than m contains a crossing-cluster site; equivalently, no
//       axis-aligned run of m+2 consecutive window sites avoids it,
//   (3) no other component has L-infinity diameter greater than m.
inline bool check_regularity_event(const Configuration& c, const Coords& block,
                                   std::int64_t N) {
  const BoxSpec& box = c.box();
  if (static_cast<std::int32_t>(block.size()) != box.d)
    throw std::domain_error("check_regularity_event: block dimension mismatch");
  if (N < 1) throw std::domain_error("check_regularity_event: N must be >= 1");

  const std::int64_t radius = (5 * N) / 4;
  const std::int64_t side = 2 * radius + 1;
  const std::int64_t m = N / 10;

  Coords lo(box.d);
  for (std::int32_t a = 0; a < box.d; ++a) {
    const std::int64_t center = box.L / 2 + (2 * N + 1) * block[a];
    lo[a] = center - radius;
    if (lo[a] < 0 || center + radius >= box.L)
      throw std::domain_error("check_regularity_event: window does not fit in the box");
  }

  // Window sites in mixed-radix order (coordinate 0 fastest).
  std::int64_t nwin = 1;
  for (std::int32_t a = 0; a < box.d; ++a) nwin *= side;

  std::vector<std::int64_t> stride(box.d);
  for (std::int32_t a = 0; a < box.d; ++a) stride[a] = axis_stride(box, a);

  const auto window_site = [&](std::int64_t w) {
    SiteIndex s = 0;
    for (std::int32_t a = 0; a < box.d; ++a) {
      s += (lo[a] + w % side) * stride[a];
      w /= side;
    }
    return s;
  };

  // Components of the induced subgraph.
  UnionFind uf(nwin);
  std::vector<bool> vertex(nwin, false);
  std::int64_t wstride = 1;
  for (std::int32_t a = 0; a < box.d; ++a) {
    for (std::int64_t w = 0; w < nwin; ++w) {
      if ((w / wstride) % side == side - 1) continue;  // +a neighbor leaves window
      const SiteIndex s = window_site(w);
      if (!c.bond_open(bond_index(box, s, a))) continue;
      if (!c.site_open(s) || !c.site_open(s + stride[a])) continue;
      vertex[w] = true;
      vertex[w + wstride] = true;
      uf.unite(w, w + wstride);
    }
    wstride *= side;
  }
  if (box.mode == Mode::Site) {
    for (std::int64_t w = 0; w < nwin; ++w)
      if (c.open(window_site(w))) vertex[w] = true;
  }

  // Per-component extremes along every axis.
  struct Extent {
    std::vector<std::int64_t> lo, hi;
  };
  std::vector<std::int32_t> comp(nwin, -1);
  std::vector<Extent> extents;
  for (std::int64_t w = 0; w < nwin; ++w) {
    if (!vertex[w]) continue;
    const std::int64_t root = uf.find(w);
    if (comp[root] < 0) {
      comp[root] = static_cast<std::int32_t>(extents.size());
      extents.push_back({Coords(box.d, side), Coords(box.d, -1)});
    }
    auto& e = extents[comp[root]];
    std::int64_t rem = w;
    for (std::int32_t a = 0; a < box.d; ++a) {
      const std::int64_t xa = rem % side;
      rem /= side;
      e.lo[a] = std::min(e.lo[a], xa);
      e.hi[a] = std::max(e.hi[a], xa);
    }
  }

  // (1) unique crossing component along axis 0.
  std::int32_t crossing = -1;
  for (std::size_t k = 0; k < extents.size(); ++k) {
    if (extents[k].lo[0] == 0 && extents[k].hi[0] == side - 1) {
      if (crossing >= 0) return false;
      crossing = static_cast<std::int32_t>(k);
    }
  }
  if (crossing < 0) return false;

  // (3) every other component must have diameter <= m.
  for (std::size_t k = 0; k < extents.size(); ++k) {
    if (static_cast<std::int32_t>(k) == crossing) continue;
    std::int64_t diam = 0;
    for (std::int32_t a = 0; a < box.d; ++a)
      diam = std::max(diam, extents[k].hi[a] - extents[k].lo[a]);
    if (diam > m) return false;
  }

  // (2) no axis-aligned run of m+2 window sites misses the crossing cluster.
  std::vector<bool> in_crossing(nwin, false);
  for (std::int64_t w = 0; w < nwin; ++w)
    in_crossing[w] = vertex[w] && comp[uf.find(w)] == crossing;
  wstride = 1;
  for (std::int32_t a = 0; a < box.d; ++a) {
    for (std::int64_t w = 0; w < nwin; ++w) {
      if ((w / wstride) % side != 0) continue;  // line starts at coordinate 0
      std::int64_t run = 0;
      for (std::int64_t j = 0; j < side; ++j) {
        if (in_crossing[w + j * wstride]) {
          run = 0;
        } else if (++run >= m + 2) {
          return false;
        }
      }
    }
    wstride *= side;
  }
  return true;
}

}  // namespace perclab
