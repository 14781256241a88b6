#pragma once

#include <cstdint>
#include <vector>

#include "perclab/lattice.hpp"

namespace perclab {

// Union-find with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::int64_t n) : parent_(n), size_(n, 1) {
    for (std::int64_t i = 0; i < n; ++i) parent_[i] = i;
  }

  std::int64_t find(std::int64_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

  std::int64_t component_size(std::int64_t x) { return size_[find(x)]; }

 private:
  std::vector<std::int64_t> parent_;
  std::vector<std::int64_t> size_;
};

// Partition of the configuration's cluster graph into connected components.
//
// Vertex rule: in site mode the vertices are the open sites (an isolated
// open site is a singleton cluster); in bond mode the vertices are the
// sites with at least one incident open bond, so an all-closed
// configuration has zero clusters.
struct ClusterLabeling {
  static constexpr std::int32_t kNone = -1;

  std::vector<std::int32_t> label;       // per site; kNone = off every cluster
  std::vector<std::int64_t> sizes;       // per label
  std::vector<std::uint32_t> span_mask;  // per label: bit a set iff the cluster
                                         // touches both faces of axis a
  std::int32_t giant = kNone;            // largest cluster, ties -> smaller label

  std::int64_t num_clusters() const {
    return static_cast<std::int64_t>(sizes.size());
  }
  bool on_cluster(SiteIndex s) const { return label[s] != kNone; }
  bool on_giant(SiteIndex s) const { return giant != kNone && label[s] == giant; }
  bool giant_spans_some_axis() const {
    return giant != kNone && span_mask[giant] != 0;
  }
};

// Exact labeling; labels are assigned in order of first site index, so the
// result is independent of traversal details.
inline ClusterLabeling label_clusters(const Configuration& c) {
  const BoxSpec& box = c.box();
  const std::int64_t n = box.num_sites();
  UnionFind uf(n);
  std::vector<bool> vertex(n, false);

  for (SiteIndex s = 0; s < n; ++s) {
    if (!c.site_open(s)) continue;
    if (box.mode == Mode::Site) vertex[s] = true;
    for_each_neighbor(box, s,
                      [&](SiteIndex t, BondIndex b, std::int32_t, std::int32_t sign) {
                        if (sign < 0) return;  // each bond handled once
                        if (!c.bond_open(b)) return;
                        vertex[s] = true;
                        vertex[t] = true;
                        uf.unite(s, t);
                      });
  }

  ClusterLabeling out;
  out.label.assign(n, ClusterLabeling::kNone);
  std::vector<std::int32_t> root_label(n, ClusterLabeling::kNone);
  for (SiteIndex s = 0; s < n; ++s) {
    if (!vertex[s]) continue;
    const std::int64_t r = uf.find(s);
    if (root_label[r] == ClusterLabeling::kNone) {
      root_label[r] = static_cast<std::int32_t>(out.sizes.size());
      out.sizes.push_back(0);
    }
    out.label[s] = root_label[r];
    ++out.sizes[root_label[r]];
  }

  const auto k = static_cast<std::int32_t>(out.sizes.size());
  if (k > 0) {
    // Per-cluster coordinate extremes for the spanning flags.
    std::vector<std::uint32_t> lo_mask(k, 0), hi_mask(k, 0);
    for (SiteIndex s = 0; s < n; ++s) {
      const std::int32_t lab = out.label[s];
      if (lab == ClusterLabeling::kNone) continue;
      std::int64_t rem = s;
      for (std::int32_t a = 0; a < box.d; ++a) {
        const std::int64_t xi = rem % box.L;
        rem /= box.L;
        if (xi == 0) lo_mask[lab] |= 1u << a;
        if (xi == box.L - 1) hi_mask[lab] |= 1u << a;
      }
    }
    out.span_mask.resize(k);
    for (std::int32_t i = 0; i < k; ++i)
      out.span_mask[i] = lo_mask[i] & hi_mask[i];

    std::int32_t best = 0;
    for (std::int32_t i = 1; i < k; ++i)
      if (out.sizes[i] > out.sizes[best]) best = i;
    out.giant = best;
  }
  return out;
}

}  // namespace perclab
