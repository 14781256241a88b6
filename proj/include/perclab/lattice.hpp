#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace perclab {

using SiteIndex = std::int64_t;
using BondIndex = std::int64_t;
using Coords = std::vector<std::int64_t>;  // site coordinates or a direction

enum class Mode : std::uint8_t { Bond = 0, Site = 1 };
enum class Boundary : std::uint8_t { Free = 0, Wrapped = 1 };

// Raised when a computation exceeds its configured budget (solver size,
// step count). The message names the cheaper alternative where one exists.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::int64_t l1_norm(const Coords& x) {
  std::int64_t s = 0;
  for (auto c : x) s += c < 0 ? -c : c;
  return s;
}

inline std::int64_t linf_norm(const Coords& x) {
  std::int64_t m = 0;
  for (auto c : x) m = std::max(m, c < 0 ? -c : c);
  return m;
}

// Finite box {0,...,L-1}^d. Wrapped boundary makes it a torus, which keeps
// the shift maps exact; free boundary drops the out-of-box bonds.
struct BoxSpec {
  std::int32_t d = 2;
  std::int64_t L = 2;
  Mode mode = Mode::Bond;
  Boundary boundary = Boundary::Wrapped;

  BoxSpec() = default;
  BoxSpec(std::int32_t d_, std::int64_t L_, Mode m, Boundary b)
      : d(d_), L(L_), mode(m), boundary(b) {
    if (d < 2) throw std::domain_error("BoxSpec: dimension must be >= 2");
    if (L < 2) throw std::domain_error("BoxSpec: side must be >= 2");
    // Bit-packed storage is sized for up to 2^26 sites.
    double sites = 1.0;
    for (int i = 0; i < d; ++i) sites *= static_cast<double>(L);
    if (sites > static_cast<double>(std::int64_t{1} << 26))
      throw std::domain_error("BoxSpec: box exceeds the 2^26 site budget");
  }

  std::int64_t num_sites() const {
    std::int64_t n = 1;
    for (int i = 0; i < d; ++i) n *= L;
    return n;
  }

  // Bonds are grouped by direction; within a direction they are ordered by
  // the mixed-radix rank of their lower endpoint (coordinate 0 fastest).
  std::int64_t bonds_per_dir() const {
    if (boundary == Boundary::Wrapped) return num_sites();
    return num_sites() / L * (L - 1);
  }

  std::int64_t num_bonds() const { return d * bonds_per_dir(); }

  std::int64_t num_states() const {
    return mode == Mode::Bond ? num_bonds() : num_sites();
  }

  bool operator==(const BoxSpec& o) const {
    return d == o.d && L == o.L && mode == o.mode && boundary == o.boundary;
  }
};

inline SiteIndex site_index(const BoxSpec& box, const Coords& x) {
  if (static_cast<std::int32_t>(x.size()) != box.d)
    throw std::domain_error("site_index: coordinate dimension mismatch");
  SiteIndex s = 0;
  std::int64_t stride = 1;
  for (std::int32_t i = 0; i < box.d; ++i) {
    if (x[i] < 0 || x[i] >= box.L)
      throw std::domain_error("site_index: coordinate out of box");
    s += x[i] * stride;
    stride *= box.L;
  }
  return s;
}

inline Coords site_coords(const BoxSpec& box, SiteIndex s) {
  Coords x(box.d);
  for (std::int32_t i = 0; i < box.d; ++i) {
    x[i] = s % box.L;
    s /= box.L;
  }
  return x;
}

inline std::int64_t axis_stride(const BoxSpec& box, std::int32_t axis) {
  std::int64_t stride = 1;
  for (std::int32_t i = 0; i < axis; ++i) stride *= box.L;
  return stride;
}

// Torus addition of a displacement (any integers) to a site.
inline SiteIndex torus_add(const BoxSpec& box, SiteIndex s, const Coords& dx) {
  Coords x = site_coords(box, s);
  for (std::int32_t i = 0; i < box.d; ++i) {
    std::int64_t c = (x[i] + dx[i]) % box.L;
    if (c < 0) c += box.L;
    x[i] = c;
  }
  return site_index(box, x);
}

// Site reached from the origin by k steps of direction x, on the torus.
inline SiteIndex torus_multiple(const BoxSpec& box, const Coords& x,
                                std::int64_t k) {
  Coords y(box.d);
  for (std::int32_t i = 0; i < box.d; ++i) {
    std::int64_t c = (k * x[i]) % box.L;
    if (c < 0) c += box.L;
    y[i] = c;
  }
  return site_index(box, y);
}

// Displacement of s relative to the origin, folded into [-L/2, L/2)^d.
inline Coords torus_displacement(const BoxSpec& box, SiteIndex s) {
  Coords x = site_coords(box, s);
  for (std::int32_t i = 0; i < box.d; ++i)
    if (x[i] >= (box.L + 1) / 2) x[i] -= box.L;
  return x;
}

// L1 distance between sites: geodesic on the torus, plain on a free box.
inline std::int64_t site_l1_distance(const BoxSpec& box, SiteIndex a,
                                     SiteIndex b) {
  Coords xa = site_coords(box, a), xb = site_coords(box, b);
  std::int64_t dist = 0;
  for (std::int32_t i = 0; i < box.d; ++i) {
    std::int64_t delta = xb[i] - xa[i];
    if (delta < 0) delta = -delta;
    if (box.boundary == Boundary::Wrapped) delta = std::min(delta, box.L - delta);
    dist += delta;
  }
  return dist;
}

// Index of the bond leaving `s` in +axis direction, or -1 when the free
// boundary cuts it off. Layout: bond = axis * bonds_per_dir + rank(s),
// where rank is the mixed-radix index of s with radix L-1 on `axis`.
inline BondIndex bond_index(const BoxSpec& box, SiteIndex s, std::int32_t axis) {
  if (box.boundary == Boundary::Wrapped) {
    return static_cast<BondIndex>(axis) * box.num_sites() + s;
  }
  std::int64_t rank = 0, w = 1, rem = s;
  for (std::int32_t i = 0; i < box.d; ++i) {
    const std::int64_t xi = rem % box.L;
    rem /= box.L;
    if (i == axis && xi == box.L - 1) return -1;
    rank += xi * w;
    w *= (i == axis) ? box.L - 1 : box.L;
  }
  return static_cast<BondIndex>(axis) * box.bonds_per_dir() + rank;
}

// Lower endpoint and axis of a bond (inverse of bond_index).
inline std::pair<SiteIndex, std::int32_t> bond_site_axis(const BoxSpec& box,
                                                         BondIndex b) {
  const std::int64_t per = box.bonds_per_dir();
  const auto axis = static_cast<std::int32_t>(b / per);
  std::int64_t rank = b % per;
  if (box.boundary == Boundary::Wrapped) return {rank, axis};
  SiteIndex s = 0;
  std::int64_t w = 1;
  for (std::int32_t i = 0; i < box.d; ++i) {
    const std::int64_t radix = (i == axis) ? box.L - 1 : box.L;
    s += (rank % radix) * w;
    rank /= radix;
    w *= box.L;
  }
  return {s, axis};
}

// Visits the lattice neighbors of s. f(neighbor_site, bond, axis, sign) is
// called for each in-box neighbor; returns the exterior degree (free
// boundary directions leaving the box).
template <typename F>
inline std::int32_t for_each_neighbor(const BoxSpec& box, SiteIndex s, F&& f) {
  std::int32_t exterior = 0;
  std::int64_t stride = 1;
  std::int64_t rem = s;
  for (std::int32_t axis = 0; axis < box.d; ++axis) {
    const std::int64_t xi = rem % box.L;
    rem /= box.L;
    // +axis
    if (xi < box.L - 1) {
      f(s + stride, bond_index(box, s, axis), axis, +1);
    } else if (box.boundary == Boundary::Wrapped) {
      f(s - (box.L - 1) * stride, bond_index(box, s, axis), axis, +1);
    } else {
      ++exterior;
    }
    // -axis: the connecting bond is owned by the neighbor.
    if (xi > 0) {
      const SiteIndex t = s - stride;
      f(t, bond_index(box, t, axis), axis, -1);
    } else if (box.boundary == Boundary::Wrapped) {
      const SiteIndex t = s + (box.L - 1) * stride;
      f(t, bond_index(box, t, axis), axis, -1);
    } else {
      ++exterior;
    }
    stride *= box.L;
  }
  return exterior;
}

struct Neighbor {
  SiteIndex site;
  BondIndex bond;
  std::int32_t axis;
  std::int32_t sign;
};

struct NeighborList {
  std::vector<Neighbor> in_box;
  std::int32_t exterior_degree = 0;
};

inline NeighborList neighbors(const BoxSpec& box, SiteIndex s) {
  if (s < 0 || s >= box.num_sites())
    throw std::domain_error("neighbors: site out of box");
  NeighborList out;
  out.in_box.reserve(2 * box.d);
  out.exterior_degree = for_each_neighbor(
      box, s, [&](SiteIndex t, BondIndex b, std::int32_t axis, std::int32_t sign) {
        out.in_box.push_back(Neighbor{t, b, axis, sign});
      });
  return out;
}

// Open/closed states over bonds (bond mode) or sites (site mode), bit
// packed. In site mode a bond counts as open iff both endpoints are open.
class Configuration {
 public:
  explicit Configuration(const BoxSpec& box)
      : box_(box), nbits_(box.num_states()),
        words_((nbits_ + 63) / 64, 0ull) {}

  const BoxSpec& box() const { return box_; }
  std::int64_t num_states() const { return nbits_; }

  bool open(std::int64_t i) const {
    return (words_[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1ull;
  }

  void set(std::int64_t i, bool v) {
    auto& w = words_[static_cast<std::size_t>(i >> 6)];
    const std::uint64_t m = 1ull << (i & 63);
    w = v ? (w | m) : (w & ~m);
  }

  void fill(bool v) {
    const std::uint64_t w = v ? ~0ull : 0ull;
    for (auto& x : words_) x = w;
    if (v) trim_tail();
  }

  std::int64_t open_count() const {
    std::int64_t n = 0;
    for (auto w : words_) n += __builtin_popcountll(w);
    return n;
  }

  // Usability of the lattice edge on bond b for connectivity and walks.
  bool bond_open(BondIndex b) const {
    if (b < 0) return false;
    if (box_.mode == Mode::Bond) return open(b);
    const auto [s, axis] = bond_site_axis(box_, b);
    const std::int64_t stride = axis_stride(box_, axis);
    const std::int64_t xi = (s / stride) % box_.L;
    const SiteIndex t = xi < box_.L - 1 ? s + stride : s - (box_.L - 1) * stride;
    return open(s) && open(t);
  }

  // In site mode, a site participates in the cluster graph iff open.
  bool site_open(SiteIndex s) const {
    return box_.mode == Mode::Bond ? true : open(s);
  }

  bool operator==(const Configuration& o) const {
    return box_ == o.box_ && words_ == o.words_;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  void trim_tail() {
    const int tail = static_cast<int>(nbits_ & 63);
    if (tail != 0) words_.back() &= (1ull << tail) - 1;
  }

  BoxSpec box_;
  std::int64_t nbits_;
  std::vector<std::uint64_t> words_;
};

// theta_x: shifted(y) = original(x + y), exact on the torus only.
inline Configuration shift(const Configuration& c, const Coords& x) {
  const BoxSpec& box = c.box();
  if (box.boundary != Boundary::Wrapped)
    throw std::logic_error("shift: only defined for wrapped boundary");
  if (static_cast<std::int32_t>(x.size()) != box.d)
    throw std::domain_error("shift: direction dimension mismatch");
  Configuration out(box);
  const std::int64_t n = box.num_sites();
  if (box.mode == Mode::Site) {
    for (SiteIndex y = 0; y < n; ++y)
      out.set(y, c.open(torus_add(box, y, x)));
  } else {
    for (std::int32_t axis = 0; axis < box.d; ++axis)
      for (SiteIndex y = 0; y < n; ++y)
        out.set(bond_index(box, y, axis),
                c.open(bond_index(box, torus_add(box, y, x), axis)));
  }
  return out;
}

// --- serialization ----------------------------------------------------
//
// Byte layout (all integers little-endian):
//   bytes 0..3   magic "PCF1"
//   4..7         u32 d
//   8..15        u64 L
//   16           u8 mode      (0 bond, 1 site)
//   17           u8 boundary  (0 free, 1 wrapped)
//   18..25       u64 nbits
//   26..         ceil(nbits/8) bytes, bit i at byte i/8, bit position i%8

namespace detail {
template <typename T>
void put_le(std::ostream& os, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    os.put(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}
template <typename T>
T get_le(std::istream& is) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == EOF) throw std::runtime_error("configuration stream truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}
}  // namespace detail

inline void write_config(std::ostream& os, const Configuration& c) {
  const BoxSpec& box = c.box();
  os.write("PCF1", 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(box.d));
  detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(box.L));
  os.put(static_cast<char>(box.mode));
  os.put(static_cast<char>(box.boundary));
  const std::int64_t nbits = c.num_states();
  detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(nbits));
  const auto& words = c.words();
  const std::int64_t nbytes = (nbits + 7) / 8;
  for (std::int64_t i = 0; i < nbytes; ++i)
    os.put(static_cast<char>((words[static_cast<std::size_t>(i >> 3)] >>
                              (8 * (i & 7))) & 0xff));
}

inline Configuration read_config(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, "PCF1", 4) != 0)
    throw std::runtime_error("bad configuration magic");
  const auto d = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(is));
  const auto L = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(is));
  const int mode = is.get();
  const int boundary = is.get();
  if (mode < 0 || mode > 1 || boundary < 0 || boundary > 1)
    throw std::runtime_error("bad configuration header");
  BoxSpec box(d, L, static_cast<Mode>(mode), static_cast<Boundary>(boundary));
  const auto nbits = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(is));
  if (nbits != box.num_states())
    throw std::runtime_error("configuration bit count mismatch");
  Configuration c(box);
  for (std::int64_t i = 0; i < nbits; i += 8) {
    const int byte = is.get();
    if (byte == EOF) throw std::runtime_error("configuration stream truncated");
    for (int j = 0; j < 8 && i + j < nbits; ++j)
      c.set(i + j, (byte >> j) & 1);
  }
  return c;
}

}  // namespace perclab
