#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace perclab {

// Running mean/variance, Welford's update (Knuth TAOCP vol. 2, p. 232).
struct Accumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double sem() const { return n > 0 ? sd() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

inline double t_quantile_975(std::int64_t df) {
  if (df < 1) return 0.0;
  boost::math::students_t_distribution<double> dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.975);
}

struct MeanCI {
  double mean = 0.0;
  double half = 0.0;  // 95% half width
  std::int64_t n = 0;
};

// Student-t interval over per-replica values.
inline MeanCI student_ci(std::span<const double> xs) {
  Accumulator acc;
  for (double x : xs) acc.add(x);
  MeanCI ci;
  ci.mean = acc.mean;
  ci.n = acc.n;
  ci.half = acc.n > 1 ? t_quantile_975(acc.n - 1) * acc.sem() : 0.0;
  return ci;
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval at 95% for k successes out of n.
inline Interval wilson_interval(std::int64_t k, std::int64_t n) {
  if (n <= 0) throw std::domain_error("wilson_interval: empty sample");
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  Interval out{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (k == 0) out.lo = 0.0;
  if (k == n) out.hi = 1.0;
  return out;
}

// Average ranks with tie handling.
inline std::vector<double> ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Spearman rank correlation.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::domain_error("spearman: need two samples of equal size >= 2");
  const auto rx = ranks(xs), ry = ranks(ys);
  Accumulator ax, ay;
  for (double v : rx) ax.add(v);
  for (double v : ry) ay.add(v);
  double cov = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i)
    cov += (rx[i] - ax.mean) * (ry[i] - ay.mean);
  const double denom = std::sqrt(ax.m2 * ay.m2);
  if (denom == 0.0) return 0.0;
  return cov / denom;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::domain_error("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

// KS acceptance at significance alpha = 0.01 (asymptotic critical value;
// integer-valued samples make this conservative-ish, good enough for the
// sanity checks it backs).
inline bool ks_pass_at_01(const std::vector<double>& a,
                          const std::vector<double>& b) {
  const double d = ks_statistic(a, b);
  const double m = static_cast<double>(a.size());
  const double n = static_cast<double>(b.size());
  const double crit = 1.628 * std::sqrt((m + n) / (m * n));
  return d <= crit;
}

// Least squares fit y = a + b x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  bool ok = false;
};

inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  LineFit f;
  if (xs.size() != ys.size() || xs.size() < 2) return f;
  Accumulator ax, ay;
  for (double v : xs) ax.add(v);
  for (double v : ys) ay.add(v);
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    sxy += (xs[i] - ax.mean) * (ys[i] - ay.mean);
  if (ax.m2 == 0.0) return f;
  f.slope = sxy / ax.m2;
  f.intercept = ay.mean - f.slope * ax.mean;
  f.ok = true;
  return f;
}

}  // namespace perclab
