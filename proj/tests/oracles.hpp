#pragma once

// Test-only reference computations, independent of the library code paths:
// 50-digit error functions, brute-force fine grids, exhaustive enumeration and
// exact distributions of step functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using hp = boost::multiprecision::cpp_bin_float_50;

inline double erf_hp(double t) { return static_cast<double>(boost::math::erf(hp(t))); }
inline double erfc_hp(double t) { return static_cast<double>(boost::math::erfc(hp(t))); }

/// Gaussian mass of (a, b) for density pi^{-1/2} e^{-t^2}, in 50 digits.
inline double mass_hp(double a, double b) {
  return static_cast<double>((boost::math::erf(hp(b)) - boost::math::erf(hp(a))) / 2);
}

inline double box_mass_hp(const std::vector<double>& lo, const std::vector<double>& hi) {
  double m = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) m *= mass_hp(lo[i], hi[i]);
  return m;
}

/// Midpoint rule with n cells in long double on (a, b) against the Gaussian density.
inline long double grid_integral_1d(const std::function<long double(long double)>& h, double a, double b,
                                    std::size_t n) {
  const long double w = (static_cast<long double>(b) - a) / n;
  long double acc = 0.0L;
  const long double c = 1.0L / std::sqrt(3.14159265358979323846264338327950288L);
  for (std::size_t i = 0; i < n; ++i) {
    const long double t = a + (i + 0.5L) * w;
    acc += h(t) * std::exp(-t * t);
  }
  return acc * w * c;
}

/// Mean and q-oscillation on (a, b) from a fine midpoint grid.
inline std::pair<double, double> grid_mean_osc_1d(const std::function<long double(long double)>& f, double a,
                                                  double b, double q, std::size_t n = 2'000'000) {
  const long double mass = grid_integral_1d([](long double) { return 1.0L; }, a, b, n);
  const long double mean = grid_integral_1d(f, a, b, n) / mass;
  const long double osc = grid_integral_1d(
      [&](long double t) { return std::pow(std::fabs(f(t) - mean), static_cast<long double>(q)); }, a, b, n);
  return {static_cast<double>(mean), static_cast<double>(std::pow(osc / mass, 1.0L / q))};
}

/// Exhaustive maximum over antichains of a forest given by parent links
/// (parent[i] == -1 for roots). Nodes with selectable[i] == false are never
/// chosen. At most 24 nodes.
inline double antichain_max_bruteforce(const std::vector<int>& parent, const std::vector<double>& weight,
                                       const std::vector<bool>& selectable) {
  const std::size_t n = parent.size();
  std::vector<std::uint32_t> ancestors(n, 0);
  std::uint32_t allowed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int p = parent[i]; p != -1; p = parent[static_cast<std::size_t>(p)]) ancestors[i] |= std::uint32_t{1} << p;
    if (selectable[i]) allowed |= std::uint32_t{1} << i;
  }
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << n); ++mask) {
    if ((mask & ~allowed) != 0) continue;
    double s = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      ok = (ancestors[i] & mask) == 0;
      s += weight[i];
    }
    if (ok) best = std::max(best, s);
  }
  return best;
}

/// Exact distribution of |g| for a step function given as (value, mass) cells.
struct StepDistribution {
  std::map<double, double> mass_at;  // |value| -> total mass

  void add(double value, double mass) { mass_at[std::abs(value)] += mass; }

  double tail(double sigma) const {
    double s = 0.0;
    for (auto it = mass_at.upper_bound(sigma); it != mass_at.end(); ++it) s += it->second;
    return s;
  }

  double weak_norm(double p) const {
    double best = 0.0;
    for (const auto& [v, m] : mass_at) best = std::max(best, v * std::pow(tail(v) + m, 1.0 / p));
    return best;
  }

  double lq_norm(double q) const {
    double s = 0.0;
    for (const auto& [v, m] : mass_at) s += m * std::pow(v, q);
    return std::pow(s, 1.0 / q);
  }
};

}  // namespace oracle
