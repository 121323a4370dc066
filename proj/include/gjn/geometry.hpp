#pragma once

// Admissible cubes, the admissibility function m(x) and exact Gaussian /
// Lebesgue measures of axis-aligned boxes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gjn {

using Point = std::vector<double>;

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline double norm(std::span<const double> x) { return std::sqrt(norm2(x)); }

/// Admissibility parameter a > 0 of the family Q_a.
class Admissibility {
 public:
  explicit Admissibility(double a) : a_(a) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("admissibility parameter must be positive and finite");
  }
  double value() const { return a_; }

 private:
  double a_;
};

/// Open axis-aligned cube prod_i (c_i - side/2, c_i + side/2).
struct Cube {
  Point center;
  double side = 1.0;

  Cube() = default;
  Cube(Point c, double s) : center(std::move(c)), side(s) {
    if (center.empty()) throw std::invalid_argument("cube needs dimension >= 1");
    if (!(side > 0.0) || !std::isfinite(side))
      throw std::invalid_argument("cube side must be positive and finite");
  }

  std::size_t dim() const { return center.size(); }
  double lower(std::size_t i) const { return center[i] - 0.5 * side; }
  double upper(std::size_t i) const { return center[i] + 0.5 * side; }

  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < dim(); ++i)
      if (!(x[i] > lower(i) && x[i] < upper(i))) return false;
    return true;
  }

  /// Inclusion of open cubes (equivalently of their closures).
  bool contains(const Cube& inner) const {
    for (std::size_t i = 0; i < dim(); ++i)
      if (inner.lower(i) < lower(i) || inner.upper(i) > upper(i)) return false;
    return true;
  }

  bool intersects(const Cube& o) const {
    for (std::size_t i = 0; i < dim(); ++i)
      if (upper(i) <= o.lower(i) || o.upper(i) <= lower(i)) return false;
    return true;
  }

  friend bool operator==(const Cube&, const Cube&) = default;
};

struct Ball {
  Point center;
  double radius = 1.0;

  Ball() = default;
  Ball(Point c, double r) : center(std::move(c)), radius(r) {
    if (center.empty()) throw std::invalid_argument("ball needs dimension >= 1");
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  }
};

/// Axis-aligned open box; integration domain for cells that are not cubes.
struct Box {
  std::vector<double> lo, hi;

  static Box of(const Cube& q) {
    Box b;
    for (std::size_t i = 0; i < q.dim(); ++i) {
      b.lo.push_back(q.lower(i));
      b.hi.push_back(q.upper(i));
    }
    return b;
  }
  std::size_t dim() const { return lo.size(); }
};

/// m(x) = min{1, 1/|x|}, with m(0) = 1.
inline double admissibility_m(std::span<const double> x) {
  const double r = norm(x);
  return r <= 1.0 ? 1.0 : 1.0 / r;
}

/// l_Q <= a m(c_Q), compared exactly.
inline bool is_admissible(const Cube& q, Admissibility a) {
  return q.side <= a.value() * admissibility_m(q.center);
}

inline Cube inscribed_cube_of(const Ball& b) { return Cube(b.center, 2.0 * b.radius); }

// Error integral E(t) = (2/sqrt(pi)) int_0^t exp(-s^2) ds and its complement.
namespace detail {

inline constexpr double kTwoOverSqrtPi = 1.1283791670955125738961589;
inline constexpr double kSwitch = 2.5;

// exp(-t^2) * sum 2^n t^(2n+1) / (2n+1)!!; all terms positive.
inline double erf_series(double t) {
  const double t2 = t * t;
  double term = t;
  double sum = t;
  for (int n = 1; n < 400; ++n) {
    term *= 2.0 * t2 / (2.0 * n + 1.0);
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return kTwoOverSqrtPi * std::exp(-t2) * sum;
}

// Scaled complement e^{t^2} erfc(t) = (1/sqrt(pi)) / (t + (1/2)/(t + 1/(t + (3/2)/(t + ...)))),
// evaluated with the modified Lentz scheme. Used for t >= kSwitch.
inline double erfcx_continued_fraction(double t) {
  constexpr double tiny = 1e-300;
  double f = t;
  double c = f;
  double d = 0.0;
  for (int n = 1; n < 2000; ++n) {
    const double an = 0.5 * n;
    d = t + an * d;
    if (std::abs(d) < tiny) d = tiny;
    c = t + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

inline double erfc_continued_fraction(double t) { return std::exp(-t * t) * erfcx_continued_fraction(t); }

}  // namespace detail

inline double error_integral(double t) {
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return t > 0 ? 1.0 : -1.0;
  const double at = std::abs(t);
  const double v = at < detail::kSwitch ? detail::erf_series(at)
                                        : 1.0 - detail::erfc_continued_fraction(at);
  return t < 0 ? -v : v;
}

inline double complementary_error_integral(double t) {
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return t > 0 ? 0.0 : 2.0;
  if (t >= detail::kSwitch) return detail::erfc_continued_fraction(t);
  if (t <= -detail::kSwitch) return 2.0 - detail::erfc_continued_fraction(-t);
  return 1.0 - error_integral(t);
}

/// Standard Gaussian mass of (alpha, beta) for density pi^{-1/2} e^{-t^2}.
inline double gaussian_interval_mass(double alpha, double beta) {
  if (!(beta > alpha)) return 0.0;
  if (alpha >= 0.0)
    return 0.5 * (complementary_error_integral(alpha) - complementary_error_integral(beta));
  if (beta <= 0.0)
    return 0.5 * (complementary_error_integral(-beta) - complementary_error_integral(-alpha));
  return 0.5 * (error_integral(beta) - error_integral(alpha));
}

/// log of gaussian_interval_mass, finite far into the tails where the mass
/// itself underflows.
inline double log_gaussian_interval_mass(double alpha, double beta) {
  if (!(beta > alpha)) return -INFINITY;
  if (beta <= 0.0) return log_gaussian_interval_mass(-beta, -alpha);
  if (alpha < detail::kSwitch) return std::log(gaussian_interval_mass(alpha, beta));
  // 0.5 e^{-alpha^2} (erfcx(alpha) - e^{alpha^2 - beta^2} erfcx(beta))
  const double inner = detail::erfcx_continued_fraction(alpha) -
                       std::exp((alpha - beta) * (alpha + beta)) * detail::erfcx_continued_fraction(beta);
  return -alpha * alpha + std::log(0.5 * inner);
}

inline double gaussian_measure(const Box& b) {
  double m = 1.0;
  for (std::size_t i = 0; i < b.dim(); ++i) m *= gaussian_interval_mass(b.lo[i], b.hi[i]);
  return m;
}

inline double gaussian_measure(const Cube& q) { return gaussian_measure(Box::of(q)); }

inline double lebesgue_measure(const Cube& q) {
  return std::pow(q.side, static_cast<double>(q.dim()));
}

/// e^{-|c_D|^2} lambda(H) / gamma(H) for H inside an admissible D, formed as a
/// per-axis product so e^{-|c_D|^2} is never materialised on its own.
inline double comparability_ratio(const Cube& h, const Cube& d, Admissibility b) {
  if (h.dim() != d.dim()) throw std::invalid_argument("dimension mismatch");
  if (!d.contains(h)) throw std::invalid_argument("comparability_ratio: H is not contained in D");
  if (!is_admissible(d, b)) throw std::invalid_argument("comparability_ratio: D is not admissible");
  double ratio = 1.0;
  for (std::size_t i = 0; i < h.dim(); ++i) {
    const double c = d.center[i];
    const double log_scaled = log_gaussian_interval_mass(h.lower(i), h.upper(i)) + c * c;
    ratio *= h.side / std::exp(log_scaled);
  }
  return ratio;
}

}  // namespace gjn
