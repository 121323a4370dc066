#pragma once

// Scalar fields and their Gaussian statistics on cubes: averages,
// q-oscillations, truncations, distribution functions and weak/strong norms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gjn/covering.hpp"
#include "gjn/geometry.hpp"
#include "gjn/quadrature.hpp"

namespace gjn {

/// Evaluatable real function on R^d. `breaks` lists, per axis, the
/// hyperplanes where the field jumps, has a kink or is singular; quadrature
/// panels are cut there. The growth constants give a majorant c0 + c2 |x|^2
/// of |f| for Gaussian tail integrals outside a centred cube (a field singular
/// on a coordinate hyperplane uses for c0 its one-axis Gaussian mean).
/// Kinks or jumps off the coordinate hyperplanes are declared through
/// `kinks`, level functions whose signs change across them. A field that is
/// constant between its breaks skips the grading toward them.
struct ScalarField {
  std::string id;
  std::string description;
  std::size_t dimension = 0;  // 0: any dimension
  std::string singular_set;   // empty when the evaluator is total
  AxisBreaks breaks;
  std::function<double(std::span<const double>)> eval;
  std::vector<LevelFn> kinks;
  bool cellwise_constant = false;
  double growth_const = 0.0;
  double growth_quadratic = 0.0;

  double operator()(std::span<const double> x) const { return eval(x); }
};

inline AxisBreaks merge_breaks(const AxisBreaks& a, const AxisBreaks& b) {
  AxisBreaks out(std::max(a.size(), b.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i < a.size()) out[i].insert(out[i].end(), a[i].begin(), a[i].end());
    if (i < b.size()) out[i].insert(out[i].end(), b[i].begin(), b[i].end());
    std::sort(out[i].begin(), out[i].end());
    out[i].erase(std::unique(out[i].begin(), out[i].end()), out[i].end());
  }
  return out;
}

/// Pointwise clamp to [-N, N].
inline ScalarField truncate(const ScalarField& f, double level) {
  if (!(level > 0.0)) throw std::invalid_argument("truncate: level must be positive");
  ScalarField out = f;
  out.id = f.id + "|N=" + std::to_string(level);
  out.singular_set.clear();
  out.eval = [g = f.eval, level](std::span<const double> x) {
    const double v = g(x);
    return std::clamp(v, -level, level);
  };
  if (!f.cellwise_constant) {
    out.kinks.push_back([g = f.eval, level](std::span<const double> x) { return g(x) - level; });
    out.kinks.push_back([g = f.eval, level](std::span<const double> x) { return g(x) + level; });
  }
  out.growth_const = level;
  out.growth_quadratic = 0.0;
  return out;
}

// --- averages and oscillations -------------------------------------------

struct MeanOscillation {
  double mean = 0.0;
  double oscillation = 0.0;
};

namespace detail {

inline double sample_mean(const Sample& s) {
  double mass = 0.0, acc = 0.0;
  bool constant = true;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    mass += s.weights[i];
    acc += s.weights[i] * s.values[i];
    constant = constant && s.values[i] == s.values.front();
  }
  if (!(mass > 0.0)) throw QuadratureError("cube has no Gaussian mass at working precision");
  return constant ? s.values.front() : acc / mass;
}

}  // namespace detail

/// Gaussian average f_B over a box.
inline double gauss_average(const ScalarField& f, const Box& box, const QuadratureSpec& spec) {
  if (!f.kinks.empty()) return average_gaussian_split(box, f.breaks, f.eval, f.kinks, spec);
  const auto r = converge(
      [&](int level) {
        const Sample s = sample(box, f.breaks, f.eval, spec.nodes_per_axis, level, !f.cellwise_constant);
        return std::vector<double>{detail::sample_mean(s)};
      },
      spec, "gauss_average(" + f.id + ")");
  return r[0];
}

inline double gauss_average(const ScalarField& f, const Cube& q, const QuadratureSpec& spec) {
  return gauss_average(f, Box::of(q), spec);
}

/// (1/gamma(Q)) int_Q |f - center|^q dgamma, with the kink set {f = center}
/// located along quadrature lines.
inline double deviation_moment(const ScalarField& f, const Cube& cube, double center, double q,
                               const QuadratureSpec& spec) {
  auto dev = [&](std::span<const double> x) { return std::pow(std::abs(f(x) - center), q); };
  if (f.cellwise_constant && f.kinks.empty()) {
    const Box box = Box::of(cube);
    const auto r = converge(
        [&](int level) {
          const Sample s = sample(box, f.breaks, dev, spec.nodes_per_axis, level, false);
          return std::vector<double>{detail::sample_mean(s)};
        },
        spec, "deviation_moment(" + f.id + ")");
    return r[0];
  }
  std::vector<LevelFn> levels = f.kinks;
  levels.push_back([&](std::span<const double> x) { return f(x) - center; });
  return average_gaussian_split(Box::of(cube), f.breaks, dev, levels, spec);
}

/// f_Q and ((1/gamma(Q)) int_Q |f - f_Q|^q dgamma)^{1/q}, both converged.
inline MeanOscillation mean_and_oscillation(const ScalarField& f, const Cube& cube, double q,
                                            const QuadratureSpec& spec) {
  if (!(q >= 1.0)) throw std::invalid_argument("oscillation: q must be >= 1");
  const double mean = gauss_average(f, cube, spec);
  return {mean, std::pow(deviation_moment(f, cube, mean, q, spec), 1.0 / q)};
}

inline double oscillation(const ScalarField& f, const Cube& cube, double q, const QuadratureSpec& spec) {
  return mean_and_oscillation(f, cube, q, spec).oscillation;
}

/// (int_Q |g|^q dgamma)^{1/q}.
inline double lq_norm(const ScalarField& g, const Cube& cube, double q, const QuadratureSpec& spec) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
  return std::pow(deviation_moment(g, cube, 0.0, q, spec) * gaussian_measure(cube), 1.0 / q);
}

inline bool is_constant_on(const ScalarField& f, const Cube& cube, const QuadratureSpec& spec) {
  const MeanOscillation mo = mean_and_oscillation(f, cube, 1.0, spec);
  return mo.oscillation <= 1e-12 * (1.0 + std::abs(mo.mean));
}

// --- distribution functions ----------------------------------------------

/// Discrete distribution of |values| under absolute quadrature weights:
/// mass(sigma) = sum of weights of nodes with value > sigma.
class DiscreteDistribution {
 public:
  DiscreteDistribution(const std::vector<double>& values, const std::vector<double>& weights, double scale) {
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    double acc = 0.0;
    for (std::size_t i : order) {
      acc += weights[i] * scale;
      levels_.push_back(values[i]);
      cumulative_.push_back(acc);
    }
  }

  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  double tail(double sigma) const {
    // levels_ is nonincreasing; count of entries strictly above sigma
    const auto it = std::partition_point(levels_.begin(), levels_.end(), [&](double v) { return v > sigma; });
    const auto n = static_cast<std::size_t>(it - levels_.begin());
    return n == 0 ? 0.0 : cumulative_[n - 1];
  }

  /// sup_sigma sigma * mass(sigma)^{1/p}, attained as sigma -> v^- at a node value v.
  double weak_norm(double p) const {
    double best = 0.0;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (i + 1 < levels_.size() && levels_[i + 1] == levels_[i]) continue;
      best = std::max(best, levels_[i] * std::pow(cumulative_[i], 1.0 / p));
    }
    return best;
  }

  double max_level() const { return levels_.empty() ? 0.0 : levels_.front(); }

 private:
  std::vector<double> levels_;
  std::vector<double> cumulative_;
};

inline constexpr std::size_t kDistributionNodeBudget = std::size_t{1} << 18;

/// Distribution of |f - center| on a cube, built on the refinement level
/// 2 * refinement_levels (capped by a node budget) so that every sigma uses the
/// same node set.
inline DiscreteDistribution deviation_distribution(const ScalarField& f, const Cube& cube, double center,
                                                   const QuadratureSpec& spec,
                                                   std::size_t node_budget = kDistributionNodeBudget) {
  const Box box = Box::of(cube);
  const bool graded = !f.cellwise_constant;
  const int level =
      level_cap(box, f.breaks, spec.nodes_per_axis, 2 * spec.refinement_levels, node_budget, graded);
  Sample s = sample(box, f.breaks, f.eval, spec.nodes_per_axis, level, graded);
  for (double& v : s.values) v = std::abs(v - center);
  return DiscreteDistribution(s.values, s.weights, s.scale());
}

struct DistributionProfile {
  std::vector<double> sigmas;
  std::vector<double> tail_values;
};

/// gamma({x in Q : |f - f_Q| > sigma}) on an increasing sigma grid.
inline DistributionProfile distribution_profile(const ScalarField& f, const Cube& cube,
                                                std::span<const double> sigmas, const QuadratureSpec& spec) {
  if (!std::is_sorted(sigmas.begin(), sigmas.end()))
    throw std::invalid_argument("distribution_profile: sigma grid must be increasing");
  const double mean = gauss_average(f, cube, spec);
  const DiscreteDistribution dist = deviation_distribution(f, cube, mean, spec);
  const double cap = gaussian_measure(cube);
  DistributionProfile prof;
  for (double s : sigmas) {
    if (!(s > 0.0)) throw std::invalid_argument("distribution_profile: sigma must be positive");
    prof.sigmas.push_back(s);
    prof.tail_values.push_back(std::min(dist.tail(s), cap));
  }
  return prof;
}

inline double tail_measure(const ScalarField& f, const Cube& cube, double sigma, const QuadratureSpec& spec) {
  const double s[] = {sigma};
  return distribution_profile(f, cube, s, spec).tail_values.front();
}

/// sup_sigma sigma * gamma({x in Q : |g| > sigma})^{1/p} over the quadrature
/// distribution of |g|.
inline double weak_lp_norm(const ScalarField& g, const Cube& cube, double p, const QuadratureSpec& spec) {
  if (!(p > 1.0)) throw std::invalid_argument("weak_lp_norm: p must be > 1");
  return deviation_distribution(g, cube, 0.0, spec).weak_norm(p);
}

// --- global integrals -----------------------------------------------------

/// Bound for int_{R^d \ (-R,R)^d} (c0 + c2 |x|^2) dgamma.
inline double gaussian_tail_bound(std::size_t d, double half_width, double c0, double c2) {
  const double e = complementary_error_integral(half_width);
  const double second_moment = 0.5 * e + half_width * std::exp(-half_width * half_width) / std::sqrt(std::numbers::pi);
  const double dd = static_cast<double>(d);
  return dd * (c0 * e + c2 * (second_moment + 0.5 * (dd - 1.0) * e));
}

struct GlobalIntegral {
  double value = 0.0;
  double tail_slack = 0.0;  // bound on the neglected mass outside the box
  double half_width = 0.0;
};

/// int_{R^d} h(f(x)) dgamma, integrated over P_k for the smallest k >= min_layer
/// whose tail bound is below target_slack; requires |h(v)| <= |v|. In d >= 2
/// the kinks of f and the zero set of f are located along lines.
template <class H>
GlobalIntegral global_integral(const ScalarField& f, std::size_t d, H&& h, const QuadratureSpec& spec,
                               double target_slack = 1e-8, std::size_t min_layer = 1) {
  const RadiusSequence radii = radius_sequence(std::max<std::size_t>(min_layer, 1) + 200);
  std::size_t k = std::max<std::size_t>(min_layer, 1);
  while (gaussian_tail_bound(d, radii.at(k), f.growth_const, f.growth_quadratic) > target_slack &&
         k < radii.size())
    ++k;
  const double r = radii.at(k);
  Box box;
  AxisBreaks breaks(d);
  for (std::size_t i = 0; i < d; ++i) {
    box.lo.push_back(-r);
    box.hi.push_back(r);
    for (double t = std::ceil(-r); t < r; t += 1.0) breaks[i].push_back(t);
  }
  breaks = merge_breaks(breaks, f.breaks);
  GlobalIntegral out;
  out.half_width = r;
  out.tail_slack = gaussian_tail_bound(d, r, f.growth_const, f.growth_quadratic);
  auto integrand = [&](std::span<const double> x) { return h(f(x)); };
  if (d == 1 || f.cellwise_constant) {
    out.value = integrate_gaussian(box, breaks, integrand, spec);
    return out;
  }
  // curved kinks of f, and of h(f) on {f = 0}
  std::vector<LevelFn> levels = f.kinks;
  levels.push_back(f.eval);
  out.value = average_gaussian_split(box, breaks, integrand, levels, spec) * gaussian_measure(box);
  return out;
}

inline GlobalIntegral global_l1_norm(const ScalarField& f, std::size_t d, const QuadratureSpec& spec,
                                     double target_slack = 1e-8) {
  return global_integral(f, d, [](double v) { return std::abs(v); }, spec, target_slack);
}

}  // namespace gjn
