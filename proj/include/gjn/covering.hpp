#pragma once

// Layered covering of R^d by admissible cubes (A_d = 2 sqrt(d)) and the
// M(B) / M(Q) chains that walk an admissible cube toward the origin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/random/sobol.hpp>

#include "gjn/geometry.hpp"

namespace gjn {

/// a_1 = 1, a_{k+1} = a_k + 1/a_k. Stored 1-based through at().
struct RadiusSequence {
  std::vector<double> values;

  double at(std::size_t k) const { return values.at(k - 1); }
  std::size_t size() const { return values.size(); }
};

inline RadiusSequence radius_sequence(std::size_t count) {
  if (count < 1) throw std::invalid_argument("radius_sequence needs at least one term");
  RadiusSequence seq;
  seq.values.reserve(count);
  seq.values.push_back(1.0);
  while (seq.values.size() < count) {
    const double a = seq.values.back();
    seq.values.push_back(a + 1.0 / a);
  }
  return seq;
}

struct RadiusBoundViolation {
  std::size_t k;
  double value;  // a_{k+1}
  double lower;  // sqrt(2k)
  double upper;  // sqrt(3k)
};

/// Indices k (1 <= k < size) where sqrt(2k) <= a_{k+1} <= sqrt(3k) fails by more than tol.
inline std::vector<RadiusBoundViolation> radius_bound_violations(const RadiusSequence& seq,
                                                                 double tol = 1e-12) {
  std::vector<RadiusBoundViolation> out;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    const double v = seq.at(k + 1);
    const double lo = std::sqrt(2.0 * static_cast<double>(k));
    const double hi = std::sqrt(3.0 * static_cast<double>(k));
    if (v < lo - tol || v > hi + tol) out.push_back({k, v, lo, hi});
  }
  return out;
}

struct Interval {
  double lo;
  double hi;
  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Division of (alpha, beta) into pieces of length delta, "finishing in beta":
/// pieces abut from alpha and the last one is re-anchored to (beta - delta, beta).
inline std::vector<Interval> divide_interval(double alpha, double beta, double delta) {
  if (!(alpha < beta)) throw std::invalid_argument("divide_interval: need alpha < beta");
  if (!(delta > 0.0) || !(delta < beta - alpha))
    throw std::invalid_argument("divide_interval: need 0 < delta < beta - alpha");
  const double ratio = (beta - alpha) / delta;
  auto count = static_cast<std::size_t>(std::ceil(ratio));
  // an exact division must not produce a sliver piece from rounding
  if (std::abs(ratio - std::round(ratio)) <= 1e-12 * ratio)
    count = static_cast<std::size_t>(std::round(ratio));
  std::vector<Interval> out;
  out.reserve(count);
  for (std::size_t j = 0; j + 1 < count; ++j) {
    const double lo = alpha + static_cast<double>(j) * delta;
    out.push_back({lo, lo + delta});
  }
  out.push_back({beta - delta, beta});
  return out;
}

struct Layer {
  std::size_t index = 0;
  std::vector<Cube> cubes;
};

inline bool lexicographic_less(const Cube& x, const Cube& y) {
  if (x.center != y.center) return x.center < y.center;
  return x.side < y.side;
}

/// Cubes of the k-th layer covering P_{k+1} \ P_k: for every axis j and sign,
/// the radial interval +-(a_k, a_{k+1}) times the division of
/// (-a_{k+1}, a_{k+1}) by 1/a_k on the remaining axes.
inline Layer build_layer(std::size_t k, std::size_t d, const RadiusSequence& seq) {
  if (k < 1 || d < 1) throw std::invalid_argument("build_layer: need k >= 1 and d >= 1");
  if (k + 1 > seq.size()) throw std::invalid_argument("build_layer: radius sequence too short");
  const double ak = seq.at(k);
  const double ak1 = seq.at(k + 1);
  const double delta = 1.0 / ak;
  const std::vector<Interval> transverse = divide_interval(-ak1, ak1, delta);
  const double radial_mid = 0.5 * (ak + ak1);

  Layer layer;
  layer.index = k;
  const std::size_t per_axis = transverse.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i + 1 < d; ++i) combos *= per_axis;

  for (std::size_t j = 0; j < d; ++j) {
    for (double sign : {1.0, -1.0}) {
      for (std::size_t idx = 0; idx < combos; ++idx) {
        Point c(d);
        std::size_t rest = idx;
        for (std::size_t i = 0; i < d; ++i) {
          if (i == j) {
            c[i] = sign * radial_mid;
          } else {
            c[i] = transverse[rest % per_axis].mid();
            rest /= per_axis;
          }
        }
        layer.cubes.emplace_back(std::move(c), delta);
      }
    }
  }
  std::sort(layer.cubes.begin(), layer.cubes.end(), lexicographic_less);
  return layer;
}

/// layers[0] holds the central cube P_1 = (-1,1)^d; layers[k] is the k-th layer.
struct Covering {
  std::size_t dimension = 1;
  std::size_t depth = 1;
  RadiusSequence radii;
  std::vector<Layer> layers;

  double admissibility_bound() const { return 2.0 * std::sqrt(static_cast<double>(dimension)); }
  /// Half-width a_{K+1} of the covered cube P_{K+1}.
  double half_width() const { return radii.at(depth + 1); }

  std::vector<Cube> cubes() const {
    std::vector<Cube> out;
    for (const auto& l : layers) out.insert(out.end(), l.cubes.begin(), l.cubes.end());
    return out;
  }
  std::size_t cube_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.cubes.size();
    return n;
  }
};

inline Covering build_covering(std::size_t depth, std::size_t d) {
  if (depth < 1 || d < 1) throw std::invalid_argument("build_covering: need K >= 1 and d >= 1");
  Covering cov;
  cov.dimension = d;
  cov.depth = depth;
  cov.radii = radius_sequence(depth + 1);
  cov.layers.push_back(Layer{0, {Cube(Point(d, 0.0), 2.0)}});
  for (std::size_t k = 1; k <= depth; ++k) cov.layers.push_back(build_layer(k, d, cov.radii));
  return cov;
}

struct CoverageReport {
  std::size_t samples = 0;
  std::size_t uncovered = 0;
  std::size_t max_overlap = 0;
};

/// Sobol points in P_{K+1}, shifted by a fixed irrational offset per axis so
/// that no sample lands on a dyadic cube face; counts points in no cube and the
/// largest number of cubes sharing a point.
inline CoverageReport verify_coverage(const Covering& cov, std::size_t samples) {
  const std::size_t d = cov.dimension;
  const double r = cov.half_width();
  const std::vector<Cube> cubes = cov.cubes();
  boost::random::sobol gen(d);
  const double span = static_cast<double>(gen.max() - gen.min()) + 1.0;

  CoverageReport rep;
  rep.samples = samples;
  Point x(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      const double shift = std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
      const double u = std::fmod(static_cast<double>(gen() - gen.min()) / span + shift, 1.0);
      x[i] = -r + 2.0 * r * u;
    }
    std::size_t hits = 0;
    for (const auto& q : cubes)
      if (q.contains(x)) ++hits;
    if (hits == 0) ++rep.uncovered;
    rep.max_overlap = std::max(rep.max_overlap, hits);
  }
  return rep;
}

struct LayerStats {
  std::size_t k = 0;
  std::size_t count = 0;
  double count_ratio = 0.0;      // #L_k / k^{d-1}
  bool admissible = true;        // every cube in Q_{2 sqrt d}
  bool side_window = true;       // m(c) <= l <= 2 sqrt(d) m(c)
  double min_center_norm = 0.0;
  double max_center_norm = 0.0;
  double center_constant = 0.0;  // smallest M with sqrt(k)/M <= |c| <= M k^{d/2}
};

inline std::vector<LayerStats> layer_statistics(const Covering& cov) {
  const double d = static_cast<double>(cov.dimension);
  const Admissibility ad(cov.admissibility_bound());
  std::vector<LayerStats> out;
  for (std::size_t k = 1; k < cov.layers.size(); ++k) {
    const Layer& layer = cov.layers[k];
    LayerStats st;
    st.k = k;
    st.count = layer.cubes.size();
    st.count_ratio = static_cast<double>(st.count) / std::pow(static_cast<double>(k), d - 1.0);
    st.min_center_norm = INFINITY;
    for (const Cube& q : layer.cubes) {
      const double m = admissibility_m(q.center);
      st.admissible = st.admissible && is_admissible(q, ad);
      st.side_window = st.side_window && m <= q.side && q.side <= ad.value() * m;
      const double c = norm(q.center);
      st.min_center_norm = std::min(st.min_center_norm, c);
      st.max_center_norm = std::max(st.max_center_norm, c);
    }
    const double kk = static_cast<double>(k);
    st.center_constant = std::max(std::sqrt(kk) / st.min_center_norm,
                                  st.max_center_norm / std::pow(kk, d / 2.0));
    out.push_back(st);
  }
  return out;
}

/// The running supremum of #L_k / k^{d-1} does not grow over the last `window` layers.
inline bool layer_ratio_plateaued(const std::vector<LayerStats>& stats, std::size_t window = 3) {
  if (stats.size() <= window) return false;
  double sup_before = 0.0;
  for (std::size_t i = 0; i + window < stats.size(); ++i)
    sup_before = std::max(sup_before, stats[i].count_ratio);
  for (std::size_t i = stats.size() - window; i < stats.size(); ++i)
    if (stats[i].count_ratio > sup_before) return false;
  return true;
}

// ---------------------------------------------------------------------------
// M(B), M(Q), Q' and the chain Q, M(Q), M^2(Q), ...

inline Point scaled_to_norm(const Point& c, double target) {
  const double r = norm(c);
  Point out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] * (target / r);
  return out;
}

/// Ball centred on the segment [0, c_B] with c_B on its boundary and
/// radius m(c_{M(B)})/2.
inline Ball m_ball(const Ball& b) {
  const double cb = norm(b.center);
  if (!(cb > 0.5)) throw std::domain_error("m_ball: need |c_B| > 1/2");
  const double cm = cb >= 1.5 ? 0.5 * (cb + std::sqrt(cb * cb - 2.0)) : cb - 0.5;
  Point c = scaled_to_norm(b.center, cm);
  const double r = 0.5 * admissibility_m(c);
  return Ball(std::move(c), r);
}

namespace detail {
inline void require_chain_cube(const Cube& q) {
  if (!(norm(q.center) > 0.5)) throw std::domain_error("M(Q) needs |c_Q| > 1/2");
  // M(Q) has side exactly m(c_{M(Q)}); allow rounding in the recomputed centre
  if (q.side < admissibility_m(q.center) * (1.0 - 1e-12))
    throw std::domain_error("M(Q) needs m(c_Q) <= l_Q");
}
}  // namespace detail

/// Cube circumscribed around M(B), B the ball inscribed in Q.
inline Cube m_cube(const Cube& q) {
  detail::require_chain_cube(q);
  const Ball mb = m_ball(Ball(q.center, 0.5 * q.side));
  return Cube(mb.center, 2.0 * mb.radius);
}

/// Cube Q' circumscribed around B', the largest ball inside M(B) and B.
inline Cube lens_cube(const Cube& q) {
  detail::require_chain_cube(q);
  const Ball b(q.center, 0.5 * q.side);
  const Ball mb = m_ball(b);
  if (2.0 * mb.radius <= b.radius) return Cube(mb.center, 2.0 * mb.radius);
  const double cb = norm(b.center);
  Point c = scaled_to_norm(b.center, cb - 0.5 * b.radius);
  return Cube(std::move(c), b.radius);
}

struct MChain {
  std::vector<Cube> cubes;  // Q, M(Q), ..., M^{K_Q}(Q)
  std::size_t steps() const { return cubes.size() - 1; }
};

inline MChain k_chain(const Cube& q, std::size_t guard = 1'000'000) {
  MChain chain;
  chain.cubes.push_back(q);
  while (norm(chain.cubes.back().center) > 0.5) {
    if (chain.steps() >= guard) throw std::logic_error("k_chain: step guard exceeded");
    chain.cubes.push_back(m_cube(chain.cubes.back()));
  }
  return chain;
}

struct MStepResidual {
  double boundary;  // |c_M| + r_M - |c_B|
  double radius;    // r_M - m(c_M)/2
};

inline MStepResidual m_step_residual(const Ball& b) {
  const Ball mb = m_ball(b);
  return {norm(mb.center) + mb.radius - norm(b.center),
          mb.radius - 0.5 * admissibility_m(mb.center)};
}

}  // namespace gjn
