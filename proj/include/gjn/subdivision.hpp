#pragma once

// Splitting an atom on a cube admissible for a1 into atoms on cubes admissible
// for a smaller a2, through 2^d overlapping corner cubes of side 2/3.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "gjn/hardy.hpp"

namespace gjn {

/// min{k >= 0 : (2/3)^k a1 (1 + sqrt(d) a1 / 2) <= a2}.
inline std::size_t subdivision_depth_bound(double a1, double a2, std::size_t d) {
  if (!(a2 > 0.0) || !(a1 > a2)) throw std::invalid_argument("subdivision: need 0 < a2 < a1");
  const double start = a1 * (1.0 + std::sqrt(static_cast<double>(d)) * a1 / 2.0);
  std::size_t k = 0;
  for (double v = start; v > a2; v *= 2.0 / 3.0) ++k;
  return k;
}

/// The 2^d corner cubes of side 2/3 side(Q), indexed by corner bit mask, and
/// their common intersection, the centred cube of side side(Q)/3.
struct CornerCubes {
  std::vector<Cube> corners;
  Cube core;
};

inline CornerCubes corner_cubes(const Cube& q) {
  const std::size_t d = q.dim();
  CornerCubes cc;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Point c(d);
    for (std::size_t i = 0; i < d; ++i) c[i] = q.center[i] + ((mask >> i & 1) ? 1.0 : -1.0) * q.side / 6.0;
    cc.corners.emplace_back(std::move(c), 2.0 * q.side / 3.0);
  }
  cc.core = Cube(q.center, q.side / 3.0);
  return cc;
}

struct SubdivisionResult {
  std::vector<Atom> atoms;
  std::size_t depth_bound = 0;  // the a-dependent bound on the number of rounds
  std::size_t depth_used = 0;
  std::size_t splits = 0;
  double doubling_constant = 0.0;  // max gamma(P_i) / gamma(P_0) over splits
  double norm_ratio = 0.0;         // max ||v_i||_q / ||v||_{L^q(Q)} over output atoms
  double max_lambda_sum = 0.0;     // |sum_i lambda_i| before re-centring, per split
};

/// Atom pieces v_i = v psi_i - lambda_i chi_{P_0}, psi_i = chi_{P_i} / sum_k chi_{P_k}
/// (0 off the union), repeated on every piece whose cube is not admissible for
/// a2. The lambda_i are shifted to sum to zero, which makes the remainder
/// v - sum_i v_i vanish identically instead of only up to the mean of v.
inline SubdivisionResult subdivide_atom(const Atom& atom, double a1, double a2, const QuadratureSpec& spec) {
  const std::size_t d = atom.cube.dim();
  SubdivisionResult res;
  res.depth_bound = subdivision_depth_bound(a1, a2, d);
  if (!is_admissible(atom.cube, Admissibility(a1)))
    throw std::invalid_argument("subdivide_atom: atom cube is not admissible for a1");
  const Admissibility target(a2);
  const double base_norm = lq_norm(atom.b, atom.cube, atom.q_exponent, spec);

  struct Work {
    Cube cube;
    ScalarField v;
    std::size_t depth;
  };
  std::vector<Work> stack{{atom.cube, atom.b, 0}};
  const std::size_t guard = res.depth_bound + 8;
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    res.depth_used = std::max(res.depth_used, w.depth);
    if (is_admissible(w.cube, target)) {
      res.atoms.push_back(Atom{w.cube, w.v, atom.q_exponent, std::nullopt});
      continue;
    }
    if (w.depth >= guard) throw std::logic_error("subdivide_atom: subdivision does not terminate");
    ++res.splits;
    const CornerCubes cc = corner_cubes(w.cube);
    const double g0 = gaussian_measure(cc.core);
    AxisBreaks faces(d);
    for (std::size_t i = 0; i < d; ++i)
      faces[i] = {w.cube.lower(i), w.cube.lower(i) + w.cube.side / 3.0, w.cube.lower(i) + 2.0 * w.cube.side / 3.0,
                  w.cube.upper(i)};
    const AxisBreaks breaks = merge_breaks(w.v.breaks, faces);
    auto count_at = [corners = cc.corners](std::span<const double> x) {
      int n = 0;
      for (const Cube& p : corners) n += p.contains(x) ? 1 : 0;
      return n;
    };
    const std::size_t k = cc.corners.size();
    // count_at is constant on the 3^d cells cut by the faces, so each lambda is a
    // weighted sum of plain cell integrals of v
    std::size_t ncell = 1;
    for (std::size_t i = 0; i < d; ++i) ncell *= 3;
    const auto cell_integrals = parallel_map<double>(ncell, [&](std::size_t c) {
      Box box{Point(d), Point(d)};
      for (std::size_t i = 0, r = c; i < d; ++i, r /= 3) {
        box.lo[i] = faces[i][r % 3];
        box.hi[i] = faces[i][r % 3 + 1];
      }
      ScalarField v = w.v;
      v.breaks = breaks;
      return gauss_average(v, box, spec) * gaussian_measure(box);
    });
    std::vector<ScalarField> shares(k);
    std::vector<double> lambda(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      ScalarField s = w.v;
      s.breaks = breaks;
      s.eval = [v = w.v.eval, pi = cc.corners[i], count_at](std::span<const double> x) {
        if (!pi.contains(x)) return 0.0;
        return v(x) / count_at(x);
      };
      shares[i] = s;
      for (std::size_t c = 0; c < ncell; ++c) {
        double weight = 1.0;
        for (std::size_t j = 0, r = c; j < d; ++j, r /= 3) {
          const std::size_t t = r % 3;
          const bool upper = (i >> j) & 1;
          if ((upper && t == 0) || (!upper && t == 2)) weight = 0.0;
          if (t == 1) weight *= 0.5;
        }
        lambda[i] += weight * cell_integrals[c];
      }
      lambda[i] /= g0;
      res.doubling_constant = std::max(res.doubling_constant, gaussian_measure(cc.corners[i]) / g0);
    }
    double lsum = 0.0;
    for (double l : lambda) lsum += l;
    res.max_lambda_sum = std::max(res.max_lambda_sum, std::abs(lsum));
    for (double& l : lambda) l -= lsum / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      ScalarField vi = shares[i];
      vi.id = w.v.id + "/" + std::to_string(i);
      vi.eval = [s = shares[i].eval, core = cc.core, l = lambda[i]](std::span<const double> x) {
        return s(x) - (core.contains(x) ? l : 0.0);
      };
      stack.push_back({cc.corners[i], vi, w.depth + 1});
    }
  }
  // deterministic order: by cube
  std::sort(res.atoms.begin(), res.atoms.end(),
            [](const Atom& x, const Atom& y) { return lexicographic_less(x.cube, y.cube); });
  if (base_norm > 0.0) {
    const auto ratios = parallel_map<double>(res.atoms.size(), [&](std::size_t i) {
      return lq_norm(res.atoms[i].b, res.atoms[i].cube, atom.q_exponent, spec) / base_norm;
    });
    for (double r : ratios) res.norm_ratio = std::max(res.norm_ratio, r);
  }
  return res;
}

/// max over points of |sum_i b_i(x) - b(x)|.
inline double reconstruction_residual(const Atom& original, const std::vector<Atom>& pieces,
                                      const std::vector<Point>& points) {
  double worst = 0.0;
  for (const Point& x : points) {
    double s = 0.0;
    for (const Atom& a : pieces) s += a.b(x);
    worst = std::max(worst, std::abs(s - original.b(x)));
  }
  return worst;
}

/// Uniform points in a cube.
inline std::vector<Point> uniform_points(const Cube& q, std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(count, Point(q.dim()));
  for (Point& x : pts)
    for (std::size_t i = 0; i < q.dim(); ++i) x[i] = q.lower(i) + q.side * u(rng);
  return pts;
}

}  // namespace gjn
