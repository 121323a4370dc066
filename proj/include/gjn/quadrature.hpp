#pragma once

// Tensor-product Gauss-Legendre panels against the Gaussian density, with
// dyadic refinement, geometric grading toward declared breakpoints and
// acceptance by comparing successive refinement levels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gjn/geometry.hpp"

namespace gjn {

struct QuadratureSpec {
  int nodes_per_axis = 6;
  int refinement_levels = 8;
  double abs_tol = 1e-10;

  void validate() const {
    if (nodes_per_axis < 2) throw std::invalid_argument("quadrature: nodes_per_axis must be >= 2");
    if (refinement_levels < 1) throw std::invalid_argument("quadrature: refinement_levels must be >= 1");
    if (!(abs_tol > 0.0)) throw std::invalid_argument("quadrature: abs_tol must be > 0");
  }

  /// One more refinement level and a tighter acceptance threshold.
  QuadratureSpec refined() const { return {nodes_per_axis, refinement_levels + 1, abs_tol / 4.0}; }
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaussLegendreRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// n-point rule on [-1, 1] by Newton iteration on P_n.
inline GaussLegendreRule gauss_legendre(int n) {
  GaussLegendreRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

/// One-dimensional nodes on (lo, hi). Weights carry pi^{-1/2} e^{-(t-c)(t+c)}
/// with c the interval midpoint; the missing factor e^{-c^2} is kept in
/// log_scale.
struct AxisNodes {
  std::vector<double> t;
  std::vector<double> w;
  double log_scale = 0.0;
};

namespace detail {

inline constexpr double kGradingRatio = 0.2;

inline void push_panel(AxisNodes& out, const GaussLegendreRule& gl, double u, double v, double c) {
  const double half = 0.5 * (v - u);
  const double mid = 0.5 * (u + v);
  constexpr double inv_sqrt_pi = 0.56418958354775628694807945;
  for (std::size_t i = 0; i < gl.x.size(); ++i) {
    const double t = mid + half * gl.x[i];
    out.t.push_back(t);
    out.w.push_back(half * gl.w[i] * inv_sqrt_pi * std::exp(-(t - c) * (t + c)));
  }
}

// Panel [u, v] split geometrically toward u (toward_lo) or v.
inline void push_graded(AxisNodes& out, const GaussLegendreRule& gl, double u, double v, double c,
                        bool toward_lo, int layers) {
  const double h = v - u;
  std::vector<double> cuts;
  for (int j = layers; j >= 1; --j) cuts.push_back(std::pow(kGradingRatio, j) * h);
  if (toward_lo) {
    double prev = u;
    for (double s : cuts) {
      push_panel(out, gl, prev, u + s, c);
      prev = u + s;
    }
    push_panel(out, gl, prev, v, c);
  } else {
    double prev = v;
    std::vector<std::pair<double, double>> panels;
    for (double s : cuts) {
      panels.emplace_back(v - s, prev);
      prev = v - s;
    }
    panels.emplace_back(u, prev);
    for (auto it = panels.rbegin(); it != panels.rend(); ++it) push_panel(out, gl, it->first, it->second, c);
  }
}

}  // namespace detail

/// Nodes at a refinement level: (lo, hi) is cut at interior breakpoints, each
/// piece bisected `level` times, and the sub-panels touching a breakpoint
/// (including one lying on lo or hi) are graded geometrically toward it with
/// 3 * level + 2 layers of a doubled Gauss-Legendre rule. With graded = false
/// every sub-panel gets the plain rule.
inline AxisNodes axis_nodes(double lo, double hi, std::span<const double> breaks, int n, int level,
                            bool graded = true) {
  if (!(hi > lo)) throw std::invalid_argument("axis_nodes: empty interval");
  const GaussLegendreRule gl = gauss_legendre(n);
  const GaussLegendreRule gl_graded = gauss_legendre(2 * n);
  std::vector<double> edges{lo};
  std::vector<bool> is_break{false};
  std::vector<double> inner;
  for (double b : breaks) {
    if (b > lo && b < hi) inner.push_back(b);
    if (b == lo) is_break.front() = graded;
  }
  std::sort(inner.begin(), inner.end());
  inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
  for (double b : inner) {
    edges.push_back(b);
    is_break.push_back(graded);
  }
  edges.push_back(hi);
  is_break.push_back(graded && std::find(breaks.begin(), breaks.end(), hi) != breaks.end());

  AxisNodes out;
  const double c = 0.5 * (lo + hi);
  out.log_scale = -c * c;
  const int layers = 3 * level + 2;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p];
    const double b = edges[p + 1];
    std::size_t pieces = std::size_t{1} << level;
    if (pieces == 1 && is_break[p] && is_break[p + 1]) pieces = 2;
    const double h = (b - a) / static_cast<double>(pieces);
    for (std::size_t s = 0; s < pieces; ++s) {
      const double u = a + static_cast<double>(s) * h;
      const double v = s + 1 == pieces ? b : u + h;
      if (s == 0 && is_break[p])
        detail::push_graded(out, gl_graded, u, v, c, true, layers);
      else if (s + 1 == pieces && is_break[p + 1])
        detail::push_graded(out, gl_graded, u, v, c, false, layers);
      else
        detail::push_panel(out, gl, u, v, c);
    }
  }
  return out;
}

using AxisBreaks = std::vector<std::vector<double>>;

inline std::span<const double> breaks_for_axis(const AxisBreaks& b, std::size_t axis) {
  if (axis < b.size()) return b[axis];
  return {};
}

/// Tensor product of per-axis nodes on a box.
struct NodeSet {
  std::vector<AxisNodes> axes;

  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& a : axes) s *= a.t.size();
    return s;
  }
  double log_scale() const {
    double s = 0.0;
    for (const auto& a : axes) s += a.log_scale;
    return s;
  }

  /// Visits nodes in row-major order (last axis fastest): fn(point, relative weight).
  template <class Fn>
  void for_each(Fn&& fn) const {
    const std::size_t d = axes.size();
    std::vector<std::size_t> idx(d, 0);
    Point x(d);
    std::vector<double> partial(d + 1, 1.0);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = axes[i].t[0];
      partial[i + 1] = partial[i] * axes[i].w[0];
    }
    const std::size_t total = size();
    for (std::size_t count = 0; count < total; ++count) {
      fn(std::span<const double>(x), partial[d]);
      if (count + 1 == total) break;
      // odometer increment from the last axis
      std::size_t i = d;
      while (i > 0) {
        --i;
        if (++idx[i] < axes[i].t.size()) break;
        idx[i] = 0;
      }
      for (std::size_t j = i; j < d; ++j) {
        x[j] = axes[j].t[idx[j]];
        partial[j + 1] = partial[j] * axes[j].w[idx[j]];
      }
    }
  }
};

inline NodeSet node_set(const Box& box, const AxisBreaks& breaks, int n, int level, bool graded = true) {
  NodeSet ns;
  for (std::size_t i = 0; i < box.dim(); ++i)
    ns.axes.push_back(axis_nodes(box.lo[i], box.hi[i], breaks_for_axis(breaks, i), n, level, graded));
  return ns;
}

/// Number of nodes axis_nodes would produce, without building them.
inline std::size_t axis_node_count(double lo, double hi, std::span<const double> breaks, int n, int level,
                                   bool graded = true) {
  std::vector<double> inner;
  bool lo_break = false, hi_break = false;
  for (double b : breaks) {
    if (b > lo && b < hi) inner.push_back(b);
    lo_break = lo_break || b == lo;
    hi_break = hi_break || b == hi;
  }
  lo_break = lo_break && graded;
  hi_break = hi_break && graded;
  std::sort(inner.begin(), inner.end());
  inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
  const std::size_t per_graded = static_cast<std::size_t>(3 * level + 3) * static_cast<std::size_t>(2 * n);
  std::size_t total = 0;
  for (std::size_t p = 0; p <= inner.size(); ++p) {
    const bool left = (p > 0 && graded) || lo_break, right = (p < inner.size() && graded) || hi_break;
    std::size_t pieces = std::size_t{1} << level;
    if (pieces == 1 && left && right) pieces = 2;
    const std::size_t g = (left ? 1 : 0) + (right ? 1 : 0);
    total += (pieces - g) * static_cast<std::size_t>(n) + g * per_graded;
  }
  return total;
}

/// Largest level whose tensor node count stays below max_nodes.
inline int level_cap(const Box& box, const AxisBreaks& breaks, int n, int wanted,
                     std::size_t max_nodes = std::size_t{1} << 22, bool graded = true) {
  for (int level = wanted; level > 0; --level) {
    double total = 1.0;
    for (std::size_t i = 0; i < box.dim(); ++i)
      total *=
          static_cast<double>(axis_node_count(box.lo[i], box.hi[i], breaks_for_axis(breaks, i), n, level, graded));
    if (total <= static_cast<double>(max_nodes)) return level;
  }
  return 0;
}

/// Function values at every node together with their relative weights.
struct Sample {
  std::vector<double> values;
  std::vector<double> weights;
  double log_scale = 0.0;

  /// Sum of relative weights; gamma(box) = relative_mass() * exp(log_scale).
  double relative_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  double scale() const { return std::exp(log_scale); }
};

template <class F>
Sample sample(const Box& box, const AxisBreaks& breaks, F&& f, int n, int level, bool graded = true) {
  const NodeSet ns = node_set(box, breaks, n, level, graded);
  Sample s;
  s.log_scale = ns.log_scale();
  s.values.reserve(ns.size());
  s.weights.reserve(ns.size());
  ns.for_each([&](std::span<const double> x, double w) {
    s.values.push_back(f(x));
    s.weights.push_back(w);
  });
  return s;
}

/// Evaluates at_level(0), at_level(1), ... until every component of two
/// successive results agrees within abs_tol. Returns the finer result.
template <class Fn>
auto converge(Fn&& at_level, const QuadratureSpec& spec, const std::string& what) {
  spec.validate();
  auto prev = at_level(0);
  double gap = 0.0;
  for (int level = 1; level <= spec.refinement_levels; ++level) {
    auto cur = at_level(level);
    gap = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) gap = std::max(gap, std::abs(cur[i] - prev[i]));
    if (gap <= spec.abs_tol) return cur;
    prev = std::move(cur);
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", gap);
  throw QuadratureError(what + ": refinement did not converge to abs_tol (last gap " + buf + ")");
}

/// int_box h dgamma with breakpoints honoured.
template <class F>
double integrate_gaussian(const Box& box, const AxisBreaks& breaks, F&& h, const QuadratureSpec& spec) {
  const auto r = converge(
      [&](int level) {
        const NodeSet ns = node_set(box, breaks, spec.nodes_per_axis, level);
        double acc = 0.0;
        ns.for_each([&](std::span<const double> x, double w) { acc += w * h(x); });
        return std::vector<double>{acc * std::exp(ns.log_scale())};
      },
      spec, "integrate_gaussian");
  return r[0];
}

namespace detail {

// Zero crossings of phi on (lo, hi) bracketed between consecutive nodes and
// refined by bisection. Nodes where phi is exactly 0 count as roots unless
// both neighbours are 0 too.
template <class Phi>
std::vector<double> bracketed_roots(std::span<const double> nodes, double lo, double hi, Phi&& phi) {
  std::vector<double> roots;
  double ta = lo, fa = phi(lo), f_before = 1.0;
  auto visit = [&](double tb) {
    const double fb = phi(tb);
    if (fa == 0.0 && ta > lo && (f_before != 0.0 || fb != 0.0)) roots.push_back(ta);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      double a = ta, b = tb, va = fa;
      for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        const double vm = phi(mid);
        if ((vm < 0.0) == (va < 0.0) && vm != 0.0) {
          a = mid;
          va = vm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    f_before = fa;
    ta = tb;
    fa = fb;
  };
  for (double t : nodes) visit(t);
  visit(hi);
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

// Zero crossings of phi on (lo, hi), with the critical points of phi between
// nodes added first so that two roots between the same pair of nodes are
// still separated.
template <class Phi>
std::vector<double> all_roots(std::span<const double> nodes, double lo, double hi, Phi&& phi) {
  const double step = 1e-7 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  auto slope = [&](double t) { return phi(t + step) - phi(t - step); };
  std::vector<double> crit = bracketed_roots(nodes, lo, hi, slope);
  if (crit.empty()) return bracketed_roots(nodes, lo, hi, phi);
  crit.insert(crit.end(), nodes.begin(), nodes.end());
  std::sort(crit.begin(), crit.end());
  return bracketed_roots(std::span<const double>(crit), lo, hi, phi);
}

// Points of (lo, hi) where count(t) changes between neighbouring nodes,
// located by bisection.
template <class Count>
std::vector<double> count_changes(std::span<const double> nodes, double lo, double hi, Count&& count) {
  std::vector<double> out;
  std::vector<double> ts{lo};
  ts.insert(ts.end(), nodes.begin(), nodes.end());
  ts.push_back(hi);
  // the end points themselves sit on the box faces; probe just inside
  const double inset = 1e-12 * (hi - lo);
  auto at = [&](double t) { return count(std::clamp(t, lo + inset, hi - inset)); };
  std::size_t prev = at(ts.front());
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const std::size_t cur = at(ts[k]);
    if (cur != prev) {
      double a = ts[k - 1], b = ts[k];
      for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
        const double mid = 0.5 * (a + b);
        if (at(mid) == prev)
          a = mid;
        else
          b = mid;
      }
      const double t = 0.5 * (a + b);
      if (t > lo + inset && t < hi - inset) out.push_back(t);
    }
    prev = cur;
  }
  return out;
}

}  // namespace detail

/// Level function whose sign changes mark kinks or jumps of an integrand.
using LevelFn = std::function<double(std::span<const double>)>;

/// (1/gamma(box)) int_box h dgamma for an integrand that may have kinks or
/// jumps on the zero sets of the level functions. Iterated quadrature with the
/// last axis innermost: along every inner line the sign changes of each level
/// function between neighbouring nodes are located and the line is
/// re-integrated with them as extra breakpoints. Crossings on the line through
/// the box centre along each outer axis become breakpoints of that axis, which
/// makes kinks on hyperplanes exact in every direction. So do the points of
/// that line where the number of inner crossings changes (the zero set turns
/// tangent to the inner axis or leaves through an inner face): the inner
/// integral has a root singularity or a kink there. Outer axes are also graded
/// toward both faces. In d = 2 this is exact; in d = 3 only the centre lines
/// of the outer plane are searched. Acceptance
/// is on the average, so tiny far-out boxes are held to the same tolerance.
template <class F>
double average_gaussian_split(const Box& box, const AxisBreaks& breaks, F&& h, std::span<const LevelFn> levels,
                              const QuadratureSpec& spec) {
  const std::size_t d = box.dim();
  const std::size_t inner = d - 1;
  const double lo = box.lo[inner], hi = box.hi[inner];
  const std::span<const double> inner_breaks = breaks_for_axis(breaks, inner);
  Point x(d);
  // roots of every level function along axis `axis` through the current x
  auto crossings = [&](std::span<const double> nodes, std::size_t axis, double a, double b) {
    std::vector<double> all;
    for (const LevelFn& g : levels) {
      const auto r = detail::all_roots(nodes, a, b, [&](double t) {
        x[axis] = t;
        return g(std::span<const double>(x));
      });
      all.insert(all.end(), r.begin(), r.end());
    }
    return all;
  };
  const auto r = converge(
      [&](int level) {
        NodeSet outer;
        const AxisNodes base = axis_nodes(lo, hi, inner_breaks, spec.nodes_per_axis, level);
        for (std::size_t i = 0; i < inner; ++i) {
          const std::span<const double> bi = breaks_for_axis(breaks, i);
          const AxisNodes probe = axis_nodes(box.lo[i], box.hi[i], bi, spec.nodes_per_axis, level);
          for (std::size_t j = 0; j < d; ++j) x[j] = 0.5 * (box.lo[j] + box.hi[j]);
          auto roots = crossings(probe.t, i, box.lo[i], box.hi[i]);
          const auto folds = detail::count_changes(probe.t, box.lo[i], box.hi[i], [&](double t) {
            for (std::size_t j = 0; j < d; ++j) x[j] = 0.5 * (box.lo[j] + box.hi[j]);
            x[i] = t;
            return crossings(base.t, inner, lo, hi).size();
          });
          roots.insert(roots.end(), folds.begin(), folds.end());
          // a tangency on a face is invisible to the count, so both faces are graded
          std::vector<double> merged(bi.begin(), bi.end());
          merged.insert(merged.end(), roots.begin(), roots.end());
          merged.push_back(box.lo[i]);
          merged.push_back(box.hi[i]);
          outer.axes.push_back(axis_nodes(box.lo[i], box.hi[i], merged, spec.nodes_per_axis, level));
        }
        double acc = 0.0, mass = 0.0;
        auto line = [&](std::span<const double> xo, double wo) {
          for (std::size_t i = 0; i < inner; ++i) x[i] = xo[i];
          const std::vector<double> roots = crossings(base.t, inner, lo, hi);
          AxisNodes split;
          const AxisNodes* use = &base;
          if (!roots.empty()) {
            std::vector<double> merged(inner_breaks.begin(), inner_breaks.end());
            merged.insert(merged.end(), roots.begin(), roots.end());
            split = axis_nodes(lo, hi, merged, spec.nodes_per_axis, level);
            use = &split;
          }
          double s = 0.0, m = 0.0;
          for (std::size_t j = 0; j < use->t.size(); ++j) {
            x[inner] = use->t[j];
            s += use->w[j] * h(std::span<const double>(x));
            m += use->w[j];
          }
          acc += wo * s;
          mass += wo * m;
        };
        if (inner == 0)
          line(std::span<const double>(), 1.0);
        else
          outer.for_each(line);
        if (!(mass > 0.0)) throw QuadratureError("average over a box with no Gaussian mass at working precision");
        return std::vector<double>{acc / mass};
      },
      spec, "average_gaussian_split");
  return r[0];
}

}  // namespace gjn
