#pragma once

// Sums over disjoint admissible families, their maximisation over candidate
// pools, BMO estimates, tail-constant fits and the p -> infinity scan.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gjn/antichain.hpp"
#include "gjn/covering.hpp"
#include "gjn/fields.hpp"
#include "gjn/geometry.hpp"
#include "gjn/parallel.hpp"

namespace gjn {

/// Pairwise disjoint cubes, all admissible for a.
class CubeFamily {
 public:
  CubeFamily(std::vector<Cube> cubes, Admissibility a) : cubes_(std::move(cubes)), a_(a) {
    for (std::size_t i = 0; i < cubes_.size(); ++i) {
      if (!is_admissible(cubes_[i], a_)) throw std::invalid_argument("CubeFamily: cube not admissible");
      if (cubes_[i].dim() != cubes_.front().dim()) throw std::invalid_argument("CubeFamily: mixed dimensions");
      for (std::size_t j = 0; j < i; ++j)
        if (cubes_[i].intersects(cubes_[j])) throw std::invalid_argument("CubeFamily: cubes overlap");
    }
  }
  explicit CubeFamily(Admissibility a) : a_(a) {}

  const std::vector<Cube>& cubes() const { return cubes_; }
  Admissibility admissibility() const { return a_; }
  std::size_t size() const { return cubes_.size(); }
  bool empty() const { return cubes_.empty(); }

 private:
  std::vector<Cube> cubes_;
  Admissibility a_;
};

/// Candidate cubes for the family search. A dyadic forest stores parent links
/// (children tile their parent, roots pairwise disjoint); a general pool has
/// no structure and is searched greedily. Cubes that are not admissible for
/// the pool's parameter stay in a forest as structural nodes and are never
/// selected.
struct CandidateSet {
  std::string region;
  std::vector<Cube> cubes;
  std::vector<int> parent;  // forests only; -1 marks a root
  std::vector<bool> selectable;
  double a = 1.0;
  bool forest = false;

  std::size_t size() const { return cubes.size(); }

  static CandidateSet dyadic_forest(const std::vector<Cube>& roots, std::size_t depth, Admissibility adm,
                                    std::string region = "") {
    if (roots.empty()) throw std::invalid_argument("dyadic_forest: no roots");
    for (std::size_t i = 0; i < roots.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (roots[i].intersects(roots[j])) throw std::invalid_argument("dyadic_forest: roots overlap");
    CandidateSet cs;
    cs.region = std::move(region);
    cs.a = adm.value();
    cs.forest = true;
    std::vector<std::size_t> frontier;
    for (const Cube& r : roots) {
      frontier.push_back(cs.cubes.size());
      cs.cubes.push_back(r);
      cs.parent.push_back(-1);
    }
    const std::size_t d = roots.front().dim();
    for (std::size_t level = 0; level < depth; ++level) {
      std::vector<std::size_t> next;
      for (std::size_t v : frontier) {
        const Cube q = cs.cubes[v];
        const double h = 0.5 * q.side;
        for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
          Point c(d);
          for (std::size_t i = 0; i < d; ++i) c[i] = q.center[i] + ((mask >> i & 1) ? 0.25 : -0.25) * q.side;
          next.push_back(cs.cubes.size());
          cs.cubes.emplace_back(std::move(c), h);
          cs.parent.push_back(static_cast<int>(v));
        }
      }
      frontier = std::move(next);
    }
    for (const Cube& q : cs.cubes) cs.selectable.push_back(is_admissible(q, adm));
    return cs;
  }

  static CandidateSet pool(std::vector<Cube> cubes, Admissibility adm, std::string region = "") {
    if (cubes.empty()) throw std::invalid_argument("candidate pool: no cubes");
    CandidateSet cs;
    cs.region = std::move(region);
    cs.a = adm.value();
    cs.cubes = std::move(cubes);
    for (const Cube& q : cs.cubes) cs.selectable.push_back(is_admissible(q, adm));
    return cs;
  }

  /// Same cubes, selectability recomputed for another parameter.
  CandidateSet with_parameter(Admissibility adm) const {
    CandidateSet cs = *this;
    cs.a = adm.value();
    for (std::size_t i = 0; i < cubes.size(); ++i) cs.selectable[i] = is_admissible(cubes[i], adm);
    return cs;
  }
};

/// Greedy pairwise disjoint subfamily, keeping cubes in the given order.
inline std::vector<Cube> disjoint_subfamily(const std::vector<Cube>& cubes) {
  std::vector<Cube> kept;
  for (const Cube& q : cubes) {
    bool free = true;
    for (const Cube& k : kept)
      if (q.intersects(k)) {
        free = false;
        break;
      }
    if (free) kept.push_back(q);
  }
  return kept;
}

/// Dyadic forest over a disjoint subfamily of a covering, with a = 2 sqrt(d).
inline CandidateSet covering_candidates(const Covering& cov, std::size_t depth) {
  return CandidateSet::dyadic_forest(disjoint_subfamily(cov.cubes()), depth,
                                     Admissibility(cov.admissibility_bound()),
                                     "covering d=" + std::to_string(cov.dimension) + " K=" +
                                         std::to_string(cov.depth) + " depth=" + std::to_string(depth));
}

/// q-oscillation of f on every selectable candidate (0 on structural nodes).
inline std::vector<double> oscillation_table(const ScalarField& f, const CandidateSet& cs, double q,
                                             const QuadratureSpec& spec) {
  return parallel_map<double>(cs.size(), [&](std::size_t i) {
    return cs.selectable[i] ? oscillation(f, cs.cubes[i], q, spec) : 0.0;
  });
}

inline void require_exponents(double p, double q) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("exponent p must be > 1 and finite");
  if (!(q >= 1.0)) throw std::invalid_argument("exponent q must be >= 1");
}

/// (sum_i gamma(Q_i) osc_q(f, Q_i)^p)^{1/p}.
inline double jnp_sum(const ScalarField& f, const CubeFamily& fam, double p, double q, const QuadratureSpec& spec) {
  require_exponents(p, q);
  const auto terms = parallel_map<double>(fam.size(), [&](std::size_t i) {
    const Cube& c = fam.cubes()[i];
    return gaussian_measure(c) * std::pow(oscillation(f, c, q, spec), p);
  });
  double s = 0.0;
  for (double t : terms) s += t;
  return std::pow(s, 1.0 / p);
}

enum class SearchMethod { exhaustive, antichain_dp, greedy };

inline std::string to_string(SearchMethod m) {
  switch (m) {
    case SearchMethod::exhaustive: return "exhaustive";
    case SearchMethod::antichain_dp: return "antichain_dp";
    case SearchMethod::greedy: return "greedy";
  }
  return "?";
}

struct JnpEstimate {
  double value = 0.0;
  CubeFamily family{Admissibility(1.0)};
  std::vector<std::size_t> indices;  // into the candidate set
  std::vector<double> oscillations;  // per family cube
  double p = 2.0, q = 1.0;
  SearchMethod method = SearchMethod::antichain_dp;
};

inline constexpr std::size_t kExhaustivePoolLimit = 16;

namespace detail {

inline std::vector<std::size_t> best_independent_set(const std::vector<Cube>& cubes, const std::vector<double>& w,
                                                     const std::vector<std::size_t>& ids) {
  std::vector<std::size_t> best, cur;
  double best_value = 0.0;
  std::function<void(std::size_t, double)> rec = [&](std::size_t k, double acc) {
    if (k == ids.size()) {
      if (acc > best_value) {
        best_value = acc;
        best = cur;
      }
      return;
    }
    rec(k + 1, acc);
    const std::size_t v = ids[k];
    for (std::size_t u : cur)
      if (cubes[u].intersects(cubes[v])) return;
    cur.push_back(v);
    rec(k + 1, acc + w[v]);
    cur.pop_back();
  };
  rec(0, 0.0);
  return best;
}

// Greedy by density w/gamma = osc^p, ties broken by lexicographic centre,
// followed by swaps that insert one cube and evict everything it meets.
inline std::vector<std::size_t> greedy_with_swaps(const std::vector<Cube>& cubes, const std::vector<double>& w,
                                                  const std::vector<double>& density,
                                                  const std::vector<std::size_t>& ids) {
  std::vector<std::size_t> order = ids;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (density[x] != density[y]) return density[x] > density[y];
    return lexicographic_less(cubes[x], cubes[y]);
  });
  std::vector<std::size_t> chosen;
  std::vector<bool> in(cubes.size(), false);
  for (std::size_t v : order) {
    if (!(w[v] > 0.0)) continue;
    bool free = true;
    for (std::size_t u : chosen)
      if (cubes[u].intersects(cubes[v])) {
        free = false;
        break;
      }
    if (free) {
      chosen.push_back(v);
      in[v] = true;
    }
  }
  for (std::size_t round = 0; round < 100 * order.size(); ++round) {
    bool improved = false;
    for (std::size_t v : order) {
      if (in[v]) continue;
      double evicted = 0.0;
      for (std::size_t u : chosen)
        if (cubes[u].intersects(cubes[v])) evicted += w[u];
      if (w[v] > evicted * (1.0 + 1e-12) + 1e-300) {
        std::vector<std::size_t> keep;
        for (std::size_t u : chosen) {
          if (cubes[u].intersects(cubes[v]))
            in[u] = false;
          else
            keep.push_back(u);
        }
        keep.push_back(v);
        in[v] = true;
        chosen = std::move(keep);
        improved = true;
      }
    }
    if (!improved) break;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace detail

/// Maximises the family sum over a candidate set from precomputed
/// oscillations: exact antichain DP on forests, exhaustive search on small
/// pools, greedy with swaps otherwise. The result is a lower bound for K_p.
inline JnpEstimate maximize_jnp(const CandidateSet& cs, const std::vector<double>& osc, double p, double q) {
  require_exponents(p, q);
  if (cs.size() == 0) throw std::invalid_argument("maximize_jnp: empty candidate set");
  if (osc.size() != cs.size()) throw std::invalid_argument("maximize_jnp: oscillation table size mismatch");
  std::vector<double> w(cs.size(), 0.0), density(cs.size(), 0.0);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (!cs.selectable[i]) continue;
    density[i] = std::pow(osc[i], p);
    w[i] = gaussian_measure(cs.cubes[i]) * density[i];
  }
  JnpEstimate est;
  est.p = p;
  est.q = q;
  if (cs.forest) {
    est.method = SearchMethod::antichain_dp;
    est.indices = max_weight_antichain(cs.parent, w, cs.selectable).nodes;
  } else {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < cs.size(); ++i)
      if (cs.selectable[i]) ids.push_back(i);
    if (ids.size() <= kExhaustivePoolLimit) {
      est.method = SearchMethod::exhaustive;
      est.indices = detail::best_independent_set(cs.cubes, w, ids);
    } else {
      est.method = SearchMethod::greedy;
      est.indices = detail::greedy_with_swaps(cs.cubes, w, density, ids);
    }
    std::sort(est.indices.begin(), est.indices.end());
  }
  std::vector<Cube> fam;
  double s = 0.0;
  for (std::size_t i : est.indices) {
    fam.push_back(cs.cubes[i]);
    est.oscillations.push_back(osc[i]);
    s += w[i];
  }
  est.family = CubeFamily(std::move(fam), Admissibility(cs.a));
  est.value = std::pow(s, 1.0 / p);
  return est;
}

inline JnpEstimate maximize_jnp(const ScalarField& f, const CandidateSet& cs, double p, double q,
                                const QuadratureSpec& spec) {
  require_exponents(p, q);
  return maximize_jnp(cs, oscillation_table(f, cs, q, spec), p, q);
}

// --- BMO ------------------------------------------------------------------

struct BmoEstimate {
  double value = 0.0;            // sup_oscillation + l1.value
  double sup_oscillation = 0.0;  // over candidates admissible for a
  std::size_t argmax = 0;
  GlobalIntegral l1;
};

inline BmoEstimate bmo_norm_estimate(const CandidateSet& cs, const std::vector<double>& osc1, Admissibility a,
                                     const GlobalIntegral& l1) {
  if (cs.size() == 0) throw std::invalid_argument("bmo_norm_estimate: empty candidate set");
  BmoEstimate b;
  b.l1 = l1;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (!cs.selectable[i] || !is_admissible(cs.cubes[i], a)) continue;
    if (osc1[i] > b.sup_oscillation) {
      b.sup_oscillation = osc1[i];
      b.argmax = i;
    }
  }
  b.value = b.sup_oscillation + l1.value;
  return b;
}

inline BmoEstimate bmo_norm_estimate(const ScalarField& f, Admissibility a, const CandidateSet& cs,
                                     const QuadratureSpec& spec) {
  if (cs.size() == 0) throw std::invalid_argument("bmo_norm_estimate: empty candidate set");
  return bmo_norm_estimate(cs, oscillation_table(f, cs, 1.0, spec), a,
                           global_l1_norm(f, cs.cubes.front().dim(), spec));
}

// --- p -> infinity ----------------------------------------------------------

struct PScanRow {
  double p = 0.0;
  double jn_value = 0.0;       // lower bound for K_p
  double norm_estimate = 0.0;  // jn_value + ||f||_1
  double bmo_estimate = 0.0;
  double gap = 0.0;  // bmo_estimate - norm_estimate
};

/// JN_p estimates for increasing p on one shared candidate set and one
/// oscillation table.
inline std::vector<PScanRow> p_limit_scan(const ScalarField& f, Admissibility a, const CandidateSet& cs,
                                          std::span<const double> p_list, const QuadratureSpec& spec) {
  if (p_list.empty()) throw std::invalid_argument("p_limit_scan: empty p list");
  for (std::size_t i = 1; i < p_list.size(); ++i)
    if (!(p_list[i] > p_list[i - 1])) throw std::invalid_argument("p_limit_scan: p list must be increasing");
  const CandidateSet shared = cs.with_parameter(a);
  const std::vector<double> osc = oscillation_table(f, shared, 1.0, spec);
  const GlobalIntegral l1 = global_l1_norm(f, cs.cubes.front().dim(), spec);
  const BmoEstimate bmo = bmo_norm_estimate(shared, osc, a, l1);
  std::vector<PScanRow> rows;
  for (double p : p_list) {
    PScanRow r;
    r.p = p;
    r.jn_value = maximize_jnp(shared, osc, p, 1.0).value;
    r.norm_estimate = r.jn_value + l1.value;
    r.bmo_estimate = bmo.value;
    r.gap = r.bmo_estimate - r.norm_estimate;
    rows.push_back(r);
  }
  return rows;
}

// --- tail constants -----------------------------------------------------------

struct TailPlateau {
  double sigma_lo = 0.0, sigma_hi = 0.0;  // grid points carrying the same tail value
  double tail = 0.0;
};

struct TailFit {
  double exponent = std::numeric_limits<double>::quiet_NaN();  // NaN with < 2 fit points
  double c_estimate = 0.0;
  double c_argmax_sigma = 0.0;
  std::size_t fit_points = 0;
  DistributionProfile profile;
  std::vector<TailPlateau> plateaus;
};

/// Log-log slope of gamma({|f - f_Q| > sigma}) over grid points with tail in
/// (1e-6, gamma(Q)/2), and max_sigma sigma^p tail(sigma) / k_hat^p.
inline TailFit jn_tail_fit(const ScalarField& f, const Cube& cube, double p, const QuadratureSpec& spec,
                           std::span<const double> sigmas, double k_hat) {
  if (!(p > 1.0)) throw std::invalid_argument("jn_tail_fit: p must be > 1");
  if (!(k_hat > 0.0)) throw std::invalid_argument("jn_tail_fit: family estimate must be positive");
  if (sigmas.empty()) throw std::invalid_argument("jn_tail_fit: empty sigma grid");
  TailFit fit;
  fit.profile = distribution_profile(f, cube, sigmas, spec);
  const auto& tails = fit.profile.tail_values;
  if (std::all_of(tails.begin(), tails.end(), [](double t) { return t == 0.0; }))
    throw std::domain_error("jn_tail_fit: all tails vanish on the sigma grid");
  const double gq = gaussian_measure(cube);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const double c = std::pow(sigmas[i] / k_hat, p) * tails[i];
    if (c > fit.c_estimate) {
      fit.c_estimate = c;
      fit.c_argmax_sigma = sigmas[i];
    }
    if (i == 0 || tails[i] != tails[i - 1])
      fit.plateaus.push_back({sigmas[i], sigmas[i], tails[i]});
    else
      fit.plateaus.back().sigma_hi = sigmas[i];
    if (tails[i] > 1e-6 && tails[i] < 0.5 * gq) {
      const double x = std::log(sigmas[i]), y = std::log(tails[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++fit.fit_points;
    }
  }
  if (fit.fit_points >= 2) {
    const double n = static_cast<double>(fit.fit_points);
    const double den = n * sxx - sx * sx;
    if (den > 0.0) fit.exponent = (n * sxy - sx * sy) / den;
  }
  return fit;
}

struct TailSweepRow {
  std::size_t cube_index = 0;
  bool skipped = false;  // f constant on the cube
  double c_estimate = 0.0;
  double exponent = std::numeric_limits<double>::quiet_NaN();
};

struct TailSweep {
  std::vector<TailSweepRow> rows;
  double max_c = 0.0;
  std::size_t used = 0;
};

/// jn_tail_fit on every cube of a list against one family estimate k_hat;
/// cubes on which f is constant are skipped.
inline TailSweep jn_tail_sweep(const ScalarField& f, const std::vector<Cube>& cubes, double p,
                               std::span<const double> sigmas, double k_hat, const QuadratureSpec& spec) {
  TailSweep sweep;
  sweep.rows = parallel_map<TailSweepRow>(cubes.size(), [&](std::size_t i) {
    TailSweepRow r;
    r.cube_index = i;
    if (is_constant_on(f, cubes[i], spec)) {
      r.skipped = true;
      return r;
    }
    const TailFit fit = jn_tail_fit(f, cubes[i], p, spec, sigmas, k_hat);
    r.c_estimate = fit.c_estimate;
    r.exponent = fit.exponent;
    return r;
  });
  for (const auto& r : sweep.rows) {
    if (r.skipped) continue;
    ++sweep.used;
    sweep.max_c = std::max(sweep.max_c, r.c_estimate);
  }
  return sweep;
}

}  // namespace gjn
