#pragma once

// Atoms, polymers and Hardy-space elements; the truncated pairing against a
// field and the Hoelder chain bounding it; dual atoms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gjn/corpus.hpp"
#include "gjn/fields.hpp"
#include "gjn/geometry.hpp"
#include "gjn/jnp.hpp"
#include "gjn/parallel.hpp"

namespace gjn {

inline constexpr double kMeanTol = 1e-10;

/// Where an atom's function came from, for serialization: (source - offset) on
/// the cube, with source a corpus field or a step table.
struct AtomSource {
  std::string field_id;           // empty when a table is stored
  std::optional<StepTable> table;
  double offset = 0.0;
};

struct Atom {
  Cube cube;
  ScalarField b;             // vanishes off the cube
  double q_exponent = 2.0;   // b lies in L^q_0(cube)
  std::optional<AtomSource> source;
};

/// f restricted to the open cube, zero elsewhere; the faces become breaks.
inline ScalarField restrict_to(const ScalarField& f, const Cube& q) {
  ScalarField out = f;
  out.id = f.id + "|cube";
  AxisBreaks faces(q.dim());
  for (std::size_t i = 0; i < q.dim(); ++i) faces[i] = {q.lower(i), q.upper(i)};
  out.breaks = merge_breaks(f.breaks, faces);
  out.eval = [g = f.eval, q](std::span<const double> x) { return q.contains(x) ? g(x) : 0.0; };
  return out;
}

/// int_Q f dgamma.
inline double integral_on(const ScalarField& f, const Cube& q, const QuadratureSpec& spec) {
  return gauss_average(f, q, spec) * gaussian_measure(q);
}

/// (1/gamma(Q)) int_Q |b|^r dgamma.
inline double power_mean(const ScalarField& b, const Cube& q, double r, const QuadratureSpec& spec) {
  return deviation_moment(b, q, 0.0, r, spec);
}

/// Pointwise product, kinks of both factors declared.
inline ScalarField product(const ScalarField& f, const ScalarField& g) {
  ScalarField out;
  out.id = f.id + "*" + g.id;
  out.dimension = std::max(f.dimension, g.dimension);
  out.breaks = merge_breaks(f.breaks, g.breaks);
  out.eval = [a = f.eval, b = g.eval](std::span<const double> x) { return a(x) * b(x); };
  out.cellwise_constant = f.cellwise_constant && g.cellwise_constant;
  out.kinks = f.kinks;
  out.kinks.insert(out.kinks.end(), g.kinks.begin(), g.kinks.end());
  return out;
}

inline void check_atom_mean(const Atom& a, const QuadratureSpec& spec) {
  const double mean = integral_on(a.b, a.cube, spec);
  const double norm = lq_norm(a.b, a.cube, a.q_exponent, spec);
  if (std::abs(mean) > kMeanTol * std::max(norm, 1e-300) && std::abs(mean) > spec.abs_tol * gaussian_measure(a.cube))
    throw std::invalid_argument("atom mean " + std::to_string(mean) + " exceeds tolerance");
}

/// (f - f_Q) on Q, zero elsewhere.
inline Atom make_atom(const ScalarField& f, const Cube& q, double q_exponent, const QuadratureSpec& spec) {
  if (!(q_exponent > 1.0)) throw std::invalid_argument("make_atom: exponent must be > 1");
  if (!(gaussian_measure(q) > 0.0)) throw std::invalid_argument("make_atom: cube has no Gaussian mass");
  const double mean = gauss_average(f, q, spec);
  ScalarField shifted = f;
  shifted.eval = [g = f.eval, mean](std::span<const double> x) { return g(x) - mean; };
  Atom a{q, restrict_to(shifted, q), q_exponent, AtomSource{f.id, std::nullopt, mean}};
  a.b.id = "atom(" + f.id + ")";
  return a;
}

inline Atom make_step_atom(const StepTable& table, const Cube& q, double q_exponent, const QuadratureSpec& spec) {
  Atom a = make_atom(step_field(table), q, q_exponent, spec);
  a.source->field_id.clear();
  a.source->table = table;
  return a;
}

// --- polymers ---------------------------------------------------------------

struct Polymer {
  std::vector<Atom> atoms;
  double p = 1.5, q = 2.0;
  double a = 1.0;

  void validate() const {
    if (!(p > 1.0) || !(q > 1.0)) throw std::invalid_argument("polymer exponents must exceed 1");
    const Admissibility adm(a);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!is_admissible(atoms[i].cube, adm)) throw std::invalid_argument("polymer atom cube not admissible");
      if (atoms[i].q_exponent != q) throw std::invalid_argument("polymer atom exponent mismatch");
      for (std::size_t j = 0; j < i; ++j)
        if (atoms[i].cube.intersects(atoms[j].cube)) throw std::invalid_argument("polymer atom cubes overlap");
    }
  }
};

/// gamma(Q_j) ((1/gamma(Q_j)) int |b_j|^q)^{p/q} per atom.
inline std::vector<double> polymer_terms(const Polymer& poly, const QuadratureSpec& spec) {
  return parallel_map<double>(poly.atoms.size(), [&](std::size_t j) {
    const Atom& at = poly.atoms[j];
    return gaussian_measure(at.cube) * std::pow(power_mean(at.b, at.cube, poly.q, spec), poly.p / poly.q);
  });
}

/// Norm of the stored decomposition; an upper bound for the polymer norm.
inline double polymer_norm(const Polymer& poly, const QuadratureSpec& spec) {
  poly.validate();
  double s = 0.0;
  for (double t : polymer_terms(poly, spec)) s += t;
  return std::pow(s, 1.0 / poly.p);
}

/// ||sum_j b_j||_{L^p(R^d, gamma)} using disjointness of the supports.
inline double polymer_lp_norm(const Polymer& poly, const QuadratureSpec& spec) {
  poly.validate();
  const auto parts = parallel_map<double>(poly.atoms.size(), [&](std::size_t j) {
    const Atom& at = poly.atoms[j];
    return gaussian_measure(at.cube) * power_mean(at.b, at.cube, poly.p, spec);
  });
  double s = 0.0;
  for (double t : parts) s += t;
  return std::pow(s, 1.0 / poly.p);
}

struct TruncatedPolymer {
  Polymer head;
  double tail_norm = 0.0;
};

/// First k atoms and the norm of the remaining ones.
inline TruncatedPolymer polymer_tail_truncation(const Polymer& poly, std::size_t k, const QuadratureSpec& spec) {
  if (k > poly.atoms.size()) throw std::invalid_argument("polymer_tail_truncation: k exceeds atom count");
  const auto terms = polymer_terms(poly, spec);
  TruncatedPolymer out;
  out.head = poly;
  out.head.atoms.resize(k);
  double s = 0.0;
  for (std::size_t j = k; j < terms.size(); ++j) s += terms[j];
  out.tail_norm = std::pow(s, 1.0 / poly.p);
  return out;
}

struct HardyElement {
  double c0 = 0.0;
  std::vector<Polymer> polymers;
  double norm_upper_bound = 0.0;
};

inline HardyElement make_hardy_element(double c0, std::vector<Polymer> polymers, const QuadratureSpec& spec) {
  HardyElement g{c0, std::move(polymers), std::abs(c0)};
  for (const Polymer& p : g.polymers) g.norm_upper_bound += polymer_norm(p, spec);
  return g;
}

// --- pairing ------------------------------------------------------------------

struct PairingReport {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> truncation_levels;
  std::vector<double> partials;
  std::vector<double> atom_error_bounds;  // sum over atoms of int |f - f_N| |b| dgamma
  double bound_rhs = 0.0;
  bool converged = false;
};

inline std::vector<double> default_truncation_schedule() {
  std::vector<double> n;
  for (int k = 0; k <= 20; ++k) n.push_back(std::ldexp(1.0, k));
  return n;
}

/// int f_N g dgamma for the truncations f_N along the schedule, stopping once
/// two successive partials agree within tol and the atom part of the latest
/// one is within tol of its limit. Agreement alone is not enough: an atom
/// whose cube lies where |f| > N sees a constant f_N and pairs to 0 for
/// every such N. bound_rhs = 2 jn_norm ||g||_H.
inline PairingReport pairing(const ScalarField& f, const HardyElement& g, std::span<const double> schedule,
                             const QuadratureSpec& spec, double jn_norm_estimate = 0.0, double tol = 1e-9) {
  if (schedule.empty()) throw std::invalid_argument("pairing: empty truncation schedule");
  std::size_t d = f.dimension;
  for (const Polymer& p : g.polymers)
    for (const Atom& a : p.atoms) d = a.cube.dim();
  if (d == 0) d = 1;
  PairingReport rep;
  rep.bound_rhs = 2.0 * jn_norm_estimate * g.norm_upper_bound;
  std::vector<const Atom*> atoms;
  for (const Polymer& p : g.polymers)
    for (const Atom& a : p.atoms) atoms.push_back(&a);
  for (double n : schedule) {
    const ScalarField fn = truncate(f, n);
    double v = g.c0 == 0.0 ? 0.0 : g.c0 * global_integral(fn, d, [](double t) { return t; }, spec).value;
    ScalarField excess = fn;
    excess.eval = [h = f.eval, n](std::span<const double> x) { return std::max(std::abs(h(x)) - n, 0.0); };
    const auto parts = parallel_map<std::pair<double, double>>(atoms.size(), [&](std::size_t i) {
      const Atom& at = *atoms[i];
      ScalarField mag = at.b;
      mag.eval = [b = at.b.eval](std::span<const double> x) { return std::abs(b(x)); };
      mag.kinks.push_back(at.b.eval);
      return std::pair{integral_on(product(fn, at.b), at.cube, spec), integral_on(product(excess, mag), at.cube, spec)};
    });
    double err = 0.0;
    for (const auto& [t, e] : parts) {
      v += t;
      err += e;
    }
    rep.truncation_levels.push_back(n);
    rep.partials.push_back(v);
    rep.atom_error_bounds.push_back(err);
    const std::size_t k = rep.partials.size();
    if (k >= 2 && std::abs(rep.partials[k - 1] - rep.partials[k - 2]) <= tol && err <= tol) {
      rep.converged = true;
      rep.value = v;
      break;
    }
  }
  return rep;
}

/// c0 int f dgamma + sum over atoms of int_Q f b dgamma, without truncation.
inline double direct_pairing(const ScalarField& f, const HardyElement& g, const QuadratureSpec& spec) {
  std::size_t d = f.dimension;
  std::vector<const Atom*> atoms;
  for (const Polymer& p : g.polymers)
    for (const Atom& a : p.atoms) {
      atoms.push_back(&a);
      d = a.cube.dim();
    }
  if (d == 0) d = 1;
  double v = g.c0 == 0.0 ? 0.0 : g.c0 * global_integral(f, d, [](double t) { return t; }, spec).value;
  const auto parts = parallel_map<double>(atoms.size(), [&](std::size_t i) {
    return integral_on(product(f, atoms[i]->b), atoms[i]->cube, spec);
  });
  for (double t : parts) v += t;
  return v;
}

// --- Hoelder chain --------------------------------------------------------------

inline double conjugate(double r) { return r / (r - 1.0); }

inline bool are_conjugate(double r, double s, double tol = 1e-12) { return std::abs(1.0 / r + 1.0 / s - 1.0) <= tol; }

struct AtomCheck {
  std::size_t polymer = 0, atom = 0;
  double lhs = 0.0;  // |int_Q f b dgamma|
  double rhs = 0.0;  // gamma(Q) osc_q(f, Q) ((1/gamma(Q)) int |b|^{q'})^{1/q'}
  double oscillation = 0.0;
  bool holds = false;
};

struct PolymerCheck {
  double lhs = 0.0;           // sum_j |int f b_j|
  double family_value = 0.0;  // (sum_j gamma(Q_j) osc_q(f, Q_j)^p)^{1/p}
  double polymer_norm = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct DualityReport {
  std::vector<AtomCheck> atoms;
  std::vector<PolymerCheck> polymers;
  double total_lhs = 0.0, total_rhs = 0.0;
  double min_slack = std::numeric_limits<double>::infinity();  // min over checks of rhs - lhs
  bool all_hold = true;
};

/// Per-atom and per-polymer Hoelder bounds for f in JN_{p,q} against
/// (p', q') polymers.
inline DualityReport duality_check(const ScalarField& f, double p, double q, const std::vector<Polymer>& polymers,
                                   const QuadratureSpec& spec, double tol = 1e-8) {
  require_exponents(p, q);
  if (!(q > 1.0)) throw std::invalid_argument("duality_check: q must exceed 1");
  for (const Polymer& poly : polymers) {
    if (!are_conjugate(p, poly.p) || !are_conjugate(q, poly.q))
      throw std::invalid_argument("duality_check: polymer exponents are not conjugate to (p, q)");
    poly.validate();
  }
  DualityReport rep;
  for (std::size_t i = 0; i < polymers.size(); ++i) {
    const Polymer& poly = polymers[i];
    const auto rows = parallel_map<AtomCheck>(poly.atoms.size(), [&](std::size_t j) {
      const Atom& at = poly.atoms[j];
      AtomCheck c;
      c.polymer = i;
      c.atom = j;
      c.lhs = std::abs(integral_on(product(f, at.b), at.cube, spec));
      c.oscillation = oscillation(f, at.cube, q, spec);
      c.rhs = gaussian_measure(at.cube) * c.oscillation *
              std::pow(power_mean(at.b, at.cube, poly.q, spec), 1.0 / poly.q);
      c.holds = c.lhs <= c.rhs + tol;
      return c;
    });
    PolymerCheck pc;
    double fam = 0.0;
    for (const AtomCheck& c : rows) {
      pc.lhs += c.lhs;
      fam += gaussian_measure(poly.atoms[c.atom].cube) * std::pow(c.oscillation, p);
      rep.all_hold = rep.all_hold && c.holds;
      rep.min_slack = std::min(rep.min_slack, c.rhs - c.lhs);
      rep.atoms.push_back(c);
    }
    pc.family_value = std::pow(fam, 1.0 / p);
    pc.polymer_norm = polymer_norm(poly, spec);
    pc.rhs = pc.family_value * pc.polymer_norm;
    pc.holds = pc.lhs <= pc.rhs + tol;
    rep.all_hold = rep.all_hold && pc.holds;
    rep.min_slack = std::min(rep.min_slack, pc.rhs - pc.lhs);
    rep.total_lhs += pc.lhs;
    rep.total_rhs += pc.rhs;
    rep.polymers.push_back(pc);
  }
  return rep;
}

// --- dual atoms -------------------------------------------------------------------

struct DualAtom {
  Atom atom;
  double achieved = 0.0;    // (1/gamma(Q)) int_Q f b dgamma
  double oscillation = 0.0; // ((1/gamma(Q)) int_Q |f - f_Q|^q)^{1/q}
  double inf_c = 0.0;       // min_c ((1/gamma(Q)) int_Q |f - c|^q)^{1/q}
  double best_c = 0.0;
  std::size_t ascent_steps = 0;
};

namespace detail {

inline double signed_power(double v, double r) { return v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), r), v); }

template <class Fn>
double golden_min(Fn&& fn, double lo, double hi, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = fn(x1), f2 = fn(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = fn(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = fn(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Zero-mean b on Q with (1/gamma(Q)) int |b|^{q'} = 1 and large
/// (1/gamma(Q)) int f b. Starts from |f - c|^{q-1} sgn(f - c) with c the
/// minimiser of ||f - c||_q (golden section), corrects the mean, normalises,
/// then tries mean-zero two-cell step perturbations on a dyadic grid of Q.
inline DualAtom dual_atom(const ScalarField& f, const Cube& cube, double q, const QuadratureSpec& spec,
                          std::size_t grid_level = 2, double ascent_tol = 1e-9) {
  if (!(q > 1.0)) throw std::invalid_argument("dual_atom: q must exceed 1");
  const MeanOscillation mo = mean_and_oscillation(f, cube, q, spec);
  if (mo.oscillation <= 1e-12 * (1.0 + std::abs(mo.mean)))
    throw std::invalid_argument("dual_atom: field is constant on the cube");
  const double qd = conjugate(q);
  const double gq = gaussian_measure(cube);
  DualAtom out;
  out.oscillation = mo.oscillation;

  auto dev = [&](double c) { return std::pow(deviation_moment(f, cube, c, q, spec), 1.0 / q); };
  const double width = 2.0 * mo.oscillation * std::pow(1.0 / std::max(gq, 1e-300), 1.0 / q) + 1e-12;
  out.best_c = detail::golden_min(dev, mo.mean - width, mo.mean + width, 1e-9 * (1.0 + width));
  out.inf_c = dev(out.best_c);

  // mean-zero step perturbations on the cells of a dyadic grid
  const std::size_t d = cube.dim();
  const std::size_t per_axis = std::size_t{1} << grid_level;
  std::size_t cells = 1;
  for (std::size_t i = 0; i < d; ++i) cells *= per_axis;
  const double h = cube.side / static_cast<double>(per_axis);
  auto cell_of = [cube, d, per_axis, h](std::span<const double> x) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < d; ++i) {
      auto j = static_cast<std::size_t>(std::floor((x[i] - cube.lower(i)) / h));
      idx = idx * per_axis + std::min(j, per_axis - 1);
    }
    return idx;
  };
  std::vector<double> cell_mass(cells);
  AxisBreaks grid(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 1; j < per_axis; ++j) grid[i].push_back(cube.lower(i) + static_cast<double>(j) * h);
  for (std::size_t c = 0; c < cells; ++c) {
    Point ctr(d);
    std::size_t r = c;
    for (std::size_t i = d; i-- > 0;) {
      ctr[i] = cube.lower(i) + (static_cast<double>(r % per_axis) + 0.5) * h;
      r /= per_axis;
    }
    cell_mass[c] = gaussian_measure(Cube(ctr, h));
  }

  const double c = out.best_c;
  auto raw = [fe = f.eval, c, q](std::span<const double> x) { return detail::signed_power(fe(x) - c, q - 1.0); };
  ScalarField base;
  base.breaks = merge_breaks(f.breaks, grid);
  base.kinks = f.kinks;
  base.kinks.push_back([fe = f.eval, c](std::span<const double> x) { return fe(x) - c; });
  base.eval = raw;
  const double mu0 = gauss_average(base, cube, spec);
  std::vector<double> coef(cells, 0.0);  // step coefficients added to raw - mu0

  auto make_field = [&](const std::vector<double>& k, double shift, double scale) {
    ScalarField b = base;
    b.id = "dual(" + f.id + ")";
    b.eval = [raw, k, shift, scale, cell_of](std::span<const double> x) {
      return (raw(x) - shift + k[cell_of(x)]) / scale;
    };
    return restrict_to(b, cube);
  };
  // objective: achieved value of the normalised, mean-corrected candidate
  auto evaluate = [&](const std::vector<double>& k, double& mean_out, double& scale_out) {
    ScalarField unscaled = make_field(k, mu0, 1.0);
    const double m = gauss_average(unscaled, cube, spec);  // zero up to quadrature for mean-zero steps
    ScalarField centred = make_field(k, mu0 + m, 1.0);
    const double s = std::pow(power_mean(centred, cube, qd, spec), 1.0 / qd);
    mean_out = mu0 + m;
    scale_out = s;
    return gauss_average(product(f, centred), cube, spec) / s;
  };
  double mean = 0.0, scale = 1.0;
  double best = evaluate(coef, mean, scale);
  if (q != 2.0) {
    for (int sweep = 0; sweep < 3; ++sweep) {
      bool improved = false;
      for (std::size_t cidx = 0; cidx + 1 < cells; ++cidx) {
        const double step = 0.25 * scale;
        auto trial = [&](double t) {
          std::vector<double> k = coef;
          k[cidx] += t / cell_mass[cidx];
          k[cidx + 1] -= t / cell_mass[cidx + 1];
          double mm, ss;
          return -evaluate(k, mm, ss);
        };
        const double scale_t = step * std::min(cell_mass[cidx], cell_mass[cidx + 1]);
        const double t = detail::golden_min(trial, -scale_t, scale_t, 1e-6 * scale_t + 1e-300);
        const double v = -trial(t);
        if (v > best + ascent_tol) {
          coef[cidx] += t / cell_mass[cidx];
          coef[cidx + 1] -= t / cell_mass[cidx + 1];
          best = evaluate(coef, mean, scale);
          ++out.ascent_steps;
          improved = true;
        }
      }
      if (!improved) break;
    }
  }
  out.atom = Atom{cube, make_field(coef, mean, scale), qd, std::nullopt};
  out.achieved = best;
  return out;
}

}  // namespace gjn
