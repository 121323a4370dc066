// Acceptance suite: one PASS/FAIL line per criterion. A criterion passes when
// its property holds and it finishes inside its time budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gjn/gjn.hpp"
#include "oracles.hpp"

using namespace gjn;

namespace {

struct Outcome {
  bool holds = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const QuadratureSpec kSpec{6, 8, 1e-11};

// --- 1 ------------------------------------------------------------------------

Outcome radius_bounds() {
  const RadiusSequence seq = radius_sequence(10001);
  const auto bad = radius_bound_violations(seq, 1e-12);
  std::string detail = std::to_string(bad.size()) + " violations for k <= 10000";
  for (const auto& v : bad)
    detail += "; k=" + std::to_string(v.k) + ": a=" + fmt("%.6g", v.value) + " > sqrt(3k)=" + fmt("%.6g", v.upper);
  std::size_t from_three = 0;
  for (const auto& v : bad) from_three += v.k >= 3 ? 1 : 0;
  detail += "; k >= 3: " + std::to_string(from_three) + " violations";
  return {bad.empty(), detail};
}

// --- 2 ------------------------------------------------------------------------

Outcome covering_validity() {
  bool ok = true;
  std::string detail;
  for (std::size_t d : {1u, 2u}) {
    const Covering cov = build_covering(6, d);
    const CoverageReport rep = verify_coverage(cov, 100000);
    const Admissibility ad(2.0 * std::sqrt(static_cast<double>(d)));
    bool adm = true;
    for (const Cube& q : cov.cubes()) adm = adm && is_admissible(q, ad);
    const auto stats = layer_statistics(cov);
    bool window = true;
    for (const LayerStats& s : stats)
      if (s.k >= 2) window = window && s.side_window;
    const bool plateau = layer_ratio_plateaued(stats, 3);
    ok = ok && rep.uncovered == 0 && adm && window && plateau;
    detail += "d=" + std::to_string(d) + ": " + std::to_string(cov.cube_count()) + " cubes, " +
              std::to_string(rep.uncovered) + " uncovered, admissible=" + (adm ? "yes" : "no") +
              ", window=" + (window ? "yes" : "no") + ", plateau=" + (plateau ? "yes" : "no") + "; ";
  }
  return {ok, detail};
}

// --- 3 ------------------------------------------------------------------------

Outcome chain_identities() {
  std::mt19937_64 rng(301);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_boundary = 0.0, worst_radius = 0.0, worst_ratio = 0.0;
  std::size_t cubes = 0, steps = 0;
  bool bound_ok = true;
  while (cubes < 1000) {
    const std::size_t d = 1 + cubes % 3;
    const double dd = static_cast<double>(d);
    Point c(d);
    for (double& x : c) x = -20.0 + 40.0 * u(rng);
    if (norm(c) <= 0.5) continue;
    // m(c) <= side <= 2 sqrt(d) m(c)
    const double m = admissibility_m(c);
    const Cube q(c, m * (1.0 + (2.0 * std::sqrt(dd) - 1.0) * u(rng)));
    ++cubes;
    const MChain ch = k_chain(q);
    for (std::size_t i = 0; i < ch.steps(); ++i) {
      const auto r = m_step_residual(Ball(ch.cubes[i].center, 0.5 * ch.cubes[i].side));
      worst_boundary = std::max(worst_boundary, std::abs(r.boundary));
      worst_radius = std::max(worst_radius, std::abs(r.radius));
      ++steps;
    }
    const double big_d = norm(c) / std::sqrt(dd);
    const double bound = 4.0 * big_d * big_d * dd;
    bound_ok = bound_ok && static_cast<double>(ch.steps()) <= bound;
    worst_ratio = std::max(worst_ratio, static_cast<double>(ch.steps()) / bound);
  }
  const bool ok = worst_boundary <= 1e-12 && worst_radius <= 1e-12 && bound_ok;
  return {ok, std::to_string(cubes) + " cubes, " + std::to_string(steps) + " steps, max boundary residual " +
                  fmt("%.3g", worst_boundary) + ", max radius residual " + fmt("%.3g", worst_radius) +
                  ", max K_Q / 4D^2d " + fmt("%.3g", worst_ratio)};
}

// --- 4 ------------------------------------------------------------------------

Outcome gaussian_measure_checks() {
  const double central = gaussian_measure(Cube({0.0}, 2.0));
  const double ref = oracle::erf_hp(1.0);
  const double err = std::abs(central - ref);
  double worst = 0.0;
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> u(-4.0, 4.0), s(0.05, 3.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + static_cast<std::size_t>(t % 3);
    Point c(d);
    for (double& x : c) x = u(rng);
    const Cube q(c, s(rng));
    const int level = 1 + t % 4;
    const std::size_t per_axis = std::size_t{1} << level;
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= per_axis;
    double sum = 0.0;
    const double h = q.side / static_cast<double>(per_axis);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Point cc(d);
      std::size_t r = idx;
      for (std::size_t i = 0; i < d; ++i) {
        cc[i] = q.lower(i) + (static_cast<double>(r % per_axis) + 0.5) * h;
        r /= per_axis;
      }
      sum += gaussian_measure(Cube(cc, h));
    }
    worst = std::max(worst, std::abs(sum - gaussian_measure(q)));
  }
  return {err <= 1e-9 && worst <= 1e-10, "gamma((-1,1)) = " + fmt("%.16f", central) + ", |err| " + fmt("%.3g", err) +
                                             ", max tiling defect " + fmt("%.3g", worst)};
}

// --- 5 ------------------------------------------------------------------------

oracle::StepDistribution exact_distribution(const StepTable& t) {
  oracle::StepDistribution dist;
  for (std::size_t c = 0; c < t.cell_count(); ++c) {
    const Box b = t.cell_box(c);
    dist.add(t.values[c], oracle::box_mass_hp(b.lo, b.hi));
  }
  return dist;
}

Outcome weak_embedding() {
  std::mt19937_64 rng(501);
  std::uniform_real_distribution<double> pos(-3.0, 3.0), frac(0.1, 1.0);
  const std::pair<double, double> pairs[] = {{3.0, 2.0}, {4.0, 2.0}, {2.0, 1.5}};
  bool ok = true;
  double worst = 0.0, lib_dev = 0.0;
  std::size_t checked = 0;
  for (const auto& [p, q] : pairs)
    for (int i = 0; i < 200; ++i) {
      const std::size_t d = 1 + static_cast<std::size_t>(i % 2);
      Point c(d);
      for (double& x : c) x = pos(rng);
      const double a = 2.0 * std::sqrt(static_cast<double>(d));
      const Cube cube(c, a * admissibility_m(c) * frac(rng));
      const StepTable table = random_step_table(cube, 3, rng);
      const oracle::StepDistribution dist = exact_distribution(table);
      const double lhs = dist.lq_norm(q);
      const double weak = dist.weak_norm(p);
      const double mass = oracle::box_mass_hp(Box::of(cube).lo, Box::of(cube).hi);
      const double bound = std::pow(p / (p - q), 1.0 / q) * std::pow(mass, 1.0 / q - 1.0 / p) * weak * 1.02;
      ok = ok && lhs <= bound;
      worst = std::max(worst, lhs / bound);
      // library values against the exact distribution, reported only
      const ScalarField g = step_field(table);
      lib_dev = std::max(lib_dev, std::abs(lq_norm(g, cube, q, kSpec) - lhs) / lhs);
      lib_dev = std::max(lib_dev, std::abs(weak_lp_norm(g, cube, p, kSpec) - weak) / weak);
      ++checked;
    }
  return {ok, std::to_string(checked) + " step functions, max lhs/bound " + fmt("%.4f", worst) +
                  ", library vs exact max rel. deviation " + fmt("%.2g", lib_dev)};
}

// --- 6 ------------------------------------------------------------------------

// Shapes of dyadic trees (every internal node has `arity` children) with at
// most max_nodes nodes, as parent arrays in preorder.
std::vector<std::vector<int>> tree_shapes(std::size_t arity, std::size_t max_nodes) {
  std::vector<std::vector<std::vector<int>>> by_size(max_nodes + 1);
  by_size[1] = {{-1}};
  for (std::size_t n = 2; n <= max_nodes; ++n) {
    // root plus `arity` subtrees whose sizes sum to n - 1
    std::function<void(std::size_t, std::size_t, std::vector<int>)> grow = [&](std::size_t k, std::size_t left,
                                                                               std::vector<int> acc) {
      if (k == arity) {
        if (left == 0) by_size[n].push_back(acc);
        return;
      }
      for (std::size_t s = 1; s <= left; ++s)
        for (const auto& sub : by_size[s]) {
          std::vector<int> next = acc;
          const int offset = static_cast<int>(next.size());
          for (int p : sub) next.push_back(p == -1 ? 0 : p + offset);
          grow(k + 1, left - s, std::move(next));
        }
    };
    if (n - 1 >= arity) grow(0, n - 1, {-1});
  }
  std::vector<std::vector<int>> out;
  for (const auto& v : by_size) out.insert(out.end(), v.begin(), v.end());
  return out;
}

// Every multiset of tree shapes with at most max_nodes nodes in total.
void forests(const std::vector<std::vector<int>>& shapes, std::size_t first, std::size_t left, std::vector<int>& acc,
             std::vector<std::vector<int>>& out) {
  if (!acc.empty()) out.push_back(acc);
  for (std::size_t s = first; s < shapes.size(); ++s) {
    if (shapes[s].size() > left) continue;
    const std::size_t before = acc.size();
    const int offset = static_cast<int>(before);
    for (int p : shapes[s]) acc.push_back(p == -1 ? -1 : p + offset);
    forests(shapes, s, left - shapes[s].size(), acc, out);
    acc.resize(before);
  }
}

Outcome antichain_exactness() {
  std::vector<std::vector<int>> all;
  for (std::size_t arity : {2u, 4u}) {
    std::vector<int> acc;
    forests(tree_shapes(arity, 12), 0, 12, acc, all);
  }
  std::mt19937_64 rng(601);
  std::uniform_int_distribution<int> num(0, 1000);
  std::bernoulli_distribution coin(0.8);
  std::size_t mismatches = 0, runs = 0;
  for (const auto& parent : all)
    for (int t = 0; t < 50; ++t) {
      // integer weights add exactly in any order
      std::vector<double> w(parent.size());
      for (double& x : w) x = num(rng);
      std::vector<bool> sel(parent.size());
      for (std::size_t i = 0; i < sel.size(); ++i) sel[i] = coin(rng);
      const double dp = max_weight_antichain(parent, w, sel).value;
      mismatches += dp == oracle::antichain_max_bruteforce(parent, w, sel) ? 0 : 1;
      ++runs;
    }
  return {mismatches == 0, std::to_string(all.size()) + " forests (binary and 4-ary), " + std::to_string(runs) +
                               " weightings, " + std::to_string(mismatches) + " mismatches"};
}

// --- 7 ------------------------------------------------------------------------

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  return out;
}

Outcome tail_constant_stability() {
  const Covering cov = build_covering(4, 1);
  const std::vector<Cube> cubes = cov.cubes();
  const CandidateSet cs = covering_candidates(cov, 3);
  const std::vector<double> sigmas = log_grid(1e-2, 1e2, 48);
  // below the distribution node budget, so the refined run really uses a finer grid
  const QuadratureSpec base{6, 5, 1e-10};
  const QuadratureSpec fine = base.refined();
  bool ok = true;
  std::string detail;
  for (const char* id : {"sign", "norm2", "log_radial"}) {
    const ScalarField f = corpus_field(id, 1);
    auto max_c = [&](const QuadratureSpec& spec) {
      const double k_hat = maximize_jnp(f, cs, 2.0, 1.0, spec).value;
      return jn_tail_sweep(f, cubes, 2.0, sigmas, k_hat, spec).max_c;
    };
    const double c0 = max_c(base), c1 = max_c(fine);
    const double change = std::abs(c1 - c0) / std::abs(c0);
    const bool fine_ok = std::isfinite(c0) && std::isfinite(c1) && c0 > 0.0 && change < 0.10;
    ok = ok && fine_ok;
    detail += std::string(id) + ": c " + fmt("%.6g", c0) + " -> " + fmt("%.6g", c1) + " (relative change " +
              fmt("%.2e", change) + "); ";
  }
  return {ok, detail};
}

// --- 8 ------------------------------------------------------------------------

Outcome bmo_ordering() {
  bool ok = true;
  std::size_t rows_checked = 0;
  const double ps[] = {2.0, 4.0, 8.0};
  for (std::size_t d : {1u, 2u}) {
    const Covering cov = build_covering(d == 1 ? 4 : 3, d);
    const CandidateSet cs = covering_candidates(cov, d == 1 ? 3 : 2);
    const Admissibility a(cov.admissibility_bound());
    for (const char* id : {"sign", "x1", "norm2", "log_radial"}) {
      const auto rows = p_limit_scan(corpus_field(id, d), a, cs, ps, kSpec);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        ok = ok && rows[i].norm_estimate <= rows[i].bmo_estimate;
        if (i > 0) ok = ok && rows[i].jn_value >= rows[i - 1].jn_value - 1e-6;
        ++rows_checked;
      }
    }
  }
  // single cubes: JN_p value is gamma(Q)^{1/p} osc(Q), rising to the BMO value
  const double pl[] = {2.0, 4.0, 8.0, 16.0, 32.0};
  double worst_closed = 0.0;
  bool shrinking = true;
  const ScalarField x1 = corpus_field("x1", 1);
  const double l1 = global_l1_norm(x1, 1, kSpec).value;
  for (const Cube& q : {Cube({0.0}, 2.0), Cube({0.5}, 1.0), Cube({-2.0}, 0.8), Cube({4.0}, 0.4)}) {
    const CandidateSet single = CandidateSet::pool({q}, Admissibility(2.0));
    const auto rows = p_limit_scan(x1, Admissibility(2.0), single, pl, kSpec);
    const double osc = oscillation(x1, q, 1.0, kSpec);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double closed = std::pow(gaussian_measure(q), 1.0 / pl[i]) * osc;
      worst_closed = std::max(worst_closed, std::abs(rows[i].jn_value - closed));
      if (i > 0) shrinking = shrinking && rows[i].gap < rows[i - 1].gap;
      shrinking = shrinking && std::abs(rows[i].gap - (osc - closed)) <= 1e-12 + 1e-12 * l1;
    }
  }
  ok = ok && shrinking && worst_closed <= 1e-12;
  return {ok, std::to_string(rows_checked) + " covering rows, single-cube closed form max error " +
                  fmt("%.3g", worst_closed) + ", gaps shrinking=" + (shrinking ? "yes" : "no")};
}

// --- 9 ------------------------------------------------------------------------

Outcome atom_subdivision() {
  std::mt19937_64 rng(901);
  std::uniform_real_distribution<double> pos(-3.0, 3.0), frac(0.5, 1.0);
  bool ok = true;
  double worst_residual = 0.0, worst_mean = 0.0;
  std::size_t atoms = 0, pieces = 0;
  std::string depths;
  for (std::size_t d : {1u, 2u}) {
    const double dd = static_cast<double>(d);
    const double a1 = 2.0 * std::sqrt(dd), a2 = 1.0;
    const double start = a1 * (1.0 + std::sqrt(dd) * a1 / 2.0);
    const auto n_formula = static_cast<std::size_t>(std::ceil(std::log(start / a2) / std::log(1.5) - 1e-12));
    const std::size_t n = subdivision_depth_bound(a1, a2, d);
    ok = ok && n == n_formula;
    depths += "d=" + std::to_string(d) + ": n=" + std::to_string(n) + " (formula " + std::to_string(n_formula) + "); ";
    std::vector<Atom> list;
    for (const char* id : {"x1", "norm2", "sign", "log_radial"}) {
      Point c(d);
      for (double& x : c) x = pos(rng);
      const Cube q(c, a1 * admissibility_m(c) * frac(rng));
      const ScalarField f = corpus_field(id, d);
      if (is_constant_on(f, q, kSpec)) continue;
      list.push_back(make_atom(f, q, 2.0, kSpec));
    }
    for (int i = 0; i < 4; ++i) {
      Point c(d);
      for (double& x : c) x = pos(rng);
      const Cube q(c, a1 * admissibility_m(c) * frac(rng));
      list.push_back(make_step_atom(random_step_table(q, 3, rng), q, 2.0, kSpec));
    }
    for (const Atom& atom : list) {
      const SubdivisionResult r = subdivide_atom(atom, a1, a2, kSpec);
      ok = ok && r.depth_bound == n && r.depth_used <= n;
      const double res = reconstruction_residual(atom, r.atoms, uniform_points(atom.cube, 1000, rng));
      worst_residual = std::max(worst_residual, res);
      for (const Atom& piece : r.atoms) {
        ok = ok && is_admissible(piece.cube, Admissibility(a2));
        worst_mean = std::max(worst_mean, std::abs(gauss_average(piece.b, piece.cube, kSpec)));
      }
      pieces += r.atoms.size();
      ++atoms;
    }
  }
  ok = ok && worst_residual <= 1e-9 && worst_mean <= 1e-10;
  return {ok, depths + std::to_string(atoms) + " atoms -> " + std::to_string(pieces) + " pieces, max residual " +
                  fmt("%.3g", worst_residual) + ", max |mean| " + fmt("%.3g", worst_mean)};
}

// --- 10 -----------------------------------------------------------------------

Outcome duality_chain() {
  const double p = 3.0, q = 2.0;
  const double pc = conjugate(p), qc = conjugate(q);
  std::mt19937_64 rng(1001);
  const Covering cov = build_covering(5, 1);
  const CandidateSet cs = covering_candidates(cov, 3);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (cs.selectable[i]) usable.push_back(i);
  std::vector<Polymer> polys;
  std::size_t atoms = 0;
  for (int k = 0; k < 10; ++k) {
    Polymer poly;
    poly.p = pc;
    poly.q = qc;
    poly.a = cs.a;
    std::vector<std::size_t> order = usable;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      if (poly.atoms.size() == 10) break;
      const Cube& cube = cs.cubes[idx];
      bool free = true;
      for (const Atom& a : poly.atoms) free = free && !a.cube.intersects(cube);
      if (free) poly.atoms.push_back(make_step_atom(random_step_table(cube, 3, rng), cube, qc, kSpec));
    }
    atoms += poly.atoms.size();
    polys.push_back(std::move(poly));
  }
  bool ok = atoms == 100;
  bool domination = true;
  for (const Polymer& poly : polys)
    domination = domination && polymer_lp_norm(poly, kSpec) <= polymer_norm(poly, kSpec) * (1.0 + 1e-12);
  ok = ok && domination;

  const HardyElement g = make_hardy_element(0.5, polys, kSpec);
  const std::vector<double> schedule = default_truncation_schedule();
  StepTable bounded_table = random_step_table(Cube({0.0}, 6.0), 8, rng);
  std::map<std::string, ScalarField> fields{{"sign", corpus_field("sign", 1)},
                                            {"x1", corpus_field("x1", 1)},
                                            {"log_radial", corpus_field("log_radial", 1)},
                                            {"step", step_field(bounded_table)}};
  const std::map<std::string, bool> bounded{{"sign", true}, {"x1", false}, {"log_radial", false}, {"step", true}};
  std::size_t atom_fail = 0;
  bool aggregated = true, pairing_ok = true;
  double worst_pairing = 0.0;
  for (const auto& [id, f] : fields) {
    const DualityReport rep = duality_check(f, p, q, polys, kSpec, 1e-8);
    for (const AtomCheck& a : rep.atoms) atom_fail += a.holds ? 0 : 1;
    double atom_part = 0.0;
    for (const Polymer& poly : polys)
      for (const Atom& a : poly.atoms) atom_part += integral_on(product(f, a.b), a.cube, kSpec);
    for (const PolymerCheck& pcheck : rep.polymers) aggregated = aggregated && pcheck.holds;
    aggregated = aggregated && std::abs(atom_part) <= rep.total_rhs + 1e-8;
    if (bounded.at(id)) {
      const PairingReport pr = pairing(f, g, schedule, kSpec);
      const double diff = std::abs(pr.value - direct_pairing(f, g, kSpec));
      pairing_ok = pairing_ok && pr.converged && diff <= 1e-8;
      worst_pairing = std::max(worst_pairing, diff);
    }
  }
  ok = ok && atom_fail == 0 && aggregated && pairing_ok;
  return {ok, std::to_string(atoms) + " atoms in " + std::to_string(polys.size()) + " polymers, " +
                  std::to_string(atom_fail) + " Hoelder failures over 4 fields, aggregated=" +
                  (aggregated ? "yes" : "no") + ", lp<=polymer norm=" + (domination ? "yes" : "no") +
                  ", bounded-field pairing max |diff| " + fmt("%.3g", worst_pairing)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "radius sequence bounds", 1.0, radius_bounds},
      {2, "covering validity d=1,2 K=6", 30.0, covering_validity},
      {3, "chain identities and length bound", 5.0, chain_identities},
      {4, "gaussian measure of cubes", 1.0, gaussian_measure_checks},
      {5, "weak-type embedding on step functions", 30.0, weak_embedding},
      {6, "antichain DP against enumeration", 10.0, antichain_exactness},
      {7, "tail constant stability under refinement", 120.0, tail_constant_stability},
      {8, "JN_p below BMO and p monotonicity", 60.0, bmo_ordering},
      {9, "atom subdivision", 30.0, atom_subdivision},
      {10, "duality chain", 120.0, duality_chain},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.holds && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s [%d] %s (%.2fs of %.0fs%s): %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                c.budget_seconds, in_time ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
