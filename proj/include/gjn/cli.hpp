#pragma once

// Batch driver behind tools/gjn_cli.cpp: config parsing, the subcommands and
// their report files.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gjn/serialization.hpp"
#include "gjn/subdivision.hpp"

namespace gjn::cli {

/// Invalid or inconsistent configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmbedConfig {
  std::vector<std::pair<double, double>> pairs{{3.0, 2.0}, {4.0, 2.0}, {2.0, 1.5}};  // (p, q), q < p
  std::size_t functions = 20;  // random step functions per pair
  std::size_t cells = 3;       // per axis
  double slack = 0.02;
};

struct SubdivideConfig {
  double a1 = 0.0;  // 0: 2 sqrt(d)
  double a2 = 1.0;
  std::size_t step_atoms = 2;
  std::size_t points = 1000;
};

struct DualityConfig {
  double p_conj = 0.0;  // 0: conjugate of p
  double q_conj = 0.0;  // 0: conjugate of q
  std::size_t polymers = 2;
  std::size_t atoms_per_polymer = 3;
  double c0 = 0.0;
};

struct ExperimentConfig {
  std::size_t dimension = 1;
  double p = 2.0;
  double q = 1.0;
  double a = 1.0;
  std::size_t depth = 3;              // covering layers K
  std::size_t subdivision_depth = 3;  // dyadic levels below each covering cube
  QuadratureSpec quadrature{};
  std::vector<std::string> fields{"sign"};
  std::vector<double> sigmas;  // empty: 48 log-spaced points in [1e-2, 1e2]
  std::vector<double> p_list{2.0, 4.0, 8.0};
  std::size_t samples = 100000;  // coverage points
  std::uint64_t seed = 1;
  EmbedConfig embed;
  SubdivideConfig subdivide;
  DualityConfig duality;

  std::vector<double> sigma_grid() const {
    if (!sigmas.empty()) return sigmas;
    std::vector<double> g;
    for (int i = 0; i < 48; ++i) g.push_back(std::pow(10.0, -2.0 + 4.0 * i / 47.0));
    return g;
  }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(known.count(it.key()) > 0, "unknown key '" + it.key() + "' in " + where);
}

}  // namespace detail

/// Parses and validates a config. `command` selects the exponent rules:
/// JN runs need 1 <= q < p, duality runs conjugate pairs and q > 1.
inline ExperimentConfig parse_config(const Json& j, const std::string& command) {
  using detail::require;
  ExperimentConfig c;
  try {
    detail::reject_unknown(j,
                           {"dimension", "p", "q", "a", "depth", "subdivision_depth", "quadrature", "fields", "sigmas",
                            "p_list", "samples", "seed", "embed", "subdivide", "duality"},
                           "config");
    c.dimension = j.value("dimension", c.dimension);
    c.p = j.value("p", c.p);
    c.q = j.value("q", c.q);
    c.a = j.value("a", c.a);
    c.depth = j.value("depth", c.depth);
    c.subdivision_depth = j.value("subdivision_depth", c.subdivision_depth);
    if (j.contains("quadrature")) {
      detail::reject_unknown(j["quadrature"], {"nodes_per_axis", "refinement_levels", "abs_tol"}, "quadrature");
      c.quadrature = quadrature_spec_from_json(j["quadrature"]);
    }
    c.fields = j.value("fields", c.fields);
    c.sigmas = j.value("sigmas", c.sigmas);
    c.p_list = j.value("p_list", c.p_list);
    c.samples = j.value("samples", c.samples);
    c.seed = j.value("seed", c.seed);
    if (j.contains("embed")) {
      const Json& e = j["embed"];
      detail::reject_unknown(e, {"pairs", "functions", "cells", "slack"}, "embed");
      c.embed.pairs = e.value("pairs", c.embed.pairs);
      c.embed.functions = e.value("functions", c.embed.functions);
      c.embed.cells = e.value("cells", c.embed.cells);
      c.embed.slack = e.value("slack", c.embed.slack);
    }
    if (j.contains("subdivide")) {
      const Json& s = j["subdivide"];
      detail::reject_unknown(s, {"a1", "a2", "step_atoms", "points"}, "subdivide");
      c.subdivide.a1 = s.value("a1", c.subdivide.a1);
      c.subdivide.a2 = s.value("a2", c.subdivide.a2);
      c.subdivide.step_atoms = s.value("step_atoms", c.subdivide.step_atoms);
      c.subdivide.points = s.value("points", c.subdivide.points);
    }
    if (j.contains("duality")) {
      const Json& s = j["duality"];
      detail::reject_unknown(s, {"p_conj", "q_conj", "polymers", "atoms_per_polymer", "c0"}, "duality");
      c.duality.p_conj = s.value("p_conj", c.duality.p_conj);
      c.duality.q_conj = s.value("q_conj", c.duality.q_conj);
      c.duality.polymers = s.value("polymers", c.duality.polymers);
      c.duality.atoms_per_polymer = s.value("atoms_per_polymer", c.duality.atoms_per_polymer);
      c.duality.c0 = s.value("c0", c.duality.c0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  require(c.dimension >= 1 && c.dimension <= 3, "dimension must be 1, 2 or 3");
  require(c.depth >= 1, "depth must be >= 1");
  require(c.a > 0.0 && std::isfinite(c.a), "a must be positive");
  require(std::isfinite(c.p) && std::isfinite(c.q), "p and q must be finite");
  require(!c.fields.empty(), "fields must not be empty");
  for (const std::string& id : c.fields) {
    const auto ids = corpus_ids();
    require(std::find(ids.begin(), ids.end(), id) != ids.end(), "unknown field '" + id + "'");
  }
  for (std::size_t i = 0; i < c.sigmas.size(); ++i)
    require(c.sigmas[i] > 0.0 && (i == 0 || c.sigmas[i] > c.sigmas[i - 1]), "sigmas must be positive and increasing");
  require(!c.p_list.empty(), "p_list must not be empty");
  for (std::size_t i = 0; i < c.p_list.size(); ++i)
    require(c.p_list[i] > 1.0 && (i == 0 || c.p_list[i] > c.p_list[i - 1]), "p_list must exceed 1 and increase");
  for (const auto& [p, q] : c.embed.pairs) require(q >= 1.0 && q < p, "embed pairs need 1 <= q < p");
  require(c.embed.cells >= 1, "embed.cells must be >= 1");
  require(c.embed.slack >= 0.0, "embed.slack must be >= 0");
  if (c.subdivide.a1 == 0.0) c.subdivide.a1 = 2.0 * std::sqrt(static_cast<double>(c.dimension));
  require(c.subdivide.a2 > 0.0 && c.subdivide.a2 < c.subdivide.a1, "subdivide needs 0 < a2 < a1");

  const bool jn_run = command == "jnp" || command == "bmo" || command == "jn-tail" || command == "p-scan" ||
                      command == "duality";
  if (jn_run) require(c.q >= 1.0 && c.q < c.p, "JN runs need 1 <= q < p");
  if (command == "duality") {
    require(c.q > 1.0, "duality runs need q > 1");
    if (c.duality.p_conj == 0.0) c.duality.p_conj = conjugate(c.p);
    if (c.duality.q_conj == 0.0) c.duality.q_conj = conjugate(c.q);
    require(are_conjugate(c.p, c.duality.p_conj, 1e-12), "duality: p_conj is not the conjugate of p");
    require(are_conjugate(c.q, c.duality.q_conj, 1e-12), "duality: q_conj is not the conjugate of q");
    require(c.duality.atoms_per_polymer >= 1, "duality.atoms_per_polymer must be >= 1");
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, command);
}

// --- runs ---------------------------------------------------------------------

struct Check {
  std::string name;
  bool holds = true;
  std::string detail;
};

struct RunResult {
  std::vector<Check> checks;
  std::vector<std::string> files;  // relative to the output directory
  Json summary = Json::object();

  bool all_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.holds; });
  }
};

struct RunContext {
  const ExperimentConfig& config;
  std::filesystem::path out;
  int verbosity = 1;
  RunResult result;

  void check(std::string name, bool holds, std::string detail = "") {
    if (verbosity >= 2) std::cerr << (holds ? "  ok   " : "  FAIL ") << name << " " << detail << "\n";
    result.checks.push_back({std::move(name), holds, std::move(detail)});
  }
  void write(const std::string& name, const std::string& text) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    f << text;
    result.files.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }
  void log(const std::string& msg) const {
    if (verbosity >= 2) std::cerr << msg << "\n";
  }
};

namespace detail {

inline std::string num(double v) { return csv_number(v); }

inline CandidateSet candidates(const ExperimentConfig& c) {
  return covering_candidates(build_covering(c.depth, c.dimension), c.subdivision_depth)
      .with_parameter(Admissibility(c.a));
}

/// Cube admissible for a: centre uniform in [-3, 3]^d, side a m(c) u with u in [lo, 1].
inline Cube random_admissible_cube(std::size_t d, double a, double lo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-3.0, 3.0), frac(lo, 1.0);
  Point c(d);
  for (double& x : c) x = pos(rng);
  return Cube(c, a * admissibility_m(c) * frac(rng));
}

}  // namespace detail

inline void run_covering(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Covering cov = build_covering(c.depth, c.dimension);
  ctx.write_json("covering.json", covering_to_json(cov));
  const CoverageReport rep = verify_coverage(cov, c.samples);
  ctx.check("coverage", rep.uncovered == 0,
            std::to_string(rep.uncovered) + " of " + std::to_string(rep.samples) + " points uncovered");
  const auto stats = layer_statistics(cov);
  bool adm = is_admissible(cov.layers.front().cubes.front(), Admissibility(cov.admissibility_bound()));
  bool window = true;
  Json layers = Json::array();
  for (const LayerStats& s : stats) {
    adm = adm && s.admissible;
    if (s.k >= 2) window = window && s.side_window;
    Json l;
    l["layer"] = s.k;
    l["count"] = s.count;
    l["count_ratio"] = s.count_ratio;
    l["admissible"] = s.admissible;
    l["side_window"] = s.side_window;
    l["center_constant"] = s.center_constant;
    layers.push_back(std::move(l));
  }
  ctx.check("admissible", adm, "A_d = " + detail::num(cov.admissibility_bound()));
  ctx.check("side_window", window, "m(c) <= side <= A_d m(c) on layers k >= 2");
  if (stats.size() > 3) ctx.check("layer_ratio_plateau", layer_ratio_plateaued(stats), "#L_k / k^(d-1)");
  // chain lengths on layers with m(c) <= side
  bool chains = true;
  std::size_t longest = 0;
  for (std::size_t k = 2; k < cov.layers.size(); ++k)
    for (const Cube& q : cov.layers[k].cubes) {
      const double dd = static_cast<double>(c.dimension);
      const double big_d = norm(q.center) / std::sqrt(dd);
      const std::size_t steps = k_chain(q).steps();
      longest = std::max(longest, steps);
      chains = chains && static_cast<double>(steps) <= 4.0 * big_d * big_d * dd;
    }
  if (cov.layers.size() > 2) ctx.check("chain_length", chains, "longest chain " + std::to_string(longest));
  Json report;
  report["dimension"] = c.dimension;
  report["depth"] = c.depth;
  report["cubes"] = cov.cube_count();
  report["samples"] = rep.samples;
  report["uncovered"] = rep.uncovered;
  report["max_overlap"] = rep.max_overlap;
  report["layers"] = std::move(layers);
  ctx.write_json("covering_report.json", report);
  ctx.result.summary["cubes"] = cov.cube_count();
}

inline void run_jnp(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const CandidateSet cs = detail::candidates(c);
  Json out = Json::array();
  for (const std::string& id : c.fields) {
    ctx.log("jnp " + id);
    const ScalarField f = corpus_field(id, c.dimension);
    const JnpEstimate e = maximize_jnp(f, cs, c.p, c.q, ctx.config.quadrature);
    Json j;
    j["field"] = id;
    j["estimate"] = estimate_to_json(e, c.a, c.quadrature);
    out.push_back(std::move(j));
    ctx.check("jnp_finite[" + id + "]", std::isfinite(e.value) && e.value >= 0.0, "value " + detail::num(e.value));
    ctx.result.summary["values"][id] = e.value;
  }
  ctx.write_json("jnp.json", out);
}

inline void run_bmo(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const CandidateSet cs = detail::candidates(c);
  Json out = Json::array();
  for (const std::string& id : c.fields) {
    ctx.log("bmo " + id);
    const ScalarField f = corpus_field(id, c.dimension);
    const BmoEstimate b = bmo_norm_estimate(f, Admissibility(c.a), cs, c.quadrature);
    const JnpEstimate e = maximize_jnp(f, cs, c.p, 1.0, c.quadrature);
    Json j;
    j["field"] = id;
    j["bmo"] = bmo_to_json(b, c.a, c.quadrature);
    j["jn_norm_estimate"] = e.value + b.l1.value;
    out.push_back(std::move(j));
    ctx.check("bmo_finite[" + id + "]", std::isfinite(b.value), "value " + detail::num(b.value));
    ctx.check("jn_below_bmo[" + id + "]", e.value <= b.sup_oscillation * (1.0 + 1e-12) + 1e-15,
              detail::num(e.value) + " <= " + detail::num(b.sup_oscillation));
    ctx.result.summary["values"][id] = b.value;
  }
  ctx.write_json("bmo.json", out);
}

inline void run_jn_tail(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const CandidateSet cs = detail::candidates(c);
  const Covering cov = build_covering(c.depth, c.dimension);
  const std::vector<Cube> cubes = cov.cubes();
  const std::vector<double> sigmas = c.sigma_grid();
  for (const std::string& id : c.fields) {
    ctx.log("jn-tail " + id);
    const ScalarField f = corpus_field(id, c.dimension);
    const double k_hat = maximize_jnp(f, cs, c.p, c.q, c.quadrature).value;
    if (!(k_hat > 0.0)) {
      ctx.result.summary["max_c"][id] = nullptr;
      ctx.log("  family estimate is 0, nothing to fit");
      continue;
    }
    const TailSweep sweep = jn_tail_sweep(f, cubes, c.p, sigmas, k_hat, c.quadrature);
    ctx.write("jn_tail_" + id + ".csv", tail_sweep_csv(id, cubes, sweep));
    ctx.check("tail_constant_finite[" + id + "]", std::isfinite(sweep.max_c),
              "max c " + detail::num(sweep.max_c) + " over " + std::to_string(sweep.used) + " cubes");
    ctx.result.summary["max_c"][id] = sweep.max_c;
  }
}

inline void run_p_scan(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const CandidateSet cs = detail::candidates(c);
  for (const std::string& id : c.fields) {
    ctx.log("p-scan " + id);
    const ScalarField f = corpus_field(id, c.dimension);
    const auto rows = p_limit_scan(f, Admissibility(c.a), cs, c.p_list, c.quadrature);
    ctx.write("p_scan_" + id + ".csv", p_scan_csv(rows));
    bool below = true, monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      below = below && rows[i].norm_estimate <= rows[i].bmo_estimate * (1.0 + 1e-12) + 1e-15;
      if (i > 0) monotone = monotone && rows[i].jn_value >= rows[i - 1].jn_value - 1e-6;
    }
    ctx.check("jn_below_bmo[" + id + "]", below);
    ctx.check("nondecreasing_in_p[" + id + "]", monotone);
  }
}

inline void run_embed(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  std::mt19937_64 rng(c.seed);
  CsvWriter w({"p", "q", "index", "center", "side", "lq_norm", "weak_lp_norm", "bound", "holds"});
  for (const auto& [p, q] : c.embed.pairs) {
    bool all = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < c.embed.functions; ++i) {
      const Cube cube = detail::random_admissible_cube(c.dimension, c.a, 0.1, rng);
      const ScalarField g = step_field(random_step_table(cube, c.embed.cells, rng));
      const double lhs = lq_norm(g, cube, q, c.quadrature);
      const double weak = weak_lp_norm(g, cube, p, c.quadrature);
      const double bound = std::pow(p / (p - q), 1.0 / q) * std::pow(gaussian_measure(cube), 1.0 / q - 1.0 / p) *
                           weak * (1.0 + c.embed.slack);
      const bool holds = lhs <= bound;
      all = all && holds;
      if (bound > 0.0) worst = std::max(worst, lhs / bound);
      w.row({detail::num(p), detail::num(q), std::to_string(i), center_text(cube), detail::num(cube.side),
             detail::num(lhs), detail::num(weak), detail::num(bound), holds ? "1" : "0"});
    }
    ctx.check("weak_embedding[p=" + detail::num(p) + ",q=" + detail::num(q) + "]", all,
              "max lhs/bound " + detail::num(worst));
  }
  ctx.write("embed.csv", w.str());
}

inline void run_subdivide(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const SubdivideConfig& s = c.subdivide;
  std::mt19937_64 rng(c.seed);
  const QuadratureSpec& spec = c.quadrature;
  std::vector<Atom> atoms;
  for (const std::string& id : c.fields) {
    const Cube cube = detail::random_admissible_cube(c.dimension, s.a1, 0.5, rng);
    const ScalarField f = corpus_field(id, c.dimension);
    if (is_constant_on(f, cube, spec)) continue;
    atoms.push_back(make_atom(f, cube, 2.0, spec));
  }
  for (std::size_t i = 0; i < s.step_atoms; ++i) {
    const Cube cube = detail::random_admissible_cube(c.dimension, s.a1, 0.5, rng);
    atoms.push_back(make_step_atom(random_step_table(cube, 3, rng), cube, 2.0, spec));
  }
  Json out = Json::array();
  for (const Atom& atom : atoms) {
    ctx.log("subdivide " + atom.b.id);
    const SubdivisionResult r = subdivide_atom(atom, s.a1, s.a2, spec);
    const double residual = reconstruction_residual(atom, r.atoms, uniform_points(atom.cube, s.points, rng));
    double max_mean = 0.0;
    bool admissible = true;
    for (const Atom& piece : r.atoms) {
      max_mean = std::max(max_mean, std::abs(gauss_average(piece.b, piece.cube, spec)));
      admissible = admissible && is_admissible(piece.cube, Admissibility(s.a2));
    }
    const std::string tag = "[" + atom.b.id + "]";
    ctx.check("depth_within_bound" + tag, r.depth_used <= r.depth_bound,
              std::to_string(r.depth_used) + " <= " + std::to_string(r.depth_bound));
    ctx.check("pieces_admissible" + tag, admissible);
    ctx.check("reconstruction" + tag, residual <= 1e-9, "residual " + detail::num(residual));
    ctx.check("zero_means" + tag, max_mean <= 1e-10, "max |mean| " + detail::num(max_mean));
    Json j;
    j["atom"] = atom.b.id;
    j["cube"] = to_json(atom.cube);
    j["depth_bound"] = r.depth_bound;
    j["depth_used"] = r.depth_used;
    j["pieces"] = r.atoms.size();
    j["splits"] = r.splits;
    j["doubling_constant"] = r.doubling_constant;
    j["norm_ratio"] = r.norm_ratio;
    j["max_lambda_sum"] = r.max_lambda_sum;
    j["residual"] = residual;
    j["max_mean"] = max_mean;
    out.push_back(std::move(j));
  }
  ctx.write_json("subdivide.json", out);
}

inline void run_duality(RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const DualityConfig& dc = c.duality;
  const QuadratureSpec& spec = c.quadrature;
  std::mt19937_64 rng(c.seed);
  const CandidateSet cs = detail::candidates(c);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (cs.selectable[i]) usable.push_back(i);
  if (usable.empty()) throw std::runtime_error("duality: no candidate cube is admissible for a");

  std::vector<Polymer> polys;
  for (std::size_t k = 0; k < dc.polymers; ++k) {
    Polymer poly;
    poly.p = dc.p_conj;
    poly.q = dc.q_conj;
    poly.a = c.a;
    std::vector<std::size_t> order = usable;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      if (poly.atoms.size() == dc.atoms_per_polymer) break;
      const Cube& q = cs.cubes[idx];
      bool free = true;
      for (const Atom& a : poly.atoms) free = free && !a.cube.intersects(q);
      if (!free) continue;
      poly.atoms.push_back(make_step_atom(random_step_table(q, 3, rng), q, dc.q_conj, spec));
    }
    polys.push_back(std::move(poly));
  }
  const HardyElement g = make_hardy_element(dc.c0, polys, spec);
  ctx.write_json("hardy_element.json", hardy_to_json(g));

  bool domination = true;
  for (const Polymer& poly : polys) {
    const double lp = polymer_lp_norm(poly, spec), pn = polymer_norm(poly, spec);
    domination = domination && lp <= pn * (1.0 + 1e-12) + spec.abs_tol;
  }
  ctx.check("lp_norm_below_polymer_norm", domination);

  const std::vector<double> schedule = default_truncation_schedule();
  Json out = Json::array();
  for (const std::string& id : c.fields) {
    ctx.log("duality " + id);
    const ScalarField f = corpus_field(id, c.dimension);
    const DualityReport rep = duality_check(f, c.p, c.q, polys, spec);
    const double jn = maximize_jnp(f, cs, c.p, c.q, spec).value;
    const PairingReport pr = pairing(f, g, schedule, spec, jn);
    const double direct = direct_pairing(f, g, spec);
    std::size_t atom_ok = 0;
    for (const AtomCheck& a : rep.atoms) atom_ok += a.holds ? 1 : 0;
    ctx.check("atom_hoelder[" + id + "]", atom_ok == rep.atoms.size(),
              std::to_string(atom_ok) + " of " + std::to_string(rep.atoms.size()));
    bool poly_ok = true;
    for (const PolymerCheck& p : rep.polymers) poly_ok = poly_ok && p.holds;
    ctx.check("aggregated_bound[" + id + "]", poly_ok, "min slack " + detail::num(rep.min_slack));
    if (pr.converged)
      ctx.check("pairing_limit[" + id + "]", std::abs(pr.value - direct) <= 1e-8,
                detail::num(pr.value) + " vs direct " + detail::num(direct));
    Json j;
    j["field"] = id;
    j["atoms_checked"] = rep.atoms.size();
    j["atoms_holding"] = atom_ok;
    j["total_lhs"] = rep.total_lhs;
    j["total_rhs"] = rep.total_rhs;
    j["min_slack"] = rep.min_slack;
    j["jn_estimate"] = jn;
    j["pairing"] = pr.converged ? Json(pr.value) : Json(nullptr);
    j["pairing_status"] = pr.converged ? "converged" : "inconclusive";
    j["pairing_levels"] = pr.truncation_levels.size();
    j["pairing_atom_error"] = pr.atom_error_bounds.empty() ? 0.0 : pr.atom_error_bounds.back();
    j["pairing_bound_rhs"] = pr.bound_rhs;
    j["direct"] = direct;
    out.push_back(std::move(j));
  }
  ctx.write_json("duality.json", out);
}

inline const std::map<std::string, std::function<void(RunContext&)>>& subcommands() {
  static const std::map<std::string, std::function<void(RunContext&)>> table{
      {"covering", run_covering}, {"jnp", run_jnp},         {"bmo", run_bmo},
      {"jn-tail", run_jn_tail},   {"p-scan", run_p_scan},   {"embed", run_embed},
      {"subdivide", run_subdivide}, {"duality", run_duality}};
  return table;
}

/// Runs one subcommand, writing its reports and summary.json into `out`.
inline RunResult run(const std::string& command, const ExperimentConfig& config, const std::filesystem::path& out,
                     int verbosity = 1) {
  const auto& table = subcommands();
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown subcommand '" + command + "'");
  std::filesystem::create_directories(out);
  RunContext ctx{config, out, verbosity, {}};
  it->second(ctx);
  Json summary;
  summary["command"] = command;
  summary["seed"] = config.seed;
  summary["all_hold"] = ctx.result.all_hold();
  Json checks = Json::array();
  for (const Check& ch : ctx.result.checks) {
    Json cj;
    cj["name"] = ch.name;
    cj["holds"] = ch.holds;
    cj["detail"] = ch.detail;
    checks.push_back(std::move(cj));
  }
  summary["checks"] = std::move(checks);
  summary["files"] = ctx.result.files;
  for (auto jt = ctx.result.summary.begin(); jt != ctx.result.summary.end(); ++jt) summary[jt.key()] = jt.value();
  ctx.result.summary = summary;
  std::ofstream(out / "summary.json", std::ios::binary) << summary.dump(2) << "\n";
  return ctx.result;
}

}  // namespace gjn::cli
