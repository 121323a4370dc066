#pragma once

// JSON and CSV reports. JSON objects keep insertion order; doubles are written
// in shortest round-trip form. CSV follows RFC 4180 (CRLF, quoted fields where
// needed) with numbers at 17 significant digits.

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gjn/corpus.hpp"
#include "gjn/covering.hpp"
#include "gjn/hardy.hpp"
#include "gjn/jnp.hpp"

namespace gjn {

using Json = nlohmann::ordered_json;

// --- primitives ---------------------------------------------------------------

inline Json to_json(const Cube& q) {
  Json j;
  j["center"] = q.center;
  j["side"] = q.side;
  return j;
}

inline Cube cube_from_json(const Json& j) {
  return Cube(j.at("center").get<Point>(), j.at("side").get<double>());
}

inline Json to_json(const QuadratureSpec& s) {
  Json j;
  j["nodes_per_axis"] = s.nodes_per_axis;
  j["refinement_levels"] = s.refinement_levels;
  j["abs_tol"] = s.abs_tol;
  return j;
}

inline QuadratureSpec quadrature_spec_from_json(const Json& j) {
  QuadratureSpec s;
  s.nodes_per_axis = j.value("nodes_per_axis", s.nodes_per_axis);
  s.refinement_levels = j.value("refinement_levels", s.refinement_levels);
  s.abs_tol = j.value("abs_tol", s.abs_tol);
  s.validate();
  return s;
}

inline Json to_json(const StepTable& t) {
  Json j;
  j["edges"] = t.edges;
  j["values"] = t.values;
  return j;
}

inline StepTable step_table_from_json(const Json& j) {
  StepTable t;
  t.edges = j.at("edges").get<std::vector<std::vector<double>>>();
  t.values = j.at("values").get<std::vector<double>>();
  t.validate();
  return t;
}

// --- coverings ----------------------------------------------------------------

/// [{layer, center, side}] ordered by layer, then center.
inline Json covering_to_json(const Covering& cov) {
  struct Row {
    std::size_t layer;
    const Cube* cube;
  };
  std::vector<Row> rows;
  for (const Layer& l : cov.layers)
    for (const Cube& q : l.cubes) rows.push_back({l.index, &q});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    if (x.layer != y.layer) return x.layer < y.layer;
    return lexicographic_less(*x.cube, *y.cube);
  });
  Json out = Json::array();
  for (const Row& r : rows) {
    Json j;
    j["layer"] = r.layer;
    j["center"] = r.cube->center;
    j["side"] = r.cube->side;
    out.push_back(std::move(j));
  }
  return out;
}

// --- corpus -------------------------------------------------------------------

inline Json corpus_manifest(std::size_t d) {
  Json out = Json::array();
  for (const std::string& id : corpus_ids()) {
    const ScalarField f = corpus_field(id, d);
    Json j;
    j["id"] = id;
    j["description"] = f.description;
    j["dimension"] = f.dimension == 0 ? d : f.dimension;
    j["singular_set"] = f.singular_set;
    out.push_back(std::move(j));
  }
  return out;
}

// --- estimates ----------------------------------------------------------------

inline Json estimate_to_json(const JnpEstimate& e, double a, const QuadratureSpec& spec) {
  Json j;
  j["p"] = e.p;
  j["q"] = e.q;
  j["a"] = a;
  j["value"] = e.value;
  j["method"] = to_string(e.method);
  Json fam = Json::array();
  for (std::size_t i = 0; i < e.family.size(); ++i) {
    Json c = to_json(e.family.cubes()[i]);
    c["index"] = e.indices[i];
    c["oscillation"] = e.oscillations[i];
    fam.push_back(std::move(c));
  }
  j["family"] = std::move(fam);
  j["quadrature"] = to_json(spec);
  return j;
}

inline Json bmo_to_json(const BmoEstimate& b, double a, const QuadratureSpec& spec) {
  Json j;
  j["a"] = a;
  j["value"] = b.value;
  j["sup_oscillation"] = b.sup_oscillation;
  j["l1_norm"] = b.l1.value;
  j["l1_tail_slack"] = b.l1.tail_slack;
  j["quadrature"] = to_json(spec);
  return j;
}

// --- CSV ----------------------------------------------------------------------

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { write_row(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::invalid_argument("csv: row width does not match header");
    write_row(cells);
  }

  std::string str() const { return out_.str(); }

 private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << csv_field(cells[i]);
    out_ << "\r\n";
  }

  std::size_t columns_;
  std::ostringstream out_;
};

inline std::string p_scan_csv(const std::vector<PScanRow>& rows) {
  CsvWriter w({"p", "jn_value", "norm_estimate", "bmo_estimate", "gap"});
  for (const PScanRow& r : rows)
    w.row({csv_number(r.p), csv_number(r.jn_value), csv_number(r.norm_estimate), csv_number(r.bmo_estimate),
           csv_number(r.gap)});
  return w.str();
}

inline std::string center_text(const Cube& q) {
  std::string out;
  for (std::size_t k = 0; k < q.center.size(); ++k) out += (k ? " " : "") + csv_number(q.center[k]);
  return out;
}

/// One row per cube of a sweep; skipped cubes carry empty fit columns.
inline std::string tail_sweep_csv(const std::string& field_id, const std::vector<Cube>& cubes,
                                  const TailSweep& sweep) {
  CsvWriter w({"field", "cube_index", "center", "side", "skipped", "exponent", "c_estimate"});
  for (const TailSweepRow& r : sweep.rows) {
    const Cube& q = cubes.at(r.cube_index);
    w.row({field_id, std::to_string(r.cube_index), center_text(q), csv_number(q.side), r.skipped ? "1" : "0",
           r.skipped ? "" : csv_number(r.exponent), r.skipped ? "" : csv_number(r.c_estimate)});
  }
  return w.str();
}

inline std::string profile_csv(const DistributionProfile& prof) {
  CsvWriter w({"sigma", "tail"});
  for (std::size_t i = 0; i < prof.sigmas.size(); ++i)
    w.row({csv_number(prof.sigmas[i]), csv_number(prof.tail_values[i])});
  return w.str();
}

// --- Hardy elements -----------------------------------------------------------

/// Atom as {cube, q, offset, field_id} or {cube, q, offset, table}: the atom is
/// (source - offset) on the cube. Tables list per-axis edges and row-major
/// cell values, last axis fastest.
inline Json atom_to_json(const Atom& a) {
  if (!a.source) throw std::invalid_argument("atom has no recorded source and cannot be serialized");
  Json j;
  j["cube"] = to_json(a.cube);
  j["q"] = a.q_exponent;
  j["offset"] = a.source->offset;
  if (a.source->table)
    j["table"] = to_json(*a.source->table);
  else
    j["field_id"] = a.source->field_id;
  return j;
}

inline Atom atom_from_json(const Json& j) {
  const Cube q = cube_from_json(j.at("cube"));
  const double qe = j.at("q").get<double>();
  if (!(qe > 1.0)) throw std::invalid_argument("atom exponent must be > 1");
  const double offset = j.at("offset").get<double>();
  AtomSource src;
  src.offset = offset;
  ScalarField f;
  if (j.contains("table")) {
    src.table = step_table_from_json(j.at("table"));
    if (src.table->dim() != q.dim()) throw std::invalid_argument("atom table dimension mismatch");
    f = step_field(*src.table);
  } else {
    src.field_id = j.at("field_id").get<std::string>();
    f = corpus_field(src.field_id, q.dim());
  }
  ScalarField shifted = f;
  shifted.eval = [g = f.eval, offset](std::span<const double> x) { return g(x) - offset; };
  Atom a{q, restrict_to(shifted, q), qe, std::move(src)};
  a.b.id = "atom(" + f.id + ")";
  return a;
}

inline Json hardy_to_json(const HardyElement& g) {
  Json j;
  j["c0"] = g.c0;
  Json polys = Json::array();
  for (const Polymer& p : g.polymers) {
    Json pj;
    pj["p"] = p.p;
    pj["q"] = p.q;
    pj["a"] = p.a;
    Json atoms = Json::array();
    for (const Atom& a : p.atoms) atoms.push_back(atom_to_json(a));
    pj["atoms"] = std::move(atoms);
    polys.push_back(std::move(pj));
  }
  j["polymers"] = std::move(polys);
  return j;
}

/// Rebuilds the element, validating every polymer and atom mean.
inline HardyElement hardy_from_json(const Json& j, const QuadratureSpec& spec) {
  std::vector<Polymer> polys;
  for (const Json& pj : j.at("polymers")) {
    Polymer p;
    p.p = pj.at("p").get<double>();
    p.q = pj.at("q").get<double>();
    p.a = pj.at("a").get<double>();
    for (const Json& aj : pj.at("atoms")) {
      Atom a = atom_from_json(aj);
      check_atom_mean(a, spec);
      p.atoms.push_back(std::move(a));
    }
    p.validate();
    polys.push_back(std::move(p));
  }
  return make_hardy_element(j.at("c0").get<double>(), std::move(polys), spec);
}

}  // namespace gjn
