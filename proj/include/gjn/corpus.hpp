#pragma once

// Built-in test fields and piecewise-constant (step) fields on axis grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gjn/fields.hpp"
#include "gjn/geometry.hpp"

namespace gjn {

inline ScalarField constant_field(double c) {
  ScalarField f;
  f.id = "constant";
  f.description = "f(x) = " + std::to_string(c);
  f.eval = [c](std::span<const double>) { return c; };
  f.cellwise_constant = true;
  f.growth_const = std::abs(c);
  return f;
}

/// Identifier -> field for a given dimension; std::out_of_range for unknown ids.
inline ScalarField corpus_field(const std::string& id, std::size_t d) {
  if (d < 1) throw std::invalid_argument("corpus_field: dimension must be >= 1");
  ScalarField f;
  f.id = id;
  if (id == "constant") {
    f = constant_field(1.0);
  } else if (id == "x1") {
    f.description = "first coordinate x_1";
    f.eval = [](std::span<const double> x) { return x[0]; };
    f.growth_const = 0.5;  // |t| <= 1/2 + t^2/2
    f.growth_quadratic = 0.5;
  } else if (id == "norm2") {
    f.description = "|x|^2";
    f.eval = [](std::span<const double> x) { return norm2(x); };
    f.growth_quadratic = 1.0;
  } else if (id == "sign") {
    f.description = "sign(x_1)";
    f.breaks = AxisBreaks(1, {0.0});
    f.eval = [](std::span<const double> x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); };
    f.cellwise_constant = true;
    f.growth_const = 1.0;
  } else if (id == "log_radial") {
    f.description = "log(1/m(x)) = log max(1, |x|)";
    if (d == 1)
      f.breaks = AxisBreaks(1, {-1.0, 1.0});
    else
      f.kinks.push_back([](std::span<const double> x) { return norm2(x) - 1.0; });
    f.eval = [](std::span<const double> x) { return 0.5 * std::log(std::max(1.0, norm2(x))); };
    f.growth_quadratic = 0.5;  // log r <= r^2 / 2
  } else if (id == "log_abs_x1") {
    f.description = "log |x_1|";
    f.singular_set = "x_1 = 0";
    f.breaks = AxisBreaks(1, {0.0});
    f.eval = [](std::span<const double> x) { return std::log(std::abs(x[0])); };
    f.growth_const = 1.07;  // one-axis Gaussian mean of |log|t|| is 1.0627
    f.growth_quadratic = 1.0;
  } else if (id == "heavy_x1") {
    f.description = "|x_1|^(-1/3)";
    f.singular_set = "x_1 = 0";
    f.breaks = AxisBreaks(1, {0.0});
    f.eval = [](std::span<const double> x) { return std::pow(std::abs(x[0]), -1.0 / 3.0); };
    f.growth_const = 1.52;  // one-axis Gaussian mean 1.5114
  } else {
    throw std::out_of_range("unknown corpus field '" + id + "'");
  }
  f.id = id;
  return f;
}

inline std::vector<std::string> corpus_ids() {
  return {"constant", "x1", "norm2", "sign", "log_radial", "log_abs_x1", "heavy_x1"};
}

/// Piecewise-constant function on the cells of a tensor grid, zero off the
/// grid. Values are row-major over cells (last axis fastest).
struct StepTable {
  std::vector<std::vector<double>> edges;  // per axis, strictly increasing, >= 2 entries
  std::vector<double> values;

  std::size_t dim() const { return edges.size(); }

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& e : edges) n *= e.size() - 1;
    return n;
  }

  void validate() const {
    if (edges.empty()) throw std::invalid_argument("step table needs at least one axis");
    for (const auto& e : edges) {
      if (e.size() < 2) throw std::invalid_argument("step table axis needs >= 2 edges");
      for (std::size_t i = 1; i < e.size(); ++i)
        if (!(e[i] > e[i - 1])) throw std::invalid_argument("step table edges must increase");
    }
    if (values.size() != cell_count()) throw std::invalid_argument("step table value count mismatch");
  }

  /// Cell index, or cell_count() when x is outside the open grid box.
  std::size_t locate(std::span<const double> x) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      if (!(x[i] > e.front() && x[i] < e.back())) return cell_count();
      const auto j = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x[i]) - e.begin()) - 1;
      idx = idx * (e.size() - 1) + j;
    }
    return idx;
  }

  double operator()(std::span<const double> x) const {
    const std::size_t c = locate(x);
    return c == cell_count() ? 0.0 : values[c];
  }

  /// Box of the cell with row-major index c.
  Box cell_box(std::size_t c) const {
    Box b;
    b.lo.resize(dim());
    b.hi.resize(dim());
    for (std::size_t i = dim(); i-- > 0;) {
      const std::size_t n = edges[i].size() - 1;
      const std::size_t j = c % n;
      c /= n;
      b.lo[i] = edges[i][j];
      b.hi[i] = edges[i][j + 1];
    }
    return b;
  }
};

inline ScalarField step_field(const StepTable& table, std::string id = "step") {
  table.validate();
  ScalarField f;
  f.id = std::move(id);
  f.description = "piecewise constant on a " + std::to_string(table.cell_count()) + "-cell grid";
  f.breaks = table.edges;
  f.eval = [table](std::span<const double> x) { return table(x); };
  f.cellwise_constant = true;
  for (double v : table.values) f.growth_const = std::max(f.growth_const, std::abs(v));
  return f;
}

/// Step table on a cube with `cells` random cells per axis and values uniform
/// in [-1, 1]; interior edges are sorted uniform draws.
inline StepTable random_step_table(const Cube& q, std::size_t cells, std::mt19937_64& rng) {
  if (cells < 1) throw std::invalid_argument("random_step_table: need >= 1 cell per axis");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  StepTable t;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    std::vector<double> e{q.lower(i), q.upper(i)};
    for (std::size_t j = 1; j < cells; ++j) e.push_back(q.lower(i) + q.side * (0.02 + 0.96 * unit(rng)));
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    t.edges.push_back(std::move(e));
  }
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  t.values.resize(t.cell_count());
  for (double& v : t.values) v = val(rng);
  return t;
}

}  // namespace gjn
