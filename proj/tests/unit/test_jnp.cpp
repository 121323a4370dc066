#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gjn/corpus.hpp"
#include "gjn/jnp.hpp"
#include "oracles.hpp"

using namespace gjn;

namespace {

const QuadratureSpec kSpec{6, 8, 1e-10};
const double kErf1 = 0.8427007929497149;

bool is_ancestor(const std::vector<int>& parent, std::size_t a, std::size_t b) {
  for (int p = parent[b]; p != -1; p = parent[static_cast<std::size_t>(p)])
    if (static_cast<std::size_t>(p) == a) return true;
  return false;
}

}  // namespace

TEST(CubeFamily, Validation) {
  const Admissibility a(2.0);
  EXPECT_NO_THROW(CubeFamily({Cube({-0.5}, 1.0), Cube({0.5}, 1.0)}, a));  // touching is disjoint
  EXPECT_THROW(CubeFamily({Cube({-0.4}, 1.0), Cube({0.5}, 1.0)}, a), std::invalid_argument);
  EXPECT_THROW(CubeFamily({Cube({3.0}, 1.0)}, a), std::invalid_argument);
  EXPECT_THROW(CubeFamily({Cube({0.0}, 1.0), Cube({0.0, 3.0}, 0.1)}, a), std::invalid_argument);
}

TEST(CandidateSet, DyadicChildrenTileTheirParent) {
  for (std::size_t d : {1u, 2u, 3u}) {
    const auto cs = CandidateSet::dyadic_forest({Cube(Point(d, 0.0), 2.0)}, 2, Admissibility(2.0));
    const std::size_t k = std::size_t{1} << d;
    EXPECT_EQ(cs.size(), 1 + k + k * k);
    for (std::size_t v = 0; v < cs.size(); ++v) {
      double vol = 0.0;
      std::vector<std::size_t> kids;
      for (std::size_t c = 0; c < cs.size(); ++c)
        if (cs.parent[c] == static_cast<int>(v)) kids.push_back(c);
      if (kids.empty()) continue;
      ASSERT_EQ(kids.size(), k);
      for (std::size_t c : kids) {
        EXPECT_TRUE(cs.cubes[v].contains(cs.cubes[c]));
        vol += lebesgue_measure(cs.cubes[c]);
        for (std::size_t e : kids) EXPECT_FALSE(c != e && cs.cubes[c].intersects(cs.cubes[e]));
      }
      EXPECT_DOUBLE_EQ(vol, lebesgue_measure(cs.cubes[v]));
    }
  }
  EXPECT_THROW(CandidateSet::dyadic_forest({Cube({0.0}, 2.0), Cube({0.5}, 1.0)}, 1, Admissibility(2.0)),
               std::invalid_argument);
}

TEST(CandidateSet, CoveringRootsAreDisjointAndAdmissible) {
  for (std::size_t d : {1u, 2u}) {
    const Covering cov = build_covering(3, d);
    const auto cs = covering_candidates(cov, 1);
    std::size_t roots = 0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (cs.parent[i] != -1) continue;
      ++roots;
      EXPECT_TRUE(cs.selectable[i]);
      for (std::size_t j = 0; j < i; ++j) {
        if (cs.parent[j] == -1) {
          EXPECT_FALSE(cs.cubes[i].intersects(cs.cubes[j]));
        }
      }
    }
    EXPECT_GE(roots, 1u);
  }
}

TEST(JnpSum, Examples) {
  const Admissibility a(2.0);
  const CubeFamily fam({Cube({0.0}, 2.0)}, a);
  EXPECT_EQ(jnp_sum(constant_field(4.0), CubeFamily({Cube({0.0}, 2.0), Cube({1.5}, 1.0)}, a), 2, 1, kSpec), 0.0);
  const ScalarField sign = corpus_field("sign", 1);
  for (double p : {1.5, 2.0, 4.0}) EXPECT_NEAR(jnp_sum(sign, fam, p, 1.0, kSpec), std::pow(kErf1, 1.0 / p), 1e-9);
  const ScalarField x2 = corpus_field("norm2", 1);
  const Cube q({1.2}, 0.6);
  EXPECT_NEAR(jnp_sum(x2, CubeFamily({q}, a), 3.0, 2.0, kSpec),
              std::pow(gaussian_measure(q), 1.0 / 3.0) * oscillation(x2, q, 2.0, kSpec), 1e-12);
  EXPECT_THROW(jnp_sum(sign, fam, 1.0, 1.0, kSpec), std::invalid_argument);
  EXPECT_THROW(jnp_sum(sign, fam, 2.0, 0.5, kSpec), std::invalid_argument);
}

TEST(MaximizeJnp, ConstantFieldGivesZero) {
  const auto cs = CandidateSet::dyadic_forest({Cube({0.0}, 2.0)}, 3, Admissibility(2.0));
  const auto est = maximize_jnp(constant_field(-3.0), cs, 2.0, 1.0, kSpec);
  EXPECT_EQ(est.value, 0.0);
  EXPECT_TRUE(est.family.empty());
}

TEST(MaximizeJnp, DisjointCandidatesAreAllTaken) {
  const ScalarField x1 = corpus_field("x1", 1);
  const auto cs = CandidateSet::pool({Cube({-1.0}, 0.8), Cube({0.5}, 1.0)}, Admissibility(2.0));
  const auto est = maximize_jnp(x1, cs, 2.0, 1.0, kSpec);
  EXPECT_EQ(est.method, SearchMethod::exhaustive);
  EXPECT_EQ(est.indices, (std::vector<std::size_t>{0, 1}));
}

TEST(MaximizeJnp, SignOnDepthTwoTreeMatchesEnumeration) {
  const ScalarField sign = corpus_field("sign", 1);
  const auto cs = CandidateSet::dyadic_forest({Cube({0.0}, 2.0)}, 2, Admissibility(2.0));
  ASSERT_EQ(cs.size(), 7u);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto osc = oscillation_table(sign, cs, 1.0, kSpec);
    std::vector<double> w(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) w[i] = gaussian_measure(cs.cubes[i]) * std::pow(osc[i], p);
    const double ref = oracle::antichain_max_bruteforce(cs.parent, w, cs.selectable);
    const auto est = maximize_jnp(cs, osc, p, 1.0);
    EXPECT_EQ(est.method, SearchMethod::antichain_dp);
    EXPECT_NEAR(std::pow(est.value, p), ref, 1e-14);
    // only the root sees the jump
    EXPECT_EQ(est.indices, (std::vector<std::size_t>{0}));
    EXPECT_NEAR(est.value, std::pow(kErf1, 1.0 / p), 1e-9);
  }
}

TEST(MaximizeJnp, ValueMatchesRecomputedSum) {
  const Covering cov = build_covering(2, 1);
  const auto cs = covering_candidates(cov, 3);
  for (const char* id : {"norm2", "log_radial", "x1"}) {
    const ScalarField f = corpus_field(id, 1);
    for (double q : {1.0, 2.0}) {
      const auto est = maximize_jnp(f, cs, 3.0, q, kSpec);
      EXPECT_NEAR(est.value, jnp_sum(f, est.family, 3.0, q, kSpec), kSpec.abs_tol * 10) << id;
    }
  }
}

TEST(MaximizeJnp, NoSingleSwapImprovesTheDpFamily) {
  const Covering cov = build_covering(2, 1);
  const auto cs = covering_candidates(cov, 4);
  const ScalarField f = corpus_field("norm2", 1);
  const auto osc = oscillation_table(f, cs, 1.0, kSpec);
  for (double p : {2.0, 4.0}) {
    const auto est = maximize_jnp(cs, osc, p, 1.0);
    std::vector<bool> in(cs.size(), false);
    for (std::size_t i : est.indices) in[i] = true;
    auto w = [&](std::size_t i) { return gaussian_measure(cs.cubes[i]) * std::pow(osc[i], p); };
    for (std::size_t v = 0; v < cs.size(); ++v) {
      if (in[v] || !cs.selectable[v]) continue;
      // swapping v in evicts every chosen ancestor or descendant
      double evicted = 0.0;
      for (std::size_t u : est.indices)
        if (is_ancestor(cs.parent, u, v) || is_ancestor(cs.parent, v, u)) evicted += w(u);
      EXPECT_LE(w(v), evicted * (1 + 1e-12)) << "node " << v;
    }
  }
}

TEST(MaximizeJnp, MonotoneInAdmissibilityParameter) {
  const Covering cov = build_covering(3, 1);
  const auto cs = covering_candidates(cov, 3);
  for (const char* id : {"norm2", "sign", "log_radial"}) {
    const ScalarField f = corpus_field(id, 1);
    const auto osc = oscillation_table(f, cs, 1.0, kSpec);
    double prev = -1.0;
    for (double a : {0.25, 0.5, 1.0, 2.0}) {
      const CandidateSet sub = cs.with_parameter(Admissibility(a));
      std::vector<double> o = osc;
      const double v = maximize_jnp(sub, o, 2.0, 1.0).value;
      EXPECT_GE(v, prev) << id << " a=" << a;
      prev = v;
    }
  }
}

TEST(MaximizeJnp, GreedyNeverBeatsExhaustiveAndIsFeasible) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> c(-2.5, 2.5), s(0.1, 1.0), u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Cube> cubes;
    for (int i = 0; i < 12; ++i) cubes.emplace_back(Point{c(rng)}, s(rng));
    std::vector<double> w(cubes.size()), dens(cubes.size());
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
      dens[i] = u(rng);
      w[i] = dens[i] * gaussian_measure(cubes[i]);
      ids.push_back(i);
    }
    const auto g = detail::greedy_with_swaps(cubes, w, dens, ids);
    const auto e = detail::best_independent_set(cubes, w, ids);
    double sg = 0.0, se = 0.0;
    for (std::size_t i : g) {
      sg += w[i];
      for (std::size_t j : g) EXPECT_FALSE(i != j && cubes[i].intersects(cubes[j]));
    }
    for (std::size_t i : e) se += w[i];
    EXPECT_LE(sg, se * (1 + 1e-14));
    EXPECT_GE(sg, 0.5 * se);
  }
}

TEST(MaximizeJnp, LargePoolUsesGreedy) {
  std::vector<Cube> cubes;
  for (int i = 0; i < 20; ++i) cubes.emplace_back(Point{-2.0 + 0.2 * i}, 0.3);
  const auto est = maximize_jnp(corpus_field("x1", 1), CandidateSet::pool(cubes, Admissibility(2.0)), 2.0, 1.0,
                                kSpec);
  EXPECT_EQ(est.method, SearchMethod::greedy);
  EXPECT_GT(est.value, 0.0);
}

TEST(MaximizeJnp, BoundedBySupOscillation) {
  const Covering cov = build_covering(3, 1);
  const auto cs = covering_candidates(cov, 3);
  for (const char* id : {"norm2", "sign", "log_radial", "log_abs_x1"}) {
    const ScalarField f = corpus_field(id, 1);
    const auto osc = oscillation_table(f, cs, 1.0, kSpec);
    const auto bmo = bmo_norm_estimate(cs, osc, Admissibility(cs.a), GlobalIntegral{});
    for (double p : {2.0, 4.0, 8.0}) {
      const auto est = maximize_jnp(cs, osc, p, 1.0);
      double sup = 0.0, mass = 0.0;
      for (std::size_t i = 0; i < est.family.size(); ++i) {
        sup = std::max(sup, est.oscillations[i]);
        mass += gaussian_measure(est.family.cubes()[i]);
      }
      EXPECT_LE(mass, 1.0 + 1e-12);
      EXPECT_LE(est.value, sup * std::pow(mass, 1.0 / p) * (1 + 1e-12)) << id;
      EXPECT_LE(est.value, bmo.sup_oscillation * (1 + 1e-12)) << id;
    }
  }
}

TEST(BmoEstimate, Examples) {
  const auto cs = CandidateSet::dyadic_forest({Cube({0.0}, 2.0)}, 2, Admissibility(2.0));
  const auto c = bmo_norm_estimate(constant_field(-2.5), Admissibility(2.0), cs, kSpec);
  EXPECT_NEAR(c.value, 2.5, c.l1.tail_slack + 1e-12);
  EXPECT_EQ(c.sup_oscillation, 0.0);
  const auto s = bmo_norm_estimate(corpus_field("sign", 1), Admissibility(2.0), cs, kSpec);
  EXPECT_NEAR(s.sup_oscillation, 1.0, 1e-9);
  EXPECT_NEAR(s.value, 2.0, s.l1.tail_slack + 1e-9);
  EXPECT_EQ(s.argmax, 0u);
}

TEST(BmoEstimate, SquareNormStableUnderCandidateRefinement) {
  const ScalarField f = corpus_field("norm2", 1);
  const Covering cov = build_covering(3, 1);
  const double coarse = bmo_norm_estimate(f, Admissibility(2.0), covering_candidates(cov, 3), kSpec).value;
  const double fine = bmo_norm_estimate(f, Admissibility(2.0), covering_candidates(cov, 4), kSpec).value;
  EXPECT_TRUE(std::isfinite(coarse));
  EXPECT_NEAR(fine / coarse, 1.0, 0.02);
}

TEST(PLimitScan, ConstantField) {
  const auto cs = CandidateSet::dyadic_forest({Cube({0.0}, 2.0)}, 2, Admissibility(2.0));
  const double ps[] = {2.0, 4.0};
  for (const auto& r : p_limit_scan(constant_field(3.0), Admissibility(2.0), cs, ps, kSpec)) {
    EXPECT_EQ(r.jn_value, 0.0);
    EXPECT_NEAR(r.norm_estimate, 3.0, 1e-8);
  }
}

TEST(PLimitScan, SingleCubeClosedForm) {
  const Cube q({0.5}, 1.0);
  const auto cs = CandidateSet::pool({q}, Admissibility(2.0));
  const ScalarField f = corpus_field("x1", 1);
  const double ps[] = {2.0, 4.0, 8.0, 16.0, 32.0};
  const auto rows = p_limit_scan(f, Admissibility(2.0), cs, ps, kSpec);
  const double osc = oscillation(f, q, 1.0, kSpec);
  const double l1 = global_l1_norm(f, 1, kSpec).value;
  EXPECT_NEAR(l1, 1.0 / std::sqrt(std::numbers::pi), 1e-8);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].norm_estimate, l1 + std::pow(gaussian_measure(q), 1.0 / ps[i]) * osc, 1e-12);
    if (i > 0) {
      EXPECT_GT(rows[i].norm_estimate, rows[i - 1].norm_estimate);
      EXPECT_LT(rows[i].gap, rows[i - 1].gap);
    }
    EXPECT_LE(rows[i].norm_estimate, rows[i].bmo_estimate);
  }
}

TEST(PLimitScan, SquareNormNondecreasing) {
  const Covering cov = build_covering(3, 1);
  const auto cs = covering_candidates(cov, 3);
  const double ps[] = {2.0, 4.0, 8.0, 16.0, 32.0};
  const auto rows = p_limit_scan(corpus_field("norm2", 1), Admissibility(2.0), cs, ps, kSpec);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].jn_value, rows[i - 1].jn_value - 1e-12);
    EXPECT_LE(rows[i].gap, rows[i - 1].gap + 1e-12);
  }
  for (const auto& r : rows) EXPECT_GE(r.gap, -1e-12);
  const double bad[] = {4.0, 2.0};
  EXPECT_THROW(p_limit_scan(corpus_field("norm2", 1), Admissibility(2.0), cs, bad, kSpec), std::invalid_argument);
}

TEST(JnTailFit, SignShowsASingleStep) {
  const ScalarField sign = corpus_field("sign", 1);
  const Cube q({0.0}, 2.0);
  std::vector<double> sig;
  for (int i = 0; i < 16; ++i) sig.push_back(0.1 * std::pow(1.25, i));
  const double k_hat = std::pow(kErf1, 0.5);
  const TailFit fit = jn_tail_fit(sign, q, 2.0, kSpec, sig, k_hat);
  ASSERT_EQ(fit.plateaus.size(), 2u);
  EXPECT_NEAR(fit.plateaus[0].tail, kErf1, 1e-12);
  EXPECT_LT(fit.plateaus[0].sigma_hi, 1.0);
  EXPECT_EQ(fit.plateaus[1].tail, 0.0);
  EXPECT_GT(fit.plateaus[1].sigma_lo, 1.0);
  // tail = gamma(Q) > gamma(Q)/2 everywhere it is positive: nothing to fit
  EXPECT_EQ(fit.fit_points, 0u);
  EXPECT_TRUE(std::isnan(fit.exponent));
  double best = 0.0;
  for (double s : sig)
    if (s < 1.0) best = std::max(best, s * s * kErf1 / (k_hat * k_hat));
  EXPECT_NEAR(fit.c_estimate, best, 1e-12);
}

TEST(JnTailFit, TwoLevelDeviationClosedForm) {
  // odd step field: |f - f_Q| takes the values 1 and 2 on Q = (-1,1)
  StepTable t;
  t.edges = {{-1.0, -0.5, 0.0, 0.5, 1.0}};
  t.values = {-2.0, -1.0, 1.0, 2.0};
  const ScalarField f = step_field(t);
  const Cube q({0.0}, 2.0);
  const double outer = 2.0 * oracle::mass_hp(0.5, 1.0);
  const double whole = oracle::mass_hp(-1.0, 1.0);
  const std::vector<double> sig{0.5, 0.9, 1.01, 1.5, 1.99, 2.01, 3.0};
  const double p = 3.0, k_hat = 1.7;
  const TailFit fit = jn_tail_fit(f, q, p, kSpec, sig, k_hat);
  double best = 0.0;
  for (double s : sig) {
    const double tail = s < 1.0 ? whole : (s < 2.0 ? outer : 0.0);
    best = std::max(best, std::pow(s / k_hat, p) * tail);
  }
  EXPECT_NEAR(fit.c_estimate, best, 1e-10 * best);
  EXPECT_EQ(fit.c_argmax_sigma, 1.99);
  EXPECT_EQ(fit.plateaus.size(), 3u);
}

TEST(JnTailFit, PowerTailSlopeMatchesExactDistribution) {
  // |x_1|^{-1/3} on (-1,1): {|f - m| > s} = {|t| < (s + m)^{-3}} for s > m, mass erf((s+m)^{-3})
  const ScalarField f = corpus_field("heavy_x1", 1);
  const Cube q({0.0}, 2.0);
  const double m = gauss_average(f, q, kSpec);
  std::vector<double> sig;
  for (int i = 0; i < 12; ++i) sig.push_back(3.0 * std::pow(1.5, i));
  const TailFit fit = jn_tail_fit(f, q, 2.0, kSpec, sig, 1.0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (double s : sig) {
    const double t = oracle::erf_hp(std::pow(s + m, -3.0));
    if (!(t > 1e-6 && t < 0.5 * oracle::erf_hp(1.0))) continue;
    sx += std::log(s);
    sy += std::log(t);
    sxx += std::log(s) * std::log(s);
    sxy += std::log(s) * std::log(t);
    ++n;
  }
  ASSERT_EQ(fit.fit_points, static_cast<std::size_t>(n));
  // node weights resolve small tails to a few percent, the slope much better
  EXPECT_NEAR(fit.exponent, (n * sxy - sx * sy) / (n * sxx - sx * sx), 0.02);
  EXPECT_LT(fit.exponent, -2.0);
}

TEST(JnTailFit, DegenerateGridIsSignalled) {
  const double sig[] = {5.0, 10.0};
  EXPECT_THROW(jn_tail_fit(corpus_field("sign", 1), Cube({0.0}, 2.0), 2.0, kSpec, sig, 1.0), std::domain_error);
  EXPECT_THROW(jn_tail_fit(corpus_field("sign", 1), Cube({0.0}, 2.0), 2.0, kSpec, sig, 0.0),
               std::invalid_argument);
}

TEST(JnTailSweep, SkipsCubesWhereTheFieldIsConstant) {
  const Covering cov = build_covering(3, 1);
  const ScalarField sign = corpus_field("sign", 1);
  std::vector<double> sig;
  for (int i = 0; i < 10; ++i) sig.push_back(0.05 * std::pow(1.5, i));
  const auto sweep = jn_tail_sweep(sign, cov.cubes(), 2.0, sig, 1.0, kSpec);
  EXPECT_EQ(sweep.used, 1u);
  EXPECT_GT(sweep.max_c, 0.0);
  EXPECT_TRUE(std::isfinite(sweep.max_c));
}
