#include <gtest/gtest.h>

#include <erglab/erglab.hpp>

#include "oracles.hpp"

using namespace erglab;

namespace {

const Matrix kI2 = Matrix::Identity(2, 2);

// (0 1)(2 3 4)(5), uniform weights
FiniteSystem three_cycles() { return FiniteSystem({1, 0, 3, 4, 2, 5}, std::vector<Matrix>(6, kI2)); }

// States lying on a cycle contained in the region.
std::vector<std::size_t> cycles_inside(const FiniteSystem& sys, const std::vector<std::size_t>& region) {
  std::vector<char> in(sys.size(), 0);
  for (std::size_t s : region) in[s] = 1;
  std::vector<std::size_t> out;
  for (const auto& c : oracle::cycles(sys.permutation()))
    if (std::all_of(c.begin(), c.end(), [&](std::size_t s) { return in[s]; })) out.insert(out.end(), c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(WeakStar, Examples) {
  const auto fam = function_family<Vector>({[](const Vector& x) { return std::cos(2 * M_PI * x(0)); }}, {1.0});
  const auto a = AtomicMeasure<Vector>::dirac(Vector::Zero(1));
  const auto b = AtomicMeasure<Vector>::dirac(Vector::Constant(1, 0.5));
  EXPECT_NEAR(weak_star_distance(a, b, fam), 0.5, 1e-15);
  EXPECT_EQ(weak_star_distance(a, a, fam), 0.0);

  const auto ind = indicator_family(3);
  const auto s0 = AtomicMeasure<State>::dirac(State{0});
  const auto s1 = AtomicMeasure<State>::dirac(State{1});
  EXPECT_NEAR(weak_star_distance(s0, s1, ind), 0.25 + 0.125, 1e-15);
}

TEST(WeakStar, MetricProperties) {
  const auto fam = fourier_family(2, 4);
  Rng rng(8);
  auto random_measure = [&] {
    std::vector<Vector> pts;
    std::vector<double> w;
    const std::size_t n = 1 + rng.index(5);
    for (std::size_t k = 0; k < n; ++k) {
      pts.push_back(Eigen::Vector2d(rng.uniform(), rng.uniform()));
      w.push_back(1.0 / static_cast<double>(n));
    }
    return AtomicMeasure<Vector>(pts, w);
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_measure(), y = random_measure(), z = random_measure();
    const double xy = weak_star_distance(x, y, fam);
    EXPECT_NEAR(xy, weak_star_distance(y, x, fam), 1e-15);
    EXPECT_LE(xy, weak_star_distance(x, z, fam) + weak_star_distance(z, y, fam) + 1e-15);
    EXPECT_LE(xy, 2 * fam.bound() + 1e-15);
    EXPECT_GE(xy, 0.0);
  }
}

TEST(Birkhoff, Examples) {
  const FiniteSystem two({1, 0}, {kI2, kI2});
  const auto b = birkhoff_empirical(two, State{0}, 4);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b.weights()[0], 0.5, 1e-15);
  const auto odd = birkhoff_empirical(two, State{0}, 3);
  EXPECT_NEAR(odd.weights()[0], 2.0 / 3.0, 1e-15);

  const auto fixed = birkhoff_empirical(cat_map(), Vector(Vector::Zero(2)), 100);
  EXPECT_EQ(fixed.size(), 1u);
  EXPECT_THROW(birkhoff_empirical(cat_map(), Vector(Vector::Zero(2)), 0), std::invalid_argument);
}

TEST(Birkhoff, FullPeriodsAreInvariant) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(instance_seed(61, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const auto fam = indicator_family(sys.size());
    for (std::size_t s = 0; s < sys.size(); ++s) {
      const std::size_t p = oracle::cycle_len(sys.permutation(), s);
      const auto b = birkhoff_empirical(sys, State{s}, 3 * p);
      std::vector<std::pair<State, double>> pushed;
      for (std::size_t a = 0; a < b.size(); ++a) pushed.emplace_back(sys.map(b.support()[a]), b.weights()[a]);
      EXPECT_LT(weak_star_distance(b, merge_atoms(pushed), fam), 1e-15);
    }
  }
}

TEST(Decomposition, ExactExamples) {
  const auto sys = three_cycles();
  const auto lam = ergodic_decomposition_exact(sys, state_measure(sys));
  ASSERT_EQ(lam.size(), 3u);
  EXPECT_NEAR(lam.weights()[0], 2.0 / 6, 1e-15);
  EXPECT_NEAR(lam.weights()[1], 3.0 / 6, 1e-15);
  EXPECT_NEAR(lam.weights()[2], 1.0 / 6, 1e-15);
  EXPECT_EQ(lam.components()[1].size(), 3u);

  const auto partial = ergodic_decomposition_exact(sys, AtomicMeasure<State>({State{0}, State{1}}, {0.5, 0.5}));
  EXPECT_EQ(partial.size(), 1u);
}

TEST(Decomposition, IntegratesBackToTheMeasure) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(instance_seed(67, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const auto mu = state_measure(sys);
    const auto lam = ergodic_decomposition_exact(sys, mu);
    const auto back = integrate_decomposition(lam);
    EXPECT_LT(weak_star_distance(back, mu, indicator_family(sys.size())), 1e-12) << "seed " << seed;
    for (const auto& c : lam.components())
      for (double w : c.weights()) EXPECT_NEAR(w, 1.0 / static_cast<double>(c.size()), 1e-15);
  }
}

TEST(Decomposition, EstimateRecoversCycles) {
  const auto sys = three_cycles();
  const auto fam = indicator_family(sys.size());
  const auto exact = ergodic_decomposition_exact(sys, state_measure(sys));
  const auto est = estimate_decomposition(sys, state_measure(sys), cycle_lcm(sys) * 10, fam, 0.01);
  EXPECT_TRUE(decompositions_match(exact, est, fam, 1e-9, 1e-9));

  const auto short_run = estimate_decomposition(sys, state_measure(sys), 1, fam, 0.01);
  EXPECT_FALSE(decompositions_match(exact, short_run, fam, 1e-9, 1e-9));
  EXPECT_EQ(short_run.size(), 6u);
  EXPECT_TRUE(decompositions_match(exact, merge_close_components(est, fam, 1e-9), fam, 1e-9, 1e-9));
}

TEST(Decomposition, IdentityTorusGivesDiracs) {
  const auto pts = quasi_uniform_measure(2, 25, 0);
  const auto fam = fourier_family(2, 2);
  const auto lam = estimate_decomposition(identity_map(2), pts, 10, fam, 1e-6);
  EXPECT_EQ(lam.size(), 25u);
  for (const auto& c : lam.components()) EXPECT_EQ(c.size(), 1u);
}

TEST(Decomposition, ApproxConvexCombination) {
  const auto sys = three_cycles();
  const auto fam = indicator_family(sys.size());
  const auto lam = ergodic_decomposition_exact(sys, state_measure(sys));
  const auto whole = integrate_decomposition(lam);
  for (double eps : {0.5, 0.1, 1e-9}) {
    const auto sub = approx_convex_combination(lam, fam, eps);
    const double total = std::accumulate(sub.weights().begin(), sub.weights().end(), 0.0);
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_LE(weak_star_distance(integrate_decomposition(sub), whole, fam), eps + 1e-12);
    EXPECT_LE(sub.size(), lam.size());
  }
  EXPECT_EQ(approx_convex_combination(lam, fam, 1e-9).size(), 3u);
  EXPECT_THROW(approx_convex_combination(lam, fam, 0.0), std::invalid_argument);
}

TEST(Variance, Examples) {
  const FiniteSystem sys({1, 0, 2}, {kI2, kI2, kI2});
  const auto mu = state_measure(sys);
  const auto lam = ergodic_decomposition_exact(sys, mu);
  const std::function<double(const State&)> phi = [](const State& s) { return (s.index == 2 ? 1.0 : 0.0) - 1.0 / 3; };
  EXPECT_NEAR(variance(phi, lam, mu), 2.0 / 9, 1e-15);
  EXPECT_NEAR(exact_hat_norm(sys, {-1.0 / 3, -1.0 / 3, 2.0 / 3}, mu), std::sqrt(2.0 / 9), 1e-15);
  const std::function<double(const State&)> raw = [](const State& s) { return s.index == 2 ? 1.0 : 0.0; };
  EXPECT_THROW(variance(raw, lam, mu), std::invalid_argument);

  const std::function<double(const State&)> swing = [](const State& s) {
    return s.index == 0 ? 1.0 : (s.index == 1 ? -1.0 : 0.0);
  };
  EXPECT_NEAR(variance(swing, lam, mu), 0.0, 1e-15);
  EXPECT_NEAR(l2_norm(swing, mu), std::sqrt(2.0 / 3), 1e-15);
}

TEST(Variance, EqualsSquaredHatNormAtFullPeriods) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(instance_seed(71, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const auto mu = state_measure(sys);
    std::vector<double> phi(sys.size());
    for (double& v : phi) v = rng.normal();
    const double mean = mu.integrate([&](const State& s) { return phi[s.index]; });
    for (double& v : phi) v -= mean;
    const std::function<double(const State&)> f = [&](const State& s) { return phi[s.index]; };
    const double var = variance(f, ergodic_decomposition_exact(sys, mu), mu);
    const double hat = exact_hat_norm(sys, phi, mu);
    EXPECT_NEAR(var, hat * hat, 1e-12);
    const std::size_t l = cycle_lcm(sys);
    const auto h = hat_norm(sys, f, {l, 2 * l}, mu);
    EXPECT_NEAR(h.values[0], hat, 1e-12);
    EXPECT_NEAR(h.values[1], hat, 1e-12);
    EXPECT_LE(var, l2_norm(f, mu) * l2_norm(f, mu) + 1e-12);
  }
}

TEST(HatNorm, Examples) {
  const auto grid = grid_measure(2, 64);
  const std::function<double(const Vector&)> phi = [](const Vector& x) { return std::cos(2 * M_PI * x(0)); };
  const auto id = hat_norm(identity_map(2), phi, {1, 10, 100}, grid);
  for (double v : id.values) EXPECT_NEAR(v, std::sqrt(0.5), 1e-12);

  const auto cat = hat_norm(cat_map(), phi, {1, 4, 16}, grid);
  EXPECT_NEAR(cat.values[0], std::sqrt(0.5), 1e-12);
  EXPECT_LT(cat.values[2], cat.values[0]);
  EXPECT_EQ(cat.min, cat.values[2]);
  EXPECT_THROW(hat_norm(cat_map(), phi, {}, grid), std::invalid_argument);
  EXPECT_THROW(hat_norm(cat_map(), phi, {0}, grid), std::invalid_argument);
}

TEST(BasinSet, Examples) {
  const auto sys = three_cycles();
  const auto fam = indicator_family(sys.size());
  const auto center = AtomicMeasure<State>::uniform({State{0}, State{1}});
  std::vector<State> samples;
  for (std::size_t s = 0; s < sys.size(); ++s) samples.push_back(State{s});
  const auto b = basin_set(sys, center, 0.01, fam, samples, 2);
  EXPECT_EQ(b.members, (std::vector<bool>{true, true, false, false, false, false}));
  EXPECT_NEAR(b.fraction, 2.0 / 6, 1e-15);
  EXPECT_EQ(b.agreement, 1.0);
  EXPECT_THROW(basin_set(sys, center, 0.0, fam, samples, 2), std::invalid_argument);
}

TEST(InvariantCore, FiniteExamples) {
  const FiniteSystem sys({1, 0, 3, 4, 2}, std::vector<Matrix>(5, kI2));
  const auto core = invariant_core(sys, {0, 1, 2});
  EXPECT_EQ(core.states, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(core.k_range, 6u);
  EXPECT_TRUE(invariant_core(sys, {0, 2, 3}).states.empty());
  EXPECT_THROW(invariant_core(sys, {}), std::invalid_argument);
}

TEST(InvariantCore, FiniteMatchesCyclesInside) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(instance_seed(73, seed));
    const FiniteSystem sys = random_finite_system(rng);
    std::vector<std::size_t> region;
    for (std::size_t s = 0; s < sys.size(); ++s)
      if (rng.uniform() < 0.6) region.push_back(s);
    if (region.empty()) continue;
    const auto core = invariant_core(sys, region);
    EXPECT_EQ(core.states, cycles_inside(sys, region)) << "seed " << seed;
    for (std::size_t s : core.states)
      EXPECT_TRUE(std::binary_search(core.states.begin(), core.states.end(), sys.map(State{s}).index));
  }
}

TEST(InvariantCore, CatBallShrinksToFixedPoint) {
  const auto core = invariant_core(cat_map(), torus_ball(Vector(Vector::Zero(2)), 0.2), 20, 512);
  ASSERT_FALSE(core.cells.empty());
  EXPECT_LE(core.max_cell_distance(Vector(Vector::Zero(2))), 2u);
}

TEST(InvariantCore, IdentityKeepsTheRegion) {
  const auto region = torus_ball(Vector(Eigen::Vector2d(0.5, 0.5)), 0.1);
  const auto core = invariant_core(identity_map(2), region, 3, 64);
  std::size_t cells = 0;
  const double h = 1.0 / 64;
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) cells += region.meets_cell(i * h, j * h, h);
  EXPECT_EQ(core.cells.size(), cells);
}
