#include <gtest/gtest.h>

#include <erglab/erglab.hpp>

#include "oracles.hpp"

using namespace erglab;

namespace {

FiniteSystem one_state(const Matrix& a) { return FiniteSystem({0}, {a}); }

SplittingEstimate<State> axis_split(std::size_t points = 1) {
  SplittingEstimate<State> s;
  s.index = 1;
  for (std::size_t k = 0; k < points; ++k) {
    s.points.push_back(State{0});
    s.cu.push_back(Eigen::Vector2d(1, 0));
    s.cs.push_back(Eigen::Vector2d(0, 1));
  }
  return s;
}

// min over k and m in [n, m_max] of sigma_min(P cu) / sigma_max(P cs), with
// plain products and singular values from A^T A.
double brute_worst_ratio(const FiniteSystem& sys, const SplittingEstimate<State>& split, std::size_t n,
                         std::size_t m_max) {
  double worst = INFINITY;
  for (std::size_t k = 0; k < split.length(); ++k) {
    Matrix p = Matrix::Identity(sys.dim(), sys.dim());
    State t = split.points[k];
    for (std::size_t m = 1; m <= m_max; ++m) {
      p = sys.jacobian(t) * p;
      t = sys.map(t);
      if (m < n) continue;
      const double lo = oracle::singular_values(p * split.cu[k]).back();
      const double hi = oracle::singular_values(p * split.cs[k]).front();
      worst = std::min(worst, lo / hi);
    }
  }
  return worst;
}

}  // namespace

TEST(Splitting, ConstantDiagonalIsExact) {
  const auto split = estimate_splitting(one_state(oracle::diag2(2, 0.5)), State{0}, 1, 30);
  EXPECT_LT(oracle::line_angle(split.cu[0], Eigen::Vector2d(1, 0)), 1e-15);
  EXPECT_LT(oracle::line_angle(split.cs[0], Eigen::Vector2d(0, 1)), 1e-15);
}

TEST(Splitting, CatEigendirections) {
  const auto split = estimate_splitting(cat_map(), Vector(Eigen::Vector2d(0.2, 0.7)), 1, 50);
  const auto e = oracle::eig2(2, 1, 1, 1);
  EXPECT_LT(oracle::line_angle(split.cu[0], Eigen::Vector2d(1, (std::sqrt(5.0) - 1) / 2)), 1e-8);
  EXPECT_LT(oracle::line_angle(split.cu[0], e.v_hi), 1e-8);
  EXPECT_LT(oracle::line_angle(split.cs[0], e.v_lo), 1e-8);
  EXPECT_GT(split.min_angle, 1e-8);
}

TEST(Splitting, IdentityHasNoGap) {
  EXPECT_THROW(estimate_splitting(identity_map(2), Vector(Eigen::Vector2d(0.1, 0.1)), 1, 30), no_gap_error);
}

TEST(Splitting, HorizonStabilityOnCat) {
  for (const Vector& x : quasi_random_points(2, 10, 2)) {
    const auto a = estimate_splitting(cat_map(), x, 1, 30);
    const auto b = estimate_splitting(cat_map(), x, 1, 60);
    EXPECT_LE(subspace_distance(a.cu[0], b.cu[0]), 1e-6);
    EXPECT_LE(subspace_distance(a.cs[0], b.cs[0]), 1e-6);
  }
}

TEST(Splitting, EquivarianceAlongOrbit) {
  const auto f = standard_map(6.0);
  const auto split = estimate_splitting(f, Vector(Eigen::Vector2d(0.31, 0.77)), 1, 40, 10);
  ASSERT_EQ(split.length(), 10u);
  EXPECT_LT(split.equivariance_error, 1e-8);
  for (std::size_t k = 0; k + 1 < split.length(); ++k)
    EXPECT_LT(subspace_distance(orthonormalize(f.jacobian(split.points[k]) * split.cu[k]), split.cu[k + 1]), 1e-8);
}

TEST(Domination, Examples) {
  const auto diag = one_state(oracle::diag2(2, 0.5));
  const auto rep = test_domination(diag, estimate_splitting(diag, State{0}, 1, 30), 1, 20);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.worst_ratio, 4.0, 1e-12);
  ASSERT_TRUE(rep.n_star);
  EXPECT_EQ(*rep.n_star, 1u);

  const auto cat = cat_map();
  const auto crep = test_domination(cat, estimate_splitting(cat, Vector(Eigen::Vector2d(0.4, 0.1)), 1, 50), 1, 20);
  EXPECT_TRUE(crep.pass);
  EXPECT_NEAR(crep.worst_ratio, (3 + std::sqrt(5.0)) / (3 - std::sqrt(5.0)), 1e-6);

  const auto rot = one_state(oracle::rotation(10));
  const auto rrep = test_domination(rot, axis_split(), 1, 20);
  EXPECT_FALSE(rrep.pass);
  EXPECT_NEAR(rrep.worst_ratio, 1.0, 1e-9);
}

TEST(Domination, ConstantIsAParameter) {
  const auto diag = one_state(oracle::diag2(2, 0.5));
  const auto split = estimate_splitting(diag, State{0}, 1, 30);
  EXPECT_TRUE(test_domination(diag, split, 1, 10, 3.9).pass);
  EXPECT_FALSE(test_domination(diag, split, 1, 10, 4.1).pass);
  EXPECT_TRUE(test_domination(diag, split, 2, 10, 4.1).pass);
}

TEST(Domination, ScaleInvariance) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(instance_seed(31, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const int i = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(sys.dim() - 1)));
    for (double c : {0.25, 3.0}) {
      const FiniteSystem big = sys.scaled(c);
      for (std::size_t s = 0; s < sys.size(); ++s) {
        try {
          const auto split = exact_splitting_periodic(sys, State{s}, i);
          const auto a = test_domination(sys, split, 1, 10);
          const auto b = test_domination(big, split, 1, 10);
          if (std::abs(std::log(a.worst_ratio) - std::log(2.0)) > 1e-9) {
            EXPECT_EQ(a.pass, b.pass) << "seed " << seed;
          }
          EXPECT_NEAR(std::log(a.worst_ratio), std::log(b.worst_ratio), 1e-9);
        } catch (const numeric_error&) {
        }
      }
    }
  }
}

TEST(Domination, AgreesWithBruteForceOnExactSplittings) {
  std::size_t checked = 0, passed = 0;
  for (std::uint64_t seed = 0; checked < 200 && seed < 5000; ++seed) {
    Rng rng(instance_seed(77, seed));
    const FiniteSystem sys = random_finite_system(rng);
    if (!cycle_products_separated(sys, 1.5)) continue;
    const int i = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(sys.dim() - 1)));
    const std::size_t s = rng.index(sys.size());
    SplittingEstimate<State> split;
    try {
      split = exact_splitting_periodic(sys, State{s}, i);
    } catch (const no_gap_error&) {
      continue;
    }
    const std::size_t p = split.length();
    const std::size_t m_max = 2 * p;
    const double brute = brute_worst_ratio(sys, split, 1, m_max);
    const auto rep = test_domination(sys, split, 1, m_max);
    ++checked;
    EXPECT_NEAR(std::log(rep.worst_ratio), std::log(brute), 1e-6) << "seed " << seed;
    if (std::abs(std::log(brute / 2.0)) > 1e-6) {
      EXPECT_EQ(rep.pass, brute > 2.0) << "seed " << seed;
    }
    if (rep.pass) {
      ++passed;
      const auto ex = exact_spectrum_periodic(sys, State{s}).exponents;
      EXPECT_GT(ex[static_cast<std::size_t>(i) - 1], ex[static_cast<std::size_t>(i)]);
    }
  }
  EXPECT_EQ(checked, 200u);
  EXPECT_GT(passed, 0u);
}

TEST(Cones, Examples) {
  const auto diag = one_state(oracle::diag2(2, 0.5));
  const auto cone = constant_cone<State>(Eigen::Vector2d(1, 0), M_PI / 6);
  EXPECT_TRUE(cone_invariance(diag, cone, {State{0}}).pass);
  const auto rot = one_state(oracle::rotation(45));
  EXPECT_FALSE(cone_invariance(rot, cone, {State{0}}).pass);
  const auto e = oracle::eig2(2, 1, 1, 1);
  const auto cat_cone = constant_cone<Vector>(e.v_hi, 20 * M_PI / 180);
  EXPECT_TRUE(cone_invariance(cat_map(), cat_cone, quasi_random_points(2, 1000, 0)).pass);
}

TEST(DominatedSet, Examples) {
  const auto pts = quasi_uniform_measure(2, 100, 0);
  EXPECT_DOUBLE_EQ(find_dominated_set(cat_map(), 1, pts, 1, 50).fraction, 1.0);
  EXPECT_DOUBLE_EQ(find_dominated_set(identity_map(2), 1, pts, 1, 50).fraction, 0.0);
  const FiniteSystem mixed({0, 1}, {oracle::diag2(2, 0.5), oracle::rotation(30)});
  const auto d = find_dominated_set(mixed, 1, state_measure(mixed), 1, 30);
  EXPECT_DOUBLE_EQ(d.fraction, 0.5);
  EXPECT_TRUE(d.flags[0]);
  EXPECT_FALSE(d.flags[1]);
}
