#include <gtest/gtest.h>

#include <erglab/erglab.hpp>

#include "oracles.hpp"

using namespace erglab;

TEST(Orbit, CatFixedPoint) {
  const auto seg = orbit(cat_map(), Vector(Vector::Zero(2)), 5);
  ASSERT_EQ(seg.length(), 5u);
  for (const Vector& p : seg.points) EXPECT_EQ(p, Vector(Vector::Zero(2)));
}

TEST(Orbit, FiniteTwoCycle) {
  const FiniteSystem sys({1, 0}, {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  const auto seg = orbit(sys, State{0}, 4);
  std::vector<std::size_t> got;
  for (State s : seg.points) got.push_back(s.index);
  EXPECT_EQ(got, (std::vector<std::size_t>{0, 1, 0, 1}));
}

TEST(Orbit, StandardMapIntegrable) {
  const auto seg = orbit(standard_map(0.0), Vector(Eigen::Vector2d(0.25, 0.5)), 3);
  const std::vector<double> want{0.25, 0.75, 0.25};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(seg.points[k][0], want[k], 1e-15);
    EXPECT_NEAR(seg.points[k][1], 0.5, 1e-15);
  }
}

TEST(Orbit, PrefixProperty) {
  const auto sys = standard_map(1.5);
  const Vector x = Eigen::Vector2d(0.123, 0.456);
  const auto full = orbit(sys, x, 40);
  for (std::size_t k : {1u, 7u, 25u}) {
    const auto part = orbit(sys, x, k);
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_EQ(part.points[j], full.points[j]);
      EXPECT_EQ(part.matrices[j], full.matrices[j]);
    }
  }
}

TEST(Cycles, Examples) {
  const Matrix i2 = Matrix::Identity(2, 2);
  const FiniteSystem id({0, 1, 2}, {i2, i2, i2});
  EXPECT_EQ(cycle_decomposition(id).size(), 3u);
  const FiniteSystem three({1, 2, 0}, {i2, i2, i2});
  ASSERT_EQ(cycle_decomposition(three).size(), 1u);
  EXPECT_EQ(cycle_decomposition(three)[0].states.size(), 3u);
  const FiniteSystem mixed({1, 0, 2}, {i2, i2, i2});
  const auto c = cycle_decomposition(mixed);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].states, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(c[0].weight, 2.0 / 3.0, 1e-15);
  EXPECT_EQ(c[1].states, (std::vector<std::size_t>{2}));
  EXPECT_NEAR(c[1].weight, 1.0 / 3.0, 1e-15);
}

TEST(Cycles, FirstReturnMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const FiniteSystem sys = random_finite_system(rng);
    for (std::size_t s = 0; s < sys.size(); ++s) {
      const std::size_t p = oracle::cycle_len(sys.permutation(), s);
      EXPECT_EQ(cycle_length(sys, State{s}), p);
      const auto seg = orbit(sys, State{s}, 3 * p + 1);
      for (std::size_t k = 1; k < p; ++k) EXPECT_NE(seg.points[k].index, s);
      EXPECT_EQ(seg.points[p].index, s);
      EXPECT_EQ(seg.points[2 * p].index, s);
    }
    EXPECT_EQ(cycle_lcm(sys), oracle::lcm_of_cycles(sys.permutation()));
  }
}

TEST(FiniteSystem, RejectsBadInput) {
  const Matrix i2 = Matrix::Identity(2, 2);
  EXPECT_THROW(FiniteSystem({0, 0}, {i2, i2}), std::invalid_argument);
  EXPECT_THROW(FiniteSystem({0}, {2.0 * i2}), std::invalid_argument);
  EXPECT_THROW(FiniteSystem({1, 0}, {i2, i2}, {0.3, 0.7}), std::invalid_argument);
  EXPECT_THROW(FiniteSystem({0, 1}, {i2, i2}, {0.3, 0.6}), std::invalid_argument);
  EXPECT_NO_THROW(FiniteSystem({0, 1}, {i2, i2}, {0.3, 0.7}));
}

TEST(Volume, Examples) {
  const auto cat = volume_check(cat_map(), 1000, 1e-12);
  EXPECT_TRUE(cat.pass);
  EXPECT_EQ(cat.max_deviation, 0.0);
  EXPECT_TRUE(volume_check(standard_map(1.5), 1000, 1e-12).pass);
  const TorusMap squash(
      "squash", 2, {}, [](const Vector& p) -> Vector { return Eigen::Vector2d(p[0] + p[1], p[1] / 2); },
      [](const Vector& p) -> Vector { return Eigen::Vector2d(p[0] - 2 * p[1], 2 * p[1]); },
      [](const Vector&) -> Matrix { return (Matrix(2, 2) << 1, 1, 0, 0.5).finished(); });
  const auto bad = volume_check(squash, 100, 1e-12);
  EXPECT_FALSE(bad.pass);
  EXPECT_NEAR(bad.max_deviation, 0.5, 1e-15);
}

TEST(Zoo, VolumeAndInverse) {
  std::vector<TorusMap> maps{cat_map(), standard_map(1.5), standard_map(6.0), perturbed_cat_map(0.1),
                             abc_map(0.2, 0.15, 0.1), identity_map(3),
                             toral_automorphism((Matrix(3, 3) << 1, 1, 0, 1, 2, 1, 0, 1, 2).finished())};
  for (const auto& f : maps) {
    SCOPED_TRACE(f.name());
    EXPECT_TRUE(volume_check(f, 1000, 1e-10, 5).pass);
    for (const Vector& x : quasi_random_points(f.dim(), 200, 9)) {
      EXPECT_LT(f.distance(f.inverse(f.map(x)), x), 1e-10);
      EXPECT_LT(f.distance(f.map(f.inverse(x)), x), 1e-10);
    }
  }
}

TEST(Zoo, JacobianMatchesFiniteDifference) {
  std::vector<TorusMap> maps{standard_map(1.5), perturbed_cat_map(0.1), abc_map(0.2, 0.15, 0.1)};
  const double h = 1e-6;
  for (const auto& f : maps) {
    SCOPED_TRACE(f.name());
    for (const Vector& x : quasi_random_points(f.dim(), 20, 3)) {
      const Matrix j = f.jacobian(x);
      for (int c = 0; c < f.dim(); ++c) {
        Vector e = Vector::Zero(f.dim());
        e[c] = h;
        const Vector fd = (f.displacement(f.map(f.shift(x, -e)), f.map(f.shift(x, e)))) / (2 * h);
        EXPECT_LT((fd - j.col(c)).norm(), 1e-6);
      }
    }
  }
}

TEST(Zoo, Registry) {
  EXPECT_EQ(zoo_map("standard", {{"K", 2.0}}).params().at(0), 2.0);
  EXPECT_EQ(zoo_map("cat").name(), "cat");
  EXPECT_EQ(zoo_map("automorphism", {}, {2, 1, 1, 1}).dim(), 2);
  EXPECT_THROW(zoo_map("automorphism", {}, {2, 1, 1}), std::invalid_argument);
  EXPECT_THROW(zoo_map("nope"), std::invalid_argument);
  EXPECT_THROW(toral_automorphism((Matrix(2, 2) << 2, 0, 0, 1).finished()), std::invalid_argument);
}

TEST(InverseSystem, FiniteMatchesInverseSystem) {
  Rng rng(11);
  const FiniteSystem sys = random_finite_system(rng);
  const FiniteSystem inv = inverse_system(sys);
  const InverseSystem<FiniteSystem> view(sys);
  for (std::size_t s = 0; s < sys.size(); ++s) {
    EXPECT_EQ(inv.map(State{s}), view.map(State{s}));
    EXPECT_LT((inv.jacobian(State{s}) - view.jacobian(State{s})).norm(), 1e-12);
    EXPECT_LT((inv.jacobian(sys.map(State{s})) * sys.jacobian(State{s}) - Matrix::Identity(sys.dim(), sys.dim())).norm(),
              1e-9);
  }
}
