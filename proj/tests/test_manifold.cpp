#include <gtest/gtest.h>

#include <erglab/erglab.hpp>

#include "oracles.hpp"

using namespace erglab;

namespace {

TransformParams transform(std::size_t ell, std::size_t depth, double radius) {
  TransformParams p;
  p.ell = ell;
  p.depth = depth;
  p.radius = radius;
  return p;
}

// Largest |w(u) - w(u')| / |u - u'| over grid neighbours of a 1-D disk.
double graph_lipschitz(const CsDisk& disk) {
  double worst = 0.0;
  for (std::size_t q = 0; q + 1 < disk.values.size(); ++q)
    worst = std::max(worst, (disk.values[q + 1] - disk.values[q]).norm() / (disk.params[q + 1] - disk.params[q]).norm());
  return worst;
}

const Vector kOrigin = Vector::Zero(2);

}  // namespace

TEST(CsDisk, LinearMapIsFlat) {
  const LinearMap f(oracle::diag2(0.5, 2.0));
  const auto disk = center_stable_disk(f, kOrigin, 1, transform(2, 20, 0.05));
  EXPECT_TRUE(disk.block_certified);
  for (const Vector& w : disk.values) EXPECT_LT(w.norm(), 1e-12);
  EXPECT_LT(oracle::line_angle(center_tangent(disk).col(0), Eigen::Vector2d(1, 0)), 1e-12);
  const auto rep = verify_contraction(f, disk, 30);
  EXPECT_TRUE(rep.pass);
  for (double r : rep.rates) EXPECT_NEAR(r, -std::log(2.0), 1e-9);
}

TEST(CsDisk, CatTangentIsStableEigenvector) {
  const auto disk = center_stable_disk(cat_map(), Vector(Eigen::Vector2d(0.3, 0.2)), 1, transform(2, 20, 0.05));
  EXPECT_TRUE(disk.block_certified);
  const Eigen::Vector2d want((1 - std::sqrt(5.0)) / 2, 1);
  EXPECT_LT(oracle::line_angle(center_tangent(disk).col(0), want), 1e-6);
  const auto rep = verify_contraction(cat_map(), disk, 30);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.threshold, -0.25, 1e-15);
  EXPECT_NEAR(rep.worst_rate, -oracle::kCatLambda, 1e-3);
}

TEST(CsDisk, StandardMapFixedPoint) {
  const auto f = standard_map(1.5);
  const auto disk = center_stable_disk(f, kOrigin, 1, transform(1, 30, 0.02));
  const auto e = oracle::eig2(2.5, 1, 1.5, 1);
  EXPECT_NEAR(e.lo, oracle::kStdStable, 1e-15);
  EXPECT_LT(oracle::line_angle(center_tangent(disk).col(0), e.v_lo), 1e-4);
  const auto rep = verify_contraction(f, disk, 40);
  EXPECT_TRUE(rep.pass);
  EXPECT_LT(rep.worst_rate, rep.threshold);
}

TEST(CsDisk, UnstableFlatDiskFailsContraction) {
  const auto e = oracle::eig2(2, 1, 1, 1);
  const auto wrong = flat_disk(Vector(Eigen::Vector2d(0.3, 0.2)), Matrix(e.v_hi), 0.01);
  const auto rep = verify_contraction(cat_map(), wrong, 20);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.worst_rate, 0.0);
  EXPECT_THROW(verify_contraction(cat_map(), wrong, 5), std::invalid_argument);
}

TEST(CsDisk, RejectsBadParameters) {
  const auto split = estimate_splitting(cat_map(), Vector(Eigen::Vector2d(0.3, 0.2)), 1, 40, 41);
  auto p = transform(2, 20, 0.05);
  p.resolution = 16;
  EXPECT_THROW(center_stable_disk(cat_map(), split, p), std::invalid_argument);
  p = transform(2, 20, 0.0);
  EXPECT_THROW(center_stable_disk(cat_map(), split, p), std::invalid_argument);
  p = transform(2, 30, 0.05);
  EXPECT_THROW(center_stable_disk(cat_map(), split, p), std::invalid_argument);
}

TEST(CsDisk, DepthCauchy) {
  const auto f = standard_map(1.5);
  const auto split = estimate_splitting(f, kOrigin, 1, 40, 41);
  const auto diffs = depth_cauchy(f, split, transform(1, 5, 0.02), {5, 10, 20, 40});
  ASSERT_EQ(diffs.size(), 3u);
  EXPECT_LT(diffs[1], diffs[0]);
  EXPECT_LT(diffs[2], 1e-8);
}

TEST(CsDisk, EquicontinuousAndInsideCone) {
  const auto f = standard_map(1.5);
  const auto params = transform(1, 20, 0.02);
  for (const Vector& x : {kOrigin, Vector(Eigen::Vector2d(0.31, 0.12)), Vector(Eigen::Vector2d(0.77, 0.45))}) {
    try {
      const auto disk = center_stable_disk(f, x, 1, params);
      EXPECT_LE(disk.max_tangent_angle(), params.cone_aperture);
      EXPECT_LE(graph_lipschitz(disk), std::tan(params.cone_aperture) + 1e-9);
    } catch (const numeric_error&) {
    }
  }
  const auto cat = center_stable_disk(cat_map(), Vector(Eigen::Vector2d(0.6, 0.9)), 1, transform(2, 20, 0.1));
  EXPECT_LE(graph_lipschitz(cat), 1e-9);
}

TEST(CsDisk, ImageLiesOnNextDisk) {
  const auto cat = cat_map();
  const Vector x = Eigen::Vector2d(0.3, 0.2);
  const auto params = transform(2, 20, 0.05);
  const auto here = center_stable_disk(cat, x, 1, params);
  const auto there = center_stable_disk(cat, cat.map(cat.map(x)), 1, params);
  EXPECT_LT(graph_residual(cat, here, there), 1e-10);

  const auto f = standard_map(1.5);
  const auto fixed = center_stable_disk(f, kOrigin, 1, transform(1, 30, 0.02));
  EXPECT_LT(graph_residual(f, fixed, fixed), 1e-8);
}

TEST(CsDisk, RadiusSearch) {
  const auto split = estimate_splitting(cat_map(), Vector(Eigen::Vector2d(0.3, 0.2)), 1, 40, 41);
  const auto cat = search_radius(cat_map(), split, transform(2, 20, 0.05), 0.1);
  EXPECT_TRUE(cat.reached);
  EXPECT_EQ(cat.radius, 0.1);
  ASSERT_TRUE(cat.disk);

  const auto f = standard_map(6.0);
  const auto ssplit = estimate_splitting(f, kOrigin, 1, 40, 41);
  const auto s = search_radius(f, ssplit, transform(1, 30, 0.02), 0.45, 12);
  EXPECT_LE(s.radius, 0.45);
  if (!s.reached) {
    EXPECT_FALSE(s.last_error.empty());
  }
  if (s.radius > 0.0) {
    ASSERT_TRUE(s.disk);
    EXPECT_EQ(s.disk->radius, s.radius);
  }
}
