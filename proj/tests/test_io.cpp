#include <gtest/gtest.h>

#include <sstream>

#include <erglab/erglab.hpp>

using namespace erglab;

namespace {

bool same_system(const FiniteSystem& a, const FiniteSystem& b) {
  if (a.permutation() != b.permutation() || a.weights() != b.weights()) return false;
  for (std::size_t s = 0; s < a.size(); ++s)
    if (a.cocycle()[s] != b.cocycle()[s]) return false;
  return true;
}

}  // namespace

TEST(Io, FiniteSystemRoundTrip) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(instance_seed(3, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const json j = to_json(sys);
    EXPECT_EQ(j["schema"], kFsysSchema);
    EXPECT_TRUE(same_system(sys, finite_system_from_json(json::parse(j.dump()))));
  }
}

TEST(Io, MeasureAndDecompositionRoundTrip) {
  const auto torus = quasi_uniform_measure(2, 30, 1);
  const auto back = measure_from_json<Vector>(json::parse(to_json(torus).dump()));
  ASSERT_EQ(back.size(), torus.size());
  for (std::size_t a = 0; a < back.size(); ++a) {
    EXPECT_EQ(back.support()[a], torus.support()[a]);
    EXPECT_EQ(back.weights()[a], torus.weights()[a]);
  }

  const FiniteSystem sys({1, 0, 2}, std::vector<Matrix>(3, Matrix::Identity(2, 2)));
  const auto lam = ergodic_decomposition_exact(sys, state_measure(sys));
  const auto lback = decomposition_from_json<State>(json::parse(to_json(lam).dump()));
  ASSERT_EQ(lback.size(), lam.size());
  for (std::size_t c = 0; c < lam.size(); ++c) {
    EXPECT_EQ(lback.weights()[c], lam.weights()[c]);
    EXPECT_EQ(lback.components()[c].support(), lam.components()[c].support());
  }
}

TEST(Io, SchemaErrors) {
  json j = to_json(FiniteSystem({0}, {Matrix::Identity(2, 2)}));
  json bad = j;
  bad["schema"] = "erglab-fsys-v2";
  EXPECT_THROW(finite_system_from_json(bad), schema_error);
  bad = j;
  bad.erase("perm");
  EXPECT_THROW(finite_system_from_json(bad), schema_error);
  bad = j;
  bad["matrices"] = json::array({json::array({1.0, 0.0, 0.0})});
  EXPECT_THROW(finite_system_from_json(bad), schema_error);
  bad = j;
  bad["matrices"] = json::array({json::array({2.0, 0.0, 0.0, 1.0})});
  EXPECT_THROW(finite_system_from_json(bad), schema_error);
  bad = j;
  bad["dim"] = "two";
  EXPECT_THROW(finite_system_from_json(bad), schema_error);

  const json meas = to_json(AtomicMeasure<State>::dirac(State{0}));
  EXPECT_THROW(measure_from_json<Vector>(meas), schema_error);
  json heavy = meas;
  heavy["atoms"][0]["weight"] = 2.0;
  EXPECT_THROW(measure_from_json<State>(heavy), schema_error);
  json neg = meas;
  neg["atoms"][0]["point"] = -1;
  EXPECT_THROW(measure_from_json<State>(neg), schema_error);

  EXPECT_THROW(read_json_file("/nonexistent/erglab.json"), schema_error);
}

TEST(Io, CsvWriter) {
  std::ostringstream out;
  CsvWriter csv(out, "demo", {"a", "b", "c"});
  csv.cell(0.1).cell(std::size_t{3}).cell(true);
  csv.end_row();
  EXPECT_EQ(out.str(), "# erglab-demo-v1\na,b,c\n0.10000000000000001,3,true\n");
  csv.cell(1.0);
  EXPECT_THROW(csv.end_row(), std::logic_error);
}

TEST(Io, FormatDoubleRoundTrips) {
  Rng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.index(40)) - 20.0);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Fuzz, DeterministicPerSeed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(instance_seed(5, seed)), b(instance_seed(5, seed));
    EXPECT_TRUE(same_system(random_finite_system(a), random_finite_system(b)));
  }
  EXPECT_NE(instance_seed(5, 0), instance_seed(5, 1));
  EXPECT_NE(instance_seed(5, 0), instance_seed(6, 0));
}

TEST(Fuzz, SystemsAreValid) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(instance_seed(13, seed));
    const FiniteSystem sys = random_finite_system(rng);
    for (const Matrix& a : sys.cocycle()) EXPECT_NEAR(std::abs(a.determinant()), 1.0, 1e-9);
    std::vector<double> pushed(sys.size(), 0.0);
    for (std::size_t s = 0; s < sys.size(); ++s) pushed[sys.map(State{s}).index] += sys.weights()[s];
    for (std::size_t s = 0; s < sys.size(); ++s) EXPECT_NEAR(pushed[s], sys.weights()[s], 1e-12);
  }
}

TEST(Parallel, ResultsIndependentOfWorkers) {
  auto fn = [](std::size_t k) {
    Rng rng(instance_seed(17, k));
    return estimate_spectrum(standard_map(3.0), Vector(Eigen::Vector2d(rng.uniform(), rng.uniform())), 500).exponents;
  };
  const auto one = parallel_map(40, fn, 1);
  const auto four = parallel_map(40, fn, 4);
  EXPECT_EQ(one, four);
  EXPECT_TRUE(parallel_map(0, fn, 3).empty());
}

TEST(Parallel, RethrowsFirstFailureByIndex) {
  auto fn = [](std::size_t k) -> int {
    if (k == 7) throw std::runtime_error("seven");
    if (k == 20) throw std::runtime_error("twenty");
    return static_cast<int>(k);
  };
  for (std::size_t w : {1u, 3u, 8u}) {
    try {
      parallel_map(30, fn, w);
      FAIL() << "expected a throw";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "seven");
    }
  }
}
