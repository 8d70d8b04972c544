#include <gtest/gtest.h>

#include <erglab/erglab.hpp>

#include "oracles.hpp"

using namespace erglab;

namespace {

FiniteSystem one_state(const Matrix& a) { return FiniteSystem({0}, {a}); }

BlockParams params(std::size_t ell, BlockSide side = BlockSide::s) { return BlockParams{ell, 1, 30, side}; }

}  // namespace

TEST(MaximalFunction, Examples) {
  const std::vector<double> flat{-2, -2, -2};
  auto m = maximal_function(flat);
  EXPECT_DOUBLE_EQ(m.phi_star, -2.0);
  EXPECT_EQ(m.argmax, 1u);

  const std::vector<double> two{-0.5, -3};
  m = maximal_function(two);
  EXPECT_DOUBLE_EQ(m.phi_star, -0.5);
  EXPECT_EQ(m.argmax, 1u);

  const std::vector<double> late{-3, 1, -2, -2, -2, -2};
  m = maximal_function(late);
  EXPECT_DOUBLE_EQ(m.phi_star, -1.0);
  EXPECT_EQ(m.argmax, 2u);

  EXPECT_THROW(maximal_function(std::vector<double>{}), std::invalid_argument);
}

TEST(MaximalFunction, MatchesPrefixOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(1 + rng.index(40));
    for (double& v : a) v = rng.normal() - 1.0;
    const auto m = maximal_function(a);
    const auto [best, arg] = oracle::prefix_max(a);
    EXPECT_DOUBLE_EQ(m.phi_star, best);
    EXPECT_EQ(m.argmax, arg);
    const auto v = block_verdict(a);
    EXPECT_EQ(v.member, oracle::prefix_member(a) && best < -1.0 - kBlockSlack);
    EXPECT_EQ(v.member, below_block_threshold(m.phi_star));
  }
}

TEST(InBlock, ConstantContraction) {
  const auto sys = one_state(oracle::diag2(std::exp(2.0), std::exp(-2.0)));
  const auto v = in_block(sys, params(1), State{0}, 50);
  EXPECT_TRUE(v.member);
  EXPECT_NEAR(v.phi_star, -2.0, 1e-12);
  EXPECT_FALSE(v.exact);

  const auto weak = one_state(oracle::diag2(std::exp(0.5), std::exp(-0.5)));
  const auto w = in_block(weak, params(1), State{0}, 50);
  EXPECT_FALSE(w.member);
  ASSERT_TRUE(w.first_violation);
  EXPECT_EQ(*w.first_violation, 1u);
}

TEST(InBlock, CatNeedsTwoSteps) {
  const Vector x = Eigen::Vector2d(0.3, 0.6);
  EXPECT_FALSE(in_block(cat_map(), params(1), x, 100).member);
  const auto v = in_block(cat_map(), params(2), x, 100);
  EXPECT_TRUE(v.member);
  EXPECT_NEAR(v.phi_star, -2 * oracle::kCatLambda, 1e-8);
  EXPECT_TRUE(in_block(cat_map(), params(2, BlockSide::both), x, 100).member);
}

TEST(InBlockExact, Examples) {
  const auto strong = one_state(oracle::diag2(std::exp(-2.0), std::exp(2.0)));
  const auto v = in_block_exact_periodic(strong, params(1), State{0});
  EXPECT_TRUE(v.member);
  EXPECT_TRUE(v.exact);

  const auto edge = one_state(oracle::diag2(std::exp(-1.0), std::exp(1.0)));
  EXPECT_FALSE(in_block_exact_periodic(edge, params(1), State{0}).member);

  const FiniteSystem cyc({1, 0}, {oracle::diag2(std::exp(3.0), std::exp(-3.0)),
                                  oracle::diag2(std::exp(-0.5), std::exp(0.5))});
  const auto a = block_values_periodic(cyc, 1, 1, State{0});
  ASSERT_EQ(a.size(), 2u);
  EXPECT_NEAR(a[0], -3.0, 1e-12);
  EXPECT_NEAR(a[1], 0.5, 1e-12);
  EXPECT_TRUE(in_block_exact_periodic(cyc, params(1), State{0}).member);
  EXPECT_FALSE(in_block_exact_periodic(cyc, params(1), State{1}).member);
}

TEST(InBlockExact, AgreesWithLongPrefixes) {
  std::size_t checked = 0, members = 0;
  for (std::uint64_t seed = 0; checked < 300 && seed < 5000; ++seed) {
    Rng rng(instance_seed(41, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const int i = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(sys.dim() - 1)));
    const std::size_t s = rng.index(sys.size());
    const std::size_t ell = 1 + rng.index(4);
    std::vector<double> a;
    BlockVerdict v;
    try {
      a = block_values_periodic(sys, ell, i, State{s});
      v = in_block_exact_periodic(sys, BlockParams{ell, i, 30, BlockSide::s}, State{s});
    } catch (const numeric_error&) {
      continue;
    }
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    // skip orbits whose long-run average sits on the threshold
    if (std::abs(mean + 1.0) < 1e-6) continue;
    std::vector<double> longer;
    while (longer.size() < 20000) longer.insert(longer.end(), a.begin(), a.end());
    ++checked;
    if (v.member) ++members;
    EXPECT_EQ(v.member, oracle::prefix_member(longer)) << "seed " << seed;
  }
  EXPECT_EQ(checked, 300u);
  EXPECT_GT(members, 0u);
  EXPECT_LT(members, checked);
}

TEST(InBlockExact, UnstableSideIsStableSideOfInverse) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(instance_seed(43, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const int i = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(sys.dim() - 1)));
    const FiniteSystem inv = inverse_system(sys);
    for (std::size_t s = 0; s < sys.size(); ++s) {
      try {
        const auto u = in_block_exact_periodic(sys, BlockParams{2, i, 30, BlockSide::u}, State{s});
        const auto si = in_block_exact_periodic(inv, BlockParams{2, sys.dim() - i, 30, BlockSide::s}, State{s});
        EXPECT_EQ(u.member, si.member) << "seed " << seed;
        EXPECT_NEAR(u.phi_star, si.phi_star, 1e-9);
        const auto both = in_block_exact_periodic(sys, BlockParams{2, i, 30, BlockSide::both}, State{s});
        const auto st = in_block_exact_periodic(sys, BlockParams{2, i, 30, BlockSide::s}, State{s});
        EXPECT_EQ(both.member, u.member && st.member);
      } catch (const numeric_error&) {
      }
    }
  }
}

TEST(BlockMeasure, Examples) {
  const FiniteSystem sys({0, 1}, {oracle::diag2(std::exp(2.0), std::exp(-2.0)), oracle::diag2(std::exp(0.5), std::exp(-0.5))},
                         {0.7, 0.3});
  EXPECT_NEAR(block_measure_exact(sys, params(1), state_measure(sys)), 0.7, 1e-15);
  EXPECT_NEAR(block_measure(sys, params(1), state_measure(sys), 50), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(block_measure(cat_map(), params(2), quasi_uniform_measure(2, 1000, 0), 60), 1.0);
  EXPECT_DOUBLE_EQ(block_measure(identity_map(2), params(2), quasi_uniform_measure(2, 20, 0), 20), 0.0);
}

TEST(ChooseBlockParams, Examples) {
  const std::vector<double> w{0.5, 0.5};
  const auto constant = [](std::size_t) { return std::vector<double>{-2.0, -2.0}; };
  const auto c = choose_block_params({-2.0, -2.0}, w, 0.1, constant);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->alpha, 1.0);
  EXPECT_EQ(c->ell, 11u);

  const std::vector<double> w2{0.1, 0.9};
  const auto two = [](std::size_t) { return std::vector<double>{-0.05, -2.0}; };
  const auto d = choose_block_params({-0.05, -2.0}, w2, 0.2, two, {0.1, 0.5, 1.0});
  ASSERT_TRUE(d);
  EXPECT_EQ(d->alpha, 1.0);
  EXPECT_EQ(d->ell, 6u);

  const auto flat = [](std::size_t) { return std::vector<double>{0.0, 0.3}; };
  EXPECT_FALSE(choose_block_params({0.0, 0.3}, w, 0.1, flat));
  EXPECT_THROW(choose_block_params({-1.0}, w, 0.1, flat), std::invalid_argument);
  EXPECT_THROW(choose_block_params({-1.0, -1.0}, w, 0.0, flat), std::invalid_argument);
}

TEST(ChooseBlockParams, ResultSatisfiesHypotheses) {
  std::size_t found = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(instance_seed(47, seed));
    const FiniteSystem sys = random_finite_system(rng);
    const int i = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(sys.dim() - 1)));
    const auto mu = state_measure(sys);
    std::vector<double> lcs, w;
    std::vector<State> states;
    try {
      for (std::size_t a = 0; a < mu.size(); ++a) {
        lcs.push_back(lambda_cs(sys, mu.support()[a], i));
        w.push_back(mu.weights()[a]);
        states.push_back(mu.support()[a]);
      }
      FiniteCsNorms norms(sys, states, i);
      const auto choice = choose_block_params(lcs, w, 0.2, std::ref(norms), {}, 400);
      if (!choice) continue;
      ++found;
      const auto chk = check_block_lemma(sys, BlockLemmaParams{0.2, choice->alpha, choice->ell, i, mu});
      EXPECT_TRUE(chk.hypotheses_hold) << "seed " << seed;
      EXPECT_TRUE(chk.conclusion_holds) << "seed " << seed;
    } catch (const numeric_error&) {
    }
  }
  EXPECT_GT(found, 0u);
}

TEST(BlockLemma, Examples) {
  const auto sys = one_state(oracle::diag2(std::exp(2.0), std::exp(-2.0)));
  const auto chk = check_block_lemma(sys, BlockLemmaParams{0.1, 1.0, 11, 1, state_measure(sys)});
  EXPECT_TRUE(chk.hypotheses_hold);
  EXPECT_TRUE(chk.conclusion_holds);
  EXPECT_EQ(chk.non_member, 0.0);
  EXPECT_NEAR(chk.margin, 0.3, 1e-15);
  EXPECT_NEAR(chk.c3_deviation, 0.0, 1e-12);

  const auto low = check_block_lemma(sys, BlockLemmaParams{0.1, 1.0, 10, 1, state_measure(sys)});
  EXPECT_FALSE(low.c2);
  EXPECT_FALSE(low.hypotheses_hold);

  const FiniteSystem drift({1, 0}, {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  EXPECT_THROW(check_block_lemma(drift, BlockLemmaParams{0.1, 1.0, 11, 1, AtomicMeasure<State>({State{0}}, {1.0})}),
               std::invalid_argument);
  EXPECT_NO_THROW(require_invariant(drift, state_measure(drift)));
}

TEST(BlockLemma, OracleHoldsAmongApplicable) {
  std::size_t applicable = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto rec = run_oracle("block", instance_seed(9, k));
    EXPECT_TRUE(rec["pass"].get<bool>()) << rec.dump();
    if (rec.value("applicable", false)) ++applicable;
  }
  EXPECT_GT(applicable, 0u);
}
