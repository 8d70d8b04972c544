#pragma once

// Seeded generators of finite systems, measures and decompositions used by
// the oracle properties.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "erglab/atomic_measure.hpp"
#include "erglab/linalg.hpp"
#include "erglab/random.hpp"
#include "erglab/systems.hpp"

namespace erglab {

// Product of `count` elementary integer shears I + c E_ij (i != j, c != 0,
// |c| <= max_coef): integer entries, determinant exactly 1.
inline Matrix random_shear_product(Rng& rng, int dim, int count, int max_coef = 2) {
  Matrix m = Matrix::Identity(dim, dim);
  for (int k = 0; k < count; ++k) {
    const int i = static_cast<int>(rng.index(dim));
    int j = static_cast<int>(rng.index(dim - 1));
    if (j >= i) ++j;
    std::int64_t c = 0;
    while (c == 0) c = rng.integer(-max_coef, max_coef);
    Matrix s = Matrix::Identity(dim, dim);
    s(i, j) = static_cast<double>(c);
    m = s * m;
  }
  return m;
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p);
  return p;
}

// Weights uniform within cycles, with random cycle masses (some possibly 0).
inline std::vector<double> random_invariant_weights(Rng& rng, const std::vector<std::size_t>& perm,
                                                    double zero_probability = 0.0) {
  const FiniteSystem probe(perm, std::vector<Matrix>(perm.size(), Matrix::Identity(1, 1)));
  const auto cycles = cycle_decomposition(probe);
  std::vector<double> mass(cycles.size());
  double total = 0.0;
  for (auto& m : mass) {
    m = rng.coin(zero_probability) ? 0.0 : rng.uniform(0.1, 1.0);
    total += m;
  }
  if (total == 0.0) {
    mass[0] = 1.0;
    total = 1.0;
  }
  std::vector<double> w(perm.size(), 0.0);
  for (std::size_t c = 0; c < cycles.size(); ++c)
    for (std::size_t s : cycles[c].states) w[s] = mass[c] / total / static_cast<double>(cycles[c].states.size());
  return w;
}

struct FiniteFuzzOptions {
  std::size_t min_states = 1, max_states = 10;
  int min_dim = 2, max_dim = 4;
  int min_shears = 1, max_shears = 3;
  int max_coef = 2;
  bool uniform_weights = true;
};

// Random permutation with shear-product cocycle.
inline FiniteSystem random_finite_system(Rng& rng, const FiniteFuzzOptions& opt = {}) {
  const std::size_t n = opt.min_states + rng.index(opt.max_states - opt.min_states + 1);
  const int d = opt.min_dim + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_dim - opt.min_dim + 1)));
  auto perm = random_permutation(rng, n);
  std::vector<Matrix> mats;
  for (std::size_t s = 0; s < n; ++s) {
    const int count = opt.min_shears + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_shears - opt.min_shears + 1)));
    mats.push_back(random_shear_product(rng, d, count, opt.max_coef));
  }
  std::vector<double> w;
  if (!opt.uniform_weights) w = random_invariant_weights(rng, perm);
  return FiniteSystem(std::move(perm), std::move(mats), std::move(w));
}

// Moduli of the cycle product's eigenvalues are distinct with consecutive
// ratio at least min_ratio, on every cycle.
inline bool cycle_products_separated(const FiniteSystem& sys, double min_ratio) {
  for (const Cycle& c : cycle_decomposition(sys)) {
    Eigen::EigenSolver<Matrix> es(cycle_product(sys, State{c.states.front()}), false);
    std::vector<double> mod;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) mod.push_back(std::abs(es.eigenvalues()[k]));
    std::sort(mod.begin(), mod.end(), std::greater<>());
    for (std::size_t k = 0; k + 1 < mod.size(); ++k)
      if (!(mod[k] >= min_ratio * mod[k + 1])) return false;
  }
  return true;
}

// Finite system whose cocycle carries an exact invariant splitting of index
// i: A_s = B_{perm s} diag(e^{a_s} R_s, e^{b_s} Q_s) B_s^{-1} with det-1
// shear products B_s, rotations R_s, Q_s and i a_s + (d - i) b_s = 0.
struct BlockInstance {
  FiniteSystem sys;
  int index = 1;
};

namespace detail {

inline Matrix random_rotation(Rng& rng, int dim) {
  if (dim == 1) return Matrix::Identity(1, 1);
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1;
  return q;
}

}  // namespace detail

struct BlockFuzzOptions {
  std::size_t max_states = 10;
  int min_dim = 2, max_dim = 4;
  double b_lo = -3.0, b_hi = 0.5;  // range of the per-state log contraction on E^cs
  int conj_shears = 2;
  double min_gap = 0.05;  // per-period log gap between the blocks
};

inline std::optional<BlockInstance> random_block_instance(Rng& rng, const BlockFuzzOptions& opt = {}) {
  const std::size_t n = 1 + rng.index(opt.max_states);
  const int d = opt.min_dim + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_dim - opt.min_dim + 1)));
  const int i = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(d - 1)));
  auto perm = random_permutation(rng, n);
  std::vector<Matrix> conj;
  for (std::size_t s = 0; s < n; ++s) conj.push_back(random_shear_product(rng, d, opt.conj_shears, 1));
  std::vector<Matrix> mats(n);
  std::vector<double> b(n);
  for (std::size_t s = 0; s < n; ++s) {
    b[s] = rng.uniform(opt.b_lo, opt.b_hi);
    const double a = -static_cast<double>(d - i) * b[s] / static_cast<double>(i);
    Matrix core = Matrix::Zero(d, d);
    core.topLeftCorner(i, i) = std::exp(a) * detail::random_rotation(rng, i);
    core.bottomRightCorner(d - i, d - i) = std::exp(b[s]) * detail::random_rotation(rng, d - i);
    mats[s] = conj[perm[s]] * core * conj[s].inverse();
  }
  // every cycle needs sum b < 0 with a margin
  const FiniteSystem probe(perm, std::vector<Matrix>(n, Matrix::Identity(1, 1)));
  for (const Cycle& c : cycle_decomposition(probe)) {
    double sb = 0.0;
    for (std::size_t s : c.states) sb += b[s];
    const double sa = -static_cast<double>(d - i) * sb / static_cast<double>(i);
    if (!(sa - sb >= opt.min_gap)) return std::nullopt;
  }
  auto w = random_invariant_weights(rng, perm, 0.2);
  // det = 1 by construction; the floating-point determinant of these
  // ill-conditioned matrices cannot certify it to 1e-12
  return BlockInstance{FiniteSystem(std::move(perm), std::move(mats), std::move(w), Unimodularity::unchecked), i};
}

// Random decomposition of the reference measure of `sys` into invariant
// measures: each cycle's mass is split among k components by a random
// column-stochastic matrix (0/1 columns when coarsen is set).
inline Decomposition<State> random_invariant_decomposition(Rng& rng, const FiniteSystem& sys, std::size_t k,
                                                           bool coarsen) {
  const auto cycles = cycle_decomposition(sys);
  std::vector<std::vector<double>> share(k, std::vector<double>(cycles.size(), 0.0));
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    if (coarsen) {
      share[rng.index(k)][c] = 1.0;
    } else {
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) total += share[j][c] = rng.uniform();
      for (std::size_t j = 0; j < k; ++j) share[j][c] /= total;
    }
  }
  std::vector<AtomicMeasure<State>> comps;
  std::vector<double> weights;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<State> support;
    std::vector<double> w;
    double mass = 0.0;
    for (std::size_t c = 0; c < cycles.size(); ++c) {
      if (share[j][c] == 0.0) continue;
      for (std::size_t s : cycles[c].states) {
        const double ws = share[j][c] * sys.weights()[s];
        if (ws == 0.0) continue;
        support.push_back(State{s});
        w.push_back(ws);
        mass += ws;
      }
    }
    if (mass <= 0.0) continue;
    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return support[x] < support[y]; });
    std::vector<State> ss;
    std::vector<double> ww;
    for (std::size_t o : order) {
      ss.push_back(support[o]);
      ww.push_back(w[o] / mass);
    }
    // renormalise against rounding
    const double t = std::accumulate(ww.begin(), ww.end(), 0.0);
    for (double& x : ww) x /= t;
    comps.emplace_back(std::move(ss), std::move(ww));
    weights.push_back(mass);
  }
  const double t = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& x : weights) x /= t;
  return Decomposition<State>(std::move(comps), std::move(weights));
}

// Same measure on measures with every component split into 1..max_copies
// identical copies carrying random shares of its weight.
inline Decomposition<State> split_components(Rng& rng, const Decomposition<State>& lam, std::size_t max_copies = 3) {
  std::vector<AtomicMeasure<State>> comps;
  std::vector<double> weights;
  for (std::size_t c = 0; c < lam.size(); ++c) {
    const std::size_t copies = 1 + rng.index(max_copies);
    std::vector<double> share(copies);
    double total = 0.0;
    for (double& x : share) total += x = rng.uniform(0.1, 1.0);
    for (double x : share) {
      comps.push_back(lam.components()[c]);
      weights.push_back(lam.weights()[c] * x / total);
    }
  }
  const double t = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& x : weights) x /= t;
  return Decomposition<State>(std::move(comps), std::move(weights));
}

// Random function on the states, centered for the system's weights.
inline std::vector<double> random_centered_function(Rng& rng, const FiniteSystem& sys) {
  std::vector<double> phi(sys.size());
  double mean = 0.0;
  for (std::size_t s = 0; s < sys.size(); ++s) {
    phi[s] = rng.normal();
    mean += sys.weights()[s] * phi[s];
  }
  for (double& v : phi) v -= mean;
  return phi;
}

}  // namespace erglab
