#pragma once

// Pesin blocks: the prefix-average condition along f^ell orbits, its maximal
// function, the exact decision on periodic orbits, block measures and the
// parameter pipeline of the block lemma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erglab/atomic_measure.hpp"
#include "erglab/domination.hpp"
#include "erglab/errors.hpp"
#include "erglab/linalg.hpp"
#include "erglab/spectrum.hpp"
#include "erglab/systems.hpp"

namespace erglab {

// Slack on the strict inequality "average < -1": averages within 1e-12 of
// the threshold count as violations.
inline constexpr double kBlockSlack = 1e-12;

inline bool below_block_threshold(double average) { return average < -1.0 - kBlockSlack; }

enum class BlockSide { s, u, both };

inline std::string to_string(BlockSide side) {
  switch (side) {
    case BlockSide::s: return "s";
    case BlockSide::u: return "u";
    case BlockSide::both: return "both";
  }
  return "?";
}

inline BlockSide parse_block_side(const std::string& text) {
  if (text == "s") return BlockSide::s;
  if (text == "u") return BlockSide::u;
  if (text == "both") return BlockSide::both;
  throw std::invalid_argument("unknown block side '" + text + "' (expected s, u or both)");
}

struct BlockParams {
  std::size_t ell = 1;
  int index = 1;             // dimension of E^cu
  std::size_t horizon = 30;  // splitting estimation horizon (smooth systems)
  BlockSide side = BlockSide::s;
};

struct MaximalValue {
  double phi_star = 0.0;
  std::size_t argmax = 1;
};

// max over 1 <= n <= length of the prefix averages; smallest maximiser.
inline MaximalValue maximal_function(std::span<const double> vals) {
  if (vals.empty()) throw std::invalid_argument("maximal_function: empty sequence");
  MaximalValue out{-std::numeric_limits<double>::infinity(), 1};
  double s = 0.0;
  for (std::size_t n = 1; n <= vals.size(); ++n) {
    s += vals[n - 1];
    const double avg = s / static_cast<double>(n);
    if (avg > out.phi_star) {
      out.phi_star = avg;
      out.argmax = n;
    }
  }
  return out;
}

struct BlockVerdict {
  bool member = false;
  double phi_star = 0.0;
  std::size_t argmax = 1;
  std::optional<std::size_t> first_violation;
  std::size_t checked_to = 0;  // largest n examined
  bool exact = false;          // false: truncated verdict
};

// Block verdict from the per-step values a_j = log||Df^ell|E^cs|| at f^{ell j}x.
inline BlockVerdict block_verdict(std::span<const double> a) {
  BlockVerdict v;
  const MaximalValue mv = maximal_function(a);
  v.phi_star = mv.phi_star;
  v.argmax = mv.argmax;
  v.checked_to = a.size();
  double s = 0.0;
  for (std::size_t n = 1; n <= a.size(); ++n) {
    s += a[n - 1];
    if (!below_block_threshold(s / static_cast<double>(n))) {
      v.first_violation = n;
      break;
    }
  }
  v.member = !v.first_violation.has_value();
  return v;
}

// s-side values along a given splitting: the splitting must cover the orbit
// positions 0, ell, ..., ell (n_max - 1).
template <DynamicalSystem S>
std::vector<double> block_values(const S& sys, const SplittingEstimate<typename S::point_type>& split,
                                 std::size_t ell, std::size_t n_max) {
  if (ell < 1 || n_max < 1) throw std::invalid_argument("block_values: ell and n_max must be positive");
  const std::size_t needed = ell * (n_max - 1) + 1;
  if (split.length() < needed) throw std::invalid_argument("block_values: splitting too short for n_max");
  const auto seg = orbit(sys, split.points.front(), ell * n_max);
  std::vector<double> a(n_max);
  for (std::size_t j = 0; j < n_max; ++j) {
    const std::span<const Matrix> factors(seg.matrices.data() + ell * j, ell);
    a[j] = restricted_product(factors, split.cs[ell * j]).log_sv.front();
  }
  return a;
}

template <DynamicalSystem S>
BlockVerdict in_block(const S& sys, const SplittingEstimate<typename S::point_type>& split, std::size_t ell,
                      std::size_t n_max) {
  const auto a = block_values(sys, split, ell, n_max);
  return block_verdict(a);
}

// Truncated membership in Bl^s, Bl^u = Bl^s of the inverse, or both, with the
// splitting estimated along the orbit.
template <DynamicalSystem S>
BlockVerdict in_block(const S& sys, const BlockParams& params, const typename S::point_type& x, std::size_t n_max) {
  if (params.ell < 1) throw std::invalid_argument("in_block: ell must be positive");
  const std::size_t length = params.ell * (n_max - 1) + 1;
  auto side_s = [&](const auto& system, int index) {
    const auto split = estimate_splitting(system, x, index, params.horizon, length);
    return in_block(system, split, params.ell, n_max);
  };
  if (params.side == BlockSide::s) return side_s(sys, params.index);
  const InverseSystem<S> inv(sys);
  const BlockVerdict u = side_s(inv, sys.dim() - params.index);
  if (params.side == BlockSide::u) return u;
  BlockVerdict s = side_s(sys, params.index);
  if (!s.member) return s;
  return u;
}

namespace detail {

// The cocycle along the cycle of x restricted to the exact E^cs, in
// orthonormal E^cs coordinates: blocks[k] = Q_{k+1}^T A(f^k x) Q_k.
inline std::vector<Matrix> cs_blocks(const FiniteSystem& sys, State x, int index) {
  const SplittingEstimate<State> split = exact_splitting_periodic(sys, x, index);
  const std::size_t p = split.length();
  std::vector<Matrix> blocks;
  for (std::size_t k = 0; k < p; ++k)
    blocks.push_back(split.cs[(k + 1) % p].transpose() * sys.jacobian(split.points[k]) * split.cs[k]);
  return blocks;
}

// log ||A^ell | E^cs|| starting at position k of the cycle.
inline double cs_log_norm(const std::vector<Matrix>& blocks, std::size_t k, std::size_t ell) {
  ProductTracker t(Matrix::Identity(blocks.front().rows(), blocks.front().rows()));
  for (std::size_t q = 0; q < ell; ++q) t.push(blocks[(k + q) % blocks.size()]);
  return t.log_sv().front();
}

// Exact s-side decision on the cycle of a periodic state.
inline BlockVerdict in_block_exact_s(const FiniteSystem& sys, std::size_t ell, int index, State x) {
  const std::vector<Matrix> blocks = cs_blocks(sys, x, index);
  const std::size_t p0 = blocks.size();
  const std::size_t p = p0 / std::gcd(p0, ell);
  std::vector<double> shifted(p);  // a_j + 1 + slack
  for (std::size_t j = 0; j < p; ++j) shifted[j] = cs_log_norm(blocks, (ell * j) % p0, ell) + 1.0 + kBlockSlack;
  std::vector<double> prefix(p + 1, 0.0);
  for (std::size_t r = 0; r < p; ++r) prefix[r + 1] = prefix[r] + shifted[r];
  BlockVerdict v;
  v.exact = true;
  const double drift = -prefix[p];
  double top = 0.0;
  for (std::size_t r = 0; r < p; ++r) top = std::max(top, prefix[r]);
  const std::size_t bound = drift > 0.0 ? (static_cast<std::size_t>(std::ceil(top / drift)) + 1) * p : p;
  double s = 0.0;
  for (std::size_t n = 1; n <= bound; ++n) {
    s += shifted[(n - 1) % p];
    v.checked_to = n;
    if (!(s < 0.0)) {
      v.first_violation = n;
      break;
    }
  }
  v.member = !v.first_violation.has_value();
  std::vector<double> a(std::max(bound, p));
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = shifted[n % p] - 1.0 - kBlockSlack;
  const MaximalValue mv = maximal_function(a);
  v.phi_star = mv.phi_star;
  v.argmax = mv.argmax;
  return v;
}

}  // namespace detail

// Per-step values a_j = log ||A^ell | E^cs|| at f^{ell j} x, j < p, on the
// cycle of x (the sequence is periodic in j with this period p).
inline std::vector<double> block_values_periodic(const FiniteSystem& sys, std::size_t ell, int index, State x) {
  const std::vector<Matrix> blocks = detail::cs_blocks(sys, x, index);
  const std::size_t p0 = blocks.size();
  const std::size_t p = p0 / std::gcd(p0, ell);
  std::vector<double> a(p);
  for (std::size_t j = 0; j < p; ++j) a[j] = detail::cs_log_norm(blocks, (ell * j) % p0, ell);
  return a;
}

// Untruncated verdict on a periodic orbit via the finite periodic reduction.
inline BlockVerdict in_block_exact_periodic(const FiniteSystem& sys, const BlockParams& params, State x) {
  if (params.ell < 1) throw std::invalid_argument("in_block_exact_periodic: ell must be positive");
  if (x.index >= sys.size()) throw std::invalid_argument("in_block_exact_periodic: state out of range");
  if (params.side == BlockSide::s) return detail::in_block_exact_s(sys, params.ell, params.index, x);
  const FiniteSystem inv = inverse_system(sys);
  const BlockVerdict u = detail::in_block_exact_s(inv, params.ell, sys.dim() - params.index, x);
  if (params.side == BlockSide::u) return u;
  BlockVerdict s = detail::in_block_exact_s(sys, params.ell, params.index, x);
  return s.member ? u : s;
}

// Weighted fraction of member samples; samples without a splitting count as
// non-members.
template <DynamicalSystem S>
double block_measure(const S& sys, const BlockParams& params, const AtomicMeasure<typename S::point_type>& samples,
                     std::size_t n_max) {
  double frac = 0.0;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    try {
      if (in_block(sys, params, samples.support()[a], n_max).member) frac += samples.weights()[a];
    } catch (const no_gap_error&) {
    } catch (const degenerate_cocycle&) {
    }
  }
  return frac;
}

inline double block_measure_exact(const FiniteSystem& sys, const BlockParams& params,
                                  const AtomicMeasure<State>& mu) {
  double frac = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a)
    if (in_block_exact_periodic(sys, params, mu.support()[a]).member) frac += mu.weights()[a];
  return frac;
}

inline std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

inline constexpr std::size_t kEllMax = 10000;

struct BlockChoice {
  double alpha = 0.0;
  std::size_t ell = 0;
};

// Largest grid alpha with weight{lambda_cs > -alpha} < eta, then the smallest
// ell > 1/(alpha eta) with mean |finite_norm(ell) - lambda_cs| < alpha eta.
inline std::optional<BlockChoice> choose_block_params(
    const std::vector<double>& lambda_cs, const std::vector<double>& weights, double eta,
    const std::function<std::vector<double>(std::size_t)>& finite_norm, std::vector<double> alpha_grid = {},
    std::size_t ell_max = kEllMax) {
  if (!(eta > 0.0)) throw std::invalid_argument("choose_block_params: eta must be positive");
  if (lambda_cs.size() != weights.size()) throw std::invalid_argument("choose_block_params: size mismatch");
  if (alpha_grid.empty()) alpha_grid = default_alpha_grid();
  std::sort(alpha_grid.begin(), alpha_grid.end(), std::greater<>());
  std::optional<double> alpha;
  for (double a : alpha_grid) {
    double bad = 0.0;
    for (std::size_t k = 0; k < lambda_cs.size(); ++k)
      if (lambda_cs[k] > -a) bad += weights[k];
    if (bad < eta) {
      alpha = a;
      break;
    }
  }
  if (!alpha) return std::nullopt;
  const double target = *alpha * eta;
  for (std::size_t ell = static_cast<std::size_t>(std::floor(1.0 / target)) + 1; ell <= ell_max; ++ell) {
    if (!(static_cast<double>(ell) > 1.0 / target)) continue;
    const auto vals = finite_norm(ell);
    double dev = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k) dev += weights[k] * std::abs(vals[k] - lambda_cs[k]);
    if (dev < target) return BlockChoice{*alpha, ell};
  }
  return std::nullopt;
}

struct BlockLemmaParams {
  double eta = 0.1;
  double alpha = 1.0;
  std::size_t ell = 1;
  int index = 1;
  AtomicMeasure<State> mu;
};

struct BlockLemmaCheck {
  bool c1 = false, c2 = false, c3 = false;
  double c1_mass = 0.0;       // mu{lambda_cs > -alpha}
  double c3_deviation = 0.0;  // integral |finite norm - lambda_cs|
  double non_member = 0.0;    // mu(complement of Bl^s)
  bool hypotheses_hold = false;
  bool conclusion_holds = false;
  double margin = 0.0;  // 3 eta - non_member
};

// Throws std::invalid_argument unless f_* mu = mu within 1e-12.
inline void require_invariant(const FiniteSystem& sys, const AtomicMeasure<State>& mu) {
  std::vector<double> w(sys.size(), 0.0), pushed(sys.size(), 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const State s = mu.support()[a];
    if (s.index >= sys.size()) throw std::invalid_argument("measure atom outside the state space");
    w[s.index] += mu.weights()[a];
    pushed[sys.map(s).index] += mu.weights()[a];
  }
  for (std::size_t s = 0; s < sys.size(); ++s)
    if (std::abs(w[s] - pushed[s]) > 1e-12) throw std::invalid_argument("measure is not invariant");
}

// lambda_cs at a periodic state: the (index + 1)-th exponent.
inline double lambda_cs(const FiniteSystem& sys, State s, int index) {
  return exact_spectrum_periodic(sys, s).exponents.at(index);
}

// (1/ell) log ||A^ell | E^cs|| at a periodic state, with exact E^cs.
inline double finite_cs_norm(const FiniteSystem& sys, State s, int index, std::size_t ell) {
  if (ell < 1) throw std::invalid_argument("finite_cs_norm: ell must be positive");
  return detail::cs_log_norm(detail::cs_blocks(sys, s, index), 0, ell) / static_cast<double>(ell);
}

// finite_cs_norm for a fixed list of states and a nondecreasing sequence of
// ell, extending the products incrementally.
class FiniteCsNorms {
 public:
  FiniteCsNorms(const FiniteSystem& sys, std::vector<State> states, int index) {
    for (State s : states) {
      blocks_.push_back(detail::cs_blocks(sys, s, index));
      trackers_.emplace_back(Matrix::Identity(blocks_.back().front().rows(), blocks_.back().front().rows()));
    }
  }

  std::vector<double> operator()(std::size_t ell) {
    if (ell < 1) throw std::invalid_argument("FiniteCsNorms: ell must be positive");
    if (ell < pushed_) {
      for (std::size_t k = 0; k < trackers_.size(); ++k)
        trackers_[k] = ProductTracker(Matrix::Identity(blocks_[k].front().rows(), blocks_[k].front().rows()));
      pushed_ = 0;
    }
    for (; pushed_ < ell; ++pushed_)
      for (std::size_t k = 0; k < trackers_.size(); ++k) trackers_[k].push(blocks_[k][pushed_ % blocks_[k].size()]);
    std::vector<double> out;
    for (const auto& t : trackers_) out.push_back(t.log_sv().front() / static_cast<double>(ell));
    return out;
  }

 private:
  std::vector<std::vector<Matrix>> blocks_;
  std::vector<ProductTracker> trackers_;
  std::size_t pushed_ = 0;
};

inline BlockLemmaCheck check_block_lemma(const FiniteSystem& sys, const BlockLemmaParams& p) {
  if (!(p.eta > 0.0) || !(p.alpha > 0.0) || p.ell < 1)
    throw std::invalid_argument("check_block_lemma: need eta, alpha > 0 and ell >= 1");
  require_invariant(sys, p.mu);
  BlockLemmaCheck out;
  const BlockParams bp{p.ell, p.index, 0, BlockSide::s};
  for (std::size_t a = 0; a < p.mu.size(); ++a) {
    const State s = p.mu.support()[a];
    const double w = p.mu.weights()[a];
    const double lcs = lambda_cs(sys, s, p.index);
    if (lcs > -p.alpha) out.c1_mass += w;
    out.c3_deviation += w * std::abs(finite_cs_norm(sys, s, p.index, p.ell) - lcs);
    if (!in_block_exact_periodic(sys, bp, s).member) out.non_member += w;
  }
  out.c1 = out.c1_mass < p.eta;
  out.c2 = static_cast<double>(p.ell) > 1.0 / (p.alpha * p.eta);
  out.c3 = out.c3_deviation < p.alpha * p.eta;
  out.hypotheses_hold = out.c1 && out.c2 && out.c3;
  out.conclusion_holds = out.non_member < 3.0 * p.eta;
  out.margin = 3.0 * p.eta - out.non_member;
  return out;
}

}  // namespace erglab
