#pragma once

// Lyapunov spectra of derivative cocycles: QR estimation along orbits, the
// exact periodic-product oracle, exterior-power growth functionals and index
// classification.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "erglab/atomic_measure.hpp"
#include "erglab/errors.hpp"
#include "erglab/linalg.hpp"
#include "erglab/systems.hpp"

namespace erglab {

// Tolerance of the running zero-sum check: log accumulation roundoff grows
// linearly in the number of iterates.
inline double sum_tol(std::size_t n_used, int dim) { return 1e-8 * static_cast<double>(n_used) * dim; }

template <class P>
struct LyapunovSpectrum {
  std::vector<double> exponents;  // descending, nats per iterate
  std::size_t n_used = 0;
  P point{};
  double residual = 0.0;  // max spread of the running estimates over the last 10% of iterates

  double sum() const { return std::accumulate(exponents.begin(), exponents.end(), 0.0); }
  int dim() const { return static_cast<int>(exponents.size()); }
  bool zero_sum_ok() const { return std::abs(sum()) <= sum_tol(n_used, dim()); }
};

// Floor on the default transient.
inline constexpr std::size_t kMinTransient = 2000;

struct SpectrumOptions {
  // Iterates spent aligning the frame before averaging starts; defaults to
  // max(n, kMinTransient).
  std::optional<std::size_t> transient;
};

// QR (Benettin) estimate from the identity frame at x. After `transient`
// discarded iterates, the logs of the R-diagonals are averaged over n
// iterates with re-orthonormalisation at every step.
template <DynamicalSystem S>
LyapunovSpectrum<typename S::point_type> estimate_spectrum(const S& sys, const typename S::point_type& x,
                                                           std::size_t n, SpectrumOptions opts = {}) {
  const int d = sys.dim();
  if (n < static_cast<std::size_t>(d)) throw std::invalid_argument("estimate_spectrum: need n >= dimension");
  const std::size_t transient = opts.transient.value_or(std::max(n, kMinTransient));
  const std::size_t window_start = n - std::max<std::size_t>(1, n / 10);

  Matrix frame = Matrix::Identity(d, d);
  std::vector<double> sums(d, 0.0), run_min(d, std::numeric_limits<double>::infinity()),
      run_max(d, -std::numeric_limits<double>::infinity());
  auto p = x;
  const std::size_t total = transient + n;
  for (std::size_t step = 0; step < total; ++step) {
    if (!sys.is_finite(p)) throw numeric_overflow(step);
    const Matrix j = sys.jacobian(p);
    if (!j.allFinite()) throw numeric_overflow(step);
    frame = j * frame;
    const Matrix r = thin_qr(frame);
    if (step >= transient) {
      const std::size_t k = step - transient;
      for (int c = 0; c < d; ++c) sums[c] += std::log(r(c, c));
      if (k >= window_start) {
        for (int c = 0; c < d; ++c) {
          const double est = sums[c] / static_cast<double>(k + 1);
          run_min[c] = std::min(run_min[c], est);
          run_max[c] = std::max(run_max[c], est);
        }
      }
    }
    p = sys.map(p);
  }

  LyapunovSpectrum<typename S::point_type> out;
  out.point = x;
  out.n_used = n;
  for (int c = 0; c < d; ++c) {
    out.exponents.push_back(sums[c] / static_cast<double>(n));
    out.residual = std::max(out.residual, run_max[c] - run_min[c]);
  }
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  return out;
}

// Exponents of a periodic state: (1/p) log of the eigenvalue moduli of the
// cycle product. Eigenvalues come from the real Schur form, so defective
// products need no special handling. Each modulus is read from the product or
// from its inverse, whichever holds it further above roundoff.
inline LyapunovSpectrum<State> exact_spectrum_periodic(const FiniteSystem& sys, State s) {
  if (s.index >= sys.size()) throw std::invalid_argument("exact_spectrum_periodic: state out of range");
  const std::size_t p = cycle_length(sys, s);
  auto log_moduli = [](const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    std::vector<double> out;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) out.push_back(std::log(std::abs(es.eigenvalues()[k])));
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
  };
  const Matrix m = cycle_product(sys, s);
  const Matrix mi = cycle_inverse_product(sys, s);
  const auto fwd = log_moduli(m);
  const auto bwd = log_moduli(mi);
  const double top_f = std::log(m.norm()), top_b = std::log(mi.norm());
  const std::size_t d = fwd.size();
  LyapunovSpectrum<State> out;
  out.point = s;
  out.n_used = p;
  for (std::size_t k = 0; k < d; ++k) {
    const double from_inverse = -bwd[d - 1 - k];
    const double v = fwd[k] - top_f >= from_inverse - top_b ? fwd[k] : from_inverse;
    out.exponents.push_back(v / static_cast<double>(p));
  }
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  return out;
}

struct ExteriorGrowth {
  std::vector<std::size_t> n_values;
  std::vector<double> values;  // L_i^(n) for each n
  double infimum = 0.0;        // min over the supplied n
};

// L_i^(n)(f, mu) = integral of (1/n) log ||wedge^i Df^n|| d mu, and its
// minimum over n_list standing in for the infimum over all n.
template <DynamicalSystem S>
ExteriorGrowth exterior_growth(const S& sys, const AtomicMeasure<typename S::point_type>& mu, int i,
                               const std::vector<std::size_t>& n_list) {
  if (n_list.empty()) throw std::invalid_argument("exterior_growth: empty n_list");
  if (i < 1 || i > sys.dim()) throw std::invalid_argument("exterior_growth: index out of range");
  const std::size_t n_max = *std::max_element(n_list.begin(), n_list.end());
  if (n_max < 1) throw std::invalid_argument("exterior_growth: n must be positive");
  ExteriorGrowth out;
  out.n_values = n_list;
  out.values.assign(n_list.size(), 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const auto seg = orbit(sys, mu.support()[a], n_max);
    for (std::size_t q = 0; q < n_list.size(); ++q) {
      const std::size_t n = n_list[q];
      const std::span<const Matrix> factors(seg.matrices.data(), n);
      out.values[q] += mu.weights()[a] * log_exterior_norm_product(factors, sys.dim(), i) / static_cast<double>(n);
    }
  }
  out.infimum = *std::min_element(out.values.begin(), out.values.end());
  return out;
}

struct IndexClass {
  int index = 0;     // number of positive exponents when nuh
  double gap = 0.0;  // lambda_index - lambda_{index+1}
  bool nuh = false;
};

// Nonuniform hyperbolicity of a spectrum at the given margin.
template <class P>
IndexClass classify_index(const LyapunovSpectrum<P>& spec, double margin) {
  const auto& e = spec.exponents;
  IndexClass out;
  for (double v : e)
    if (std::abs(v) <= margin) return out;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i - 1] > margin && e[i] < -margin) {
      out.index = static_cast<int>(i);
      out.gap = e[i - 1] - e[i];
      out.nuh = true;
      return out;
    }
  }
  return out;
}

struct ExponentGroup {
  double value = 0.0;
  int multiplicity = 0;
};

inline double default_gap_tolerance(std::size_t n_used) { return 10.0 / std::sqrt(static_cast<double>(n_used)); }

// Groups numerically equal exponents (consecutive gaps below tol); the group
// count estimates the number of distinct exponents.
template <class P>
std::vector<ExponentGroup> distinct_exponents(const LyapunovSpectrum<P>& spec, std::optional<double> tol = {}) {
  const double t = tol.value_or(default_gap_tolerance(std::max<std::size_t>(spec.n_used, 1)));
  std::vector<ExponentGroup> groups;
  double sum = 0.0;
  for (std::size_t k = 0; k < spec.exponents.size(); ++k) {
    const double v = spec.exponents[k];
    if (k > 0 && spec.exponents[k - 1] - v <= t) {
      sum += v;
      ++groups.back().multiplicity;
      groups.back().value = sum / groups.back().multiplicity;
    } else {
      groups.push_back({v, 1});
      sum = v;
    }
  }
  return groups;
}

}  // namespace erglab
