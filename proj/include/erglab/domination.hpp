#pragma once

// Oseledets splittings along orbits, the explicit domination test and cone
// field invariance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erglab/atomic_measure.hpp"
#include "erglab/errors.hpp"
#include "erglab/linalg.hpp"
#include "erglab/random.hpp"
#include "erglab/spectrum.hpp"
#include "erglab/systems.hpp"

namespace erglab {

inline constexpr double kGapTol = 1e-6;
inline constexpr double kTransverseTol = 1e-8;

template <class P>
struct SplittingEstimate {
  int index = 0;
  std::size_t horizon = 0;
  std::string method;
  std::vector<P> points;  // x_k for k = 0..length-1
  std::vector<Matrix> cu;  // d x i orthonormal
  std::vector<Matrix> cs;  // d x (d - i) orthonormal
  double equivariance_error = 0.0;
  double min_angle = M_PI / 2;

  std::size_t length() const { return points.size(); }
};

namespace detail {

template <DynamicalSystem S>
Matrix inverse_derivative(const S& sys, const typename S::point_type& x, const Matrix& j) {
  if constexpr (std::same_as<S, FiniteSystem>) {
    return sys.inverse_jacobian(sys.map(x));
  } else {
    return j.inverse();
  }
}

inline void require_gap(const std::vector<double>& log_sv, int k, std::size_t at) {
  if (log_sv[k - 1] - log_sv[k] < std::log1p(kGapTol))
    throw no_gap_error("no singular value gap at index " + std::to_string(k) + " (orbit position " +
                       std::to_string(at) + ")");
}

template <class P>
void finish_splitting(SplittingEstimate<P>& est, const std::vector<Matrix>& jac_at_points) {
  for (std::size_t k = 0; k < est.length(); ++k) {
    const double a = smallest_principal_angle(est.cu[k], est.cs[k]);
    if (!(a > kTransverseTol))
      throw degenerate_cocycle("splitting not transverse at orbit position " + std::to_string(k));
    est.min_angle = std::min(est.min_angle, a);
  }
  for (std::size_t k = 0; k + 1 < est.length(); ++k) {
    const Matrix& j = jac_at_points[k];
    est.equivariance_error = std::max(
        {est.equivariance_error, subspace_distance(orthonormalize(j * est.cu[k]), est.cu[k + 1]),
         subspace_distance(orthonormalize(j * est.cs[k]), est.cs[k + 1])});
  }
}

}  // namespace detail

// E^cu(k): top-i left singular subspace of Df^h(x_{k-h}); E^cs(k): bottom
// (d - i) right singular subspace of Df^h(x_k), obtained as the top left
// singular subspace of Df^{-h}(x_{k+h}). Covers k = 0..length-1.
template <DynamicalSystem S>
SplittingEstimate<typename S::point_type> estimate_splitting(const S& sys, const typename S::point_type& x, int i,
                                                             std::size_t horizon, std::size_t length = 1) {
  using P = typename S::point_type;
  const int d = sys.dim();
  if (i < 1 || i > d - 1) throw std::invalid_argument("estimate_splitting: index must lie in [1, d-1]");
  if (horizon < static_cast<std::size_t>(d)) throw std::invalid_argument("estimate_splitting: horizon < dimension");
  if (length < 1) throw std::invalid_argument("estimate_splitting: length must be positive");

  const std::size_t h = horizon;
  const std::size_t total = 2 * h + length;
  std::vector<P> pts(total);
  pts[h] = x;
  for (std::size_t j = h; j-- > 0;) {
    pts[j] = sys.inverse(pts[j + 1]);
    if (!sys.is_finite(pts[j])) throw numeric_overflow(h - j);
  }
  for (std::size_t j = h + 1; j < total; ++j) {
    pts[j] = sys.map(pts[j - 1]);
    if (!sys.is_finite(pts[j])) throw numeric_overflow(j - h);
  }
  std::vector<Matrix> jac(total - 1), inv(total - 1);
  for (std::size_t j = 0; j + 1 < total; ++j) {
    jac[j] = sys.jacobian(pts[j]);
    if (!jac[j].allFinite()) throw numeric_overflow(j);
    inv[j] = detail::inverse_derivative(sys, pts[j], jac[j]);
  }

  SplittingEstimate<P> est;
  est.index = i;
  est.horizon = h;
  est.method = "forward/backward horizon " + std::to_string(h);
  std::vector<Matrix> backward(h);
  std::vector<Matrix> jac_at_points;
  for (std::size_t k = 0; k < length; ++k) {
    const std::size_t at = h + k;
    const std::span<const Matrix> forward(jac.data() + at - h, h);
    const ProductSvd up = product_left_singular(forward, d, i);
    detail::require_gap(up.log_sv, i, k);
    for (std::size_t q = 0; q < h; ++q) backward[q] = inv[at + h - 1 - q];
    const ProductSvd down = product_left_singular(backward, d, d - i);
    detail::require_gap(down.log_sv, d - i, k);
    est.points.push_back(pts[at]);
    est.cu.push_back(up.left);
    est.cs.push_back(down.left);
    jac_at_points.push_back(jac[at]);
  }
  detail::finish_splitting(est, jac_at_points);
  return est;
}

// Exact splitting along the cycle of a periodic state: invariant subspaces of
// the cycle products for the top-i and bottom-(d - i) eigenvalue moduli.
inline SplittingEstimate<State> exact_splitting_periodic(const FiniteSystem& sys, State s, int i) {
  const int d = sys.dim();
  if (i < 1 || i > d - 1) throw std::invalid_argument("exact_splitting_periodic: index must lie in [1, d-1]");
  const std::size_t p = cycle_length(sys, s);
  SplittingEstimate<State> est;
  est.index = i;
  est.horizon = p;
  est.method = "exact periodic";
  std::vector<Matrix> jac;
  State t = s;
  for (std::size_t k = 0; k < p; ++k) {
    const Matrix m = cycle_product(sys, t);
    if (k == 0) {
      const auto ex = exact_spectrum_periodic(sys, t).exponents;
      if (static_cast<double>(p) * (ex[i - 1] - ex[i]) < std::log1p(kGapTol))
        throw no_gap_error("no eigenvalue modulus gap at index " + std::to_string(i));
    }
    est.points.push_back(t);
    est.cu.push_back(dominant_subspace(m, i));
    est.cs.push_back(dominant_subspace(cycle_inverse_product(sys, t), d - i));
    jac.push_back(sys.jacobian(t));
    t = sys.map(t);
  }
  detail::finish_splitting(est, jac);
  return est;
}

struct DominationReport {
  std::size_t k_first = 0;
  std::size_t k_last = 0;
  std::size_t n = 1;
  std::size_t m_max = 1;
  double constant = 2.0;
  std::optional<std::size_t> n_star;
  double worst_ratio = 0.0;  // over m in [n, m_max]
  bool pass = false;
  std::vector<double> log_ratio_by_m;  // entry m-1: min over k of the log ratio at m
};

// Domination ratio along the splitting: smallest expansion of Df^m on E^cu
// over largest expansion on E^cs, for m = 1..m_max and every covered k.
template <DynamicalSystem S>
DominationReport test_domination(const S& sys, const SplittingEstimate<typename S::point_type>& split,
                                 std::size_t n, std::size_t m_max, double constant = 2.0) {
  if (n < 1 || n > m_max) throw std::invalid_argument("test_domination: need 1 <= n <= m_max");
  if (split.length() == 0) throw std::invalid_argument("test_domination: empty splitting");
  if (!(constant > 0.0)) throw std::invalid_argument("test_domination: constant must be positive");
  DominationReport rep;
  rep.k_first = 0;
  rep.k_last = split.length() - 1;
  rep.n = n;
  rep.m_max = m_max;
  rep.constant = constant;
  rep.log_ratio_by_m.assign(m_max, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < split.length(); ++k) {
    const auto seg = orbit(sys, split.points[k], m_max);
    ProductTracker up(split.cu[k]), down(split.cs[k]);
    for (std::size_t m = 1; m <= m_max; ++m) {
      up.push(seg.matrices[m - 1]);
      down.push(seg.matrices[m - 1]);
      const double lr = up.log_sv().back() - down.log_sv().front();
      rep.log_ratio_by_m[m - 1] = std::min(rep.log_ratio_by_m[m - 1], lr);
    }
  }
  const double log_c = std::log(constant);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t m = n; m <= m_max; ++m) worst = std::min(worst, rep.log_ratio_by_m[m - 1]);
  rep.worst_ratio = std::exp(worst);
  rep.pass = worst > log_c;
  for (std::size_t m = m_max; m >= 1 && rep.log_ratio_by_m[m - 1] > log_c; --m) rep.n_star = m;
  return rep;
}

// Cones of aperture theta(x) about a center subspace C(x).
template <class P>
struct ConeField {
  std::function<Matrix(const P&)> center;  // d x k orthonormal
  std::function<double(const P&)> aperture;
  std::function<bool(const P&)> in_domain = [](const P&) { return true; };
};

template <class P>
ConeField<P> constant_cone(const Matrix& center, double aperture) {
  if (!(aperture > 0.0 && aperture < M_PI / 2)) throw std::invalid_argument("cone aperture must lie in (0, pi/2)");
  const Matrix c = orthonormalize(center);
  return {[c](const P&) { return c; }, [aperture](const P&) { return aperture; }};
}

namespace detail {

// Deterministic unit vectors on S^{m-1}: circles evenly, the 2-sphere by a
// Fibonacci lattice. On S^0 only +1 is returned unless both signs are asked.
inline std::vector<Vector> sphere_points(int m, std::size_t count, bool both_signs) {
  std::vector<Vector> out;
  if (m == 1) {
    out.push_back(Vector::Ones(1));
    if (both_signs) out.push_back(-Vector::Ones(1));
  } else if (m == 2) {
    for (std::size_t j = 0; j < count; ++j) {
      const double t = 2 * M_PI * static_cast<double>(j) / static_cast<double>(count);
      out.push_back((Vector(2) << std::cos(t), std::sin(t)).finished());
    }
  } else {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (std::size_t j = 0; j < count; ++j) {
      const double z = 1.0 - (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vector v = Vector::Zero(m);
      v(0) = r * std::cos(golden * static_cast<double>(j));
      v(1) = r * std::sin(golden * static_cast<double>(j));
      v(2) = z;
      out.push_back(v.normalized());
    }
  }
  return out;
}

}  // namespace detail

// Boundary rays cos(theta) u + sin(theta) w, u in C, w in its complement,
// up to the sign symmetry of lines: 2 rays in the plane, 64 otherwise.
inline std::vector<Vector> cone_boundary_rays(const Matrix& center, double aperture) {
  const Eigen::Index d = center.rows(), k = center.cols();
  const Matrix comp = orthogonal_complement(center);
  std::vector<Vector> us, ws;
  if (k == 1) {
    us = detail::sphere_points(1, 1, false);
    ws = detail::sphere_points(static_cast<int>(d - k), 64, true);
  } else if (d - k == 1) {
    us = detail::sphere_points(static_cast<int>(k), 64, false);
    ws = detail::sphere_points(1, 1, false);
  } else {
    us = detail::sphere_points(static_cast<int>(k), 8, false);
    ws = detail::sphere_points(static_cast<int>(d - k), 8, false);
  }
  std::vector<Vector> rays;
  for (const Vector& u : us)
    for (const Vector& w : ws) rays.push_back(std::cos(aperture) * (center * u) + std::sin(aperture) * (comp * w));
  return rays;
}

template <class P>
struct ConeReport {
  bool pass = false;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  std::vector<P> escapes;  // samples whose image (or itself) leaves the domain
};

template <DynamicalSystem S>
ConeReport<typename S::point_type> cone_invariance(const S& sys, const ConeField<typename S::point_type>& cones,
                                                   const std::vector<typename S::point_type>& samples) {
  ConeReport<typename S::point_type> rep;
  for (const auto& x : samples) {
    const auto fx = sys.map(x);
    if (!cones.in_domain(x) || !cones.in_domain(fx)) {
      rep.escapes.push_back(x);
      continue;
    }
    const Matrix j = sys.jacobian(x);
    const Matrix target = cones.center(fx);
    const double theta_fx = cones.aperture(fx);
    for (const Vector& ray : cone_boundary_rays(cones.center(x), cones.aperture(x)))
      rep.worst_margin = std::min(rep.worst_margin, theta_fx - angle_to_subspace(j * ray, target));
    ++rep.checked;
  }
  rep.pass = rep.checked > 0 && rep.worst_margin > 0.0;
  return rep;
}

template <class P>
struct DominatedSet {
  std::vector<bool> flags;
  double fraction = 0.0;
};

// Samples where the index-i domination test with constant n passes. Samples
// without a singular value gap fail.
template <DynamicalSystem S>
DominatedSet<typename S::point_type> find_dominated_set(const S& sys, int i,
                                                        const AtomicMeasure<typename S::point_type>& samples,
                                                        std::size_t n, std::size_t horizon,
                                                        std::optional<std::size_t> m_max = {}) {
  const std::size_t mm = m_max.value_or(std::max<std::size_t>(20, 2 * n));
  DominatedSet<typename S::point_type> out;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    bool ok = false;
    try {
      const auto split = estimate_splitting(sys, samples.support()[a], i, horizon);
      ok = test_domination(sys, split, n, mm).pass;
    } catch (const no_gap_error&) {
    } catch (const degenerate_cocycle&) {
    }
    out.flags.push_back(ok);
    if (ok) out.fraction += samples.weights()[a];
  }
  return out;
}

}  // namespace erglab
