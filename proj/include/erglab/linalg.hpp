#pragma once

// Small dense linear algebra shared by the cocycle modules: thin QR by
// twice-iterated modified Gram-Schmidt, exterior-power norms, principal
// angles, and numerically stable singular data of long matrix products.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "erglab/errors.hpp"

namespace erglab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative size below which a Gram-Schmidt residual counts as rank loss.
inline constexpr double kRankLossTol = 1e-13;

// Thin QR of `frame` in place (columns become orthonormal). Returns the k x k
// upper triangular factor with positive diagonal.
inline Matrix thin_qr(Matrix& frame) {
  const Eigen::Index k = frame.cols();
  Matrix r = Matrix::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double before = frame.col(j).norm();
    if (!std::isfinite(before)) throw degenerate_cocycle("non-finite column in tangent frame");
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const double c = frame.col(i).dot(frame.col(j));
        r(i, j) += c;
        frame.col(j) -= c * frame.col(i);
      }
    }
    const double after = frame.col(j).norm();
    if (!(after > kRankLossTol * before) || after == 0.0)
      throw degenerate_cocycle("rank loss while re-orthonormalising column " + std::to_string(j));
    r(j, j) = after;
    frame.col(j) /= after;
  }
  return r;
}

// Orthonormal basis of the column span of `m` (assumed full column rank).
inline Matrix orthonormalize(Matrix m) {
  thin_qr(m);
  return m;
}

// Orthonormal basis of the orthogonal complement of span(q), q orthonormal.
inline Matrix orthogonal_complement(const Matrix& q) {
  const Eigen::Index d = q.rows();
  Eigen::JacobiSVD<Matrix> svd(q, Eigen::ComputeFullU);
  return svd.matrixU().rightCols(d - q.cols());
}

inline std::vector<double> singular_values(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

// ||wedge^i A||: the product of the i largest singular values.
inline double exterior_norm(const Matrix& a, int i) {
  const int d = static_cast<int>(std::min(a.rows(), a.cols()));
  if (i < 1 || i > d) throw std::invalid_argument("exterior_norm: index out of range");
  const auto s = singular_values(a);
  double p = 1.0;
  for (int j = 0; j < i; ++j) p *= s[j];
  return p;
}

// Principal angles (ascending) between span(a) and span(b), both orthonormal.
inline std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
  const auto cosines = singular_values(a.transpose() * b);
  std::vector<double> angles;
  angles.reserve(cosines.size());
  for (double c : cosines) angles.push_back(std::acos(std::clamp(c, 0.0, 1.0)));
  std::sort(angles.begin(), angles.end());
  return angles;
}

inline double smallest_principal_angle(const Matrix& a, const Matrix& b) {
  const auto angles = principal_angles(a, b);
  return angles.empty() ? M_PI / 2 : angles.front();
}

// Grassmannian distance between equal-dimensional subspaces: the largest
// principal angle, computed from the sine side so that small angles keep
// full relative accuracy.
inline double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("subspace_distance: dimension mismatch");
  const Matrix residual = a - b * (b.transpose() * a);
  const auto s = singular_values(residual);
  const double sine = s.empty() ? 0.0 : s.front();
  return std::asin(std::clamp(sine, 0.0, 1.0));
}

// Angle between a vector and a subspace with orthonormal basis q.
inline double angle_to_subspace(const Vector& v, const Matrix& q) {
  const double n = v.norm();
  if (n == 0.0) return 0.0;
  const Vector u = v / n;
  const double cosine = (q.transpose() * u).norm();
  const double sine = (u - q * (q.transpose() * u)).norm();
  return std::atan2(sine, cosine);
}

// Singular data of P = A_{m-1} ... A_1 A_0 applied to span(basis), computed
// by pushing the frame through the product with QR at every factor:
// P * basis = Q * T, with T kept in graded form T = diag(exp(log_diag)) * unit
// where unit is upper triangular with unit diagonal.
struct RestrictedProduct {
  Matrix frame;                  // final orthonormal frame Q
  Matrix unit;                   // unit upper triangular factor
  std::vector<double> log_diag;  // log of the diagonal of T
  std::vector<double> log_sv;    // log singular values of P * basis, descending

  // T / exp(max log_diag).
  Matrix scaled_triangle() const {
    const double top = *std::max_element(log_diag.begin(), log_diag.end());
    Matrix t = unit;
    for (std::size_t i = 0; i < log_diag.size(); ++i) t.row(i) *= std::exp(log_diag[i] - top);
    return t;
  }
};

namespace detail {

// Each log singular value is taken from whichever of T and T^{-1} holds it
// well above roundoff; values buried on both sides fall back to the graded
// diagonal, which they approach as the spread grows.
inline std::vector<double> graded_log_sv(const Matrix& unit, const std::vector<double>& g) {
  const Eigen::Index k = unit.rows();
  if (k == 0) return {};
  constexpr double kTrusted = 25.0;
  const double gmax = *std::max_element(g.begin(), g.end());
  const double gmin = *std::min_element(g.begin(), g.end());
  Matrix t = unit, ti = unit.triangularView<Eigen::UnitUpper>().solve(Matrix::Identity(k, k));
  for (Eigen::Index i = 0; i < k; ++i) {
    t.row(i) *= std::exp(g[i] - gmax);
    ti.col(i) *= std::exp(gmin - g[i]);
  }
  const auto top = singular_values(t);
  const auto bottom = singular_values(ti);
  std::vector<double> sorted_g = g;
  std::sort(sorted_g.begin(), sorted_g.end(), std::greater<>());
  std::vector<double> out(k);
  const double a0 = std::log(top[0]) + gmax;
  const double bl = gmin - std::log(bottom[0]);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double a = top[j] > 0.0 ? std::log(top[j]) + gmax : -std::numeric_limits<double>::infinity();
    const double sb = bottom[k - 1 - j];
    const double b = sb > 0.0 ? gmin - std::log(sb) : std::numeric_limits<double>::infinity();
    if (a - a0 > -kTrusted)
      out[j] = a;
    else if (b - bl < kTrusted)
      out[j] = b;
    else
      out[j] = sorted_g[j];
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace detail

// Incremental form of restricted_product: push factors one at a time and
// query singular data of the partial product.
class ProductTracker {
 public:
  explicit ProductTracker(const Matrix& basis)
      : frame_(basis), unit_(Matrix::Identity(basis.cols(), basis.cols())), log_diag_(basis.cols(), 0.0) {}

  void push(const Matrix& a) {
    const Eigen::Index k = frame_.cols();
    frame_ = a * frame_;
    Matrix r = thin_qr(frame_);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i + 1; j < k; ++j) r(i, j) *= std::exp(log_diag_[j] - log_diag_[i]);
    unit_ = r * unit_;
    for (Eigen::Index i = 0; i < k; ++i) {
      log_diag_[i] += std::log(r(i, i));
      unit_.row(i) /= r(i, i);
    }
    if (!unit_.allFinite()) throw degenerate_cocycle("product collapsed");
  }

  std::vector<double> log_sv() const { return detail::graded_log_sv(unit_, log_diag_); }

  RestrictedProduct result() const { return {frame_, unit_, log_diag_, log_sv()}; }

 private:
  Matrix frame_;
  Matrix unit_;
  std::vector<double> log_diag_;
};

inline RestrictedProduct restricted_product(std::span<const Matrix> factors, const Matrix& basis) {
  ProductTracker t(basis);
  for (const Matrix& a : factors) t.push(a);
  return t.result();
}

// Top-k left singular subspace of the product (factors applied in order) and
// its log singular values. Stable for products whose singular values span
// many orders of magnitude.
struct ProductSvd {
  Matrix left;                 // d x k orthonormal
  std::vector<double> log_sv;  // all d log singular values, descending
};

inline ProductSvd product_left_singular(std::span<const Matrix> factors, Eigen::Index dim, Eigen::Index k) {
  const RestrictedProduct rp = restricted_product(factors, Matrix::Identity(dim, dim));
  Eigen::JacobiSVD<Matrix> svd(rp.scaled_triangle(), Eigen::ComputeFullU);
  ProductSvd out;
  out.left = rp.frame * svd.matrixU().leftCols(k);
  out.log_sv = rp.log_sv;
  return out;
}

// log ||wedge^i P|| for P = A_{m-1} ... A_0 without forming P explicitly.
inline double log_exterior_norm_product(std::span<const Matrix> factors, Eigen::Index dim, int i) {
  if (i < 1 || i > dim) throw std::invalid_argument("exterior power index out of range");
  const RestrictedProduct rp = restricted_product(factors, Matrix::Identity(dim, dim));
  double s = 0.0;
  for (int j = 0; j < i; ++j) s += rp.log_sv[j];
  return s;
}

// Invariant subspace of m belonging to its k eigenvalues of largest modulus,
// as an orthonormal d x k basis: the range of prod_j (m - mu_j) over the
// remaining eigenvalues mu_j (generalised eigenspace, so defective m is fine).
// The caller is responsible for a strict modulus gap between the groups.
inline Matrix dominant_subspace(const Matrix& m, Eigen::Index k) {
  const Eigen::Index d = m.rows();
  if (k < 0 || k > d) throw std::invalid_argument("dominant_subspace: k out of range");
  if (k == d) return Matrix::Identity(d, d);
  if (k == 0) return Matrix(d, 0);
  Eigen::EigenSolver<Matrix> es(m, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<Eigen::Index> order(d);
  for (Eigen::Index j = 0; j < d; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(ev[a]) > std::abs(ev[b]); });
  const Eigen::MatrixXcd mc = m.cast<std::complex<double>>();
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(d, d);
  for (Eigen::Index j = k; j < d; ++j) {
    p = (mc - ev[order[j]] * Eigen::MatrixXcd::Identity(d, d)) * p;
    p /= p.cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(p.real(), Eigen::ComputeFullU);
  return svd.matrixU().leftCols(k);
}

}  // namespace erglab
