#pragma once

// Reference values computed without the library: closed forms for 2x2
// matrices, brute-force loops, and frozen constants checked against them.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// log((3 + sqrt 5) / 2), frozen to 17 digits.
inline constexpr double kCatLambda = 0.96242365011920689;
// (1/2) log 6
inline constexpr double kHalfLog6 = 0.89587973461402750;
// stable eigenvalue of [[1+K, 1], [K, 1]] at K = 1.5
inline constexpr double kStdStable = 0.31385933836549284;

struct Eig2 {
  double lo, hi;            // real eigenvalues, lo < hi
  Eigen::Vector2d v_lo, v_hi;  // unit eigenvectors
};

// Eigen-decomposition of a real 2x2 matrix with real distinct eigenvalues,
// from the characteristic polynomial.
inline Eig2 eig2(double a, double b, double c, double d) {
  const double tr = a + d, det = a * d - b * c;
  const double disc = std::sqrt(tr * tr / 4 - det);
  Eig2 e;
  e.hi = tr / 2 + disc;
  e.lo = det / e.hi;
  auto vec = [&](double mu) {
    Eigen::Vector2d v = std::abs(b) > std::abs(c) ? Eigen::Vector2d(b, mu - a) : Eigen::Vector2d(mu - d, c);
    return Eigen::Vector2d(v.normalized());
  };
  e.v_lo = vec(e.lo);
  e.v_hi = vec(e.hi);
  return e;
}

// Angle between two lines through the origin, from the normal component
// (acos loses half the digits near 0).
inline double line_angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const Eigen::VectorXd a = u.normalized(), b = v.normalized();
  const double c = a.dot(b);
  return std::atan2((b - c * a).norm(), std::abs(c));
}

// Singular values, descending, from the eigenvalues of A^T A.
inline std::vector<double> singular_values(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a);
  std::vector<double> s;
  for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) s.push_back(std::sqrt(std::max(0.0, es.eigenvalues()[k])));
  return s;
}

// Cycles of a permutation by following each unseen state.
inline std::vector<std::vector<std::size_t>> cycles(const std::vector<std::size_t>& perm) {
  std::vector<bool> seen(perm.size(), false);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < perm.size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> c;
    for (std::size_t t = s; !seen[t]; t = perm[t]) {
      seen[t] = true;
      c.push_back(t);
    }
    out.push_back(c);
  }
  return out;
}

inline std::size_t cycle_len(const std::vector<std::size_t>& perm, std::size_t s) {
  std::size_t n = 1;
  for (std::size_t t = perm[s]; t != s; t = perm[t]) ++n;
  return n;
}

inline std::size_t lcm_of_cycles(const std::vector<std::size_t>& perm) {
  std::size_t l = 1;
  for (std::size_t s = 0; s < perm.size(); ++s) l = std::lcm(l, cycle_len(perm, s));
  return l;
}

// Prefix-average membership: every (1/n) sum_{j<n} a_j < -1 for n <= a.size().
inline bool prefix_member(const std::vector<double>& a) {
  double s = 0.0;
  for (std::size_t n = 1; n <= a.size(); ++n) {
    s += a[n - 1];
    if (!(s / static_cast<double>(n) < -1.0)) return false;
  }
  return true;
}

// max_n (1/n) sum_{j<n} a_j and the first n attaining it.
inline std::pair<double, std::size_t> prefix_max(const std::vector<double>& a) {
  double s = 0.0, best = -INFINITY;
  std::size_t arg = 0;
  for (std::size_t n = 1; n <= a.size(); ++n) {
    s += a[n - 1];
    if (s / static_cast<double>(n) > best) {
      best = s / static_cast<double>(n);
      arg = n;
    }
  }
  return {best, arg};
}

inline Eigen::MatrixXd rotation(double degrees) {
  const double t = degrees * M_PI / 180.0;
  Eigen::MatrixXd r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

inline Eigen::MatrixXd diag2(double a, double b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace oracle
