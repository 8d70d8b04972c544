#pragma once

// The dynamical-system zoo. Every system exposes the same evaluation surface
// (see the DynamicalSystem concept): a point type, the map and its inverse,
// the derivative cocycle, and a metric. Smooth systems additionally expose a
// linear chart (displacement / shift) used by the graph transform.

#include <algorithm>
#include <cmath>
#include <compare>
#include <concepts>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "erglab/errors.hpp"
#include "erglab/linalg.hpp"
#include "erglab/random.hpp"

namespace erglab {

// A state of a finite system.
struct State {
  std::size_t index = 0;
  auto operator<=>(const State&) const = default;
};

template <class S>
concept DynamicalSystem = requires(const S& s, const typename S::point_type& p) {
  { s.dim() } -> std::convertible_to<int>;
  { s.map(p) } -> std::convertible_to<typename S::point_type>;
  { s.inverse(p) } -> std::convertible_to<typename S::point_type>;
  { s.jacobian(p) } -> std::convertible_to<Matrix>;
  { s.distance(p, p) } -> std::convertible_to<double>;
  { s.is_finite(p) } -> std::convertible_to<bool>;
};

// Systems on a vector space or torus with a flat linear chart.
template <class S>
concept SmoothSystem = DynamicalSystem<S> && std::same_as<typename S::point_type, Vector> &&
                       requires(const S& s, const Vector& p) {
                         { s.displacement(p, p) } -> std::convertible_to<Vector>;
                         { s.shift(p, p) } -> std::convertible_to<Vector>;
                       };

// ---------------------------------------------------------------------------
// Point helpers (ordering and equality used when merging measure atoms).

inline bool point_less(const State& a, const State& b) { return a < b; }
inline bool point_equal(const State& a, const State& b) { return a == b; }
inline bool point_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}
inline bool point_equal(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

inline std::vector<double> coordinates(const State& s) { return {static_cast<double>(s.index)}; }
inline std::vector<double> coordinates(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------

inline double wrap_unit(double v) {
  double w = v - std::floor(v);
  return w >= 1.0 ? 0.0 : w;
}

inline Vector wrap_torus(Vector v) {
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = wrap_unit(v[j]);
  return v;
}

// Smooth map of the flat torus [0,1)^dim. The map, inverse and Jacobian are
// given on lifts; outputs are reduced mod 1.
class TorusMap {
 public:
  using point_type = Vector;
  using Fn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  TorusMap(std::string name, int dim, std::vector<double> params, Fn lifted_map, Fn lifted_inverse,
           JacobianFn jacobian)
      : name_(std::move(name)),
        dim_(dim),
        params_(std::move(params)),
        map_(std::move(lifted_map)),
        inverse_(std::move(lifted_inverse)),
        jacobian_(std::move(jacobian)) {
    if (dim_ < 1) throw std::invalid_argument("TorusMap: dimension must be positive");
  }

  const std::string& name() const { return name_; }
  const std::vector<double>& params() const { return params_; }
  int dim() const { return dim_; }

  Vector map(const Vector& x) const { return wrap_torus(map_(x)); }
  Vector inverse(const Vector& x) const { return wrap_torus(inverse_(x)); }
  Matrix jacobian(const Vector& x) const { return jacobian_(x); }
  bool is_finite(const Vector& x) const { return x.allFinite(); }

  // Shortest lift of (to - from), componentwise in [-1/2, 1/2).
  Vector displacement(const Vector& from, const Vector& to) const {
    Vector d = to - from;
    for (Eigen::Index j = 0; j < d.size(); ++j) d[j] -= std::floor(d[j] + 0.5);
    return d;
  }
  Vector shift(const Vector& x, const Vector& v) const { return wrap_torus(x + v); }
  double distance(const Vector& a, const Vector& b) const { return displacement(a, b).norm(); }

 private:
  std::string name_;
  int dim_;
  std::vector<double> params_;
  Fn map_;
  Fn inverse_;
  JacobianFn jacobian_;
};

// Constant linear map of R^d (chart experiments and linear oracles).
class LinearMap {
 public:
  using point_type = Vector;

  explicit LinearMap(Matrix a, std::string name = "linear")
      : a_(std::move(a)), a_inv_(a_.inverse()), name_(std::move(name)) {
    if (a_.rows() != a_.cols()) throw std::invalid_argument("LinearMap: matrix must be square");
    if (!a_inv_.allFinite()) throw std::invalid_argument("LinearMap: matrix must be invertible");
  }

  const std::string& name() const { return name_; }
  const Matrix& matrix() const { return a_; }
  int dim() const { return static_cast<int>(a_.rows()); }
  Vector map(const Vector& x) const { return a_ * x; }
  Vector inverse(const Vector& x) const { return a_inv_ * x; }
  const Matrix& jacobian(const Vector&) const { return a_; }
  bool is_finite(const Vector& x) const { return x.allFinite(); }
  Vector displacement(const Vector& from, const Vector& to) const { return to - from; }
  Vector shift(const Vector& x, const Vector& v) const { return x + v; }
  double distance(const Vector& a, const Vector& b) const { return (a - b).norm(); }

 private:
  Matrix a_;
  Matrix a_inv_;
  std::string name_;
};

enum class Unimodularity { required, unchecked };

// Measure-preserving permutation of finitely many states carrying a linear
// cocycle: the exact model used as an oracle throughout.
class FiniteSystem {
 public:
  using point_type = State;

  FiniteSystem(std::vector<std::size_t> perm, std::vector<Matrix> cocycle, std::vector<double> weights = {},
               Unimodularity check = Unimodularity::required)
      : perm_(std::move(perm)), cocycle_(std::move(cocycle)), weights_(std::move(weights)) {
    const std::size_t n = perm_.size();
    if (n == 0) throw std::invalid_argument("FiniteSystem: no states");
    if (cocycle_.size() != n) throw std::invalid_argument("FiniteSystem: one matrix per state required");
    inv_.assign(n, n);
    for (std::size_t s = 0; s < n; ++s) {
      if (perm_[s] >= n || inv_[perm_[s]] != n) throw std::invalid_argument("FiniteSystem: perm is not a bijection");
      inv_[perm_[s]] = s;
    }
    dim_ = static_cast<int>(cocycle_.front().rows());
    for (std::size_t s = 0; s < n; ++s) {
      const Matrix& a = cocycle_[s];
      if (a.rows() != dim_ || a.cols() != dim_)
        throw std::invalid_argument("FiniteSystem: matrix " + std::to_string(s) + " has wrong shape");
      if (!a.allFinite()) throw std::invalid_argument("FiniteSystem: non-finite matrix entry");
      if (check == Unimodularity::required && std::abs(std::abs(a.determinant()) - 1.0) > 1e-12)
        throw std::invalid_argument("FiniteSystem: |det| of matrix " + std::to_string(s) + " differs from 1");
    }
    if (weights_.empty()) weights_.assign(n, 1.0 / static_cast<double>(n));
    if (weights_.size() != n) throw std::invalid_argument("FiniteSystem: weights size mismatch");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw std::invalid_argument("FiniteSystem: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("FiniteSystem: weights must sum to 1");
    for (std::size_t s = 0; s < n; ++s)
      if (std::abs(weights_[s] - weights_[perm_[s]]) > 1e-12)
        throw std::invalid_argument("FiniteSystem: weights are not invariant under perm");
    inverse_cocycle_.reserve(n);
    for (const Matrix& a : cocycle_) inverse_cocycle_.push_back(a.inverse());
  }

  int dim() const { return dim_; }
  std::size_t size() const { return perm_.size(); }
  State map(State s) const { return State{perm_.at(s.index)}; }
  State inverse(State s) const { return State{inv_.at(s.index)}; }
  const Matrix& jacobian(State s) const { return cocycle_.at(s.index); }
  // Derivative of the inverse map at s, i.e. (A_{perm^{-1} s})^{-1}.
  const Matrix& inverse_jacobian(State s) const { return inverse_cocycle_.at(inv_.at(s.index)); }
  double distance(State a, State b) const { return a == b ? 0.0 : 1.0; }
  bool is_finite(State s) const { return s.index < perm_.size(); }

  const std::vector<std::size_t>& permutation() const { return perm_; }
  const std::vector<Matrix>& cocycle() const { return cocycle_; }
  const std::vector<double>& weights() const { return weights_; }

  // Same permutation with every matrix multiplied by c (no longer conservative).
  FiniteSystem scaled(double c) const {
    std::vector<Matrix> m;
    m.reserve(cocycle_.size());
    for (const Matrix& a : cocycle_) m.push_back(c * a);
    return FiniteSystem(perm_, std::move(m), weights_, Unimodularity::unchecked);
  }

 private:
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> inv_;
  std::vector<Matrix> cocycle_;
  std::vector<Matrix> inverse_cocycle_;
  std::vector<double> weights_;
  int dim_ = 0;
};

// The inverse finite system: perm^{-1} with cocycle s -> (A_{perm^{-1} s})^{-1}.
inline FiniteSystem inverse_system(const FiniteSystem& sys) {
  std::vector<std::size_t> perm(sys.size());
  std::vector<Matrix> mats;
  mats.reserve(sys.size());
  for (std::size_t s = 0; s < sys.size(); ++s) {
    perm[s] = sys.inverse(State{s}).index;
    mats.push_back(sys.inverse_jacobian(State{s}));
  }
  return FiniteSystem(std::move(perm), std::move(mats), sys.weights(), Unimodularity::unchecked);
}

// f^{-1} with derivative cocycle (Df(f^{-1} x))^{-1}.
template <DynamicalSystem S>
class InverseSystem {
 public:
  using point_type = typename S::point_type;

  explicit InverseSystem(const S& base) : base_(&base) {}

  int dim() const { return base_->dim(); }
  point_type map(const point_type& x) const { return base_->inverse(x); }
  point_type inverse(const point_type& x) const { return base_->map(x); }
  Matrix jacobian(const point_type& x) const {
    if constexpr (std::same_as<S, FiniteSystem>) {
      return base_->inverse_jacobian(x);
    } else {
      return Matrix(base_->jacobian(base_->inverse(x))).inverse();
    }
  }
  double distance(const point_type& a, const point_type& b) const { return base_->distance(a, b); }
  bool is_finite(const point_type& x) const { return base_->is_finite(x); }

  Vector displacement(const Vector& from, const Vector& to) const
    requires SmoothSystem<S>
  {
    return base_->displacement(from, to);
  }
  Vector shift(const Vector& x, const Vector& v) const
    requires SmoothSystem<S>
  {
    return base_->shift(x, v);
  }

  const S& base() const { return *base_; }

 private:
  const S* base_;
};

// ---------------------------------------------------------------------------
// Orbits

template <class P>
struct OrbitSegment {
  P base{};
  std::vector<P> points;         // f^k x for k = 0..n-1
  std::vector<Matrix> matrices;  // Df(f^k x)
  std::size_t length() const { return points.size(); }
};

template <DynamicalSystem S>
OrbitSegment<typename S::point_type> orbit(const S& sys, const typename S::point_type& x, std::size_t n) {
  if (n < 1) throw std::invalid_argument("orbit: length must be at least 1");
  OrbitSegment<typename S::point_type> seg;
  seg.base = x;
  seg.points.reserve(n);
  seg.matrices.reserve(n);
  auto p = x;
  for (std::size_t k = 0; k < n; ++k) {
    if (!sys.is_finite(p)) throw numeric_overflow(k);
    Matrix j = sys.jacobian(p);
    if (!j.allFinite()) throw numeric_overflow(k);
    seg.points.push_back(p);
    seg.matrices.push_back(std::move(j));
    if (k + 1 < n) p = sys.map(p);
  }
  return seg;
}

// ---------------------------------------------------------------------------
// Cycles of a finite system

struct Cycle {
  std::vector<std::size_t> states;  // orbit order, starting at the smallest state
  double weight = 0.0;
};

inline std::vector<Cycle> cycle_decomposition(const FiniteSystem& sys) {
  const auto& perm = sys.permutation();
  std::vector<bool> seen(perm.size(), false);
  std::vector<Cycle> cycles;
  for (std::size_t s = 0; s < perm.size(); ++s) {
    if (seen[s]) continue;
    Cycle c;
    std::size_t t = s;
    do {
      seen[t] = true;
      c.states.push_back(t);
      c.weight += sys.weights()[t];
      t = perm[t];
    } while (t != s);
    cycles.push_back(std::move(c));
  }
  return cycles;
}

inline std::size_t cycle_length(const FiniteSystem& sys, State s) {
  std::size_t p = 1;
  for (State t = sys.map(s); t != s; t = sys.map(t)) ++p;
  return p;
}

inline std::size_t cycle_lcm(const FiniteSystem& sys) {
  std::size_t l = 1;
  for (const Cycle& c : cycle_decomposition(sys)) l = std::lcm(l, c.states.size());
  return l;
}

// Product of the cocycle around the cycle of s: A_{s_{p-1}} ... A_{s_0}.
inline Matrix cycle_product(const FiniteSystem& sys, State s) {
  Matrix m = sys.jacobian(s);
  for (State t = sys.map(s); t != s; t = sys.map(t)) m = sys.jacobian(t) * m;
  return m;
}

// Inverse of cycle_product built from the per-state inverses:
// A_{s_0}^{-1} ... A_{s_{p-1}}^{-1}.
inline Matrix cycle_inverse_product(const FiniteSystem& sys, State s) {
  Matrix m = sys.inverse_jacobian(sys.map(s));
  for (State t = sys.map(s); t != s; t = sys.map(t)) m = m * sys.inverse_jacobian(sys.map(t));
  return m;
}

// ---------------------------------------------------------------------------
// Conservativity

struct VolumeReport {
  double max_deviation = 0.0;
  bool pass = false;
};

template <DynamicalSystem S>
  requires std::same_as<typename S::point_type, Vector>
VolumeReport volume_check(const S& sys, std::size_t n_samples, double tol, std::uint64_t seed = 0) {
  if (n_samples < 1) throw std::invalid_argument("volume_check: need at least one sample");
  VolumeReport r;
  for (const Vector& x : quasi_random_points(sys.dim(), n_samples, seed)) {
    const double dev = std::abs(std::abs(Matrix(sys.jacobian(x)).determinant()) - 1.0);
    r.max_deviation = std::max(r.max_deviation, dev);
  }
  r.pass = r.max_deviation <= tol;
  return r;
}

// ---------------------------------------------------------------------------
// Map zoo

inline constexpr double kTwoPi = 2.0 * M_PI;

// Hyperbolic toral automorphism x -> A x mod 1 for an integer matrix A with
// |det A| = 1 and no eigenvalue on the unit circle.
inline TorusMap toral_automorphism(const Matrix& a, std::string name = "automorphism") {
  if (a.rows() != a.cols() || a.rows() < 2) throw std::invalid_argument("toral_automorphism: square matrix of size >= 2 required");
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a.data()[i] != std::round(a.data()[i])) throw std::invalid_argument("toral_automorphism: entries must be integers");
  if (std::abs(std::abs(a.determinant()) - 1.0) > 1e-9) throw std::invalid_argument("toral_automorphism: |det| must be 1");
  Eigen::EigenSolver<Matrix> es(a, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(std::abs(es.eigenvalues()[i]) - 1.0) < 1e-9)
      throw std::invalid_argument("toral_automorphism: matrix is not hyperbolic");
  const Matrix inv = a.inverse().array().round().matrix();
  std::vector<double> params(a.data(), a.data() + a.size());
  return TorusMap(
      std::move(name), static_cast<int>(a.rows()), std::move(params), [a](const Vector& x) -> Vector { return a * x; },
      [inv](const Vector& x) -> Vector { return inv * x; }, [a](const Vector&) -> Matrix { return a; });
}

inline Matrix cat_matrix() { return (Matrix(2, 2) << 2, 1, 1, 1).finished(); }

inline TorusMap cat_map() { return toral_automorphism(cat_matrix(), "cat"); }

inline TorusMap identity_map(int dim = 2) {
  return TorusMap(
      "identity", dim, {}, [](const Vector& x) -> Vector { return x; }, [](const Vector& x) -> Vector { return x; },
      [dim](const Vector&) -> Matrix { return Matrix::Identity(dim, dim); });
}

// Chirikov standard map on [0,1)^2:
//   y' = y + (K/2pi) sin(2pi x),  x' = x + y'.
inline TorusMap standard_map(double k) {
  const double amp = k / kTwoPi;
  return TorusMap(
      "standard", 2, {k},
      [amp](const Vector& p) -> Vector {
        const double y = p[1] + amp * std::sin(kTwoPi * p[0]);
        return Eigen::Vector2d(p[0] + y, y);
      },
      [amp](const Vector& p) -> Vector {
        const double x = p[0] - p[1];
        return Eigen::Vector2d(x, p[1] - amp * std::sin(kTwoPi * x));
      },
      [k](const Vector& p) -> Matrix {
        const double c = k * std::cos(kTwoPi * p[0]);
        return (Matrix(2, 2) << 1.0 + c, 1.0, c, 1.0).finished();
      });
}

// Cat map composed with the shear (x, y) -> (x, y + (eps/2pi) sin(2pi x));
// eps is the C^1 size of the perturbation and eps = 0 is the cat map.
inline TorusMap perturbed_cat_map(double eps) {
  const Matrix a = cat_matrix();
  const Matrix inv = (Matrix(2, 2) << 1, -1, -1, 2).finished();
  const double amp = eps / kTwoPi;
  return TorusMap(
      "cat-perturbed", 2, {eps},
      [a, amp](const Vector& p) -> Vector {
        const Eigen::Vector2d s(p[0], p[1] + amp * std::sin(kTwoPi * p[0]));
        return a * s;
      },
      [inv, amp](const Vector& p) -> Vector {
        const Vector s = inv * p;
        return Eigen::Vector2d(s[0], s[1] - amp * std::sin(kTwoPi * s[0]));
      },
      [a, eps](const Vector& p) -> Matrix {
        Matrix shear = Matrix::Identity(2, 2);
        shear(1, 0) = eps * std::cos(kTwoPi * p[0]);
        return a * shear;
      });
}

// Three-dimensional ABC-type map, a composition of three shears (each with
// unit Jacobian determinant):
//   x' = x + A sin(2pi z) + C cos(2pi y)
//   y' = y + B sin(2pi x') + A cos(2pi z)
//   z' = z + C sin(2pi y') + B cos(2pi x')
inline TorusMap abc_map(double a, double b, double c) {
  auto forward = [a, b, c](const Vector& p) -> Vector {
    const double x = p[0] + a * std::sin(kTwoPi * p[2]) + c * std::cos(kTwoPi * p[1]);
    const double y = p[1] + b * std::sin(kTwoPi * x) + a * std::cos(kTwoPi * p[2]);
    const double z = p[2] + c * std::sin(kTwoPi * y) + b * std::cos(kTwoPi * x);
    return Eigen::Vector3d(x, y, z);
  };
  auto backward = [a, b, c](const Vector& p) -> Vector {
    const double z = p[2] - c * std::sin(kTwoPi * p[1]) - b * std::cos(kTwoPi * p[0]);
    const double y = p[1] - b * std::sin(kTwoPi * p[0]) - a * std::cos(kTwoPi * z);
    const double x = p[0] - a * std::sin(kTwoPi * z) - c * std::cos(kTwoPi * y);
    return Eigen::Vector3d(x, y, z);
  };
  auto jac = [a, b, c](const Vector& p) -> Matrix {
    const double x1 = p[0] + a * std::sin(kTwoPi * p[2]) + c * std::cos(kTwoPi * p[1]);
    const double y1 = p[1] + b * std::sin(kTwoPi * x1) + a * std::cos(kTwoPi * p[2]);
    Matrix j1 = Matrix::Identity(3, 3), j2 = Matrix::Identity(3, 3), j3 = Matrix::Identity(3, 3);
    j1(0, 1) = -kTwoPi * c * std::sin(kTwoPi * p[1]);
    j1(0, 2) = kTwoPi * a * std::cos(kTwoPi * p[2]);
    j2(1, 0) = kTwoPi * b * std::cos(kTwoPi * x1);
    j2(1, 2) = -kTwoPi * a * std::sin(kTwoPi * p[2]);
    j3(2, 0) = -kTwoPi * b * std::sin(kTwoPi * x1);
    j3(2, 1) = kTwoPi * c * std::cos(kTwoPi * y1);
    return j3 * j2 * j1;
  };
  return TorusMap("abc", 3, {a, b, c}, forward, backward, jac);
}

// Zoo lookup by name; parameters by key with defaults.
inline TorusMap zoo_map(const std::string& name, const std::map<std::string, double>& params = {},
                        const std::vector<double>& matrix = {}) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "cat") return cat_map();
  if (name == "standard") return standard_map(get("K", 1.5));
  if (name == "cat-perturbed") return perturbed_cat_map(get("eps", 0.0));
  if (name == "abc") return abc_map(get("A", 0.2), get("B", 0.15), get("C", 0.1));
  if (name == "identity") return identity_map(static_cast<int>(get("dim", 2)));
  if (name == "automorphism") {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(matrix.size()))));
    if (d * d != static_cast<Eigen::Index>(matrix.size()) || d < 2)
      throw std::invalid_argument("automorphism: matrix must have a square number of entries");
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = matrix[static_cast<std::size_t>(i * d + j)];
    return toral_automorphism(a);
  }
  throw std::invalid_argument("unknown map '" + name + "'");
}

inline const std::vector<std::string>& zoo_names() {
  static const std::vector<std::string> names{"cat", "standard", "cat-perturbed", "abc", "identity", "automorphism"};
  return names;
}

}  // namespace erglab
