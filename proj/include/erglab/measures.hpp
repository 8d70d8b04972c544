#pragma once

// Empirical measures, the test-function weak-star metric, ergodic
// decompositions (exact and clustered), the variance functional, hat norms,
// basin sets, invariant cores and finite convex approximation.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "erglab/atomic_measure.hpp"
#include "erglab/linalg.hpp"
#include "erglab/parallel.hpp"
#include "erglab/random.hpp"
#include "erglab/systems.hpp"

namespace erglab {

// ---------------------------------------------------------------------------
// Test families and the weak-star metric

template <class P>
class TestFamily {
 public:
  using Evaluator = std::function<void(const P&, std::span<double>)>;

  TestFamily(Evaluator eval, std::vector<double> sup, std::string name)
      : eval_(std::move(eval)), sup_(std::move(sup)), name_(std::move(name)) {
    if (sup_.empty()) throw std::invalid_argument("TestFamily: at least one function required");
    for (double s : sup_)
      if (!std::isfinite(s) || s < 0.0) throw std::invalid_argument("TestFamily: sup norms must be finite");
    coef_.resize(sup_.size());
    for (std::size_t k = 0; k < sup_.size(); ++k) coef_[k] = std::ldexp(1.0, -static_cast<int>(k + 1)) / (1.0 + sup_[k]);
  }

  std::size_t size() const { return sup_.size(); }
  const std::string& name() const { return name_; }
  double sup(std::size_t k) const { return sup_[k]; }
  // 2^{-k} / (1 + sup_k), k counted from 1.
  double coefficient(std::size_t k) const { return coef_[k]; }
  void eval(const P& p, std::span<double> out) const { eval_(p, out); }

  double bound() const { return std::accumulate(coef_.begin(), coef_.end(), 0.0); }

 private:
  Evaluator eval_;
  std::vector<double> sup_;
  std::vector<double> coef_;
  std::string name_;
};

// Wavevectors k != 0 in Z^d with |k|_inf <= degree, one of each +-k pair,
// ordered by |k|^2 then lexicographically.
inline std::vector<std::vector<int>> fourier_wavevectors(int dim, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(dim, -degree);
  while (true) {
    int first = 0;
    for (int v : k)
      if (v != 0) {
        first = v;
        break;
      }
    if (first > 0) out.push_back(k);
    int j = dim - 1;
    while (j >= 0 && k[j] == degree) k[j--] = -degree;
    if (j < 0) break;
    ++k[j];
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    const int na = std::inner_product(a.begin(), a.end(), a.begin(), 0);
    const int nb = std::inner_product(b.begin(), b.end(), b.begin(), 0);
    if (na != nb) return na < nb;
    return a < b;
  });
  return out;
}

// cos(2 pi k.x), sin(2 pi k.x) for each wavevector in order.
inline TestFamily<Vector> fourier_family(int dim, int degree = 8) {
  if (dim < 1 || degree < 1) throw std::invalid_argument("fourier_family: dim and degree must be positive");
  auto waves = fourier_wavevectors(dim, degree);
  auto eval = [waves, dim, degree](const Vector& x, std::span<double> out) {
    thread_local std::vector<std::complex<double>> powers;
    const int width = 2 * degree + 1;
    powers.resize(static_cast<std::size_t>(dim * width));
    for (int j = 0; j < dim; ++j) {
      const double t = 2 * M_PI * x(j);
      for (int m = -degree; m <= degree; ++m)
        powers[j * width + m + degree] = {std::cos(m * t), std::sin(m * t)};
    }
    for (std::size_t w = 0; w < waves.size(); ++w) {
      std::complex<double> z = 1.0;
      for (int j = 0; j < dim; ++j) z *= powers[j * width + waves[w][j] + degree];
      out[2 * w] = z.real();
      out[2 * w + 1] = z.imag();
    }
  };
  return TestFamily<Vector>(eval, std::vector<double>(2 * waves.size(), 1.0),
                            "fourier(d=" + std::to_string(dim) + ",K=" + std::to_string(degree) + ")");
}

inline TestFamily<State> indicator_family(std::size_t n_states) {
  auto eval = [n_states](const State& s, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (s.index < n_states) out[s.index] = 1.0;
  };
  return TestFamily<State>(eval, std::vector<double>(n_states, 1.0), "indicators(" + std::to_string(n_states) + ")");
}

// Family from explicit functions with given sup norms.
template <class P>
TestFamily<P> function_family(std::vector<std::function<double(const P&)>> fns, std::vector<double> sup) {
  if (fns.size() != sup.size()) throw std::invalid_argument("function_family: size mismatch");
  auto eval = [fns](const P& p, std::span<double> out) {
    for (std::size_t k = 0; k < fns.size(); ++k) out[k] = fns[k](p);
  };
  return TestFamily<P>(eval, std::move(sup), "custom");
}

// (integral of psi_k d mu)_k.
template <class P>
Vector moments(const AtomicMeasure<P>& mu, const TestFamily<P>& fam) {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(fam.size()));
  std::vector<double> buf(fam.size());
  for (std::size_t a = 0; a < mu.size(); ++a) {
    fam.eval(mu.support()[a], buf);
    const double w = mu.weights()[a];
    for (std::size_t k = 0; k < buf.size(); ++k) m(k) += w * buf[k];
  }
  return m;
}

template <class P>
double moment_distance(const Vector& a, const Vector& b, const TestFamily<P>& fam) {
  double d = 0.0;
  for (std::size_t k = 0; k < fam.size(); ++k) d += fam.coefficient(k) * std::abs(a(k) - b(k));
  return d;
}

template <class P>
double weak_star_distance(const AtomicMeasure<P>& mu, const AtomicMeasure<P>& nu, const TestFamily<P>& fam) {
  return moment_distance(moments(mu, fam), moments(nu, fam), fam);
}

// ---------------------------------------------------------------------------
// Empirical measures

template <DynamicalSystem S>
AtomicMeasure<typename S::point_type> birkhoff_empirical(const S& sys, const typename S::point_type& x,
                                                         std::size_t n) {
  if (n < 1) throw std::invalid_argument("birkhoff_empirical: n must be positive");
  std::vector<std::pair<typename S::point_type, double>> atoms;
  atoms.reserve(n);
  const double w = 1.0 / static_cast<double>(n);
  auto p = x;
  for (std::size_t j = 0; j < n; ++j) {
    if (!sys.is_finite(p)) throw numeric_overflow(j);
    atoms.emplace_back(p, w);
    if (j + 1 < n) p = sys.map(p);
  }
  return merge_atoms(std::move(atoms));
}

// Uniform measure on the cell centers of a G^d grid of the unit torus.
inline AtomicMeasure<Vector> grid_measure(int dim, std::size_t resolution) {
  if (dim < 1 || resolution < 1) throw std::invalid_argument("grid_measure: bad arguments");
  std::size_t total = 1;
  for (int j = 0; j < dim; ++j) total *= resolution;
  std::vector<Vector> pts;
  pts.reserve(total);
  for (std::size_t c = 0; c < total; ++c) {
    Vector v(dim);
    std::size_t r = c;
    for (int j = dim - 1; j >= 0; --j) {
      v(j) = (static_cast<double>(r % resolution) + 0.5) / static_cast<double>(resolution);
      r /= resolution;
    }
    pts.push_back(std::move(v));
  }
  return AtomicMeasure<Vector>::uniform(std::move(pts));
}

// Reference measure on the torus: uniform on a low-discrepancy point set.
inline AtomicMeasure<Vector> quasi_uniform_measure(int dim, std::size_t count, std::uint64_t seed = 0) {
  return AtomicMeasure<Vector>::uniform(quasi_random_points(dim, count, seed));
}

// Reference measure on a finite system: its invariant weights.
inline AtomicMeasure<State> state_measure(const FiniteSystem& sys) {
  std::vector<State> s;
  for (std::size_t k = 0; k < sys.size(); ++k) s.push_back(State{k});
  return AtomicMeasure<State>(std::move(s), sys.weights());
}

// ---------------------------------------------------------------------------
// Decompositions

template <class P>
AtomicMeasure<P> integrate_decomposition(const Decomposition<P>& lam) {
  std::vector<std::pair<P, double>> atoms;
  for (std::size_t c = 0; c < lam.size(); ++c) {
    const auto& comp = lam.components()[c];
    for (std::size_t a = 0; a < comp.size(); ++a)
      atoms.emplace_back(comp.support()[a], lam.weights()[c] * comp.weights()[a]);
  }
  return merge_atoms(std::move(atoms));
}

// Components: uniform measures on the cycles charged by mu, in order of their
// smallest state; weights: mu-mass of each cycle.
inline Decomposition<State> ergodic_decomposition_exact(const FiniteSystem& sys, const AtomicMeasure<State>& mu) {
  const auto cycles = cycle_decomposition(sys);
  std::vector<std::size_t> cycle_of(sys.size());
  for (std::size_t c = 0; c < cycles.size(); ++c)
    for (std::size_t s : cycles[c].states) cycle_of[s] = c;
  std::vector<double> mass(cycles.size(), 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const State s = mu.support()[a];
    if (s.index >= sys.size()) throw std::invalid_argument("ergodic_decomposition_exact: atom outside state space");
    mass[cycle_of[s.index]] += mu.weights()[a];
  }
  std::vector<AtomicMeasure<State>> comps;
  std::vector<double> weights;
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    if (mass[c] <= 0.0) continue;
    std::vector<State> states;
    for (std::size_t s : cycles[c].states) states.push_back(State{s});
    std::sort(states.begin(), states.end());
    comps.push_back(AtomicMeasure<State>::uniform(std::move(states)));
    weights.push_back(mass[c]);
  }
  return Decomposition<State>(std::move(comps), std::move(weights));
}

// Weighted average of measures, atoms merged.
template <class P>
AtomicMeasure<P> mix_measures(const std::vector<const AtomicMeasure<P>*>& parts, const std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::pair<P, double>> atoms;
  for (std::size_t k = 0; k < parts.size(); ++k)
    for (std::size_t a = 0; a < parts[k]->size(); ++a)
      atoms.emplace_back(parts[k]->support()[a], w[k] / total * parts[k]->weights()[a]);
  return merge_atoms(std::move(atoms));
}

// Leader clustering of Birkhoff measures in sample order: a sample joins the
// first leader closer than radius, otherwise it becomes a leader.
template <DynamicalSystem S>
Decomposition<typename S::point_type> estimate_decomposition(const S& sys,
                                                             const AtomicMeasure<typename S::point_type>& samples,
                                                             std::size_t n, const TestFamily<typename S::point_type>& fam,
                                                             double radius, std::size_t workers = 0) {
  using P = typename S::point_type;
  if (!(radius > 0.0)) throw std::invalid_argument("estimate_decomposition: radius must be positive");
  const auto betas =
      parallel_map(samples.size(), [&](std::size_t a) { return birkhoff_empirical(sys, samples.support()[a], n); },
                   workers);
  const auto mom = parallel_map(samples.size(), [&](std::size_t a) { return moments(betas[a], fam); }, workers);
  std::vector<std::size_t> leaders;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    std::size_t hit = leaders.size();
    for (std::size_t c = 0; c < leaders.size(); ++c)
      if (moment_distance(mom[a], mom[leaders[c]], fam) < radius) {
        hit = c;
        break;
      }
    if (hit == leaders.size()) {
      leaders.push_back(a);
      members.emplace_back();
    }
    members[hit].push_back(a);
  }
  std::vector<AtomicMeasure<P>> comps;
  std::vector<double> weights;
  for (const auto& group : members) {
    std::vector<const AtomicMeasure<P>*> parts;
    std::vector<double> w;
    double mass = 0.0;
    for (std::size_t a : group) {
      parts.push_back(&betas[a]);
      w.push_back(samples.weights()[a]);
      mass += samples.weights()[a];
    }
    if (mass <= 0.0) continue;
    comps.push_back(mix_measures(parts, w));
    weights.push_back(mass);
  }
  return Decomposition<P>(std::move(comps), std::move(weights));
}

// Pairs the components of a and b greedily: each component of a is matched
// to an unused component of b within dist_tol with weight within weight_tol.
template <class P>
bool decompositions_match(const Decomposition<P>& a, const Decomposition<P>& b, const TestFamily<P>& fam,
                          double dist_tol, double weight_tol) {
  if (a.size() != b.size()) return false;
  std::vector<Vector> mb;
  for (const auto& c : b.components()) mb.push_back(moments(c, fam));
  std::vector<bool> used(b.size(), false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vector ma = moments(a.components()[i], fam);
    bool found = false;
    for (std::size_t j = 0; j < b.size() && !found; ++j) {
      if (used[j]) continue;
      if (moment_distance(ma, mb[j], fam) <= dist_tol && std::abs(a.weights()[i] - b.weights()[j]) <= weight_tol) {
        used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Merges components within tol of an earlier component (weights added,
// measures mixed). Decompositions that differ only by splitting a component
// into copies become identical.
template <class P>
Decomposition<P> merge_close_components(const Decomposition<P>& lam, const TestFamily<P>& fam, double tol) {
  std::vector<Vector> mom;
  for (const auto& c : lam.components()) mom.push_back(moments(c, fam));
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t c = 0; c < lam.size(); ++c) {
    bool placed = false;
    for (auto& g : groups)
      if (moment_distance(mom[c], mom[g.front()], fam) <= tol) {
        g.push_back(c);
        placed = true;
        break;
      }
    if (!placed) groups.push_back({c});
  }
  std::vector<AtomicMeasure<P>> comps;
  std::vector<double> weights;
  for (const auto& g : groups) {
    std::vector<const AtomicMeasure<P>*> parts;
    std::vector<double> w;
    double mass = 0.0;
    for (std::size_t c : g) {
      parts.push_back(&lam.components()[c]);
      w.push_back(lam.weights()[c]);
      mass += lam.weights()[c];
    }
    if (!(mass > 0.0)) continue;
    comps.push_back(mix_measures(parts, w));
    weights.push_back(mass);
  }
  return Decomposition<P>(std::move(comps), std::move(weights));
}

// Greedy selection of components whose renormalised combination lies within
// eps of the integrated measure.
template <class P>
Decomposition<P> approx_convex_combination(const Decomposition<P>& lam, const TestFamily<P>& fam, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("approx_convex_combination: eps must be positive");
  std::vector<Vector> mom;
  Vector target = Vector::Zero(static_cast<Eigen::Index>(fam.size()));
  for (std::size_t c = 0; c < lam.size(); ++c) {
    mom.push_back(moments(lam.components()[c], fam));
    target += lam.weights()[c] * mom.back();
  }
  std::vector<std::size_t> chosen;
  std::vector<bool> used(lam.size(), false);
  Vector acc = Vector::Zero(target.size());
  double acc_w = 0.0;
  while (chosen.size() < lam.size()) {
    std::size_t best = lam.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < lam.size(); ++c) {
      if (used[c]) continue;
      const double w = acc_w + lam.weights()[c];
      if (!(w > 0.0)) continue;
      const double d = moment_distance(Vector((acc + lam.weights()[c] * mom[c]) / w), target, fam);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == lam.size()) break;
    used[best] = true;
    chosen.push_back(best);
    acc += lam.weights()[best] * mom[best];
    acc_w += lam.weights()[best];
    if (best_d <= eps) break;
  }
  std::vector<AtomicMeasure<P>> comps;
  std::vector<double> w;
  for (std::size_t c : chosen) {
    comps.push_back(lam.components()[c]);
    w.push_back(lam.weights()[c] / acc_w);
  }
  return Decomposition<P>(std::move(comps), std::move(w));
}

// ---------------------------------------------------------------------------
// Variance and hat norms

inline constexpr double kCenteringTol = 1e-9;

template <class P>
double variance(const std::function<double(const P&)>& phi, const Decomposition<P>& lam, const AtomicMeasure<P>& m) {
  if (std::abs(m.integrate(phi)) > kCenteringTol)
    throw std::invalid_argument("variance: test function is not centered for the reference measure");
  double v = 0.0;
  for (std::size_t c = 0; c < lam.size(); ++c) {
    const double mean = lam.components()[c].integrate(phi);
    v += lam.weights()[c] * mean * mean;
  }
  return v;
}

template <class P>
double l2_norm(const std::function<double(const P&)>& phi, const AtomicMeasure<P>& m) {
  return std::sqrt(m.integrate([&](const P& p) { return phi(p) * phi(p); }));
}

struct HatNorm {
  std::vector<std::size_t> n_values;
  std::vector<double> sum_norms;  // ||phi_{f,n}||
  std::vector<double> values;     // ||phi_{f,n}|| / n
  double min = 0.0;
};

// ||phi_{f,n}||_{L^2(m)} / n for each n in n_list and their minimum.
template <DynamicalSystem S>
HatNorm hat_norm(const S& sys, const std::function<double(const typename S::point_type&)>& phi,
                 const std::vector<std::size_t>& n_list, const AtomicMeasure<typename S::point_type>& m) {
  if (n_list.empty()) throw std::invalid_argument("hat_norm: empty n_list");
  const std::size_t n_max = *std::max_element(n_list.begin(), n_list.end());
  if (n_max < 1 || *std::min_element(n_list.begin(), n_list.end()) < 1)
    throw std::invalid_argument("hat_norm: n must be positive");
  std::vector<double> sq(n_max + 1, 0.0);  // sq[n] = integral of phi_{f,n}^2
  for (std::size_t a = 0; a < m.size(); ++a) {
    auto p = m.support()[a];
    double s = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
      s += phi(p);
      sq[n] += m.weights()[a] * s * s;
      if (n < n_max) p = sys.map(p);
    }
  }
  HatNorm out;
  out.n_values = n_list;
  for (std::size_t n : n_list) {
    out.sum_norms.push_back(std::sqrt(sq[n]));
    out.values.push_back(out.sum_norms.back() / static_cast<double>(n));
  }
  out.min = *std::min_element(out.values.begin(), out.values.end());
  return out;
}

// ||phi hat||: L^2(m) norm of the cycle averages of phi.
inline double exact_hat_norm(const FiniteSystem& sys, const std::vector<double>& phi, const AtomicMeasure<State>& m) {
  if (phi.size() != sys.size()) throw std::invalid_argument("exact_hat_norm: phi size mismatch");
  std::vector<double> avg(sys.size());
  for (const Cycle& c : cycle_decomposition(sys)) {
    double s = 0.0;
    for (std::size_t k : c.states) s += phi[k];
    s /= static_cast<double>(c.states.size());
    for (std::size_t k : c.states) avg[k] = s;
  }
  return std::sqrt(m.integrate([&](const State& s) { return avg[s.index] * avg[s.index]; }));
}

// ---------------------------------------------------------------------------
// Basin sets

template <class P>
struct BasinSet {
  std::vector<bool> members;
  double fraction = 0.0;   // unweighted member fraction
  double agreement = 0.0;  // fraction of samples with member(x) == member(f x)
  std::size_t n = 0;
  double radius = 0.0;
};

template <DynamicalSystem S>
BasinSet<typename S::point_type> basin_set(const S& sys, const AtomicMeasure<typename S::point_type>& center,
                                           double radius, const TestFamily<typename S::point_type>& fam,
                                           const std::vector<typename S::point_type>& samples, std::size_t n,
                                           std::size_t workers = 0) {
  if (!(radius > 0.0)) throw std::invalid_argument("basin_set: radius must be positive");
  const Vector mc = moments(center, fam);
  const auto flags = parallel_map(
      samples.size(),
      [&](std::size_t a) {
        const bool here = moment_distance(moments(birkhoff_empirical(sys, samples[a], n), fam), mc, fam) < radius;
        const bool there =
            moment_distance(moments(birkhoff_empirical(sys, sys.map(samples[a]), n), fam), mc, fam) < radius;
        return std::array<bool, 2>{here, there};
      },
      workers);
  BasinSet<typename S::point_type> out;
  out.n = n;
  out.radius = radius;
  std::size_t count = 0, agree = 0;
  for (const auto& f : flags) {
    out.members.push_back(f[0]);
    count += f[0];
    agree += f[0] == f[1];
  }
  if (!samples.empty()) {
    out.fraction = static_cast<double>(count) / static_cast<double>(samples.size());
    out.agreement = static_cast<double>(agree) / static_cast<double>(samples.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariant cores

struct FiniteCore {
  std::vector<std::size_t> states;  // sorted
  std::size_t k_range = 0;
};

// Intersection of f^n(V) over |n| <= lcm of the cycle lengths.
inline FiniteCore invariant_core(const FiniteSystem& sys, const std::vector<std::size_t>& region) {
  if (region.empty()) throw std::invalid_argument("invariant_core: empty region");
  std::vector<char> in_v(sys.size(), 0);
  for (std::size_t s : region) {
    if (s >= sys.size()) throw std::invalid_argument("invariant_core: state outside the system");
    in_v[s] = 1;
  }
  const std::size_t l = cycle_lcm(sys);
  std::vector<char> core = in_v;
  for (std::size_t s = 0; s < sys.size(); ++s) {
    State fwd{s}, bwd{s};
    for (std::size_t n = 1; n <= l && core[s]; ++n) {
      fwd = sys.map(fwd);
      bwd = sys.inverse(bwd);
      // s in f^n(V) iff f^{-n}(s) in V
      if (!in_v[fwd.index] || !in_v[bwd.index]) core[s] = 0;
    }
  }
  FiniteCore out;
  out.k_range = l;
  for (std::size_t s = 0; s < sys.size(); ++s)
    if (core[s]) out.states.push_back(s);
  return out;
}

// Region of the 2-torus given by an exact cell test (lo corner, side h).
struct TorusRegion {
  std::function<bool(double x0, double y0, double h)> meets_cell;
};

inline TorusRegion torus_ball(const Vector& center, double radius) {
  const double cx = wrap_unit(center(0)), cy = wrap_unit(center(1));
  return {[cx, cy, radius](double x0, double y0, double h) {
    auto axis_gap = [](double c, double lo, double h) {
      double best = std::numeric_limits<double>::infinity();
      for (int shift = -1; shift <= 1; ++shift) {
        const double v = c + shift;
        const double g = v < lo ? lo - v : (v > lo + h ? v - lo - h : 0.0);
        best = std::min(best, g);
      }
      return best;
    };
    const double gx = axis_gap(cx, x0, h), gy = axis_gap(cy, y0, h);
    return gx * gx + gy * gy < radius * radius;
  }};
}

struct TorusCore {
  std::size_t resolution = 0;
  std::size_t k_range = 0;
  std::vector<std::array<std::size_t, 2>> cells;  // (i, j): [i/G, (i+1)/G) x [j/G, (j+1)/G)
  // Largest Chebyshev distance, in cells, from any core cell to the cell holding p.
  std::size_t max_cell_distance(const Vector& p) const {
    const auto g = static_cast<long>(resolution);
    const long pi = static_cast<long>(std::floor(wrap_unit(p(0)) * resolution));
    const long pj = static_cast<long>(std::floor(wrap_unit(p(1)) * resolution));
    std::size_t worst = 0;
    for (const auto& c : cells) {
      long di = std::labs(static_cast<long>(c[0]) - pi) % g, dj = std::labs(static_cast<long>(c[1]) - pj) % g;
      di = std::min(di, g - di);
      dj = std::min(dj, g - dj);
      worst = std::max<std::size_t>(worst, static_cast<std::size_t>(std::max(di, dj)));
    }
    return worst;
  }
};

namespace detail {

using Point2 = std::array<double, 2>;

inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Separating-axis test between a convex polygon thickened by margin and the
// square [x0, x0+h] x [y0, y0+h].
inline bool polygon_meets_square(const std::vector<Point2>& poly, double margin, double x0, double y0, double h) {
  auto separated = [&](double ax, double ay) {
    const double len = std::hypot(ax, ay);
    if (len == 0.0) return false;
    ax /= len;
    ay /= len;
    double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
    for (const auto& p : poly) {
      const double v = ax * p[0] + ay * p[1];
      pmin = std::min(pmin, v);
      pmax = std::max(pmax, v);
    }
    double smin = std::numeric_limits<double>::infinity(), smax = -smin;
    for (double cx : {x0, x0 + h})
      for (double cy : {y0, y0 + h}) {
        const double v = ax * cx + ay * cy;
        smin = std::min(smin, v);
        smax = std::max(smax, v);
      }
    return pmax + margin < smin || smax < pmin - margin;
  };
  if (separated(1, 0) || separated(0, 1)) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    if (separated(-(b[1] - a[1]), b[0] - a[0])) return false;
  }
  return true;
}

// Cells of the G x G grid met by the image of the marked cells under g.
template <class Map>
std::vector<char> image_cells(const Map& g, const std::vector<char>& marked, std::size_t res) {
  const double h = 1.0 / static_cast<double>(res);
  std::vector<char> out(marked.size(), 0);
  const auto gl = static_cast<long>(res);
  for (std::size_t c = 0; c < marked.size(); ++c) {
    if (!marked[c]) continue;
    const double x0 = static_cast<double>(c / res) * h, y0 = static_cast<double>(c % res) * h;
    Vector mid(2);
    mid << x0 + h / 2, y0 + h / 2;
    const Vector gm = g.map(mid);
    // corners (even offsets) and edge midpoints (odd offsets) in lifted coordinates
    std::vector<Point2> pts;
    double curvature = 0.0;
    std::array<Vector, 8> ring;
    const int ox[8] = {0, 1, 2, 2, 2, 1, 0, 0}, oy[8] = {0, 0, 0, 1, 2, 2, 2, 1};
    for (int q = 0; q < 8; ++q) {
      Vector p(2);
      p << x0 + ox[q] * h / 2, y0 + oy[q] * h / 2;
      ring[q] = g.displacement(gm, g.map(p)) + gm;
    }
    for (int q = 1; q < 8; q += 2) {
      const Vector chord = (ring[q - 1] + ring[(q + 1) % 8]) / 2;
      curvature = std::max(curvature, (ring[q] - chord).norm());
    }
    for (const auto& v : ring) pts.push_back({v(0), v(1)});
    const auto hull = convex_hull(pts);
    const double margin = 2.0 * curvature + 1e-12;
    double bx0 = std::numeric_limits<double>::infinity(), bx1 = -bx0, by0 = bx0, by1 = -bx0;
    for (const auto& p : hull) {
      bx0 = std::min(bx0, p[0]);
      bx1 = std::max(bx1, p[0]);
      by0 = std::min(by0, p[1]);
      by1 = std::max(by1, p[1]);
    }
    const long i0 = static_cast<long>(std::floor((bx0 - margin) / h)), i1 = static_cast<long>(std::floor((bx1 + margin) / h));
    const long j0 = static_cast<long>(std::floor((by0 - margin) / h)), j1 = static_cast<long>(std::floor((by1 + margin) / h));
    for (long i = i0; i <= i1; ++i)
      for (long j = j0; j <= j1; ++j) {
        if (!polygon_meets_square(hull, margin, static_cast<double>(i) * h, static_cast<double>(j) * h, h)) continue;
        const long wi = ((i % gl) + gl) % gl, wj = ((j % gl) + gl) % gl;
        out[static_cast<std::size_t>(wi) * res + static_cast<std::size_t>(wj)] = 1;
      }
  }
  return out;
}

}  // namespace detail

// Outer grid approximation of the invariant core of V for a map of the
// 2-torus: C_0 = V, C_j = C_{j-1} n f(C_{j-1}) n f^{-1}(C_{j-1}), with cell
// images covered by the hull of mapped corners and edge midpoints, thickened
// by twice the observed edge bending.
template <SmoothSystem S>
TorusCore invariant_core(const S& sys, const TorusRegion& region, std::size_t k_range, std::size_t resolution = 512) {
  if (sys.dim() != 2) throw std::invalid_argument("invariant_core: grid cores are implemented for the 2-torus");
  if (resolution < 2) throw std::invalid_argument("invariant_core: resolution too small");
  const double h = 1.0 / static_cast<double>(resolution);
  std::vector<char> cur(resolution * resolution, 0);
  bool any = false;
  for (std::size_t c = 0; c < cur.size(); ++c) {
    cur[c] = region.meets_cell(static_cast<double>(c / resolution) * h, static_cast<double>(c % resolution) * h, h);
    any = any || cur[c];
  }
  if (!any) throw std::invalid_argument("invariant_core: empty region");
  const InverseSystem<S> inv(sys);
  for (std::size_t step = 0; step < k_range; ++step) {
    const auto fwd = detail::image_cells(sys, cur, resolution);
    const auto bwd = detail::image_cells(inv, cur, resolution);
    bool changed = false;
    for (std::size_t c = 0; c < cur.size(); ++c) {
      const char keep = cur[c] && fwd[c] && bwd[c];
      changed = changed || keep != cur[c];
      cur[c] = keep;
    }
    if (!changed) break;
  }
  TorusCore out;
  out.resolution = resolution;
  out.k_range = k_range;
  for (std::size_t c = 0; c < cur.size(); ++c)
    if (cur[c]) out.cells.push_back({c / resolution, c % resolution});
  return out;
}

}  // namespace erglab
