#pragma once

// Finitely supported probability measures and finite measures on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "erglab/systems.hpp"

namespace erglab {

inline constexpr double kWeightTol = 1e-12;

template <class P>
class AtomicMeasure {
 public:
  AtomicMeasure() = default;

  AtomicMeasure(std::vector<P> support, std::vector<double> weights)
      : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.empty()) throw std::invalid_argument("AtomicMeasure: empty support");
    if (support_.size() != weights_.size()) throw std::invalid_argument("AtomicMeasure: support/weight size mismatch");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw std::invalid_argument("AtomicMeasure: negative weight");
      total += w;
    }
    const double tol = kWeightTol + 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(weights_.size());
    if (std::abs(total - 1.0) > tol) throw std::invalid_argument("AtomicMeasure: weights must sum to 1");
  }

  static AtomicMeasure dirac(P p) { return AtomicMeasure({std::move(p)}, {1.0}); }

  static AtomicMeasure uniform(std::vector<P> support) {
    const double w = 1.0 / static_cast<double>(support.size());
    std::vector<double> weights(support.size(), w);
    return AtomicMeasure(std::move(support), std::move(weights));
  }

  const std::vector<P>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return support_.size(); }

  template <class F>
  double integrate(F&& fn) const {
    double s = 0.0;
    for (std::size_t k = 0; k < support_.size(); ++k) s += weights_[k] * fn(support_[k]);
    return s;
  }

 private:
  std::vector<P> support_;
  std::vector<double> weights_;
};

// Sorts atoms and merges exactly coincident points (weights added).
template <class P>
AtomicMeasure<P> merge_atoms(std::vector<std::pair<P, double>> atoms) {
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const auto& a, const auto& b) { return point_less(a.first, b.first); });
  std::vector<P> support;
  std::vector<double> weights;
  for (auto& [p, w] : atoms) {
    if (!support.empty() && point_equal(support.back(), p)) {
      weights.back() += w;
    } else {
      support.push_back(std::move(p));
      weights.push_back(w);
    }
  }
  return AtomicMeasure<P>(std::move(support), std::move(weights));
}

// A finite measure on measures: components with probability weights.
template <class P>
class Decomposition {
 public:
  Decomposition() = default;

  Decomposition(std::vector<AtomicMeasure<P>> components, std::vector<double> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty()) throw std::invalid_argument("Decomposition: no components");
    if (components_.size() != weights_.size()) throw std::invalid_argument("Decomposition: size mismatch");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw std::invalid_argument("Decomposition: negative weight");
      total += w;
    }
    const double tol = kWeightTol + 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(weights_.size());
    if (std::abs(total - 1.0) > tol) throw std::invalid_argument("Decomposition: weights must sum to 1");
  }

  const std::vector<AtomicMeasure<P>>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return components_.size(); }

 private:
  std::vector<AtomicMeasure<P>> components_;
  std::vector<double> weights_;
};

}  // namespace erglab
