#pragma once

// Reproducible random streams. Only std::mt19937_64 (whose output sequence is
// fixed by the standard) is used; the real-valued transforms are implemented
// here so that results do not depend on the standard library vendor.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace erglab {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of instance `index` under master seed `master`.
inline std::uint64_t instance_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return lo + static_cast<std::int64_t>(v % span);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(n) - 1)); }

  bool coin(double p = 0.5) { return uniform() < p; }

  double normal() {
    // Box-Muller, one value per call.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Kronecker (additive recurrence) low-discrepancy sequence on [0,1)^dim,
// using the generalised golden ratio; `seed` picks the starting offset.
inline std::vector<Eigen::VectorXd> quasi_random_points(int dim, std::size_t count, std::uint64_t seed) {
  double phi = 2.0;
  for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
  Eigen::VectorXd alpha(dim);
  for (int j = 0; j < dim; ++j) alpha[j] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);
  Rng rng(seed);
  Eigen::VectorXd start(dim);
  for (int j = 0; j < dim; ++j) start[j] = rng.uniform();
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXd p(dim);
    for (int j = 0; j < dim; ++j) {
      double v = start[j] + static_cast<double>(k + 1) * alpha[j];
      v -= std::floor(v);
      p[j] = v;
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace erglab
