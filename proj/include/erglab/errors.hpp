#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erglab {

// Base of every numeric failure raised by the library. Argument errors use
// std::invalid_argument instead.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class numeric_overflow : public numeric_error {
 public:
  explicit numeric_overflow(std::size_t step)
      : numeric_error("non-finite value produced at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// Rank loss during QR re-orthogonalisation of a tangent frame.
class degenerate_cocycle : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

// The singular-value (or eigenvalue-modulus) gap needed to define a splitting
// is missing.
class no_gap_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

class cone_escape_error : public numeric_error {
 public:
  cone_escape_error(const std::string& reason, std::size_t level, std::size_t node)
      : numeric_error(reason + " at level " + std::to_string(level) + ", node " + std::to_string(node)),
        level_(level),
        node_(node) {}
  std::size_t level() const noexcept { return level_; }
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t level_;
  std::size_t node_;
};

class step_failure_error : public numeric_error {
 public:
  step_failure_error(const std::string& reason, std::size_t level, std::size_t node)
      : numeric_error(reason + " at level " + std::to_string(level) + ", node " + std::to_string(node)),
        level_(level),
        node_(node) {}
  std::size_t level() const noexcept { return level_; }
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t level_;
  std::size_t node_;
};

}  // namespace erglab
