#pragma once

#include <atomic>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace rts {

// Error taxonomy. Everything derives from rts::Error so callers can catch
// the whole family; the CLI maps ConfigError to exit code 2, the rest to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class DegeneratePerturbationError : public Error {
 public:
  using Error::Error;
};

class GradientDegenerateError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Smallest latent dimension accepted anywhere in the library.
inline constexpr Eigen::Index kMinDimension = 2;

// Immutable d-dimensional latent state. Construction rejects d < 2 and any
// NaN/Inf entry, so a Latent in hand is always finite.
class Latent {
 public:
  explicit Latent(Eigen::VectorXd values);
  Latent(std::initializer_list<double> values);

  static Latent zeros(Eigen::Index d);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index dim() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }
  double norm() const { return values_.norm(); }
  double dot(const Latent& other) const { return values_.dot(other.values_); }

  bool operator==(const Latent& other) const;

 private:
  Eigen::VectorXd values_;
};

// Throws NonFiniteError naming `what` if any entry is NaN/Inf.
void require_finite(const Eigen::VectorXd& v, const char* what);

class RewardScore {
 public:
  explicit RewardScore(double value);
  double value() const { return value_; }
  auto operator<=>(const RewardScore&) const = default;

 private:
  double value_;
};

// Number of denoiser function evaluations. Shared between threads that
// evaluate candidates of the same round, hence atomic.
class NfeCounter {
 public:
  NfeCounter() = default;
  NfeCounter(const NfeCounter&) = delete;
  NfeCounter& operator=(const NfeCounter&) = delete;

  void add(std::uint64_t n = 1) { count_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

// Runs body(i) for i in [0, n) on up to `workers` threads. Exceptions are
// rethrown on the calling thread; when several indices throw, the one with
// the smallest index wins so failures are reproducible.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace rts
