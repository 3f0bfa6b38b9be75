#include "rts/core.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace rts {

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw NonFiniteError(std::string(what) + ": non-finite entry");
  }
}

Latent::Latent(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() < kMinDimension) {
    throw DimensionError("latent dimension must be >= 2, got " + std::to_string(values_.size()));
  }
  require_finite(values_, "latent");
}

Latent::Latent(std::initializer_list<double> values)
    : Latent(Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Eigen::Index>(values.size()))) {}

Latent Latent::zeros(Eigen::Index d) { return Latent(Eigen::VectorXd::Zero(d)); }

bool Latent::operator==(const Latent& other) const {
  return values_.size() == other.values_.size() && values_ == other.values_;
}

RewardScore::RewardScore(double value) : value_(value) {
  if (!std::isfinite(value)) {
    throw NonFiniteError("reward score is not finite");
  }
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const auto thread_count = std::min<std::size_t>(workers, n);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = std::numeric_limits<std::size_t>::max();

  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::jthread> threads;
  threads.reserve(thread_count);
  for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
  threads.clear();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rts
