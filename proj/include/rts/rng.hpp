#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "rts/core.hpp"

namespace rts {

// Philox4x32-10 block function (Salmon et al., SC'11). Pure: maps a 128-bit
// counter and 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// A named random stream. The value is (root_seed, path); all randomness drawn
// from it is a pure function of that pair, so deriving per-candidate streams
// makes results independent of evaluation order and thread count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t root_seed, std::vector<std::uint64_t> path = {});

  RngStream derive(std::uint64_t label) const;

  std::uint64_t root_seed() const { return root_seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }

  // Philox key and the high half of the counter, hashed from (seed, path).
  std::array<std::uint32_t, 2> key() const { return key_; }
  std::uint64_t counter_tag() const { return counter_tag_; }

  bool operator==(const RngStream& other) const {
    return root_seed_ == other.root_seed_ && path_ == other.path_;
  }

 private:
  std::uint64_t root_seed_;
  std::vector<std::uint64_t> path_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_tag_ = 0;
};

inline RngStream derive_stream(const RngStream& root, std::uint64_t label) { return root.derive(label); }

// Sequential reader over a stream's counter space. Satisfies
// UniformRandomBitGenerator; the stream itself stays immutable.
class RngEngine {
 public:
  using result_type = std::uint64_t;

  explicit RngEngine(const RngStream& stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t tag_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  std::optional<double> spare_normal_;
};

// d i.i.d. standard normal entries drawn from the start of `stream`.
Latent sample_gaussian(const RngStream& stream, Eigen::Index d);

}  // namespace rts
