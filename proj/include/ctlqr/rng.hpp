#pragma once
// Counter-based random numbers (Philox 4x32-10).
//
// Draws are pure functions of (seed, stream, index), so any draw can be
// produced independently of call order and results are identical across
// platforms and thread counts. Stream derivation used in this library:
//   key     = seed (64 bits split into two 32-bit words)
//   counter = (stream, index) as four 32-bit words
// Each counter block yields 128 bits: two uniforms, or one Box-Muller pair of
// standard normals. Consumers document which stream ids they use.

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace ctlqr {

namespace detail {
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

inline double u64_to_unit(std::uint64_t x) {
  // 53 mantissa bits, offset so the result is strictly inside (0, 1).
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}
}  // namespace detail

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  // i-th uniform draw in (0, 1).
  double uniform(std::uint64_t i) const {
    const auto b = block(i >> 1);
    const std::uint64_t lo =
        (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
    const std::uint64_t hi =
        (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
    return detail::u64_to_unit((i & 1) ? hi : lo);
  }

  // i-th standard normal draw (Box-Muller; indices 2m and 2m+1 share a block).
  double normal(std::uint64_t i) const {
    const std::uint64_t pairIdx = i >> 1;
    if (!pairValid_ || pairIdx != cachedPairIdx_) {
      const auto b = block(pairIdx);
      const std::uint64_t lo = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
      const std::uint64_t hi = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
      const double u1 = detail::u64_to_unit(lo);
      const double u2 = detail::u64_to_unit(hi);
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * M_PI * u2;
      cachedPair_[0] = radius * std::cos(angle);
      cachedPair_[1] = radius * std::sin(angle);
      cachedPairIdx_ = pairIdx;
      pairValid_ = true;
    }
    return cachedPair_[i & 1];
  }

  Eigen::VectorXd normal_vector(std::uint64_t firstIndex, int n) const {
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v(j) = normal(firstIndex + j);
    return v;
  }

  Eigen::MatrixXd normal_matrix(std::uint64_t firstIndex, int rows, int cols) const {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = normal(firstIndex + r * cols + c);
    return m;
  }

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t idx) const {
    if (!cacheValid_ || idx != cachedIdx_) {
      cachedBlock_ = detail::philox4x32(
          {static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
           static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)},
          key_);
      cachedIdx_ = idx;
      cacheValid_ = true;
    }
    return cachedBlock_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  mutable std::array<std::uint32_t, 4> cachedBlock_{};
  mutable std::uint64_t cachedIdx_ = 0;
  mutable bool cacheValid_ = false;
  mutable std::array<double, 2> cachedPair_{};
  mutable std::uint64_t cachedPairIdx_ = 0;
  mutable bool pairValid_ = false;
};

// Deterministic child seed for replicate index i (stream 0 is reserved for
// seed derivation throughout the library).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) {
  const auto b = detail::philox4x32(
      {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32), 0x5EEDu, 0u},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

}  // namespace ctlqr
