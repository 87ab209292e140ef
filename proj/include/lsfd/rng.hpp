// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "lsfd/types.hpp"

namespace lsfd {

/// Explicitly seeded random stream. Nothing in the library draws from
/// global state; every consumer receives one of these.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  /// Circularly symmetric CN(0, 1) sample.
  cd complex_normal() {
    constexpr double kHalf = 0.70710678118654752440;
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {kHalf * re, kHalf * im};
  }

  template <typename Derived>
  void fill_complex_normal(Eigen::MatrixBase<Derived>& out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = complex_normal();
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  // Ziggurat sampler; several times faster than the polar method.
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

/// Seed of the independent sub-stream `index` of master seed `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

inline RngStream substream(std::uint64_t seed, std::uint64_t index) {
  return RngStream(substream_seed(seed, index));
}

}  // namespace lsfd
