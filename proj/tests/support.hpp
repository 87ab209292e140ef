// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>

#include "lsfd/rng.hpp"
#include "lsfd/scenario.hpp"
#include "lsfd/se.hpp"

namespace lsfd::test {

inline NetworkConfig small_network(std::uint64_t seed, std::size_t L = 4, std::size_t K = 2,
                                   std::size_t M = 16, double corr = 0.5) {
  NetworkConfig c;
  c.L = L;
  c.K = K;
  c.M = M;
  c.tau_p = K;
  c.corr_magnitude = corr;
  c.seed = seed;
  return c;
}

inline ScenarioStatistics make_stats(const NetworkConfig& c) {
  auto rng = substream(c.seed, 0);
  return scenario_statistics(c, build_drop(c, rng));
}

/// Single cell, single user, R = beta I.
inline ScenarioStatistics scalar_stats(double beta, std::size_t M, double sigma2) {
  Dims d{1, 1, M};
  std::vector<CMat> corr{beta * CMat::Identity(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M))};
  return make_statistics(d, std::move(corr), sigma2);
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double rel_diff(cd a, cd b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline RVec random_powers(const Dims& d, double p_max, RngStream& rng) {
  RVec p(static_cast<Eigen::Index>(d.users()));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.uniform(0.1 * p_max, p_max);
  return p;
}

}  // namespace lsfd::test
