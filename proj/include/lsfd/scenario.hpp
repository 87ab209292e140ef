// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lsfd/rng.hpp"
#include "lsfd/types.hpp"

namespace lsfd {

/// Everything needed to generate one network realization. Defaults follow
/// the reference simulation setup (20 MHz, -96 dBm noise floor, 5 dB noise
/// figure, 200 mW pilot and data power, 7 dB shadowing, 35 m exclusion).
struct NetworkConfig {
  std::size_t L = 4;
  std::size_t K = 5;
  std::size_t M = 200;
  std::size_t tau_p = 5;
  std::size_t tau_c = 200;
  double bandwidth_hz = 20e6;
  /// Total in-band noise floor, not a spectral density.
  double noise_power_dbm = -96.0;
  double noise_figure_db = 5.0;
  double pilot_power_w = 0.2;
  double p_max_w = 0.2;
  double corr_magnitude = 0.5;
  double cell_edge_m = 250.0;
  double min_distance_m = 35.0;
  double shadow_std_db = 7.0;
  std::uint64_t seed = 0;

  Dims dims() const { return {L, K, M}; }
  /// Throws ConfigError on any violated invariant.
  void validate() const;
  /// Receiver noise power in watts.
  double noise_variance_w() const;
};

using Point = Eigen::Vector2d;

struct UserDrop {
  Dims dims;
  /// Cell grid (rows x cols = L) and torus period in meters.
  std::size_t grid_rows = 1;
  std::size_t grid_cols = 1;
  Point period{0.0, 0.0};
  std::vector<Point> bs_positions;    // per cell
  std::vector<Point> user_positions;  // per user, Dims::user order
  /// Per link (Dims::link order).
  std::vector<double> distance_m;
  std::vector<double> angle_rad;
  std::vector<double> shadow_db;
};

/// Large-scale statistics of one drop. R is M x M Hermitian PSD per link
/// with constant diagonal beta.
struct ScenarioStatistics {
  Dims dims;
  std::vector<double> beta;
  std::vector<CMat> corr;
  double sigma2 = 0.0;

  double beta_at(std::size_t cell, std::size_t k, std::size_t bs) const {
    return beta[dims.link(cell, k, bs)];
  }
  const CMat& R(std::size_t cell, std::size_t k, std::size_t bs) const {
    return corr[dims.link(cell, k, bs)];
  }
};

/// Near-square factorization rows x cols = L with rows <= cols.
std::pair<std::size_t, std::size_t> grid_shape(std::size_t L);

/// Displacement from `from` to the nearest of the 9 torus images of `to`.
Point wrap_displacement(const Point& from, const Point& to, const Point& period);

inline double wrap_distance(const Point& from, const Point& to, const Point& period) {
  return wrap_displacement(from, to, period).norm();
}

UserDrop build_drop(const NetworkConfig& config, RngStream& rng);

/// 10^(beta_dB / 10) with beta_dB = -148.1 - 37.6 log10(d / 1 km) + shadow.
template <typename Real>
Real large_scale_fading(Real distance_m, Real shadow_db) {
  if (!(distance_m > Real(0))) throw ArgumentError("large_scale_fading: distance must be > 0");
  const Real db = Real(-148.1) - Real(37.6) * std::log10(distance_m / Real(1000)) + shadow_db;
  return std::pow(Real(10), db / Real(10));
}

/// Exponential correlation model of a uniform linear array:
/// R(m, n) = beta * r^(m - n) for m >= n, r = magnitude * exp(j angle),
/// Hermitian above the diagonal.
template <typename Real>
CMatX<Real> correlation_matrix(Real beta, Real angle, Real magnitude, std::size_t M) {
  if (!(magnitude >= Real(0) && magnitude < Real(1)))
    throw ArgumentError("correlation_matrix: magnitude must lie in [0, 1)");
  const auto n = static_cast<Eigen::Index>(M);
  CMatX<Real> R(n, n);
  for (Eigen::Index lag = 0; lag < n; ++lag) {
    const Real mag = beta * std::pow(magnitude, static_cast<Real>(lag));
    const Complex<Real> below = std::polar(mag, angle * static_cast<Real>(lag));
    for (Eigen::Index i = lag; i < n; ++i) {
      R(i, i - lag) = below;
      R(i - lag, i) = std::conj(below);
    }
  }
  return R;
}

ScenarioStatistics scenario_statistics(const NetworkConfig& config, const UserDrop& drop);

/// Assembles statistics from explicit per-link matrices (tests, custom
/// models). Throws ArgumentError on shape or Hermitian-symmetry mismatch.
ScenarioStatistics make_statistics(const Dims& dims, std::vector<CMat> corr, double sigma2);

/// Largest violation of the per-link invariants: relative Hermitian
/// asymmetry, diagonal deviation from beta, and negative eigenvalue mass
/// (normalized by trace). Zero means all invariants hold exactly.
struct StatisticsCheck {
  double hermitian = 0.0;
  double diagonal = 0.0;
  double min_eig_over_trace = 0.0;
};
StatisticsCheck check_statistics(const ScenarioStatistics& stats);

}  // namespace lsfd
