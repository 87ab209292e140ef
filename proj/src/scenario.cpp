// SPDX-License-Identifier: Apache-2.0
#include "lsfd/scenario.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace lsfd {

namespace {

constexpr int kMaxDropAttempts = 10000;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid network config: " + what);
}

}  // namespace

void NetworkConfig::validate() const {
  require(L >= 1, "L must be >= 1");
  require(K >= 1, "K must be >= 1");
  require(M >= 1, "M must be >= 1");
  require(tau_p == K, "tau_p must equal K");
  require(tau_p > 0 && tau_p <= tau_c, "need 0 < tau_p <= tau_c");
  require(bandwidth_hz > 0, "bandwidth must be > 0");
  require(pilot_power_w > 0, "pilot power must be > 0");
  require(p_max_w > 0, "p_max must be > 0");
  require(corr_magnitude >= 0 && corr_magnitude < 1, "corr_magnitude must lie in [0, 1)");
  require(cell_edge_m > 0, "cell edge must be > 0");
  require(min_distance_m > 0, "min distance must be > 0");
  require(shadow_std_db >= 0, "shadow std must be >= 0");
  require(std::isfinite(noise_power_dbm) && std::isfinite(noise_figure_db),
          "noise figures must be finite");
}

double NetworkConfig::noise_variance_w() const {
  return std::pow(10.0, (noise_power_dbm + noise_figure_db) / 10.0) * 1e-3;
}

std::pair<std::size_t, std::size_t> grid_shape(std::size_t L) {
  std::size_t rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(L)));
  while (rows > 1 && L % rows != 0) --rows;
  rows = std::max<std::size_t>(rows, 1);
  return {rows, L / rows};
}

Point wrap_displacement(const Point& from, const Point& to, const Point& period) {
  Point best = to - from;
  double best_norm = best.squaredNorm();
  for (int sx = -1; sx <= 1; ++sx) {
    for (int sy = -1; sy <= 1; ++sy) {
      const Point d = to + Point(sx * period.x(), sy * period.y()) - from;
      const double n = d.squaredNorm();
      if (n < best_norm) {
        best_norm = n;
        best = d;
      }
    }
  }
  return best;
}

UserDrop build_drop(const NetworkConfig& config, RngStream& rng) {
  config.validate();
  UserDrop drop;
  drop.dims = config.dims();
  const auto& dims = drop.dims;
  const auto [rows, cols] = grid_shape(dims.L);
  drop.grid_rows = rows;
  drop.grid_cols = cols;
  const double edge = config.cell_edge_m;
  drop.period = Point(static_cast<double>(cols) * edge, static_cast<double>(rows) * edge);

  drop.bs_positions.resize(dims.L);
  for (std::size_t l = 0; l < dims.L; ++l) {
    const auto r = l / cols;
    const auto c = l % cols;
    drop.bs_positions[l] = Point((static_cast<double>(c) + 0.5) * edge,
                                 (static_cast<double>(r) + 0.5) * edge);
  }

  drop.user_positions.resize(dims.users());
  for (std::size_t l = 0; l < dims.L; ++l) {
    const Point& bs = drop.bs_positions[l];
    for (std::size_t k = 0; k < dims.K; ++k) {
      int attempt = 0;
      Point p;
      do {
        if (++attempt > kMaxDropAttempts)
          throw ConfigError("build_drop: could not place a user at least min_distance_m from "
                            "its BS inside the cell; cell too small");
        p = bs + Point(rng.uniform(-0.5 * edge, 0.5 * edge), rng.uniform(-0.5 * edge, 0.5 * edge));
      } while ((p - bs).norm() < config.min_distance_m);
      drop.user_positions[dims.user(l, k)] = p;
    }
  }

  drop.distance_m.resize(dims.links());
  drop.angle_rad.resize(dims.links());
  drop.shadow_db.resize(dims.links());
  for (std::size_t l = 0; l < dims.L; ++l) {
    for (std::size_t k = 0; k < dims.K; ++k) {
      const Point& u = drop.user_positions[dims.user(l, k)];
      for (std::size_t bs = 0; bs < dims.L; ++bs) {
        const auto idx = dims.link(l, k, bs);
        const Point d = wrap_displacement(drop.bs_positions[bs], u, drop.period);
        drop.distance_m[idx] = d.norm();
        drop.angle_rad[idx] = std::atan2(d.y(), d.x());
        drop.shadow_db[idx] = config.shadow_std_db * rng.normal();
      }
    }
  }
  return drop;
}

ScenarioStatistics scenario_statistics(const NetworkConfig& config, const UserDrop& drop) {
  config.validate();
  const auto dims = config.dims();
  if (drop.dims.L != dims.L || drop.dims.K != dims.K || drop.distance_m.size() != dims.links())
    throw ArgumentError("scenario_statistics: drop does not match config dimensions");

  ScenarioStatistics stats;
  stats.dims = dims;
  stats.sigma2 = config.noise_variance_w();
  stats.beta.resize(dims.links());
  stats.corr.resize(dims.links());
  for (std::size_t i = 0; i < dims.links(); ++i) {
    stats.beta[i] = large_scale_fading(drop.distance_m[i], drop.shadow_db[i]);
    stats.corr[i] = correlation_matrix(stats.beta[i], drop.angle_rad[i], config.corr_magnitude, dims.M);
  }
  return stats;
}

ScenarioStatistics make_statistics(const Dims& dims, std::vector<CMat> corr, double sigma2) {
  if (corr.size() != dims.links())
    throw ArgumentError("make_statistics: expected L*K*L correlation matrices");
  if (!(sigma2 > 0)) throw ArgumentError("make_statistics: sigma2 must be > 0");
  ScenarioStatistics stats;
  stats.dims = dims;
  stats.sigma2 = sigma2;
  stats.beta.resize(corr.size());
  const auto M = static_cast<Eigen::Index>(dims.M);
  for (std::size_t i = 0; i < corr.size(); ++i) {
    const CMat& R = corr[i];
    if (R.rows() != M || R.cols() != M) throw ArgumentError("make_statistics: matrix is not M x M");
    if ((R - R.adjoint()).norm() > 1e-12 * std::max(R.norm(), 1e-300))
      throw ArgumentError("make_statistics: correlation matrix is not Hermitian");
    stats.beta[i] = R.diagonal().real().mean();
    if (!(stats.beta[i] > 0)) throw ArgumentError("make_statistics: beta must be > 0");
  }
  stats.corr = std::move(corr);
  return stats;
}

StatisticsCheck check_statistics(const ScenarioStatistics& stats) {
  StatisticsCheck out;
  for (std::size_t i = 0; i < stats.corr.size(); ++i) {
    const CMat& R = stats.corr[i];
    const double scale = std::max(R.norm(), std::numeric_limits<double>::min());
    out.hermitian = std::max(out.hermitian, (R - R.adjoint()).norm() / scale);
    const double beta = stats.beta[i];
    out.diagonal = std::max(
        out.diagonal, (R.diagonal().array() - cd(beta, 0.0)).abs().maxCoeff() / beta);
    Eigen::SelfAdjointEigenSolver<CMat> es(R, Eigen::EigenvaluesOnly);
    const double trace = R.diagonal().real().sum();
    out.min_eig_over_trace = std::min(out.min_eig_over_trace, es.eigenvalues().minCoeff() / trace);
  }
  return out;
}

}  // namespace lsfd
