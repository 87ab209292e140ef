// SPDX-License-Identifier: Apache-2.0
#include "montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "lsfd/se.hpp"

namespace lsfd::detail {

McKernel::McKernel(const ScenarioStatistics& stats, std::vector<Estimator> estimators,
                   Combiner combiner, const RVec& pilot_powers, std::size_t tau_p,
                   const RVec& data_powers)
    : stats_(&stats),
      estimators_(std::move(estimators)),
      combiner_(combiner),
      model_(stats, pilot_powers, tau_p),
      sampler_(stats),
      pilot_powers_(pilot_powers),
      tau_p_(tau_p),
      data_powers_(data_powers) {
  const Dims& d = stats.dims;
  if (estimators_.empty()) throw ArgumentError("McKernel: at least one estimator expected");
  if (static_cast<std::size_t>(data_powers.size()) != d.users())
    throw ArgumentError("McKernel: one data power per user expected");
  const bool any_mmse = std::count(estimators_.begin(), estimators_.end(), Estimator::mmse) > 0;
  const bool any_ew = std::count(estimators_.begin(), estimators_.end(), Estimator::ew_mmse) > 0;
  if (any_ew && !model_.equal_diagonals())
    throw ArgumentError("EW-MMSE requires correlation matrices with equal diagonal entries");
  if (any_mmse) {
    mmse_weights_.resize(d.L * d.K);
    for (std::size_t bs = 0; bs < d.L; ++bs) {
      for (std::size_t k = 0; k < d.K; ++k) {
        // (Psi^{-1} R)^H = R Psi^{-1} since both are Hermitian.
        const CMat X = model_.psi_llt(bs, k).solve(stats.R(bs, k, bs));
        mmse_weights_[bs * d.K + k] = std::sqrt(model_.pilot_power(bs, k)) * X.adjoint();
      }
    }
  }
}

void McKernel::draw(RngStream& rng, McWorkspace& ws, std::vector<McDraw>& out) const {
  const Dims& d = dims();
  const auto M = static_cast<Eigen::Index>(d.M);
  const auto K = static_cast<Eigen::Index>(d.K);
  const auto LK = static_cast<Eigen::Index>(d.users());
  sampler_.sample_into(ws.channels, rng);
  pilot_observation_into(ws.pilots, ws.channels, pilot_powers_, tau_p_, stats_->sigma2, rng);

  out.resize(estimators_.size());
  ws.estimates.resize(M, K);
  ws.all_channels.resize(M, LK);
  for (auto& o : out) {
    o.g.resize(product_count());
    o.norms.resize(d.L * d.K);
  }
  for (std::size_t bs = 0; bs < d.L; ++bs) {
    for (std::size_t j = 0; j < d.L; ++j)
      for (std::size_t kp = 0; kp < d.K; ++kp)
        ws.all_channels.col(static_cast<Eigen::Index>(d.user(j, kp))) = ws.channels.at(j, kp, bs);
    for (std::size_t e = 0; e < estimators_.size(); ++e) {
      for (std::size_t k = 0; k < d.K; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        if (estimators_[e] == Estimator::mmse)
          ws.estimates.col(col).noalias() = mmse_weights_[bs * d.K + k] * ws.pilots.at(bs, k);
        else
          ws.estimates.col(col) = model_.varrho(bs, k, bs) * ws.pilots.at(bs, k);
      }
      const CMat* V = &ws.estimates;
      if (combiner_ == Combiner::rzf) {
        ws.combiners = rzf_combiner(
            ws.estimates, data_powers_.segment(static_cast<Eigen::Index>(bs * d.K), K), stats_->sigma2);
        V = &ws.combiners;
      }
      ws.products.noalias() = V->adjoint() * ws.all_channels;
      McDraw& o = out[e];
      for (std::size_t k = 0; k < d.K; ++k) {
        o.norms[bs * d.K + k] = V->col(static_cast<Eigen::Index>(k)).squaredNorm();
        for (std::size_t j = 0; j < d.L; ++j)
          for (std::size_t kp = 0; kp < d.K; ++kp)
            o.g[product_index(bs, k, j, kp)] =
                ws.products(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d.user(j, kp)));
      }
    }
  }
}

std::vector<Chunk> make_chunks(std::size_t n, std::size_t groups) {
  groups = std::clamp<std::size_t>(groups, 1, std::max<std::size_t>(n, 1));
  std::vector<Chunk> out(groups);
  for (std::size_t g = 0; g < groups; ++g) out[g] = {g * n / groups, (g + 1) * n / groups};
  return out;
}

std::size_t default_groups(std::size_t n) { return std::clamp<std::size_t>(n / 2, 1, 500); }

}  // namespace lsfd::detail
