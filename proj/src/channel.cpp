// SPDX-License-Identifier: Apache-2.0
#include "lsfd/channel.hpp"

#include <cmath>

namespace lsfd {

CMat covariance_factor(const CMat& R) {
  Eigen::LLT<CMat> llt(R);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double jitter = 1e-12 * R.diagonal().real().sum() / static_cast<double>(R.rows());
  CMat shifted = R;
  shifted.diagonal().array() += jitter;
  llt.compute(shifted);
  if (llt.info() != Eigen::Success)
    throw NumericError("covariance_factor: Cholesky failed even after diagonal jitter");
  return llt.matrixL();
}

ChannelSampler::ChannelSampler(const ScenarioStatistics& stats) : dims_(stats.dims) {
  factors_.reserve(stats.corr.size());
  for (const auto& R : stats.corr) factors_.push_back(covariance_factor(R));
}

ChannelRealization ChannelSampler::sample(RngStream& rng) const {
  ChannelRealization out;
  sample_into(out, rng);
  return out;
}

void ChannelSampler::sample_into(ChannelRealization& out, RngStream& rng) const {
  const auto M = static_cast<Eigen::Index>(dims_.M);
  out.dims = dims_;
  out.h.resize(factors_.size());
  CVec g(M);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    rng.fill_complex_normal(g);
    out.h[i].noalias() = factors_[i].triangularView<Eigen::Lower>() * g;
  }
}

void pilot_observation_into(PilotObservation& out, const ChannelRealization& channels,
                            const RVec& pilot_powers, std::size_t tau_p, double sigma2,
                            RngStream& rng) {
  const Dims& d = channels.dims;
  if (static_cast<std::size_t>(pilot_powers.size()) != d.users())
    throw ArgumentError("pilot_observation: one pilot power per user expected");
  const auto M = static_cast<Eigen::Index>(d.M);
  const double tau = static_cast<double>(tau_p);
  const double noise_std = std::sqrt(tau * sigma2);
  out.dims = d;
  out.y.resize(d.L * d.K);
  for (std::size_t bs = 0; bs < d.L; ++bs) {
    for (std::size_t k = 0; k < d.K; ++k) {
      CVec& y = out.y[bs * d.K + k];
      y.resize(M);
      rng.fill_complex_normal(y);
      y *= noise_std;
      for (std::size_t cell = 0; cell < d.L; ++cell) {
        const double amp = tau * std::sqrt(pilot_powers(static_cast<Eigen::Index>(d.user(cell, k))));
        y += amp * channels.at(cell, k, bs);
      }
    }
  }
}

PilotObservation pilot_observation(const ChannelRealization& channels, const RVec& pilot_powers,
                                   std::size_t tau_p, double sigma2, RngStream& rng) {
  PilotObservation out;
  pilot_observation_into(out, channels, pilot_powers, tau_p, sigma2, rng);
  return out;
}

std::vector<CMat> compute_psi(const ScenarioStatistics& stats, const RVec& pilot_powers,
                              std::size_t tau_p) {
  const Dims& d = stats.dims;
  if (static_cast<std::size_t>(pilot_powers.size()) != d.users())
    throw ArgumentError("compute_psi: one pilot power per user expected");
  const auto M = static_cast<Eigen::Index>(d.M);
  const double tau = static_cast<double>(tau_p);
  std::vector<CMat> psi(d.L * d.K);
  for (std::size_t bs = 0; bs < d.L; ++bs) {
    for (std::size_t k = 0; k < d.K; ++k) {
      CMat P = CMat::Identity(M, M) * stats.sigma2;
      for (std::size_t cell = 0; cell < d.L; ++cell)
        P += (tau * pilot_powers(static_cast<Eigen::Index>(d.user(cell, k)))) * stats.R(cell, k, bs);
      psi[bs * d.K + k] = std::move(P);
    }
  }
  return psi;
}

EstimationModel::EstimationModel(const ScenarioStatistics& stats, const RVec& pilot_powers,
                                 std::size_t tau_p)
    : stats_(&stats), pilot_powers_(pilot_powers), tau_p_(tau_p) {
  const Dims& d = stats.dims;
  if ((pilot_powers.array() < 0).any()) throw ArgumentError("EstimationModel: negative pilot power");
  psi_ = compute_psi(stats, pilot_powers, tau_p);
  psi_llt_.reserve(psi_.size());
  for (const auto& P : psi_) {
    psi_llt_.emplace_back(P);
    if (psi_llt_.back().info() != Eigen::Success)
      throw NumericError("EstimationModel: Psi is not positive definite");
  }

  for (std::size_t i = 0; i < stats.corr.size() && equal_diagonals_; ++i) {
    const auto diag = stats.corr[i].diagonal().real();
    if ((diag.array() - stats.beta[i]).abs().maxCoeff() > 1e-9 * stats.beta[i])
      equal_diagonals_ = false;
  }

  const double tau = static_cast<double>(tau_p);
  varrho_.assign(d.links(), 0.0);
  for (std::size_t bs = 0; bs < d.L; ++bs) {
    for (std::size_t k = 0; k < d.K; ++k) {
      double denom = stats.sigma2;
      for (std::size_t cell = 0; cell < d.L; ++cell)
        denom += tau * pilot_power(cell, k) * stats.beta_at(cell, k, bs);
      for (std::size_t cell = 0; cell < d.L; ++cell)
        varrho_[d.link(cell, k, bs)] =
            std::sqrt(pilot_power(cell, k)) * stats.beta_at(cell, k, bs) / denom;
    }
  }
}

double EstimationModel::varrho(std::size_t cell, std::size_t k, std::size_t bs) const {
  if (!equal_diagonals_)
    throw ArgumentError("EW-MMSE requires correlation matrices with equal diagonal entries");
  return varrho_[dims().link(cell, k, bs)];
}

CVec mmse_estimate(const CVec& y_tilde, const EstimationModel& model, std::size_t bs,
                   std::size_t cell, std::size_t k) {
  const CVec x = model.psi_llt(bs, k).solve(y_tilde);
  return std::sqrt(model.pilot_power(cell, k)) * (model.stats().R(cell, k, bs) * x);
}

CVec ewmmse_estimate(const CVec& y_tilde, const EstimationModel& model, std::size_t bs,
                     std::size_t cell, std::size_t k) {
  return model.varrho(cell, k, bs) * y_tilde;
}

CVec estimate_channel(Estimator estimator, const CVec& y_tilde, const EstimationModel& model,
                      std::size_t bs, std::size_t cell, std::size_t k) {
  return estimator == Estimator::mmse ? mmse_estimate(y_tilde, model, bs, cell, k)
                                      : ewmmse_estimate(y_tilde, model, bs, cell, k);
}

CMat estimate_covariance(Estimator estimator, const EstimationModel& model, std::size_t bs,
                         std::size_t cell, std::size_t k) {
  const double tau = static_cast<double>(model.tau_p());
  if (estimator == Estimator::mmse) {
    const CMat& R = model.stats().R(cell, k, bs);
    const CMat X = model.psi_llt(bs, k).solve(R);  // Psi^{-1} R
    return tau * model.pilot_power(cell, k) * (R * X);
  }
  const double g = model.varrho(cell, k, bs);
  return (g * g * tau) * model.psi(bs, k);
}

CMat error_covariance(Estimator estimator, const EstimationModel& model, std::size_t bs,
                      std::size_t cell, std::size_t k) {
  return model.stats().R(cell, k, bs) - estimate_covariance(estimator, model, bs, cell, k);
}

}  // namespace lsfd
