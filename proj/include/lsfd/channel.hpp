// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "lsfd/rng.hpp"
#include "lsfd/scenario.hpp"
#include "lsfd/types.hpp"

namespace lsfd {

/// One small-scale fading draw: h[link] ~ CN(0, R[link]).
struct ChannelRealization {
  Dims dims;
  std::vector<CVec> h;

  const CVec& at(std::size_t cell, std::size_t k, std::size_t bs) const {
    return h[dims.link(cell, k, bs)];
  }
};

/// Lower-triangular A with A A^H = R. Falls back to one diagonal jitter of
/// 1e-12 trace(R)/M before giving up with NumericError.
CMat covariance_factor(const CMat& R);

/// Factors every correlation matrix once and then draws realizations.
class ChannelSampler {
 public:
  explicit ChannelSampler(const ScenarioStatistics& stats);

  ChannelRealization sample(RngStream& rng) const;
  void sample_into(ChannelRealization& out, RngStream& rng) const;

  const Dims& dims() const { return dims_; }

 private:
  Dims dims_;
  std::vector<CMat> factors_;
};

inline ChannelRealization sample_channels(const ScenarioStatistics& stats, RngStream& rng) {
  return ChannelSampler(stats).sample(rng);
}

/// Pilot-correlated observations y~[bs * K + k] at BS `bs` for pilot k.
/// Pilot sequences themselves are never formed; with orthogonal pilots the
/// despread observation is generated directly.
struct PilotObservation {
  Dims dims;
  std::vector<CVec> y;

  const CVec& at(std::size_t bs, std::size_t k) const { return y[bs * dims.K + k]; }
};

/// y~_{l,k} = tau_p * sum_l' sqrt(p^_{l',k}) h_{l',k}^l + n~, n~ ~ CN(0, tau_p sigma2 I).
PilotObservation pilot_observation(const ChannelRealization& channels, const RVec& pilot_powers,
                                   std::size_t tau_p, double sigma2, RngStream& rng);
void pilot_observation_into(PilotObservation& out, const ChannelRealization& channels,
                            const RVec& pilot_powers, std::size_t tau_p, double sigma2,
                            RngStream& rng);

/// Psi_{l,k} = sum_l' tau_p p^_{l',k} R_{l',k}^l + sigma2 I, in (bs, k) order.
std::vector<CMat> compute_psi(const ScenarioStatistics& stats, const RVec& pilot_powers,
                              std::size_t tau_p);

/// Everything both estimators need: Psi and its Cholesky factor per
/// (bs, pilot), plus the element-wise gains varrho per link.
///
/// Holds a reference to the statistics it was built from; they must outlive
/// the model.
class EstimationModel {
 public:
  EstimationModel(const ScenarioStatistics& stats, const RVec& pilot_powers, std::size_t tau_p);

  const ScenarioStatistics& stats() const { return *stats_; }
  const Dims& dims() const { return stats_->dims; }
  std::size_t tau_p() const { return tau_p_; }
  double pilot_power(std::size_t cell, std::size_t k) const {
    return pilot_powers_(static_cast<Eigen::Index>(dims().user(cell, k)));
  }
  const RVec& pilot_powers() const { return pilot_powers_; }

  const CMat& psi(std::size_t bs, std::size_t k) const { return psi_[bs * dims().K + k]; }
  const Eigen::LLT<CMat>& psi_llt(std::size_t bs, std::size_t k) const {
    return psi_llt_[bs * dims().K + k];
  }
  /// varrho_{cell,k}^{bs}; requires equal-diagonal correlation matrices.
  double varrho(std::size_t cell, std::size_t k, std::size_t bs) const;
  bool equal_diagonals() const { return equal_diagonals_; }

 private:
  const ScenarioStatistics* stats_;
  RVec pilot_powers_;
  std::size_t tau_p_;
  std::vector<CMat> psi_;
  std::vector<Eigen::LLT<CMat>> psi_llt_;
  std::vector<double> varrho_;
  bool equal_diagonals_ = true;
};

/// MMSE estimate of h_{cell,k}^{bs} from y~_{bs,k}:
/// sqrt(p^) R Psi^{-1} y~, with Psi handled through its Cholesky factor.
CVec mmse_estimate(const CVec& y_tilde, const EstimationModel& model, std::size_t bs,
                   std::size_t cell, std::size_t k);

/// Element-wise MMSE estimate varrho * y~.
CVec ewmmse_estimate(const CVec& y_tilde, const EstimationModel& model, std::size_t bs,
                     std::size_t cell, std::size_t k);

CVec estimate_channel(Estimator estimator, const CVec& y_tilde, const EstimationModel& model,
                      std::size_t bs, std::size_t cell, std::size_t k);

/// Analytical covariance of the estimate and of the estimation error.
CMat estimate_covariance(Estimator estimator, const EstimationModel& model, std::size_t bs,
                         std::size_t cell, std::size_t k);
CMat error_covariance(Estimator estimator, const EstimationModel& model, std::size_t bs,
                      std::size_t cell, std::size_t k);

}  // namespace lsfd
