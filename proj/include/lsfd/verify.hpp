// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lsfd/rng.hpp"
#include "lsfd/scenario.hpp"
#include "lsfd/se.hpp"
#include "lsfd/types.hpp"

namespace lsfd {

/// Monte Carlo estimate of the SINR decomposition per user: desired signal,
/// pilot contamination, beamforming uncertainty, non-coherent interference
/// and noise. Standard errors come from a delete-a-group jackknife.
struct McSinrEstimate {
  Dims dims;
  std::size_t n_realizations = 0;
  RVec ds, pc, bu, ni, an, sinr;
  RVec ds_se, pc_se, bu_se, ni_se, an_se, sinr_se;
};

struct McSinrOptions {
  Estimator estimator = Estimator::mmse;
  Combiner combiner = Combiner::mrc;
  std::size_t tau_p = 0;
  std::size_t threads = 1;
  /// Jackknife groups; 0 picks min(500, n / 2).
  std::size_t groups = 0;
};

/// Data symbols and data-phase noise are integrated out analytically; only
/// channels and pilot noise are sampled. Needs n >= 1000.
McSinrEstimate mc_sinr(const ScenarioStatistics& stats, const LsfdMatrix& a, const RVec& p,
                       const RVec& pilot_powers, std::size_t n, RngStream& rng,
                       const McSinrOptions& opts);

struct McSinrCase {
  Estimator estimator = Estimator::mmse;
  LsfdMatrix a;
};

/// Several (estimator, LSFD) cases evaluated on the same channel and pilot
/// draws; opts.estimator is ignored.
std::vector<McSinrEstimate> mc_sinr(const ScenarioStatistics& stats,
                                    const std::vector<McSinrCase>& cases, const RVec& p,
                                    const RVec& pilot_powers, std::size_t n, RngStream& rng,
                                    const McSinrOptions& opts);

/// Monte Carlo counterparts of the closed-form MRC coefficients, rescaled
/// by the same 1/tau_p the closed forms carry. Same-pilot c entries use the
/// variance of v^H h rather than its second moment.
struct McCoefficients {
  SECoefficients value;
  SECoefficients stderr_;
};
McCoefficients mc_coefficients(const ScenarioStatistics& stats, Estimator estimator,
                               const RVec& pilot_powers, std::size_t tau_p, std::size_t n,
                               RngStream& rng, std::size_t threads = 1);

struct QuarticCheck {
  double mc_value = 0.0;
  double exact_value = 0.0;
  double stderr_ = 0.0;
  double relative_error() const;
};

/// E{|u^H M u|^2} for u ~ CN(0, Lambda) against |tr(Lambda M)|^2 + tr(Lambda M Lambda M^H).
QuarticCheck gaussian_quartic_check(const CMat& Lambda, const CMat& Mmat, std::size_t n,
                                    RngStream& rng, std::size_t threads = 1);

/// Residual |B^{-1}(B s) - s| for a random unit-power symbol pair s.
double toy_example_check(const Eigen::Matrix2d& B, RngStream& rng);

/// max over own-cell links of |E{h^ e^H}|_F / |R|_F.
double mmse_orthogonality_check(const ScenarioStatistics& stats, Estimator estimator,
                                const RVec& pilot_powers, std::size_t tau_p, std::size_t n,
                                RngStream& rng, std::size_t threads = 1);

}  // namespace lsfd
