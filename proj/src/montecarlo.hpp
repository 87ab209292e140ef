// SPDX-License-Identifier: Apache-2.0
// Shared Monte Carlo machinery for the general SE model and the SINR oracle.
#pragma once

#include <vector>

#include "lsfd/channel.hpp"
#include "lsfd/scenario.hpp"
#include "lsfd/types.hpp"

namespace lsfd::detail {

struct McWorkspace {
  ChannelRealization channels;
  PilotObservation pilots;
  CMat estimates;
  CMat combiners;
  CMat all_channels;
  CMat products;
};

/// Per-variant output of one realization.
struct McDraw {
  /// g[((bs * K + k) * L + j) * K + kp] = v_{bs,k}^H h_{j,kp}^{bs}.
  std::vector<cd> g;
  /// |v_{bs,k}|^2 at bs * K + k.
  std::vector<double> norms;
};

/// One small-scale realization: channels and pilot phase are drawn once;
/// estimates, first-layer combiners and all combiner/channel inner products
/// are then formed for each requested estimator.
class McKernel {
 public:
  McKernel(const ScenarioStatistics& stats, std::vector<Estimator> estimators, Combiner combiner,
           const RVec& pilot_powers, std::size_t tau_p, const RVec& data_powers);

  const Dims& dims() const { return stats_->dims; }
  double sigma2() const { return stats_->sigma2; }
  std::size_t variants() const { return estimators_.size(); }

  std::size_t product_count() const { return dims().users() * dims().users(); }
  std::size_t product_index(std::size_t bs, std::size_t k, std::size_t j, std::size_t kp) const {
    return ((bs * dims().K + k) * dims().L + j) * dims().K + kp;
  }

  /// `out` is resized to variants().
  void draw(RngStream& rng, McWorkspace& ws, std::vector<McDraw>& out) const;

 private:
  const ScenarioStatistics* stats_;
  std::vector<Estimator> estimators_;
  Combiner combiner_;
  EstimationModel model_;
  ChannelSampler sampler_;
  RVec pilot_powers_;
  std::size_t tau_p_;
  RVec data_powers_;
  /// sqrt(p^) R Psi^{-1} for the own-cell link of each (bs, k), built by
  /// solving against Psi's Cholesky factor.
  std::vector<CMat> mmse_weights_;
};

struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Contiguous trial ranges; also the unit of parallel work and of the
/// delete-a-group jackknife.
std::vector<Chunk> make_chunks(std::size_t n, std::size_t groups);
std::size_t default_groups(std::size_t n);

}  // namespace lsfd::detail
