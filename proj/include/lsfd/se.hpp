// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "lsfd/channel.hpp"
#include "lsfd/rng.hpp"
#include "lsfd/scenario.hpp"
#include "lsfd/types.hpp"

namespace lsfd {

/// Closed-form MRC coefficients.
///
///  - b(cell, k, bs): signal gain of user (cell, k) after MRC at BS `bs`
///    with the combiner of user (bs, k); complex under MMSE in general.
///  - c(bs, k, cell, k'): non-coherent interference of user (cell, k')
///    into the combiner of user (bs, k).
///  - d(bs, k): noise term of the combiner of user (bs, k).
///
/// All three carry a common 1/tau_p scale relative to the raw expectations
/// E{v^H h}^2, E{|v^H h|^2} and sigma2 E{|v|^2}; the scale cancels in every
/// SINR built from them.
struct SECoefficients {
  Dims dims;
  Estimator estimator = Estimator::mmse;
  CorrMode corr_mode = CorrMode::full;
  std::vector<cd> b;
  std::vector<double> c;
  std::vector<double> d;

  cd b_at(std::size_t cell, std::size_t k, std::size_t bs) const { return b[dims.link(cell, k, bs)]; }
  double c_at(std::size_t bs, std::size_t k, std::size_t cell, std::size_t kp) const {
    return c[c_index(bs, k, cell, kp)];
  }
  double d_at(std::size_t bs, std::size_t k) const { return d[bs * dims.K + k]; }

  /// b-vector [b_{cell,k}^1 ... b_{cell,k}^L].
  CVec b_vec(std::size_t cell, std::size_t k) const;

  std::size_t c_index(std::size_t bs, std::size_t k, std::size_t cell, std::size_t kp) const {
    return ((bs * dims.K + k) * dims.L + cell) * dims.K + kp;
  }
};

/// Second-layer weights, one L-vector per user (Dims::user order).
struct LsfdMatrix {
  Dims dims;
  std::vector<CVec> a;
  /// Number of users whose LSFD system had reciprocal condition < 1e-12.
  std::size_t ill_conditioned = 0;

  const CVec& at(std::size_t cell, std::size_t k) const { return a[dims.user(cell, k)]; }
  CVec& at(std::size_t cell, std::size_t k) { return a[dims.user(cell, k)]; }
};

/// Data powers in watts, Dims::user order.
struct PowerAllocation {
  RVec p;

  static PowerAllocation uniform(const Dims& dims, double power) {
    return {RVec::Constant(static_cast<Eigen::Index>(dims.users()), power)};
  }
  RVec rho() const { return p.cwiseMax(0.0).cwiseSqrt(); }
  /// Throws ArgumentError unless 0 <= p <= p_max everywhere.
  void validate(double p_max) const;
};

struct SEReport {
  Dims dims;
  RVec sinr;
  RVec se;
  /// Sum SE of each cell.
  RVec sum_se_per_cell;
  double prelog = 0.0;

  double total() const { return se.sum(); }
  /// Sum SE per cell averaged over the cells.
  double mean_cell_sum_se() const { return sum_se_per_cell.mean(); }
};

SECoefficients coefficients(const ScenarioStatistics& stats, const RVec& pilot_powers,
                            std::size_t tau_p, Estimator estimator, CorrMode corr_mode);

/// D_k[bs] = sum_{cell,k'} p_{cell,k'} c_{bs,k}^{cell,k'} + d_{bs,k}: the
/// diagonal of the LSFD system matrix shared by all users on pilot k.
RVec interference_diagonal(const SECoefficients& coeffs, const RVec& p, std::size_t k);

/// SINR of one user for an arbitrary LSFD vector.
double sinr_user(const SECoefficients& coeffs, const RVec& p, const CVec& a, std::size_t cell,
                 std::size_t k);

RVec sinr_closed_form(const SECoefficients& coeffs, const RVec& p, const LsfdMatrix& a);

/// C_{l,k} = sum_{l' != l} p_{l',k} b_{l',k} b_{l',k}^H + diag(D_k).
CMat lsfd_system_matrix(const SECoefficients& coeffs, const RVec& p, std::size_t cell,
                        std::size_t k);

/// a_{l,k} = C_{l,k}^{-1} b_{l,k} for every user.
LsfdMatrix optimal_lsfd(const SECoefficients& coeffs, const RVec& p);

/// SINR attained by the optimal LSFD vector: p b^H C^{-1} b.
RVec optimal_sinr(const SECoefficients& coeffs, const RVec& p);

/// Indicator of the own cell.
CVec single_layer_vector(std::size_t L, std::size_t own_cell);
LsfdMatrix single_layer_lsfd(const Dims& dims);

SEReport se_report(const RVec& sinr, const Dims& dims, std::size_t tau_p, std::size_t tau_c);

/// Own-cell regularized zero-forcing: V = H (H^H H + (sigma2 / mean p) I)^{-1}
/// for the M x K matrix H of own-cell estimates.
CMat rzf_combiner(const CMat& estimates, const RVec& own_cell_powers, double sigma2);

/// Monte Carlo estimates of the expectations behind the general SE
/// expression for an arbitrary first-layer combiner. Stores the raw
/// power-independent moments; the C matrices are assembled per power vector.
struct GeneralSEModel {
  Dims dims;
  Combiner combiner = Combiner::mrc;
  Estimator estimator = Estimator::mmse;
  std::size_t n_realizations = 0;
  double sigma2 = 0.0;
  /// Data powers used to build the combiners (RZF regularization).
  RVec powers;

  /// E{v_{l,k}^H h_{j,k}^l} stacked over l, per (j, k) in Dims::user order.
  std::vector<CVec> b;
  std::vector<RVec> b_stderr;
  /// E{g g^H} with g = [v_{l,k}^H h_{j,k}^l]_l, per (j, k).
  std::vector<CMat> second_moment;
  /// E{|v_{l,k}^H h_{j,k'}^l|^2}, SECoefficients::c layout.
  std::vector<double> interference;
  std::vector<double> interference_stderr;
  /// sigma2 E{|v_{l,k}|^2} per (l, k).
  std::vector<double> noise;

  const CVec& b_vec(std::size_t cell, std::size_t k) const { return b[dims.user(cell, k)]; }
  double interference_at(std::size_t bs, std::size_t k, std::size_t cell, std::size_t kp) const {
    return interference[((bs * dims.K + k) * dims.L + cell) * dims.K + kp];
  }

  CMat c1(const RVec& p, std::size_t cell, std::size_t k) const;
  CMat c2(const RVec& p, std::size_t cell, std::size_t k) const;
  CMat c3(const RVec& p, std::size_t cell, std::size_t k) const;
  CMat c4(std::size_t cell, std::size_t k) const;
  CMat total(const RVec& p, std::size_t cell, std::size_t k) const;
};

GeneralSEModel general_expectations_mc(const ScenarioStatistics& stats, Combiner combiner,
                                       Estimator estimator, const RVec& pilot_powers,
                                       std::size_t tau_p, const RVec& p, std::size_t n,
                                       RngStream& rng, std::size_t threads = 1);

/// SINR of one user under the general model for a given LSFD vector.
double general_sinr(const GeneralSEModel& model, const RVec& p, const CVec& a, std::size_t cell,
                    std::size_t k);

struct GeneralLsfdResult {
  LsfdMatrix lsfd;
  SEReport report;
};

/// a = (C1 + C2 + C3 + C4)^{-1} b per user and the resulting SE.
GeneralLsfdResult general_optimal_lsfd(const GeneralSEModel& model, const RVec& p,
                                       std::size_t tau_p, std::size_t tau_c);

}  // namespace lsfd
