// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "lsfd/rng.hpp"
#include "lsfd/se.hpp"
#include "lsfd/types.hpp"

namespace lsfd {

/// Weighted-MMSE iterate. All per-user vectors use Dims::user order.
struct WmmseState {
  Dims dims;
  CVec u;
  RVec w;
  RVec e;
  LsfdMatrix a;
  RVec rho;
  std::size_t iteration = 0;
};

struct ConvergenceOptions {
  /// Stop once the total sum SE moves by at most epsilon (bit/s/Hz).
  double epsilon = 1e-3;
  std::size_t max_iter = 500;
  bool record_trace = true;
  /// Pre-log factor 1 - tau_p / tau_c used for the SE trace.
  double prelog = 1.0 - 5.0 / 200.0;
  /// When > 0, keep iterating after the epsilon rule fires until no block
  /// variable moves by more than this relative amount.
  double fixed_point_tol = 0.0;

  void validate() const;
};

enum class Termination { epsilon, fixed_point, max_iter };
std::string to_string(Termination t);

struct OptimizationTrace {
  /// Total sum SE at the initial point and after every iteration.
  std::vector<double> sum_se;
  /// Per-user SE alongside sum_se; empty unless record_trace.
  std::vector<RVec> user_se;
  /// WMMSE objective after every iteration.
  std::vector<double> objective;
  RVec final_se;
  /// Iterations run in total.
  std::size_t iterations = 0;
  /// Iteration at which the epsilon rule first held; 0 if it never did.
  std::size_t epsilon_iteration = 0;
  Termination terminated_by = Termination::max_iter;
};

struct OptimizationResult {
  PowerAllocation power;
  LsfdMatrix lsfd;
  OptimizationTrace trace;
  WmmseState state;
};

/// rho uniform on [0, sqrt(p_max)] per user.
RVec random_initial_rho(const Dims& dims, double p_max, RngStream& rng);

/// Iterate before the first update: given rho, a from the optimal LSFD
/// (two-layer) or the own-cell indicator (single-layer); u, w from (rho, a).
WmmseState initial_state(const SECoefficients& coeffs, const RVec& rho, bool two_layer);

/// u-tilde: a^H (sum_{all l'} rho^2 b b^H + diag(D_k)) a per user.
RVec u_tilde(const WmmseState& state, const SECoefficients& coeffs);

/// Closed-form block minimizers. Each is pure: it returns the new value
/// of its block computed from the current state.
CVec update_u(const WmmseState& state, const SECoefficients& coeffs);

struct MseWeights {
  RVec e;
  RVec w;
};
MseWeights update_w(const WmmseState& state, const SECoefficients& coeffs);

LsfdMatrix update_a(const WmmseState& state, const SECoefficients& coeffs);
RVec update_rho(const WmmseState& state, const SECoefficients& coeffs, double p_max);

/// Per-user MSE e at the state's (u, a, rho).
RVec mse(const WmmseState& state, const SECoefficients& coeffs);
/// sum (w e - ln w).
double objective(const WmmseState& state, const SECoefficients& coeffs);
/// d objective / d rho_{l,k} with u, w, a fixed (analytic).
double objective_rho_gradient(const WmmseState& state, const SECoefficients& coeffs,
                              std::size_t user);

OptimizationResult run_two_layer(const SECoefficients& coeffs, double p_max, const RVec& rho0,
                                 const ConvergenceOptions& opts = {});
OptimizationResult run_single_layer(const SECoefficients& coeffs, double p_max, const RVec& rho0,
                                    const ConvergenceOptions& opts = {});

/// Joint optimization where the LSFD block comes from `approx` (typically
/// diagonal-only statistics) while u, w, rho use `exact`. Monotonicity is
/// lost, so all max_iter iterations run and the best iterate by exact sum SE
/// is returned.
OptimizationResult run_two_layer_approx_lsfd(const SECoefficients& exact,
                                             const SECoefficients& approx, double p_max,
                                             const RVec& rho0, const ConvergenceOptions& opts = {});

/// Largest relative change of any block entry over one more u, w, a, rho
/// pass from `state`. Zero at an exact fixed point.
double fixed_point_residual(const WmmseState& state, const SECoefficients& coeffs, double p_max,
                            bool two_layer = true);

/// |sum_se[n] - sum_se[n-1]| <= epsilon.
bool stopping_met(const OptimizationTrace& trace, double epsilon);

/// N (11 L^3 K^2 + 6 L^3 K + (L^4 K + 53 L^2 K) / 3 + 3 L^2 K^2 + 16 L K + 2).
std::uint64_t arithmetic_op_count(std::uint64_t L, std::uint64_t K, std::uint64_t N);

}  // namespace lsfd
