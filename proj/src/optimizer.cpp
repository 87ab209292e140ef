// SPDX-License-Identifier: Apache-2.0
#include "lsfd/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace lsfd {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

RVec powers_of(const RVec& rho) { return rho.array().square(); }

/// a^H b_{j,k} for every cell j.
CVec projections(const SECoefficients& coeffs, const CVec& a, std::size_t k) {
  CVec s(idx(coeffs.dims.L));
  for (std::size_t j = 0; j < coeffs.dims.L; ++j) s(idx(j)) = a.dot(coeffs.b_vec(j, k));
  return s;
}

std::vector<RVec> all_diagonals(const SECoefficients& coeffs, const RVec& p) {
  std::vector<RVec> D(coeffs.dims.K);
  for (std::size_t k = 0; k < coeffs.dims.K; ++k) D[k] = interference_diagonal(coeffs, p, k);
  return D;
}

constexpr double kRhoFloor = 1e-12;

double relative_change(double before, double after) {
  return std::abs(after - before) / std::max(std::abs(before), 1e-300);
}

double relative_change(const CVec& before, const CVec& after) {
  return (after - before).norm() / std::max(before.norm(), 1e-300);
}

double sum_se(const SECoefficients& coeffs, const RVec& rho, const LsfdMatrix& a, double prelog,
              RVec* per_user = nullptr) {
  const RVec sinr = sinr_closed_form(coeffs, powers_of(rho), a);
  const RVec se = prelog * sinr.array().log1p() / std::log(2.0);
  if (per_user) *per_user = se;
  return se.sum();
}

struct StepChange {
  double max_relative = 0.0;
};

/// One pass u -> w -> a -> rho. `approx` (if set) supplies the LSFD block.
StepChange iterate(WmmseState& s, const SECoefficients& coeffs, double p_max, bool update_lsfd,
                   const SECoefficients* approx) {
  StepChange change;
  const CVec u = update_u(s, coeffs);
  for (Eigen::Index i = 0; i < u.size(); ++i)
    change.max_relative = std::max(change.max_relative,
                                   std::abs(u(i) - s.u(i)) / std::max(std::abs(s.u(i)), 1e-300));
  s.u = u;
  auto mw = update_w(s, coeffs);
  for (Eigen::Index i = 0; i < mw.w.size(); ++i)
    change.max_relative = std::max(change.max_relative, relative_change(s.w(i), mw.w(i)));
  s.e = std::move(mw.e);
  s.w = std::move(mw.w);

  if (update_lsfd) {
    LsfdMatrix a;
    if (approx) {
      a = optimal_lsfd(*approx, powers_of(s.rho));
      // Rescale each direction to the exact block minimizer along it.
      const RVec rt = u_tilde(WmmseState{s.dims, s.u, s.w, s.e, a, s.rho, s.iteration}, coeffs);
      for (std::size_t l = 0; l < s.dims.L; ++l) {
        for (std::size_t k = 0; k < s.dims.K; ++k) {
          const auto v = idx(s.dims.user(l, k));
          const cd ab = a.at(l, k).dot(coeffs.b_vec(l, k));
          // rho conj(u a^H b) / (|u|^2 u~), written without squaring u
          if (s.u(v) != cd(0.0, 0.0) && s.rho(v) > 0.0 && rt(v) > 0.0)
            a.at(l, k) *= (s.rho(v) / s.u(v)) * std::conj(ab) / rt(v);
          else
            a.at(l, k) = s.a.at(l, k);
        }
      }
    } else {
      a = update_a(s, coeffs);
    }
    for (std::size_t i = 0; i < a.a.size(); ++i)
      change.max_relative = std::max(change.max_relative, relative_change(s.a.a[i], a.a[i]));
    s.a = std::move(a);
  }

  const RVec rho = update_rho(s, coeffs, p_max);
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    change.max_relative = std::max(change.max_relative, relative_change(s.rho(i), rho(i)));
  s.rho = rho;
  ++s.iteration;
  return change;
}

}  // namespace

double fixed_point_residual(const WmmseState& state, const SECoefficients& coeffs, double p_max,
                            bool two_layer) {
  WmmseState s = state;
  return iterate(s, coeffs, p_max, two_layer, nullptr).max_relative;
}

namespace {

OptimizationResult run(const SECoefficients& coeffs, double p_max, const RVec& rho0,
                       const ConvergenceOptions& opts, bool two_layer) {
  opts.validate();
  if (!(p_max > 0)) throw ArgumentError("optimizer: p_max must be > 0");
  const double rho_max = std::sqrt(p_max);
  if (rho0.size() != idx(coeffs.dims.users()) || (rho0.array() < 0).any() ||
      (rho0.array() > rho_max * (1 + 1e-12)).any())
    throw ArgumentError("optimizer: initial rho must be feasible, one entry per user");

  OptimizationResult out;
  WmmseState s = initial_state(coeffs, rho0.cwiseMin(rho_max), two_layer);
  auto& trace = out.trace;
  const auto record = [&] {
    RVec per_user;
    trace.sum_se.push_back(sum_se(coeffs, s.rho, s.a, opts.prelog, &per_user));
    if (opts.record_trace) trace.user_se.push_back(std::move(per_user));
  };
  record();
  bool epsilon_met = false;
  while (s.iteration < opts.max_iter) {
    const StepChange change = iterate(s, coeffs, p_max, two_layer, nullptr);
    record();
    if (opts.record_trace) trace.objective.push_back(objective(s, coeffs));
    if (!epsilon_met && stopping_met(trace, opts.epsilon)) {
      epsilon_met = true;
      trace.terminated_by = Termination::epsilon;
      trace.epsilon_iteration = s.iteration;
      if (opts.fixed_point_tol <= 0.0) break;
    }
    if (epsilon_met && change.max_relative <= opts.fixed_point_tol) {
      trace.terminated_by = Termination::fixed_point;
      break;
    }
  }
  if (!epsilon_met) trace.terminated_by = Termination::max_iter;
  trace.iterations = s.iteration;
  sum_se(coeffs, s.rho, s.a, opts.prelog, &trace.final_se);
  out.power.p = powers_of(s.rho);
  out.lsfd = s.a;
  out.state = std::move(s);
  return out;
}

}  // namespace

void ConvergenceOptions::validate() const {
  if (!(epsilon >= 0)) throw ArgumentError("ConvergenceOptions: epsilon must be >= 0");
  if (max_iter < 1) throw ArgumentError("ConvergenceOptions: max_iter must be >= 1");
  if (!(prelog > 0 && prelog < 1)) throw ArgumentError("ConvergenceOptions: prelog must lie in (0, 1)");
  if (!(fixed_point_tol >= 0)) throw ArgumentError("ConvergenceOptions: fixed_point_tol must be >= 0");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::epsilon: return "epsilon";
    case Termination::fixed_point: return "fixed_point";
    case Termination::max_iter: return "max_iter";
  }
  return "unknown";
}

RVec random_initial_rho(const Dims& dims, double p_max, RngStream& rng) {
  RVec rho(idx(dims.users()));
  const double hi = std::sqrt(p_max);
  for (Eigen::Index i = 0; i < rho.size(); ++i) rho(i) = rng.uniform(0.0, hi);
  return rho;
}

WmmseState initial_state(const SECoefficients& coeffs, const RVec& rho, bool two_layer) {
  WmmseState s;
  s.dims = coeffs.dims;
  s.rho = rho;
  s.a = two_layer ? optimal_lsfd(coeffs, powers_of(rho)) : single_layer_lsfd(coeffs.dims);
  s.u = CVec::Zero(rho.size());
  s.w = RVec::Ones(rho.size());
  s.e = RVec::Ones(rho.size());
  s.u = update_u(s, coeffs);
  auto mw = update_w(s, coeffs);
  s.e = std::move(mw.e);
  s.w = std::move(mw.w);
  return s;
}

RVec u_tilde(const WmmseState& state, const SECoefficients& coeffs) {
  const Dims& d = coeffs.dims;
  const RVec p = powers_of(state.rho);
  const auto D = all_diagonals(coeffs, p);
  RVec out(idx(d.users()));
  for (std::size_t l = 0; l < d.L; ++l) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const CVec& a = state.a.at(l, k);
      const CVec s = projections(coeffs, a, k);
      double acc = (a.array().abs2() * D[k].array()).sum();
      for (std::size_t j = 0; j < d.L; ++j) acc += p(idx(d.user(j, k))) * std::norm(s(idx(j)));
      out(idx(d.user(l, k))) = acc;
    }
  }
  return out;
}

CVec update_u(const WmmseState& state, const SECoefficients& coeffs) {
  const Dims& d = coeffs.dims;
  const RVec ut = u_tilde(state, coeffs);
  CVec u(idx(d.users()));
  for (std::size_t l = 0; l < d.L; ++l) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const auto v = idx(d.user(l, k));
      if (!(ut(v) > 0.0)) throw ArgumentError("update_u: LSFD vector must be nonzero");
      const cd ab = state.a.at(l, k).dot(coeffs.b_vec(l, k));
      u(v) = state.rho(v) * std::conj(ab) / ut(v);
    }
  }
  return u;
}

RVec mse(const WmmseState& state, const SECoefficients& coeffs) {
  const Dims& d = coeffs.dims;
  const RVec ut = u_tilde(state, coeffs);
  RVec e(idx(d.users()));
  for (std::size_t l = 0; l < d.L; ++l) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const auto v = idx(d.user(l, k));
      const cd ab = state.a.at(l, k).dot(coeffs.b_vec(l, k));
      e(v) = std::norm(state.u(v)) * ut(v) - 2.0 * state.rho(v) * (state.u(v) * ab).real() + 1.0;
    }
  }
  return e;
}

MseWeights update_w(const WmmseState& state, const SECoefficients& coeffs) {
  MseWeights out;
  out.e = mse(state, coeffs);
  if ((out.e.array() <= 0.0).any()) throw NumericError("update_w: nonpositive MSE");
  out.w = out.e.cwiseInverse();
  return out;
}

LsfdMatrix update_a(const WmmseState& state, const SECoefficients& coeffs) {
  const Dims& d = coeffs.dims;
  const RVec p = powers_of(state.rho);
  LsfdMatrix out = state.a;
  out.ill_conditioned = 0;
  for (std::size_t k = 0; k < d.K; ++k) {
    const RVec D = interference_diagonal(coeffs, p, k);
    CMat C = D.cast<cd>().asDiagonal();
    for (std::size_t j = 0; j < d.L; ++j) {
      const CVec bj = coeffs.b_vec(j, k);
      C.noalias() += p(idx(d.user(j, k))) * (bj * bj.adjoint());
    }
    const Eigen::LLT<CMat> llt(C);
    if (llt.info() != Eigen::Success) throw NumericError("update_a: system not positive definite");
    if (llt.rcond() < 1e-12) out.ill_conditioned += d.L;
    for (std::size_t l = 0; l < d.L; ++l) {
      const auto v = idx(d.user(l, k));
      const cd u = state.u(v);
      if (u == cd(0.0, 0.0) || state.rho(v) == 0.0) continue;
      out.at(l, k) = (state.rho(v) / std::conj(u)) * llt.solve(coeffs.b_vec(l, k));
    }
  }
  return out;
}

namespace {

/// Coefficient of rho_v^2 in the objective with u, w, a fixed.
double rho_quadratic(const WmmseState& state, const SECoefficients& coeffs, std::size_t cell,
                     std::size_t k) {
  const Dims& d = coeffs.dims;
  const CVec b = coeffs.b_vec(cell, k);
  double acc = 0.0;
  for (std::size_t lp = 0; lp < d.L; ++lp) {
    const auto v = idx(d.user(lp, k));
    acc += state.w(v) * std::norm(state.u(v)) * std::norm(state.a.at(lp, k).dot(b));
  }
  for (std::size_t lp = 0; lp < d.L; ++lp) {
    for (std::size_t kp = 0; kp < d.K; ++kp) {
      const auto v = idx(d.user(lp, kp));
      const double wu = state.w(v) * std::norm(state.u(v));
      if (wu == 0.0) continue;
      const CVec& a = state.a.at(lp, kp);
      double inner = 0.0;
      for (std::size_t m = 0; m < d.L; ++m) inner += std::norm(a(idx(m))) * coeffs.c_at(m, kp, cell, k);
      acc += wu * inner;
    }
  }
  return acc;
}

double rho_linear(const WmmseState& state, const SECoefficients& coeffs, std::size_t cell,
                  std::size_t k) {
  const auto v = idx(coeffs.dims.user(cell, k));
  return state.w(v) * (state.u(v) * state.a.at(cell, k).dot(coeffs.b_vec(cell, k))).real();
}

}  // namespace

RVec update_rho(const WmmseState& state, const SECoefficients& coeffs, double p_max) {
  const Dims& d = coeffs.dims;
  const double rho_max = std::sqrt(p_max);
  RVec rho = state.rho;
  for (std::size_t l = 0; l < d.L; ++l) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const auto v = idx(d.user(l, k));
      const double den = rho_quadratic(state, coeffs, l, k);
      const double num = rho_linear(state, coeffs, l, k);
      if (den > 0.0)
        rho(v) = std::clamp(num / den, 0.0, rho_max);
      else if (num > 0.0)
        rho(v) = rho_max;
      // Switched-off users decay geometrically toward denormals; zero is
      // absorbing anyway since u scales with rho.
      if (rho(v) < kRhoFloor * rho_max) rho(v) = 0.0;
    }
  }
  return rho;
}

double objective(const WmmseState& state, const SECoefficients& coeffs) {
  const RVec e = mse(state, coeffs);
  return (state.w.array() * e.array() - state.w.array().log()).sum();
}

double objective_rho_gradient(const WmmseState& state, const SECoefficients& coeffs,
                              std::size_t user) {
  const std::size_t l = user / coeffs.dims.K;
  const std::size_t k = user % coeffs.dims.K;
  const double rho = state.rho(idx(user));
  return 2.0 * rho * rho_quadratic(state, coeffs, l, k) - 2.0 * rho_linear(state, coeffs, l, k);
}

OptimizationResult run_two_layer(const SECoefficients& coeffs, double p_max, const RVec& rho0,
                                 const ConvergenceOptions& opts) {
  return run(coeffs, p_max, rho0, opts, true);
}

OptimizationResult run_single_layer(const SECoefficients& coeffs, double p_max, const RVec& rho0,
                                    const ConvergenceOptions& opts) {
  return run(coeffs, p_max, rho0, opts, false);
}

OptimizationResult run_two_layer_approx_lsfd(const SECoefficients& exact,
                                             const SECoefficients& approx, double p_max,
                                             const RVec& rho0, const ConvergenceOptions& opts) {
  opts.validate();
  if (!(p_max > 0)) throw ArgumentError("optimizer: p_max must be > 0");
  if (rho0.size() != idx(exact.dims.users()) || (rho0.array() < 0).any())
    throw ArgumentError("optimizer: initial rho must be feasible, one entry per user");
  const double rho_max = std::sqrt(p_max);

  OptimizationResult out;
  WmmseState s = initial_state(exact, rho0.cwiseMin(rho_max), true);
  s.a = optimal_lsfd(approx, powers_of(s.rho));
  s.u = update_u(s, exact);
  auto mw = update_w(s, exact);
  s.e = std::move(mw.e);
  s.w = std::move(mw.w);

  auto& trace = out.trace;
  RVec per_user;
  double best = sum_se(exact, s.rho, s.a, opts.prelog, &per_user);
  trace.sum_se.push_back(best);
  if (opts.record_trace) trace.user_se.push_back(per_user);
  WmmseState best_state = s;
  while (s.iteration < opts.max_iter) {
    iterate(s, exact, p_max, true, &approx);
    const double value = sum_se(exact, s.rho, s.a, opts.prelog, &per_user);
    if (opts.record_trace) {
      trace.sum_se.push_back(value);
      trace.user_se.push_back(per_user);
      trace.objective.push_back(objective(s, exact));
    }
    if (value > best) {
      best = value;
      best_state = s;
    }
  }
  trace.iterations = s.iteration;
  trace.terminated_by = Termination::max_iter;
  sum_se(exact, best_state.rho, best_state.a, opts.prelog, &trace.final_se);
  if (!opts.record_trace) trace.sum_se = {best};

  out.power.p = powers_of(best_state.rho);
  out.lsfd = best_state.a;
  out.state = std::move(best_state);
  return out;
}

bool stopping_met(const OptimizationTrace& trace, double epsilon) {
  const auto n = trace.sum_se.size();
  if (n < 2) return false;
  return std::abs(trace.sum_se[n - 1] - trace.sum_se[n - 2]) <= epsilon;
}

std::uint64_t arithmetic_op_count(std::uint64_t L, std::uint64_t K, std::uint64_t N) {
  const std::uint64_t L2 = L * L;
  const std::uint64_t L3 = L2 * L;
  const std::uint64_t L4 = L3 * L;
  // L^2 K (L^2 + 53) is always divisible by 3.
  return N * (11 * L3 * K * K + 6 * L3 * K + (L4 * K + 53 * L2 * K) / 3 + 3 * L2 * K * K +
              16 * L * K + 2);
}

}  // namespace lsfd
