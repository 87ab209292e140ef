// SPDX-License-Identifier: Apache-2.0
#include "lsfd/se.hpp"

#include <cmath>

#include "lsfd/parallel.hpp"
#include "montecarlo.hpp"

namespace lsfd {

namespace {

constexpr double kRcondWarning = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// tr(A B) for Hermitian B.
double trace_product_hermitian_real(const CMat& A, const CMat& B) {
  return (A.array() * B.array().conjugate()).sum().real();
}
cd trace_product_hermitian(const CMat& A, const CMat& B) {
  return (A.array() * B.array().conjugate()).sum();
}

void check_powers(const Dims& d, const RVec& p, const char* who) {
  if (static_cast<std::size_t>(p.size()) != d.users())
    throw ArgumentError(std::string(who) + ": one power per user expected");
}

void full_mmse(const ScenarioStatistics& stats, const RVec& ph, std::size_t tau_p,
               SECoefficients& out) {
  const Dims& d = stats.dims;
  const double tau = static_cast<double>(tau_p);
  const auto psi = compute_psi(stats, ph, tau_p);
  for (std::size_t m = 0; m < d.L; ++m) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const Eigen::LLT<CMat> llt(psi[m * d.K + k]);
      if (llt.info() != Eigen::Success) throw NumericError("coefficients: Psi not positive definite");
      const CMat& R_own = stats.R(m, k, m);
      const CMat Q = llt.solve(R_own);  // Psi^{-1} R
      const CMat X = R_own * Q;          // R Psi^{-1} R
      const double p_own = ph(idx(d.user(m, k)));
      for (std::size_t j = 0; j < d.L; ++j) {
        const double scale = std::sqrt(tau * ph(idx(d.user(j, k))) * p_own);
        // tr(Psi^{-1} R_own R_j) = tr(Q R_j) with Q = Psi^{-1} R_own
        out.b[d.link(j, k, m)] = scale * trace_product_hermitian(Q, stats.R(j, k, m));
      }
      for (std::size_t j = 0; j < d.L; ++j)
        for (std::size_t kp = 0; kp < d.K; ++kp)
          out.c[out.c_index(m, k, j, kp)] = p_own * trace_product_hermitian_real(X, stats.R(j, kp, m));
      out.d[m * d.K + k] = stats.sigma2 * p_own * trace_product_hermitian_real(Q, R_own);
    }
  }
}

void full_ewmmse(const ScenarioStatistics& stats, const RVec& ph, std::size_t tau_p,
                 SECoefficients& out) {
  const Dims& d = stats.dims;
  const EstimationModel model(stats, ph, tau_p);
  const double sqrt_tau = std::sqrt(static_cast<double>(tau_p));
  for (std::size_t m = 0; m < d.L; ++m) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const CMat& psi = model.psi(m, k);
      const double tr_psi = psi.diagonal().real().sum();
      const double g_own = model.varrho(m, k, m);
      for (std::size_t j = 0; j < d.L; ++j)
        out.b[d.link(j, k, m)] = sqrt_tau * g_own * model.varrho(j, k, m) * tr_psi;
      for (std::size_t j = 0; j < d.L; ++j)
        for (std::size_t kp = 0; kp < d.K; ++kp)
          out.c[out.c_index(m, k, j, kp)] =
              g_own * g_own * trace_product_hermitian_real(stats.R(j, kp, m), psi);
      out.d[m * d.K + k] = g_own * g_own * stats.sigma2 * tr_psi;
    }
  }
}

// R replaced by beta I: both estimators reduce to the same scalars.
void diagonal(const ScenarioStatistics& stats, const RVec& ph, std::size_t tau_p,
              SECoefficients& out) {
  const Dims& d = stats.dims;
  const double tau = static_cast<double>(tau_p);
  const double M = static_cast<double>(d.M);
  for (std::size_t m = 0; m < d.L; ++m) {
    for (std::size_t k = 0; k < d.K; ++k) {
      double psi = stats.sigma2;
      for (std::size_t j = 0; j < d.L; ++j) psi += tau * ph(idx(d.user(j, k))) * stats.beta_at(j, k, m);
      const double p_own = ph(idx(d.user(m, k)));
      const double beta_own = stats.beta_at(m, k, m);
      for (std::size_t j = 0; j < d.L; ++j)
        out.b[d.link(j, k, m)] =
            std::sqrt(tau * ph(idx(d.user(j, k))) * p_own) * M * beta_own * stats.beta_at(j, k, m) / psi;
      const double common = p_own * beta_own * beta_own * M / psi;
      for (std::size_t j = 0; j < d.L; ++j)
        for (std::size_t kp = 0; kp < d.K; ++kp)
          out.c[out.c_index(m, k, j, kp)] = common * stats.beta_at(j, kp, m);
      out.d[m * d.K + k] = stats.sigma2 * common;
    }
  }
}

}  // namespace

CVec SECoefficients::b_vec(std::size_t cell, std::size_t k) const {
  CVec v(idx(dims.L));
  for (std::size_t bs = 0; bs < dims.L; ++bs) v(idx(bs)) = b_at(cell, k, bs);
  return v;
}

void PowerAllocation::validate(double p_max) const {
  if ((p.array() < 0).any()) throw ArgumentError("PowerAllocation: negative power");
  if ((p.array() > p_max).any()) throw ArgumentError("PowerAllocation: power above p_max");
}

SECoefficients coefficients(const ScenarioStatistics& stats, const RVec& pilot_powers,
                            std::size_t tau_p, Estimator estimator, CorrMode corr_mode) {
  const Dims& d = stats.dims;
  check_powers(d, pilot_powers, "coefficients");
  if ((pilot_powers.array() < 0).any()) throw ArgumentError("coefficients: negative pilot power");
  SECoefficients out;
  out.dims = d;
  out.estimator = estimator;
  out.corr_mode = corr_mode;
  out.b.assign(d.links(), cd(0.0, 0.0));
  out.c.assign(d.users() * d.users(), 0.0);
  out.d.assign(d.users(), 0.0);
  if (corr_mode == CorrMode::diagonal_approx)
    diagonal(stats, pilot_powers, tau_p, out);
  else if (estimator == Estimator::mmse)
    full_mmse(stats, pilot_powers, tau_p, out);
  else
    full_ewmmse(stats, pilot_powers, tau_p, out);
  return out;
}

RVec interference_diagonal(const SECoefficients& coeffs, const RVec& p, std::size_t k) {
  const Dims& d = coeffs.dims;
  RVec D(idx(d.L));
  for (std::size_t m = 0; m < d.L; ++m) {
    double acc = coeffs.d_at(m, k);
    for (std::size_t j = 0; j < d.L; ++j)
      for (std::size_t kp = 0; kp < d.K; ++kp) acc += p(idx(d.user(j, kp))) * coeffs.c_at(m, k, j, kp);
    D(idx(m)) = acc;
  }
  return D;
}

namespace {

double sinr_with_diagonal(const SECoefficients& coeffs, const RVec& p, const CVec& a,
                          const RVec& D, std::size_t cell, std::size_t k) {
  const Dims& d = coeffs.dims;
  if (a.size() != idx(d.L)) throw ArgumentError("sinr: LSFD vector must have L entries");
  double num = 0.0;
  double den = (a.array().abs2() * D.array()).sum();
  for (std::size_t j = 0; j < d.L; ++j) {
    const double gain = std::norm(a.dot(coeffs.b_vec(j, k)));  // |a^H b|^2
    const double pj = p(idx(d.user(j, k)));
    if (j == cell)
      num = pj * gain;
    else
      den += pj * gain;
  }
  if (!(den > 0.0)) throw NumericError("sinr: zero denominator (LSFD vector is zero?)");
  return num / den;
}

}  // namespace

double sinr_user(const SECoefficients& coeffs, const RVec& p, const CVec& a, std::size_t cell,
                 std::size_t k) {
  check_powers(coeffs.dims, p, "sinr_user");
  return sinr_with_diagonal(coeffs, p, a, interference_diagonal(coeffs, p, k), cell, k);
}

RVec sinr_closed_form(const SECoefficients& coeffs, const RVec& p, const LsfdMatrix& a) {
  const Dims& d = coeffs.dims;
  check_powers(d, p, "sinr_closed_form");
  if (a.a.size() != d.users()) throw ArgumentError("sinr_closed_form: one LSFD vector per user expected");
  RVec out(idx(d.users()));
  for (std::size_t k = 0; k < d.K; ++k) {
    const RVec D = interference_diagonal(coeffs, p, k);
    for (std::size_t l = 0; l < d.L; ++l)
      out(idx(d.user(l, k))) = sinr_with_diagonal(coeffs, p, a.at(l, k), D, l, k);
  }
  return out;
}

namespace {

CMat system_matrix(const SECoefficients& coeffs, const RVec& p, const RVec& D, std::size_t cell,
                   std::size_t k) {
  const Dims& d = coeffs.dims;
  CMat C = D.cast<cd>().asDiagonal();
  for (std::size_t j = 0; j < d.L; ++j) {
    if (j == cell) continue;
    const CVec bj = coeffs.b_vec(j, k);
    C.noalias() += p(idx(d.user(j, k))) * (bj * bj.adjoint());
  }
  return C;
}

}  // namespace

CMat lsfd_system_matrix(const SECoefficients& coeffs, const RVec& p, std::size_t cell,
                        std::size_t k) {
  check_powers(coeffs.dims, p, "lsfd_system_matrix");
  return system_matrix(coeffs, p, interference_diagonal(coeffs, p, k), cell, k);
}

LsfdMatrix optimal_lsfd(const SECoefficients& coeffs, const RVec& p) {
  const Dims& d = coeffs.dims;
  check_powers(d, p, "optimal_lsfd");
  LsfdMatrix out;
  out.dims = d;
  out.a.resize(d.users());
  for (std::size_t k = 0; k < d.K; ++k) {
    const RVec D = interference_diagonal(coeffs, p, k);
    for (std::size_t l = 0; l < d.L; ++l) {
      const Eigen::LLT<CMat> llt(system_matrix(coeffs, p, D, l, k));
      if (llt.info() != Eigen::Success) throw NumericError("optimal_lsfd: LSFD system not positive definite");
      if (llt.rcond() < kRcondWarning) ++out.ill_conditioned;
      out.at(l, k) = llt.solve(coeffs.b_vec(l, k));
    }
  }
  return out;
}

RVec optimal_sinr(const SECoefficients& coeffs, const RVec& p) {
  const Dims& d = coeffs.dims;
  check_powers(d, p, "optimal_sinr");
  RVec out(idx(d.users()));
  for (std::size_t k = 0; k < d.K; ++k) {
    const RVec D = interference_diagonal(coeffs, p, k);
    for (std::size_t l = 0; l < d.L; ++l) {
      const Eigen::LLT<CMat> llt(system_matrix(coeffs, p, D, l, k));
      if (llt.info() != Eigen::Success) throw NumericError("optimal_sinr: LSFD system not positive definite");
      const CVec b = coeffs.b_vec(l, k);
      out(idx(d.user(l, k))) = p(idx(d.user(l, k))) * b.dot(llt.solve(b)).real();
    }
  }
  return out;
}

CVec single_layer_vector(std::size_t L, std::size_t own_cell) {
  if (own_cell >= L) throw ArgumentError("single_layer_vector: cell index out of range");
  CVec a = CVec::Zero(idx(L));
  a(idx(own_cell)) = 1.0;
  return a;
}

LsfdMatrix single_layer_lsfd(const Dims& dims) {
  LsfdMatrix out;
  out.dims = dims;
  out.a.resize(dims.users());
  for (std::size_t l = 0; l < dims.L; ++l)
    for (std::size_t k = 0; k < dims.K; ++k) out.at(l, k) = single_layer_vector(dims.L, l);
  return out;
}

SEReport se_report(const RVec& sinr, const Dims& dims, std::size_t tau_p, std::size_t tau_c) {
  if (static_cast<std::size_t>(sinr.size()) != dims.users())
    throw ArgumentError("se_report: one SINR per user expected");
  if (!(tau_p > 0 && tau_p < tau_c)) throw ArgumentError("se_report: need 0 < tau_p < tau_c");
  if ((sinr.array() < 0).any()) throw ArgumentError("se_report: negative SINR");
  SEReport r;
  r.dims = dims;
  r.sinr = sinr;
  r.prelog = 1.0 - static_cast<double>(tau_p) / static_cast<double>(tau_c);
  r.se = r.prelog * sinr.array().log1p() / std::log(2.0);
  r.sum_se_per_cell = RVec::Zero(idx(dims.L));
  for (std::size_t l = 0; l < dims.L; ++l)
    for (std::size_t k = 0; k < dims.K; ++k) r.sum_se_per_cell(idx(l)) += r.se(idx(dims.user(l, k)));
  return r;
}

CMat rzf_combiner(const CMat& estimates, const RVec& own_cell_powers, double sigma2) {
  if (own_cell_powers.size() != estimates.cols())
    throw ArgumentError("rzf_combiner: one power per column expected");
  const double p_bar = own_cell_powers.mean();
  if (!(p_bar > 0) || !(sigma2 > 0)) throw ArgumentError("rzf_combiner: need positive power and noise");
  CMat gram = estimates.adjoint() * estimates;
  gram.diagonal().array() += sigma2 / p_bar;
  const Eigen::LLT<CMat> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericError("rzf_combiner: regularized Gram not positive definite");
  // V = H G^{-1} = (G^{-1} H^H)^H
  return llt.solve(estimates.adjoint()).adjoint();
}

// ---------------------------------------------------------------------------
// General model

CMat GeneralSEModel::c1(const RVec& p, std::size_t cell, std::size_t k) const {
  CMat C = CMat::Zero(idx(dims.L), idx(dims.L));
  for (std::size_t j = 0; j < dims.L; ++j)
    if (j != cell) C.noalias() += p(idx(dims.user(j, k))) * (b_vec(j, k) * b_vec(j, k).adjoint());
  return C;
}

CMat GeneralSEModel::c2(const RVec& p, std::size_t, std::size_t k) const {
  CMat C = CMat::Zero(idx(dims.L), idx(dims.L));
  for (std::size_t j = 0; j < dims.L; ++j) {
    const auto u = dims.user(j, k);
    C += p(idx(u)) * (second_moment[u] - b[u] * b[u].adjoint());
  }
  return C;
}

CMat GeneralSEModel::c3(const RVec& p, std::size_t, std::size_t k) const {
  CMat C = CMat::Zero(idx(dims.L), idx(dims.L));
  for (std::size_t m = 0; m < dims.L; ++m) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dims.L; ++j)
      for (std::size_t kp = 0; kp < dims.K; ++kp)
        if (kp != k) acc += p(idx(dims.user(j, kp))) * interference_at(m, k, j, kp);
    C(idx(m), idx(m)) = acc;
  }
  return C;
}

CMat GeneralSEModel::c4(std::size_t, std::size_t k) const {
  CMat C = CMat::Zero(idx(dims.L), idx(dims.L));
  for (std::size_t m = 0; m < dims.L; ++m) C(idx(m), idx(m)) = noise[m * dims.K + k];
  return C;
}

CMat GeneralSEModel::total(const RVec& p, std::size_t cell, std::size_t k) const {
  return c1(p, cell, k) + c2(p, cell, k) + c3(p, cell, k) + c4(cell, k);
}

GeneralSEModel general_expectations_mc(const ScenarioStatistics& stats, Combiner combiner,
                                       Estimator estimator, const RVec& pilot_powers,
                                       std::size_t tau_p, const RVec& p, std::size_t n,
                                       RngStream& rng, std::size_t threads) {
  const Dims& d = stats.dims;
  if (n < 100) throw ArgumentError("general_expectations_mc: need at least 100 realizations");
  check_powers(d, pilot_powers, "general_expectations_mc");
  check_powers(d, p, "general_expectations_mc");
  const detail::McKernel kernel(stats, {estimator}, combiner, pilot_powers, tau_p, p);
  const std::uint64_t master = rng.engine()();
  const auto chunks = detail::make_chunks(n, detail::default_groups(n));
  const std::size_t U = d.users();
  const std::size_t P = kernel.product_count();
  const auto L = idx(d.L);

  struct Partial {
    std::vector<CVec> b_sum;
    std::vector<RVec> b_sq;
    std::vector<CMat> m2;
    std::vector<double> q;
    std::vector<double> q2;
    std::vector<double> norm;
  };
  std::vector<Partial> partials(chunks.size());

  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    Partial part;
    part.b_sum.assign(U, CVec::Zero(L));
    part.b_sq.assign(U, RVec::Zero(L));
    part.m2.assign(U, CMat::Zero(L, L));
    part.q.assign(P, 0.0);
    part.q2.assign(P, 0.0);
    part.norm.assign(d.L * d.K, 0.0);
    detail::McWorkspace ws;
    std::vector<detail::McDraw> draws;
    CVec gv(L);
    for (std::size_t t = chunks[c].begin; t < chunks[c].end; ++t) {
      RngStream trial = substream(master, t);
      kernel.draw(trial, ws, draws);
      const auto& g = draws.front().g;
      const auto& norms = draws.front().norms;
      for (std::size_t j = 0; j < d.L; ++j) {
        for (std::size_t k = 0; k < d.K; ++k) {
          const auto u = d.user(j, k);
          for (std::size_t m = 0; m < d.L; ++m) gv(idx(m)) = g[kernel.product_index(m, k, j, k)];
          part.b_sum[u] += gv;
          part.b_sq[u] += gv.cwiseAbs2();
          part.m2[u].noalias() += gv * gv.adjoint();
        }
      }
      for (std::size_t i = 0; i < P; ++i) {
        const double a2 = std::norm(g[i]);
        part.q[i] += a2;
        part.q2[i] += a2 * a2;
      }
      for (std::size_t i = 0; i < norms.size(); ++i) part.norm[i] += norms[i];
    }
    partials[c] = std::move(part);
  });

  GeneralSEModel model;
  model.dims = d;
  model.combiner = combiner;
  model.estimator = estimator;
  model.n_realizations = n;
  model.sigma2 = stats.sigma2;
  model.powers = p;
  model.b.assign(U, CVec::Zero(L));
  model.b_stderr.assign(U, RVec::Zero(L));
  model.second_moment.assign(U, CMat::Zero(L, L));
  model.interference.assign(P, 0.0);
  model.interference_stderr.assign(P, 0.0);
  model.noise.assign(d.L * d.K, 0.0);
  std::vector<RVec> b_sq(U, RVec::Zero(L));
  std::vector<double> q2(P, 0.0);
  for (const auto& part : partials) {
    for (std::size_t u = 0; u < U; ++u) {
      model.b[u] += part.b_sum[u];
      b_sq[u] += part.b_sq[u];
      model.second_moment[u] += part.m2[u];
    }
    for (std::size_t i = 0; i < P; ++i) {
      model.interference[i] += part.q[i];
      q2[i] += part.q2[i];
    }
    for (std::size_t i = 0; i < model.noise.size(); ++i) model.noise[i] += part.norm[i];
  }
  const double nn = static_cast<double>(n);
  for (std::size_t u = 0; u < U; ++u) {
    model.b[u] /= nn;
    model.second_moment[u] /= nn;
    const RVec var = (b_sq[u] / nn - model.b[u].cwiseAbs2()).cwiseMax(0.0) * (nn / (nn - 1.0));
    model.b_stderr[u] = (var / nn).cwiseSqrt();
  }
  for (std::size_t i = 0; i < P; ++i) {
    const double mean = model.interference[i] / nn;
    const double var = std::max(0.0, q2[i] / nn - mean * mean) * (nn / (nn - 1.0));
    model.interference[i] = mean;
    model.interference_stderr[i] = std::sqrt(var / nn);
  }
  for (auto& v : model.noise) v *= stats.sigma2 / nn;
  return model;
}

double general_sinr(const GeneralSEModel& model, const RVec& p, const CVec& a, std::size_t cell,
                    std::size_t k) {
  check_powers(model.dims, p, "general_sinr");
  const double num = p(idx(model.dims.user(cell, k))) * std::norm(a.dot(model.b_vec(cell, k)));
  const double den = a.dot(model.total(p, cell, k) * a).real();
  if (!(den > 0.0)) throw NumericError("general_sinr: zero denominator");
  return num / den;
}

GeneralLsfdResult general_optimal_lsfd(const GeneralSEModel& model, const RVec& p,
                                       std::size_t tau_p, std::size_t tau_c) {
  const Dims& d = model.dims;
  check_powers(d, p, "general_optimal_lsfd");
  GeneralLsfdResult out;
  out.lsfd.dims = d;
  out.lsfd.a.resize(d.users());
  RVec sinr(idx(d.users()));
  for (std::size_t l = 0; l < d.L; ++l) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const Eigen::LLT<CMat> llt(model.total(p, l, k));
      if (llt.info() != Eigen::Success)
        throw NumericError("general_optimal_lsfd: LSFD system not positive definite");
      if (llt.rcond() < kRcondWarning) ++out.lsfd.ill_conditioned;
      const CVec& b = model.b_vec(l, k);
      out.lsfd.at(l, k) = llt.solve(b);
      sinr(idx(d.user(l, k))) = std::max(0.0, p(idx(d.user(l, k))) * b.dot(out.lsfd.at(l, k)).real());
    }
  }
  out.report = se_report(sinr, d, tau_p, tau_c);
  return out;
}

}  // namespace lsfd
