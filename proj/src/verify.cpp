// SPDX-License-Identifier: Apache-2.0
#include "lsfd/verify.hpp"

#include <algorithm>
#include <cmath>

#include "lsfd/channel.hpp"
#include "lsfd/parallel.hpp"
#include "montecarlo.hpp"

namespace lsfd {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/// Running sums for z = sum_m conj(a^m) v_{m,k}^H h_{j,k'}^m per (target, source).
struct SinrSums {
  double count = 0.0;
  std::vector<cd> s;       // U x U
  std::vector<double> q;   // U x U
  std::vector<double> nz;  // U

  void init(std::size_t U) {
    s.assign(U * U, cd(0.0, 0.0));
    q.assign(U * U, 0.0);
    nz.assign(U, 0.0);
  }
  void add(const SinrSums& o, double sign) {
    count += sign * o.count;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] += sign * o.s[i];
      q[i] += sign * o.q[i];
    }
    for (std::size_t i = 0; i < nz.size(); ++i) nz[i] += sign * o.nz[i];
  }
};

struct Terms {
  double ds, pc, bu, ni, an, sinr;
};

Terms evaluate(const SinrSums& sums, const Dims& d, const RVec& p, double sigma2,
               std::size_t cell, std::size_t k) {
  const std::size_t U = d.users();
  const std::size_t t = d.user(cell, k);
  const double n = sums.count;
  Terms out{0, 0, 0, 0, 0, 0};
  for (std::size_t j = 0; j < d.L; ++j) {
    for (std::size_t kp = 0; kp < d.K; ++kp) {
      const std::size_t src = d.user(j, kp);
      const cd S = sums.s[t * U + src];
      const double Q = sums.q[t * U + src];
      const double pw = p(idx(src));
      if (kp == k) {
        // |E z|^2 via the all-pairs U-statistic; variance unbiased.
        const double mean_sq = std::max(0.0, (std::norm(S) - Q) / (n * (n - 1.0)));
        const double var = std::max(0.0, (Q - std::norm(S) / n) / (n - 1.0));
        if (j == cell)
          out.ds = pw * mean_sq;
        else
          out.pc += pw * mean_sq;
        out.bu += pw * var;
      } else {
        out.ni += pw * Q / n;
      }
    }
  }
  out.an = sigma2 * sums.nz[t] / n;
  const double den = out.pc + out.bu + out.ni + out.an;
  out.sinr = den > 0.0 ? out.ds / den : 0.0;
  return out;
}

double jackknife_se(const std::vector<double>& leave_out) {
  const double G = static_cast<double>(leave_out.size());
  if (G < 2) return 0.0;
  double mean = 0.0;
  for (double v : leave_out) mean += v;
  mean /= G;
  double acc = 0.0;
  for (double v : leave_out) acc += (v - mean) * (v - mean);
  return std::sqrt((G - 1.0) / G * acc);
}

}  // namespace

McSinrEstimate mc_sinr(const ScenarioStatistics& stats, const LsfdMatrix& a, const RVec& p,
                       const RVec& pilot_powers, std::size_t n, RngStream& rng,
                       const McSinrOptions& opts) {
  return mc_sinr(stats, {McSinrCase{opts.estimator, a}}, p, pilot_powers, n, rng, opts).front();
}

std::vector<McSinrEstimate> mc_sinr(const ScenarioStatistics& stats,
                                    const std::vector<McSinrCase>& cases, const RVec& p,
                                    const RVec& pilot_powers, std::size_t n, RngStream& rng,
                                    const McSinrOptions& opts) {
  const Dims& d = stats.dims;
  if (n < 1000) throw ArgumentError("mc_sinr: need at least 1000 realizations");
  if (cases.empty()) throw ArgumentError("mc_sinr: no cases");
  if (opts.tau_p == 0) throw ArgumentError("mc_sinr: tau_p must be set");
  std::vector<Estimator> estimators;
  std::vector<std::size_t> variant(cases.size());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    if (cases[c].a.a.size() != d.users()) throw ArgumentError("mc_sinr: one LSFD vector per user expected");
    auto it = std::find(estimators.begin(), estimators.end(), cases[c].estimator);
    if (it == estimators.end()) it = estimators.insert(estimators.end(), cases[c].estimator);
    variant[c] = static_cast<std::size_t>(it - estimators.begin());
  }
  const detail::McKernel kernel(stats, estimators, opts.combiner, pilot_powers, opts.tau_p, p);
  const std::uint64_t master = rng.engine()();
  const auto chunks = detail::make_chunks(n, opts.groups ? opts.groups : detail::default_groups(n));
  const std::size_t U = d.users();
  const std::size_t C = cases.size();

  // partials[chunk][case]
  std::vector<std::vector<SinrSums>> partials(chunks.size());
  parallel_for(chunks.size(), opts.threads, [&](std::size_t ch) {
    std::vector<SinrSums> sums(C);
    for (auto& s : sums) s.init(U);
    detail::McWorkspace ws;
    std::vector<detail::McDraw> draws;
    for (std::size_t t = chunks[ch].begin; t < chunks[ch].end; ++t) {
      RngStream trial = substream(master, t);
      kernel.draw(trial, ws, draws);
      for (std::size_t c = 0; c < C; ++c) {
        const auto& g = draws[variant[c]].g;
        const auto& norms = draws[variant[c]].norms;
        SinrSums& acc = sums[c];
        acc.count += 1.0;
        for (std::size_t l = 0; l < d.L; ++l) {
          for (std::size_t k = 0; k < d.K; ++k) {
            const std::size_t tgt = d.user(l, k);
            const CVec& av = cases[c].a.at(l, k);
            for (std::size_t j = 0; j < d.L; ++j) {
              for (std::size_t kp = 0; kp < d.K; ++kp) {
                cd z(0.0, 0.0);
                for (std::size_t m = 0; m < d.L; ++m)
                  z += std::conj(av(idx(m))) * g[kernel.product_index(m, k, j, kp)];
                const std::size_t i = tgt * U + d.user(j, kp);
                acc.s[i] += z;
                acc.q[i] += std::norm(z);
              }
            }
            double nz = 0.0;
            for (std::size_t m = 0; m < d.L; ++m) nz += std::norm(av(idx(m))) * norms[m * d.K + k];
            acc.nz[tgt] += nz;
          }
        }
      }
    }
    partials[ch] = std::move(sums);
  });

  std::vector<McSinrEstimate> results;
  results.reserve(C);
  const std::size_t G = partials.size();
  for (std::size_t c = 0; c < C; ++c) {
    SinrSums total;
    total.init(U);
    for (const auto& part : partials) total.add(part[c], 1.0);

    McSinrEstimate out;
    out.dims = d;
    out.n_realizations = n;
    for (RVec* v : {&out.ds, &out.pc, &out.bu, &out.ni, &out.an, &out.sinr, &out.ds_se, &out.pc_se,
                    &out.bu_se, &out.ni_se, &out.an_se, &out.sinr_se})
      *v = RVec::Zero(idx(U));

    std::vector<std::vector<Terms>> leave(U, std::vector<Terms>(G));
    SinrSums reduced;
    for (std::size_t g = 0; g < G; ++g) {
      reduced = total;
      reduced.add(partials[g][c], -1.0);
      for (std::size_t l = 0; l < d.L; ++l)
        for (std::size_t k = 0; k < d.K; ++k)
          leave[d.user(l, k)][g] = evaluate(reduced, d, p, stats.sigma2, l, k);
    }

    for (std::size_t l = 0; l < d.L; ++l) {
      for (std::size_t k = 0; k < d.K; ++k) {
        const std::size_t u = d.user(l, k);
        const Terms t = evaluate(total, d, p, stats.sigma2, l, k);
        const auto v = idx(u);
        out.ds(v) = t.ds;
        out.pc(v) = t.pc;
        out.bu(v) = t.bu;
        out.ni(v) = t.ni;
        out.an(v) = t.an;
        out.sinr(v) = t.sinr;
        auto se_of = [&](double Terms::*field) {
          std::vector<double> vals(G);
          for (std::size_t g = 0; g < G; ++g) vals[g] = leave[u][g].*field;
          return jackknife_se(vals);
        };
        out.ds_se(v) = se_of(&Terms::ds);
        out.pc_se(v) = se_of(&Terms::pc);
        out.bu_se(v) = se_of(&Terms::bu);
        out.ni_se(v) = se_of(&Terms::ni);
        out.an_se(v) = se_of(&Terms::an);
        out.sinr_se(v) = se_of(&Terms::sinr);
      }
    }
    results.push_back(std::move(out));
  }
  return results;
}

McCoefficients mc_coefficients(const ScenarioStatistics& stats, Estimator estimator,
                               const RVec& pilot_powers, std::size_t tau_p, std::size_t n,
                               RngStream& rng, std::size_t threads) {
  const Dims& d = stats.dims;
  const RVec p = RVec::Ones(idx(d.users()));
  const GeneralSEModel m =
      general_expectations_mc(stats, Combiner::mrc, estimator, pilot_powers, tau_p, p, n, rng, threads);
  const double tau = static_cast<double>(tau_p);
  const double sqrt_tau = std::sqrt(tau);

  McCoefficients out;
  for (SECoefficients* c : {&out.value, &out.stderr_}) {
    c->dims = d;
    c->estimator = estimator;
    c->corr_mode = CorrMode::full;
    c->b.assign(d.links(), cd(0.0, 0.0));
    c->c.assign(d.users() * d.users(), 0.0);
    c->d.assign(d.users(), 0.0);
  }
  for (std::size_t j = 0; j < d.L; ++j) {
    for (std::size_t k = 0; k < d.K; ++k) {
      const auto u = d.user(j, k);
      for (std::size_t bs = 0; bs < d.L; ++bs) {
        out.value.b[d.link(j, k, bs)] = m.b[u](idx(bs)) / sqrt_tau;
        out.stderr_.b[d.link(j, k, bs)] = m.b_stderr[u](idx(bs)) / sqrt_tau;
      }
    }
  }
  for (std::size_t bs = 0; bs < d.L; ++bs) {
    for (std::size_t k = 0; k < d.K; ++k) {
      for (std::size_t j = 0; j < d.L; ++j) {
        for (std::size_t kp = 0; kp < d.K; ++kp) {
          const auto i = out.value.c_index(bs, k, j, kp);
          double v = m.interference_at(bs, k, j, kp);
          if (kp == k) v -= std::norm(m.b_vec(j, k)(idx(bs)));
          out.value.c[i] = v / tau;
          out.stderr_.c[i] = m.interference_stderr[i] / tau;
        }
      }
      out.value.d[bs * d.K + k] = m.noise[bs * d.K + k] / tau;
      out.stderr_.d[bs * d.K + k] = 0.0;
    }
  }
  return out;
}

double QuarticCheck::relative_error() const {
  if (exact_value == 0.0) return std::abs(mc_value);
  return std::abs(mc_value - exact_value) / std::abs(exact_value);
}

QuarticCheck gaussian_quartic_check(const CMat& Lambda, const CMat& Mmat, std::size_t n,
                                    RngStream& rng, std::size_t threads) {
  if (Lambda.rows() != Lambda.cols() || Mmat.rows() != Lambda.rows() || Mmat.cols() != Lambda.cols())
    throw ArgumentError("gaussian_quartic_check: dimension mismatch");
  if (n < 2) throw ArgumentError("gaussian_quartic_check: need at least 2 samples");
  QuarticCheck out;
  const cd tr = (Lambda * Mmat).trace();
  out.exact_value = std::norm(tr) + (Lambda * Mmat * Lambda * Mmat.adjoint()).trace().real();

  const CMat A = covariance_factor(Lambda);
  const std::uint64_t master = rng.engine()();
  const auto chunks = detail::make_chunks(n, detail::default_groups(n));
  std::vector<std::pair<double, double>> partials(chunks.size());
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    CVec g(Lambda.rows());
    CVec u(Lambda.rows());
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t t = chunks[c].begin; t < chunks[c].end; ++t) {
      RngStream trial = substream(master, t);
      trial.fill_complex_normal(g);
      u.noalias() = A.triangularView<Eigen::Lower>() * g;
      const double v = std::norm(u.dot(Mmat * u));
      s += v;
      s2 += v * v;
    }
    partials[c] = {s, s2};
  });
  double s = 0.0;
  double s2 = 0.0;
  for (const auto& [a, b] : partials) {
    s += a;
    s2 += b;
  }
  const double nn = static_cast<double>(n);
  out.mc_value = s / nn;
  const double var = std::max(0.0, s2 / nn - out.mc_value * out.mc_value) * nn / (nn - 1.0);
  out.stderr_ = std::sqrt(var / nn);
  return out;
}

double toy_example_check(const Eigen::Matrix2d& B, RngStream& rng) {
  const double scale = B.cwiseAbs().maxCoeff();
  if (!(scale > 0) || std::abs(B.determinant()) <= 1e-14 * scale * scale)
    throw ArgumentError("toy_example_check: B is singular");
  const Eigen::Vector2cd s(rng.complex_normal(), rng.complex_normal());
  const Eigen::Vector2cd y = B.cast<cd>() * s;
  const Eigen::Vector2cd s_hat = B.cast<cd>().partialPivLu().solve(y);
  return (s_hat - s).norm();
}

double mmse_orthogonality_check(const ScenarioStatistics& stats, Estimator estimator,
                                const RVec& pilot_powers, std::size_t tau_p, std::size_t n,
                                RngStream& rng, std::size_t threads) {
  const Dims& d = stats.dims;
  if (n < 2) throw ArgumentError("mmse_orthogonality_check: need at least 2 samples");
  const EstimationModel model(stats, pilot_powers, tau_p);
  const ChannelSampler sampler(stats);
  const auto M = idx(d.M);
  const std::uint64_t master = rng.engine()();
  const auto chunks = detail::make_chunks(n, detail::default_groups(n));
  std::vector<std::vector<CMat>> partials(chunks.size());
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    std::vector<CMat> acc(d.users(), CMat::Zero(M, M));
    ChannelRealization ch;
    PilotObservation obs;
    for (std::size_t t = chunks[c].begin; t < chunks[c].end; ++t) {
      RngStream trial = substream(master, t);
      sampler.sample_into(ch, trial);
      pilot_observation_into(obs, ch, pilot_powers, tau_p, stats.sigma2, trial);
      for (std::size_t l = 0; l < d.L; ++l) {
        for (std::size_t k = 0; k < d.K; ++k) {
          const CVec h_hat = estimate_channel(estimator, obs.at(l, k), model, l, l, k);
          const CVec err = ch.at(l, k, l) - h_hat;
          acc[d.user(l, k)].noalias() += h_hat * err.adjoint();
        }
      }
    }
    partials[c] = std::move(acc);
  });
  double worst = 0.0;
  for (std::size_t l = 0; l < d.L; ++l) {
    for (std::size_t k = 0; k < d.K; ++k) {
      CMat sum = CMat::Zero(M, M);
      for (const auto& part : partials) sum += part[d.user(l, k)];
      sum /= static_cast<double>(n);
      worst = std::max(worst, sum.norm() / stats.R(l, k, l).norm());
    }
  }
  return worst;
}

}  // namespace lsfd
