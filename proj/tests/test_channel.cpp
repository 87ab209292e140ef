// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "lsfd/channel.hpp"
#include "support.hpp"

using namespace lsfd;

namespace {

/// Two cells, one pilot, four antennas, order-one gains.
ScenarioStatistics toy_stats(double corr) {
  Dims d{2, 1, 4};
  std::vector<CMat> R(d.links());
  R[d.link(0, 0, 0)] = correlation_matrix(1.0, 0.3, corr, 4);
  R[d.link(0, 0, 1)] = correlation_matrix(0.4, -1.1, corr, 4);
  R[d.link(1, 0, 0)] = correlation_matrix(0.6, 2.0, corr, 4);
  R[d.link(1, 0, 1)] = correlation_matrix(1.5, 0.8, corr, 4);
  return make_statistics(d, std::move(R), 0.5);
}

struct Accumulator {
  CMat sum;
  std::size_t n = 0;
  explicit Accumulator(Eigen::Index m) : sum(CMat::Zero(m, m)) {}
  void add(const CVec& x, const CVec& y) {
    sum.noalias() += x * y.adjoint();
    ++n;
  }
  CMat mean() const { return sum / static_cast<double>(n); }
};

double rel_fro(const CMat& a, const CMat& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("covariance factor", "[channel]") {
  const CMat R = correlation_matrix(2.0, 0.4, 0.9, 6);
  const CMat A = covariance_factor(R);
  CHECK((A * A.adjoint() - R).norm() < 1e-12 * R.norm());

  SECTION("rank-deficient matrix falls back to jitter") {
    CVec v(4);
    v << 1.0, cd(0.0, 1.0), -1.0, cd(0.5, 0.5);
    const CMat rank1 = v * v.adjoint();
    const CMat B = covariance_factor(rank1);
    CHECK((B * B.adjoint() - rank1).norm() < 1e-6 * rank1.norm());
  }
}

TEST_CASE("sampled channels reproduce their covariance", "[channel][mc]") {
  constexpr std::size_t n = 200000;
  SECTION("scaled identity: per-entry variance within 3 standard errors") {
    const auto stats = test::scalar_stats(0.7, 4, 1.0);
    const ChannelSampler sampler(stats);
    RngStream rng(21);
    RVec acc = RVec::Zero(4);
    ChannelRealization h;
    for (std::size_t t = 0; t < n; ++t) {
      sampler.sample_into(h, rng);
      acc += h.h[0].cwiseAbs2();
    }
    acc /= static_cast<double>(n);
    // |h|^2 is exponential with mean beta, so its standard error is beta / sqrt(n).
    const double se = 0.7 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index m = 0; m < 4; ++m) CHECK(std::abs(acc(m) - 0.7) <= 3.0 * se);
  }
  SECTION("rank-deficient covariance") {
    CVec v(4);
    v << 1.0, cd(0.0, 1.0), -1.0, cd(0.5, 0.5);
    const CMat R = v * v.adjoint();
    const auto stats = make_statistics(Dims{1, 1, 4}, {R}, 1.0);
    const ChannelSampler sampler(stats);
    RngStream rng(22);
    Accumulator cov(4);
    ChannelRealization h;
    for (std::size_t t = 0; t < n; ++t) {
      sampler.sample_into(h, rng);
      cov.add(h.h[0], h.h[0]);
    }
    CHECK(rel_fro(cov.mean(), R) <= 0.02);
  }
  SECTION("fixed seed is deterministic") {
    const auto stats = toy_stats(0.5);
    RngStream a(9), b(9);
    const auto ha = sample_channels(stats, a);
    const auto hb = sample_channels(stats, b);
    for (std::size_t i = 0; i < ha.h.size(); ++i) CHECK(ha.h[i] == hb.h[i]);
  }
}

TEST_CASE("pilot observation", "[channel]") {
  const auto stats = toy_stats(0.5);
  const RVec pilots = RVec::Constant(2, 0.3);

  SECTION("noise-free single cell is tau_p sqrt(p) h") {
    const auto single = test::scalar_stats(1.0, 4, 1.0);
    RngStream rng(1);
    const auto h = sample_channels(single, rng);
    const RVec p1 = RVec::Constant(1, 0.25);
    const auto y = pilot_observation(h, p1, 3, 0.0, rng);
    CHECK((y.at(0, 0) - 3.0 * 0.5 * h.h[0]).norm() < 1e-15);
  }

  SECTION("second moment matches tau_p Psi; mean vanishes") {
    constexpr std::size_t n = 200000;
    constexpr std::size_t tau_p = 2;
    const ChannelSampler sampler(stats);
    const auto psi = compute_psi(stats, pilots, tau_p);
    RngStream rng(31);
    Accumulator cov(4);
    CVec mean = CVec::Zero(4);
    ChannelRealization h;
    PilotObservation y;
    for (std::size_t t = 0; t < n; ++t) {
      sampler.sample_into(h, rng);
      pilot_observation_into(y, h, pilots, tau_p, stats.sigma2, rng);
      cov.add(y.at(1, 0), y.at(1, 0));
      mean += y.at(1, 0);
    }
    mean /= static_cast<double>(n);
    CHECK(rel_fro(cov.mean() / static_cast<double>(tau_p), psi[1]) <= 0.02);
    CHECK(mean.norm() <= 0.02 * std::sqrt(psi[1].trace().real() * tau_p));
  }
}

TEST_CASE("Psi", "[channel]") {
  SECTION("single cell scaled identity") {
    const auto stats = test::scalar_stats(0.8, 3, 0.1);
    const auto psi = compute_psi(stats, RVec::Constant(1, 0.5), 2);
    CHECK((psi[0] - (2 * 0.5 * 0.8 + 0.1) * CMat::Identity(3, 3)).norm() < 1e-15);
  }
  SECTION("zero pilot power leaves only noise") {
    const auto stats = toy_stats(0.5);
    for (const auto& P : compute_psi(stats, RVec::Zero(2), 2))
      CHECK((P - stats.sigma2 * CMat::Identity(4, 4)).norm() < 1e-15);
  }
  SECTION("two cells: explicit re-summation") {
    const auto stats = toy_stats(0.7);
    const RVec pilots = (RVec(2) << 0.2, 0.35).finished();
    const auto psi = compute_psi(stats, pilots, 3);
    for (std::size_t bs = 0; bs < 2; ++bs) {
      CMat expected = stats.sigma2 * CMat::Identity(4, 4);
      expected += 3.0 * 0.2 * stats.R(0, 0, bs);
      expected += 3.0 * 0.35 * stats.R(1, 0, bs);
      CHECK((psi[bs] - expected).norm() < 1e-14);
    }
  }
}

TEST_CASE("estimators", "[channel]") {
  const RVec pilots = (RVec(2) << 0.2, 0.35).finished();
  constexpr std::size_t tau_p = 1;

  SECTION("MMSE decomposition: estimate + error covariance = R") {
    const auto stats = toy_stats(0.8);
    const EstimationModel model(stats, pilots, tau_p);
    for (std::size_t bs = 0; bs < 2; ++bs)
      for (std::size_t cell = 0; cell < 2; ++cell) {
        const CMat sum = estimate_covariance(Estimator::mmse, model, bs, cell, 0) +
                         error_covariance(Estimator::mmse, model, bs, cell, 0);
        CHECK((sum - stats.R(cell, 0, bs)).norm() <= 1e-12 * stats.R(cell, 0, bs).norm());
      }
  }

  SECTION("zero correlation: MMSE and EW-MMSE agree per realization") {
    const auto stats = toy_stats(0.0);
    const EstimationModel model(stats, pilots, tau_p);
    RngStream rng(4);
    for (int t = 0; t < 50; ++t) {
      const auto h = sample_channels(stats, rng);
      const auto y = pilot_observation(h, pilots, tau_p, stats.sigma2, rng);
      for (std::size_t bs = 0; bs < 2; ++bs)
        for (std::size_t cell = 0; cell < 2; ++cell) {
          const CVec a = mmse_estimate(y.at(bs, 0), model, bs, cell, 0);
          const CVec b = ewmmse_estimate(y.at(bs, 0), model, bs, cell, 0);
          CHECK((a - b).norm() <= 1e-12 * a.norm());
        }
    }
  }

  SECTION("single cell with scaled identity: estimators coincide") {
    const auto stats = test::scalar_stats(0.9, 5, 0.3);
    const RVec p1 = RVec::Constant(1, 0.4);
    const EstimationModel model(stats, p1, 1);
    RngStream rng(12);
    const auto h = sample_channels(stats, rng);
    const auto y = pilot_observation(h, p1, 1, stats.sigma2, rng);
    CHECK((mmse_estimate(y.at(0, 0), model, 0, 0, 0) - ewmmse_estimate(y.at(0, 0), model, 0, 0, 0))
              .norm() < 1e-14);
  }

  SECTION("EW-MMSE twins scale with sqrt(p) beta") {
    const auto stats = toy_stats(0.6);
    const EstimationModel model(stats, pilots, tau_p);
    RngStream rng(6);
    const auto h = sample_channels(stats, rng);
    const auto y = pilot_observation(h, pilots, tau_p, stats.sigma2, rng);
    for (std::size_t bs = 0; bs < 2; ++bs) {
      const CVec h0 = ewmmse_estimate(y.at(bs, 0), model, bs, 0, 0) /
                      (std::sqrt(pilots(0)) * stats.beta_at(0, 0, bs));
      const CVec h1 = ewmmse_estimate(y.at(bs, 0), model, bs, 1, 0) /
                      (std::sqrt(pilots(1)) * stats.beta_at(1, 0, bs));
      CHECK((h0 - h1).norm() <= 1e-14 * h0.norm());
    }
  }

  SECTION("EW-MMSE rejects unequal diagonals") {
    CMat R = CMat::Identity(2, 2);
    R(1, 1) = 2.0;
    const auto stats = make_statistics(Dims{1, 1, 2}, {R}, 0.1);
    const RVec p1 = RVec::Constant(1, 0.1);
    const EstimationModel model(stats, p1, 1);
    CHECK_THROWS_AS(model.varrho(0, 0, 0), ArgumentError);
  }
}

TEST_CASE("estimate statistics by Monte Carlo", "[channel][mc]") {
  constexpr std::size_t n = 100000;
  const RVec pilots = (RVec(2) << 0.2, 0.35).finished();
  constexpr std::size_t tau_p = 1;
  const auto stats = toy_stats(0.8);
  const EstimationModel model(stats, pilots, tau_p);
  const ChannelSampler sampler(stats);
  RngStream rng(77);
  Accumulator mmse_cov(4), ew_cov(4), cross(4);
  ChannelRealization h;
  PilotObservation y;
  for (std::size_t t = 0; t < n; ++t) {
    sampler.sample_into(h, rng);
    pilot_observation_into(y, h, pilots, tau_p, stats.sigma2, rng);
    const CVec hm = mmse_estimate(y.at(0, 0), model, 0, 0, 0);
    const CVec he = ewmmse_estimate(y.at(0, 0), model, 0, 0, 0);
    mmse_cov.add(hm, hm);
    ew_cov.add(he, he);
    cross.add(hm, h.at(0, 0, 0) - hm);
  }
  CHECK(rel_fro(mmse_cov.mean(), estimate_covariance(Estimator::mmse, model, 0, 0, 0)) <= 0.02);
  CHECK(rel_fro(ew_cov.mean(), estimate_covariance(Estimator::ew_mmse, model, 0, 0, 0)) <= 0.02);
  CHECK(cross.mean().norm() <= 0.02 * stats.R(0, 0, 0).norm());
}
