// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "lsfd/optimizer.hpp"
#include "support.hpp"

using namespace lsfd;
using Catch::Approx;

namespace {

struct Fixture {
  NetworkConfig cfg;
  ScenarioStatistics stats;
  SECoefficients co;
  RVec rho0;

  explicit Fixture(std::uint64_t seed, std::size_t M = 32, double corr = 0.5,
                   Estimator est = Estimator::mmse, std::size_t L = 4, std::size_t K = 3)
      : cfg(test::small_network(seed, L, K, M, corr)), stats(test::make_stats(cfg)) {
    const RVec pilots = RVec::Constant(static_cast<Eigen::Index>(L * K), cfg.pilot_power_w);
    co = coefficients(stats, pilots, cfg.tau_p, est, CorrMode::full);
    auto rng = substream(seed, 1);
    rho0 = random_initial_rho(co.dims, cfg.p_max_w, rng);
  }

  ConvergenceOptions options() const {
    ConvergenceOptions o;
    o.prelog = 1.0 - double(cfg.tau_p) / double(cfg.tau_c);
    return o;
  }
};

WmmseState after_u(const SECoefficients& co, const RVec& rho, bool two_layer) {
  WmmseState s = initial_state(co, rho, two_layer);
  s.u = update_u(s, co);
  return s;
}

}  // namespace

TEST_CASE("u update", "[optimizer]") {
  Fixture f(1);
  WmmseState s = initial_state(f.co, f.rho0, true);

  SECTION("zero rho gives zero u") {
    s.rho(3) = 0.0;
    CHECK(update_u(s, f.co)(3) == cd(0.0, 0.0));
  }
  SECTION("idempotent for fixed rho and a") {
    s.u = update_u(s, f.co);
    const CVec again = update_u(s, f.co);
    CHECK((again - s.u).norm() <= 1e-14 * s.u.norm());
  }
  SECTION("zero LSFD vector is rejected") {
    s.a.at(0, 0).setZero();
    CHECK_THROWS_AS(update_u(s, f.co), ArgumentError);
  }
  SECTION("single-cell scalar case") {
    const auto stats = test::scalar_stats(0.6, 5, 0.2);
    const auto co = coefficients(stats, RVec::Constant(1, 0.3), 1, Estimator::mmse, CorrMode::full);
    const double rho = 0.4;
    WmmseState one = initial_state(co, RVec::Constant(1, rho), false);
    const double b = co.b_at(0, 0, 0).real();
    const double expected = rho * b / (rho * rho * b * b + rho * rho * co.c_at(0, 0, 0, 0) + co.d_at(0, 0));
    CHECK(test::rel_diff(update_u(one, co)(0), cd(expected, 0.0)) < 1e-13);
  }
}

TEST_CASE("w update", "[optimizer]") {
  Fixture f(2);
  WmmseState s = after_u(f.co, f.rho0, true);
  const auto mw = update_w(s, f.co);
  const RVec sinr = sinr_closed_form(f.co, f.rho0.cwiseAbs2(), s.a);

  for (std::size_t v = 0; v < f.co.dims.users(); ++v) {
    const auto i = static_cast<Eigen::Index>(v);
    const std::size_t l = v / f.co.dims.K, k = v % f.co.dims.K;
    const cd ab = s.a.at(l, k).dot(f.co.b_vec(l, k));
    CHECK(std::abs(mw.e(i) - (1.0 - s.rho(i) * (s.u(i) * ab).real())) <= 1e-12);
    CHECK(std::abs(mw.e(i) - 1.0 / (1.0 + sinr(i))) <= 1e-12);
    CHECK(mw.w(i) == Approx(1.0 / mw.e(i)).epsilon(1e-15));
    if (s.rho(i) > 0) CHECK(mw.e(i) < 1.0);
  }

  SECTION("rho = 0 gives e = w = 1") {
    s.rho(0) = 0.0;
    s.u = update_u(s, f.co);
    const auto z = update_w(s, f.co);
    CHECK(z.e(0) == 1.0);
    CHECK(z.w(0) == 1.0);
  }

  SECTION("objective matches the log-SINR form at the u, w optimum") {
    s.e = mw.e;
    s.w = mw.w;
    double expected = 0.0;
    for (Eigen::Index i = 0; i < sinr.size(); ++i) expected += 1.0 + std::log(1.0 / (1.0 + sinr(i)));
    // w e - ln w with w = 1 + SINR, e = 1 / (1 + SINR).
    CHECK(objective(s, f.co) == Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("a update", "[optimizer]") {
  Fixture f(3, 32, 0.8);
  WmmseState s = after_u(f.co, f.rho0, true);
  const RVec p = s.rho.cwiseAbs2();
  const double before = sinr_closed_form(f.co, p, single_layer_lsfd(f.co.dims)).sum();
  s.a = single_layer_lsfd(f.co.dims);
  s.u = update_u(s, f.co);
  const LsfdMatrix a = update_a(s, f.co);
  const LsfdMatrix ref = optimal_lsfd(f.co, p);

  for (std::size_t l = 0; l < f.co.dims.L; ++l) {
    for (std::size_t k = 0; k < f.co.dims.K; ++k) {
      const CVec& x = a.at(l, k);
      const CVec& y = ref.at(l, k);
      // Collinear: x = alpha y for a complex alpha.
      const cd alpha = y.dot(x) / y.squaredNorm();
      CHECK((x - alpha * y).norm() <= 1e-8 * x.norm());
    }
  }
  const RVec after = sinr_closed_form(f.co, p, a);
  CHECK(after.sum() >= before);
  for (Eigen::Index i = 0; i < after.size(); ++i)
    CHECK(after(i) >= sinr_closed_form(f.co, p, single_layer_lsfd(f.co.dims))(i) * (1 - 1e-12));
}

TEST_CASE("rho update", "[optimizer]") {
  Fixture f(4);
  WmmseState s = after_u(f.co, f.rho0, true);
  auto mw = update_w(s, f.co);
  s.e = mw.e;
  s.w = mw.w;
  const RVec rho = update_rho(s, f.co, f.cfg.p_max_w);
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    CHECK(rho(i) >= 0.0);
    CHECK(rho(i) <= std::sqrt(f.cfg.p_max_w));
  }

  SECTION("tiny power budget clamps at the maximum") {
    const RVec r = update_rho(s, f.co, 1e-20);
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (r(i) > 0) CHECK(r(i) == std::sqrt(1e-20));
  }

  SECTION("interference-free scalar case gives 1/b") {
    const auto stats = test::scalar_stats(0.6, 5, 0.2);
    auto co = coefficients(stats, RVec::Constant(1, 0.3), 1, Estimator::mmse, CorrMode::full);
    co.c.assign(co.c.size(), 0.0);
    WmmseState one = initial_state(co, RVec::Constant(1, 0.1), false);
    one.u(0) = 1.0;
    one.w(0) = 1.0;
    const double b = co.b_at(0, 0, 0).real();
    CHECK(update_rho(one, co, 1e12)(0) == Approx(1.0 / b).epsilon(1e-13));
  }

  SECTION("negative linear term clamps at zero") {
    WmmseState neg = s;
    neg.u = -neg.u;
    const RVec r = update_rho(neg, f.co, f.cfg.p_max_w);
    for (Eigen::Index i = 0; i < r.size(); ++i) CHECK(r(i) == 0.0);
  }

  SECTION("analytic gradient agrees with central differences") {
    s.rho = rho;
    const double h = 1e-6 * std::sqrt(f.cfg.p_max_w);
    for (std::size_t v = 0; v < f.co.dims.users(); ++v) {
      WmmseState up = s, dn = s;
      up.rho(static_cast<Eigen::Index>(v)) += h;
      dn.rho(static_cast<Eigen::Index>(v)) -= h;
      const double fd = (objective(up, f.co) - objective(dn, f.co)) / (2 * h);
      CHECK(objective_rho_gradient(s, f.co, v) == Approx(fd).epsilon(1e-5).margin(1e-6));
    }
  }
}

TEST_CASE("two-layer optimizer", "[optimizer]") {
  for (auto est : {Estimator::mmse, Estimator::ew_mmse}) {
    Fixture f(5, 32, 0.8, est);
    const auto r = run_two_layer(f.co, f.cfg.p_max_w, f.rho0, f.options());
    const auto& se = r.trace.sum_se;
    REQUIRE(se.size() == r.trace.iterations + 1);
    for (std::size_t n = 1; n < se.size(); ++n) CHECK(se[n] >= se[n - 1] - 1e-9);
    for (std::size_t n = 1; n < r.trace.objective.size(); ++n)
      CHECK(r.trace.objective[n] <= r.trace.objective[n - 1] + 1e-9);
    CHECK(r.trace.terminated_by == Termination::epsilon);
    CHECK(stopping_met(r.trace, 1e-3));
    CHECK(r.trace.user_se.size() == se.size());
    CHECK(r.trace.final_se.sum() == Approx(se.back()).epsilon(1e-12));
    for (Eigen::Index i = 0; i < r.power.p.size(); ++i) {
      CHECK(r.power.p(i) >= 0.0);
      CHECK(r.power.p(i) <= f.cfg.p_max_w * (1 + 1e-15));
    }

    // Starting point: optimal LSFD at rho0.
    const RVec start = optimal_sinr(f.co, f.rho0.cwiseAbs2());
    const double start_se = f.options().prelog * (1.0 + start.array()).log2().sum();
    CHECK(se.front() == Approx(start_se).epsilon(1e-12));
    CHECK(se.back() >= start_se);

    const auto single = run_single_layer(f.co, f.cfg.p_max_w, f.rho0, f.options());
    for (std::size_t n = 1; n < single.trace.sum_se.size(); ++n)
      CHECK(single.trace.sum_se[n] >= single.trace.sum_se[n - 1] - 1e-9);
    CHECK(se.back() >= single.trace.sum_se.back());
  }
}

TEST_CASE("fixed-point refinement", "[optimizer]") {
  Fixture f(6, 32, 0.5);
  auto opts = f.options();
  opts.fixed_point_tol = 1e-10;
  opts.max_iter = 50000;
  const auto r = run_two_layer(f.co, f.cfg.p_max_w, f.rho0, opts);
  CHECK(r.trace.terminated_by == Termination::fixed_point);
  CHECK(r.trace.epsilon_iteration > 0);
  CHECK(r.trace.epsilon_iteration <= r.trace.iterations);
  CHECK(fixed_point_residual(r.state, f.co, f.cfg.p_max_w) <= 1e-8);

  SECTION("stationarity for interior powers") {
    const double rho_max = std::sqrt(f.cfg.p_max_w);
    const double scale = std::max(1.0, std::abs(objective(r.state, f.co)));
    for (std::size_t v = 0; v < f.co.dims.users(); ++v) {
      const double rho = r.state.rho(static_cast<Eigen::Index>(v));
      if (rho <= 1e-6 * rho_max || rho >= rho_max * (1 - 1e-6)) continue;
      CHECK(std::abs(objective_rho_gradient(r.state, f.co, v)) * rho_max / scale <= 1e-5);
    }
  }

  SECTION("switched-off users are exactly zero, not denormal") {
    for (Eigen::Index i = 0; i < r.state.rho.size(); ++i)
      CHECK((r.state.rho(i) == 0.0 || r.state.rho(i) >= 1e-12 * std::sqrt(f.cfg.p_max_w)));
  }
}

TEST_CASE("one cell: single- and two-layer optimizers coincide", "[optimizer]") {
  Fixture f(7, 16, 0.5, Estimator::mmse, 1, 3);
  const auto two = run_two_layer(f.co, f.cfg.p_max_w, f.rho0, f.options());
  const auto one = run_single_layer(f.co, f.cfg.p_max_w, f.rho0, f.options());
  CHECK(two.trace.sum_se.back() == Approx(one.trace.sum_se.back()).epsilon(1e-9));
}

TEST_CASE("approximate-LSFD optimizer keeps the best iterate", "[optimizer]") {
  Fixture f(8, 32, 0.8);
  const RVec pilots = RVec::Constant(12, f.cfg.pilot_power_w);
  const auto approx = coefficients(f.stats, pilots, f.cfg.tau_p, Estimator::mmse, CorrMode::diagonal_approx);
  auto opts = f.options();
  opts.max_iter = 100;
  const auto r = run_two_layer_approx_lsfd(f.co, approx, f.cfg.p_max_w, f.rho0, opts);
  CHECK(r.trace.iterations == 100);
  const double best = *std::max_element(r.trace.sum_se.begin(), r.trace.sum_se.end());
  const RVec sinr = sinr_closed_form(f.co, r.power.p, r.lsfd);
  CHECK(opts.prelog * (1.0 + sinr.array()).log2().sum() == Approx(best).epsilon(1e-10));
}

TEST_CASE("initial rho and argument checks", "[optimizer]") {
  Fixture f(9);
  RngStream rng(1);
  const RVec rho = random_initial_rho(f.co.dims, 0.2, rng);
  CHECK(rho.minCoeff() >= 0.0);
  CHECK(rho.maxCoeff() <= std::sqrt(0.2));
  CHECK_THROWS_AS(run_two_layer(f.co, 0.0, f.rho0), ArgumentError);
  CHECK_THROWS_AS(run_two_layer(f.co, 0.2, RVec::Constant(12, 1.0)), ArgumentError);
  ConvergenceOptions bad;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = {};
  bad.epsilon = -1;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("stopping rule", "[optimizer]") {
  OptimizationTrace t;
  t.sum_se = {1.0, 2.0, 2.0};
  CHECK(stopping_met(t, 0.0));
  t.sum_se = {1.0, 1.002};
  CHECK_FALSE(stopping_met(t, 1e-3));
  t.sum_se = {1.0, 1.5};
  CHECK(stopping_met(t, 0.5));
}

TEST_CASE("arithmetic operation count", "[optimizer]") {
  CHECK(arithmetic_op_count(4, 5, 1) == 17600 + 1920 + 1840 + 1200 + 320 + 2);
  CHECK(arithmetic_op_count(4, 5, 1) == 22882);
  CHECK(arithmetic_op_count(1, 1, 1) == 56);
  for (std::uint64_t L : {1, 2, 4, 7})
    for (std::uint64_t K : {1, 3, 5, 10})
      CHECK(arithmetic_op_count(L, K, 2) == 2 * arithmetic_op_count(L, K, 1));
}
