// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lsfd/experiment.hpp"

using namespace lsfd;
using Catch::Approx;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.name = "unit";
  s.network.L = 4;
  s.network.K = 2;
  s.network.tau_p = 2;
  s.network.M = 16;
  s.network.seed = 42;
  s.estimators = {Estimator::mmse, Estimator::ew_mmse};
  s.modes = {Mode::i, Mode::ii, Mode::iii, Mode::iv, Mode::v, Mode::vi};
  s.n_drops = 2;
  s.max_iter = 60;
  s.threads = 1;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("mode, sweep and path names", "[experiment]") {
  CHECK(parse_mode("v") == Mode::v);
  CHECK(parse_mode("(v)") == Mode::v);
  CHECK(parse_mode("V") == Mode::v);
  CHECK(parse_mode("5") == Mode::v);
  CHECK(parse_mode("iv") == Mode::iv);
  CHECK_THROWS_AS(parse_mode("vii"), ConfigError);
  for (int m = 1; m <= 6; ++m) CHECK(parse_mode(to_string(Mode(m))) == Mode(m));
  CHECK(is_optimized(Mode::ii));
  CHECK(is_optimized(Mode::v));
  CHECK(is_optimized(Mode::vi));
  CHECK_FALSE(is_optimized(Mode::iii));

  for (auto p : {SweepParameter::none, SweepParameter::corr_magnitude, SweepParameter::antennas,
                 SweepParameter::users, SweepParameter::iteration})
    CHECK(parse_sweep_parameter(to_string(p)) == p);
  CHECK_THROWS_AS(parse_sweep_parameter("bandwidth"), ConfigError);
  for (auto p : {SePath::automatic, SePath::closed_form, SePath::monte_carlo})
    CHECK(parse_se_path(to_string(p)) == p);
  CHECK(parse_estimator(to_string(Estimator::ew_mmse)) == Estimator::ew_mmse);
  CHECK(parse_combiner(to_string(Combiner::rzf)) == Combiner::rzf);
  CHECK_THROWS_AS(parse_estimator("LS"), ConfigError);
}

TEST_CASE("spec validation", "[experiment]") {
  auto s = small_spec();
  CHECK_NOTHROW(s.validate());

  auto bad = s;
  bad.n_drops = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.combiners = {Combiner::rzf};
  bad.se_path = SePath::closed_form;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.combiners = {Combiner::rzf};
  CHECK_THROWS_AS(bad.validate(), ConfigError);  // optimized modes need MRC
  bad.modes = {Mode::i, Mode::iii};
  CHECK_NOTHROW(bad.validate());
  bad.n_small_scale = 50;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.sweep = {SweepParameter::corr_magnitude, {0.2, 1.0}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.sweep = {SweepParameter::antennas, {}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.sweep = {SweepParameter::iteration, {0, 61}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = s;
  bad.network.corr_magnitude = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sweep points and per-point networks", "[experiment]") {
  auto s = small_spec();
  CHECK(s.sweep_points() == std::vector<double>{0.0});
  s.sweep = {SweepParameter::users, {3, 4}};
  CHECK(s.network_at(3).K == 3);
  CHECK(s.network_at(3).tau_p == 3);
  s.sweep = {SweepParameter::antennas, {8}};
  CHECK(s.network_at(8).M == 8);
  s.sweep = {SweepParameter::corr_magnitude, {0.3}};
  CHECK(s.network_at(0.3).corr_magnitude == 0.3);
  s.sweep = {SweepParameter::iteration, {}};
  CHECK(s.sweep_points().size() == s.max_iter + 1);
}

TEST_CASE("running an experiment", "[experiment]") {
  const auto spec = small_spec();
  const auto result = run_experiment(spec);
  // 2 drops x 2 estimators x 6 modes x 4 cells.
  REQUIRE(result.rows.size() == 2 * 2 * 6 * 4);

  for (const auto& r : result.rows) {
    CHECK(r.per_user_se.size() == 2);
    CHECK(r.sum_se == Approx(std::accumulate(r.per_user_se.begin(), r.per_user_se.end(), 0.0)).epsilon(1e-12));
    // Power control may switch off every user of a cell.
    CHECK(r.sum_se >= 0.0);
    CHECK(r.wall_time_s == 0.0);
    if (is_optimized(r.mode)) CHECK(r.iterations >= 1);
    else CHECK(r.iterations == 0);
  }

  SECTION("expected orderings hold on average") {
    CHECK(mean_sum_se(result.rows, 0.0, Mode::i, Estimator::mmse, Combiner::mrc) > 0.0);
    for (auto est : spec.estimators) {
      const double i = mean_sum_se(result.rows, 0.0, Mode::i, est, Combiner::mrc);
      const double ii = mean_sum_se(result.rows, 0.0, Mode::ii, est, Combiner::mrc);
      const double iii = mean_sum_se(result.rows, 0.0, Mode::iii, est, Combiner::mrc);
      const double v = mean_sum_se(result.rows, 0.0, Mode::v, est, Combiner::mrc);
      CHECK(iii >= i);
      CHECK(v >= ii);
      CHECK(relative_gain(v, ii) >= 0.0);
    }
    CHECK_THROWS_AS(mean_sum_se(result.rows, 1.0, Mode::i, Estimator::mmse, Combiner::mrc), ArgumentError);
  }

  SECTION("summary has one row per configuration") {
    const auto summary = summarize(result.rows);
    CHECK(summary.size() == 12);
    for (const auto& s : summary) CHECK(s.drops == 2);
  }

  SECTION("any drop can be re-run alone") {
    const auto rows = run_drop(spec, 0.0, 1);
    std::vector<ResultRow> expected;
    for (const auto& r : result.rows)
      if (r.drop == 1) expected.push_back(r);
    CHECK(rows == expected);
  }

  SECTION("thread count never changes the output") {
    auto threaded = spec;
    threaded.threads = 3;
    CHECK(to_csv(run_experiment(threaded).rows) == to_csv(result.rows));
  }

  SECTION("first_drop offsets the drop index without changing the drop") {
    auto tail = spec;
    tail.first_drop = 1;
    tail.n_drops = 1;
    std::vector<ResultRow> expected;
    for (const auto& r : result.rows)
      if (r.drop == 1) expected.push_back(r);
    CHECK(run_experiment(tail).rows == expected);
  }
}

TEST_CASE("parameter sweeps", "[experiment]") {
  auto spec = small_spec();
  spec.estimators = {Estimator::mmse};
  spec.modes = {Mode::i, Mode::iii};
  spec.n_drops = 1;

  SECTION("user-count sweep") {
    spec.sweep = {SweepParameter::users, {1, 3}};
    const auto rows = run_experiment(spec).rows;
    REQUIRE(rows.size() == 2 * 2 * 4);
    CHECK(rows.front().sweep_value == 1.0);
    CHECK(rows.front().per_user_se.size() == 1);
    CHECK(rows.back().sweep_value == 3.0);
    CHECK(rows.back().per_user_se.size() == 3);
  }

  SECTION("iteration sweep carries the last value forward") {
    spec.modes = {Mode::v};
    spec.sweep = {SweepParameter::iteration, {0, 1, 2, 59, 60}};
    const auto rows = run_experiment(spec).rows;
    REQUIRE(rows.size() == 5 * 4);
    double prev = -1.0;
    for (std::size_t p = 0; p < 5; ++p) {
      double total = 0.0;
      for (std::size_t c = 0; c < 4; ++c) total += rows[p * 4 + c].sum_se;
      CHECK(total >= prev - 1e-9);
      prev = total;
    }
  }
}

TEST_CASE("Monte Carlo path with RZF", "[experiment][mc]") {
  auto spec = small_spec();
  spec.estimators = {Estimator::mmse};
  spec.combiners = {Combiner::mrc, Combiner::rzf};
  spec.modes = {Mode::i, Mode::iii};
  spec.n_drops = 1;
  spec.n_small_scale = 300;
  const auto rows = run_experiment(spec).rows;
  REQUIRE(rows.size() == 2 * 2 * 4);
  const double mrc = mean_sum_se(rows, 0.0, Mode::iii, Estimator::mmse, Combiner::mrc);
  const double rzf = mean_sum_se(rows, 0.0, Mode::iii, Estimator::mmse, Combiner::rzf);
  CHECK(rzf > mrc);
  CHECK(mean_sum_se(rows, 0.0, Mode::iii, Estimator::mmse, Combiner::rzf) >=
        mean_sum_se(rows, 0.0, Mode::i, Estimator::mmse, Combiner::rzf));
}

TEST_CASE("presets", "[experiment]") {
  for (const auto& name : preset_names()) {
    for (auto scale : {Scale::desk, Scale::paper}) {
      const auto s = preset(name, scale);
      CHECK_NOTHROW(s.validate());
      CHECK(s.name == name);
    }
  }
  const auto fig4 = preset("fig4", Scale::paper);
  CHECK(fig4.estimators == std::vector<Estimator>{Estimator::mmse});
  CHECK(fig4.sweep.values == std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8});
  CHECK(fig4.network.M == 200);
  CHECK(fig4.n_drops == 300);
  CHECK(fig4.network.pilot_power_w == 0.2);
  CHECK(fig4.network.p_max_w == 0.2);
  const auto fig10 = preset("fig10", Scale::paper);
  CHECK(fig10.n_drops == 3000);
  CHECK(fig10.n_small_scale == 1000);
  CHECK(preset("fig3", Scale::desk).sweep.parameter == SweepParameter::iteration);
  CHECK(preset("fig6", Scale::desk).network.M == 100);
  CHECK(preset("fig6", Scale::desk).sweep.values.back() == 150);
  CHECK_THROWS_AS(preset("fig11", Scale::desk), ConfigError);
  CHECK_THROWS_AS(parse_scale("huge"), ConfigError);
}

TEST_CASE("spec documents", "[export]") {
  SECTION("parse with defaults") {
    const auto s = parse_spec(R"({"network": {"M": 32, "K": 3}, "mode": ["ii", 5], "estimator": "EW-MMSE"})");
    CHECK(s.network.M == 32);
    CHECK(s.network.K == 3);
    CHECK(s.network.tau_p == 3);
    CHECK(s.network.L == 4);
    CHECK(s.modes == std::vector<Mode>{Mode::ii, Mode::v});
    CHECK(s.estimators == std::vector<Estimator>{Estimator::ew_mmse});
    CHECK(s.combiners == std::vector<Combiner>{Combiner::mrc});
  }
  SECTION("unknown keys are rejected") {
    CHECK_THROWS_AS(parse_spec(R"({"n_drop": 3})"), ConfigError);
    CHECK_THROWS_AS(parse_spec(R"({"network": {"antennas": 3}})"), ConfigError);
    CHECK_THROWS_AS(parse_spec(R"({"sweep": {"parameter": "M", "value": [1]}})"), ConfigError);
  }
  SECTION("malformed values") {
    CHECK_THROWS_AS(parse_spec("{"), ConfigError);
    CHECK_THROWS_AS(parse_spec(R"({"n_drops": "many"})"), ConfigError);
    CHECK_THROWS_AS(parse_spec(R"({"format": "xml"})"), ConfigError);
    CHECK_THROWS_AS(parse_spec(R"({"combiner": "ZF"})"), ConfigError);
  }
  SECTION("round trip") {
    auto s = small_spec();
    s.sweep = {SweepParameter::corr_magnitude, {0.1, 0.7}};
    s.se_path = SePath::closed_form;
    const auto back = parse_spec(spec_to_json(s));
    CHECK(spec_to_json(back) == spec_to_json(s));
  }
}

TEST_CASE("result export", "[export]") {
  const std::string header = "sweep_value,mode,estimator,combiner,drop,cell,sum_se,iterations,wall_time_s\n";
  CHECK(to_csv({}) == header);

  ResultRow row;
  row.sweep_value = 0.5;
  row.mode = Mode::v;
  row.estimator = Estimator::ew_mmse;
  row.drop = 3;
  row.cell = 1;
  row.sum_se = 12.25;
  row.iterations = 87;
  row.per_user_se = {6.0, 6.25};
  const std::string csv = to_csv({row});
  CHECK(csv == header + "0.5,v,EW-MMSE,MRC,3,1,12.25,87,0\n");

  SECTION("JSON round-trips rows and spec") {
    auto spec = small_spec();
    spec.n_drops = 1;
    spec.modes = {Mode::iii, Mode::v};
    const auto result = run_experiment(spec);
    const auto back = result_from_json(to_json(result));
    CHECK(back.rows == result.rows);
    CHECK(to_json(back) == to_json(result));
    CHECK(to_json(result).find("\"threads\"") == std::string::npos);
  }

  SECTION("files") {
    const auto dir = std::filesystem::temp_directory_path() / "lsfd_export_test";
    std::filesystem::create_directories(dir);
    ExperimentResult result{small_spec(), {row}};
    write_result(result, (dir / "r.csv").string(), OutputFormat::csv);
    CHECK(slurp(dir / "r.csv") == csv);
    write_result(result, (dir / "r.json").string(), OutputFormat::json);
    CHECK(result_from_json(slurp(dir / "r.json")).rows == result.rows);
    CHECK_THROWS_AS(write_result(result, (dir / "missing" / "r.csv").string(), OutputFormat::csv), IoError);
    std::filesystem::remove_all(dir);
  }
}
