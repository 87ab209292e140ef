// SPDX-License-Identifier: Apache-2.0
#include "lsfd/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include "lsfd/optimizer.hpp"
#include "lsfd/parallel.hpp"
#include "lsfd/se.hpp"

namespace lsfd {

namespace {

constexpr std::uint64_t kGeometryStream = 0;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kMcStream = 2;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("experiment: " + what);
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  double lap() {
    if (!on_) return 0.0;
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

struct RowKey {
  Mode mode;
  Estimator estimator;
  Combiner combiner;
  std::size_t drop;
};

void append_cells(std::vector<ResultRow>& out, double sweep_value, const RowKey& key,
                  const Dims& d, const RVec& se, std::size_t iterations, double wall) {
  for (std::size_t l = 0; l < d.L; ++l) {
    ResultRow row;
    row.sweep_value = sweep_value;
    row.mode = key.mode;
    row.estimator = key.estimator;
    row.combiner = key.combiner;
    row.drop = key.drop;
    row.cell = l;
    row.iterations = iterations;
    row.wall_time_s = wall;
    const auto seg = se.segment(static_cast<Eigen::Index>(l * d.K), static_cast<Eigen::Index>(d.K));
    row.per_user_se.assign(seg.data(), seg.data() + seg.size());
    row.sum_se = seg.sum();
    out.push_back(std::move(row));
  }
}

/// Per-user SE at each requested iteration; the final value carries forward
/// once the run has stopped.
std::vector<RVec> trace_at(const OptimizationTrace& trace, const std::vector<double>& points) {
  std::vector<RVec> out;
  out.reserve(points.size());
  for (double v : points) {
    const auto n = std::min(static_cast<std::size_t>(v), trace.user_se.size() - 1);
    out.push_back(trace.user_se[n]);
  }
  return out;
}

/// Everything for one drop at one network point. `points` are the sweep
/// values the rows are labelled with: a single value, or the iteration
/// indices of an iteration sweep. Returns one row block per point.
std::vector<std::vector<ResultRow>> run_unit(const ExperimentSpec& spec, const NetworkConfig& net,
                                             const std::vector<double>& points, std::size_t drop,
                                             std::size_t mc_threads) {
  const bool iteration_sweep = spec.sweep.parameter == SweepParameter::iteration;
  const std::uint64_t drop_seed = substream_seed(net.seed, drop);
  RngStream geometry = substream(drop_seed, kGeometryStream);
  const ScenarioStatistics stats = scenario_statistics(net, build_drop(net, geometry));
  const Dims d = stats.dims;
  const RVec pilot = RVec::Constant(static_cast<Eigen::Index>(d.users()), net.pilot_power_w);
  const RVec fixed = RVec::Constant(static_cast<Eigen::Index>(d.users()), net.p_max_w);
  RngStream init = substream(drop_seed, kInitStream);
  const RVec rho0 = random_initial_rho(d, net.p_max_w, init);

  ConvergenceOptions opts;
  opts.epsilon = spec.epsilon;
  opts.max_iter = spec.max_iter;
  opts.prelog = 1.0 - static_cast<double>(net.tau_p) / static_cast<double>(net.tau_c);
  opts.record_trace = iteration_sweep;

  const auto has = [&](Mode m) {
    return std::find(spec.modes.begin(), spec.modes.end(), m) != spec.modes.end();
  };
  const bool need_approx = has(Mode::iv) || has(Mode::vi);

  std::vector<std::vector<ResultRow>> out(points.size());
  const auto emit = [&](const RowKey& key, const RVec& se, std::size_t iterations, double wall) {
    for (std::size_t i = 0; i < points.size(); ++i)
      append_cells(out[i], points[i], key, d, se, iterations, wall);
  };
  const auto emit_trace = [&](const RowKey& key, const OptimizationResult& r, double wall) {
    if (!iteration_sweep) {
      emit(key, r.trace.final_se, r.trace.iterations, wall);
      return;
    }
    const auto se = trace_at(r.trace, points);
    for (std::size_t i = 0; i < points.size(); ++i)
      append_cells(out[i], points[i], key, d, se[i], r.trace.iterations, wall);
  };
  const auto se_of = [&](const RVec& sinr) { return se_report(sinr, d, net.tau_p, net.tau_c).se; };

  for (Estimator est : spec.estimators) {
    std::optional<SECoefficients> exact;
    std::optional<SECoefficients> approx;
    for (Combiner comb : spec.combiners) {
      if (spec.uses_monte_carlo(comb)) {
        Stopwatch clock(spec.timing);
        RngStream mc = substream(drop_seed, kMcStream);
        const GeneralSEModel model = general_expectations_mc(
            stats, comb, est, pilot, net.tau_p, fixed, spec.n_small_scale, mc, mc_threads);
        const double setup = clock.lap();
        for (Mode mode : spec.modes) {
          const RowKey key{mode, est, comb, drop};
          if (mode == Mode::i) {
            RVec sinr(static_cast<Eigen::Index>(d.users()));
            for (std::size_t l = 0; l < d.L; ++l)
              for (std::size_t k = 0; k < d.K; ++k)
                sinr(static_cast<Eigen::Index>(d.user(l, k))) =
                    general_sinr(model, fixed, single_layer_vector(d.L, l), l, k);
            emit(key, se_of(sinr), 0, setup + clock.lap());
          } else {
            const auto r = general_optimal_lsfd(model, fixed, net.tau_p, net.tau_c);
            emit(key, r.report.se, 0, setup + clock.lap());
          }
        }
        continue;
      }

      if (!exact) exact = coefficients(stats, pilot, net.tau_p, est, CorrMode::full);
      if (need_approx && !approx)
        approx = coefficients(stats, pilot, net.tau_p, est, CorrMode::diagonal_approx);
      for (Mode mode : spec.modes) {
        const RowKey key{mode, est, comb, drop};
        Stopwatch clock(spec.timing);
        switch (mode) {
          case Mode::i:
            emit(key, se_of(sinr_closed_form(*exact, fixed, single_layer_lsfd(d))), 0, clock.lap());
            break;
          case Mode::ii: {
            const auto r = run_single_layer(*exact, net.p_max_w, rho0, opts);
            emit_trace(key, r, clock.lap());
            break;
          }
          case Mode::iii:
            emit(key, se_of(optimal_sinr(*exact, fixed)), 0, clock.lap());
            break;
          case Mode::iv:
            emit(key, se_of(sinr_closed_form(*exact, fixed, optimal_lsfd(*approx, fixed))), 0,
                 clock.lap());
            break;
          case Mode::v: {
            const auto r = run_two_layer(*exact, net.p_max_w, rho0, opts);
            emit_trace(key, r, clock.lap());
            break;
          }
          case Mode::vi: {
            const auto r = run_two_layer_approx_lsfd(*exact, *approx, net.p_max_w, rho0, opts);
            emit_trace(key, r, clock.lap());
            break;
          }
        }
      }
    }
  }
  return out;
}

std::vector<double> iteration_points(const ExperimentSpec& spec) {
  if (!spec.sweep.values.empty()) return spec.sweep.values;
  std::vector<double> all(spec.max_iter + 1);
  for (std::size_t i = 0; i <= spec.max_iter; ++i) all[i] = static_cast<double>(i);
  return all;
}

}  // namespace

std::string to_string(Mode m) {
  static const char* names[] = {"i", "ii", "iii", "iv", "v", "vi"};
  return names[static_cast<int>(m) - 1];
}

Mode parse_mode(std::string_view s) {
  std::string t = lower(s);
  if (t.size() >= 2 && t.front() == '(' && t.back() == ')') t = t.substr(1, t.size() - 2);
  static const std::map<std::string, Mode> table = {
      {"i", Mode::i},   {"ii", Mode::ii}, {"iii", Mode::iii}, {"iv", Mode::iv},
      {"v", Mode::v},   {"vi", Mode::vi}, {"1", Mode::i},     {"2", Mode::ii},
      {"3", Mode::iii}, {"4", Mode::iv},  {"5", Mode::v},     {"6", Mode::vi}};
  const auto it = table.find(t);
  if (it == table.end()) throw ConfigError("unknown mode '" + std::string(s) + "' (expected i..vi)");
  return it->second;
}

bool is_optimized(Mode m) { return m == Mode::ii || m == Mode::v || m == Mode::vi; }

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::none: return "none";
    case SweepParameter::corr_magnitude: return "corr_magnitude";
    case SweepParameter::antennas: return "M";
    case SweepParameter::users: return "K";
    case SweepParameter::iteration: return "iteration";
  }
  return "none";
}

SweepParameter parse_sweep_parameter(std::string_view s) {
  const std::string t(s);
  if (t == "none") return SweepParameter::none;
  if (t == "corr_magnitude") return SweepParameter::corr_magnitude;
  if (t == "M") return SweepParameter::antennas;
  if (t == "K") return SweepParameter::users;
  if (t == "iteration") return SweepParameter::iteration;
  throw ConfigError("unknown sweep parameter '" + t +
                    "' (expected none, corr_magnitude, M, K or iteration)");
}

std::string to_string(SePath p) {
  switch (p) {
    case SePath::automatic: return "auto";
    case SePath::closed_form: return "closed_form";
    case SePath::monte_carlo: return "monte_carlo";
  }
  return "auto";
}

SePath parse_se_path(std::string_view s) {
  if (s == "auto") return SePath::automatic;
  if (s == "closed_form") return SePath::closed_form;
  if (s == "monte_carlo") return SePath::monte_carlo;
  throw ConfigError("unknown se_path '" + std::string(s) +
                    "' (expected auto, closed_form or monte_carlo)");
}

bool ExperimentSpec::uses_monte_carlo(Combiner c) const {
  return se_path == SePath::monte_carlo || (se_path == SePath::automatic && c == Combiner::rzf);
}

std::vector<double> ExperimentSpec::sweep_points() const {
  switch (sweep.parameter) {
    case SweepParameter::none: return {0.0};
    case SweepParameter::iteration: return iteration_points(*this);
    default: return sweep.values;
  }
}

NetworkConfig ExperimentSpec::network_at(double v) const {
  NetworkConfig net = network;
  switch (sweep.parameter) {
    case SweepParameter::corr_magnitude: net.corr_magnitude = v; break;
    case SweepParameter::antennas: net.M = static_cast<std::size_t>(v); break;
    case SweepParameter::users:
      net.K = static_cast<std::size_t>(v);
      net.tau_p = net.K;
      break;
    default: break;
  }
  return net;
}

void ExperimentSpec::validate() const {
  require(n_drops >= 1, "n_drops must be >= 1");
  require(!estimators.empty(), "at least one estimator expected");
  require(!combiners.empty(), "at least one combiner expected");
  require(!modes.empty(), "at least one mode expected");
  require(epsilon >= 0, "epsilon must be >= 0");
  require(max_iter >= 1, "max_iter must be >= 1");
  for (Combiner c : combiners) {
    if (c == Combiner::rzf)
      require(se_path != SePath::closed_form, "the closed-form SE path requires MRC");
    if (uses_monte_carlo(c)) {
      require(n_small_scale >= 100, "n_small_scale must be >= 100 on the Monte Carlo path");
      for (Mode m : modes)
        require(m == Mode::i || m == Mode::iii,
                "mode " + to_string(m) + " needs the closed-form path (MRC); only modes i and "
                "iii run on Monte Carlo expectations");
    }
  }

  const auto& values = sweep.values;
  switch (sweep.parameter) {
    case SweepParameter::none: break;
    case SweepParameter::iteration:
      for (double v : values)
        require(is_integer(v) && v >= 0 && v <= static_cast<double>(max_iter),
                "iteration sweep values must be integers in [0, max_iter]");
      break;
    case SweepParameter::corr_magnitude:
      require(!values.empty(), "sweep values expected");
      for (double v : values) require(v >= 0 && v < 1, "corr_magnitude values must lie in [0, 1)");
      break;
    case SweepParameter::antennas:
    case SweepParameter::users:
      require(!values.empty(), "sweep values expected");
      for (double v : values) require(is_integer(v) && v >= 1, "M and K sweep values must be positive integers");
      break;
  }
  for (double v : sweep_points()) network_at(v).validate();
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const bool iteration_sweep = spec.sweep.parameter == SweepParameter::iteration;
  const std::vector<double> points = spec.sweep_points();
  // Work units: (point, drop), or one per drop for an iteration sweep.
  const std::size_t n_points = iteration_sweep ? 1 : points.size();
  const std::size_t units = n_points * spec.n_drops;
  const std::size_t threads = spec.threads == 0 ? default_threads() : spec.threads;
  const std::size_t mc_threads = std::max<std::size_t>(1, threads / units);

  std::vector<std::vector<std::vector<ResultRow>>> blocks(units);
  parallel_for(units, threads, [&](std::size_t u) {
    const std::size_t point = u / spec.n_drops;
    const std::size_t drop = spec.first_drop + u % spec.n_drops;
    if (iteration_sweep)
      blocks[u] = run_unit(spec, spec.network, points, drop, mc_threads);
    else
      blocks[u] = run_unit(spec, spec.network_at(points[point]), {points[point]}, drop, mc_threads);
  });

  ExperimentResult result{spec, {}};
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t t = 0; t < spec.n_drops; ++t) {
      auto& rows = iteration_sweep ? blocks[t][p] : blocks[p * spec.n_drops + t][0];
      std::move(rows.begin(), rows.end(), std::back_inserter(result.rows));
    }
  }
  return result;
}

std::vector<ResultRow> run_drop(const ExperimentSpec& spec, double sweep_value, std::size_t drop) {
  spec.validate();
  auto blocks = run_unit(spec, spec.network_at(sweep_value), {sweep_value}, drop,
                         spec.threads == 0 ? default_threads() : spec.threads);
  return std::move(blocks.front());
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<double, Mode, Estimator, Combiner>;
  std::vector<Key> order;
  std::map<Key, std::pair<double, std::size_t>> acc;
  std::map<Key, std::vector<std::size_t>> drops;
  for (const auto& r : rows) {
    const Key key{r.sweep_value, r.mode, r.estimator, r.combiner};
    auto [it, inserted] = acc.try_emplace(key, 0.0, 0);
    if (inserted) order.push_back(key);
    it->second.first += r.sum_se;
    ++it->second.second;
    auto& seen = drops[key];
    if (std::find(seen.begin(), seen.end(), r.drop) == seen.end()) seen.push_back(r.drop);
  }
  std::vector<SummaryRow> out;
  out.reserve(order.size());
  for (const auto& key : order) {
    const auto& [sum, n] = acc.at(key);
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key),
                   sum / static_cast<double>(n), drops.at(key).size()});
  }
  return out;
}

double mean_sum_se(const std::vector<ResultRow>& rows, double sweep_value, Mode mode,
                   Estimator estimator, Combiner combiner) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.sweep_value == sweep_value && r.mode == mode && r.estimator == estimator &&
        r.combiner == combiner) {
      sum += r.sum_se;
      ++n;
    }
  }
  if (n == 0) throw ArgumentError("mean_sum_se: no matching rows");
  return sum / static_cast<double>(n);
}

Scale parse_scale(std::string_view s) {
  if (s == "desk") return Scale::desk;
  if (s == "paper") return Scale::paper;
  throw ConfigError("unknown scale '" + std::string(s) + "' (expected desk or paper)");
}

std::vector<std::string> preset_names() {
  return {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"};
}

ExperimentSpec preset(std::string_view name, Scale scale) {
  const bool paper = scale == Scale::paper;
  const std::vector<Mode> all_modes{Mode::i, Mode::ii, Mode::iii, Mode::iv, Mode::v, Mode::vi};
  ExperimentSpec s;
  s.name = std::string(name);
  s.network.M = paper ? 200 : 100;
  s.network.K = 5;
  s.network.tau_p = 5;
  s.network.corr_magnitude = 0.5;
  s.n_drops = paper ? 300 : 20;
  s.modes = all_modes;

  const auto one = [](Estimator e) { return std::vector<Estimator>{e}; };
  if (name == "fig3") {
    s.network.corr_magnitude = 0.8;
    s.estimators = {Estimator::mmse, Estimator::ew_mmse};
    s.modes = {Mode::ii, Mode::v};
    s.sweep.parameter = SweepParameter::iteration;
    for (int n = 0; n <= 200; n += 5) s.sweep.values.push_back(n);
  } else if (name == "fig4" || name == "fig5") {
    s.estimators = one(name == "fig4" ? Estimator::mmse : Estimator::ew_mmse);
    s.sweep = {SweepParameter::corr_magnitude, {0.0, 0.2, 0.4, 0.6, 0.8}};
  } else if (name == "fig6" || name == "fig7") {
    s.estimators = one(name == "fig6" ? Estimator::mmse : Estimator::ew_mmse);
    s.sweep.parameter = SweepParameter::antennas;
    s.sweep.values = paper ? std::vector<double>{100, 150, 200, 250, 300}
                           : std::vector<double>{50, 100, 150};
  } else if (name == "fig8" || name == "fig9") {
    s.estimators = one(name == "fig8" ? Estimator::mmse : Estimator::ew_mmse);
    s.sweep = {SweepParameter::users, {2, 4, 6, 8, 10}};
  } else if (name == "fig10") {
    s.network.M = paper ? 200 : 64;
    s.estimators = one(Estimator::mmse);
    s.combiners = {Combiner::mrc, Combiner::rzf};
    s.modes = {Mode::i, Mode::iii};
    s.se_path = SePath::monte_carlo;
    s.n_drops = paper ? 3000 : 50;
    s.n_small_scale = paper ? 1000 : 200;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig3..fig10)");
  }
  s.output_path = s.name + ".csv";
  return s;
}

}  // namespace lsfd
