// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lsfd/scenario.hpp"
#include "lsfd/types.hpp"

namespace lsfd {

/// Benchmark pipelines.
///
///   i    single-layer, fixed data power
///   ii   single-layer, WMMSE power control
///   iii  two-layer, fixed power, optimal LSFD
///   iv   two-layer, fixed power, LSFD from correlation diagonals only
///   v    two-layer, joint power and LSFD optimization
///   vi   as v with the diagonal-only LSFD block
enum class Mode { i = 1, ii, iii, iv, v, vi };

std::string to_string(Mode m);
/// Accepts "v", "(v)", "V" or "5".
Mode parse_mode(std::string_view s);
bool is_optimized(Mode m);

enum class SweepParameter { none, corr_magnitude, antennas, users, iteration };
std::string to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(std::string_view s);

/// Where SE values come from. `automatic` uses the closed form for MRC and
/// Monte Carlo expectations for RZF.
enum class SePath { automatic, closed_form, monte_carlo };
std::string to_string(SePath p);
SePath parse_se_path(std::string_view s);

enum class OutputFormat { csv, json };

struct Sweep {
  SweepParameter parameter = SweepParameter::none;
  /// Ignored for `none`. For `iteration`, empty means every iteration.
  std::vector<double> values;
};

struct ExperimentSpec {
  std::string name;
  NetworkConfig network;
  std::vector<Estimator> estimators{Estimator::mmse};
  std::vector<Combiner> combiners{Combiner::mrc};
  std::vector<Mode> modes{Mode::v};
  Sweep sweep;
  std::size_t n_drops = 1;
  /// Absolute index of the first drop; drop t always sees the same seeds.
  std::size_t first_drop = 0;
  /// Channel realizations per drop on the Monte Carlo path.
  std::size_t n_small_scale = 1000;
  /// 0 picks the hardware concurrency. Never affects results.
  std::size_t threads = 0;
  double epsilon = 1e-3;
  std::size_t max_iter = 500;
  SePath se_path = SePath::automatic;
  /// Record wall-clock times; off keeps outputs byte-reproducible.
  bool timing = false;
  std::string output_path;
  OutputFormat format = OutputFormat::csv;

  /// Throws ConfigError.
  void validate() const;
  /// Values of the swept parameter; {0} when nothing is swept.
  std::vector<double> sweep_points() const;
  /// Network at one sweep point. A user-count sweep also sets tau_p = K.
  NetworkConfig network_at(double sweep_value) const;
  bool uses_monte_carlo(Combiner c) const;
};

struct ResultRow {
  double sweep_value = 0.0;
  Mode mode = Mode::i;
  Estimator estimator = Estimator::mmse;
  Combiner combiner = Combiner::mrc;
  std::size_t drop = 0;
  std::size_t cell = 0;
  /// Sum SE of this cell in bit/s/Hz.
  double sum_se = 0.0;
  std::size_t iterations = 0;
  double wall_time_s = 0.0;
  std::vector<double> per_user_se;

  bool operator==(const ResultRow&) const = default;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<ResultRow> rows;
};

/// Rows ordered by sweep point, then drop, estimator, combiner, mode, cell.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Rows of a single drop at one sweep point, identical to the matching
/// rows of run_experiment.
std::vector<ResultRow> run_drop(const ExperimentSpec& spec, double sweep_value, std::size_t drop);

/// Sum SE per cell averaged over cells and drops.
struct SummaryRow {
  double sweep_value = 0.0;
  Mode mode = Mode::i;
  Estimator estimator = Estimator::mmse;
  Combiner combiner = Combiner::mrc;
  double mean_sum_se = 0.0;
  std::size_t drops = 0;
};

/// One row per (sweep value, mode, estimator, combiner) in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

/// Mean over matching rows; throws ArgumentError if none match.
double mean_sum_se(const std::vector<ResultRow>& rows, double sweep_value, Mode mode,
                   Estimator estimator, Combiner combiner);

inline double relative_gain(double value, double baseline) { return value / baseline - 1.0; }

enum class Scale { desk, paper };
Scale parse_scale(std::string_view s);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ExperimentSpec preset(std::string_view name, Scale scale);

// Serialization. JSON documents use the same keys as the spec file.

ExperimentSpec parse_spec(std::string_view json_text);
std::string spec_to_json(const ExperimentSpec& spec);

/// Header plus one line per row; numbers printed with 12 significant digits.
std::string to_csv(const std::vector<ResultRow>& rows);
/// {"spec": ..., "rows": [...]}; `threads` is omitted.
std::string to_json(const ExperimentResult& result);
ExperimentResult result_from_json(std::string_view json_text);

/// Writes to `path` in `format`. Throws IoError.
void write_result(const ExperimentResult& result, const std::string& path, OutputFormat format);

}  // namespace lsfd
