// SPDX-License-Identifier: Apache-2.0
// Command-line driver: experiment runs, figure presets, verification and
// operation counts.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lsfd/acceptance.hpp"
#include "lsfd/experiment.hpp"
#include "lsfd/optimizer.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kNumeric = 2, kVerification = 3 };

constexpr const char* kOutputDirEnv = "LSFD_OUTPUT_DIR";

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw lsfd::IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Relative paths land under $LSFD_OUTPUT_DIR when it is set.
fs::path resolve_output(const lsfd::ExperimentSpec& spec) {
  fs::path p = spec.output_path;
  if (p.empty())
    p = (spec.name.empty() ? "results" : spec.name) +
        (spec.format == lsfd::OutputFormat::csv ? ".csv" : ".json");
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir && p.is_relative()) p = fs::path(dir) / p;
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw lsfd::IoError("cannot create '" + p.parent_path().string() + "': " + ec.message());
  }
  return p;
}

void print_summary(const lsfd::ExperimentResult& result) {
  const auto sweep = lsfd::to_string(result.spec.sweep.parameter);
  std::printf("%-14s %-4s %-8s %-4s %14s %6s\n", sweep.c_str(), "mode", "est", "comb",
              "sum SE/cell", "drops");
  for (const auto& s : lsfd::summarize(result.rows)) {
    std::printf("%-14.6g %-4s %-8s %-4s %14.4f %6zu\n", s.sweep_value, lsfd::to_string(s.mode).c_str(),
                lsfd::to_string(s.estimator).c_str(), lsfd::to_string(s.combiner).c_str(),
                s.mean_sum_se, s.drops);
  }
}

int execute(lsfd::ExperimentSpec spec, const std::string& format, std::size_t threads,
            const std::string& output) {
  if (!format.empty()) {
    if (format == "csv") spec.format = lsfd::OutputFormat::csv;
    else if (format == "json") spec.format = lsfd::OutputFormat::json;
    else throw lsfd::ConfigError("unknown format '" + format + "' (expected csv or json)");
  }
  if (threads > 0) spec.threads = threads;
  if (!output.empty()) spec.output_path = output;
  if (spec.format == lsfd::OutputFormat::json && fs::path(spec.output_path).extension() == ".csv")
    spec.output_path = fs::path(spec.output_path).replace_extension(".json").string();
  const auto result = lsfd::run_experiment(spec);
  const fs::path path = resolve_output(spec);
  lsfd::write_result(result, path.string(), spec.format);
  print_summary(result);
  std::printf("wrote %zu rows to %s\n", result.rows.size(), path.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-layer large-scale fading decoding for multi-cell Massive MIMO"};
  app.require_subcommand(1);

  std::string spec_path, format, output;
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON spec");
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("--format", format, "Override output format (csv|json)");
  run->add_option("--output", output, "Override output path");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string preset_name, scale = "desk";
  std::size_t drops = 0;
  std::uint64_t seed = 0;
  auto* preset = app.add_subcommand("preset", "Run one of the built-in figure presets");
  preset->add_option("name", preset_name, "fig3 .. fig10")->required();
  preset->add_option("--scale", scale, "desk (small, fast) or paper (full size)");
  preset->add_option("--drops", drops, "Override the number of drops");
  auto* preset_seed = preset->add_option("--seed", seed, "Master seed");
  preset->add_option("--format", format, "csv|json");
  preset->add_option("--output", output, "Output path");
  preset->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string level;
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("level", level, "quick|full")->required();
  verify->add_option("--seed", seed, "Master seed");
  verify->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::uint64_t L = 4, K = 5, N = 1;
  auto* flops = app.add_subcommand("flops", "Arithmetic operations of the joint optimizer");
  flops->add_option("--L", L, "Cells")->check(CLI::PositiveNumber);
  flops->add_option("--K", K, "Users per cell")->check(CLI::PositiveNumber);
  flops->add_option("--N", N, "Iterations")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return execute(lsfd::parse_spec(read_file(spec_path)), format, threads, output);

    if (*preset) {
      auto spec = lsfd::preset(preset_name, lsfd::parse_scale(scale));
      if (drops > 0) spec.n_drops = drops;
      if (*preset_seed) spec.network.seed = seed;
      return execute(std::move(spec), format, threads, output);
    }

    if (*verify) {
      lsfd::AcceptanceOptions opts;
      opts.level = lsfd::parse_verify_level(level);
      opts.seed = seed;
      opts.threads = threads;
      bool ok = true;
      lsfd::run_acceptance(opts, [&](const lsfd::CriterionResult& r) {
        ok = ok && r.passed;
        std::cout << lsfd::format_result(r) << std::endl;
      });
      std::cout << (ok ? "all checks passed" : "verification FAILED") << std::endl;
      return ok ? kOk : kVerification;
    }

    if (*flops) {
      std::cout << lsfd::arithmetic_op_count(L, K, N) << "\n";
      return kOk;
    }
  } catch (const lsfd::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
