// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace lsfd {

/// `full` runs criteria 1-10 at their stated sample sizes. `quick` skips the
/// two drop-averaged reproduction checks (6, 7) and shrinks the Monte Carlo
/// sizes of the rest.
enum class VerifyLevel { quick, full };
VerifyLevel parse_verify_level(std::string_view s);

struct AcceptanceOptions {
  VerifyLevel level = VerifyLevel::full;
  std::uint64_t seed = 0;
  /// 0 picks the hardware concurrency.
  std::size_t threads = 0;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  /// Measured values next to their thresholds, one clause per check.
  std::string detail;
  double seconds = 0.0;
};

std::vector<int> criteria_for(VerifyLevel level);
CriterionResult run_criterion(int id, const AcceptanceOptions& opts);

/// Runs criteria_for(opts.level) in order; `on_result` sees each result as
/// soon as it is available.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opts,
    const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS  criterion 1 (oracle equivalence): ... [12.3 s]"
std::string format_result(const CriterionResult& r);

}  // namespace lsfd
