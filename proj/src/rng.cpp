// SPDX-License-Identifier: Apache-2.0
#include "lsfd/rng.hpp"

#include <algorithm>
#include <cctype>

namespace lsfd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::string to_string(Estimator e) { return e == Estimator::mmse ? "MMSE" : "EW-MMSE"; }
std::string to_string(Combiner c) { return c == Combiner::mrc ? "MRC" : "RZF"; }

Estimator parse_estimator(const std::string& s) {
  const auto u = upper(s);
  if (u == "MMSE") return Estimator::mmse;
  if (u == "EW-MMSE" || u == "EWMMSE" || u == "EW_MMSE") return Estimator::ew_mmse;
  throw ConfigError("unknown estimator '" + s + "' (expected MMSE or EW-MMSE)");
}

Combiner parse_combiner(const std::string& s) {
  const auto u = upper(s);
  if (u == "MRC") return Combiner::mrc;
  if (u == "RZF") return Combiner::rzf;
  throw ConfigError("unknown combiner '" + s + "' (expected MRC or RZF)");
}

}  // namespace lsfd
