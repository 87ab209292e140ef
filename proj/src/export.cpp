// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lsfd/experiment.hpp"

namespace lsfd {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": object expected");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec: bad value for '") + key + "': " + e.what());
  }
}

/// A string, an array of strings, or (for modes) integers.
template <typename T, typename Parse>
void read_list(const json& j, const char* key, std::vector<T>& out, Parse parse) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  const auto one = [&](const json& item) -> T {
    if (item.is_string()) return parse(item.get<std::string>());
    if (item.is_number_integer()) return parse(std::to_string(item.get<long long>()));
    throw ConfigError(std::string("spec: bad entry in '") + key + "'");
  };
  out.clear();
  if (v.is_array()) {
    for (const auto& item : v) out.push_back(one(item));
  } else {
    out.push_back(one(v));
  }
}

NetworkConfig network_from_json(const json& j) {
  reject_unknown(j,
                 {"L", "K", "M", "tau_p", "tau_c", "bandwidth_hz", "noise_power_dbm",
                  "noise_figure_db", "pilot_power_w", "p_max_w", "corr_magnitude", "cell_edge_m",
                  "min_distance_m", "shadow_std_db", "seed"},
                 "spec.network");
  NetworkConfig n;
  read(j, "L", n.L);
  read(j, "K", n.K);
  read(j, "M", n.M);
  n.tau_p = n.K;
  read(j, "tau_p", n.tau_p);
  read(j, "tau_c", n.tau_c);
  read(j, "bandwidth_hz", n.bandwidth_hz);
  read(j, "noise_power_dbm", n.noise_power_dbm);
  read(j, "noise_figure_db", n.noise_figure_db);
  read(j, "pilot_power_w", n.pilot_power_w);
  read(j, "p_max_w", n.p_max_w);
  read(j, "corr_magnitude", n.corr_magnitude);
  read(j, "cell_edge_m", n.cell_edge_m);
  read(j, "min_distance_m", n.min_distance_m);
  read(j, "shadow_std_db", n.shadow_std_db);
  read(j, "seed", n.seed);
  return n;
}

json network_to_json(const NetworkConfig& n) {
  return {{"L", n.L},
          {"K", n.K},
          {"M", n.M},
          {"tau_p", n.tau_p},
          {"tau_c", n.tau_c},
          {"bandwidth_hz", n.bandwidth_hz},
          {"noise_power_dbm", n.noise_power_dbm},
          {"noise_figure_db", n.noise_figure_db},
          {"pilot_power_w", n.pilot_power_w},
          {"p_max_w", n.p_max_w},
          {"corr_magnitude", n.corr_magnitude},
          {"cell_edge_m", n.cell_edge_m},
          {"min_distance_m", n.min_distance_m},
          {"shadow_std_db", n.shadow_std_db},
          {"seed", n.seed}};
}

ExperimentSpec spec_from_json(const json& j) {
  reject_unknown(j,
                 {"name", "network", "estimator", "combiner", "mode", "sweep", "n_drops",
                  "first_drop", "n_small_scale", "threads", "epsilon", "max_iter", "se_path",
                  "timing", "output_path", "format"},
                 "spec");
  ExperimentSpec s;
  read(j, "name", s.name);
  if (j.contains("network")) s.network = network_from_json(j.at("network"));
  read_list(j, "estimator", s.estimators, parse_estimator);
  read_list(j, "combiner", s.combiners, parse_combiner);
  read_list(j, "mode", s.modes, [](const std::string& m) { return parse_mode(m); });
  if (j.contains("sweep")) {
    const json& sw = j.at("sweep");
    reject_unknown(sw, {"parameter", "values"}, "spec.sweep");
    std::string parameter = "none";
    read(sw, "parameter", parameter);
    s.sweep.parameter = parse_sweep_parameter(parameter);
    read(sw, "values", s.sweep.values);
  }
  read(j, "n_drops", s.n_drops);
  read(j, "first_drop", s.first_drop);
  read(j, "n_small_scale", s.n_small_scale);
  read(j, "threads", s.threads);
  read(j, "epsilon", s.epsilon);
  read(j, "max_iter", s.max_iter);
  if (j.contains("se_path")) {
    std::string p;
    read(j, "se_path", p);
    s.se_path = parse_se_path(p);
  }
  read(j, "timing", s.timing);
  read(j, "output_path", s.output_path);
  if (j.contains("format")) {
    std::string f;
    read(j, "format", f);
    if (f == "csv") s.format = OutputFormat::csv;
    else if (f == "json") s.format = OutputFormat::json;
    else throw ConfigError("spec: unknown format '" + f + "' (expected csv or json)");
  }
  return s;
}

json spec_json(const ExperimentSpec& s, bool with_threads) {
  json estimators = json::array(), combiners = json::array(), modes = json::array();
  for (auto e : s.estimators) estimators.push_back(to_string(e));
  for (auto c : s.combiners) combiners.push_back(to_string(c));
  for (auto m : s.modes) modes.push_back(to_string(m));
  json j = {{"name", s.name},
            {"network", network_to_json(s.network)},
            {"estimator", estimators},
            {"combiner", combiners},
            {"mode", modes},
            {"sweep", {{"parameter", to_string(s.sweep.parameter)}, {"values", s.sweep.values}}},
            {"n_drops", s.n_drops},
            {"first_drop", s.first_drop},
            {"n_small_scale", s.n_small_scale},
            {"epsilon", s.epsilon},
            {"max_iter", s.max_iter},
            {"se_path", to_string(s.se_path)},
            {"timing", s.timing},
            {"output_path", s.output_path},
            {"format", s.format == OutputFormat::csv ? "csv" : "json"}};
  if (with_threads) j["threads"] = s.threads;
  return j;
}

json row_to_json(const ResultRow& r) {
  return {{"sweep_value", r.sweep_value},     {"mode", to_string(r.mode)},
          {"estimator", to_string(r.estimator)}, {"combiner", to_string(r.combiner)},
          {"drop", r.drop},                   {"cell", r.cell},
          {"sum_se", r.sum_se},               {"iterations", r.iterations},
          {"wall_time_s", r.wall_time_s},     {"per_user_se", r.per_user_se}};
}

ResultRow row_from_json(const json& j) {
  ResultRow r;
  r.sweep_value = j.at("sweep_value").get<double>();
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.estimator = parse_estimator(j.at("estimator").get<std::string>());
  r.combiner = parse_combiner(j.at("combiner").get<std::string>());
  r.drop = j.at("drop").get<std::size_t>();
  r.cell = j.at("cell").get<std::size_t>();
  r.sum_se = j.at("sum_se").get<double>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.per_user_se = j.at("per_user_se").get<std::vector<double>>();
  return r;
}

json parse_text(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

ExperimentSpec parse_spec(std::string_view json_text) {
  return spec_from_json(parse_text(json_text, "spec"));
}

std::string spec_to_json(const ExperimentSpec& spec) { return spec_json(spec, true).dump(2); }

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "sweep_value,mode,estimator,combiner,drop,cell,sum_se,iterations,wall_time_s\n";
  for (const auto& r : rows) {
    out += number(r.sweep_value) + ',' + to_string(r.mode) + ',' + to_string(r.estimator) + ',' +
           to_string(r.combiner) + ',' + std::to_string(r.drop) + ',' + std::to_string(r.cell) +
           ',' + number(r.sum_se) + ',' + std::to_string(r.iterations) + ',' +
           number(r.wall_time_s) + '\n';
  }
  return out;
}

std::string to_json(const ExperimentResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) rows.push_back(row_to_json(r));
  return json{{"spec", spec_json(result.spec, false)}, {"rows", std::move(rows)}}.dump(2) + "\n";
}

ExperimentResult result_from_json(std::string_view json_text) {
  const json j = parse_text(json_text, "result");
  ExperimentResult out;
  try {
    out.spec = spec_from_json(j.at("spec"));
    for (const auto& r : j.at("rows")) out.rows.push_back(row_from_json(r));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("result: ") + e.what());
  }
  return out;
}

void write_result(const ExperimentResult& result, const std::string& path, OutputFormat format) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << (format == OutputFormat::csv ? to_csv(result.rows) : to_json(result));
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace lsfd
