#include "clonesim/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "clonesim/errors.hpp"
#include "json.hpp"

namespace clonesim {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InvalidArgument("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(where + "." + key + ": " + e.what());
  }
}

json naive_to_json(const NaiveSupplySpec& s) {
  return {{"dose", s.dose}, {"t_c", s.t_c}, {"offset", s.offset}, {"p", s.p}, {"enabled", s.enabled}};
}

NaiveSupplySpec naive_from_json(const json& j, const std::string& where) {
  check_keys(j, {"dose", "t_c", "offset", "p", "enabled"}, where);
  NaiveSupplySpec s;
  read(j, "dose", s.dose, where);
  read(j, "t_c", s.t_c, where);
  read(j, "offset", s.offset, where);
  read(j, "p", s.p, where);
  read(j, "enabled", s.enabled, where);
  return s;
}

json antigen_to_json(const AntigenSupplySpec& s) {
  return {{"dose", s.dose},   {"t_k", s.t_k},   {"onset", s.onset},
          {"alpha", s.alpha}, {"beta", s.beta}, {"gamma", s.gamma}};
}

AntigenSupplySpec antigen_from_json(const json& j, const std::string& where) {
  check_keys(j, {"dose", "t_k", "onset", "alpha", "beta", "gamma"}, where);
  AntigenSupplySpec s;
  read(j, "dose", s.dose, where);
  read(j, "t_k", s.t_k, where);
  read(j, "onset", s.onset, where);
  read(j, "alpha", s.alpha, where);
  read(j, "beta", s.beta, where);
  read(j, "gamma", s.gamma, where);
  return s;
}

json params_to_json(const ModelParams& p) {
  json j = json::object();
  for (const auto& name : param_names()) {
    if (is_integer_param(name)) {
      j[name] = static_cast<int>(get_param(p, name));
    } else {
      j[name] = get_param(p, name);
    }
  }
  return j;
}

ModelParams params_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("params must be an object");
  ModelParams p;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw InvalidArgument("params." + key + " must be a number");
    set_param(p, key, value.get<double>());
  }
  return p;
}

json scenario_to_json(const ScenarioSpec& s) {
  json cohorts = json::array();
  for (const auto& c : s.cohorts) {
    cohorts.push_back({{"label", c.label}, {"initial_naive", c.initial_naive}, {"supply", naive_to_json(c.supply)}});
  }
  return {{"cohorts", cohorts},
          {"antigen", antigen_to_json(s.antigen)},
          {"initial_antigen", s.initial_antigen},
          {"horizon", s.horizon},
          {"observation_times", s.observation_times}};
}

ScenarioSpec scenario_from_json(const json& j) {
  const std::string where = "scenario";
  check_keys(j, {"cohorts", "antigen", "initial_antigen", "horizon", "observation_times"}, where);
  ScenarioSpec s;
  if (j.contains("cohorts")) {
    if (!j["cohorts"].is_array()) throw InvalidArgument("scenario.cohorts must be an array");
    for (const auto& cj : j["cohorts"]) {
      const std::string cw = where + ".cohorts[]";
      check_keys(cj, {"label", "initial_naive", "supply"}, cw);
      CohortSpec c;
      read(cj, "label", c.label, cw);
      read(cj, "initial_naive", c.initial_naive, cw);
      if (cj.contains("supply")) c.supply = naive_from_json(cj["supply"], cw + ".supply");
      s.cohorts.push_back(std::move(c));
    }
  }
  if (j.contains("antigen")) s.antigen = antigen_from_json(j["antigen"], where + ".antigen");
  read(j, "initial_antigen", s.initial_antigen, where);
  read(j, "horizon", s.horizon, where);
  read(j, "observation_times", s.observation_times, where);
  return s;
}

}  // namespace

Preset parse_preset(std::string_view tag) {
  if (tag == "experiment1") return Preset::experiment1;
  if (tag == "experiment2") return Preset::experiment2;
  if (tag == "experiment3") return Preset::experiment3;
  if (tag == "custom") return Preset::custom;
  throw InvalidArgument("unknown preset '" + std::string(tag) + "'");
}

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::experiment1: return "experiment1";
    case Preset::experiment2: return "experiment2";
    case Preset::experiment3: return "experiment3";
    case Preset::custom: return "custom";
  }
  return "?";
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.preset == b.preset && a.group == b.group && a.n0 == b.n0 && a.antigen_dose == b.antigen_dose &&
         a.params == b.params && a.scenario == b.scenario && a.solver.step_h == b.solver.step_h &&
         a.solver.rel_tol == b.solver.rel_tol && a.solver.verify == b.solver.verify && a.output == b.output &&
         a.fit == b.fit && a.seed == b.seed;
}

RunConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"preset", "group", "n0", "antigen_dose", "params", "scenario", "solver", "output", "fit", "seed"},
             "config");
  RunConfig c;
  std::string tag;
  if (j.contains("preset")) {
    read(j, "preset", tag, "config");
    c.preset = parse_preset(tag);
  }
  if (j.contains("group")) {
    read(j, "group", tag, "config");
    c.group = parse_group(tag);
  }
  read(j, "n0", c.n0, "config");
  read(j, "antigen_dose", c.antigen_dose, "config");
  read(j, "seed", c.seed, "config");
  if (j.contains("params")) c.params = params_from_json(j["params"]);
  if (j.contains("scenario")) c.scenario = scenario_from_json(j["scenario"]);
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, {"step_h", "rel_tol", "verify"}, "solver");
    read(s, "step_h", c.solver.step_h, "solver");
    read(s, "rel_tol", c.solver.rel_tol, "solver");
    read(s, "verify", c.solver.verify, "solver");
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    check_keys(o, {"grid_h", "path"}, "output");
    read(o, "grid_h", c.output.grid_h, "output");
    read(o, "path", c.output.path, "output");
  }
  if (j.contains("fit")) {
    const auto& f = j["fit"];
    check_keys(f, {"free", "bounds", "max_iterations", "central_differences", "balance_blocks", "level", "starts"},
               "fit");
    read(f, "free", c.fit.free, "fit");
    read(f, "bounds", c.fit.bounds, "fit");
    read(f, "max_iterations", c.fit.max_iterations, "fit");
    read(f, "central_differences", c.fit.central_differences, "fit");
    read(f, "balance_blocks", c.fit.balance_blocks, "fit");
    read(f, "level", c.fit.level, "fit");
    read(f, "starts", c.fit.starts, "fit");
  }
  validate(c.params);
  if (!(c.output.grid_h > 0.0)) throw InvalidArgument("output.grid_h must be positive");
  if (c.fit.starts < 1) throw InvalidArgument("fit.starts must be >= 1");
  if (c.fit.max_iterations < 1) throw InvalidArgument("fit.max_iterations must be >= 1");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["preset"] = std::string(to_string(c.preset));
  j["group"] = std::string(to_string(c.group));
  j["n0"] = c.n0;
  j["antigen_dose"] = c.antigen_dose;
  j["params"] = params_to_json(c.params);
  j["scenario"] = scenario_to_json(c.scenario);
  j["solver"] = {{"step_h", c.solver.step_h}, {"rel_tol", c.solver.rel_tol}, {"verify", c.solver.verify}};
  j["output"] = {{"grid_h", c.output.grid_h}, {"path", c.output.path}};
  j["fit"] = {{"free", c.fit.free},
              {"bounds", c.fit.bounds},
              {"max_iterations", c.fit.max_iterations},
              {"central_differences", c.fit.central_differences},
              {"balance_blocks", c.fit.balance_blocks},
              {"level", c.fit.level},
              {"starts", c.fit.starts}};
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

ScenarioSpec resolve_scenario(const RunConfig& c) {
  ScenarioSpec spec;
  switch (c.preset) {
    case Preset::experiment1: spec = build_experiment1(c.n0, c.params); break;
    case Preset::experiment2: spec = build_experiment2(c.group, c.params); break;
    case Preset::experiment3: spec = build_experiment3(c.group, c.params); break;
    case Preset::custom:
      spec = c.scenario;
      spec.params = c.params;
      return spec;
  }
  spec.antigen.dose = c.antigen_dose;
  return spec;
}

}  // namespace clonesim
