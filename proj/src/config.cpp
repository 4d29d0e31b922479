#include "cda/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cda/errors.hpp"

namespace cda {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& section, std::set<std::string> allowed) {
  if (!obj.is_object()) throw ConfigError("config: '" + section + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("config: unknown key '" + (section.empty() ? key : section + "." + key) +
                        "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  const std::string where = section + "." + key;
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("config: '" + where + "' must be a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError("config: '" + where + "' must be a number");
  } else {
    if (!v.is_number_unsigned()) {
      throw ConfigError("config: '" + where + "' must be a non-negative integer");
    }
  }
  out = v.get<T>();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.grid.n_cells >= Grid1D::kMinCells, "grid.n_cells must be >= 8");
  require(c.grid.length > 0.0 && std::isfinite(c.grid.length), "grid.length must be positive");
  try {
    validate(eos_of(c));
    validate(viscosity_of(c));
    validate(timeline_of(c));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  require(c.forcing.kind == "sine" || c.forcing.kind == "none",
          "forcing.kind must be 'sine' or 'none'");
  require(std::isfinite(c.forcing.amplitude), "forcing.amplitude must be finite");
  require(c.initial.kind == "cosine" || c.initial.kind == "rest",
          "initial.kind must be 'cosine' or 'rest'");
  require(c.initial.mean > 0.0, "initial.mean must be positive");
  require(std::abs(c.initial.amplitude) < c.initial.mean,
          "initial.amplitude must keep the density positive");
  require(c.sampler.delta > 0.0, "sampler.delta must be positive");
  require(c.sampler.placement == "center" || c.sampler.placement == "jittered",
          "sampler.placement must be 'center' or 'jittered'");
  require(c.sampler.max_cells > 0, "sampler.max_cells must be positive");
  require(c.nudging.lambda_rho >= 0.0 && c.nudging.lambda_u >= 0.0,
          "nudging gains must be non-negative");
  require(c.solver.safety > 0.0 && c.solver.safety <= 1.0, "solver.safety must lie in (0, 1]");
  require(c.solver.rho_floor > 0.0, "solver.rho_floor must be positive");
  require(c.solver.report_interval > 0.0, "solver.report_interval must be positive");
  require(c.solver.max_steps > 0, "solver.max_steps must be positive");
  require(c.calibration.gamma_cal >= 1.0, "calibration.gamma_cal must be >= 1");
  require(c.calibration.epsilon > 0.0, "calibration.epsilon must be positive");
  require(c.calibration.sync_ratio_max > 0.0, "calibration.sync_ratio_max must be positive");
  require(c.calibration.forecast_gamma_max >= 0.0,
          "calibration.forecast_gamma_max must be non-negative");
  require(c.calibration.forecast_growth_max > 0.0,
          "calibration.forecast_growth_max must be positive");
  require(c.output.format == "csv" || c.output.format == "json",
          "output.format must be 'csv' or 'json'");
}

json to_json(const ExperimentConfig& c) {
  return json{
      {"grid", {{"n_cells", c.grid.n_cells}, {"length", c.grid.length}}},
      {"eos", {{"gamma", c.eos.gamma}, {"kappa", c.eos.kappa}, {"a", c.eos.a}}},
      {"viscosity", {{"mu", c.viscosity.mu}, {"lambda", c.viscosity.lambda}}},
      {"timeline",
       {{"t_minus", c.timeline.t_minus},
        {"t_assim_end", c.timeline.t_assim_end},
        {"t_plus", c.timeline.t_plus}}},
      {"forcing", {{"kind", c.forcing.kind}, {"amplitude", c.forcing.amplitude}}},
      {"initial",
       {{"kind", c.initial.kind}, {"mean", c.initial.mean}, {"amplitude", c.initial.amplitude}}},
      {"sampler",
       {{"delta", c.sampler.delta},
        {"placement", c.sampler.placement},
        {"seed", c.sampler.seed},
        {"max_cells", c.sampler.max_cells}}},
      {"nudging", {{"lambda_rho", c.nudging.lambda_rho}, {"lambda_u", c.nudging.lambda_u}}},
      {"solver",
       {{"safety", c.solver.safety},
        {"rho_floor", c.solver.rho_floor},
        {"report_interval", c.solver.report_interval},
        {"max_steps", c.solver.max_steps}}},
      {"calibration",
       {{"gamma_cal", c.calibration.gamma_cal},
        {"epsilon", c.calibration.epsilon},
        {"sync_ratio_max", c.calibration.sync_ratio_max},
        {"forecast_gamma_max", c.calibration.forecast_gamma_max},
        {"forecast_growth_max", c.calibration.forecast_growth_max}}},
      {"output", {{"directory", c.output.directory}, {"format", c.output.format}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, "", {"grid", "eos", "viscosity", "timeline", "forcing", "initial", "sampler",
                         "nudging", "solver", "calibration", "output"});
  auto section = [&](const char* name, std::set<std::string> keys) -> const json* {
    if (!j.contains(name)) return nullptr;
    reject_unknown(j.at(name), name, std::move(keys));
    return &j.at(name);
  };
  if (auto* s = section("grid", {"n_cells", "length"})) {
    read(*s, "n_cells", c.grid.n_cells, "grid");
    read(*s, "length", c.grid.length, "grid");
  }
  if (auto* s = section("eos", {"gamma", "kappa", "a"})) {
    read(*s, "gamma", c.eos.gamma, "eos");
    read(*s, "kappa", c.eos.kappa, "eos");
    read(*s, "a", c.eos.a, "eos");
  }
  if (auto* s = section("viscosity", {"mu", "lambda"})) {
    read(*s, "mu", c.viscosity.mu, "viscosity");
    read(*s, "lambda", c.viscosity.lambda, "viscosity");
  }
  if (auto* s = section("timeline", {"t_minus", "t_assim_end", "t_plus"})) {
    read(*s, "t_minus", c.timeline.t_minus, "timeline");
    read(*s, "t_assim_end", c.timeline.t_assim_end, "timeline");
    read(*s, "t_plus", c.timeline.t_plus, "timeline");
  }
  if (auto* s = section("forcing", {"kind", "amplitude"})) {
    read(*s, "kind", c.forcing.kind, "forcing");
    read(*s, "amplitude", c.forcing.amplitude, "forcing");
  }
  if (auto* s = section("initial", {"kind", "mean", "amplitude"})) {
    read(*s, "kind", c.initial.kind, "initial");
    read(*s, "mean", c.initial.mean, "initial");
    read(*s, "amplitude", c.initial.amplitude, "initial");
  }
  if (auto* s = section("sampler", {"delta", "placement", "seed", "max_cells"})) {
    read(*s, "delta", c.sampler.delta, "sampler");
    read(*s, "placement", c.sampler.placement, "sampler");
    read(*s, "seed", c.sampler.seed, "sampler");
    read(*s, "max_cells", c.sampler.max_cells, "sampler");
  }
  if (auto* s = section("nudging", {"lambda_rho", "lambda_u"})) {
    read(*s, "lambda_rho", c.nudging.lambda_rho, "nudging");
    read(*s, "lambda_u", c.nudging.lambda_u, "nudging");
  }
  if (auto* s = section("solver", {"safety", "rho_floor", "report_interval", "max_steps"})) {
    read(*s, "safety", c.solver.safety, "solver");
    read(*s, "rho_floor", c.solver.rho_floor, "solver");
    read(*s, "report_interval", c.solver.report_interval, "solver");
    read(*s, "max_steps", c.solver.max_steps, "solver");
  }
  if (auto* s = section("calibration", {"gamma_cal", "epsilon", "sync_ratio_max",
                                        "forecast_gamma_max", "forecast_growth_max"})) {
    read(*s, "gamma_cal", c.calibration.gamma_cal, "calibration");
    read(*s, "epsilon", c.calibration.epsilon, "calibration");
    read(*s, "sync_ratio_max", c.calibration.sync_ratio_max, "calibration");
    read(*s, "forecast_gamma_max", c.calibration.forecast_gamma_max, "calibration");
    read(*s, "forecast_growth_max", c.calibration.forecast_growth_max, "calibration");
  }
  if (auto* s = section("output", {"directory", "format"})) {
    read(*s, "directory", c.output.directory, "output");
    read(*s, "format", c.output.format, "output");
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  os << to_json(cfg).dump(2) << '\n';
}

json observed_key(const ExperimentConfig& c) {
  const json full = to_json(c);
  json key;
  for (const char* s : {"grid", "eos", "viscosity", "timeline", "forcing", "initial"}) {
    key[s] = full.at(s);
  }
  key["solver"] = {{"safety", c.solver.safety},
                   {"rho_floor", c.solver.rho_floor},
                   {"report_interval", c.solver.report_interval}};
  return key;
}

Placement placement_of(const ExperimentConfig& c) {
  return c.sampler.placement == "jittered" ? Placement::Jittered : Placement::Center;
}

EquationOfState eos_of(const ExperimentConfig& c) {
  return {c.eos.gamma, c.eos.kappa, c.eos.a};
}

Viscosity viscosity_of(const ExperimentConfig& c) {
  return {c.viscosity.mu, c.viscosity.lambda};
}

Timeline timeline_of(const ExperimentConfig& c) {
  return {c.timeline.t_minus, c.timeline.t_assim_end, c.timeline.t_plus};
}

NudgingConfig nudging_of(const ExperimentConfig& c) {
  return {c.nudging.lambda_rho, c.nudging.lambda_u, c.timeline.t_assim_end};
}

}  // namespace cda
