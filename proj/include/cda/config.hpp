#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "cda/dynamics.hpp"
#include "cda/eos.hpp"
#include "cda/sampler.hpp"
#include "json.hpp"

namespace cda {

/// Everything a twin experiment needs. Stored as a JSON file; unknown keys
/// are rejected and every key has a default.
struct ExperimentConfig {
  struct GridSection {
    std::size_t n_cells = 256;
    double length = 1.0;
    bool operator==(const GridSection&) const = default;
  } grid;

  struct EosSection {
    double gamma = 1.4;
    double kappa = 1.0;
    double a = 0.4;
    bool operator==(const EosSection&) const = default;
  } eos;

  struct ViscositySection {
    double mu = 0.05;
    double lambda = 0.0;
    bool operator==(const ViscositySection&) const = default;
  } viscosity;

  struct TimelineSection {
    double t_minus = -0.5;
    double t_assim_end = 1.0;
    double t_plus = 2.0;
    bool operator==(const TimelineSection&) const = default;
  } timeline;

  struct ForcingSection {
    std::string kind = "sine";  // "sine" | "none"
    double amplitude = 0.5;
    bool operator==(const ForcingSection&) const = default;
  } forcing;

  // r(T-, x) = mean + amplitude cos(2 pi x / length), U(T-, x) = 0  ("cosine")
  // or the uniform rest state at `mean` ("rest").
  struct InitialSection {
    std::string kind = "cosine";
    double mean = 1.0;
    double amplitude = 0.3;
    bool operator==(const InitialSection&) const = default;
  } initial;

  struct SamplerSection {
    double delta = 0.004;
    std::string placement = "center";  // "center" | "jittered"
    std::uint64_t seed = 0;
    std::size_t max_cells = kDefaultMaxDecompositionCells;
    bool operator==(const SamplerSection&) const = default;
  } sampler;

  struct NudgingSection {
    double lambda_rho = 50.0;
    double lambda_u = 200.0;
    bool operator==(const NudgingSection&) const = default;
  } nudging;

  struct SolverSection {
    double safety = 0.4;
    double rho_floor = 1e-8;
    double report_interval = 1e-3;
    std::size_t max_steps = 50'000'000;
    bool operator==(const SolverSection&) const = default;
  } solver;

  // Calibrated constants and acceptance thresholds for the twin verdicts.
  struct CalibrationSection {
    double gamma_cal = 1.0;
    double epsilon = 0.1;
    double sync_ratio_max = 1e-5;
    double forecast_gamma_max = 1.0;
    double forecast_growth_max = 10.0;
    bool operator==(const CalibrationSection&) const = default;
  } calibration;

  struct OutputSection {
    std::string directory = "out";
    std::string format = "csv";  // "csv" | "json"
    bool operator==(const OutputSection&) const = default;
  } output;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError describing the first violated range.
void validate(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Strict: unknown keys and wrong types raise ConfigError. Validates the result.
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

/// Subset of the configuration that determines the observed run, as canonical JSON.
nlohmann::json observed_key(const ExperimentConfig& cfg);

Placement placement_of(const ExperimentConfig& cfg);
EquationOfState eos_of(const ExperimentConfig& cfg);
Viscosity viscosity_of(const ExperimentConfig& cfg);
Timeline timeline_of(const ExperimentConfig& cfg);
NudgingConfig nudging_of(const ExperimentConfig& cfg);

}  // namespace cda
