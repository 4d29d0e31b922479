#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cda/config.hpp"
#include "cda/diagnostics.hpp"
#include "cda/dynamics.hpp"
#include "cda/field.hpp"
#include "cda/sampler.hpp"

namespace cda {

Model make_model(const ExperimentConfig& cfg);

/// Observed state at T- from the configured initial profile.
FluidState observed_initial_state(const ExperimentConfig& cfg);

/// Report times: t_begin, t_begin + k * interval, ..., t_end (last one exact).
std::vector<double> report_times(double t_begin, double t_end, double interval);

/// Integrates T- -> T+ without nudging, storing a snapshot at every report
/// time. Verifies positivity and mass conservation; records sup bounds.
ObservedTrajectory run_observed(const ExperimentConfig& cfg, StepStats* stats = nullptr);

/// Synchronized run driven only by the measurements: nudged on [0, T],
/// free on [T, T+]. Snapshots at the report times. On a solver failure the
/// snapshots reached so far are kept and `failure` holds the message.
struct SynchronizedRun {
  std::vector<FluidState> snapshots;
  StepStats assim_stats;
  StepStats forecast_stats;
  std::string failure;
};

SynchronizedRun run_synchronized(const ExperimentConfig& cfg, const MeasurementSet& ms,
                                 const FluidState& initial);

struct ChiSample {
  double time = 0.0;
  double chi0 = 0.0;
};

struct TwinVerdicts {
  double sync_ratio = 0.0;  // RE(T) / RE(0)
  bool synchronization = false;
  double gamma_hat = 0.0;
  bool forecast_envelope = false;
  double growth = 0.0;  // RE(T+) / RE(T)
  bool forecast_growth = false;
  bool gain_conditions = false;

  bool passed() const noexcept {
    return synchronization && forecast_envelope && forecast_growth && gain_conditions;
  }
  bool operator==(const TwinVerdicts&) const = default;
};

/// Everything derived from the persisted series; recomputed by `audit`.
struct TwinAnalysis {
  bool fit_valid = false;
  DecayFit fit;
  double decay_constant = 0.0;
  GainConditionReport gains;
  ForecastEnvelope envelope;
  TwinVerdicts verdicts;
};

TwinAnalysis analyze(const ExperimentConfig& cfg, std::span<const EnergyReport> series,
                     std::span<const ChiSample> chi);

struct TwinReport {
  ExperimentConfig config;
  std::vector<EnergyReport> series;  // report times on [0, T+]
  std::vector<ChiSample> chi;        // report times on [T, T+]
  TwinAnalysis analysis;
  InterpolationError interpolation;
  SupBounds sup;
  double data_norm_w1inf = 0.0;  // discrete W^{1,inf} surrogate at T-
  std::size_t measurement_cells = 0;
  StepStats observed_stats;
  StepStats assim_stats;
  StepStats forecast_stats;
  std::string failure;  // non-empty when the synchronized run aborted

  bool passed() const noexcept { return failure.empty() && analysis.verdicts.passed(); }
};

/// Full twin experiment. A precomputed observed trajectory for the same
/// observed-relevant configuration may be supplied.
TwinReport run_twin(const ExperimentConfig& cfg,
                    std::shared_ptr<const ObservedTrajectory> observed = nullptr,
                    std::optional<MeasurementSet>* measurements_out = nullptr);

/// Content-addressed store of observed runs keyed by `observed_key`.
class ObservedCache {
 public:
  ObservedCache();
  std::shared_ptr<const ObservedTrajectory> get(const ExperimentConfig& cfg);
  std::size_t size() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

struct SweepPoint {
  double value = 0.0;
  std::optional<TwinReport> report;
  std::string error;
};

struct SweepReport {
  std::string axis;
  std::vector<SweepPoint> points;  // sorted by increasing value
  std::size_t failures = 0;
  std::size_t observed_runs = 0;
  bool floor_nonincreasing = false;  // along increasing value, 10% band
  bool rate_nondecreasing = false;   // along increasing value, 10% band
  bool interp_nonincreasing = false;  // along decreasing value
};

inline constexpr double kMonotonicityBand = 0.10;

/// Parameters tied to the swept value.
struct SweepCoupling {
  double lambda_u_ratio = 0.0;  // > 0: lambda_u = ratio * lambda_rho
  bool mesh_delta = false;      // delta = 1 / (lambda_u * gamma_cal)
};

/// Applies one sweep value; throws ConfigError for unknown axes.
ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value,
                            const SweepCoupling& coupling = {});

/// Axis is one of lambda_rho, lambda_u, delta, T, n_cells.
SweepReport run_sweep(const ExperimentConfig& base, const std::string& axis,
                      std::vector<double> values, const SweepCoupling& coupling = {});

/// Smooth manufactured pair r* = 1 + amp_r cos(pi x/L) cos t,
/// U* = amp_u sin(pi x/L) cos t with the compensating source.
struct ManufacturedCase {
  double amp_r = 0.2;
  double amp_u = 0.1;
  double t_final = 0.5;
};

struct ConvergenceReport {
  std::vector<std::size_t> n_cells;
  std::vector<double> l2_errors;
  std::vector<double> orders;
  double observed_order = 0.0;
  std::vector<double> dt_values;       // dt-only refinement of the nudged split scheme
  std::vector<double> dt_differences;  // |s(dt) - s(dt/2)|_{L2}
  double dt_order = 0.0;
  bool passed = false;
};

inline constexpr double kMinSpatialOrder = 1.8;
inline constexpr double kMaxSpatialOrder = 2.2;

ConvergenceReport validate_solver(const ExperimentConfig& cfg, const ManufacturedCase& mc = {},
                                  std::vector<std::size_t> sizes = {64, 128, 256});

/// Model with the manufactured source for `mc` on `n` cells; exact fields via `exact`.
Model manufactured_model(const ExperimentConfig& cfg, const ManufacturedCase& mc, std::size_t n);
FluidState manufactured_state(const Grid1D& grid, const ManufacturedCase& mc, double t);

// Persistence of the twin outputs. Format "csv" writes energy.csv and
// forecast_chi.csv, "json" writes series.json; report.json and
// measurements.csv are always written.
void write_energy_csv(const std::filesystem::path& path, std::span<const EnergyReport> series);
std::vector<EnergyReport> read_energy_csv(const std::filesystem::path& path);
void write_chi_csv(const std::filesystem::path& path, std::span<const ChiSample> chi);
std::vector<ChiSample> read_chi_csv(const std::filesystem::path& path);

nlohmann::json report_to_json(const TwinReport& report);
void write_twin_outputs(const std::filesystem::path& dir, const TwinReport& report,
                        const MeasurementSet* ms);
void write_sweep_outputs(const std::filesystem::path& dir, const SweepReport& sweep);
void write_convergence_outputs(const std::filesystem::path& dir, const ConvergenceReport& conv);

struct AuditResult {
  TwinVerdicts stored;
  TwinVerdicts recomputed;
  bool verdicts_match = false;
  bool numbers_match = false;  // fit, decay constant and envelope reproduce bitwise
};

/// Recomputes the verdicts from a directory written by write_twin_outputs.
AuditResult audit(const std::filesystem::path& dir);

}  // namespace cda
