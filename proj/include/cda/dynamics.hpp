#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "cda/eos.hpp"
#include "cda/field.hpp"
#include "cda/sampler.hpp"

namespace cda {

struct Viscosity {
  double mu = 0.05;
  double lambda_bulk = 0.0;

  static Viscosity make(double mu, double lambda_bulk);
  /// Coefficient of u_xx in the 1D reduction of div S.
  double nu_eff() const noexcept { return 4.0 * mu / 3.0 + lambda_bulk; }
};

void validate(const Viscosity& visc);

/// Relaxation gains and the assimilation window [0, window_end).
struct NudgingConfig {
  double lambda_rho = 0.0;
  double lambda_u = 0.0;
  double window_end = 1.0;

  bool gain_ordering_holds() const noexcept { return lambda_u >= 2.0 * lambda_rho; }
  bool active_at(double t) const noexcept { return t >= 0.0 && t < window_end; }
};

struct Timeline {
  double t_minus = -0.5;
  double t_assim_end = 1.0;
  double t_plus = 2.0;
};

void validate(const Timeline& tl);

/// Body acceleration g(t, x) and a recorded bound on |g|.
struct Forcing {
  std::function<double(double, double)> g;
  double sup_bound = 0.0;

  static Forcing none();
  /// amplitude * sin(2 pi x / length) * cos(t)
  static Forcing sine(double amplitude, double length);
};

/// Extra additive source (s_rho, s_mom) at (t, x); used for manufactured solutions.
using SourceFn = std::function<void(double t, double x, double& s_rho, double& s_mom)>;

struct Model {
  Grid1D grid;
  EquationOfState eos;
  Viscosity visc;
  Forcing forcing = Forcing::none();
  double rho_floor = 1e-8;
  SourceFn source{};
};

struct CellTendency {
  std::vector<double> d_rho;
  std::vector<double> d_mom;
};

/// Semi-discrete right-hand side without nudging. Throws VacuumError when any
/// density is at or below the floor.
CellTendency rhs(const FluidState& state, const Model& model, double t);

struct NudgingSources {
  std::vector<double> s_rho;
  std::vector<double> s_mom;
};

/// -Lambda_rho (rho - I[r]) and -Lambda_u (1 + rho)(u - I[U]) inside the
/// window, identically zero outside.
NudgingSources nudging_sources(const FluidState& state, const Grid1D& grid,
                               const MeasurementSet& ms, const NudgingConfig& cfg, double t);

struct Nudging {
  const MeasurementSet* measurements = nullptr;
  NudgingConfig cfg;
};

/// Exact backward-Euler relaxation of the nudging terms over dt, applied in
/// place: density first (momentum held), then velocity at the new density.
void apply_nudging_relaxation(FluidState& state, std::span<const double> target_r,
                              std::span<const double> target_u, const NudgingConfig& cfg,
                              double dt);

double stable_dt(const FluidState& state, const Model& model, double safety);

/// One SSP-RK2 step of the transport/pressure/viscous/forcing operator,
/// followed by the nudging relaxation when the step lies in the window.
/// Throws VacuumError or BlowUpError.
FluidState step(const FluidState& state, double dt, const Model& model,
                const std::optional<Nudging>& nudging = std::nullopt);

struct StepStats {
  std::size_t steps = 0;
  double min_dt = 0.0;
  double max_dt = 0.0;
  double wall_seconds = 0.0;
};

struct IntegrateOptions {
  double safety = 0.4;
  double fixed_dt = 0.0;  // > 0 overrides the CFL rule (still capped at stop times)
  std::size_t max_steps = 50'000'000;
  double snapshot_interval = 0.0;  // 0: record every accepted step
  std::vector<double> stop_times;
  std::optional<Nudging> nudging;
  std::function<void(const FluidState& before, const FluidState& after, double dt)> on_step;
};

struct IntegrationResult {
  std::vector<FluidState> snapshots;  // initial, every snapshot time, final
  StepStats stats;
};

/// Integrates from initial.time to t_end. Steps land exactly on t_end, on
/// every stop time, on the window boundaries and slab breakpoints when
/// nudging, and on every snapshot time.
IntegrationResult integrate(const FluidState& initial, double t_end, const Model& model,
                            const IntegrateOptions& options = {});

/// Uniform density equal to the spatial mean of the first snapshot, zero
/// momentum, time 0.
FluidState make_synchronized_initial(const ObservedTrajectory& traj);

}  // namespace cda
