#include "cda/dynamics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "cda/errors.hpp"
#include "cda/kernels.hpp"

namespace cda {

Viscosity Viscosity::make(double mu, double lambda_bulk) {
  Viscosity v{mu, lambda_bulk};
  validate(v);
  return v;
}

void validate(const Viscosity& visc) {
  if (!(visc.mu > 0.0)) throw DomainError("viscosity: mu must be positive");
  if (!(visc.mu + visc.lambda_bulk >= 0.0)) throw DomainError("viscosity: need mu + lambda >= 0");
  if (!(visc.nu_eff() > 0.0)) throw DomainError("viscosity: effective coefficient must be positive");
}

void validate(const Timeline& tl) {
  if (!(tl.t_minus < 0.0 && 0.0 < tl.t_assim_end && tl.t_assim_end < tl.t_plus)) {
    throw DomainError("timeline: need T- < 0 < T < T+");
  }
}

Forcing Forcing::none() {
  return {[](double, double) { return 0.0; }, 0.0};
}

Forcing Forcing::sine(double amplitude, double length) {
  const double k = 2.0 * std::numbers::pi / length;
  return {[amplitude, k](double t, double x) { return amplitude * std::sin(k * x) * std::cos(t); },
          std::abs(amplitude)};
}

namespace {

kernels::StencilParams stencil_params(const Model& model) {
  return {model.grid.dx(), model.eos.gamma, model.eos.kappa, model.visc.nu_eff()};
}

void check_vacuum(const FluidState& state, double floor, double t) {
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (!(state.rho[j] > floor)) throw VacuumError(j, state.rho[j], t);
  }
}

void check_finite(const FluidState& state, double t) {
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (!std::isfinite(state.rho[j]) || !std::isfinite(state.mom[j])) throw BlowUpError(t);
  }
}

void rhs_into(const FluidState& state, const Model& model, double t, std::vector<double>& g,
              std::vector<double>& d_rho, std::vector<double>& d_mom) {
  const std::size_t n = model.grid.n_cells();
  if (state.size() != n || state.mom.size() != n) throw ShapeError("rhs: state/grid mismatch");
  check_vacuum(state, model.rho_floor, t);
  g.resize(n);
  d_rho.resize(n);
  d_mom.resize(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = model.forcing.g(t, model.grid.center(j));
  kernels::tendency_parallel(stencil_params(model), {state.rho, state.mom, g}, {d_rho, d_mom});
  if (model.source) {
    for (std::size_t j = 0; j < n; ++j) {
      double sr = 0.0, sm = 0.0;
      model.source(t, model.grid.center(j), sr, sm);
      d_rho[j] += sr;
      d_mom[j] += sm;
    }
  }
}

}  // namespace

CellTendency rhs(const FluidState& state, const Model& model, double t) {
  CellTendency out;
  std::vector<double> g;
  rhs_into(state, model, t, g, out.d_rho, out.d_mom);
  return out;
}

NudgingSources nudging_sources(const FluidState& state, const Grid1D& grid,
                               const MeasurementSet& ms, const NudgingConfig& cfg, double t) {
  const std::size_t n = grid.n_cells();
  NudgingSources out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (!cfg.active_at(t)) return out;
  std::vector<double> ir(n), iu(n);
  interpolant_on_grid(ms, t, grid, ir, iu);
  const auto u = velocity(state);
  for (std::size_t j = 0; j < n; ++j) {
    out.s_rho[j] = -cfg.lambda_rho * (state.rho[j] - ir[j]);
    out.s_mom[j] = -cfg.lambda_u * (1.0 + state.rho[j]) * (u[j] - iu[j]);
  }
  return out;
}

void apply_nudging_relaxation(FluidState& state, std::span<const double> target_r,
                              std::span<const double> target_u, const NudgingConfig& cfg,
                              double dt) {
  const double a = dt * cfg.lambda_rho;
  const double wr = a / (1.0 + a);
  for (std::size_t j = 0; j < state.size(); ++j) {
    // written as x + (target - x) w so that x == target is reproduced exactly
    const double rho = state.rho[j] + (target_r[j] - state.rho[j]) * wr;
    const double u0 = state.mom[j] / rho;
    const double b = dt * cfg.lambda_u * (1.0 + rho) / rho;
    const double u = u0 + (target_u[j] - u0) * (b / (1.0 + b));
    state.rho[j] = rho;
    state.mom[j] = rho * u;
  }
}

double stable_dt(const FluidState& state, const Model& model, double safety) {
  return safety * kernels::stable_dt_parallel(stencil_params(model), state.rho, state.mom);
}

FluidState step(const FluidState& state, double dt, const Model& model,
                const std::optional<Nudging>& nudging) {
  const std::size_t n = state.size();
  const double t = state.time;
  std::vector<double> g, k_rho, k_mom;

  rhs_into(state, model, t, g, k_rho, k_mom);
  FluidState stage{t + dt, std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    stage.rho[j] = state.rho[j] + dt * k_rho[j];
    stage.mom[j] = state.mom[j] + dt * k_mom[j];
  }
  check_finite(stage, t + dt);

  rhs_into(stage, model, t + dt, g, k_rho, k_mom);
  FluidState next{t + dt, std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    next.rho[j] = 0.5 * state.rho[j] + 0.5 * (stage.rho[j] + dt * k_rho[j]);
    next.mom[j] = 0.5 * state.mom[j] + 0.5 * (stage.mom[j] + dt * k_mom[j]);
  }
  check_finite(next, t + dt);

  if (nudging && nudging->measurements != nullptr) {
    const double t_mid = t + 0.5 * dt;
    if (nudging->cfg.active_at(t_mid)) {
      std::vector<double> ir(n), iu(n);
      interpolant_on_grid(*nudging->measurements, t_mid, model.grid, ir, iu);
      apply_nudging_relaxation(next, ir, iu, nudging->cfg, dt);
      check_finite(next, t + dt);
    }
  }
  check_vacuum(next, model.rho_floor, t + dt);
  return next;
}

IntegrationResult integrate(const FluidState& initial, double t_end, const Model& model,
                            const IntegrateOptions& options) {
  const auto wall_start = std::chrono::steady_clock::now();
  check_state(model.grid, initial);
  const double t_start = initial.time;
  if (t_end < t_start) throw DomainError("integrate: t_end precedes the initial time");

  IntegrationResult result;
  result.snapshots.push_back(initial);
  if (t_end == t_start) return result;

  std::vector<double> stops;
  for (double s : options.stop_times) {
    if (s > t_start && s < t_end) stops.push_back(s);
  }
  if (options.nudging && options.nudging->measurements != nullptr) {
    const auto& dec = options.nudging->measurements->decomposition();
    for (double s : dec.time_breaks) {
      if (s > t_start && s < t_end) stops.push_back(s);
    }
    for (double s : {0.0, options.nudging->cfg.window_end}) {
      if (s > t_start && s < t_end) stops.push_back(s);
    }
  }
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  const bool every_step = options.snapshot_interval <= 0.0;
  std::size_t snap_index = 1;
  auto next_snapshot = [&]() {
    return every_step ? std::numeric_limits<double>::infinity()
                      : t_start + static_cast<double>(snap_index) * options.snapshot_interval;
  };

  FluidState state = initial;
  std::size_t stop_pos = 0;
  StepStats& stats = result.stats;
  stats.min_dt = std::numeric_limits<double>::infinity();

  while (state.time < t_end) {
    if (stats.steps >= options.max_steps) {
      throw Error("integrate: exceeded " + std::to_string(options.max_steps) + " steps at t=" +
                  std::to_string(state.time));
    }
    while (stop_pos < stops.size() && stops[stop_pos] <= state.time) ++stop_pos;
    double target = stops[stop_pos];
    while (next_snapshot() <= state.time + 1e-9 * options.snapshot_interval) ++snap_index;
    const double snap_t = next_snapshot();
    // snapshot times within rounding of a stop time are merged into it
    const bool merged = !every_step && std::abs(snap_t - target) <= 1e-9 * options.snapshot_interval;
    const bool hits_snapshot = merged || snap_t <= target;
    if (hits_snapshot && !merged) target = snap_t;

    double dt = options.fixed_dt > 0.0 ? options.fixed_dt : stable_dt(state, model, options.safety);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw BlowUpError(state.time);
    bool lands = false;
    // a remainder within rounding of the target is absorbed into this step
    if (state.time + dt * (1.0 + 1e-8) >= target) {
      dt = target - state.time;
      lands = true;
    }
    FluidState next = step(state, dt, model, options.nudging);
    if (lands) next.time = target;

    ++stats.steps;
    stats.min_dt = std::min(stats.min_dt, dt);
    stats.max_dt = std::max(stats.max_dt, dt);
    if (options.on_step) options.on_step(state, next, dt);
    state = std::move(next);

    const bool at_snapshot = lands && hits_snapshot;
    if (every_step || at_snapshot || state.time >= t_end) {
      if (at_snapshot) ++snap_index;
      result.snapshots.push_back(state);
    }
  }
  stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

FluidState make_synchronized_initial(const ObservedTrajectory& traj) {
  if (traj.snapshots.empty()) throw RangeError("trajectory is empty");
  const FluidState& first = traj.snapshots.front();
  double sum = 0.0;
  for (double r : first.rho) sum += r;
  const double mean = sum / static_cast<double>(first.size());
  return uniform_state(traj.grid, mean, 0.0, 0.0);
}

}  // namespace cda
