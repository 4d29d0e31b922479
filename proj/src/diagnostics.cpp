#include "cda/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cda/errors.hpp"

namespace cda {

double total_energy_density(const EquationOfState& eos, double rho, double mom) {
  if (rho > 0.0) return 0.5 * mom * mom / rho + pressure_potential(eos, rho);
  if (rho == 0.0 && mom == 0.0) return 0.0;
  return kInfiniteEnergy;
}

double total_energy(const Grid1D& grid, const EquationOfState& eos, const FluidState& state) {
  double s = 0.0;
  for (std::size_t j = 0; j < state.size(); ++j) {
    s += total_energy_density(eos, state.rho[j], state.mom[j]);
  }
  return grid.dx() * s;
}

double relative_energy_density(const EquationOfState& eos, double rho, double u, double r,
                               double U) {
  const double du = u - U;
  return 0.5 * rho * du * du + potential_bregman(eos, rho, r);
}

double relative_energy(const Grid1D& grid, const EquationOfState& eos, const FluidState& state,
                       const FluidState& observed) {
  check_state(grid, state);
  check_state(grid, observed);
  double s = 0.0;
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (!(observed.rho[j] > 0.0)) {
      throw DomainError("relative_energy: observed density must be positive");
    }
    const double u = state.rho[j] > 0.0 ? state.mom[j] / state.rho[j] : 0.0;
    s += relative_energy_density(eos, state.rho[j], u, observed.rho[j],
                                 observed.mom[j] / observed.rho[j]);
  }
  return grid.dx() * s;
}

EnergyReport energy_report(const Model& model, const FluidState& state, const FluidState& observed,
                           const MeasurementSet* ms, const NudgingConfig& cfg) {
  const Grid1D& grid = model.grid;
  const auto nrm = norms(grid, state, observed);
  EnergyReport rep;
  rep.time = state.time;
  rep.total_energy = total_energy(grid, model.eos, state);
  rep.rel_energy = relative_energy(grid, model.eos, state, observed);
  rep.dissipation = model.visc.nu_eff() * nrm.h1_semi_u_diff * nrm.h1_semi_u_diff;
  rep.l2_u_diff = nrm.l2_u_diff;
  rep.mass = nrm.mass;
  if (ms != nullptr && cfg.active_at(state.time)) {
    const std::size_t n = grid.n_cells();
    std::vector<double> ir(n), iu(n);
    interpolant_on_grid(*ms, state.time, grid, ir, iu);
    double pr = 0.0, pu = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double rho = state.rho[j];
      const double u = state.mom[j] / rho;
      pr -= (potential_derivative(model.eos, rho) - 0.5 * u * u) * (rho - ir[j]);
      pu -= (1.0 + rho) * (u - iu[j]) * u;
    }
    rep.nudge_power_rho = cfg.lambda_rho * grid.dx() * pr;
    rep.nudge_power_u = cfg.lambda_u * grid.dx() * pu;
  }
  return rep;
}

BudgetTerms budget_terms(const Model& model, const FluidState& state, double t,
                         std::span<const double> target_r, std::span<const double> target_u,
                         const NudgingConfig& cfg) {
  const Grid1D& grid = model.grid;
  const double dx = grid.dx();
  const auto u = velocity(state);
  BudgetTerms b;
  b.total_energy = total_energy(grid, model.eos, state);
  b.dissipation = model.visc.nu_eff() * h1_seminorm_squared(u, dx);
  double forcing = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    forcing += state.rho[j] * model.forcing.g(t, grid.center(j)) * u[j];
  }
  b.forcing_power = dx * forcing;
  if (target_r.empty()) return b;

  const double lr = cfg.lambda_rho, lu = cfg.lambda_u;
  double sinks = 0.0, sources = 0.0, power = 0.0, slack = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double rho = state.rho[j], ir = target_r[j], iu = target_u[j];
    const double u2 = u[j] * u[j];
    const double dP = potential_derivative(model.eos, rho);
    sinks += lu * u2 + (lu - lr) * rho * u2 + 0.5 * lr * ir * u2 + 0.5 * lr * rho * u2 +
             lr * (pressure_potential(model.eos, rho) - pressure_potential(model.eos, ir));
    sources += lu * (1.0 + rho) * iu * u[j];
    power += -lr * (dP - 0.5 * u2) * (rho - ir) - lu * (1.0 + rho) * (u[j] - iu) * u[j];
    slack += fenchel_young_gap(model.eos, rho, ir);
  }
  b.sinks = dx * sinks;
  b.sources = dx * sources;
  b.nudging_power = dx * power;
  b.fy_slack = dx * slack;
  return b;
}

std::vector<BalanceResidual> energy_balance_residual(std::span<const FluidState> states,
                                                     const Model& model, const MeasurementSet* ms,
                                                     const NudgingConfig& cfg) {
  if (states.size() < 2) throw ShapeError("energy_balance_residual: need at least two states");
  const double h = states[1].time - states[0].time;
  if (!(h > 0.0)) throw ShapeError("energy_balance_residual: times must increase");
  for (std::size_t k = 1; k < states.size(); ++k) {
    const double hk = states[k].time - states[k - 1].time;
    if (std::abs(hk - h) > 1e-6 * h) {
      throw ShapeError("energy_balance_residual: reports must be uniformly spaced");
    }
  }
  const std::size_t n = model.grid.n_cells();
  std::vector<double> ir(n), iu(n);
  std::vector<BalanceResidual> out;
  out.reserve(states.size() - 1);
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    const FluidState& a = states[k];
    const FluidState& b = states[k + 1];
    const double dt = b.time - a.time;
    const double t_mid = 0.5 * (a.time + b.time);
    const bool on = ms != nullptr && a.time >= 0.0 && b.time <= cfg.window_end;
    std::span<const double> tr, tu;
    if (on) {
      interpolant_on_grid(*ms, t_mid, model.grid, ir, iu);
      tr = ir;
      tu = iu;
    }
    const auto ta = budget_terms(model, a, a.time, tr, tu, cfg);
    const auto tb = budget_terms(model, b, b.time, tr, tu, cfg);
    const double dE = (tb.total_energy - ta.total_energy) / dt;
    auto avg = [](double x, double y) { return 0.5 * (x + y); };
    BalanceResidual r;
    r.t_mid = t_mid;
    r.residual_inequality = dE + avg(ta.dissipation, tb.dissipation) + avg(ta.sinks, tb.sinks) -
                            avg(ta.forcing_power, tb.forcing_power) -
                            avg(ta.sources, tb.sources);
    r.residual_exact = dE + avg(ta.dissipation, tb.dissipation) -
                       avg(ta.forcing_power, tb.forcing_power) -
                       avg(ta.nudging_power, tb.nudging_power);
    r.fy_slack = std::min(ta.fy_slack, tb.fy_slack);
    out.push_back(r);
  }
  return out;
}

double energy_step_residual(const Model& model, const FluidState& before, const FluidState& after,
                            double dt) {
  const NudgingConfig off{};
  const auto a = budget_terms(model, before, before.time, {}, {}, off);
  const auto b = budget_terms(model, after, after.time, {}, {}, off);
  return (b.total_energy - a.total_energy) / dt + 0.5 * (a.dissipation + b.dissipation) -
         0.5 * (a.forcing_power + b.forcing_power);
}

// --- decay fit -------------------------------------------------------------

namespace {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  bool ok = false;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  const std::size_t n = x.size();
  if (n < 3) return f;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.ok = true;
  return f;
}

struct FloorTrial {
  double floor = 0.0;
  LineFit line;
  double misfit = std::numeric_limits<double>::infinity();
};

FloorTrial try_floor(std::span<const double> t, std::span<const double> re, double floor) {
  FloorTrial trial;
  trial.floor = floor;
  // only the leading transient: later excursions of a noisy floor above
  // 2 * floor would otherwise flatten the slope
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size() && re[i] >= 2.0 * floor; ++i) {
    x.push_back(t[i]);
    y.push_back(std::log(re[i] - floor));
  }
  trial.line = fit_line(x, y);
  if (!trial.line.ok) return trial;
  double misfit = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double model = floor + std::exp(trial.line.intercept + trial.line.slope * t[i]);
    const double e = std::log(re[i]) - std::log(model);
    misfit += e * e;
  }
  trial.misfit = misfit / static_cast<double>(t.size());
  return trial;
}

}  // namespace

DecayFit fit_decay(std::span<const double> t, std::span<const double> re, double lambda_rho) {
  if (t.size() != re.size()) throw ShapeError("fit_decay: series length mismatch");
  if (t.size() < 10) throw DomainError("fit_decay: need at least 10 samples");
  for (double v : re) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("fit_decay: values must be positive");
  }
  const double re_max = *std::max_element(re.begin(), re.end());
  const double re_min = *std::min_element(re.begin(), re.end());

  FloorTrial best = try_floor(t, re, 0.0);
  // coarse log-spaced scan, then golden-section refinement around the best node
  const double lo = std::log(std::max(re_min * 1e-6, re_max * 1e-300));
  const double hi = std::log(0.5 * re_max);
  constexpr int kScan = 64;
  int best_node = -1;
  std::vector<double> nodes(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    nodes[i] = lo + (hi - lo) * i / kScan;
    const auto trial = try_floor(t, re, std::exp(nodes[i]));
    if (trial.misfit < best.misfit) {
      best = trial;
      best_node = i;
    }
  }
  if (best_node >= 0 && hi > lo) {
    double a = nodes[std::max(best_node - 1, 0)];
    double b = nodes[std::min(best_node + 1, kScan)];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    auto fc = try_floor(t, re, std::exp(c)), fd = try_floor(t, re, std::exp(d));
    for (int it = 0; it < 80; ++it) {
      if (fc.misfit < fd.misfit) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = try_floor(t, re, std::exp(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = try_floor(t, re, std::exp(d));
      }
    }
    for (const auto& cand : {fc, fd}) {
      if (cand.misfit < best.misfit) best = cand;
    }
  }

  DecayFit fit;
  fit.floor = best.floor;
  fit.rate = best.line.ok ? -best.line.slope : 0.0;
  fit.amplitude = best.line.ok ? std::exp(best.line.intercept) : 0.0;
  fit.r_squared = best.line.r_squared;
  fit.t_a = t.front();
  fit.t_b = t.back();
  fit.lambda_rho = lambda_rho;
  return fit;
}

double calibrate_decay_constant(std::span<const double> t, std::span<const double> re,
                                double lambda_rho) {
  if (t.size() != re.size()) throw ShapeError("calibrate_decay_constant: length mismatch");
  if (!(lambda_rho > 0.0)) throw DomainError("calibrate_decay_constant: need Lambda_rho > 0");
  double g = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double bound = 2.0 / lambda_rho + std::exp(-0.5 * lambda_rho * t[i]);
    g = std::max(g, re[i] / bound);
  }
  return g;
}

GainConditionReport check_gain_conditions(const NudgingConfig& cfg, double delta, double gamma_cal,
                                          double epsilon) {
  if (!(gamma_cal >= 1.0)) throw DomainError("check_gain_conditions: gamma_cal must be >= 1");
  GainConditionReport rep;
  rep.gain_ordering = cfg.lambda_u >= 2.0 * cfg.lambda_rho;
  rep.gain_ratio = cfg.lambda_u >= gamma_cal * cfg.lambda_rho;
  rep.mesh_product = delta * cfg.lambda_u * gamma_cal;
  rep.mesh = rep.mesh_product <= 1.0;
  rep.floor_estimate =
      cfg.lambda_rho > 0.0
          ? (1.0 / cfg.lambda_rho + std::exp(-cfg.lambda_rho * cfg.window_end)) * gamma_cal
          : std::numeric_limits<double>::infinity();
  rep.epsilon = epsilon;
  rep.floor_below_epsilon = rep.floor_estimate < epsilon;
  return rep;
}

double chi_surrogate(const Model& model, const FluidState& observed, double t) {
  const Grid1D& grid = model.grid;
  const double dx = grid.dx();
  const auto U = velocity(observed);
  const std::size_t n = U.size();
  const double nu = model.visc.nu_eff();
  double ux_inf = 2.0 * std::max(std::abs(U.front()), std::abs(U.back())) / dx;
  double l3 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j + 1 < n) ux_inf = std::max(ux_inf, std::abs(U[j + 1] - U[j]) / dx);
    const double left = j == 0 ? -U[0] : U[j - 1];
    const double right = j + 1 == n ? -U[n - 1] : U[j + 1];
    const double uxx = (right - 2.0 * U[j] + left) / (dx * dx);
    const double w = nu * uxx / observed.rho[j] + model.forcing.g(t, grid.center(j));
    l3 += std::abs(w) * w * w;
  }
  const double l3_norm = std::cbrt(dx * l3);
  return 1.0 + ux_inf + l3_norm * l3_norm;
}

ForecastEnvelope forecast_envelope(std::span<const double> t, std::span<const double> re,
                                   std::span<const double> chi0, double gamma_bound) {
  if (t.size() != re.size() || t.size() != chi0.size() || t.empty()) {
    throw ShapeError("forecast_envelope: series length mismatch");
  }
  ForecastEnvelope env;
  env.gamma_bound = gamma_bound;
  const double re0 = re.front();
  if (re0 == 0.0) {
    env.trivially_satisfied = true;
    env.holds = true;
    return env;
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    integral += 0.5 * (chi0[k] + chi0[k - 1]) * (t[k] - t[k - 1]);
    if (re[k] > re0 && integral > 0.0) {
      env.gamma_hat = std::max(env.gamma_hat, std::log(re[k] / re0) / (2.0 * integral));
    } else if (re[k] > re0) {
      env.gamma_hat = std::numeric_limits<double>::infinity();
    }
  }
  env.growth = re.back() / re0;
  env.holds = env.gamma_hat <= gamma_bound;
  return env;
}

}  // namespace cda
