#include "cda/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "cda/errors.hpp"

namespace cda {

using nlohmann::json;

Model make_model(const ExperimentConfig& cfg) {
  Model model{.grid = Grid1D(cfg.grid.n_cells, cfg.grid.length), .eos = eos_of(cfg), .visc = viscosity_of(cfg)};
  model.forcing = cfg.forcing.kind == "sine" ? Forcing::sine(cfg.forcing.amplitude, cfg.grid.length)
                                             : Forcing::none();
  model.rho_floor = cfg.solver.rho_floor;
  return model;
}

FluidState observed_initial_state(const ExperimentConfig& cfg) {
  const Grid1D grid(cfg.grid.n_cells, cfg.grid.length);
  FluidState s = uniform_state(grid, cfg.initial.mean, 0.0, cfg.timeline.t_minus);
  if (cfg.initial.kind == "cosine") {
    const double k = 2.0 * std::numbers::pi / cfg.grid.length;
    for (std::size_t j = 0; j < grid.n_cells(); ++j) {
      s.rho[j] = cfg.initial.mean + cfg.initial.amplitude * std::cos(k * grid.center(j));
    }
  }
  return s;
}

std::vector<double> report_times(double t_begin, double t_end, double interval) {
  if (!(t_end > t_begin) || !(interval > 0.0)) {
    throw DomainError("report_times: need t_end > t_begin and interval > 0");
  }
  std::vector<double> times{t_begin};
  for (std::size_t k = 1;; ++k) {
    const double t = t_begin + static_cast<double>(k) * interval;
    if (t >= t_end - 1e-9 * interval) break;
    times.push_back(t);
  }
  times.push_back(t_end);
  return times;
}

namespace {

void accumulate(StepStats& total, const StepStats& part) {
  if (part.steps == 0) return;
  total.min_dt = total.steps == 0 ? part.min_dt : std::min(total.min_dt, part.min_dt);
  total.max_dt = std::max(total.max_dt, part.max_dt);
  total.steps += part.steps;
  total.wall_seconds += part.wall_seconds;
}

// Advances through `times` (times[0] must equal state.time), appending the
// state reached at each later time to `out`.
void march(FluidState state, std::span<const double> times, const Model& model,
           const ExperimentConfig& cfg, const std::optional<Nudging>& nudging,
           std::vector<FluidState>& out, StepStats& stats) {
  IntegrateOptions opt;
  opt.safety = cfg.solver.safety;
  opt.max_steps = cfg.solver.max_steps;
  opt.nudging = nudging;
  for (std::size_t k = 1; k < times.size(); ++k) {
    opt.snapshot_interval = times[k] - state.time;
    auto res = integrate(state, times[k], model, opt);
    accumulate(stats, res.stats);
    state = std::move(res.snapshots.back());
    out.push_back(state);
  }
}

std::vector<double> concat_times(std::initializer_list<std::vector<double>> parts) {
  std::vector<double> all;
  for (const auto& p : parts) {
    for (double t : p) {
      if (all.empty() || t > all.back()) all.push_back(t);
    }
  }
  return all;
}

}  // namespace

ObservedTrajectory run_observed(const ExperimentConfig& cfg, StepStats* stats) {
  validate(cfg);
  const Model model = make_model(cfg);
  const auto& tl = cfg.timeline;
  const double dt_rep = cfg.solver.report_interval;
  const auto times = concat_times({report_times(tl.t_minus, 0.0, dt_rep),
                                   report_times(0.0, tl.t_assim_end, dt_rep),
                                   report_times(tl.t_assim_end, tl.t_plus, dt_rep)});

  ObservedTrajectory traj{model.grid, {}, {}};
  traj.snapshots.push_back(observed_initial_state(cfg));
  StepStats local;
  march(traj.snapshots.front(), times, model, cfg, std::nullopt, traj.snapshots, local);
  if (stats) *stats = local;

  const double m0 = total_mass(model.grid, traj.snapshots.front());
  for (const auto& s : traj.snapshots) {
    const double drift = std::abs(total_mass(model.grid, s) - m0) / m0;
    if (drift > 1e-10) {
      throw Error("run_observed: mass drift " + std::to_string(drift) + " at t=" +
                  std::to_string(s.time));
    }
  }
  traj.sup.g_max = model.forcing.sup_bound;
  traj.sup = measure_sup_bounds(traj);
  if (!(traj.sup.rho_min > 0.0)) throw Error("run_observed: density lost positivity");
  return traj;
}

SynchronizedRun run_synchronized(const ExperimentConfig& cfg, const MeasurementSet& ms,
                                 const FluidState& initial) {
  const Model model = make_model(cfg);
  const auto& tl = cfg.timeline;
  if (initial.time != 0.0) throw DomainError("run_synchronized: initial state must be at t = 0");
  SynchronizedRun run;
  run.snapshots.push_back(initial);
  try {
    const auto assim = report_times(0.0, tl.t_assim_end, cfg.solver.report_interval);
    std::optional<Nudging> nudging;
    if (cfg.nudging.lambda_rho > 0.0 || cfg.nudging.lambda_u > 0.0) {
      nudging = Nudging{&ms, nudging_of(cfg)};
    }
    march(initial, assim, model, cfg, nudging, run.snapshots, run.assim_stats);
    const auto forecast = report_times(tl.t_assim_end, tl.t_plus, cfg.solver.report_interval);
    march(run.snapshots.back(), forecast, model, cfg, std::nullopt, run.snapshots,
          run.forecast_stats);
  } catch (const Error& e) {
    run.failure = e.what();
  }
  return run;
}

TwinAnalysis analyze(const ExperimentConfig& cfg, std::span<const EnergyReport> series,
                     std::span<const ChiSample> chi) {
  TwinAnalysis a;
  const double T = cfg.timeline.t_assim_end;
  const auto& cal = cfg.calibration;

  std::vector<double> ta, rea, tf, ref, chif;
  for (const auto& r : series) {
    if (r.time >= 0.0 && r.time <= T) {
      ta.push_back(r.time);
      rea.push_back(r.rel_energy);
    }
    if (r.time >= T) {
      tf.push_back(r.time);
      ref.push_back(r.rel_energy);
    }
  }

  if (cfg.nudging.lambda_rho > 0.0) {
    try {
      a.fit = fit_decay(ta, rea, cfg.nudging.lambda_rho);
      a.fit_valid = true;
    } catch (const Error&) {
      a.fit_valid = false;
    }
    if (!ta.empty()) a.decay_constant = calibrate_decay_constant(ta, rea, cfg.nudging.lambda_rho);
  }
  a.gains = check_gain_conditions(nudging_of(cfg), cfg.sampler.delta, cal.gamma_cal, cal.epsilon);

  auto& v = a.verdicts;
  v.gain_conditions = a.gains.all();
  const bool reached_T = !ta.empty() && ta.front() == 0.0 && ta.back() == T;
  if (reached_T) {
    const double re0 = rea.front(), reT = rea.back();
    v.sync_ratio = re0 > 0.0 ? reT / re0 : (reT == 0.0 ? 0.0 : kInfiniteEnergy);
    v.synchronization = v.sync_ratio <= cal.sync_ratio_max;
  } else {
    v.sync_ratio = std::numeric_limits<double>::quiet_NaN();
  }

  const bool reached_end = !tf.empty() && tf.back() == cfg.timeline.t_plus;
  if (reached_end && chi.size() == tf.size()) {
    for (const auto& c : chi) chif.push_back(c.chi0);
    a.envelope = forecast_envelope(tf, ref, chif, cal.forecast_gamma_max);
    v.gamma_hat = a.envelope.gamma_hat;
    v.forecast_envelope = a.envelope.holds;
    v.growth = ref.front() > 0.0 ? ref.back() / ref.front() : (ref.back() == 0.0 ? 0.0 : kInfiniteEnergy);
    v.forecast_growth = v.growth <= cal.forecast_growth_max;
  } else {
    v.gamma_hat = std::numeric_limits<double>::quiet_NaN();
    v.growth = std::numeric_limits<double>::quiet_NaN();
  }
  return a;
}

TwinReport run_twin(const ExperimentConfig& cfg, std::shared_ptr<const ObservedTrajectory> observed,
                    std::optional<MeasurementSet>* measurements_out) {
  validate(cfg);
  TwinReport rep;
  rep.config = cfg;
  if (!observed) observed = std::make_shared<ObservedTrajectory>(run_observed(cfg, &rep.observed_stats));
  const ObservedTrajectory& obs = *observed;
  const Model model = make_model(cfg);
  if (!(obs.grid == model.grid)) throw ShapeError("run_twin: observed grid does not match config");

  auto dec = build_decomposition(cfg.sampler.delta, cfg.timeline.t_assim_end, cfg.grid.length,
                                 placement_of(cfg), cfg.sampler.seed, cfg.sampler.max_cells);
  const MeasurementSet ms = sample(obs, std::move(dec));
  rep.measurement_cells = ms.decomposition().n_cells();
  rep.interpolation = interpolation_error(ms, obs);
  rep.sup = obs.sup;
  rep.data_norm_w1inf = initial_data_norm_surrogate(obs, obs.t_begin(), obs.t_begin());

  // The synchronized run sees the measurements and the conserved mass only.
  const SynchronizedRun run = run_synchronized(cfg, ms, make_synchronized_initial(obs));
  rep.assim_stats = run.assim_stats;
  rep.forecast_stats = run.forecast_stats;
  rep.failure = run.failure;

  const NudgingConfig ncfg = nudging_of(cfg);
  const double T = cfg.timeline.t_assim_end;
  for (const auto& s : run.snapshots) {
    const FluidState o = obs.state_at(s.time);
    rep.series.push_back(energy_report(model, s, o, &ms, ncfg));
    if (s.time >= T) rep.chi.push_back({s.time, chi_surrogate(model, o, s.time)});
  }
  rep.analysis = analyze(cfg, rep.series, rep.chi);
  if (measurements_out) measurements_out->emplace(ms);
  return rep;
}

// ---------------------------------------------------------------- sweeps

struct ObservedCache::Impl {
  struct Entry {
    std::once_flag once;
    std::shared_ptr<const ObservedTrajectory> traj;
    std::exception_ptr error;
  };
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<Entry>> entries;
};

ObservedCache::ObservedCache() : impl_(std::make_shared<Impl>()) {}

std::shared_ptr<const ObservedTrajectory> ObservedCache::get(const ExperimentConfig& cfg) {
  const std::string key = observed_key(cfg).dump();
  std::shared_ptr<Impl::Entry> entry;
  {
    std::lock_guard lock(impl_->mutex);
    auto& slot = impl_->entries[key];
    if (!slot) slot = std::make_shared<Impl::Entry>();
    entry = slot;
  }
  std::call_once(entry->once, [&] {
    try {
      entry->traj = std::make_shared<const ObservedTrajectory>(run_observed(cfg));
    } catch (...) {
      entry->error = std::current_exception();
    }
  });
  if (entry->error) std::rethrow_exception(entry->error);
  return entry->traj;
}

std::size_t ObservedCache::size() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->entries.size();
}

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value,
                            const SweepCoupling& coupling) {
  ExperimentConfig c = base;
  if (axis == "lambda_rho") {
    c.nudging.lambda_rho = value;
    if (coupling.lambda_u_ratio > 0.0) c.nudging.lambda_u = coupling.lambda_u_ratio * value;
  } else if (axis == "lambda_u") {
    c.nudging.lambda_u = value;
  } else if (axis == "delta") {
    c.sampler.delta = value;
  } else if (axis == "T") {
    c.timeline.t_assim_end = value;
  } else if (axis == "n_cells") {
    if (!(value >= 0.0) || value != std::floor(value)) {
      throw ConfigError("sweep: n_cells values must be integers");
    }
    c.grid.n_cells = static_cast<std::size_t>(value);
  } else {
    throw ConfigError("sweep: unknown axis '" + axis +
                      "' (expected lambda_rho, lambda_u, delta, T or n_cells)");
  }
  if (coupling.mesh_delta) {
    if (axis == "delta") throw ConfigError("sweep: delta cannot be both swept and coupled");
    if (!(c.nudging.lambda_u > 0.0)) throw ConfigError("sweep: mesh coupling needs lambda_u > 0");
    c.sampler.delta = 1.0 / (c.nudging.lambda_u * c.calibration.gamma_cal);
  }
  validate(c);
  return c;
}

SweepReport run_sweep(const ExperimentConfig& base, const std::string& axis,
                      std::vector<double> values, const SweepCoupling& coupling) {
  if (values.empty()) throw ConfigError("sweep: no values");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<ExperimentConfig> cfgs;
  for (double v : values) cfgs.push_back(apply_axis(base, axis, v, coupling));

  SweepReport rep;
  rep.axis = axis;
  rep.points.resize(values.size());
  ObservedCache cache;
  const auto n_points = static_cast<long>(values.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n_points; ++i) {
    auto& p = rep.points[static_cast<std::size_t>(i)];
    p.value = values[static_cast<std::size_t>(i)];
    try {
      const auto& cfg = cfgs[static_cast<std::size_t>(i)];
      p.report = run_twin(cfg, cache.get(cfg));
      if (!p.report->failure.empty()) p.error = p.report->failure;
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  }
  rep.observed_runs = cache.size();

  std::vector<const TwinReport*> ok;
  for (const auto& p : rep.points) {
    if (p.error.empty()) {
      ok.push_back(&*p.report);
    } else {
      ++rep.failures;
    }
  }
  rep.floor_nonincreasing = rep.rate_nondecreasing = rep.interp_nonincreasing = true;
  const TwinReport* prev_fit = nullptr;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    const auto& a = ok[i]->analysis;
    if (a.fit_valid) {
      if (prev_fit) {
        const auto& f0 = prev_fit->analysis.fit;
        if (a.fit.floor > f0.floor * (1.0 + kMonotonicityBand)) rep.floor_nonincreasing = false;
        if (a.fit.rate < f0.rate * (1.0 - kMonotonicityBand)) rep.rate_nondecreasing = false;
      }
      prev_fit = ok[i];
    }
    if (i > 0) {
      const auto& e0 = ok[i - 1]->interpolation;
      const auto& e1 = ok[i]->interpolation;
      if (e0.sup_err_r > e1.sup_err_r || e0.sup_err_U > e1.sup_err_U) {
        rep.interp_nonincreasing = false;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------- manufactured solution

namespace {

struct Exact {
  double r, U, r_t, r_x, U_t, U_x, U_xx;
};

Exact exact_fields(const ManufacturedCase& mc, double length, double t, double x) {
  const double k = std::numbers::pi / length;
  const double c = std::cos(k * x), s = std::sin(k * x);
  const double ct = std::cos(t), st = std::sin(t);
  return {1.0 + mc.amp_r * c * ct, mc.amp_u * s * ct,      -mc.amp_r * c * st,
          -mc.amp_r * k * s * ct,  -mc.amp_u * s * st,     mc.amp_u * k * c * ct,
          -mc.amp_u * k * k * s * ct};
}

}  // namespace

FluidState manufactured_state(const Grid1D& grid, const ManufacturedCase& mc, double t) {
  FluidState s{t, std::vector<double>(grid.n_cells()), std::vector<double>(grid.n_cells())};
  for (std::size_t j = 0; j < grid.n_cells(); ++j) {
    const Exact e = exact_fields(mc, grid.length(), t, grid.center(j));
    s.rho[j] = e.r;
    s.mom[j] = e.r * e.U;
  }
  return s;
}

Model manufactured_model(const ExperimentConfig& cfg, const ManufacturedCase& mc, std::size_t n) {
  Model model{.grid = Grid1D(n, cfg.grid.length), .eos = eos_of(cfg), .visc = viscosity_of(cfg)};
  model.rho_floor = cfg.solver.rho_floor;
  const double length = cfg.grid.length;
  const double nu = model.visc.nu_eff();
  const EquationOfState eos = model.eos;
  model.source = [mc, length, nu, eos](double t, double x, double& s_rho, double& s_mom) {
    const Exact e = exact_fields(mc, length, t, x);
    const double m_x = e.r_x * e.U + e.r * e.U_x;
    s_rho = e.r_t + m_x;
    const double m_t = e.r_t * e.U + e.r * e.U_t;
    const double flux_x = e.r_x * e.U * e.U + 2.0 * e.r * e.U * e.U_x +
                          pressure_derivative(eos, e.r) * e.r_x;
    s_mom = m_t + flux_x - nu * e.U_xx;
  };
  return model;
}

namespace {

double l2_distance(const Grid1D& grid, const FluidState& a, const FluidState& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double dr = a.rho[j] - b.rho[j], dm = a.mom[j] - b.mom[j];
    s += dr * dr + dm * dm;
  }
  return std::sqrt(grid.dx() * s);
}

}  // namespace

ConvergenceReport validate_solver(const ExperimentConfig& cfg, const ManufacturedCase& mc,
                                  std::vector<std::size_t> sizes) {
  validate(cfg);
  if (sizes.size() < 2) throw DomainError("validate_solver: need at least two grid sizes");
  ConvergenceReport rep;
  IntegrateOptions opt;
  opt.safety = cfg.solver.safety;
  opt.max_steps = cfg.solver.max_steps;
  opt.snapshot_interval = mc.t_final;
  for (std::size_t n : sizes) {
    const Model model = manufactured_model(cfg, mc, n);
    const auto res = integrate(manufactured_state(model.grid, mc, 0.0), mc.t_final, model, opt);
    rep.n_cells.push_back(n);
    rep.l2_errors.push_back(
        l2_distance(model.grid, res.snapshots.back(), manufactured_state(model.grid, mc, mc.t_final)));
  }
  bool all_zero = true;
  for (double e : rep.l2_errors) all_zero = all_zero && e == 0.0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const double ratio = static_cast<double>(sizes[i + 1]) / static_cast<double>(sizes[i]);
    rep.orders.push_back(std::log(rep.l2_errors[i] / rep.l2_errors[i + 1]) / std::log(ratio));
  }
  rep.observed_order = rep.orders.back();
  rep.passed = all_zero || std::all_of(rep.orders.begin(), rep.orders.end(), [](double p) {
                 return p >= kMinSpatialOrder && p <= kMaxSpatialOrder;
               });

  // dt-only refinement of the nudged, split scheme on a fixed grid, driven by
  // exact measurements of the manufactured fields
  const Model model = manufactured_model(cfg, mc, sizes[sizes.size() / 2]);
  auto dec = build_decomposition(0.05, mc.t_final, cfg.grid.length, Placement::Center);
  std::vector<Sample> vals;
  for (const auto& y : dec.control_points) {
    const Exact e = exact_fields(mc, cfg.grid.length, y.t, y.x);
    vals.push_back({e.r, e.U});
  }
  const MeasurementSet ms(std::move(dec), std::move(vals));
  const FluidState init = manufactured_state(model.grid, mc, 0.0);
  IntegrateOptions nopt = opt;
  nopt.nudging = Nudging{&ms, {cfg.nudging.lambda_rho, cfg.nudging.lambda_u, mc.t_final}};
  const double dt0 = 0.5 * stable_dt(init, model, cfg.solver.safety);
  std::vector<FluidState> finals;
  for (int level = 0; level < 3; ++level) {
    nopt.fixed_dt = dt0 / static_cast<double>(1 << level);
    rep.dt_values.push_back(nopt.fixed_dt);
    finals.push_back(integrate(init, mc.t_final, model, nopt).snapshots.back());
  }
  for (std::size_t i = 0; i + 1 < finals.size(); ++i) {
    rep.dt_differences.push_back(l2_distance(model.grid, finals[i], finals[i + 1]));
  }
  rep.dt_order = std::log2(rep.dt_differences[0] / rep.dt_differences[1]);
  return rep;
}

// ------------------------------------------------------------ persistence

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no inf/nan; store them as strings so that audits read them back.
json jnum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double read_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  throw IoError("report: bad number '" + s + "'");
}

std::vector<std::vector<double>> read_csv_table(const std::filesystem::path& path,
                                                std::size_t columns) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != columns) throw IoError(path.string() + ": malformed row '" + line + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* kEnergyHeader =
    "t,total_energy,rel_energy,dissipation,l2_u_diff,mass,nudge_power_rho,nudge_power_u";

json stats_json(const StepStats& s) {
  return {{"steps", s.steps},
          {"min_dt", jnum(s.min_dt)},
          {"max_dt", s.max_dt},
          {"wall_seconds", s.wall_seconds}};
}

json verdicts_json(const TwinVerdicts& v) {
  return {{"sync_ratio", jnum(v.sync_ratio)},
          {"synchronization", v.synchronization},
          {"gamma_hat", jnum(v.gamma_hat)},
          {"forecast_envelope", v.forecast_envelope},
          {"growth", jnum(v.growth)},
          {"forecast_growth", v.forecast_growth},
          {"gain_conditions", v.gain_conditions},
          {"passed", v.passed()}};
}

TwinVerdicts verdicts_from_json(const json& j) {
  TwinVerdicts v;
  v.sync_ratio = read_num(j.at("sync_ratio"));
  v.synchronization = j.at("synchronization").get<bool>();
  v.gamma_hat = read_num(j.at("gamma_hat"));
  v.forecast_envelope = j.at("forecast_envelope").get<bool>();
  v.growth = read_num(j.at("growth"));
  v.forecast_growth = j.at("forecast_growth").get<bool>();
  v.gain_conditions = j.at("gain_conditions").get<bool>();
  return v;
}

json series_json(std::span<const EnergyReport> series, std::span<const ChiSample> chi) {
  json e = json::object();
  for (const char* k : {"t", "total_energy", "rel_energy", "dissipation", "l2_u_diff", "mass",
                        "nudge_power_rho", "nudge_power_u"}) {
    e[k] = json::array();
  }
  for (const auto& r : series) {
    e["t"].push_back(r.time);
    e["total_energy"].push_back(r.total_energy);
    e["rel_energy"].push_back(r.rel_energy);
    e["dissipation"].push_back(r.dissipation);
    e["l2_u_diff"].push_back(r.l2_u_diff);
    e["mass"].push_back(r.mass);
    e["nudge_power_rho"].push_back(r.nudge_power_rho);
    e["nudge_power_u"].push_back(r.nudge_power_u);
  }
  json c = {{"t", json::array()}, {"chi0", json::array()}};
  for (const auto& s : chi) {
    c["t"].push_back(s.time);
    c["chi0"].push_back(s.chi0);
  }
  return {{"energy", e}, {"forecast_chi", c}};
}

bool same_bits(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

void write_energy_csv(const std::filesystem::path& path, std::span<const EnergyReport> series) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  os << kEnergyHeader << '\n';
  for (const auto& r : series) {
    os << fmt17(r.time) << ',' << fmt17(r.total_energy) << ',' << fmt17(r.rel_energy) << ','
       << fmt17(r.dissipation) << ',' << fmt17(r.l2_u_diff) << ',' << fmt17(r.mass) << ','
       << fmt17(r.nudge_power_rho) << ',' << fmt17(r.nudge_power_u) << '\n';
  }
}

std::vector<EnergyReport> read_energy_csv(const std::filesystem::path& path) {
  std::vector<EnergyReport> out;
  for (const auto& w : read_csv_table(path, 8)) {
    out.push_back({w[0], w[1], w[2], w[3], w[4], w[5], w[6], w[7]});
  }
  return out;
}

void write_chi_csv(const std::filesystem::path& path, std::span<const ChiSample> chi) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  os << "t,chi0\n";
  for (const auto& c : chi) os << fmt17(c.time) << ',' << fmt17(c.chi0) << '\n';
}

std::vector<ChiSample> read_chi_csv(const std::filesystem::path& path) {
  std::vector<ChiSample> out;
  for (const auto& w : read_csv_table(path, 2)) out.push_back({w[0], w[1]});
  return out;
}

json report_to_json(const TwinReport& r) {
  const auto& a = r.analysis;
  return {
      {"config", to_json(r.config)},
      {"failure", r.failure},
      {"analysis",
       {{"fit_valid", a.fit_valid},
        {"decay_fit",
         {{"rate", jnum(a.fit.rate)},
          {"floor", jnum(a.fit.floor)},
          {"amplitude", jnum(a.fit.amplitude)},
          {"r_squared", jnum(a.fit.r_squared)},
          {"t_a", a.fit.t_a},
          {"t_b", a.fit.t_b}}},
        {"decay_constant", jnum(a.decay_constant)},
        {"gain_conditions",
         {{"gain_ordering", a.gains.gain_ordering},
          {"gain_ratio", a.gains.gain_ratio},
          {"mesh", a.gains.mesh},
          {"mesh_product", a.gains.mesh_product},
          {"floor_estimate", jnum(a.gains.floor_estimate)},
          {"epsilon", a.gains.epsilon},
          {"floor_below_epsilon", a.gains.floor_below_epsilon}}},
        {"forecast_envelope",
         {{"trivially_satisfied", a.envelope.trivially_satisfied},
          {"gamma_hat", jnum(a.envelope.gamma_hat)},
          {"gamma_bound", a.envelope.gamma_bound},
          {"holds", a.envelope.holds},
          {"growth", jnum(a.envelope.growth)}}},
        {"verdicts", verdicts_json(a.verdicts)}}},
      {"interpolation_error",
       {{"sup_err_r", r.interpolation.sup_err_r}, {"sup_err_U", r.interpolation.sup_err_U}}},
      {"sup_bounds",
       {{"rho_max", r.sup.rho_max},
        {"rho_min", r.sup.rho_min},
        {"u_max", r.sup.u_max},
        {"g_max", r.sup.g_max}}},
      {"data_norm_w1inf_surrogate", jnum(r.data_norm_w1inf)},
      {"measurement_cells", r.measurement_cells},
      {"steps",
       {{"observed", stats_json(r.observed_stats)},
        {"assimilation", stats_json(r.assim_stats)},
        {"forecast", stats_json(r.forecast_stats)}}},
  };
}

void write_twin_outputs(const std::filesystem::path& dir, const TwinReport& report,
                        const MeasurementSet* ms) {
  std::filesystem::create_directories(dir);
  if (report.config.output.format == "json") {
    std::ofstream os(dir / "series.json");
    if (!os) throw IoError("cannot write series.json in " + dir.string());
    os << series_json(report.series, report.chi).dump() << '\n';
  } else {
    write_energy_csv(dir / "energy.csv", report.series);
    write_chi_csv(dir / "forecast_chi.csv", report.chi);
  }
  std::ofstream os(dir / "report.json");
  if (!os) throw IoError("cannot write report.json in " + dir.string());
  os << report_to_json(report).dump(2) << '\n';
  if (ms) save_measurements_csv(dir / "measurements.csv", *ms);
}

void write_sweep_outputs(const std::filesystem::path& dir, const SweepReport& sweep) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "sweep.csv");
  if (!os) throw IoError("cannot write sweep.csv in " + dir.string());
  os << "value,status,sync_ratio,fit_floor,fit_rate,fit_r_squared,interp_err_r,interp_err_U,"
        "gamma_hat,growth\n";
  for (const auto& p : sweep.points) {
    os << fmt17(p.value) << ',' << (p.error.empty() ? "ok" : "failed");
    if (p.report) {
      const auto& a = p.report->analysis;
      os << ',' << fmt17(a.verdicts.sync_ratio) << ',' << fmt17(a.fit.floor) << ','
         << fmt17(a.fit.rate) << ',' << fmt17(a.fit.r_squared) << ','
         << fmt17(p.report->interpolation.sup_err_r) << ','
         << fmt17(p.report->interpolation.sup_err_U) << ',' << fmt17(a.verdicts.gamma_hat) << ','
         << fmt17(a.verdicts.growth);
    } else {
      os << ",nan,nan,nan,nan,nan,nan,nan,nan";
    }
    os << '\n';
  }
  json j = {{"axis", sweep.axis},
            {"failures", sweep.failures},
            {"observed_runs", sweep.observed_runs},
            {"floor_nonincreasing", sweep.floor_nonincreasing},
            {"rate_nondecreasing", sweep.rate_nondecreasing},
            {"interp_nonincreasing", sweep.interp_nonincreasing},
            {"errors", json::array()}};
  for (const auto& p : sweep.points) {
    if (!p.error.empty()) j["errors"].push_back({{"value", p.value}, {"error", p.error}});
  }
  std::ofstream js(dir / "sweep.json");
  js << j.dump(2) << '\n';
}

void write_convergence_outputs(const std::filesystem::path& dir, const ConvergenceReport& conv) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "convergence.csv");
  if (!os) throw IoError("cannot write convergence.csv in " + dir.string());
  os << "n_cells,l2_error\n";
  for (std::size_t i = 0; i < conv.n_cells.size(); ++i) {
    os << conv.n_cells[i] << ',' << fmt17(conv.l2_errors[i]) << '\n';
  }
  std::ofstream ds(dir / "dt_study.csv");
  ds << "dt,difference_to_half\n";
  for (std::size_t i = 0; i < conv.dt_differences.size(); ++i) {
    ds << fmt17(conv.dt_values[i]) << ',' << fmt17(conv.dt_differences[i]) << '\n';
  }
  json j = {{"orders", json::array()},
            {"observed_order", jnum(conv.observed_order)},
            {"dt_order", jnum(conv.dt_order)},
            {"passed", conv.passed}};
  for (double p : conv.orders) j["orders"].push_back(jnum(p));
  std::ofstream js(dir / "convergence.json");
  js << j.dump(2) << '\n';
}

AuditResult audit(const std::filesystem::path& dir) {
  std::ifstream is(dir / "report.json");
  if (!is) throw IoError("audit: no report.json in " + dir.string());
  json report;
  try {
    report = json::parse(is);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("audit: report.json: ") + e.what());
  }
  const ExperimentConfig cfg = config_from_json(report.at("config"));

  std::vector<EnergyReport> series;
  std::vector<ChiSample> chi;
  if (std::filesystem::exists(dir / "energy.csv")) {
    series = read_energy_csv(dir / "energy.csv");
    chi = read_chi_csv(dir / "forecast_chi.csv");
  } else if (std::filesystem::exists(dir / "series.json")) {
    std::ifstream ss(dir / "series.json");
    const json sj = json::parse(ss);
    const auto& e = sj.at("energy");
    for (std::size_t i = 0; i < e.at("t").size(); ++i) {
      series.push_back({e["t"][i].get<double>(), e["total_energy"][i].get<double>(),
                        e["rel_energy"][i].get<double>(), e["dissipation"][i].get<double>(),
                        e["l2_u_diff"][i].get<double>(), e["mass"][i].get<double>(),
                        e["nudge_power_rho"][i].get<double>(), e["nudge_power_u"][i].get<double>()});
    }
    const auto& c = sj.at("forecast_chi");
    for (std::size_t i = 0; i < c.at("t").size(); ++i) {
      chi.push_back({c["t"][i].get<double>(), c["chi0"][i].get<double>()});
    }
  } else {
    throw IoError("audit: no persisted series in " + dir.string());
  }

  const TwinAnalysis a = analyze(cfg, series, chi);
  const json& stored = report.at("analysis");
  AuditResult res;
  res.stored = verdicts_from_json(stored.at("verdicts"));
  res.recomputed = a.verdicts;
  auto bits_equal = [](const TwinVerdicts& x, const TwinVerdicts& y) {
    return same_bits(x.sync_ratio, y.sync_ratio) && same_bits(x.gamma_hat, y.gamma_hat) &&
           same_bits(x.growth, y.growth) && x.synchronization == y.synchronization &&
           x.forecast_envelope == y.forecast_envelope && x.forecast_growth == y.forecast_growth &&
           x.gain_conditions == y.gain_conditions;
  };
  res.verdicts_match = bits_equal(res.stored, res.recomputed);
  const auto& fit = stored.at("decay_fit");
  res.numbers_match = stored.at("fit_valid").get<bool>() == a.fit_valid &&
                      same_bits(read_num(fit.at("rate")), a.fit.rate) &&
                      same_bits(read_num(fit.at("floor")), a.fit.floor) &&
                      same_bits(read_num(stored.at("decay_constant")), a.decay_constant) &&
                      same_bits(read_num(stored.at("forecast_envelope").at("gamma_hat")),
                                a.envelope.gamma_hat);
  return res;
}

}  // namespace cda
