// Command-line front end: observe, twin, sweep, validate, audit.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cda/config.hpp"
#include "cda/errors.hpp"
#include "cda/harness.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kPass = 0, kRunFailure = 1, kAcceptanceFailure = 2, kConfigError = 3 };

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format;
};

cda::ExperimentConfig load(const Common& c) {
  cda::ExperimentConfig cfg = c.config_path.empty() ? cda::ExperimentConfig{}
                                                    : cda::load_config(c.config_path);
  if (c.seed) cfg.sampler.seed = *c.seed;
  if (!c.format.empty()) cfg.output.format = c.format;
  cda::validate(cfg);
  return cfg;
}

fs::path output_dir(const Common& c, const cda::ExperimentConfig& cfg, const char* command) {
  if (!c.out.empty()) return c.out;
  if (const char* root = std::getenv("CDA_OUTPUT_ROOT"); root && *root) {
    return fs::path(root) / command;
  }
  return fs::path(cfg.output.directory) / command;
}

void print_twin(const cda::TwinReport& r) {
  const auto& a = r.analysis;
  const auto& v = a.verdicts;
  std::printf("RE(T)/RE(0)        %.6e  %s\n", v.sync_ratio, v.synchronization ? "pass" : "FAIL");
  std::printf("forecast gamma_hat %.6e  %s\n", v.gamma_hat, v.forecast_envelope ? "pass" : "FAIL");
  std::printf("RE(T+)/RE(T)       %.6e  %s\n", v.growth, v.forecast_growth ? "pass" : "FAIL");
  std::printf("gain conditions    mesh=%.4f  %s\n", a.gains.mesh_product,
              v.gain_conditions ? "pass" : "FAIL");
  if (a.fit_valid) {
    std::printf("decay fit          rate=%.4f floor=%.4e r2=%.4f\n", a.fit.rate, a.fit.floor,
                a.fit.r_squared);
  }
  std::printf("interpolation      |I[r]-r|=%.4e |I[U]-U|=%.4e cells=%zu\n",
              r.interpolation.sup_err_r, r.interpolation.sup_err_U, r.measurement_cells);
  std::printf("steps              observed=%zu assim=%zu forecast=%zu\n", r.observed_stats.steps,
              r.assim_stats.steps, r.forecast_stats.steps);
  if (!r.failure.empty()) std::printf("run failure: %s\n", r.failure.c_str());
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw cda::ConfigError("bad sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw cda::ConfigError("sweep needs at least one value");
  return out;
}

int cmd_observe(const Common& c) {
  const auto cfg = load(c);
  const fs::path dir = output_dir(c, cfg, "observe");
  fs::create_directories(dir);
  cda::StepStats stats;
  const auto traj = cda::run_observed(cfg, &stats);
  cda::save_trajectory(dir / "observed.bin", traj);
  const char* ext = cfg.output.format == "json" ? ".bin" : ".csv";
  cda::save_snapshot(dir / (std::string("observed_initial") + ext), traj.grid,
                     traj.snapshots.front());
  cda::save_snapshot(dir / (std::string("observed_final") + ext), traj.grid, traj.snapshots.back());
  cda::save_config(dir / "config.json", cfg);
  std::printf("observed run: %zu snapshots, %zu steps, rho in [%.6f, %.6f], |u| <= %.6f\n",
              traj.snapshots.size(), stats.steps, traj.sup.rho_min, traj.sup.rho_max,
              traj.sup.u_max);
  std::printf("written to %s\n", dir.string().c_str());
  return kPass;
}

int cmd_twin(const Common& c) {
  const auto cfg = load(c);
  const fs::path dir = output_dir(c, cfg, "twin");
  std::optional<cda::MeasurementSet> ms;
  const auto rep = cda::run_twin(cfg, nullptr, &ms);
  cda::write_twin_outputs(dir, rep, ms ? &*ms : nullptr);
  print_twin(rep);
  std::printf("written to %s\n", dir.string().c_str());
  if (!rep.failure.empty()) return kRunFailure;
  return rep.passed() ? kPass : kAcceptanceFailure;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::string& values,
              const cda::SweepCoupling& coupling) {
  const auto cfg = load(c);
  const fs::path dir = output_dir(c, cfg, "sweep");
  const auto rep = cda::run_sweep(cfg, axis, parse_values(values), coupling);
  cda::write_sweep_outputs(dir, rep);
  for (const auto& p : rep.points) {
    if (p.report) {
      const auto& a = p.report->analysis;
      std::printf("%s=%-10g RE(T)/RE(0)=%.4e floor=%.4e rate=%.4f interp_r=%.4e %s\n",
                  axis.c_str(), p.value, a.verdicts.sync_ratio, a.fit.floor, a.fit.rate,
                  p.report->interpolation.sup_err_r, p.error.empty() ? "" : p.error.c_str());
    } else {
      std::printf("%s=%-10g failed: %s\n", axis.c_str(), p.value, p.error.c_str());
    }
  }
  std::printf("floor non-increasing: %s, rate non-decreasing: %s, interpolation monotone: %s\n",
              rep.floor_nonincreasing ? "yes" : "no", rep.rate_nondecreasing ? "yes" : "no",
              rep.interp_nonincreasing ? "yes" : "no");
  std::printf("written to %s\n", dir.string().c_str());
  if (rep.failures > 0) return kRunFailure;
  bool ok = true;
  if (axis == "lambda_rho") ok = rep.floor_nonincreasing && rep.rate_nondecreasing;
  if (axis == "delta") ok = rep.interp_nonincreasing;
  return ok ? kPass : kAcceptanceFailure;
}

int cmd_validate(const Common& c) {
  const auto cfg = load(c);
  const fs::path dir = output_dir(c, cfg, "validate");
  const auto rep = cda::validate_solver(cfg);
  cda::write_convergence_outputs(dir, rep);
  for (std::size_t i = 0; i < rep.n_cells.size(); ++i) {
    std::printf("n=%-5zu L2 error %.6e\n", rep.n_cells[i], rep.l2_errors[i]);
  }
  std::printf("observed order %.4f (accepted [%.1f, %.1f])  %s\n", rep.observed_order,
              cda::kMinSpatialOrder, cda::kMaxSpatialOrder, rep.passed ? "pass" : "FAIL");
  std::printf("dt-only refinement order %.4f\n", rep.dt_order);
  return rep.passed ? kPass : kAcceptanceFailure;
}

int cmd_audit(const Common& c) {
  if (c.out.empty()) throw cda::ConfigError("audit needs --out <dir> pointing at a twin run");
  const auto res = cda::audit(c.out);
  std::printf("stored verdicts     : %s\n", res.stored.passed() ? "pass" : "fail");
  std::printf("recomputed verdicts : %s\n", res.recomputed.passed() ? "pass" : "fail");
  std::printf("verdicts reproduce  : %s\n", res.verdicts_match ? "yes" : "NO");
  std::printf("numbers reproduce   : %s\n", res.numbers_match ? "yes" : "NO");
  return res.verdicts_match && res.numbers_match ? kPass : kAcceptanceFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nudging data assimilation twin experiments for 1D barotropic flow"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed = 0;
  std::string axis, values;
  cda::SweepCoupling coupling;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON experiment configuration")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", seed, "sampler seed (overrides the config)");
    sub->add_option("--format", common.format, "series format")
        ->check(CLI::IsMember({"csv", "json"}));
  };
  auto* observe = app.add_subcommand("observe", "produce and persist the observed trajectory");
  auto* twin = app.add_subcommand("twin", "run the full twin experiment");
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep of twin experiments");
  auto* validate = app.add_subcommand("validate", "manufactured-solution solver verification");
  auto* audit = app.add_subcommand("audit", "recompute verdicts from a persisted twin run");
  for (auto* sub : {observe, twin, sweep, validate, audit}) add_common(sub);
  sweep->add_option("--axis", axis, "lambda_rho | lambda_u | delta | T | n_cells")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--lambda-u-ratio", coupling.lambda_u_ratio,
                    "with axis lambda_rho, set lambda_u = ratio * value");
  sweep->add_flag("--mesh-delta", coupling.mesh_delta,
                  "set delta = 1 / (lambda_u * gamma_cal) at every point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  for (auto* sub : {observe, twin, sweep, validate, audit}) {
    if (sub->count("--seed") > 0) common.seed = seed;
  }

  try {
    if (*observe) return cmd_observe(common);
    if (*twin) return cmd_twin(common);
    if (*sweep) return cmd_sweep(common, axis, values, coupling);
    if (*validate) return cmd_validate(common);
    if (*audit) return cmd_audit(common);
  } catch (const cda::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kRunFailure;
  }
  return kRunFailure;
}
