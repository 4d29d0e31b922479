#include <cmath>
#include <filesystem>
#include <fstream>

#include "cda/errors.hpp"
#include "cda/harness.hpp"
#include "doctest.h"

using namespace cda;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small() {
  ExperimentConfig c;
  c.grid.n_cells = 32;
  c.timeline = {-0.1, 0.2, 0.3};
  c.solver.report_interval = 0.01;
  c.sampler.delta = 0.05;
  c.nudging = {10.0, 20.0};
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("report times") {
  const auto t = report_times(0.0, 0.025, 0.01);
  REQUIRE(t.size() == 4);
  CHECK(t[1] == 0.01);
  CHECK(t.back() == 0.025);
  CHECK(report_times(-0.5, 0.0, 0.1).back() == 0.0);
}

TEST_CASE("rest observed run stays at rest") {
  ExperimentConfig c = small();
  c.initial.kind = "rest";
  c.forcing.kind = "none";
  const auto obs = run_observed(c);
  for (const auto& s : obs.snapshots) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      CHECK(s.rho[j] == c.initial.mean);
      CHECK(s.mom[j] == 0.0);
    }
  }
}

TEST_CASE("forced observed run keeps positivity and mass") {
  const ExperimentConfig c = small();
  StepStats stats;
  const auto obs = run_observed(c, &stats);
  CHECK(stats.steps > 0);
  CHECK(obs.snapshots.front().time == c.timeline.t_minus);
  CHECK(obs.snapshots.back().time == c.timeline.t_plus);
  CHECK(obs.sup.rho_min > 0.0);
  const double m0 = total_mass(obs.grid, obs.snapshots.front());
  for (const auto& s : obs.snapshots) {
    CHECK(std::abs(total_mass(obs.grid, s) - m0) <= 1e-12 * m0);
  }
}

TEST_CASE("free run from the observed state reproduces the observation") {
  ExperimentConfig c = small();
  c.nudging = {0.0, 0.0};
  const auto obs = run_observed(c);
  const auto dec = build_decomposition(c.sampler.delta, c.timeline.t_assim_end, 1.0,
                                       Placement::Center);
  const auto ms = sample(obs, dec);
  const auto run = run_synchronized(c, ms, obs.state_at(0.0));
  REQUIRE(run.failure.empty());
  const Model model = make_model(c);
  for (const auto& s : run.snapshots) {
    CHECK(relative_energy(model.grid, model.eos, s, obs.state_at(s.time)) == 0.0);
  }
}

TEST_CASE("synchronized run sees only the measurements") {
  const ExperimentConfig c = small();
  const auto obs = run_observed(c);
  const auto dec = build_decomposition(c.sampler.delta, c.timeline.t_assim_end, 1.0,
                                       Placement::Jittered, 5);
  const auto ms = sample(obs, dec);

  // cells the sampler reads
  std::vector<bool> read(obs.grid.n_cells(), false);
  for (const auto& y : dec.control_points) {
    read[std::min(static_cast<std::size_t>(y.x / obs.grid.dx()), obs.grid.n_cells() - 1)] = true;
  }
  ObservedTrajectory corrupt = obs;
  for (std::size_t k = 1; k < corrupt.snapshots.size(); ++k) {
    for (std::size_t j = 0; j < read.size(); ++j) {
      if (!read[j]) {
        corrupt.snapshots[k].rho[j] = 7.0 + static_cast<double>(j);
        corrupt.snapshots[k].mom[j] = -3.0;
      }
    }
  }
  const auto ms2 = sample(corrupt, dec);
  for (std::size_t i = 0; i < ms.values().size(); ++i) {
    CHECK(ms.values()[i].r == ms2.values()[i].r);
    CHECK(ms.values()[i].U == ms2.values()[i].U);
  }
  const auto a = run_synchronized(c, ms, make_synchronized_initial(obs));
  const auto b = run_synchronized(c, ms2, make_synchronized_initial(corrupt));
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    CHECK(a.snapshots[k].rho == b.snapshots[k].rho);
    CHECK(a.snapshots[k].mom == b.snapshots[k].mom);
  }
}

TEST_CASE("twin run is deterministic and nudging helps") {
  const ExperimentConfig c = small();
  const auto a = run_twin(c);
  const auto b = run_twin(c);
  REQUIRE(a.failure.empty());
  REQUIRE(a.series.size() == b.series.size());
  for (std::size_t k = 0; k < a.series.size(); ++k) {
    CHECK(a.series[k].rel_energy == b.series[k].rel_energy);
    CHECK(a.series[k].time == b.series[k].time);
  }
  CHECK(a.analysis.verdicts == b.analysis.verdicts);
  CHECK(a.series.front().time == 0.0);
  CHECK(a.chi.front().time == c.timeline.t_assim_end);
  CHECK(a.measurement_cells > 0);

  ExperimentConfig off = c;
  off.nudging = {0.0, 0.0};
  const auto free = run_twin(off);
  const auto at_T = [&](const TwinReport& r) {
    for (const auto& e : r.series) {
      if (e.time == c.timeline.t_assim_end) return e.rel_energy;
    }
    return -1.0;
  };
  CHECK(at_T(a) < at_T(free));
}

TEST_CASE("observed cache shares runs by key") {
  ObservedCache cache;
  ExperimentConfig a = small(), b = small();
  b.nudging.lambda_rho = 3.0;
  const auto pa = cache.get(a);
  CHECK(cache.get(b) == pa);
  CHECK(cache.size() == 1);
  b.grid.n_cells = 40;
  CHECK(cache.get(b) != pa);
  CHECK(cache.size() == 2);
}

TEST_CASE("sweep axes") {
  const ExperimentConfig base = small();
  CHECK(apply_axis(base, "lambda_rho", 7.0).nudging.lambda_rho == 7.0);
  CHECK(apply_axis(base, "n_cells", 64.0).grid.n_cells == 64);
  CHECK(apply_axis(base, "T", 0.25).timeline.t_assim_end == 0.25);
  const auto coupled = apply_axis(base, "lambda_rho", 8.0, SweepCoupling{2.0, true});
  CHECK(coupled.nudging.lambda_u == 16.0);
  CHECK(coupled.sampler.delta == doctest::Approx(1.0 / 16.0));
  CHECK_THROWS_AS(apply_axis(base, "viscosity", 1.0), ConfigError);
  CHECK_THROWS_AS(run_sweep(base, "mu", {1.0}), ConfigError);
}

TEST_CASE("single-point sweep matches the twin run") {
  const ExperimentConfig base = small();
  const auto sweep = run_sweep(base, "lambda_rho", {base.nudging.lambda_rho});
  REQUIRE(sweep.points.size() == 1);
  REQUIRE(sweep.points[0].report.has_value());
  const auto twin = run_twin(base);
  const auto& rep = *sweep.points[0].report;
  REQUIRE(rep.series.size() == twin.series.size());
  for (std::size_t k = 0; k < twin.series.size(); ++k) {
    CHECK(rep.series[k].rel_energy == twin.series[k].rel_energy);
  }
  CHECK(sweep.observed_runs == 1);
}

TEST_CASE("interpolation error shrinks along a delta sweep") {
  const auto sweep = run_sweep(small(), "delta", {0.2, 0.1, 0.05});
  CHECK(sweep.failures == 0);
  CHECK(sweep.observed_runs == 1);
  CHECK(sweep.interp_nonincreasing);
  CHECK(sweep.points.front().value == 0.05);
}

TEST_CASE("manufactured validation") {
  const ExperimentConfig c;
  const auto rest = validate_solver(c, ManufacturedCase{0.0, 0.0, 0.2}, {32, 64});
  for (double e : rest.l2_errors) CHECK(e <= 1e-14);
  const auto conv = validate_solver(c, ManufacturedCase{}, {32, 64, 128});
  CHECK(conv.observed_order > kMinSpatialOrder);
  CHECK(conv.observed_order < kMaxSpatialOrder);
  CHECK(conv.passed);
}

TEST_CASE("outputs round-trip and audit reproduces the verdicts") {
  for (const char* format : {"csv", "json"}) {
    ExperimentConfig c = small();
    c.output.format = format;
    std::optional<MeasurementSet> ms;
    const auto rep = run_twin(c, nullptr, &ms);
    REQUIRE(ms.has_value());
    const auto dir = fresh_dir(std::string("cda_test_twin_") + format);
    write_twin_outputs(dir, rep, &*ms);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "measurements.csv"));
    if (c.output.format == "csv") {
      const auto back = read_energy_csv(dir / "energy.csv");
      REQUIRE(back.size() == rep.series.size());
      for (std::size_t k = 0; k < back.size(); ++k) {
        CHECK(back[k].rel_energy == rep.series[k].rel_energy);
        CHECK(back[k].nudge_power_u == rep.series[k].nudge_power_u);
      }
      const auto chi = read_chi_csv(dir / "forecast_chi.csv");
      REQUIRE(chi.size() == rep.chi.size());
      CHECK(chi.back().chi0 == rep.chi.back().chi0);
    } else {
      CHECK(fs::exists(dir / "series.json"));
    }
    const auto result = audit(dir);
    CHECK(result.verdicts_match);
    CHECK(result.numbers_match);
    CHECK(result.stored == rep.analysis.verdicts);
  }
}

TEST_CASE("audit detects tampering and missing files") {
  CHECK_THROWS(audit(fresh_dir("cda_test_empty_audit")));
  const ExperimentConfig c = small();
  const auto rep = run_twin(c);
  const auto dir = fresh_dir("cda_test_tamper");
  write_twin_outputs(dir, rep, nullptr);
  auto series = read_energy_csv(dir / "energy.csv");
  for (auto& e : series) e.rel_energy *= 1.5;
  write_energy_csv(dir / "energy.csv", series);
  CHECK_FALSE(audit(dir).numbers_match);
}
