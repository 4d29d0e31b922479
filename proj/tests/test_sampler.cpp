#include <cmath>
#include <filesystem>
#include <random>

#include "cda/errors.hpp"
#include "cda/sampler.hpp"
#include "doctest.h"

using namespace cda;

namespace {

// Snapshots of theta(t, x) at grid centres, every `dt` on [t0, t1].
template <typename Rho, typename U>
ObservedTrajectory tabulate(const Grid1D& grid, double t0, double t1, int steps, Rho rho, U u) {
  ObservedTrajectory traj{grid, {}, {}};
  for (int k = 0; k <= steps; ++k) {
    const double t = t0 + (t1 - t0) * k / steps;
    FluidState s = uniform_state(grid, 1.0, 0.0, t);
    for (std::size_t j = 0; j < grid.n_cells(); ++j) {
      s.rho[j] = rho(t, grid.center(j));
      s.mom[j] = s.rho[j] * u(t, grid.center(j));
    }
    traj.snapshots.push_back(std::move(s));
  }
  traj.sup = measure_sup_bounds(traj);
  return traj;
}

template <typename F>
MeasurementSet exact_measurements(const SpaceTimeDecomposition& dec, F theta) {
  std::vector<Sample> v;
  for (const auto& y : dec.control_points) v.push_back({theta(y.t, y.x), -theta(y.t, y.x)});
  return MeasurementSet(dec, v);
}

}  // namespace

TEST_CASE("single cell when delta exceeds the cylinder diameter") {
  const auto dec = build_decomposition(std::hypot(1.0, 2.0), 1.0, 2.0, Placement::Center);
  CHECK(dec.n_cells() == 1);
  CHECK(dec.control_points[0].t == 0.5);
  CHECK(dec.control_points[0].x == 1.0);
}

TEST_CASE("delta 0.2 on the unit square gives 8 x 8 cells") {
  const auto dec = build_decomposition(0.2, 1.0, 1.0, Placement::Center);
  CHECK(dec.n_slabs() == 8);
  CHECK(dec.n_blocks() == 8);
  CHECK(dec.n_cells() == 64);
  CHECK_NOTHROW(check_decomposition(dec));
  CHECK(dec.cell_diameter(0) <= 0.2);
}

TEST_CASE("decomposition errors") {
  CHECK_THROWS_AS(build_decomposition(0.0, 1.0, 1.0, Placement::Center), DomainError);
  CHECK_THROWS_AS(build_decomposition(0.1, -1.0, 1.0, Placement::Center), DomainError);
  CHECK_THROWS_AS(build_decomposition(1e-4, 1.0, 1.0, Placement::Center, 0, 1000), CapacityError);
}

TEST_CASE("partition invariants on random configurations") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    const double T = 0.1 + 3.0 * u01(rng), L = 0.1 + 3.0 * u01(rng);
    const double delta = 0.03 + 2.0 * u01(rng);
    const auto dec = build_decomposition(delta, T, L, c % 2 ? Placement::Jittered : Placement::Center,
                                         static_cast<std::uint64_t>(c));
    REQUIRE_NOTHROW(check_decomposition(dec));
    CHECK(dec.time_breaks.front() == 0.0);
    CHECK(dec.time_breaks.back() == T);
    CHECK(dec.space_breaks.back() == L);
    for (std::size_t k = 1; k + 1 < dec.time_breaks.size(); ++k) {
      CHECK(dec.slab_of(dec.time_breaks[k]) == k);  // internal breakpoints go up
    }
    CHECK(dec.slab_of(T) == dec.n_slabs() - 1);
    CHECK(dec.block_of(L) == dec.n_blocks() - 1);
    CHECK(dec.block_of(0.0) == 0);
  }
}

TEST_CASE("jittered control points are seeded") {
  const auto a = build_decomposition(0.1, 1.0, 1.0, Placement::Jittered, 42);
  const auto b = build_decomposition(0.1, 1.0, 1.0, Placement::Jittered, 42);
  const auto c = build_decomposition(0.1, 1.0, 1.0, Placement::Jittered, 43);
  bool same = true, differ = false;
  for (std::size_t i = 0; i < a.n_cells(); ++i) {
    same = same && a.control_points[i].t == b.control_points[i].t &&
           a.control_points[i].x == b.control_points[i].x;
    differ = differ || a.control_points[i].t != c.control_points[i].t;
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("lookups outside the cylinder") {
  const auto dec = build_decomposition(0.2, 1.0, 1.0, Placement::Center);
  CHECK_THROWS_AS(dec.slab_of(-1e-12), RangeError);
  CHECK_THROWS_AS(dec.slab_of(1.0 + 1e-12), RangeError);
  CHECK_THROWS_AS(dec.block_of(2.0), RangeError);
  const auto ms = exact_measurements(dec, [](double, double) { return 1.0; });
  CHECK_THROWS_AS(interpolant_value(ms, 0.5, -0.1), RangeError);
}

TEST_CASE("measurement set validation") {
  const auto dec = build_decomposition(0.5, 1.0, 1.0, Placement::Center);
  CHECK_THROWS_AS(MeasurementSet(dec, std::vector<Sample>(dec.n_cells() - 1, {1.0, 0.0})),
                  ShapeError);
  std::vector<Sample> bad(dec.n_cells(), {1.0, 0.0});
  bad[1].r = 0.0;
  CHECK_THROWS_AS(MeasurementSet(dec, bad), DomainError);
  bad[1] = {1.0, std::nan("")};
  CHECK_THROWS_AS(MeasurementSet(dec, bad), DomainError);
}

TEST_CASE("sample examples") {
  const Grid1D grid(24, 1.0);
  auto dec = build_decomposition(0.2, 1.0, 1.0, Placement::Center);

  const auto rest = tabulate(grid, -0.5, 2.0, 10, [](double, double) { return 1.0; },
                             [](double, double) { return 0.0; });
  const auto ms_rest = sample(rest, dec);
  for (const auto& v : ms_rest.values()) {
    CHECK(v.r == 1.0);
    CHECK(v.U == 0.0);
  }

  // 8 blocks on 24 cells: every block midpoint is a cell centre
  const auto ramp = tabulate(grid, 0.0, 1.0, 16, [](double, double x) { return 1.0 + x; },
                             [](double, double) { return 0.0; });
  const auto ms = sample(ramp, dec);
  for (std::size_t c = 0; c < dec.n_cells(); ++c) {
    const std::size_t i = c % dec.n_blocks();
    CHECK(ms.values()[c].r ==
          doctest::Approx(1.0 + 0.5 * (dec.space_breaks[i] + dec.space_breaks[i + 1])).epsilon(1e-14));
  }

  // control point on a snapshot time and a cell centre: stored value exactly
  const auto single = build_decomposition(10.0, 1.0, 1.0, Placement::Center);
  const auto wave = tabulate(grid, 0.0, 1.0, 4, [](double t, double x) { return 2.0 + t * x; },
                             [](double t, double x) { return t - x; });
  const auto hit = sample(wave, single);
  CHECK(hit.values()[0].r == wave.snapshots[2].rho[12]);
  CHECK(hit.values()[0].U == wave.snapshots[2].mom[12] / wave.snapshots[2].rho[12]);

  const auto short_traj = tabulate(grid, 0.0, 0.5, 4, [](double, double) { return 1.0; },
                                   [](double, double) { return 0.0; });
  CHECK_THROWS_AS(sample(short_traj, dec), RangeError);
  CHECK_THROWS_AS(sample(rest, build_decomposition(0.2, 1.0, 2.0, Placement::Center)), ShapeError);
}

TEST_CASE("interpolant examples") {
  const auto dec = build_decomposition(0.2, 1.0, 1.0, Placement::Center);
  const auto constant = exact_measurements(dec, [](double, double) { return 3.0; });
  const auto ramp = exact_measurements(dec, [](double, double x) { return 1.0 + x; });
  const double h = 1.0 / dec.n_blocks();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double t = u01(rng), x = u01(rng);
    CHECK(interpolant_value(constant, t, x).r == 3.0);
    CHECK(std::abs(interpolant_value(ramp, t, x).r - (1.0 + x)) <= 0.5 * h + 1e-15);
  }
  for (std::size_t c = 0; c < dec.n_cells(); ++c) {
    const auto& y = dec.control_points[c];
    CHECK(interpolant_value(ramp, y.t, y.x).r == 1.0 + y.x);
  }
}

TEST_CASE("interpolant on the grid agrees with pointwise lookup") {
  const Grid1D grid(50, 1.3);
  const auto dec = build_decomposition(0.07, 0.8, 1.3, Placement::Jittered, 3);
  const auto ms = exact_measurements(dec, [](double t, double x) { return 1.0 + std::sin(x + t); });
  std::vector<double> r(grid.n_cells()), u(grid.n_cells());
  for (double t : {0.0, 0.3, dec.time_breaks[4], 0.8}) {
    interpolant_on_grid(ms, t, grid, r, u);
    for (std::size_t j = 0; j < grid.n_cells(); ++j) {
      const auto v = interpolant_value(ms, t, grid.center(j));
      CHECK(r[j] == v.r);
      CHECK(u[j] == v.U);
    }
  }
  std::vector<double> short_out(3);
  CHECK_THROWS_AS(interpolant_on_grid(ms, 0.1, grid, short_out, u), ShapeError);
}

TEST_CASE("interpolation error examples") {
  const Grid1D grid(64, 1.0);
  const auto constant = tabulate(grid, -0.1, 1.2, 26, [](double, double) { return 1.4; },
                                 [](double, double) { return 0.2; });
  const auto dec = build_decomposition(0.1, 1.0, 1.0, Placement::Jittered, 8);
  const auto e0 = interpolation_error(sample(constant, dec), constant);
  CHECK(e0.sup_err_r == 0.0);
  CHECK(e0.sup_err_U == doctest::Approx(0.0).epsilon(1e-15));

  // linear in time, so time interpolation is exact; nearest-cell sampling
  // adds at most half a cell in space
  const double lip = std::hypot(0.5, 0.3);
  auto rho = [](double t, double x) { return 2.0 + 0.5 * x + 0.3 * t; };
  const auto smooth = tabulate(grid, 0.0, 1.0, 100, rho, [](double, double) { return 0.0; });
  double prev = 1e300;
  for (double delta : {0.4, 0.2, 0.1, 0.05}) {
    const auto d = build_decomposition(delta, 1.0, 1.0, Placement::Center);
    const auto e = interpolation_error(sample(smooth, d), smooth);
    CHECK(e.sup_err_r <= lip * delta + 0.5 * 0.5 * grid.dx());
    CHECK(e.sup_err_r <= prev);
    prev = e.sup_err_r;
  }
}

TEST_CASE("linearity, monotonicity and the sup bound") {
  const Grid1D grid(40, 1.0);
  auto f1 = [](double t, double x) { return 1.0 + 0.3 * std::cos(3.0 * x) * (1.0 + t); };
  auto f2 = [](double t, double x) { return 2.0 + x * t; };
  auto zero = [](double, double) { return 0.0; };
  const auto a = tabulate(grid, 0.0, 1.0, 20, f1, zero);
  const auto b = tabulate(grid, 0.0, 1.0, 20, f2, zero);
  const auto ab = tabulate(grid, 0.0, 1.0, 20,
                           [&](double t, double x) { return 2.0 * f1(t, x) + 0.5 * f2(t, x); }, zero);
  const auto dec = build_decomposition(0.15, 1.0, 1.0, Placement::Jittered, 1);
  const auto ma = sample(a, dec), mb = sample(b, dec), mab = sample(ab, dec);
  double sup_a = 0.0;
  for (const auto& s : a.snapshots) {
    for (double r : s.rho) sup_a = std::max(sup_a, std::abs(r));
  }
  for (std::size_t c = 0; c < dec.n_cells(); ++c) {
    const double lin = 2.0 * ma.values()[c].r + 0.5 * mb.values()[c].r;
    CHECK(mab.values()[c].r == doctest::Approx(lin).epsilon(1e-14));
    CHECK(ma.values()[c].r <= mb.values()[c].r);  // f1 <= f2 everywhere
    CHECK(std::abs(ma.values()[c].r) <= sup_a);
  }
}

TEST_CASE("measurement csv round-trips bit-exactly") {
  const Grid1D grid(32, 1.7);
  auto f = [](double t, double x) { return 1.0 + 0.1 * std::sin(7.0 * x - t) / 3.0; };
  const auto traj = tabulate(grid, 0.0, 0.9, 30, f, [](double t, double x) { return t * x / 7.0; });
  const auto dec = build_decomposition(0.09, 0.9, 1.7, Placement::Jittered, 77);
  const auto ms = sample(traj, dec);
  const auto path = std::filesystem::temp_directory_path() / "cda_test_measurements.csv";
  save_measurements_csv(path, ms);
  const auto back = load_measurements_csv(path);
  const auto& d2 = back.decomposition();
  CHECK(d2.delta == dec.delta);
  CHECK(d2.time_breaks == dec.time_breaks);
  CHECK(d2.space_breaks == dec.space_breaks);
  REQUIRE(back.values().size() == ms.values().size());
  for (std::size_t c = 0; c < dec.n_cells(); ++c) {
    CHECK(d2.control_points[c].t == dec.control_points[c].t);
    CHECK(d2.control_points[c].x == dec.control_points[c].x);
    CHECK(back.values()[c].r == ms.values()[c].r);
    CHECK(back.values()[c].U == ms.values()[c].U);
  }
}
