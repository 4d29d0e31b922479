#include "cda/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "cda/errors.hpp"

namespace cda {

namespace {

std::size_t interval_of(const std::vector<double>& breaks, double v, const char* axis) {
  if (!(v >= breaks.front() && v <= breaks.back())) {
    throw RangeError(std::string(axis) + " coordinate " + std::to_string(v) +
                     " outside the decomposition");
  }
  auto it = std::upper_bound(breaks.begin(), breaks.end(), v);
  auto idx = static_cast<std::size_t>(std::distance(breaks.begin(), it));
  return std::min(idx, breaks.size() - 1) - 1;
}

std::vector<double> uniform_breaks(double extent, std::size_t count) {
  std::vector<double> b(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    b[k] = extent * static_cast<double>(k) / static_cast<double>(count);
  }
  b.back() = extent;
  return b;
}

}  // namespace

std::size_t SpaceTimeDecomposition::slab_of(double t) const {
  return interval_of(time_breaks, t, "time");
}

std::size_t SpaceTimeDecomposition::block_of(double x) const {
  return interval_of(space_breaks, x, "space");
}

double SpaceTimeDecomposition::cell_diameter(std::size_t cell) const {
  const std::size_t k = cell / n_blocks();
  const std::size_t i = cell % n_blocks();
  return std::hypot(time_breaks[k + 1] - time_breaks[k], space_breaks[i + 1] - space_breaks[i]);
}

SpaceTimeDecomposition build_decomposition(double delta, double t_end, double length,
                                           Placement placement, std::uint64_t seed,
                                           std::size_t max_cells) {
  if (!(delta > 0.0) || !(t_end > 0.0) || !(length > 0.0)) {
    throw DomainError("decomposition: delta, T and length must be positive");
  }
  std::size_t slabs = 1, blocks = 1;
  if (std::hypot(t_end, length) > delta) {
    const double side = delta / std::sqrt(2.0);
    const double k = std::ceil(t_end / side);
    const double m = std::ceil(length / side);
    if (k * m > static_cast<double>(max_cells)) {
      throw CapacityError("decomposition: " + std::to_string(k * m) + " cells exceed the cap of " +
                          std::to_string(max_cells));
    }
    slabs = static_cast<std::size_t>(k);
    blocks = static_cast<std::size_t>(m);
    // rounding in the breakpoints may push a diameter one ulp past delta
    while (std::hypot(t_end / static_cast<double>(slabs), length / static_cast<double>(blocks)) >
           delta) {
      ++slabs;
      ++blocks;
    }
    if (slabs * blocks > max_cells) throw CapacityError("decomposition: cell cap exceeded");
  }

  SpaceTimeDecomposition dec;
  dec.delta = delta;
  dec.time_breaks = uniform_breaks(t_end, slabs);
  dec.space_breaks = uniform_breaks(length, blocks);
  dec.control_points.resize(slabs * blocks);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < slabs; ++k) {
    const double t0 = dec.time_breaks[k], t1 = dec.time_breaks[k + 1];
    for (std::size_t i = 0; i < blocks; ++i) {
      const double x0 = dec.space_breaks[i], x1 = dec.space_breaks[i + 1];
      ControlPoint& y = dec.control_points[k * blocks + i];
      if (placement == Placement::Center) {
        y = {0.5 * (t0 + t1), 0.5 * (x0 + x1)};
      } else {
        y = {t0 + unit(rng) * (t1 - t0), x0 + unit(rng) * (x1 - x0)};
      }
    }
  }
  return dec;
}

void check_decomposition(const SpaceTimeDecomposition& dec) {
  auto check_breaks = [](const std::vector<double>& b, const char* axis) {
    if (b.size() < 2 || b.front() != 0.0) {
      throw ShapeError(std::string(axis) + " breakpoints must start at 0");
    }
    for (std::size_t k = 1; k < b.size(); ++k) {
      if (!(b[k] > b[k - 1])) throw ShapeError(std::string(axis) + " breakpoints not increasing");
    }
  };
  check_breaks(dec.time_breaks, "time");
  check_breaks(dec.space_breaks, "space");
  if (dec.control_points.size() != dec.n_cells()) {
    throw ShapeError("one control point per cell required");
  }
  for (std::size_t c = 0; c < dec.n_cells(); ++c) {
    if (dec.cell_diameter(c) > dec.delta) {
      throw ShapeError("cell " + std::to_string(c) + " exceeds the diameter bound");
    }
    const std::size_t k = c / dec.n_blocks(), i = c % dec.n_blocks();
    const auto& y = dec.control_points[c];
    if (!(y.t >= dec.time_breaks[k] && y.t <= dec.time_breaks[k + 1] &&
          y.x >= dec.space_breaks[i] && y.x <= dec.space_breaks[i + 1])) {
      throw ShapeError("control point outside its cell " + std::to_string(c));
    }
  }
}

MeasurementSet::MeasurementSet(SpaceTimeDecomposition decomposition, std::vector<Sample> values)
    : dec_(std::move(decomposition)), values_(std::move(values)) {
  check_decomposition(dec_);
  if (values_.size() != dec_.n_cells()) throw ShapeError("one sample per cell required");
  for (const auto& v : values_) {
    if (!std::isfinite(v.r) || !std::isfinite(v.U) || !(v.r > 0.0)) {
      throw DomainError("samples must be finite with positive density");
    }
  }
}

MeasurementSet sample(const ObservedTrajectory& traj, SpaceTimeDecomposition dec) {
  if (dec.length() != traj.grid.length()) {
    throw ShapeError("decomposition length does not match the observed grid");
  }
  const double dx = traj.grid.dx();
  const std::size_t n = traj.grid.n_cells();
  std::vector<Sample> values(dec.n_cells());
  for (std::size_t c = 0; c < dec.n_cells(); ++c) {
    const auto& y = dec.control_points[c];
    const auto j = std::min(static_cast<std::size_t>(std::floor(y.x / dx)), n - 1);
    values[c] = {traj.density_at(y.t, j), traj.velocity_at(y.t, j)};
  }
  return MeasurementSet(std::move(dec), std::move(values));
}

Sample interpolant_value(const MeasurementSet& ms, double t, double x) {
  return ms.values()[ms.decomposition().cell_of(t, x)];
}

void interpolant_on_grid(const MeasurementSet& ms, double t, const Grid1D& grid,
                         std::span<double> r_out, std::span<double> u_out) {
  const auto& dec = ms.decomposition();
  if (r_out.size() != grid.n_cells() || u_out.size() != grid.n_cells()) {
    throw ShapeError("interpolant_on_grid: output size mismatch");
  }
  if (dec.length() != grid.length()) throw ShapeError("interpolant_on_grid: length mismatch");
  const std::size_t base = dec.slab_of(t) * dec.n_blocks();
  const auto& vals = ms.values();
  // cell centres are increasing, so walk the blocks monotonically
  std::size_t i = 0;
  const std::size_t m = dec.n_blocks();
  for (std::size_t j = 0; j < grid.n_cells(); ++j) {
    const double x = grid.center(j);
    while (i + 1 < m && x >= dec.space_breaks[i + 1]) ++i;
    r_out[j] = vals[base + i].r;
    u_out[j] = vals[base + i].U;
  }
}

InterpolationError interpolation_error(const MeasurementSet& ms, const ObservedTrajectory& traj) {
  const auto& dec = ms.decomposition();
  const std::size_t n = traj.grid.n_cells();
  std::vector<double> ir(n), iu(n);
  InterpolationError err;
  for (const auto& s : traj.snapshots) {
    if (s.time < 0.0 || s.time > dec.t_end()) continue;
    interpolant_on_grid(ms, s.time, traj.grid, ir, iu);
    for (std::size_t j = 0; j < n; ++j) {
      err.sup_err_r = std::max(err.sup_err_r, std::abs(ir[j] - s.rho[j]));
      err.sup_err_U = std::max(err.sup_err_U, std::abs(iu[j] - s.mom[j] / s.rho[j]));
    }
  }
  return err;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_measurements_csv(const std::filesystem::path& path, const MeasurementSet& ms) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  const auto& dec = ms.decomposition();
  os << "# delta=" << fmt17(dec.delta) << "\n";
  os << "t_lo,t_hi,x_lo,x_hi,t_star,x_star,r_sample,U_sample\n";
  for (std::size_t c = 0; c < dec.n_cells(); ++c) {
    const std::size_t k = c / dec.n_blocks(), i = c % dec.n_blocks();
    const auto& y = dec.control_points[c];
    const auto& v = ms.values()[c];
    os << fmt17(dec.time_breaks[k]) << ',' << fmt17(dec.time_breaks[k + 1]) << ','
       << fmt17(dec.space_breaks[i]) << ',' << fmt17(dec.space_breaks[i + 1]) << ','
       << fmt17(y.t) << ',' << fmt17(y.x) << ',' << fmt17(v.r) << ',' << fmt17(v.U) << '\n';
  }
}

MeasurementSet load_measurements_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  SpaceTimeDecomposition dec;
  std::getline(is, line);
  const auto pos = line.find("delta=");
  if (line.rfind("#", 0) != 0 || pos == std::string::npos) {
    throw IoError("measurement csv: missing '# delta=' header");
  }
  dec.delta = std::stod(line.substr(pos + 6));
  std::getline(is, line);
  struct Row {
    double t_lo, t_hi, x_lo, x_hi, ts, xs, r, u;
  };
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Row w{};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &w.t_lo, &w.t_hi, &w.x_lo,
                    &w.x_hi, &w.ts, &w.xs, &w.r, &w.u) != 8) {
      throw IoError("measurement csv: malformed row '" + line + "'");
    }
    rows.push_back(w);
  }
  if (rows.empty()) throw IoError("measurement csv: no rows");
  for (const auto& w : rows) {
    if (w.t_lo == 0.0) {
      if (dec.space_breaks.empty()) dec.space_breaks.push_back(w.x_lo);
      dec.space_breaks.push_back(w.x_hi);
    }
    if (w.x_lo == 0.0) {
      if (dec.time_breaks.empty()) dec.time_breaks.push_back(w.t_lo);
      dec.time_breaks.push_back(w.t_hi);
    }
  }
  if (dec.n_cells() != rows.size()) throw IoError("measurement csv: rows do not form a tensor grid");
  std::vector<Sample> values;
  values.reserve(rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const std::size_t k = c / dec.n_blocks(), i = c % dec.n_blocks();
    const auto& w = rows[c];
    if (w.t_lo != dec.time_breaks[k] || w.x_lo != dec.space_breaks[i]) {
      throw IoError("measurement csv: rows out of order at " + std::to_string(c));
    }
    dec.control_points.push_back({w.ts, w.xs});
    values.push_back({w.r, w.u});
  }
  return MeasurementSet(std::move(dec), std::move(values));
}

}  // namespace cda
