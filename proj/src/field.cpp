#include "cda/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "cda/errors.hpp"

namespace cda {

Grid1D::Grid1D(std::size_t n_cells, double length, Boundary boundary)
    : n_cells_(n_cells), length_(length), boundary_(boundary) {
  if (n_cells < kMinCells) {
    throw DomainError("grid: need at least " + std::to_string(kMinCells) + " cells");
  }
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw DomainError("grid: length must be positive");
  }
}

FluidState uniform_state(const Grid1D& grid, double rho, double velocity, double time) {
  FluidState s;
  s.time = time;
  s.rho.assign(grid.n_cells(), rho);
  s.mom.assign(grid.n_cells(), rho * velocity);
  return s;
}

void check_state(const Grid1D& grid, const FluidState& state) {
  if (state.rho.size() != grid.n_cells() || state.mom.size() != grid.n_cells()) {
    throw ShapeError("state size does not match grid");
  }
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (!std::isfinite(state.rho[j]) || !std::isfinite(state.mom[j])) {
      throw DomainError("state has non-finite entry at cell " + std::to_string(j));
    }
  }
}

std::vector<double> velocity(const FluidState& state) {
  if (state.mom.size() != state.rho.size()) throw ShapeError("velocity: rho/mom size mismatch");
  std::vector<double> u(state.size());
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (!(state.rho[j] > 0.0)) throw VacuumError(j, state.rho[j], state.time);
    u[j] = state.mom[j] / state.rho[j];
  }
  return u;
}

double h1_seminorm_squared(std::span<const double> w, double dx) {
  if (w.empty()) return 0.0;
  double s = 2.0 * w.front() * w.front() + 2.0 * w.back() * w.back();
  for (std::size_t j = 0; j + 1 < w.size(); ++j) {
    const double d = w[j + 1] - w[j];
    s += d * d;
  }
  return s / dx;
}

DifferenceNorms norms(const Grid1D& grid, const FluidState& state, const FluidState& reference) {
  check_state(grid, state);
  check_state(grid, reference);
  const auto u = velocity(state);
  const auto U = velocity(reference);
  const double dx = grid.dx();
  std::vector<double> du(u.size());
  DifferenceNorms out;
  double l2 = 0.0, l2r = 0.0, mass = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    du[j] = u[j] - U[j];
    l2 += du[j] * du[j];
    const double dr = state.rho[j] - reference.rho[j];
    l2r += dr * dr;
    mass += state.rho[j];
    out.linf_u_diff = std::max(out.linf_u_diff, std::abs(du[j]));
  }
  out.l2_u_diff = std::sqrt(dx * l2);
  out.l2_rho_diff = std::sqrt(dx * l2r);
  out.mass = dx * mass;
  const double semi2 = h1_seminorm_squared(du, dx);
  out.h1_semi_u_diff = std::sqrt(semi2);
  out.h1_u_diff = std::sqrt(dx * l2 + semi2);
  return out;
}

double total_mass(const Grid1D& grid, const FluidState& state) {
  double s = 0.0;
  for (double r : state.rho) s += r;
  return grid.dx() * s;
}

// --- trajectory -----------------------------------------------------------

std::size_t ObservedTrajectory::bracket(double t) const {
  if (snapshots.empty()) throw RangeError("empty trajectory");
  if (!(t >= t_begin() && t <= t_end())) {
    throw RangeError("time " + std::to_string(t) + " outside trajectory [" +
                     std::to_string(t_begin()) + ", " + std::to_string(t_end()) + "]");
  }
  if (snapshots.size() == 1) return 0;
  auto it = std::upper_bound(snapshots.begin(), snapshots.end(), t,
                             [](double v, const FluidState& s) { return v < s.time; });
  auto k = static_cast<std::size_t>(std::distance(snapshots.begin(), it));
  if (k == 0) return 0;
  return std::min(k - 1, snapshots.size() - 2);
}

namespace {

template <typename F>
double interpolate_in_time(const ObservedTrajectory& traj, double t, F&& value) {
  const std::size_t k = traj.bracket(t);
  if (traj.snapshots.size() == 1) return value(traj.snapshots[0]);
  const FluidState& a = traj.snapshots[k];
  const FluidState& b = traj.snapshots[k + 1];
  if (t == a.time) return value(a);
  if (t == b.time) return value(b);
  const double w = (t - a.time) / (b.time - a.time);
  const double va = value(a);
  return va + (value(b) - va) * w;
}

}  // namespace

double ObservedTrajectory::density_at(double t, std::size_t cell) const {
  return interpolate_in_time(*this, t, [cell](const FluidState& s) { return s.rho[cell]; });
}

double ObservedTrajectory::velocity_at(double t, std::size_t cell) const {
  return interpolate_in_time(*this, t,
                             [cell](const FluidState& s) { return s.mom[cell] / s.rho[cell]; });
}

FluidState ObservedTrajectory::state_at(double t) const {
  const std::size_t k = bracket(t);
  if (snapshots[k].time == t) return snapshots[k];
  if (k + 1 < snapshots.size() && snapshots[k + 1].time == t) return snapshots[k + 1];
  const FluidState& a = snapshots[k];
  const FluidState& b = snapshots[k + 1];
  const double w = (t - a.time) / (b.time - a.time);
  FluidState s;
  s.time = t;
  s.rho.resize(a.size());
  s.mom.resize(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    s.rho[j] = a.rho[j] + (b.rho[j] - a.rho[j]) * w;
    s.mom[j] = a.mom[j] + (b.mom[j] - a.mom[j]) * w;
  }
  return s;
}

void check_trajectory(const ObservedTrajectory& traj) {
  if (traj.snapshots.empty()) throw ShapeError("trajectory has no snapshots");
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    check_state(traj.grid, traj.snapshots[k]);
    if (k > 0 && !(traj.snapshots[k].time > traj.snapshots[k - 1].time)) {
      throw ShapeError("trajectory snapshot times must be strictly increasing");
    }
  }
}

SupBounds measure_sup_bounds(const ObservedTrajectory& traj) {
  SupBounds b;
  b.rho_min = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.snapshots) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      b.rho_max = std::max(b.rho_max, s.rho[j]);
      b.rho_min = std::min(b.rho_min, s.rho[j]);
      b.u_max = std::max(b.u_max, std::abs(s.mom[j] / s.rho[j]));
    }
  }
  b.g_max = traj.sup.g_max;
  return b;
}

double initial_data_norm_surrogate(const ObservedTrajectory& traj, double t_a, double t_b) {
  const double dx = traj.grid.dx();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.snapshots) {
    if (s.time < t_a || s.time > t_b) continue;
    const auto u = velocity(s);
    double r_inf = 0, rx_inf = 0, rinv_inf = 0, u_inf = 0, ux_inf = 0;
    const std::size_t n = s.size();
    for (std::size_t j = 0; j < n; ++j) {
      r_inf = std::max(r_inf, s.rho[j]);
      rinv_inf = std::max(rinv_inf, 1.0 / s.rho[j]);
      u_inf = std::max(u_inf, std::abs(u[j]));
      if (j + 1 < n) {
        rx_inf = std::max(rx_inf, std::abs(s.rho[j + 1] - s.rho[j]) / dx);
        ux_inf = std::max(ux_inf, std::abs(u[j + 1] - u[j]) / dx);
      }
    }
    // wall faces: u vanishes half a cell away
    ux_inf = std::max({ux_inf, 2.0 * std::abs(u.front()) / dx, 2.0 * std::abs(u.back()) / dx});
    best = std::min(best, r_inf + rx_inf + rinv_inf + u_inf + ux_inf);
  }
  if (!std::isfinite(best)) throw RangeError("no snapshot inside the requested window");
  return best;
}

// --- persistence -----------------------------------------------------------

namespace {

constexpr char kSnapshotMagic[4] = {'C', 'D', 'A', 'S'};
constexpr char kTrajectoryMagic[4] = {'C', 'D', 'A', 'T'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("unexpected end of binary file");
  return to_little(v);
}

void write_fields(std::ostream& os, const FluidState& s) {
  write_le<double>(os, s.time);
  for (double v : s.rho) write_le<double>(os, v);
  for (double v : s.mom) write_le<double>(os, v);
}

FluidState read_fields(std::istream& is, std::size_t n) {
  FluidState s;
  s.time = read_le<double>(is);
  s.rho.resize(n);
  s.mom.resize(n);
  for (auto& v : s.rho) v = read_le<double>(is);
  for (auto& v : s.mom) v = read_le<double>(is);
  return s;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_snapshot(const std::filesystem::path& path, const Grid1D& grid, const FluidState& state) {
  check_state(grid, state);
  if (path.extension() == ".csv") {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string());
    os << "# time=" << fmt17(state.time) << " length=" << fmt17(grid.length()) << "\n";
    os << "x,rho,mom\n";
    for (std::size_t j = 0; j < state.size(); ++j) {
      os << fmt17(grid.center(j)) << ',' << fmt17(state.rho[j]) << ',' << fmt17(state.mom[j])
         << '\n';
    }
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os.write(kSnapshotMagic, 4);
  write_le<std::uint64_t>(os, grid.n_cells());
  write_le<double>(os, grid.length());
  write_fields(os, state);
}

FluidState load_snapshot(const std::filesystem::path& path, const Grid1D& grid) {
  FluidState s;
  if (path.extension() == ".csv") {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(is, line);
    const auto pos = line.find("time=");
    if (line.rfind("#", 0) != 0 || pos == std::string::npos) {
      throw IoError("snapshot csv: missing '# time=' header");
    }
    s.time = std::stod(line.substr(pos + 5));
    std::getline(is, line);  // column header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      double x, r, m;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &r, &m) != 3) {
        throw IoError("snapshot csv: malformed row '" + line + "'");
      }
      s.rho.push_back(r);
      s.mom.push_back(m);
    }
  } else {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kSnapshotMagic, 4) != 0) throw IoError("not a snapshot file");
    const auto n = read_le<std::uint64_t>(is);
    const double length = read_le<double>(is);
    if (n != grid.n_cells() || length != grid.length()) {
      throw ShapeError("snapshot grid does not match");
    }
    s = read_fields(is, n);
  }
  check_state(grid, s);
  return s;
}

void save_trajectory(const std::filesystem::path& path, const ObservedTrajectory& traj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os.write(kTrajectoryMagic, 4);
  write_le<std::uint64_t>(os, traj.grid.n_cells());
  write_le<double>(os, traj.grid.length());
  write_le<double>(os, traj.sup.rho_max);
  write_le<double>(os, traj.sup.rho_min);
  write_le<double>(os, traj.sup.u_max);
  write_le<double>(os, traj.sup.g_max);
  write_le<std::uint64_t>(os, traj.snapshots.size());
  for (const auto& s : traj.snapshots) write_fields(os, s);
}

ObservedTrajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kTrajectoryMagic, 4) != 0) throw IoError("not a trajectory file");
  const auto n = read_le<std::uint64_t>(is);
  const double length = read_le<double>(is);
  ObservedTrajectory traj{Grid1D(n, length), {}, {}};
  traj.sup.rho_max = read_le<double>(is);
  traj.sup.rho_min = read_le<double>(is);
  traj.sup.u_max = read_le<double>(is);
  traj.sup.g_max = read_le<double>(is);
  const auto count = read_le<std::uint64_t>(is);
  traj.snapshots.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) traj.snapshots.push_back(read_fields(is, n));
  check_trajectory(traj);
  return traj;
}

}  // namespace cda
