#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace cda {

enum class Boundary { NoSlip };

/// Uniform cell-centred grid on [0, length].
class Grid1D {
 public:
  static constexpr std::size_t kMinCells = 8;

  Grid1D(std::size_t n_cells, double length, Boundary boundary = Boundary::NoSlip);

  std::size_t n_cells() const noexcept { return n_cells_; }
  double length() const noexcept { return length_; }
  double dx() const noexcept { return length_ / static_cast<double>(n_cells_); }
  Boundary boundary() const noexcept { return boundary_; }
  double center(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * dx(); }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

 private:
  std::size_t n_cells_;
  double length_;
  Boundary boundary_;
};

/// Density and momentum per cell at one instant.
struct FluidState {
  double time = 0.0;
  std::vector<double> rho;
  std::vector<double> mom;

  std::size_t size() const noexcept { return rho.size(); }
};

FluidState uniform_state(const Grid1D& grid, double rho, double velocity = 0.0, double time = 0.0);

/// Throws ShapeError on length mismatch and DomainError on non-finite entries.
void check_state(const Grid1D& grid, const FluidState& state);

/// u = m / rho; throws VacuumError if any rho <= 0.
std::vector<double> velocity(const FluidState& state);

struct DifferenceNorms {
  double l2_u_diff = 0.0;
  double linf_u_diff = 0.0;
  double h1_semi_u_diff = 0.0;  // discrete |u - U|_{H^1_0} with wall ghosts
  double h1_u_diff = 0.0;       // sqrt(l2^2 + semi^2)
  double l2_rho_diff = 0.0;
  double mass = 0.0;            // mass of `state`
};

/// Squared discrete H^1_0 seminorm of a cell field with odd wall reflection:
/// interior faces (w_{j+1}-w_j)^2/dx, each wall contributes 2 w^2/dx.
double h1_seminorm_squared(std::span<const double> w, double dx);

DifferenceNorms norms(const Grid1D& grid, const FluidState& state, const FluidState& reference);

double total_mass(const Grid1D& grid, const FluidState& state);

struct SupBounds {
  double rho_max = 0.0;  // r-bar
  double rho_min = 0.0;
  double u_max = 0.0;    // U-bar
  double g_max = 0.0;    // g-bar
};

/// Time-ordered observed run on [T-, T+]; append-only while being produced.
struct ObservedTrajectory {
  Grid1D grid;
  std::vector<FluidState> snapshots;
  SupBounds sup;

  double t_begin() const { return snapshots.front().time; }
  double t_end() const { return snapshots.back().time; }

  /// Linear interpolation in time; throws RangeError outside the stored span.
  double density_at(double t, std::size_t cell) const;
  double velocity_at(double t, std::size_t cell) const;
  FluidState state_at(double t) const;

  /// Index k with snapshots[k].time <= t <= snapshots[k+1].time.
  std::size_t bracket(double t) const;
};

/// Strictly increasing times and consistent sizes; throws ShapeError otherwise.
void check_trajectory(const ObservedTrajectory& traj);

SupBounds measure_sup_bounds(const ObservedTrajectory& traj);

/// Discrete W^{1,inf} surrogate of the initial-data norm: the infimum over
/// snapshots in [t_a, t_b] of |r|_inf + |r_x|_inf + |1/r|_inf + |U|_inf + |U_x|_inf.
double initial_data_norm_surrogate(const ObservedTrajectory& traj, double t_a, double t_b);

// Snapshot persistence. ".csv" -> text rows (x, rho, mom); anything else ->
// little-endian binary "CDAS" record.
void save_snapshot(const std::filesystem::path& path, const Grid1D& grid, const FluidState& state);
FluidState load_snapshot(const std::filesystem::path& path, const Grid1D& grid);

void save_trajectory(const std::filesystem::path& path, const ObservedTrajectory& traj);
ObservedTrajectory load_trajectory(const std::filesystem::path& path);

}  // namespace cda
