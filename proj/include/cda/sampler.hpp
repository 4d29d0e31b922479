#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cda/field.hpp"

namespace cda {

enum class Placement { Center, Jittered };

struct ControlPoint {
  double t = 0.0;
  double x = 0.0;
};

/// Uniform tensor partition of [0, T] x [0, length] into slabs x blocks,
/// every cell of space-time diameter <= delta, one control point per cell.
/// Cell (k, i) is stored at index k * n_blocks() + i.
struct SpaceTimeDecomposition {
  double delta = 0.0;
  std::vector<double> time_breaks;   // 0 = t_0 < ... < t_K = T
  std::vector<double> space_breaks;  // 0 = x_0 < ... < x_M = length
  std::vector<ControlPoint> control_points;

  std::size_t n_slabs() const noexcept { return time_breaks.size() - 1; }
  std::size_t n_blocks() const noexcept { return space_breaks.size() - 1; }
  std::size_t n_cells() const noexcept { return n_slabs() * n_blocks(); }
  double t_end() const { return time_breaks.back(); }
  double length() const { return space_breaks.back(); }

  // Internal breakpoints belong to the upper/right cell; t = T and x = length
  // belong to the last slab/block. Throws RangeError outside the cylinder.
  std::size_t slab_of(double t) const;
  std::size_t block_of(double x) const;
  std::size_t cell_of(double t, double x) const { return slab_of(t) * n_blocks() + block_of(x); }

  double cell_diameter(std::size_t cell) const;
};

inline constexpr std::size_t kDefaultMaxDecompositionCells = 4'000'000;

SpaceTimeDecomposition build_decomposition(double delta, double t_end, double length,
                                           Placement placement, std::uint64_t seed = 0,
                                           std::size_t max_cells = kDefaultMaxDecompositionCells);

/// Throws ShapeError unless the breakpoints partition the cylinder, every cell
/// respects the diameter bound and every control point lies in its cell.
void check_decomposition(const SpaceTimeDecomposition& dec);

struct Sample {
  double r = 0.0;
  double U = 0.0;
};

/// Observed values at the control points; the only observed data the nudged
/// run can see.
class MeasurementSet {
 public:
  MeasurementSet(SpaceTimeDecomposition decomposition, std::vector<Sample> values);

  const SpaceTimeDecomposition& decomposition() const noexcept { return dec_; }
  const std::vector<Sample>& values() const noexcept { return values_; }

 private:
  SpaceTimeDecomposition dec_;
  std::vector<Sample> values_;
};

/// Samples the trajectory at each control point: containing grid cell in
/// space, linear interpolation between snapshots in time.
MeasurementSet sample(const ObservedTrajectory& traj, SpaceTimeDecomposition dec);

/// I_delta[r](t, x) and I_delta[U](t, x).
Sample interpolant_value(const MeasurementSet& ms, double t, double x);

/// Evaluates the interpolant at every cell centre of `grid` at time t.
void interpolant_on_grid(const MeasurementSet& ms, double t, const Grid1D& grid,
                         std::span<double> r_out, std::span<double> u_out);

struct InterpolationError {
  double sup_err_r = 0.0;
  double sup_err_U = 0.0;
};

/// Sup of |I_delta[theta] - theta| over every snapshot time in [0, T] times
/// every grid cell centre.
InterpolationError interpolation_error(const MeasurementSet& ms, const ObservedTrajectory& traj);

void save_measurements_csv(const std::filesystem::path& path, const MeasurementSet& ms);
MeasurementSet load_measurements_csv(const std::filesystem::path& path);

}  // namespace cda
