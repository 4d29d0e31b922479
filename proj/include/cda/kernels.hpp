#pragma once

#include <cstddef>
#include <span>

// Per-cell tendency of the 1D barotropic Navier-Stokes operator on a
// no-slip interval. Two implementations share one stencil: a serial
// reference and an OpenMP one. They must agree bit for bit.
namespace cda::kernels {

struct StencilParams {
  double dx = 0.0;
  double gamma = 1.4;
  double kappa = 1.0;
  double nu = 0.0;  // 4 mu / 3 + lambda
};

struct Fields {
  std::span<const double> rho;
  std::span<const double> mom;
  std::span<const double> g;  // forcing acceleration per cell
};

struct Tendency {
  std::span<double> d_rho;
  std::span<double> d_mom;
};

// Below this size the OpenMP version runs on the calling thread.
inline constexpr std::size_t kParallelThreshold = 4096;

void tendency_serial(const StencilParams& p, Fields in, Tendency out);
void tendency_parallel(const StencilParams& p, Fields in, Tendency out);

/// min(dx / max(|u| + c), dx^2 min(rho) / (2 nu)); no safety factor applied.
double stable_dt_serial(const StencilParams& p, std::span<const double> rho,
                        std::span<const double> mom);
double stable_dt_parallel(const StencilParams& p, std::span<const double> rho,
                          std::span<const double> mom);

}  // namespace cda::kernels
