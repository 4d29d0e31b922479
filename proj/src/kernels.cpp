#include "cda/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cda::kernels {

namespace {

// Momentum flux m^2/rho + p and velocity m/rho for cell j.
inline void cell_flux(const StencilParams& p, double rho, double mom, double& u, double& flux) {
  u = mom / rho;
  flux = mom * u + p.kappa * std::pow(rho, p.gamma);
}

// Stencil for cell j given velocity and flux arrays of length n >= 3.
//   mass:     central difference, odd wall reflection of m (zero wall flux)
//   momentum: central difference of the flux, second-order one-sided at walls
//             (in difference form, so a constant flux gives exactly zero)
//   viscous:  3-point Laplacian of u with odd wall reflection
inline void cell_tendency(const StencilParams& p, std::size_t j, std::size_t n, const double* mom,
                          const double* u, const double* flux, const double* rho, const double* g,
                          double& d_rho, double& d_mom) {
  const double inv2dx = 0.5 / p.dx;
  const double invdx2 = 1.0 / (p.dx * p.dx);
  const double m_left = j == 0 ? -mom[0] : mom[j - 1];
  const double m_right = j + 1 == n ? -mom[n - 1] : mom[j + 1];
  const double u_left = j == 0 ? -u[0] : u[j - 1];
  const double u_right = j + 1 == n ? -u[n - 1] : u[j + 1];

  double dflux;
  if (j == 0) {
    dflux = (4.0 * (flux[1] - flux[0]) - (flux[2] - flux[0])) * inv2dx;
  } else if (j + 1 == n) {
    dflux = (4.0 * (flux[n - 1] - flux[n - 2]) - (flux[n - 1] - flux[n - 3])) * inv2dx;
  } else {
    dflux = (flux[j + 1] - flux[j - 1]) * inv2dx;
  }
  d_rho = -(m_right - m_left) * inv2dx;
  d_mom = -dflux + p.nu * (u_right - 2.0 * u[j] + u_left) * invdx2 + rho[j] * g[j];
}

}  // namespace

void tendency_serial(const StencilParams& p, Fields in, Tendency out) {
  const std::size_t n = in.rho.size();
  std::vector<double> u(n), flux(n);
  for (std::size_t j = 0; j < n; ++j) cell_flux(p, in.rho[j], in.mom[j], u[j], flux[j]);
  for (std::size_t j = 0; j < n; ++j) {
    cell_tendency(p, j, n, in.mom.data(), u.data(), flux.data(), in.rho.data(), in.g.data(),
                  out.d_rho[j], out.d_mom[j]);
  }
}

void tendency_parallel(const StencilParams& p, Fields in, Tendency out) {
  const std::size_t n = in.rho.size();
  std::vector<double> u(n), flux(n);
  const auto nn = static_cast<long>(n);
  const bool par = n >= kParallelThreshold;
#pragma omp parallel if (par)
  {
#pragma omp for schedule(static)
    for (long j = 0; j < nn; ++j) {
      cell_flux(p, in.rho[j], in.mom[j], u[j], flux[j]);
    }
#pragma omp for schedule(static)
    for (long j = 0; j < nn; ++j) {
      cell_tendency(p, static_cast<std::size_t>(j), n, in.mom.data(), u.data(), flux.data(),
                    in.rho.data(), in.g.data(), out.d_rho[j], out.d_mom[j]);
    }
  }
}

namespace {

inline double wave_speed(const StencilParams& p, double rho, double mom) {
  return std::abs(mom / rho) + std::sqrt(p.kappa * p.gamma * std::pow(rho, p.gamma - 1.0));
}

double combine(const StencilParams& p, double max_speed, double min_rho) {
  double dt = std::numeric_limits<double>::infinity();
  if (max_speed > 0.0) dt = p.dx / max_speed;
  if (p.nu > 0.0) dt = std::min(dt, p.dx * p.dx * min_rho / (2.0 * p.nu));
  return dt;
}

}  // namespace

double stable_dt_serial(const StencilParams& p, std::span<const double> rho,
                        std::span<const double> mom) {
  double max_speed = 0.0, min_rho = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < rho.size(); ++j) {
    max_speed = std::max(max_speed, wave_speed(p, rho[j], mom[j]));
    min_rho = std::min(min_rho, rho[j]);
  }
  return combine(p, max_speed, min_rho);
}

double stable_dt_parallel(const StencilParams& p, std::span<const double> rho,
                          std::span<const double> mom) {
  double max_speed = 0.0, min_rho = std::numeric_limits<double>::infinity();
  const auto nn = static_cast<long>(rho.size());
  // max/min reductions are order independent, so this matches the serial result
#pragma omp parallel for schedule(static) reduction(max : max_speed) reduction(min : min_rho) \
    if (rho.size() >= kParallelThreshold)
  for (long j = 0; j < nn; ++j) {
    max_speed = std::max(max_speed, wave_speed(p, rho[j], mom[j]));
    min_rho = std::min(min_rho, rho[j]);
  }
  return combine(p, max_speed, min_rho);
}

}  // namespace cda::kernels
