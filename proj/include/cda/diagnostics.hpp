#pragma once

#include <limits>
#include <span>
#include <vector>

#include "cda/dynamics.hpp"
#include "cda/eos.hpp"
#include "cda/field.hpp"
#include "cda/sampler.hpp"

namespace cda {

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

/// E(rho, m): m^2/(2 rho) + P(rho) for rho > 0, 0 at (0, 0), infinite otherwise.
double total_energy_density(const EquationOfState& eos, double rho, double mom);
double total_energy(const Grid1D& grid, const EquationOfState& eos, const FluidState& state);

/// rho |u - U|^2 / 2 + P(rho) - P'(r)(rho - r) - P(r).
double relative_energy_density(const EquationOfState& eos, double rho, double u, double r, double U);
/// Cell sum of the relative energy density times dx; observed density must be > 0.
double relative_energy(const Grid1D& grid, const EquationOfState& eos, const FluidState& state,
                       const FluidState& observed);

struct EnergyReport {
  double time = 0.0;
  double total_energy = 0.0;
  double rel_energy = 0.0;
  double dissipation = 0.0;  // nu_eff |u - U|^2_{H^1_0}
  double l2_u_diff = 0.0;
  double mass = 0.0;
  double nudge_power_rho = 0.0;  // energy input of the density nudging term
  double nudge_power_u = 0.0;    // energy input of the momentum nudging term
};

/// `ms` may be null when no nudging is in effect; powers are zero outside the window.
EnergyReport energy_report(const Model& model, const FluidState& state, const FluidState& observed,
                           const MeasurementSet* ms, const NudgingConfig& cfg);

/// Terms of the formal energy balance of the synchronized system at one instant.
struct BudgetTerms {
  double total_energy = 0.0;
  double dissipation = 0.0;    // nu_eff |u|^2_{H^1_0}
  double forcing_power = 0.0;  // int rho g u
  double sinks = 0.0;          // nudging sinks after the Fenchel-Young step
  double sources = 0.0;        // Lambda_u int (1 + rho) I[U] u
  double nudging_power = 0.0;  // exact energy input of both nudging terms
  double fy_slack = 0.0;       // int P'(rho)(rho - I[r]) - (P(rho) - P(I[r])) >= 0
};

/// `targets` holds I[r] and I[U] on the grid; pass empty spans to disable nudging.
BudgetTerms budget_terms(const Model& model, const FluidState& state, double t,
                         std::span<const double> target_r, std::span<const double> target_u,
                         const NudgingConfig& cfg);

struct BalanceResidual {
  double t_mid = 0.0;
  double residual_inequality = 0.0;  // should be <= discretisation error
  double residual_exact = 0.0;       // should be ~ discretisation error in magnitude
  double fy_slack = 0.0;
};

/// Residuals of the energy balance on consecutive, uniformly spaced states.
/// Nudging terms are switched on for intervals inside [0, window_end].
std::vector<BalanceResidual> energy_balance_residual(std::span<const FluidState> states,
                                                     const Model& model, const MeasurementSet* ms,
                                                     const NudgingConfig& cfg);

/// (E(after) - E(before))/dt + trapezoidal dissipation - forcing power for one
/// un-nudged step.
double energy_step_residual(const Model& model, const FluidState& before, const FluidState& after,
                            double dt);

struct DecayFit {
  double rate = 0.0;
  double floor = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  double lambda_rho = 0.0;
};

/// Fits RE(t) ~ floor + A exp(-rate t): log(RE - floor) is regressed
/// linearly on t over the leading run of samples above 2 floor, and the floor is
/// chosen by golden-section search on the log-space misfit of the full model.
/// Requires >= 10 samples with RE > 0.
DecayFit fit_decay(std::span<const double> t, std::span<const double> re, double lambda_rho);

/// Smallest G >= 1 with RE(t) <= [2/Lambda_rho + exp(-Lambda_rho t / 2)] G on the samples.
double calibrate_decay_constant(std::span<const double> t, std::span<const double> re,
                                double lambda_rho);

struct GainConditionReport {
  bool gain_ordering = false;  // Lambda_u >= 2 Lambda_rho
  bool gain_ratio = false;     // Lambda_u >= G Lambda_rho
  bool mesh = false;           // delta Lambda_u G <= 1
  double mesh_product = 0.0;
  double floor_estimate = 0.0;  // [1/Lambda_rho + exp(-Lambda_rho T)] G
  double epsilon = 0.0;
  bool floor_below_epsilon = false;

  bool all() const noexcept { return gain_ordering && gain_ratio && mesh; }
};

/// Throws DomainError if gamma_cal < 1.
GainConditionReport check_gain_conditions(const NudgingConfig& cfg, double delta, double gamma_cal,
                                          double epsilon = 1.0);

/// Uncalibrated forecast growth surrogate from the observed state:
/// 1 + |U_x|_inf + |nu U_xx / r + g|_{L^3}^2.
double chi_surrogate(const Model& model, const FluidState& observed, double t);

struct ForecastEnvelope {
  bool trivially_satisfied = false;  // RE(T) == 0
  double gamma_hat = 0.0;            // smallest calibration making the envelope hold
  double gamma_bound = 0.0;
  bool holds = false;                // gamma_hat <= gamma_bound
  double growth = 0.0;               // RE(T+)/RE(T)
};

/// Checks RE(tau) <= exp(2 G int_T^tau chi0) RE(T) over the forecast samples,
/// which must start at T.
ForecastEnvelope forecast_envelope(std::span<const double> t, std::span<const double> re,
                                   std::span<const double> chi0, double gamma_bound);

}  // namespace cda
