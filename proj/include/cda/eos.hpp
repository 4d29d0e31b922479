#pragma once

#include <optional>

namespace cda {

/// Isentropic power law p(rho) = kappa * rho^gamma together with the
/// convexity constant `a` for which P - a p stays convex.
struct EquationOfState {
  double gamma = 1.4;
  double kappa = 1.0;
  double a = 0.4;

  /// Validating constructor. When `a` is omitted the default rule applies:
  /// 0.4 for gamma <= 2, otherwise 1/(2(gamma-1)) kept below 1/2.
  static EquationOfState make(double gamma, double kappa, std::optional<double> a = std::nullopt);

  static double default_convexity_constant(double gamma);
};

/// Throws DomainError unless gamma > 1, kappa > 0, 0 < a < 1/2 and
/// P - a p is convex (a <= 1/(gamma-1)).
void validate(const EquationOfState& eos);

double pressure(const EquationOfState& eos, double rho);
double pressure_derivative(const EquationOfState& eos, double rho);
double sound_speed(const EquationOfState& eos, double rho);

// P solves P'(rho) rho - P(rho) = p(rho) with P(0) = 0.
double pressure_potential(const EquationOfState& eos, double rho);
double potential_derivative(const EquationOfState& eos, double rho);

/// P(rho) - P'(ref)(rho - ref) - P(ref); requires ref > 0.
double potential_bregman(const EquationOfState& eos, double rho, double ref);

/// [P'(rho) rho - P'(rho) s] - [P(rho) - P(s)], nonnegative by convexity of P.
double fenchel_young_gap(const EquationOfState& eos, double rho, double s);

}  // namespace cda
