#include "cda/eos.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cda/errors.hpp"

namespace cda {

namespace {

void require_density(double rho, const char* what) {
  if (!std::isfinite(rho) || rho < 0.0) {
    throw DomainError(std::string(what) + ": density must be finite and >= 0, got " +
                      std::to_string(rho));
  }
}

void require_positive_density(double rho, const char* what) {
  if (!std::isfinite(rho) || rho <= 0.0) {
    throw DomainError(std::string(what) + ": density must be finite and > 0, got " +
                      std::to_string(rho));
  }
}

}  // namespace

double EquationOfState::default_convexity_constant(double gamma) {
  if (gamma <= 2.0) return 0.4;
  return std::min(1.0 / (2.0 * (gamma - 1.0)), 0.49);
}

EquationOfState EquationOfState::make(double gamma, double kappa, std::optional<double> a) {
  EquationOfState eos{gamma, kappa, a.value_or(default_convexity_constant(gamma))};
  validate(eos);
  return eos;
}

void validate(const EquationOfState& eos) {
  if (!(eos.gamma > 1.0) || !std::isfinite(eos.gamma)) {
    throw DomainError("eos: gamma must exceed 1");
  }
  if (!(eos.kappa > 0.0) || !std::isfinite(eos.kappa)) {
    throw DomainError("eos: kappa must be positive");
  }
  if (!(eos.a > 0.0 && eos.a < 0.5)) {
    throw DomainError("eos: convexity constant a must lie in (0, 1/2)");
  }
  // P - a p = kappa rho^gamma (1/(gamma-1) - a) is convex iff the bracket is >= 0.
  if (eos.a > 1.0 / (eos.gamma - 1.0)) {
    throw DomainError("eos: P - a p is not convex for this (gamma, a)");
  }
}

double pressure(const EquationOfState& eos, double rho) {
  require_density(rho, "pressure");
  return eos.kappa * std::pow(rho, eos.gamma);
}

double pressure_derivative(const EquationOfState& eos, double rho) {
  require_density(rho, "pressure_derivative");
  return eos.kappa * eos.gamma * std::pow(rho, eos.gamma - 1.0);
}

double sound_speed(const EquationOfState& eos, double rho) {
  return std::sqrt(pressure_derivative(eos, rho));
}

double pressure_potential(const EquationOfState& eos, double rho) {
  require_density(rho, "pressure_potential");
  return eos.kappa * std::pow(rho, eos.gamma) / (eos.gamma - 1.0);
}

double potential_derivative(const EquationOfState& eos, double rho) {
  require_positive_density(rho, "potential_derivative");
  return eos.kappa * eos.gamma / (eos.gamma - 1.0) * std::pow(rho, eos.gamma - 1.0);
}

double potential_bregman(const EquationOfState& eos, double rho, double ref) {
  require_density(rho, "potential_bregman");
  require_positive_density(ref, "potential_bregman reference");
  const double value = pressure_potential(eos, rho) -
                       potential_derivative(eos, ref) * (rho - ref) -
                       pressure_potential(eos, ref);
  return std::max(value, 0.0);
}

double fenchel_young_gap(const EquationOfState& eos, double rho, double s) {
  require_positive_density(rho, "fenchel_young_gap");
  require_density(s, "fenchel_young_gap");
  const double dP = potential_derivative(eos, rho);
  return (dP * rho - dP * s) - (pressure_potential(eos, rho) - pressure_potential(eos, s));
}

}  // namespace cda
