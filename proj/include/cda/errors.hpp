#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cda {

// All library failures derive from Error so callers can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Density at or below the vacuum floor; `cell` is the first offending index.
class VacuumError : public Error {
 public:
  VacuumError(std::size_t cell, double rho, double time)
      : Error("vacuum at cell " + std::to_string(cell) + " (rho=" + std::to_string(rho) +
              ", t=" + std::to_string(time) + ")"),
        cell_(cell),
        time_(time) {}
  std::size_t cell() const noexcept { return cell_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t cell_;
  double time_;
};

/// Non-finite values appeared during time stepping.
class BlowUpError : public Error {
 public:
  explicit BlowUpError(double time)
      : Error("non-finite state at t=" + std::to_string(time)), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace cda
