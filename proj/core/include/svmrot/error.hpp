#pragma once

#include <stdexcept>
#include <string>

namespace svmrot {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

// Input on which a derivative or stencil cannot be formed.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ZeroNormError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved_residual, int iterations)
      : Error(what), achieved_residual_(achieved_residual), iterations_(iterations) {}

  double achieved_residual() const noexcept { return achieved_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double achieved_residual_;
  int iterations_;
};

class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double admissible_dt)
      : Error(what), admissible_dt_(admissible_dt) {}

  double admissible_dt() const noexcept { return admissible_dt_; }

 private:
  double admissible_dt_;
};

}  // namespace svmrot
