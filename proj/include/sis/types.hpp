#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sis {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Reciprocal condition number below which a matrix is treated as singular.
inline constexpr double kRcondTolerance = 1e-12;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree with the declared signal dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Time or spatial index outside the model's range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition (probabilities, PSD moments, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is singular at a specific (t, i).
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, int t, int i)
      : Error(what + " at (t=" + std::to_string(t) + ",i=" + std::to_string(i) + ")"),
        t_(t),
        i_(i) {}

  int t() const { return t_; }
  int i() const { return i_; }

 private:
  int t_;
  int i_;
};

/// The interconnection equations have no unique solution at time t.
class WellPosednessError : public Error {
 public:
  WellPosednessError(const std::string& what, int t)
      : Error(what + " at time t=" + std::to_string(t)), t_(t) {}

  int t() const { return t_; }

 private:
  int t_;
};

/// Malformed model, scenario or trace document.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace sis
