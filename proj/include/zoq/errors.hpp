#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace zoq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised by a user-facing configuration (schedule, policy, experiment file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An objective returned a non-finite value. Carries the offending point.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Eigen::VectorXd point)
      : Error(what), point_(std::move(point)) {}
  const Eigen::VectorXd& point() const { return point_; }

 private:
  Eigen::VectorXd point_;
};

class DegenerateBlockError : public Error {
 public:
  DegenerateBlockError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace zoq
