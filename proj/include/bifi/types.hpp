#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace bifi {

using Scalar = double;

template <typename T = Scalar>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T = Scalar>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<>;
using Matrix = MatrixX<>;
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
using Array2D = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Error hierarchy. The CLI maps these onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class CflViolation : public NumericalFailure {
 public:
  CflViolation(double courant, double limit)
      : NumericalFailure("CFL violation: Courant number " + std::to_string(courant) +
                         " exceeds " + std::to_string(limit)),
        courant_(courant) {}
  double courant() const { return courant_; }

 private:
  double courant_;
};

class ProjectionFailure : public NumericalFailure {
 public:
  ProjectionFailure(double residual, int iterations)
      : NumericalFailure("pressure projection did not converge: relative residual " +
                         std::to_string(residual) + " after " + std::to_string(iterations) +
                         " iterations"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class SingularGramian : public NumericalFailure {
 public:
  explicit SingularGramian(double condition)
      : NumericalFailure("Gramian is numerically singular (condition estimate " +
                         std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class RankDeficient : public Error {
 public:
  RankDeficient(int achieved, int requested)
      : Error("candidate set is rank deficient: achieved rank " + std::to_string(achieved) +
              " < requested " + std::to_string(requested)),
        achieved_(achieved),
        requested_(requested) {}
  int achieved_rank() const { return achieved_; }
  int requested_rank() const { return requested_; }

 private:
  int achieved_;
  int requested_;
};

class LayoutMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace bifi
