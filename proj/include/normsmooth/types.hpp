#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace normsmooth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Per-solve evaluation counters: objective values, gradients, prox calls.
struct EvalCounters {
  long f = 0;
  long grad = 0;
  long prox = 0;
};

/// Requested quantity has no closed form for the given configuration.
class NotAvailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite arithmetic detected inside an iterative routine.
class NumericalBreakdownError : public std::runtime_error {
 public:
  NumericalBreakdownError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace normsmooth
