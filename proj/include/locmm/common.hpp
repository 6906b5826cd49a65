#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace locmm {

using Vector = Eigen::VectorXd;

// Bad input: wrong dimension, out-of-range parameter, malformed descriptor.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative routine failed to reach its accuracy target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Componentwise comparison from the first coordinate, exact floating compare.
bool lex_less(const Vector& a, const Vector& b);

}  // namespace locmm
