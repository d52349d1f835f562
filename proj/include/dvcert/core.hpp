#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dvcert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// States are dense indices for finite chains and plain integers for lazy
// (countable) chains; one type covers both.
using State = std::int64_t;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A desk-scale size guard was exceeded (exact DP, enumeration, LP).
class SizeGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dvcert
