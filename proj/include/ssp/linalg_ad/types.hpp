#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ssp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Semantic aliases; dimensions are configured at runtime.
using StateVector = Vec;
using ActionVector = Vec;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dims(const char* what, Eigen::Index got, Eigen::Index expected) {
  if (got != expected) {
    throw DimensionError(std::string(what) + ": got dimension " + std::to_string(got) +
                         ", expected " + std::to_string(expected));
  }
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace ssp
