#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace otsmooth {

using Eigen::Index;

// A batch of points, one row per point.
using SampleBatch = Eigen::MatrixXd;

// Thrown when a caller hands us data that violates a documented precondition
// (bad dimensions, non-finite values, malformed files, out-of-range knobs).
struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an operation needs a piece of configuration that is absent or
// inconsistent (e.g. asking for the smoothed map on a model without a
// smoothing setup).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInputError(msg);
}

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

}  // namespace otsmooth
