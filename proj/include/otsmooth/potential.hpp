#pragma once

#include <optional>

#include "otsmooth/common.hpp"

// Max-affine (Brenier) potential over a finite code set and its log-sum-exp
// smoothing. The hard potential is u(x) = max_i (x.y_i + h_i); its smoothed
// counterpart replaces the max by tau * log-sum-exp at temperature
// tau = epsilon / ln(n), which keeps the two within epsilon of each other
// everywhere. Gradients of the smoothed potential are softmax-weighted
// averages of the codes and serve as the generator map.

namespace otsmooth {

// Support points of the discrete target, one code per row.
struct LatentCodes {
  Eigen::MatrixXd points;  // n x d

  Index n() const { return points.rows(); }
  Index d() const { return points.cols(); }

  static LatentCodes from_points(Eigen::MatrixXd pts);
};

struct SmoothingConfig {
  double epsilon = 0.0;  // uniform gap bound between hard and smoothed maps
  double tau = 0.0;      // epsilon / ln(n), stored so the pair never drifts

  // For n == 1 the smoothed map is exactly the hard map for every positive
  // temperature, so tau is set to epsilon to keep it finite.
  static SmoothingConfig from_epsilon(double epsilon, Index n);
};

struct PotentialModel {
  LatentCodes codes;
  Eigen::VectorXd heights;  // length n, centered: sum ~ 0
  std::optional<SmoothingConfig> smoothing;

  Index n() const { return codes.n(); }
  Index d() const { return codes.d(); }

  static PotentialModel make(LatentCodes codes, Eigen::VectorXd heights,
                             std::optional<SmoothingConfig> smoothing = {});
};

struct CellAssignment {
  Index index;  // 0-based argmax cell; lowest index wins exact ties
  Eigen::RowVectorXd point;
};

double brenier_potential(const PotentialModel& model,
                         const Eigen::RowVectorXd& x);

CellAssignment hard_ot_map(const PotentialModel& model,
                           const Eigen::RowVectorXd& x);

// Requires model.smoothing. Computed as v* + tau*(log S - log n) with
// S = sum_i exp((v_i - v*)/tau), so the hard/smoothed gap is nonnegative by
// construction and the n == 1 case is exact.
double smoothed_potential(const PotentialModel& model,
                          const Eigen::RowVectorXd& x);

// Softmax-weighted average of the codes; always lies in their convex hull
// (up to roundoff). Requires model.smoothing.
Eigen::RowVectorXd smoothed_ot_map(const PotentialModel& model,
                                   const Eigen::RowVectorXd& x);

namespace detail {

// v[i] = h[i] + x . y_i, accumulated serially so every caller (pointwise
// maps, batch pipeline, solver) sees bit-identical scores.
void cell_scores(const Eigen::MatrixXd& Y, const Eigen::VectorXd& h,
                 const Eigen::RowVectorXd& x, Eigen::VectorXd& out);

// First maximal entry (strict > scan), i.e. lowest index on ties.
Index argmax_row(const Eigen::VectorXd& v);

struct SoftmaxStats {
  double vmax;     // max score
  double log_sum;  // log sum_i exp((v_i - vmax)/tau), >= 0
};

// Normalized weights w_i = exp((v_i - vmax)/tau) / S. Max subtraction is
// mandatory here: raw exp(v_i/tau) overflows already at moderate score
// magnitudes once tau drops below ~1e-2.
SoftmaxStats softmax_weights(const Eigen::VectorXd& v, double tau,
                             Eigen::VectorXd& w);

// out[k] = sum_i w[i] * Y(i, k), serial accumulation (shared by the pointwise
// map and the batch pipeline so the two agree bitwise).
void weighted_code_average(const Eigen::MatrixXd& Y, const Eigen::VectorXd& w,
                           Eigen::RowVectorXd& out);

}  // namespace detail

}  // namespace otsmooth
