#pragma once

#include <cstdint>
#include <vector>

#include "otsmooth/potential.hpp"

// Stochastic solver for the height vector of the semi-discrete transport
// problem: minimize E(h) whose gradient is (estimated cell masses - target
// masses). Cell masses are estimated by Monte-Carlo assignment of fresh
// uniform noise to argmax cells; heights follow Adam steps and are
// re-centered to zero mean after every update. E itself is never evaluated.

namespace otsmooth {

// Source measure: uniform on [low, high]^dim. `seed` is the default master
// seed used by operations that do not take one explicitly.
struct NoiseSpec {
  int dim = 2;
  std::uint64_t seed = 0;

  static constexpr double low = -1.0;
  static constexpr double high = 1.0;
};

struct TargetMasses {
  Eigen::VectorXd nu;  // entries >= 0, sum == 1 within 1e-12

  static TargetMasses uniform(Index n);
  static TargetMasses from(Eigen::VectorXd nu);
};

struct SolverConfig {
  std::int64_t initial_mc_samples = 20000;  // N, doubled on stalls
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.5;
  double adam_epsilon = 1e-8;
  double grad_norm_tol = 0.002;       // stop when ||grad||_2 <= tol
  int patience = 50;                  // stall iterations before doubling N
  std::int64_t max_iterations = 50000;
  std::int64_t mc_cap = 4194304;      // 2^22, upper bound for N
  std::uint64_t seed = 0;
};

struct FitTrace {
  std::int64_t iterations = 0;  // gradient evaluations performed
  double final_grad_norm = 0.0;
  std::int64_t mc_samples_final = 0;
  bool converged = false;
  bool mc_cap_hit = false;  // a doubling was requested while already at cap
  std::vector<double> grad_norm_history;        // one entry per iteration
  std::vector<std::int64_t> mc_samples_history;  // N used per iteration
};

struct FitResult {
  Eigen::VectorXd heights;
  FitTrace trace;
};

// Frequencies of argmax cell hits over n_samples fresh uniform draws.
// Deterministic for fixed (heights, noise, n_samples, seed) regardless of
// thread count: draws are generated per 65536-sample block with block-indexed
// substreams, and integer counts are merged in block order. The returned
// vector is nonnegative and sums to exactly 1.0.
Eigen::VectorXd estimate_cell_masses(const LatentCodes& codes,
                                     const Eigen::VectorXd& heights,
                                     const NoiseSpec& noise,
                                     std::int64_t n_samples,
                                     std::uint64_t seed);

// Runs the Adam loop from h = 0. Each iteration draws N fresh samples from a
// substream keyed by the iteration counter; if the gradient norm has not
// improved by at least 1% for `patience` consecutive iterations, N doubles
// (capped at mc_cap). Convergence is checked on the freshly estimated
// gradient before
// the Adam update, so the returned heights are exactly the iterate at which
// final_grad_norm was measured. On non-convergence the best iterate seen
// (smallest estimated gradient norm) is returned with converged = false.
FitResult fit_height_vector(const LatentCodes& codes,
                            const TargetMasses& target,
                            const NoiseSpec& noise, const SolverConfig& cfg);

}  // namespace otsmooth
