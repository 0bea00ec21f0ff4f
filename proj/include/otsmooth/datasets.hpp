#pragma once

#include <cstdint>
#include <vector>

#include "otsmooth/common.hpp"

// 2D benchmark mixtures and the coverage/mixture report used to judge
// generated batches against them.

namespace otsmooth {

struct MixtureSpec {
  Eigen::MatrixXd mode_centers;  // k x d
  double mode_std = 0.0;         // isotropic per-mode standard deviation
  std::int64_t n_samples = 0;    // size of the dataset this spec produced
  std::uint64_t seed = 0;

  Index modes() const { return mode_centers.rows(); }
  Index d() const { return mode_centers.cols(); }
};

struct DatasetResult {
  SampleBatch points;
  MixtureSpec spec;
};

// Draws n points from the mixture, clamped to the support [-1,1]^d by
// redrawing the jitter of any point that lands outside. With round_robin set
// (the dataset convention) point i belongs to mode i % k, giving balanced
// per-mode counts; with it unset the mode is picked uniformly at random per
// point (an i.i.d. draw, used e.g. for test calibration).
SampleBatch sample_mixture(const MixtureSpec& spec, std::int64_t n,
                           std::uint64_t seed, bool round_robin = true);

// 8 Gaussians (std 0.02) equally spaced on the circle of radius 0.8.
DatasetResult make_ring(std::int64_t n, std::uint64_t seed);

// 25 Gaussians (std 0.01) on the lattice {-0.8,-0.4,0,0.4,0.8}^2.
DatasetResult make_grid(std::int64_t n, std::uint64_t seed);

struct ModeReport {
  int modes_covered = 0;
  std::vector<std::int64_t> per_mode_counts;  // nearest-center assignment
  double high_quality_fraction = 0.0;  // within 3 * std * sqrt(2) of a center
  double mixture_fraction = 0.0;       // 1 - high_quality_fraction
};

// Assigns each generated point to its nearest mode center (lowest index on
// ties). A mode counts as covered when it received at least
// max(1, floor(0.2 * m / k)) points. An empty batch reports zero coverage and
// no mixture mass.
ModeReport mode_report(const SampleBatch& generated, const MixtureSpec& spec);

}  // namespace otsmooth
