#pragma once

#include <cstdint>

#include "otsmooth/solver.hpp"

// Batch generation through the smoothed transport map, plus the explicit
// matrix formulation of the same computation. The matrix path exists for
// inspection and tests; generate_batch applies the pointwise map row by row
// and the two agree to 1e-12 (they share the same score/softmax kernels).

namespace otsmooth {

struct PipelineMatrices {
  Eigen::MatrixXd A;          // n x (d+1): first column heights, then codes
  Eigen::MatrixXd Z;          // m x (d+1): first column ones, then noise
  Eigen::MatrixXd W;          // n x m: column j = softmax weights of point j
  SampleBatch generated;      // m x d: weighted code averages
};

// Assembles A and Z, forms the score matrix A Z^T column by column, applies
// the stabilized column softmax at the model temperature, and averages codes
// under the resulting weights. Requires model.smoothing.
PipelineMatrices pipeline_matrices(const PotentialModel& model,
                                   const SampleBatch& noise_points);

// m uniform noise points; point j is drawn from the substream
// derive_seed(master_seed, generate, j), so any chunking or parallel split
// reproduces the same batch.
SampleBatch draw_uniform_batch(const NoiseSpec& noise, std::int64_t m,
                               std::uint64_t master_seed);

// Draws m noise points (per-point substreams seeded from noise.seed) and maps
// them through smoothed_ot_map, streaming in chunks of at most 65536 points.
// Requires model.smoothing; m == 0 yields an empty batch.
SampleBatch generate_batch(const PotentialModel& model, const NoiseSpec& noise,
                           std::int64_t m);

}  // namespace otsmooth
