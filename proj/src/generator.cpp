#include "otsmooth/generator.hpp"

#include <algorithm>

#include "otsmooth/parallel.hpp"
#include "otsmooth/rng.hpp"

namespace otsmooth {

namespace {
constexpr std::int64_t kChunk = 65536;
}

PipelineMatrices pipeline_matrices(const PotentialModel& model,
                                   const SampleBatch& noise_points) {
  require(model.smoothing.has_value(),
          "pipeline requires a smoothing configuration");
  require(noise_points.cols() == model.d(),
          "noise dimension does not match the codes");
  require(noise_points.allFinite(), "noise contains non-finite values");

  const Index n = model.n();
  const Index d = model.d();
  const Index m = noise_points.rows();
  const double tau = model.smoothing->tau;

  PipelineMatrices out;
  out.A.resize(n, d + 1);
  out.A.col(0) = model.heights;
  out.A.rightCols(d) = model.codes.points;

  out.Z.resize(m, d + 1);
  out.Z.col(0).setOnes();
  out.Z.rightCols(d) = noise_points;

  out.W.resize(n, m);
  out.generated.resize(m, d);

  // Column j of A Z^T is exactly the score vector of noise point j, so the
  // scores and the stabilized softmax go through the same kernels as the
  // pointwise map; the weighted average below then reproduces rows 1..d of
  // G = A^T W bit for bit.
  Eigen::VectorXd v, w;
  Eigen::RowVectorXd g_row;
  for (Index j = 0; j < m; ++j) {
    const Eigen::RowVectorXd x = noise_points.row(j);
    detail::cell_scores(model.codes.points, model.heights, x, v);
    detail::softmax_weights(v, tau, w);
    out.W.col(j) = w;
    detail::weighted_code_average(model.codes.points, w, g_row);
    out.generated.row(j) = g_row;
  }
  return out;
}

SampleBatch draw_uniform_batch(const NoiseSpec& noise, std::int64_t m,
                               std::uint64_t master_seed) {
  require(noise.dim >= 1, "noise dimension must be positive");
  require(m >= 0, "batch size must be nonnegative");
  SampleBatch pts(m, noise.dim);
  for (std::int64_t j = 0; j < m; ++j) {
    SplitMix64 stream(derive_seed(master_seed, StreamTag::generate,
                                  static_cast<std::uint64_t>(j)));
    for (int k = 0; k < noise.dim; ++k)
      pts(j, k) = stream.uniform(NoiseSpec::low, NoiseSpec::high);
  }
  return pts;
}

SampleBatch generate_batch(const PotentialModel& model, const NoiseSpec& noise,
                           std::int64_t m) {
  require(model.smoothing.has_value(),
          "generation requires a smoothing configuration");
  require(noise.dim == model.d(), "noise dimension does not match the codes");
  require(m >= 0, "batch size must be nonnegative");

  const Index d = model.d();
  SampleBatch out(m, d);
  if (m == 0) return out;

  const double tau = model.smoothing->tau;
  // Chunked so that arbitrarily large batches stream with bounded memory;
  // per-point substreams make the chunk split invisible in the output.
  for (std::int64_t chunk_begin = 0; chunk_begin < m; chunk_begin += kChunk) {
    const std::int64_t chunk_end = std::min(m, chunk_begin + kChunk);
    parallel_blocks(
        chunk_end - chunk_begin, 1024,
        [&](std::int64_t, std::int64_t begin, std::int64_t end) {
          Eigen::RowVectorXd x(d);
          Eigen::VectorXd v, w;
          Eigen::RowVectorXd y;
          for (std::int64_t r = begin; r < end; ++r) {
            const std::int64_t j = chunk_begin + r;
            SplitMix64 stream(derive_seed(noise.seed, StreamTag::generate,
                                          static_cast<std::uint64_t>(j)));
            for (Index k = 0; k < d; ++k)
              x(k) = stream.uniform(NoiseSpec::low, NoiseSpec::high);
            detail::cell_scores(model.codes.points, model.heights, x, v);
            detail::softmax_weights(v, tau, w);
            detail::weighted_code_average(model.codes.points, w, y);
            out.row(j) = y;
          }
        });
  }
  return out;
}

}  // namespace otsmooth
