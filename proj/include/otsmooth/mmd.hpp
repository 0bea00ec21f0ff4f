#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "otsmooth/generator.hpp"

// Kernel two-sample testing (unbiased squared MMD with an RBF kernel and a
// median-of-cross-distances bandwidth) and the epsilon search built on it:
// walk an ascending epsilon grid, test generated-vs-observed at each value,
// stop at the first p-value within delta of alpha, otherwise bracket the
// crossing and refine on a 10-point linear subdivision.

namespace otsmooth {

struct KernelConfig {
  // Fixed bandwidth; empty means "median heuristic on the cross distances",
  // computed once per test and frozen across permutations.
  std::optional<double> sigma;
};

double rbf_kernel(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                  double sigma);

// Median of the n_T * n_O cross pairwise Euclidean distances (average of the
// two middle values for even counts). Falls back to 1.0 when the median is
// zero; `degenerate` reports that case when non-null.
double median_bandwidth(const SampleBatch& t_batch, const SampleBatch& o_batch,
                        bool* degenerate = nullptr);

// Unbiased squared MMD for equal-size batches. Within-sample terms average
// over unordered pairs; the cross term averages over ordered pairs with the
// positional diagonal (t_l, o_l) removed, with coefficient 2/(n(n-1)).
// Setting doubled_cross_term doubles that coefficient to 4/(n(n-1)), a
// compatibility convention some implementations use; it scales the statistic
// but is not the estimator the test machinery runs on.
double mmd2_unbiased(const SampleBatch& t_batch, const SampleBatch& o_batch,
                     const KernelConfig& kernel,
                     bool doubled_cross_term = false);

struct TestReport {
  double statistic = 0.0;  // n * MMD^2_U on the observed split
  double p_value = 1.0;    // (1 + #{permuted >= observed}) / (permutations + 1)
  std::int64_t permutations = 0;
  double sigma_used = 0.0;
  std::uint64_t seed = 0;
};

// Permutation two-sample test. The pooled kernel matrix is computed once;
// permutation p shuffles the pooled indices with the substream
// derive_seed(seed, permutation, p), so the test is deterministic for fixed
// inputs and reproducible under any thread count.
TestReport permutation_test(const SampleBatch& t_batch,
                            const SampleBatch& o_batch,
                            const KernelConfig& kernel,
                            std::int64_t permutations, std::uint64_t seed);

struct TuneTrial {
  double epsilon = 0.0;
  double statistic = 0.0;
  double p_value = 0.0;
  std::uint64_t seed = 0;  // generation seed of the trial
};

enum class TuneStatus {
  ok,                     // |p - alpha| <= delta at epsilon_opt
  not_within_tolerance,   // refinements exhausted; closest trial returned
  unbracketed_above,      // every p-value stayed above alpha
  unbracketed_below,      // every p-value stayed below alpha
};

struct TuneConfig {
  double alpha = 0.05;
  double delta = 0.01;
  std::vector<double> epsilon_grid;  // strictly ascending, positive
  std::int64_t permutations = 1000;
  int max_refinements = 6;
  std::uint64_t seed = 0;
};

struct TuneResult {
  TuneStatus status = TuneStatus::ok;
  double epsilon_opt = 0.0;
  TestReport report;               // test at epsilon_opt
  std::vector<TuneTrial> trials;   // full search log, in trial order
};

// Searches for the epsilon whose generated batch is statistically
// indistinguishable from `observed` at level alpha. Each trial generates
// observed.rows() samples from (codes, heights, epsilon) with a
// trial-indexed substream and runs the permutation test. Requires
// observed.rows() == codes.n().
TuneResult tune_epsilon(const LatentCodes& codes,
                        const Eigen::VectorXd& heights, const NoiseSpec& noise,
                        const SampleBatch& observed, const TuneConfig& cfg);

namespace detail {

// Pooled (2n x 2n) kernel matrix: rows/cols 0..n-1 are T, n..2n-1 are O.
Eigen::MatrixXd pooled_kernel_matrix(const SampleBatch& t_batch,
                                     const SampleBatch& o_batch, double sigma);

// MMD^2_U of the split (idx[0..n-1] | idx[n..2n-1]) of the pooled matrix.
double mmd2_from_kernel(const Eigen::MatrixXd& kernel,
                        const std::vector<int>& idx, int n,
                        bool doubled_cross_term = false);

// Permutation test on a precomputed pooled kernel matrix (statistic and
// p-value only; sigma_used passed through for the report).
TestReport permutation_report(const Eigen::MatrixXd& kernel, int n,
                              std::int64_t permutations, std::uint64_t seed,
                              double sigma_used);

}  // namespace detail

}  // namespace otsmooth
