#include "otsmooth/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "otsmooth/parallel.hpp"
#include "otsmooth/potential.hpp"
#include "otsmooth/rng.hpp"

namespace otsmooth {

double rbf_kernel(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                  double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
  require(a.size() == b.size(), "kernel arguments differ in dimension");
  const double sq = (a - b).squaredNorm();
  return std::exp(-sq / (2.0 * sigma * sigma));
}

double median_bandwidth(const SampleBatch& t_batch, const SampleBatch& o_batch,
                        bool* degenerate) {
  require(t_batch.rows() >= 1 && o_batch.rows() >= 1,
          "median bandwidth needs non-empty batches");
  require(t_batch.cols() == o_batch.cols(),
          "batches differ in dimension");
  if (degenerate) *degenerate = false;

  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(t_batch.rows() * o_batch.rows()));
  for (Eigen::Index i = 0; i < t_batch.rows(); ++i)
    for (Eigen::Index j = 0; j < o_batch.rows(); ++j)
      dists.push_back((t_batch.row(i) - o_batch.row(j)).norm());
  std::sort(dists.begin(), dists.end());

  const size_t c = dists.size();
  const double med = (c % 2 == 1)
                         ? dists[c / 2]
                         : 0.5 * (dists[c / 2 - 1] + dists[c / 2]);
  if (med == 0.0) {
    if (degenerate) *degenerate = true;
    return 1.0;
  }
  return med;
}

namespace {

double resolve_sigma(const SampleBatch& t_batch, const SampleBatch& o_batch,
                     const KernelConfig& kernel) {
  if (kernel.sigma) {
    require(std::isfinite(*kernel.sigma) && *kernel.sigma > 0.0,
            "sigma must be positive");
    return *kernel.sigma;
  }
  return median_bandwidth(t_batch, o_batch);
}

void check_pair(const SampleBatch& t_batch, const SampleBatch& o_batch) {
  require(t_batch.rows() == o_batch.rows(),
          "the two batches must have equal size");
  require(t_batch.rows() >= 2, "need at least two points per batch");
  require(t_batch.cols() == o_batch.cols(), "batches differ in dimension");
  require(t_batch.allFinite() && o_batch.allFinite(),
          "batches must be finite");
}

}  // namespace

double mmd2_unbiased(const SampleBatch& t_batch, const SampleBatch& o_batch,
                     const KernelConfig& kernel, bool doubled_cross_term) {
  check_pair(t_batch, o_batch);
  const Eigen::Index n = t_batch.rows();
  const double sigma = resolve_sigma(t_batch, o_batch, kernel);

  // All four sums walk pairs i < j in the same order, so when the batches
  // are elementwise identical the within and cross accumulations agree
  // bitwise and the difference below is exactly zero.
  double within_t = 0.0, within_o = 0.0, cross_u = 0.0, cross_l = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      within_t += rbf_kernel(t_batch.row(i), t_batch.row(j), sigma);
      within_o += rbf_kernel(o_batch.row(i), o_batch.row(j), sigma);
      cross_u += rbf_kernel(t_batch.row(i), o_batch.row(j), sigma);
      cross_l += rbf_kernel(t_batch.row(j), o_batch.row(i), sigma);
    }

  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double cross_scale = doubled_cross_term ? 2.0 : 1.0;
  return ((within_t + within_o) - cross_scale * (cross_u + cross_l)) / pairs;
}

namespace detail {

Eigen::MatrixXd pooled_kernel_matrix(const SampleBatch& t_batch,
                                     const SampleBatch& o_batch,
                                     double sigma) {
  check_pair(t_batch, o_batch);
  const Eigen::Index n = t_batch.rows();
  const Eigen::Index total = 2 * n;
  auto row = [&](Eigen::Index i) {
    return i < n ? t_batch.row(i) : o_batch.row(i - n);
  };
  Eigen::MatrixXd kmat(total, total);
  for (Eigen::Index i = 0; i < total; ++i) {
    kmat(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < total; ++j) {
      const double v = rbf_kernel(row(i), row(j), sigma);
      kmat(i, j) = v;
      kmat(j, i) = v;
    }
  }
  return kmat;
}

double mmd2_from_kernel(const Eigen::MatrixXd& kernel,
                        const std::vector<int>& idx, int n,
                        bool doubled_cross_term) {
  double within_t = 0.0, within_o = 0.0, cross_u = 0.0, cross_l = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      within_t += kernel(idx[static_cast<size_t>(i)],
                         idx[static_cast<size_t>(j)]);
      within_o += kernel(idx[static_cast<size_t>(n + i)],
                         idx[static_cast<size_t>(n + j)]);
      cross_u += kernel(idx[static_cast<size_t>(i)],
                        idx[static_cast<size_t>(n + j)]);
      cross_l += kernel(idx[static_cast<size_t>(j)],
                        idx[static_cast<size_t>(n + i)]);
    }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double cross_scale = doubled_cross_term ? 2.0 : 1.0;
  return ((within_t + within_o) - cross_scale * (cross_u + cross_l)) / pairs;
}

TestReport permutation_report(const Eigen::MatrixXd& kernel, int n,
                              std::int64_t permutations, std::uint64_t seed,
                              double sigma_used) {
  require(n >= 2, "need at least two points per batch");
  require(kernel.rows() == 2 * n && kernel.cols() == 2 * n,
          "kernel matrix does not match the batch size");
  require(permutations >= 1, "need at least one permutation");

  std::vector<int> identity(static_cast<size_t>(2 * n));
  std::iota(identity.begin(), identity.end(), 0);
  const double observed =
      static_cast<double>(n) * mmd2_from_kernel(kernel, identity, n);

  // Each permutation shuffles from its own substream, so the exceedance
  // count (an integer) is independent of how permutations are distributed
  // over workers.
  const std::int64_t n_blocks = (permutations + 63) / 64;
  std::vector<std::int64_t> exceed(static_cast<size_t>(n_blocks), 0);
  parallel_blocks(permutations, 64,
                  [&](std::int64_t b, std::int64_t begin, std::int64_t end) {
    std::vector<int> idx(static_cast<size_t>(2 * n));
    std::int64_t count = 0;
    for (std::int64_t p = begin; p < end; ++p) {
      SplitMix64 sm{derive_seed(seed, StreamTag::permutation,
                                static_cast<std::uint64_t>(p + 1))};
      std::iota(idx.begin(), idx.end(), 0);
      for (size_t i = idx.size() - 1; i > 0; --i) {
        const size_t j = static_cast<size_t>(sm.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(idx[i], idx[j]);
      }
      const double stat =
          static_cast<double>(n) * mmd2_from_kernel(kernel, idx, n);
      if (stat >= observed) ++count;
    }
    exceed[static_cast<size_t>(b)] = count;
  });
  std::int64_t count = 0;
  for (auto c : exceed) count += c;

  TestReport rep;
  rep.statistic = observed;
  rep.p_value = static_cast<double>(1 + count) /
                static_cast<double>(permutations + 1);
  rep.permutations = permutations;
  rep.sigma_used = sigma_used;
  rep.seed = seed;
  return rep;
}

}  // namespace detail

TestReport permutation_test(const SampleBatch& t_batch,
                            const SampleBatch& o_batch,
                            const KernelConfig& kernel,
                            std::int64_t permutations, std::uint64_t seed) {
  check_pair(t_batch, o_batch);
  const double sigma = resolve_sigma(t_batch, o_batch, kernel);
  const Eigen::MatrixXd kmat = detail::pooled_kernel_matrix(t_batch, o_batch, sigma);
  return detail::permutation_report(kmat, static_cast<int>(t_batch.rows()),
                                    permutations, seed, sigma);
}

namespace {

void check_tune_config(const TuneConfig& cfg) {
  require(cfg.delta > 0.0 && cfg.delta < cfg.alpha && cfg.alpha < 1.0,
          "need 0 < delta < alpha < 1");
  require(!cfg.epsilon_grid.empty(), "epsilon grid is empty");
  for (size_t i = 0; i < cfg.epsilon_grid.size(); ++i) {
    require(std::isfinite(cfg.epsilon_grid[i]) && cfg.epsilon_grid[i] > 0.0,
            "epsilon grid entries must be positive");
    require(i == 0 || cfg.epsilon_grid[i - 1] < cfg.epsilon_grid[i],
            "epsilon grid must be strictly ascending");
  }
  require(cfg.permutations >= 1, "need at least one permutation");
  require(cfg.max_refinements >= 0, "max_refinements must be nonnegative");
}

}  // namespace

TuneResult tune_epsilon(const LatentCodes& codes,
                        const Eigen::VectorXd& heights, const NoiseSpec& noise,
                        const SampleBatch& observed, const TuneConfig& cfg) {
  check_tune_config(cfg);
  require(observed.rows() == codes.n(),
          "tuning generates one sample per observed point");
  require(observed.cols() == codes.d(), "observed batch dimension mismatch");
  require(noise.dim == codes.d(), "noise dimension does not match the codes");

  TuneResult out;
  std::vector<TestReport> reports;
  const std::int64_t m = observed.rows();

  auto run_trial = [&](double eps) -> TuneTrial {
    const std::uint64_t t = static_cast<std::uint64_t>(out.trials.size());
    const std::uint64_t gen_seed = derive_seed(cfg.seed, StreamTag::tune, t);
    NoiseSpec ns = noise;
    ns.seed = gen_seed;
    PotentialModel model = PotentialModel::make(
        codes, heights, SmoothingConfig::from_epsilon(eps, codes.n()));
    const SampleBatch generated = generate_batch(model, ns, m);
    const TestReport rep =
        permutation_test(generated, observed, KernelConfig{}, cfg.permutations,
                         derive_seed(cfg.seed, StreamTag::tune, t, 1));
    out.trials.push_back(TuneTrial{eps, rep.statistic, rep.p_value, gen_seed});
    reports.push_back(rep);
    return out.trials.back();
  };

  // Walk the grid, overwriting the bracket ends as p-values land on either
  // side of alpha, then rewalk successive 10-point subdivisions of the
  // bracket until a p-value falls within delta of alpha.
  bool have_lower = false, have_upper = false;
  double eps_lower = 0.0, eps_upper = 0.0;
  std::vector<double> grid = cfg.epsilon_grid;
  for (int round = 0; ; ++round) {
    for (double eps : grid) {
      const TuneTrial trial = run_trial(eps);
      if (std::abs(trial.p_value - cfg.alpha) <= cfg.delta) {
        out.status = TuneStatus::ok;
        out.epsilon_opt = eps;
        out.report = reports.back();
        return out;
      }
      if (trial.p_value < cfg.alpha) {
        eps_lower = eps;
        have_lower = true;
      } else {
        eps_upper = eps;
        have_upper = true;
      }
    }
    if (!have_lower || !have_upper) {
      out.status = have_lower ? TuneStatus::unbracketed_below
                              : TuneStatus::unbracketed_above;
      return out;
    }
    if (round == cfg.max_refinements) break;
    grid.resize(10);
    for (int mstep = 1; mstep <= 10; ++mstep)
      grid[static_cast<size_t>(mstep - 1)] =
          eps_lower + mstep * (eps_upper - eps_lower) / 10.0;
  }

  // Refinements exhausted: fall back to the trial whose p-value came
  // closest to alpha (earliest on ties).
  size_t best = 0;
  for (size_t i = 1; i < out.trials.size(); ++i)
    if (std::abs(out.trials[i].p_value - cfg.alpha) <
        std::abs(out.trials[best].p_value - cfg.alpha))
      best = i;
  out.status = TuneStatus::not_within_tolerance;
  out.epsilon_opt = out.trials[best].epsilon;
  out.report = reports[best];
  return out;
}

}  // namespace otsmooth
