#include "otsmooth/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "otsmooth/parallel.hpp"
#include "otsmooth/potential.hpp"
#include "otsmooth/rng.hpp"

namespace otsmooth {

namespace {

constexpr std::int64_t kBlock = 65536;

void check_theta(double theta_hat) {
  require(std::isfinite(theta_hat) && theta_hat > 0.0 && theta_hat <= 1.0,
          "theta_hat must lie in (0, 1]");
}

}  // namespace

Index CellCenters::non_empty() const {
  Index k = 0;
  for (auto c : counts)
    if (c > 0) ++k;
  return k;
}

CellCenters estimate_cell_centers(const PotentialModel& model,
                                  const NoiseSpec& noise,
                                  const BaselineConfig& cfg) {
  const Index n = model.codes.n();
  const Index d = model.codes.d();
  require(noise.dim == d, "noise dimension does not match the codes");
  require(cfg.mc_samples_for_centers >= 1, "center estimation needs samples");

  const std::int64_t total = cfg.mc_samples_for_centers;
  const std::int64_t n_blocks = (total + kBlock - 1) / kBlock;

  // Per-block accumulators, merged in block order afterwards so the result
  // does not depend on the worker count.
  std::vector<double> sums(static_cast<size_t>(n_blocks * n * d), 0.0);
  std::vector<std::int64_t> hits(static_cast<size_t>(n_blocks * n), 0);

  const Eigen::MatrixXd& Y = model.codes.points;
  const Eigen::VectorXd& h = model.heights;
  parallel_blocks(total, kBlock,
                  [&](std::int64_t b, std::int64_t begin, std::int64_t end) {
    std::mt19937_64 eng(derive_seed(cfg.seed, StreamTag::centers, 0,
                                    static_cast<std::uint64_t>(b)));
    Eigen::RowVectorXd x(d);
    Eigen::VectorXd scores(n);
    double* bsum = sums.data() + b * n * d;
    std::int64_t* bhit = hits.data() + b * n;
    for (std::int64_t j = begin; j < end; ++j) {
      for (Index c = 0; c < d; ++c)
        x(c) = uniform_double(eng, NoiseSpec::low, NoiseSpec::high);
      detail::cell_scores(Y, h, x, scores);
      const Index cell = detail::argmax_row(scores);
      for (Index c = 0; c < d; ++c) bsum[cell * d + c] += x(c);
      ++bhit[cell];
    }
  });

  CellCenters out;
  out.centers.setConstant(n, d, std::numeric_limits<double>::quiet_NaN());
  out.counts.assign(static_cast<size_t>(n), 0);
  out.mc_total = total;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, d);
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    const double* bsum = sums.data() + b * n * d;
    const std::int64_t* bhit = hits.data() + b * n;
    for (Index i = 0; i < n; ++i) {
      out.counts[static_cast<size_t>(i)] += bhit[i];
      for (Index c = 0; c < d; ++c) acc(i, c) += bsum[i * d + c];
    }
  }
  for (Index i = 0; i < n; ++i)
    if (out.counts[static_cast<size_t>(i)] > 0)
      out.centers.row(i) =
          acc.row(i) / static_cast<double>(out.counts[static_cast<size_t>(i)]);
  return out;
}

BaselineSample baseline_generate(const Eigen::RowVectorXd& x,
                                 const PotentialModel& model,
                                 const CellCenters& centers,
                                 const BaselineConfig& cfg) {
  const Index n = model.codes.n();
  const Index d = model.codes.d();
  check_theta(cfg.theta_hat);
  require(x.size() == d, "point dimension does not match the codes");
  require(x.allFinite(), "point has non-finite entries");
  require(centers.centers.rows() == n && centers.centers.cols() == d,
          "cell centers do not match the model");

  // Candidate cells sorted by distance to x, lowest index on ties.
  std::vector<std::pair<double, Index>> order;
  order.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i)
    if (centers.has(i))
      order.emplace_back((x - centers.centers.row(i)).norm(), i);
  require(!order.empty(), "all cells are empty");
  const size_t k = std::min<size_t>(static_cast<size_t>(d) + 1, order.size());
  std::partial_sort(order.begin(), order.begin() + k, order.end());
  order.resize(k);

  BaselineSample out;
  const Eigen::MatrixXd& Y = model.codes.points;
  if (order[0].first == 0.0) {
    // x sits exactly on a center: the inverse-distance weight of that cell
    // dominates in the limit, so return its code outright.
    out.accepted = true;
    out.point = Y.row(order[0].second);
    return out;
  }

  const Index i0 = order[0].second;
  const double norm0 = Y.row(i0).norm();
  std::vector<double> theta(k, 1.0);
  for (size_t j = 1; j < k; ++j) {
    const double normj = Y.row(order[j].second).norm();
    if (norm0 == 0.0 || normj == 0.0) {
      out.zero_code_warning = true;  // undefined cosine, treated as 1
      continue;
    }
    const double c = Y.row(i0).dot(Y.row(order[j].second)) / (norm0 * normj);
    theta[j] = std::clamp(c, -1.0, 1.0);
  }

  if (k > 1) {
    bool all_above = true;
    for (size_t j = 1; j < k; ++j)
      if (theta[j] <= cfg.theta_hat) all_above = false;
    if (all_above) return out;  // singular set: rejected
  }

  // Inverse-distance weights over the nearest cell plus every candidate
  // whose cosine passed the screen.
  double wsum = 0.0;
  std::vector<double> w(k, 0.0);
  for (size_t j = 0; j < k; ++j) {
    if (j > 0 && theta[j] > cfg.theta_hat) continue;
    w[j] = 1.0 / order[j].first;
    wsum += w[j];
  }
  out.accepted = true;
  out.point = Eigen::RowVectorXd::Zero(d);
  for (size_t j = 0; j < k; ++j)
    if (w[j] > 0.0) out.point += (w[j] / wsum) * Y.row(order[j].second);
  return out;
}

BaselineBatch baseline_generate_batch(const PotentialModel& model,
                                      const CellCenters& centers,
                                      const BaselineConfig& cfg,
                                      std::int64_t m, std::uint64_t seed,
                                      std::int64_t draw_budget) {
  check_theta(cfg.theta_hat);
  require(m >= 0, "batch size must be nonnegative");
  if (draw_budget < 0) draw_budget = 100 * m;

  const Index d = model.codes.d();
  std::mt19937_64 eng(derive_seed(seed, StreamTag::baseline));
  Eigen::RowVectorXd x(d);

  BaselineBatch out;
  out.points.resize(m, d);
  std::int64_t accepted = 0;
  while (accepted < m && out.draws < draw_budget) {
    for (Index c = 0; c < d; ++c)
      x(c) = uniform_double(eng, NoiseSpec::low, NoiseSpec::high);
    ++out.draws;
    BaselineSample s = baseline_generate(x, model, centers, cfg);
    if (s.zero_code_warning) ++out.zero_code_warnings;
    if (s.accepted) out.points.row(accepted++) = s.point;
  }
  out.points.conservativeResize(accepted, d);
  out.shortfall = accepted < m;
  out.rejection_rate =
      out.draws > 0
          ? static_cast<double>(out.draws - accepted) / static_cast<double>(out.draws)
          : 0.0;
  return out;
}

}  // namespace otsmooth
