#include "otsmooth/datasets.hpp"

#include <cmath>
#include <random>

#include "otsmooth/rng.hpp"

namespace otsmooth {

namespace {

bool inside_support(const Eigen::RowVectorXd& p) {
  return (p.array() >= -1.0).all() && (p.array() <= 1.0).all();
}

void check_spec(const MixtureSpec& spec) {
  require(spec.mode_centers.rows() >= 1, "mixture needs at least one mode");
  require(spec.mode_centers.allFinite(), "mode centers must be finite");
  require(std::isfinite(spec.mode_std) && spec.mode_std > 0.0,
          "mode std must be positive");
}

}  // namespace

SampleBatch sample_mixture(const MixtureSpec& spec, std::int64_t n,
                           std::uint64_t seed, bool round_robin) {
  check_spec(spec);
  require(n >= 0, "sample count must be nonnegative");
  const Index k = spec.modes();
  const Index d = spec.d();

  std::mt19937_64 eng(derive_seed(seed, StreamTag::dataset));
  SampleBatch pts(n, d);
  Eigen::RowVectorXd p(d);
  for (std::int64_t i = 0; i < n; ++i) {
    Index mode;
    if (round_robin) {
      mode = static_cast<Index>(i % k);
    } else {
      mode = static_cast<Index>(std::min<std::uint64_t>(
          static_cast<std::uint64_t>(unit_double(eng) * k), k - 1));
    }
    // Redraw the jitter until the point lands in the support square.
    do {
      for (Index c = 0; c + 1 < d; c += 2) {
        double z0, z1;
        normal_pair(eng, z0, z1);
        p(c) = spec.mode_centers(mode, c) + spec.mode_std * z0;
        p(c + 1) = spec.mode_centers(mode, c + 1) + spec.mode_std * z1;
      }
      if (d % 2 == 1) {
        double z0, z1;
        normal_pair(eng, z0, z1);
        p(d - 1) = spec.mode_centers(mode, d - 1) + spec.mode_std * z0;
      }
    } while (!inside_support(p));
    pts.row(i) = p;
  }
  return pts;
}

DatasetResult make_ring(std::int64_t n, std::uint64_t seed) {
  require(n >= 1, "dataset size must be positive");
  const Index k = 8;
  const double radius = 0.8;
  Eigen::MatrixXd centers(k, 2);
  for (Index j = 0; j < k; ++j) {
    const double angle =
        2.0 * M_PI * static_cast<double>(j) / static_cast<double>(k);
    centers(j, 0) = radius * std::cos(angle);
    centers(j, 1) = radius * std::sin(angle);
  }
  MixtureSpec spec{std::move(centers), 0.02, n, seed};
  SampleBatch pts = sample_mixture(spec, n, seed, /*round_robin=*/true);
  return DatasetResult{std::move(pts), std::move(spec)};
}

DatasetResult make_grid(std::int64_t n, std::uint64_t seed) {
  require(n >= 1, "dataset size must be positive");
  const double vals[5] = {-0.8, -0.4, 0.0, 0.4, 0.8};
  Eigen::MatrixXd centers(25, 2);
  Index row = 0;
  for (int ix = 0; ix < 5; ++ix)
    for (int iy = 0; iy < 5; ++iy, ++row) {
      centers(row, 0) = vals[ix];
      centers(row, 1) = vals[iy];
    }
  MixtureSpec spec{std::move(centers), 0.01, n, seed};
  SampleBatch pts = sample_mixture(spec, n, seed, /*round_robin=*/true);
  return DatasetResult{std::move(pts), std::move(spec)};
}

ModeReport mode_report(const SampleBatch& generated, const MixtureSpec& spec) {
  check_spec(spec);
  const Index k = spec.modes();
  const std::int64_t m = generated.rows();
  if (m > 0) {
    require(generated.cols() == spec.d(),
            "generated batch dimension does not match the mixture");
    require(generated.allFinite(), "generated batch has non-finite entries");
  }

  ModeReport rep;
  rep.per_mode_counts.assign(static_cast<size_t>(k), 0);
  if (m == 0) return rep;

  const double radius = 3.0 * spec.mode_std * std::sqrt(2.0);
  std::int64_t high_quality = 0;
  for (std::int64_t i = 0; i < m; ++i) {
    Index best = 0;
    double best_d = (generated.row(i) - spec.mode_centers.row(0)).norm();
    for (Index j = 1; j < k; ++j) {
      const double dist = (generated.row(i) - spec.mode_centers.row(j)).norm();
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    ++rep.per_mode_counts[static_cast<size_t>(best)];
    if (best_d <= radius) ++high_quality;
  }

  const std::int64_t covered_at = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::floor(0.2 * static_cast<double>(m) /
                        static_cast<double>(k))));
  for (Index j = 0; j < k; ++j)
    if (rep.per_mode_counts[static_cast<size_t>(j)] >= covered_at)
      ++rep.modes_covered;

  rep.high_quality_fraction =
      static_cast<double>(high_quality) / static_cast<double>(m);
  rep.mixture_fraction = 1.0 - rep.high_quality_fraction;
  return rep;
}

}  // namespace otsmooth
