#include <doctest.h>

#include <cmath>

#include "otsmooth/datasets.hpp"
#include "test_util.hpp"

using namespace otsmooth;

TEST_CASE("ring dataset: round-robin gives 32 points per mode at n = 256") {
  auto ring = make_ring(256, 7);
  CHECK(ring.spec.modes() == 8);
  CHECK(ring.spec.mode_std == 0.02);
  CHECK(ring.points.rows() == 256);
  ModeReport rep = mode_report(ring.points, ring.spec);
  for (std::int64_t c : rep.per_mode_counts) CHECK(c == 32);
  // Centers sit on the radius-0.8 circle, first one at angle 0.
  CHECK(ring.spec.mode_centers.row(0)(0) == doctest::Approx(0.8));
  CHECK(ring.spec.mode_centers.row(0)(1) == doctest::Approx(0.0));
  for (Index k = 0; k < 8; ++k)
    CHECK(ring.spec.mode_centers.row(k).norm() == doctest::Approx(0.8));
}

TEST_CASE("ring dataset: zero-noise limit reproduces the centers") {
  auto ring = make_ring(8, 1);
  MixtureSpec tiny = ring.spec;
  tiny.mode_std = 1e-15;
  SampleBatch pts = sample_mixture(tiny, 8, 1);
  for (Index i = 0; i < 8; ++i)
    CHECK((pts.row(i) - tiny.mode_centers.row(i)).norm() <= 1e-12);
}

TEST_CASE("ring dataset: containment in the support and the 0.92 disc") {
  auto ring = make_ring(4096, 2);
  for (Index i = 0; i < ring.points.rows(); ++i) {
    CHECK(ring.points.row(i).norm() <= 0.92);
    CHECK(ring.points.row(i).lpNorm<Eigen::Infinity>() <= 1.0);
  }
}

TEST_CASE("grid dataset: lattice centers and near-balanced counts") {
  auto grid = make_grid(256, 3);
  CHECK(grid.spec.modes() == 25);
  CHECK(grid.spec.mode_std == 0.01);
  // x-major lattice over {-0.8,-0.4,0,0.4,0.8}^2.
  CHECK(grid.spec.mode_centers(0, 0) == doctest::Approx(-0.8));
  CHECK(grid.spec.mode_centers(0, 1) == doctest::Approx(-0.8));
  CHECK(grid.spec.mode_centers(1, 1) == doctest::Approx(-0.4));
  CHECK(grid.spec.mode_centers(5, 0) == doctest::Approx(-0.4));
  CHECK(grid.spec.mode_centers(24, 0) == doctest::Approx(0.8));
  CHECK(grid.spec.mode_centers(24, 1) == doctest::Approx(0.8));

  ModeReport rep = mode_report(grid.points, grid.spec);
  for (std::int64_t c : rep.per_mode_counts) CHECK((c == 10 || c == 11));

  auto tinyres = make_grid(25, 4);
  MixtureSpec tiny = tinyres.spec;
  tiny.mode_std = 1e-15;
  SampleBatch pts = sample_mixture(tiny, 25, 4);
  for (Index i = 0; i < 25; ++i)
    CHECK((pts.row(i) - tiny.mode_centers.row(i)).norm() <= 1e-12);

  for (Index i = 0; i < grid.points.rows(); ++i)
    CHECK(grid.points.row(i).lpNorm<Eigen::Infinity>() <= 1.0);
}

TEST_CASE("dataset sampling: deterministic per seed, i.i.d. mode available") {
  auto a = make_ring(128, 42);
  auto b = make_ring(128, 42);
  CHECK((a.points - b.points).lpNorm<Eigen::Infinity>() == 0.0);
  auto c = make_ring(128, 43);
  CHECK((a.points - c.points).lpNorm<Eigen::Infinity>() != 0.0);

  // Independent mode choice: balanced counts are astronomically unlikely.
  SampleBatch iid = sample_mixture(a.spec, 1024, 9, /*round_robin=*/false);
  ModeReport rep = mode_report(iid, a.spec);
  std::int64_t total = 0;
  bool all_equal = true;
  for (std::int64_t cnt : rep.per_mode_counts) {
    total += cnt;
    all_equal = all_equal && cnt == rep.per_mode_counts[0];
  }
  CHECK(total == 1024);
  CHECK_FALSE(all_equal);
}

TEST_CASE("mode report: training data counts as covered, high quality") {
  auto ring = make_ring(256, 5);
  ModeReport rep = mode_report(ring.points, ring.spec);
  CHECK(rep.modes_covered == 8);
  CHECK(rep.high_quality_fraction >= 0.99);
  CHECK(rep.high_quality_fraction + rep.mixture_fraction == 1.0);
}

TEST_CASE("mode report: a single occupied mode") {
  auto ring = make_ring(8, 6);
  SampleBatch all_one(40, 2);
  for (Index i = 0; i < 40; ++i) all_one.row(i) = ring.spec.mode_centers.row(3);
  ModeReport rep = mode_report(all_one, ring.spec);
  CHECK(rep.modes_covered == 1);
  CHECK(rep.per_mode_counts[3] == 40);
  CHECK(rep.high_quality_fraction == 1.0);
}

TEST_CASE("mode report: adjacent-mode midpoints are pure mixture") {
  auto ring = make_ring(8, 6);
  SampleBatch mids(8, 2);
  for (Index k = 0; k < 8; ++k)
    mids.row(k) = 0.5 * (ring.spec.mode_centers.row(k) +
                         ring.spec.mode_centers.row((k + 1) % 8));
  ModeReport rep = mode_report(mids, ring.spec);
  CHECK(rep.high_quality_fraction == 0.0);
  CHECK(rep.mixture_fraction == 1.0);
}

TEST_CASE("mode report: coverage threshold is 20% of the fair share") {
  auto spec = MixtureSpec{tu::mat({{-1.0, 0.0}, {1.0, 0.0}}), 0.05, 0, 0};
  SampleBatch batch(100, 2);
  for (Index i = 0; i < 91; ++i) batch.row(i) = tu::row({-1.0, 0.0});
  for (Index i = 91; i < 100; ++i) batch.row(i) = tu::row({1.0, 0.0});
  // Fair share is 50; the bar is floor(0.2 * 100 / 2) = 10, so 9 misses it.
  ModeReport rep = mode_report(batch, spec);
  CHECK(rep.modes_covered == 1);
  CHECK(rep.per_mode_counts[1] == 9);
}

TEST_CASE("mode report: nearest-center ties go to the lowest index") {
  auto spec = MixtureSpec{tu::mat({{-1.0, 0.0}, {1.0, 0.0}}), 0.05, 0, 0};
  SampleBatch batch(1, 2);
  batch.row(0) = tu::row({0.0, 0.0});
  ModeReport rep = mode_report(batch, spec);
  CHECK(rep.per_mode_counts[0] == 1);
  CHECK(rep.per_mode_counts[1] == 0);
}

TEST_CASE("mode report: permutation invariance and the empty batch") {
  auto ring = make_ring(64, 8);
  SampleBatch rev = ring.points.colwise().reverse();
  ModeReport a = mode_report(ring.points, ring.spec);
  ModeReport b = mode_report(rev, ring.spec);
  CHECK(a.modes_covered == b.modes_covered);
  CHECK(a.per_mode_counts == b.per_mode_counts);
  CHECK(a.high_quality_fraction == b.high_quality_fraction);

  ModeReport empty = mode_report(SampleBatch(0, 2), ring.spec);
  CHECK(empty.modes_covered == 0);
  CHECK(empty.high_quality_fraction == 0.0);
  CHECK(empty.mixture_fraction == 0.0);
}

TEST_CASE("dataset sampling: invalid mixture specs are rejected") {
  auto ring = make_ring(8, 1);
  MixtureSpec bad = ring.spec;
  bad.mode_std = 0.0;
  CHECK_THROWS_AS(sample_mixture(bad, 4, 1), InvalidInputError);
  MixtureSpec none = ring.spec;
  none.mode_centers = Eigen::MatrixXd(0, 2);
  CHECK_THROWS_AS(sample_mixture(none, 4, 1), InvalidInputError);
  CHECK_THROWS_AS(sample_mixture(ring.spec, -1, 1), InvalidInputError);
}
