#include <doctest.h>

#include <cmath>

#include "otsmooth/datasets.hpp"
#include "otsmooth/generator.hpp"
#include "test_util.hpp"

using namespace otsmooth;

TEST_CASE("batch generation: a single code is copied verbatim") {
  auto m = tu::model_at_tau(tu::mat({{0.3, -0.7}}), tu::vec({0.0}), 0.5);
  NoiseSpec ns;
  ns.dim = 2;
  ns.seed = 5;
  SampleBatch out = generate_batch(m, ns, 5);
  REQUIRE(out.rows() == 5);
  for (Index j = 0; j < 5; ++j) {
    CHECK(out(j, 0) == 0.3);
    CHECK(out(j, 1) == -0.7);
  }
}

TEST_CASE("matrix pipeline: hand-evaluated closed form at tau = 1") {
  auto m = tu::model_at_tau(tu::mat({{-1.0}, {1.0}}), tu::vec({0.0, 0.0}), 1.0);
  SampleBatch noise(1, 1);
  noise << 1.0;
  PipelineMatrices pm = pipeline_matrices(m, noise);
  CHECK(pm.generated(0, 0) == doctest::Approx(std::tanh(1.0)));
  // Fixed augmented layout: first column of Z is ones, first column of A is h.
  CHECK(pm.Z(0, 0) == 1.0);
  CHECK(pm.Z(0, 1) == 1.0);
  CHECK(pm.A(0, 0) == 0.0);
  CHECK(pm.A(0, 1) == -1.0);
  CHECK(pm.A(1, 1) == 1.0);
}

TEST_CASE("matrix pipeline: weight columns live on the unit simplex") {
  tu::Rand rng(31);
  auto m = tu::model_at_tau(rng.matrix(9, 3, -1.0, 1.0),
                            rng.centered(9, -0.4, 0.4), 0.02);
  SampleBatch noise = rng.matrix(40, 3, -1.0, 1.0);
  PipelineMatrices pm = pipeline_matrices(m, noise);
  for (Index j = 0; j < noise.rows(); ++j) {
    CHECK((pm.W.col(j).array() >= 0.0).all());
    CHECK(std::abs(pm.W.col(j).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("matrix pipeline: constant height shift leaves weights unchanged") {
  tu::Rand rng(32);
  auto Y = rng.matrix(7, 2, -1.0, 1.0);
  auto h = rng.centered(7, -0.3, 0.3);
  Eigen::VectorXd shifted = h.array() + 0.75;
  auto base = tu::model_at_tau(Y, h, 0.1);
  auto moved = PotentialModel{base.codes, shifted, base.smoothing};
  SampleBatch noise = rng.matrix(25, 2, -1.0, 1.0);
  PipelineMatrices a = pipeline_matrices(base, noise);
  PipelineMatrices b = pipeline_matrices(moved, noise);
  CHECK((a.W - b.W).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("matrix pipeline: rows agree with the pointwise map bit for bit") {
  tu::Rand rng(33);
  auto m = tu::model_at_tau(rng.matrix(11, 2, -1.0, 1.0),
                            rng.centered(11, -0.5, 0.5), 1e-4);
  SampleBatch noise = rng.matrix(64, 2, -1.0, 1.0);
  PipelineMatrices pm = pipeline_matrices(m, noise);
  for (Index j = 0; j < noise.rows(); ++j) {
    Eigen::RowVectorXd direct = smoothed_ot_map(m, noise.row(j));
    CHECK((pm.generated.row(j) - direct).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("matrix pipeline: permuting noise rows permutes outputs") {
  tu::Rand rng(34);
  auto m = tu::model_at_tau(rng.matrix(5, 2, -1.0, 1.0),
                            rng.centered(5, -0.2, 0.2), 0.05);
  SampleBatch noise = rng.matrix(10, 2, -1.0, 1.0);
  SampleBatch reversed = noise.colwise().reverse();
  PipelineMatrices fwd = pipeline_matrices(m, noise);
  PipelineMatrices rev = pipeline_matrices(m, reversed);
  for (Index j = 0; j < 10; ++j)
    CHECK((fwd.generated.row(j) - rev.generated.row(9 - j)).norm() == 0.0);
}

TEST_CASE("batch generation: deterministic, chunk-invariant prefixes") {
  auto ring = make_ring(64, 3);
  auto codes = LatentCodes::from_points(ring.points);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(64);
  auto model =
      PotentialModel::make(codes, h, SmoothingConfig::from_epsilon(0.1, 64));
  NoiseSpec ns;
  ns.dim = 2;
  ns.seed = 77;

  SampleBatch big = generate_batch(model, ns, 70000);  // spans two chunks
  SampleBatch again = generate_batch(model, ns, 70000);
  CHECK((big - again).lpNorm<Eigen::Infinity>() == 0.0);

  SampleBatch small = generate_batch(model, ns, 10);
  CHECK((big.topRows(10) - small).lpNorm<Eigen::Infinity>() == 0.0);

  SampleBatch drawn = draw_uniform_batch(ns, 10, ns.seed);
  for (Index j = 0; j < 10; ++j) {
    Eigen::RowVectorXd direct = smoothed_ot_map(model, drawn.row(j));
    CHECK((big.row(j) - direct).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("batch generation: m = 0 is an empty batch, not an error") {
  auto m = tu::model_at_tau(tu::mat({{0.5}}), tu::vec({0.0}), 0.5);
  NoiseSpec ns;
  ns.dim = 1;
  SampleBatch out = generate_batch(m, ns, 0);
  CHECK(out.rows() == 0);
  CHECK(out.cols() == 1);
}

TEST_CASE("batch generation: configuration and input errors") {
  auto hard = tu::hard_model(tu::mat({{0.5}}), tu::vec({0.0}));
  NoiseSpec ns;
  ns.dim = 1;
  CHECK_THROWS_AS(generate_batch(hard, ns, 4), InvalidInputError);
  auto m = tu::model_at_tau(tu::mat({{0.5}}), tu::vec({0.0}), 0.5);
  NoiseSpec wrong;
  wrong.dim = 2;
  CHECK_THROWS_AS(generate_batch(m, wrong, 4), InvalidInputError);
  SampleBatch bad_noise(1, 2);
  bad_noise << 0.0, 0.0;
  CHECK_THROWS_AS(pipeline_matrices(m, bad_noise), InvalidInputError);
}

TEST_CASE("spread from the codes grows with epsilon") {
  auto ring = make_ring(256, 9);
  auto codes = LatentCodes::from_points(ring.points);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(256);
  NoiseSpec ns;
  ns.dim = 2;
  ns.seed = 123;

  double prev = -1.0;
  for (double eps : {1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
    auto model = PotentialModel::make(
        codes, h, SmoothingConfig::from_epsilon(eps, 256));
    SampleBatch out = generate_batch(model, ns, 1024);
    double mean_dist = 0.0;
    for (Index j = 0; j < out.rows(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < codes.n(); ++i)
        best = std::min(best,
                        (out.row(j) - codes.points.row(i)).norm());
      mean_dist += best;
    }
    mean_dist /= static_cast<double>(out.rows());
    CHECK(mean_dist >= prev);
    prev = mean_dist;
  }
}
