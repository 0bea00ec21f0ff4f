#include "otsmooth/potential.hpp"

#include <cmath>

namespace otsmooth {

namespace {

void check_point(const PotentialModel& model, const Eigen::RowVectorXd& x) {
  require(x.cols() == model.d(),
          "query point dimension does not match the codes");
  require(x.allFinite(), "query point has non-finite entries");
}

const SmoothingConfig& need_smoothing(const PotentialModel& model) {
  if (!model.smoothing)
    throw ConfigError("model has no smoothing configured; set epsilon first");
  return *model.smoothing;
}

}  // namespace

LatentCodes LatentCodes::from_points(Eigen::MatrixXd pts) {
  require(pts.rows() >= 1, "need at least one code");
  require(pts.cols() >= 1, "codes must have at least one coordinate");
  require(pts.allFinite(), "codes contain non-finite values");
  return LatentCodes{std::move(pts)};
}

SmoothingConfig SmoothingConfig::from_epsilon(double epsilon, Index n) {
  require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon must be positive");
  require(n >= 1, "need at least one code");
  SmoothingConfig cfg;
  cfg.epsilon = epsilon;
  cfg.tau = n == 1 ? epsilon
                   : epsilon / std::log(static_cast<double>(n));
  return cfg;
}

PotentialModel PotentialModel::make(LatentCodes codes, Eigen::VectorXd heights,
                                    std::optional<SmoothingConfig> smoothing) {
  require(heights.size() == codes.n(),
          "heights length does not match the number of codes");
  require(heights.allFinite(), "heights contain non-finite values");
  const double sum = heights.sum();
  require(std::abs(sum) <= 1e-9 * static_cast<double>(codes.n()),
          "heights must be centered to zero sum");
  if (smoothing) {
    require(smoothing->tau > 0.0 && std::isfinite(smoothing->tau),
            "smoothing temperature must be positive and finite");
  }
  return PotentialModel{std::move(codes), std::move(heights),
                        std::move(smoothing)};
}

namespace detail {

void cell_scores(const Eigen::MatrixXd& Y, const Eigen::VectorXd& h,
                 const Eigen::RowVectorXd& x, Eigen::VectorXd& out) {
  const Index n = Y.rows();
  const Index d = Y.cols();
  out.resize(n);
  for (Index i = 0; i < n; ++i) {
    double s = h(i);
    for (Index k = 0; k < d; ++k) s += Y(i, k) * x(k);
    out(i) = s;
  }
}

Index argmax_row(const Eigen::VectorXd& v) {
  Index best = 0;
  double best_v = v(0);
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > best_v) {
      best_v = v(i);
      best = i;
    }
  }
  return best;
}

SoftmaxStats softmax_weights(const Eigen::VectorXd& v, double tau,
                             Eigen::VectorXd& w) {
  const Index n = v.size();
  w.resize(n);
  double vmax = v(0);
  for (Index i = 1; i < n; ++i) vmax = v(i) > vmax ? v(i) : vmax;
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double e = std::exp((v(i) - vmax) / tau);
    w(i) = e;
    sum += e;  // >= 1: the max term contributes exp(0)
  }
  for (Index i = 0; i < n; ++i) w(i) /= sum;
  return SoftmaxStats{vmax, std::log(sum)};
}

void weighted_code_average(const Eigen::MatrixXd& Y, const Eigen::VectorXd& w,
                           Eigen::RowVectorXd& out) {
  const Index n = Y.rows();
  const Index d = Y.cols();
  out.resize(d);
  for (Index k = 0; k < d; ++k) {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) acc += w(i) * Y(i, k);
    out(k) = acc;
  }
}

}  // namespace detail

double brenier_potential(const PotentialModel& model,
                         const Eigen::RowVectorXd& x) {
  check_point(model, x);
  Eigen::VectorXd v;
  detail::cell_scores(model.codes.points, model.heights, x, v);
  return v(detail::argmax_row(v));
}

CellAssignment hard_ot_map(const PotentialModel& model,
                           const Eigen::RowVectorXd& x) {
  check_point(model, x);
  Eigen::VectorXd v;
  detail::cell_scores(model.codes.points, model.heights, x, v);
  const Index i = detail::argmax_row(v);
  return CellAssignment{i, model.codes.points.row(i)};
}

double smoothed_potential(const PotentialModel& model,
                          const Eigen::RowVectorXd& x) {
  check_point(model, x);
  const SmoothingConfig& sm = need_smoothing(model);
  Eigen::VectorXd v, w;
  detail::cell_scores(model.codes.points, model.heights, x, v);
  const auto stats = detail::softmax_weights(v, sm.tau, w);
  // vmax + tau*(log S - log n): log S is in [0, log n], so the gap to the
  // hard potential is nonnegative and at most tau*log(n) = epsilon.
  return stats.vmax +
         sm.tau * (stats.log_sum - std::log(static_cast<double>(model.n())));
}

Eigen::RowVectorXd smoothed_ot_map(const PotentialModel& model,
                                   const Eigen::RowVectorXd& x) {
  check_point(model, x);
  const SmoothingConfig& sm = need_smoothing(model);
  Eigen::VectorXd v, w;
  detail::cell_scores(model.codes.points, model.heights, x, v);
  detail::softmax_weights(v, sm.tau, w);
  Eigen::RowVectorXd out;
  detail::weighted_code_average(model.codes.points, w, out);
  return out;
}

}  // namespace otsmooth
