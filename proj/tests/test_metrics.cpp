#include "mdiplus/metrics.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "mdiplus/errors.hpp"

using namespace mdiplus;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("r_squared on the worked example") {
  Eigen::VectorXd y(4), yhat(4);
  y << 0, 0, 1, 1;
  yhat << 0.25, 0.25, 0.75, 0.75;
  CHECK(r_squared(y, yhat) == doctest::Approx(0.75));
  CHECK(r_squared(y, y) == doctest::Approx(1.0));
  Eigen::VectorXd constant = Eigen::VectorXd::Constant(4, y.mean());
  CHECK(r_squared(y, constant) == doctest::Approx(0.0));
}

TEST_CASE("r_squared rejects a constant response") {
  Eigen::VectorXd y = Eigen::VectorXd::Constant(5, 2.0);
  Eigen::VectorXd yhat = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(r_squared(y, yhat), DataError);
}

TEST_CASE("unnormalized r_squared scales by response variance") {
  Eigen::VectorXd y(4), yhat(4);
  y << 0, 0, 1, 1;
  yhat << 0.25, 0.25, 0.75, 0.75;
  // SS_tot = 1, SS_res = 0.25, n = 4.
  CHECK(unnormalized_r_squared(y, yhat) == doctest::Approx(0.1875));
  // Perfect fit explains the full per-sample variance.
  CHECK(unnormalized_r_squared(y, y) == doctest::Approx(0.25));
  // Scale covariance: y -> c*y multiplies the score by c^2.
  CHECK(unnormalized_r_squared(3.0 * y, 3.0 * yhat) ==
        doctest::Approx(9.0 * 0.1875));
}

TEST_CASE("neg_log_loss pinned values") {
  Eigen::VectorXd y(4);
  y << 0, 1, 0, 1;
  Eigen::VectorXd half = Eigen::VectorXd::Constant(4, 0.5);
  CHECK(neg_log_loss(y, half) == doctest::Approx(-std::log(2.0)));
  CHECK(neg_log_loss(y, y) == doctest::Approx(0.0).epsilon(1e-9));
  // Clamp keeps exact 0/1 predictions finite.
  Eigen::VectorXd wrong = Eigen::VectorXd::Ones(4) - y;
  CHECK(std::isfinite(neg_log_loss(y, wrong)));
  CHECK(neg_log_loss(y, wrong) == doctest::Approx(std::log(1e-12)));
}

TEST_CASE("neg_log_loss validates labels") {
  Eigen::VectorXd y(2), p(2);
  y << 0, 0.5;
  p << 0.5, 0.5;
  CHECK_THROWS_AS(neg_log_loss(y, p), DataError);
}

TEST_CASE("neg_huber_loss matches halved mse under a large delta") {
  Eigen::VectorXd y(4), yhat(4);
  y << 1, 2, 3, 4;
  yhat << 1.5, 1.5, 3.25, 4.0;
  const double mse =
      (y - yhat).squaredNorm() / static_cast<double>(y.size());
  CHECK(neg_huber_loss(y, yhat, 100.0) == doctest::Approx(-0.5 * mse));
  CHECK(neg_huber_loss(y, y, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("neg_huber_loss applies the linear tail") {
  Eigen::VectorXd y(1), yhat(1);
  y << 10.0;
  yhat << 0.0;
  // rho_1(10) = 1*10 - 0.5.
  CHECK(neg_huber_loss(y, yhat, 1.0) == doctest::Approx(-9.5));
}

TEST_CASE("auroc pinned values and tie handling") {
  CHECK(auroc({4, 3, 2, 1}, {true, true, false, false}) ==
        doctest::Approx(1.0));
  CHECK(auroc({1, 1, 1, 1}, {true, false, true, false}) ==
        doctest::Approx(0.5));
  CHECK(auroc({1, 2, 3, 4}, {true, true, false, false}) ==
        doctest::Approx(0.0));
  // One tie out of two pairs: (2 vs 2) = 0.5, (2 vs 1) = 1 -> 0.75.
  CHECK(auroc({2, 2, 1}, {true, false, false}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(auroc({1, 2}, {true, true}), DataError);
}

TEST_CASE("auroc is invariant under increasing transforms") {
  std::vector<double> scores = {0.3, 2.5, -1.0, 0.9, 0.0};
  std::vector<bool> signal = {true, false, false, true, false};
  std::vector<double> mapped(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    mapped[i] = std::exp(scores[i]) + 10.0;
  }
  CHECK(auroc(scores, signal) == doctest::Approx(auroc(mapped, signal)));
}

TEST_CASE("ranking sorts descending with index ties and -inf last") {
  std::vector<double> scores = {0.5, -kInf, 2.0, 0.5, -kInf};
  std::vector<int> ranking = ranking_from_scores(scores);
  CHECK(ranking == std::vector<int>{2, 0, 3, 1, 4});
  std::vector<int> ranks = ranks_from_scores(scores);
  CHECK(ranks == std::vector<int>{2, 4, 1, 3, 5});
}

TEST_CASE("rbo pinned values") {
  CHECK(rbo({0, 1}, {1, 0}, 0.9) == doctest::Approx(0.9 / 1.9).epsilon(1e-5));
  CHECK(rbo({0, 1, 2, 3}, {0, 1, 2, 3}, 0.9) == doctest::Approx(1.0));
  CHECK(rbo({2, 0, 1}, {2, 0, 1}, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("rbo is symmetric and only 1 for identical rankings") {
  std::vector<int> a = {0, 2, 1, 3};
  std::vector<int> b = {3, 2, 0, 1};
  CHECK(rbo(a, b, 0.9) == doctest::Approx(rbo(b, a, 0.9)));
  CHECK(rbo(a, b, 0.9) < 1.0);
}

TEST_CASE("rbo weights the top of the list more") {
  // Swapping the top two hurts more than swapping the bottom two.
  std::vector<int> base = {0, 1, 2, 3};
  const double top_swap = rbo(base, {1, 0, 2, 3}, 0.9);
  const double bottom_swap = rbo(base, {0, 1, 3, 2}, 0.9);
  CHECK(top_swap < bottom_swap);
}

TEST_CASE("rbo rejects malformed rankings") {
  CHECK_THROWS_AS(rbo({0, 0, 1}, {0, 1, 2}, 0.9), DataError);
  CHECK_THROWS_AS(rbo({0, 1}, {0, 1, 2}, 0.9), DataError);
  CHECK_THROWS_AS(rbo({0, 1}, {0, 1}, 1.5), ConfigError);
}

TEST_CASE("metric parsing round-trips") {
  CHECK(metric_from_string("r2").kind == MetricKind::kRSquared);
  CHECK(metric_from_string("r2").normalized);
  CHECK_FALSE(metric_from_string("r2-unnormalized").normalized);
  CHECK(metric_from_string("neg-log-loss").kind == MetricKind::kNegLogLoss);
  CHECK(metric_from_string("neg-huber").kind == MetricKind::kNegHuberLoss);
  CHECK(to_string(metric_from_string("r2-unnormalized")) ==
        "r2-unnormalized");
  CHECK_THROWS_AS(metric_from_string("mse"), ConfigError);
}

TEST_CASE("evaluate_metric dispatches and validates") {
  Eigen::VectorXd y(4), yhat(4);
  y << 0, 0, 1, 1;
  yhat << 0.25, 0.25, 0.75, 0.75;
  SimilarityMetric m;
  m.kind = MetricKind::kRSquared;
  CHECK(evaluate_metric(m, y, yhat) == doctest::Approx(0.75));
  m.normalized = false;
  CHECK(evaluate_metric(m, y, yhat) == doctest::Approx(0.1875));
  m.kind = MetricKind::kNegHuberLoss;
  CHECK_THROWS_AS(evaluate_metric(m, y, yhat), ConfigError);
  m.huber_delta = 10.0;
  CHECK(std::isfinite(evaluate_metric(m, y, yhat)));
}
