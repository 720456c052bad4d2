#pragma once

#include <Eigen/Core>
#include <limits>
#include <string>
#include <vector>

namespace mdiplus {

// Similarity metrics score agreement between a response vector and a
// prediction vector; larger is always better.

enum class MetricKind { kRSquared, kNegLogLoss, kNegHuberLoss };

struct SimilarityMetric {
  MetricKind kind = MetricKind::kRSquared;
  bool normalized = true;  // r-squared only: divide by the total variance
  // Huber threshold in response units. NaN defers to the caller, which
  // resolves an adaptive threshold (robust residual scale of the model fit).
  double huber_delta = std::numeric_limits<double>::quiet_NaN();
};

std::string to_string(const SimilarityMetric& metric);
// Accepts r2, r2-unnormalized, neg-log-loss, neg-huber.
SimilarityMetric metric_from_string(const std::string& s);

// 1 - SS_res/SS_tot. Throws on constant y.
double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// (SS_tot - SS_res)/n: the per-sample explained squared deviation.
double unnormalized_r_squared(const Eigen::VectorXd& y,
                              const Eigen::VectorXd& yhat);

// Mean log-likelihood (1/n)Sum[y log p + (1-y) log(1-p)] with p clamped to
// [1e-12, 1-1e-12]; 0 is a perfect predictor, -log 2 an uninformative one.
double neg_log_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& p);

// -(1/n)Sum rho_delta(y - yhat) with rho_delta(r) = r^2/2 for |r| <= delta,
// delta|r| - delta^2/2 otherwise.
double neg_huber_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                      double delta);

// Dispatches on metric.kind; huber requires a finite metric.huber_delta.
double evaluate_metric(const SimilarityMetric& metric, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& pred);

// Mann-Whitney statistic of separating signal from non-signal features by
// score: P(signal > non-signal) + 0.5 P(equal) over all pairs.
double auroc(const std::vector<double>& scores,
             const std::vector<bool>& signal);

// Feature ids sorted by descending score; ties (and -inf scores, which sort
// last) break by lower feature id.
std::vector<int> ranking_from_scores(const std::vector<double>& scores);

// 1-based rank of every feature under ranking_from_scores.
std::vector<int> ranks_from_scores(const std::vector<double>& scores);

// Rank-based overlap of two permutations of {0..D-1}: the prefix-overlap
// average [Sum_d p^(d-1) |A_:d intersect B_:d| / d] / [Sum_d p^(d-1)].
// Identical rankings score exactly 1.
double rbo(const std::vector<int>& rank_a, const std::vector<int>& rank_b,
           double persistence);

}  // namespace mdiplus
