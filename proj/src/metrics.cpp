#include "mdiplus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdiplus/errors.hpp"

namespace mdiplus {
namespace {

constexpr double kProbClamp = 1e-12;

void check_lengths(const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
  if (y.size() != pred.size()) {
    throw ConfigError("metric arguments have different lengths");
  }
  if (y.size() == 0) throw ConfigError("metric arguments are empty");
}

}  // namespace

std::string to_string(const SimilarityMetric& metric) {
  switch (metric.kind) {
    case MetricKind::kRSquared:
      return metric.normalized ? "r2" : "r2-unnormalized";
    case MetricKind::kNegLogLoss:
      return "neg-log-loss";
    case MetricKind::kNegHuberLoss:
      return "neg-huber";
  }
  return "r2";
}

SimilarityMetric metric_from_string(const std::string& s) {
  SimilarityMetric metric;
  if (s == "r2") {
    metric.kind = MetricKind::kRSquared;
    metric.normalized = true;
  } else if (s == "r2-unnormalized") {
    metric.kind = MetricKind::kRSquared;
    metric.normalized = false;
  } else if (s == "neg-log-loss") {
    metric.kind = MetricKind::kNegLogLoss;
  } else if (s == "neg-huber" || s == "neg-huber-loss") {
    metric.kind = MetricKind::kNegHuberLoss;
  } else {
    throw ConfigError("unknown metric \"" + s +
                      "\" (expected r2, r2-unnormalized, neg-log-loss, or "
                      "neg-huber)");
  }
  return metric;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  check_lengths(y, yhat);
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  if (ss_tot <= 0.0) {
    throw DataError("r_squared is undefined for a constant response");
  }
  const double ss_res = (y - yhat).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double unnormalized_r_squared(const Eigen::VectorXd& y,
                              const Eigen::VectorXd& yhat) {
  check_lengths(y, yhat);
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  const double ss_res = (y - yhat).squaredNorm();
  return (ss_tot - ss_res) / static_cast<double>(y.size());
}

double neg_log_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& p) {
  check_lengths(y, p);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw DataError("neg_log_loss needs a 0/1 response");
    }
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    total += y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return total / static_cast<double>(y.size());
}

double neg_huber_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                      double delta) {
  check_lengths(y, yhat);
  if (!(delta > 0.0)) throw ConfigError("huber delta must be > 0");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double r = y[i] - yhat[i];
    const double a = std::abs(r);
    total += a <= delta ? 0.5 * r * r : delta * a - 0.5 * delta * delta;
  }
  return -total / static_cast<double>(y.size());
}

double evaluate_metric(const SimilarityMetric& metric, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& pred) {
  switch (metric.kind) {
    case MetricKind::kRSquared:
      return metric.normalized ? r_squared(y, pred)
                               : unnormalized_r_squared(y, pred);
    case MetricKind::kNegLogLoss:
      return neg_log_loss(y, pred);
    case MetricKind::kNegHuberLoss:
      if (!std::isfinite(metric.huber_delta)) {
        throw ConfigError("neg-huber metric needs a resolved huber_delta");
      }
      return neg_huber_loss(y, pred, metric.huber_delta);
  }
  throw ConfigError("unknown metric kind");
}

double auroc(const std::vector<double>& scores,
             const std::vector<bool>& signal) {
  if (scores.size() != signal.size()) {
    throw ConfigError("auroc arguments have different lengths");
  }
  std::size_t n_signal = 0;
  for (bool s : signal) n_signal += s ? 1 : 0;
  if (n_signal == 0 || n_signal == signal.size()) {
    throw DataError("auroc needs at least one signal and one non-signal "
                    "feature");
  }
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!signal[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (signal[j]) continue;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(n_signal) *
                 static_cast<double>(signal.size() - n_signal));
}

std::vector<int> ranking_from_scores(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;  // -inf naturally sorts last
    return a < b;
  });
  return order;
}

std::vector<int> ranks_from_scores(const std::vector<double>& scores) {
  const std::vector<int> order = ranking_from_scores(scores);
  std::vector<int> ranks(scores.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    ranks[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos) + 1;
  }
  return ranks;
}

double rbo(const std::vector<int>& rank_a, const std::vector<int>& rank_b,
           double persistence) {
  if (!(persistence > 0.0) || !(persistence < 1.0)) {
    throw ConfigError("rbo persistence must lie in (0, 1)");
  }
  if (rank_a.size() != rank_b.size() || rank_a.empty()) {
    throw DataError("rbo rankings must be non-empty and equally long");
  }
  const std::size_t d_max = rank_a.size();
  std::vector<bool> seen_a(d_max, false), seen_b(d_max, false);
  for (std::size_t i = 0; i < d_max; ++i) {
    const int a = rank_a[i];
    const int b = rank_b[i];
    if (a < 0 || a >= static_cast<int>(d_max) ||
        seen_a[static_cast<std::size_t>(a)] || b < 0 ||
        b >= static_cast<int>(d_max) || seen_b[static_cast<std::size_t>(b)]) {
      throw DataError("rbo arguments must be permutations of the same set");
    }
    seen_a[static_cast<std::size_t>(a)] = true;
    seen_b[static_cast<std::size_t>(b)] = true;
  }

  std::vector<bool> in_a(d_max, false), in_b(d_max, false);
  double overlap = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  double weight = 1.0;  // persistence^(d-1)
  for (std::size_t d = 0; d < d_max; ++d) {
    const int a = rank_a[d];
    const int b = rank_b[d];
    if (in_b[static_cast<std::size_t>(a)]) overlap += 1.0;
    in_a[static_cast<std::size_t>(a)] = true;
    if (a == b) {
      overlap += 1.0;
    } else if (in_a[static_cast<std::size_t>(b)]) {
      overlap += 1.0;
    }
    in_b[static_cast<std::size_t>(b)] = true;
    numerator += weight * overlap / static_cast<double>(d + 1);
    denominator += weight;
    weight *= persistence;
  }
  return numerator / denominator;
}

}  // namespace mdiplus
