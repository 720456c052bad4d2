#include "mdiplus/tree.hpp"

#include <algorithm>
#include <cmath>

#include "mdiplus/errors.hpp"

namespace mdiplus {
namespace {

constexpr double kGainTolerance = 1e-12;  // relative to root impurity

struct NodeStats {
  double mean = 0.0;
  double impurity = 0.0;  // per-sample; Gini for classification
  bool pure = false;
};

NodeStats node_stats(const Eigen::VectorXd& y, const std::vector<int>& rows,
                     Task task) {
  NodeStats s;
  double sum = 0.0;
  double lo = y[rows.front()];
  double hi = lo;
  for (int r : rows) {
    sum += y[r];
    lo = std::min(lo, y[r]);
    hi = std::max(hi, y[r]);
  }
  const double n = static_cast<double>(rows.size());
  s.mean = sum / n;
  s.pure = (lo == hi);
  if (s.pure) {
    s.impurity = 0.0;
    return s;
  }
  double ss = 0.0;
  for (int r : rows) {
    const double d = y[r] - s.mean;
    ss += d * d;
  }
  s.impurity = ss / n;
  if (task == Task::kBinaryClassification) s.impurity *= 2.0;  // Gini
  return s;
}

}  // namespace

ForestParams resolve_params(ForestParams params, Task task, int p) {
  if (params.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (p < 1) throw ConfigError("need at least one feature");
  if (params.max_features == 0) {
    params.max_features =
        task == Task::kRegression
            ? static_cast<int>(std::ceil(static_cast<double>(p) / 3.0))
            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  }
  if (params.max_features < 0 || params.max_features > p) {
    throw ConfigError("max_features must lie in [1, p]");
  }
  if (params.min_samples_leaf == 0) {
    params.min_samples_leaf = task == Task::kRegression ? 5 : 1;
  }
  if (params.min_samples_leaf < 0) {
    throw ConfigError("min_samples_leaf must be >= 1");
  }
  if (params.max_depth < -1) throw ConfigError("max_depth must be >= -1");
  return params;
}

SplitCandidate best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const std::vector<int>& rows,
                          const std::vector<int>& candidate_features,
                          int min_samples_leaf, Task task) {
  SplitCandidate best;
  const std::size_t n = rows.size();
  if (n < 2 * static_cast<std::size_t>(min_samples_leaf) || n < 2) return best;

  const double impurity_factor =
      task == Task::kBinaryClassification ? 2.0 : 1.0;
  std::vector<std::pair<double, double>> vals;  // (x, y)
  vals.reserve(n);
  double y_total = 0.0;
  for (int r : rows) y_total += y[r];

  std::vector<int> features = candidate_features;
  std::sort(features.begin(), features.end());

  for (int k : features) {
    vals.clear();
    for (int r : rows) vals.emplace_back(x(r, k), y[r]);
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (vals.front().first == vals.back().first) continue;  // constant column

    double left_sum = 0.0;
    const double total = static_cast<double>(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += vals[i].second;
      if (vals[i].first == vals[i + 1].first) continue;
      const double n_left = static_cast<double>(i + 1);
      const double n_right = total - n_left;
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
      const double mean_left = left_sum / n_left;
      const double mean_right = (y_total - left_sum) / n_right;
      const double diff = mean_left - mean_right;
      const double gain =
          impurity_factor * (n_left * n_right) / (total * total) * diff * diff;
      if (gain > best.gain || !best.found) {
        best.found = true;
        best.feature = k;
        best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
        best.gain = gain;
        best.n_left = static_cast<int>(i + 1);
        best.n_right = static_cast<int>(n - i - 1);
        best.mean_left = mean_left;
        best.mean_right = mean_right;
      }
    }
  }
  return best;
}

namespace {

struct Grower {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const ForestParams& params;
  Task task;
  Rng& rng;
  TreeStructure& tree;
  double gain_threshold = 0.0;

  void grow(int node_id, std::vector<int>&& rows, int depth) {
    TreeNode& init = tree.nodes[node_id];
    const NodeStats stats = node_stats(y, rows, task);
    init.n_node = static_cast<int>(rows.size());
    init.mean = stats.mean;

    const int msl = params.min_samples_leaf;
    if (stats.pure || rows.size() < 2 * static_cast<std::size_t>(msl) ||
        (params.max_depth >= 0 && depth >= params.max_depth)) {
      return;
    }
    const auto sampled = rng.sample_without_replacement(
        static_cast<std::size_t>(tree.p),
        static_cast<std::size_t>(params.max_features));
    std::vector<int> features(sampled.begin(), sampled.end());
    const SplitCandidate cand =
        best_split(x, y, rows, features, msl, task);
    if (!cand.found || !(cand.gain > gain_threshold)) return;

    Split split;
    split.node_id = node_id;
    split.feature = cand.feature;
    split.threshold = cand.threshold;
    split.n_node = static_cast<int>(rows.size());
    split.n_left = cand.n_left;
    split.n_right = cand.n_right;
    split.mean_node = stats.mean;
    split.mean_left = cand.mean_left;
    split.mean_right = cand.mean_right;
    split.gain = cand.gain;
    const int split_id = static_cast<int>(tree.splits.size());
    tree.splits.push_back(split);
    tree.splits_by_feature[cand.feature].push_back(split_id);

    std::vector<int> left_rows, right_rows;
    left_rows.reserve(cand.n_left);
    right_rows.reserve(cand.n_right);
    for (int r : rows) {
      (x(r, cand.feature) <= cand.threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].split = split_id;
    tree.nodes[node_id].left = left_id;
    tree.nodes[node_id].right = right_id;

    grow(left_id, std::move(left_rows), depth + 1);
    grow(right_id, std::move(right_rows), depth + 1);
  }
};

}  // namespace

TreeStructure grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<int>& rows,
                        const ForestParams& resolved, Task task, Rng& rng) {
  if (rows.empty()) throw ConfigError("cannot grow a tree on zero rows");
  TreeStructure tree;
  tree.p = static_cast<int>(x.cols());
  tree.n_in_bag = static_cast<int>(rows.size());
  tree.splits_by_feature.resize(static_cast<std::size_t>(tree.p));
  tree.root_impurity = node_stats(y, rows, task).impurity;
  tree.nodes.emplace_back();

  Grower grower{x, y, resolved, task, rng, tree,
                kGainTolerance * tree.root_impurity};
  std::vector<int> root_rows = rows;
  grower.grow(0, std::move(root_rows), 0);
  return tree;
}

int TreeStructure::leaf_for(const Eigen::MatrixXd& x, Eigen::Index row) const {
  int v = 0;
  while (nodes[v].split >= 0) {
    const Split& s = splits[nodes[v].split];
    v = x(row, s.feature) <= s.threshold ? nodes[v].left : nodes[v].right;
  }
  return v;
}

Eigen::VectorXd predict(const TreeStructure& tree, const Eigen::MatrixXd& x) {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = tree.nodes[tree.leaf_for(x, i)].mean;
  }
  return out;
}

}  // namespace mdiplus
