#pragma once

#include <Eigen/Core>
#include <vector>

#include "mdiplus/dataset.hpp"
#include "mdiplus/rng.hpp"

namespace mdiplus {

struct ForestParams {
  int n_trees = 100;
  // 0 resolves to ceil(p/3) for regression, ceil(sqrt(p)) for classification.
  int max_features = 0;
  // 0 resolves to 5 for regression, 1 for classification.
  int min_samples_leaf = 0;
  int max_depth = -1;  // -1: unlimited
};

ForestParams resolve_params(ForestParams params, Task task, int p);

// One axis-aligned split. Counts are in-bag multiplicities; threshold is the
// midpoint between adjacent distinct values; rows with x <= threshold go
// left. `gain` is the per-sample impurity decrease of the node (variance
// units for regression trees, Gini units -- exactly twice the variance
// decrease for binary labels -- for classification trees).
struct Split {
  int node_id = -1;
  int feature = -1;
  double threshold = 0.0;
  int n_node = 0;
  int n_left = 0;
  int n_right = 0;
  double mean_node = 0.0;
  double mean_left = 0.0;
  double mean_right = 0.0;
  double gain = 0.0;
};

struct TreeNode {
  int left = -1;   // child ids; -1 for leaves
  int right = -1;
  int split = -1;  // index into TreeStructure::splits; -1 for leaves
  int n_node = 0;
  double mean = 0.0;  // in-bag mean response; the prediction at leaves
};

struct TreeStructure {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; preorder creation
  std::vector<Split> splits;    // creation order
  std::vector<std::vector<int>> splits_by_feature;  // split ids per feature
  int p = 0;
  int n_in_bag = 0;
  double root_impurity = 0.0;  // per-sample impurity of the root

  // Index of the leaf that x falls into.
  int leaf_for(const Eigen::MatrixXd& x, Eigen::Index row) const;
};

// Candidate found by scanning one node. `gain` as in Split.
struct SplitCandidate {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  int n_left = 0;
  int n_right = 0;
  double mean_left = 0.0;
  double mean_right = 0.0;
};

// Scans `candidate_features` over the node rows (a multiset of row ids) and
// returns the best valid split: maximal gain, ties broken by lowest feature
// index then lowest threshold. Splits leaving either side below
// min_samples_leaf are not valid.
SplitCandidate best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const std::vector<int>& rows,
                          const std::vector<int>& candidate_features,
                          int min_samples_leaf, Task task);

// Grows a CART tree on the row multiset (ascending with multiplicity for a
// bootstrap sample). A split is actualized only when its gain exceeds
// 1e-12 * root impurity; pure nodes and nodes smaller than
// 2*min_samples_leaf become leaves.
TreeStructure grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const std::vector<int>& rows,
                        const ForestParams& resolved, Task task, Rng& rng);

// Mean in-bag response of the leaf each row falls into (class-1 fraction for
// classification trees).
Eigen::VectorXd predict(const TreeStructure& tree, const Eigen::MatrixXd& x);

}  // namespace mdiplus
