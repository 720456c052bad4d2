#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mdiplus/dataset.hpp"
#include "mdiplus/tree.hpp"

namespace mdiplus {

struct FittedTree {
  TreeStructure tree;
  BootstrapIndex bootstrap;
};

struct Forest {
  ForestParams params;  // resolved values
  Task task = Task::kRegression;
  std::uint64_t seed = 0;
  int n_features = 0;
  int n_samples = 0;  // rows of the training data
  std::vector<std::string> feature_names;
  std::vector<FittedTree> trees;
};

// Grows params.n_trees CART trees on independent bootstrap samples. Tree t
// draws its bootstrap and growth randomness from streams derived from
// (seed, t), so the result is identical for every thread count.
Forest fit_forest(const Dataset& data, const ForestParams& params,
                  std::uint64_t seed, int threads = 0);

// Mean of per-tree predictions (averaged class-1 probability for
// classification).
Eigen::VectorXd predict(const Forest& forest, const Eigen::MatrixXd& x,
                        int threads = 0);

// Deterministic, lossless JSON (schema_version 1). Per tree the node array
// (preorder ids, split statistics inline) plus the bootstrap multiplicities.
std::string forest_to_json(const Forest& forest);
Forest forest_from_json(const std::string& text);
void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);

}  // namespace mdiplus
