#include "mdiplus/stumps.hpp"

#include <cmath>

#include "mdiplus/errors.hpp"

namespace mdiplus {

double stump_scale_left(const Split& s) {
  const double nl = static_cast<double>(s.n_left);
  const double nr = static_cast<double>(s.n_right);
  return nr / std::sqrt(nl * nr);
}

double stump_scale_right(const Split& s) {
  const double nl = static_cast<double>(s.n_left);
  const double nr = static_cast<double>(s.n_right);
  return -nl / std::sqrt(nl * nr);
}

TransformedMatrix transform(const TreeStructure& tree,
                            const Eigen::MatrixXd& x, bool augment_raw) {
  if (x.cols() != tree.p) {
    throw ConfigError("design has a different feature count than the tree");
  }
  TransformedMatrix tm;
  const int p = tree.p;
  tm.blocks.resize(static_cast<std::size_t>(p));
  tm.raw_col.assign(static_cast<std::size_t>(p), -1);

  std::vector<int> split_to_col(tree.splits.size(), -1);
  int m = 0;
  for (int k = 0; k < p; ++k) {
    const auto& block_splits = tree.splits_by_feature[static_cast<std::size_t>(k)];
    const int begin = m;
    for (int split_id : block_splits) {
      split_to_col[static_cast<std::size_t>(split_id)] = m;
      tm.col_split.push_back(split_id);
      tm.col_feature.push_back(k);
      ++m;
    }
    if (augment_raw && !block_splits.empty()) {
      tm.raw_col[static_cast<std::size_t>(k)] = m;
      tm.col_split.push_back(-1);
      tm.col_feature.push_back(k);
      ++m;
    }
    tm.blocks[static_cast<std::size_t>(k)] = {begin, m};
  }

  tm.z = Eigen::MatrixXd::Zero(x.rows(), m);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int v = 0;
    while (tree.nodes[v].split >= 0) {
      const int split_id = tree.nodes[v].split;
      const Split& s = tree.splits[split_id];
      const bool left = x(i, s.feature) <= s.threshold;
      tm.z(i, split_to_col[static_cast<std::size_t>(split_id)]) =
          left ? stump_scale_left(s) : stump_scale_right(s);
      v = left ? tree.nodes[v].left : tree.nodes[v].right;
    }
  }
  for (int k = 0; k < p; ++k) {
    if (tm.raw_col[static_cast<std::size_t>(k)] >= 0) {
      tm.z.col(tm.raw_col[static_cast<std::size_t>(k)]) = x.col(k);
    }
  }
  return tm;
}

Eigen::MatrixXd partial_design(const TransformedMatrix& tm, int feature) {
  if (feature < 0 ||
      feature >= static_cast<int>(tm.blocks.size())) {
    throw ConfigError("partial_design: feature index out of range");
  }
  Eigen::MatrixXd out = tm.z;
  const auto [begin, end] = tm.blocks[static_cast<std::size_t>(feature)];
  const Eigen::Index n = out.rows();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    if (j >= begin && j < end) continue;
    out.col(j).setConstant(tm.z.col(j).sum() / static_cast<double>(n));
  }
  return out;
}

}  // namespace mdiplus
