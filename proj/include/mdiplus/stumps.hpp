#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "mdiplus/tree.hpp"

namespace mdiplus {

// Local decision-stump features of one tree, evaluated on a row set.
//
// Each split s contributes one column: rows in the left child take
// n_right / sqrt(n_left * n_right), rows in the right child take
// -n_left / sqrt(n_left * n_right), rows outside the split's node take 0
// (counts are in-bag multiplicities). Columns are grouped by feature
// (splits on feature k form the contiguous block `blocks[k]`, creation
// order within the block); with `augment_raw` every non-empty block gains
// the raw feature column as its last column.
struct TransformedMatrix {
  Eigen::MatrixXd z;
  std::vector<std::pair<int, int>> blocks;  // per feature: [begin, end)
  std::vector<int> raw_col;                 // per feature: column id or -1
  std::vector<int> col_split;               // per column: split id or -1 (raw)
  std::vector<int> col_feature;             // per column: source feature
};

double stump_scale_left(const Split& s);   // n_right / sqrt(n_left*n_right)
double stump_scale_right(const Split& s);  // -n_left / sqrt(n_left*n_right)

TransformedMatrix transform(const TreeStructure& tree,
                            const Eigen::MatrixXd& x, bool augment_raw);

// Copy of the design with every column *outside* feature k's block replaced
// by its column mean over the evaluated rows (mean imputation).
Eigen::MatrixXd partial_design(const TransformedMatrix& tm, int feature);

}  // namespace mdiplus
