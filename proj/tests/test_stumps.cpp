#include "mdiplus/stumps.hpp"

#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mdiplus/rng.hpp"
#include "mdiplus/tree.hpp"

using namespace mdiplus;

namespace {

TreeStructure grow_full(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        ForestParams params = {}) {
  std::vector<int> rows(static_cast<std::size_t>(x.rows()));
  for (int i = 0; i < x.rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
  params.max_features = static_cast<int>(x.cols());
  if (params.min_samples_leaf == 0) params.min_samples_leaf = 1;
  ForestParams resolved =
      resolve_params(params, Task::kRegression, static_cast<int>(x.cols()));
  Rng rng(7, 1);
  return grow_tree(x, y, rows, resolved, Task::kRegression, rng);
}

}  // namespace

TEST_CASE("stump scales for balanced and unbalanced splits") {
  Split s;
  s.n_left = 2;
  s.n_right = 2;
  CHECK(stump_scale_left(s) == doctest::Approx(1.0));
  CHECK(stump_scale_right(s) == doctest::Approx(-1.0));

  s.n_left = 1;
  s.n_right = 3;
  CHECK(stump_scale_left(s) == doctest::Approx(std::sqrt(3.0)));
  CHECK(stump_scale_right(s) == doctest::Approx(-1.0 / std::sqrt(3.0)));
}

TEST_CASE("single balanced split gives the plus-minus-one column") {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 0, 0, 1, 1;
  TreeStructure tree = grow_full(x, y);
  REQUIRE(tree.splits.size() == 1);
  CHECK(tree.splits[0].threshold == doctest::Approx(2.5));

  TransformedMatrix tm = transform(tree, x, false);
  REQUIRE(tm.z.cols() == 1);
  CHECK(tm.z(0, 0) == doctest::Approx(1.0));
  CHECK(tm.z(1, 0) == doctest::Approx(1.0));
  CHECK(tm.z(2, 0) == doctest::Approx(-1.0));
  CHECK(tm.z(3, 0) == doctest::Approx(-1.0));
  CHECK(tm.col_split[0] == 0);
  CHECK(tm.col_feature[0] == 0);
}

TEST_CASE("rows at the threshold go left") {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  Eigen::VectorXd y(4);
  y << 0, 0, 1, 1;
  TreeStructure tree = grow_full(x, y);
  Eigen::MatrixXd probe(1, 1);
  probe << 2.5;  // exactly the threshold
  TransformedMatrix tm = transform(tree, probe, false);
  CHECK(tm.z(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("in-bag columns sum to zero and the Gram matrix is diagonal") {
  Rng rng(41, 2);
  const int n = 80;
  const int p = 3;
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    y[i] = x(i, 0) + 0.5 * x(i, 1) * x(i, 1) + 0.1 * rng.normal();
  }
  // Duplicate rows to mimic a bootstrap multiset.
  std::vector<int> rows;
  for (int i = 0; i < n; ++i) {
    rows.push_back(i);
    if (i % 3 == 0) rows.push_back(i);
  }
  ForestParams params;
  params.max_features = p;
  params.min_samples_leaf = 5;
  ForestParams resolved = resolve_params(params, Task::kRegression, p);
  Rng grow_rng(3, 5);
  TreeStructure tree = grow_tree(x, y, rows, resolved, Task::kRegression,
                                 grow_rng);
  REQUIRE(tree.splits.size() >= 3);

  // Evaluate on the in-bag multiset.
  Eigen::MatrixXd x_bag(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x_bag.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  }
  TransformedMatrix tm = transform(tree, x_bag, false);
  REQUIRE(tm.z.cols() == static_cast<Eigen::Index>(tree.splits.size()));

  for (Eigen::Index c = 0; c < tm.z.cols(); ++c) {
    CHECK(std::abs(tm.z.col(c).sum()) < 1e-9);
  }
  Eigen::MatrixXd gram = tm.z.transpose() * tm.z;
  for (Eigen::Index a = 0; a < gram.rows(); ++a) {
    for (Eigen::Index b = 0; b < gram.cols(); ++b) {
      if (a == b) {
        const Split& s = tree.splits[static_cast<std::size_t>(
            tm.col_split[static_cast<std::size_t>(a)])];
        CHECK(gram(a, a) == doctest::Approx(s.n_node).epsilon(1e-9));
      } else {
        CHECK(std::abs(gram(a, b)) < 1e-8);
      }
    }
  }
}

TEST_CASE("rows outside a split's node contribute zero") {
  // Tree: root splits on x0 at 0; the right child splits again on x0 at 2.
  Eigen::MatrixXd x(8, 1);
  x << -3, -2, -1, -0.5, 1, 1.5, 3, 4;
  Eigen::VectorXd y(8);
  y << 0, 0, 0, 0, 5, 5, 9, 9;
  TreeStructure tree = grow_full(x, y);
  REQUIRE(tree.splits.size() >= 2);

  TransformedMatrix tm = transform(tree, x, false);
  // Find the column of a non-root split and check rows routed elsewhere are 0.
  int deep_col = -1;
  for (std::size_t c = 0; c < tm.col_split.size(); ++c) {
    if (tree.splits[static_cast<std::size_t>(tm.col_split[c])].node_id != 0) {
      deep_col = static_cast<int>(c);
      break;
    }
  }
  REQUIRE(deep_col >= 0);
  const Split& deep =
      tree.splits[static_cast<std::size_t>(tm.col_split[
          static_cast<std::size_t>(deep_col)])];
  int zeros = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (tm.z(i, deep_col) == 0.0) ++zeros;
  }
  CHECK(zeros == 8 - deep.n_node);
}

TEST_CASE("raw augmentation appends the feature column per non-empty block") {
  Rng rng(99, 4);
  const int n = 60;
  const int p = 4;
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    y[i] = 2.0 * x(i, 0) - x(i, 2) + 0.05 * rng.normal();
  }
  ForestParams params;
  params.min_samples_leaf = 10;
  TreeStructure tree = grow_full(x, y, params);

  TransformedMatrix plain = transform(tree, x, false);
  TransformedMatrix aug = transform(tree, x, true);

  int nonempty = 0;
  for (int k = 0; k < p; ++k) {
    const auto& block = aug.blocks[static_cast<std::size_t>(k)];
    const int width = block.second - block.first;
    const int n_splits = static_cast<int>(
        tree.splits_by_feature[static_cast<std::size_t>(k)].size());
    if (n_splits == 0) {
      CHECK(width == 0);
      CHECK(aug.raw_col[static_cast<std::size_t>(k)] == -1);
      continue;
    }
    ++nonempty;
    CHECK(width == n_splits + 1);
    const int raw = aug.raw_col[static_cast<std::size_t>(k)];
    CHECK(raw == block.second - 1);
    CHECK(aug.col_split[static_cast<std::size_t>(raw)] == -1);
    CHECK(aug.col_feature[static_cast<std::size_t>(raw)] == k);
    CHECK((aug.z.col(raw) - x.col(k)).cwiseAbs().maxCoeff() == 0.0);
    // Stump columns inside the block match the unaugmented transform.
    for (int c = block.first; c < block.second - 1; ++c) {
      const int split_id = aug.col_split[static_cast<std::size_t>(c)];
      int plain_col = -1;
      for (std::size_t pc = 0; pc < plain.col_split.size(); ++pc) {
        if (plain.col_split[pc] == split_id) {
          plain_col = static_cast<int>(pc);
          break;
        }
      }
      REQUIRE(plain_col >= 0);
      CHECK((aug.z.col(c) - plain.z.col(plain_col)).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }
  REQUIRE(nonempty >= 1);
  CHECK(plain.z.cols() + nonempty == aug.z.cols());
}

TEST_CASE("blocks are grouped by feature in creation order") {
  Rng rng(5, 6);
  const int n = 120;
  const int p = 3;
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    y[i] = x(i, 0) + x(i, 1) + x(i, 2) + 0.1 * rng.normal();
  }
  ForestParams params;
  params.min_samples_leaf = 8;
  TreeStructure tree = grow_full(x, y, params);

  TransformedMatrix tm = transform(tree, x, false);
  int cursor = 0;
  for (int k = 0; k < p; ++k) {
    const auto& block = tm.blocks[static_cast<std::size_t>(k)];
    CHECK(block.first == cursor);
    const auto& ids = tree.splits_by_feature[static_cast<std::size_t>(k)];
    CHECK(block.second - block.first == static_cast<int>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const int col = block.first + static_cast<int>(j);
      CHECK(tm.col_split[static_cast<std::size_t>(col)] == ids[j]);
      CHECK(tm.col_feature[static_cast<std::size_t>(col)] == k);
    }
    cursor = block.second;
  }
  CHECK(cursor == static_cast<int>(tm.z.cols()));
}

TEST_CASE("partial design mean-imputes everything outside the block") {
  Rng rng(17, 8);
  const int n = 90;
  const int p = 3;
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    y[i] = x(i, 0) - 2.0 * x(i, 1) + 0.1 * rng.normal();
  }
  ForestParams params;
  params.min_samples_leaf = 10;
  TreeStructure tree = grow_full(x, y, params);
  TransformedMatrix tm = transform(tree, x, true);

  int k = -1;
  for (int j = 0; j < p; ++j) {
    if (tm.blocks[static_cast<std::size_t>(j)].second >
        tm.blocks[static_cast<std::size_t>(j)].first) {
      k = j;
      break;
    }
  }
  REQUIRE(k >= 0);
  Eigen::MatrixXd zk = partial_design(tm, k);
  REQUIRE(zk.rows() == tm.z.rows());
  REQUIRE(zk.cols() == tm.z.cols());
  const auto& block = tm.blocks[static_cast<std::size_t>(k)];
  for (Eigen::Index c = 0; c < zk.cols(); ++c) {
    const bool inside = c >= block.first && c < block.second;
    if (inside) {
      CHECK((zk.col(c) - tm.z.col(c)).cwiseAbs().maxCoeff() == 0.0);
    } else {
      const double mean = tm.z.col(c).mean();
      CHECK((zk.col(c).array() - mean).abs().maxCoeff() < 1e-12);
    }
  }
}
