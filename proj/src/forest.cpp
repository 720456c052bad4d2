#include "mdiplus/forest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mdiplus/errors.hpp"
#include "mdiplus/parallel.hpp"

namespace mdiplus {

using nlohmann::json;

Forest fit_forest(const Dataset& data, const ForestParams& params,
                  std::uint64_t seed, int threads) {
  validate_dataset(data);
  Forest forest;
  forest.task = data.task;
  forest.seed = seed;
  forest.n_features = static_cast<int>(data.p());
  forest.n_samples = static_cast<int>(data.n());
  forest.feature_names = data.feature_names;
  forest.params = resolve_params(params, data.task, forest.n_features);
  forest.trees.resize(static_cast<std::size_t>(forest.params.n_trees));

  const std::size_t n = static_cast<std::size_t>(data.n());
  parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
    Rng boot_rng(seed, Rng::derive(seed, stream::kBootstrap, t));
    Rng grow_rng(seed, Rng::derive(seed, stream::kGrow, t));
    FittedTree& fitted = forest.trees[t];
    fitted.bootstrap = bootstrap_sample(n, boot_rng);
    const std::vector<int> rows = in_bag_rows(fitted.bootstrap);
    fitted.tree =
        grow_tree(data.x, data.y, rows, forest.params, data.task, grow_rng);
  });
  return forest;
}

Eigen::VectorXd predict(const Forest& forest, const Eigen::MatrixXd& x,
                        int threads) {
  if (forest.trees.empty()) throw ConfigError("forest has no trees");
  std::vector<Eigen::VectorXd> per_tree(forest.trees.size());
  parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
    per_tree[t] = predict(forest.trees[t].tree, x);
  });
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.rows());
  for (const auto& v : per_tree) sum += v;  // fixed order: deterministic bytes
  return sum / static_cast<double>(forest.trees.size());
}

std::string forest_to_json(const Forest& forest) {
  json root;
  root["schema_version"] = 1;
  root["model"] = "random-forest";
  root["task"] = to_string(forest.task);
  root["seed"] = forest.seed;
  root["n_features"] = forest.n_features;
  root["n_samples"] = forest.n_samples;
  root["feature_names"] = forest.feature_names;
  root["params"] = {{"n_trees", forest.params.n_trees},
                    {"max_features", forest.params.max_features},
                    {"min_samples_leaf", forest.params.min_samples_leaf},
                    {"max_depth", forest.params.max_depth}};
  json trees = json::array();
  for (const FittedTree& fitted : forest.trees) {
    const TreeStructure& tree = fitted.tree;
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
      nodes.push_back({{"left", node.left},
                       {"right", node.right},
                       {"split", node.split},
                       {"n", node.n_node},
                       {"mean", node.mean}});
    }
    json splits = json::array();
    for (const Split& s : tree.splits) {
      splits.push_back({{"node", s.node_id},
                        {"feature", s.feature},
                        {"threshold", s.threshold},
                        {"n_node", s.n_node},
                        {"n_left", s.n_left},
                        {"n_right", s.n_right},
                        {"mean_node", s.mean_node},
                        {"mean_left", s.mean_left},
                        {"mean_right", s.mean_right},
                        {"gain", s.gain}});
    }
    trees.push_back({{"root_impurity", tree.root_impurity},
                     {"n_in_bag", tree.n_in_bag},
                     {"nodes", nodes},
                     {"splits", splits},
                     {"in_bag", fitted.bootstrap.in_bag_count}});
  }
  root["trees"] = std::move(trees);
  return root.dump();
}

Forest forest_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model JSON: ") + e.what());
  }
  try {
    if (root.at("schema_version").get<int>() != 1) {
      throw DataError("unsupported model schema_version");
    }
    if (root.at("model").get<std::string>() != "random-forest") {
      throw DataError("unsupported model type");
    }
    Forest forest;
    forest.task = task_from_string(root.at("task").get<std::string>());
    forest.seed = root.at("seed").get<std::uint64_t>();
    forest.n_features = root.at("n_features").get<int>();
    forest.n_samples = root.at("n_samples").get<int>();
    forest.feature_names =
        root.at("feature_names").get<std::vector<std::string>>();
    const json& params = root.at("params");
    forest.params.n_trees = params.at("n_trees").get<int>();
    forest.params.max_features = params.at("max_features").get<int>();
    forest.params.min_samples_leaf = params.at("min_samples_leaf").get<int>();
    forest.params.max_depth = params.at("max_depth").get<int>();

    for (const json& jt : root.at("trees")) {
      FittedTree fitted;
      TreeStructure& tree = fitted.tree;
      tree.p = forest.n_features;
      tree.n_in_bag = jt.at("n_in_bag").get<int>();
      tree.root_impurity = jt.at("root_impurity").get<double>();
      tree.splits_by_feature.resize(
          static_cast<std::size_t>(forest.n_features));
      for (const json& jn : jt.at("nodes")) {
        TreeNode node;
        node.left = jn.at("left").get<int>();
        node.right = jn.at("right").get<int>();
        node.split = jn.at("split").get<int>();
        node.n_node = jn.at("n").get<int>();
        node.mean = jn.at("mean").get<double>();
        tree.nodes.push_back(node);
      }
      for (const json& js : jt.at("splits")) {
        Split s;
        s.node_id = js.at("node").get<int>();
        s.feature = js.at("feature").get<int>();
        s.threshold = js.at("threshold").get<double>();
        s.n_node = js.at("n_node").get<int>();
        s.n_left = js.at("n_left").get<int>();
        s.n_right = js.at("n_right").get<int>();
        s.mean_node = js.at("mean_node").get<double>();
        s.mean_left = js.at("mean_left").get<double>();
        s.mean_right = js.at("mean_right").get<double>();
        s.gain = js.at("gain").get<double>();
        if (s.feature < 0 || s.feature >= forest.n_features) {
          throw DataError("model references an out-of-range feature");
        }
        tree.splits_by_feature[static_cast<std::size_t>(s.feature)].push_back(
            static_cast<int>(tree.splits.size()));
        tree.splits.push_back(s);
      }
      fitted.bootstrap.in_bag_count =
          jt.at("in_bag").get<std::vector<int>>();
      for (std::size_t i = 0; i < fitted.bootstrap.in_bag_count.size(); ++i) {
        if (fitted.bootstrap.in_bag_count[i] == 0) {
          fitted.bootstrap.oob.push_back(static_cast<int>(i));
        }
      }
      forest.trees.push_back(std::move(fitted));
    }
    if (forest.trees.empty()) throw DataError("model contains no trees");
    return forest;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid model JSON: ") + e.what());
  }
}

void save_forest(const Forest& forest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << forest_to_json(forest) << '\n';
  if (!out) throw DataError("failed while writing: " + path);
}

Forest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return forest_from_json(buffer.str());
}

}  // namespace mdiplus
