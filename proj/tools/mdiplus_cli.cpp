// Command-line front end: fit forests, compute feature importances, run
// stability selection, and drive simulation experiments. Every command
// writes a manifest echoing the fully resolved configuration next to its
// outputs. Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 empty screening set.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mdiplus/dataset.hpp"
#include "mdiplus/errors.hpp"
#include "mdiplus/forest.hpp"
#include "mdiplus/glm.hpp"
#include "mdiplus/importance.hpp"
#include "mdiplus/metrics.hpp"
#include "mdiplus/pcs.hpp"
#include "mdiplus/sim.hpp"

namespace {

using mdiplus::ConfigError;
using mdiplus::DataError;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open \"" + path + "\" for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open \"" + path + "\" for writing");
  out << content;
  if (!out) throw DataError("failed writing \"" + path + "\"");
}

void write_manifest(const std::string& out_prefix, const std::string& command,
                    json options) {
  json doc;
  doc["schema_version"] = 1;
  doc["command"] = command;
  // Thread count is omitted: outputs are byte-identical across thread
  // counts, and so are their manifests.
  doc["options"] = std::move(options);
  write_file(out_prefix + ".manifest.json", doc.dump(2) + "\n");
}

mdiplus::Task parse_task(const std::string& s) {
  if (s == "binary") return mdiplus::Task::kBinaryClassification;
  return mdiplus::task_from_string(s);
}

json glm_to_json(const mdiplus::GlmSpec& spec) {
  json out;
  out["family"] = mdiplus::to_string(spec.family);
  out["lambda_multipliers"] = spec.lambda_multipliers;
  if (std::isfinite(spec.huber_delta)) out["huber_delta"] = spec.huber_delta;
  return out;
}

json metric_to_json(const mdiplus::SimilarityMetric& metric) {
  json out;
  out["kind"] = mdiplus::to_string(metric);
  if (std::isfinite(metric.huber_delta)) {
    out["huber_delta"] = metric.huber_delta;
  }
  return out;
}

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError(std::string("unknown key \"") + item.key() + "\" in " +
                        where);
    }
  }
}

mdiplus::GlmSpec glm_from_json(const json& obj) {
  check_keys(obj, "glm", {"family", "lambda_multipliers", "huber_delta"});
  mdiplus::GlmSpec spec;
  spec.family =
      mdiplus::glm_family_from_string(obj.at("family").get<std::string>());
  if (obj.contains("lambda_multipliers")) {
    spec.lambda_multipliers =
        obj.at("lambda_multipliers").get<std::vector<double>>();
  }
  if (obj.contains("huber_delta") && !obj.at("huber_delta").is_null()) {
    spec.huber_delta = obj.at("huber_delta").get<double>();
  }
  return spec;
}

mdiplus::SimilarityMetric metric_from_json(const json& obj) {
  check_keys(obj, "metric", {"kind", "huber_delta"});
  mdiplus::SimilarityMetric metric =
      mdiplus::metric_from_string(obj.at("kind").get<std::string>());
  if (obj.contains("huber_delta") && !obj.at("huber_delta").is_null()) {
    metric.huber_delta = obj.at("huber_delta").get<double>();
  }
  return metric;
}

// The compatibility matrix, applied before any computation starts so a bad
// combination never produces partial outputs.
void validate_mdi_plus_combo(mdiplus::Task task, const mdiplus::GlmSpec& spec,
                             const mdiplus::SimilarityMetric& metric) {
  const bool logit = mdiplus::link_for(spec.family) == mdiplus::Link::kLogit;
  if (logit && task != mdiplus::Task::kBinaryClassification) {
    throw ConfigError("--glm logistic needs a classification model");
  }
  if (metric.kind == mdiplus::MetricKind::kNegLogLoss && !logit) {
    throw ConfigError("--metric neg-log-loss needs --glm logistic");
  }
  if (metric.kind != mdiplus::MetricKind::kNegLogLoss && logit) {
    throw ConfigError("--glm logistic needs --metric neg-log-loss");
  }
  if (spec.family == mdiplus::GlmFamily::kHuberRidge &&
      task != mdiplus::Task::kRegression) {
    throw ConfigError("--glm huber applies to regression models only");
  }
}

json evaluation_metrics(const mdiplus::Dataset& data,
                        const Eigen::VectorXd& pred) {
  json out;
  if (data.task == mdiplus::Task::kRegression) {
    out["r_squared"] = mdiplus::r_squared(data.y, pred);
    out["mse"] = (data.y - pred).squaredNorm() / static_cast<double>(data.n());
  } else {
    double correct = 0.0;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
      correct += ((pred[i] >= 0.5 ? 1.0 : 0.0) == data.y[i]) ? 1.0 : 0.0;
    }
    out["accuracy"] = correct / static_cast<double>(data.n());
    out["neg_log_loss"] = mdiplus::neg_log_loss(data.y, pred);
  }
  return out;
}

json forest_params_json(const mdiplus::ForestParams& params) {
  json out;
  out["n_trees"] = params.n_trees;
  out["max_features"] = params.max_features;
  out["min_samples_leaf"] = params.min_samples_leaf;
  out["max_depth"] = params.max_depth;
  return out;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string response = "y";
  std::string task = "regression";
  std::string test;
  std::string out;
  mdiplus::ForestParams params;
  std::uint64_t seed = 0;
  int threads = 0;
};

void cmd_fit(const FitArgs& args) {
  const mdiplus::Task task = parse_task(args.task);
  const mdiplus::Dataset train = mdiplus::load_csv(args.data, args.response, task);
  const mdiplus::Forest forest =
      mdiplus::fit_forest(train, args.params, args.seed, args.threads);

  mdiplus::save_forest(forest, args.out + ".forest.json");

  json metrics;
  metrics["schema_version"] = 1;
  metrics["task"] = mdiplus::to_string(task);
  metrics["train"] =
      evaluation_metrics(train, mdiplus::predict(forest, train.x, args.threads));
  if (!args.test.empty()) {
    const mdiplus::Dataset test =
        mdiplus::load_csv(args.test, args.response, task);
    if (test.p() != train.p()) {
      throw ConfigError("--test has " + std::to_string(test.p()) +
                        " features but --data has " + std::to_string(train.p()));
    }
    metrics["test"] =
        evaluation_metrics(test, mdiplus::predict(forest, test.x, args.threads));
  }
  write_file(args.out + ".metrics.json", metrics.dump(2) + "\n");

  json options;
  options["data"] = args.data;
  options["response"] = args.response;
  options["task"] = mdiplus::to_string(task);
  options["forest"] = forest_params_json(forest.params);  // resolved values
  options["seed"] = args.seed;
  if (!args.test.empty()) options["test"] = args.test;
  options["out"] = args.out;
  write_manifest(args.out, "fit", std::move(options));
}

// ---------------------------------------------------------------------------
// importance
// ---------------------------------------------------------------------------

struct ImportanceArgs {
  std::string model;
  std::string data;
  std::string response = "y";
  std::string out;
  std::vector<std::string> methods = {"mdi"};
  std::string glm = "ridge";
  std::string metric;  // empty: r2, or neg-log-loss for logistic
  bool no_raw = false;
  bool no_loo = false;
  std::uint64_t seed = 0;
  int threads = 0;
};

void cmd_importance(const ImportanceArgs& args) {
  const mdiplus::Forest forest = mdiplus::load_forest(args.model);
  const mdiplus::Dataset data =
      mdiplus::load_csv(args.data, args.response, forest.task);
  if (static_cast<int>(data.p()) != forest.n_features) {
    throw ConfigError("--data has " + std::to_string(data.p()) +
                      " features but the model was fit on " +
                      std::to_string(forest.n_features));
  }
  if (static_cast<int>(data.n()) != forest.n_samples) {
    throw ConfigError("--data has " + std::to_string(data.n()) +
                      " rows but the model was fit on " +
                      std::to_string(forest.n_samples) +
                      "; importance methods need the training data");
  }

  if (args.methods.empty()) throw ConfigError("--methods is empty");
  const std::vector<std::string> known = {"mdi", "mdi-r2", "mdi-oob", "mda",
                                          "mdi-plus"};
  for (const std::string& method : args.methods) {
    bool ok = false;
    for (const std::string& k : known) ok = ok || method == k;
    if (!ok) {
      throw ConfigError("unknown method \"" + method +
                        "\" (expected mdi, mdi-r2, mdi-oob, mda, mdi-plus)");
    }
    if (std::count(args.methods.begin(), args.methods.end(), method) > 1) {
      throw ConfigError("method \"" + method + "\" listed twice");
    }
  }

  mdiplus::GlmSpec spec;
  spec.family = mdiplus::glm_family_from_string(args.glm);
  mdiplus::SimilarityMetric metric;
  if (args.metric.empty()) {
    if (mdiplus::link_for(spec.family) == mdiplus::Link::kLogit) {
      metric.kind = mdiplus::MetricKind::kNegLogLoss;
    }
  } else {
    metric = mdiplus::metric_from_string(args.metric);
  }
  mdiplus::MdiPlusOptions options;
  options.augment_raw = !args.no_raw;
  options.loo = !args.no_loo;

  const bool wants_plus =
      std::count(args.methods.begin(), args.methods.end(), "mdi-plus") > 0;
  if (wants_plus) validate_mdi_plus_combo(forest.task, spec, metric);

  for (const std::string& method : args.methods) {
    mdiplus::ImportanceReport report;
    if (method == "mdi") {
      report = mdiplus::mdi_classical(forest);
    } else if (method == "mdi-r2") {
      report = mdiplus::mdi_r2(forest, data, args.threads);
    } else if (method == "mdi-oob") {
      report = mdiplus::mdi_oob(forest, data, args.threads);
    } else if (method == "mda") {
      report = mdiplus::mda(forest, data, args.seed, 1, args.threads);
    } else {
      report = mdiplus::mdi_plus(forest, data, spec, metric, options,
                                 args.threads);
    }
    write_file(args.out + "." + method + ".csv",
               mdiplus::report_to_csv(report));
    write_file(args.out + "." + method + ".json",
               mdiplus::report_to_json(report) + "\n");
  }

  json options_doc;
  options_doc["model"] = args.model;
  options_doc["data"] = args.data;
  options_doc["response"] = args.response;
  options_doc["methods"] = args.methods;
  if (wants_plus) {
    options_doc["glm"] = glm_to_json(spec);
    options_doc["metric"] = metric_to_json(metric);
    options_doc["augment_raw"] = options.augment_raw;
    options_doc["loo"] = options.loo;
  }
  options_doc["seed"] = args.seed;
  options_doc["out"] = args.out;
  write_manifest(args.out, "importance", std::move(options_doc));
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

struct StabilityArgs {
  std::string candidates;
  std::string train;
  std::string test;
  std::string response = "y";
  std::string task = "regression";
  std::string out;
  mdiplus::ForestParams params;
  int bootstraps = 10;
  double persistence = 0.9;
  bool fallback = false;
  bool ensemble = false;
  std::uint64_t seed = 0;
  int threads = 0;
};

std::vector<mdiplus::CandidateModel> parse_candidates(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("candidate list is not valid JSON: " +
                      std::string(e.what()));
  }
  try {
    if (!doc.is_object()) throw ConfigError("candidate list must be a JSON object");
    check_keys(doc, "candidate list", {"schema_version", "candidates"});
    if (doc.contains("schema_version") && doc.at("schema_version") != 1) {
      throw ConfigError("unsupported candidate list schema_version");
    }
    std::vector<mdiplus::CandidateModel> candidates;
    for (const json& entry : doc.at("candidates")) {
      check_keys(entry, "candidate",
                 {"id", "glm", "metric", "augment_raw", "loo"});
      mdiplus::CandidateModel cand;
      cand.id = entry.at("id").get<std::string>();
      if (entry.contains("glm")) cand.spec = glm_from_json(entry.at("glm"));
      if (entry.contains("metric")) {
        cand.metric = metric_from_json(entry.at("metric"));
      }
      if (entry.contains("augment_raw")) {
        cand.augment_raw = entry.at("augment_raw").get<bool>();
      }
      if (entry.contains("loo")) cand.loo = entry.at("loo").get<bool>();
      candidates.push_back(std::move(cand));
    }
    return candidates;
  } catch (const json::exception& e) {
    throw ConfigError("candidate list: " + std::string(e.what()));
  }
}

void cmd_stability(const StabilityArgs& args) {
  const mdiplus::Task task = parse_task(args.task);
  const std::vector<mdiplus::CandidateModel> candidates =
      parse_candidates(args.candidates);
  const mdiplus::Dataset train =
      mdiplus::load_csv(args.train, args.response, task);
  const mdiplus::Dataset test =
      mdiplus::load_csv(args.test, args.response, task);
  for (const mdiplus::CandidateModel& cand : candidates) {
    validate_mdi_plus_combo(task, cand.spec, cand.metric);
  }

  const mdiplus::Forest forest =
      mdiplus::fit_forest(train, args.params, args.seed, args.threads);

  mdiplus::PcsOptions options;
  options.n_bootstraps = args.bootstraps;
  options.persistence = args.persistence;
  options.fallback_to_all = args.fallback;
  options.threads = args.threads;
  const mdiplus::PcsSelection selection =
      mdiplus::pcs_select(candidates, forest, train, test, options, args.seed);

  write_file(args.out + ".selection.json",
             mdiplus::selection_summary_json(candidates, selection) + "\n");
  if (args.ensemble) {
    write_file(args.out + ".ensemble.csv",
               mdiplus::report_to_csv(selection.ensemble));
    write_file(args.out + ".ensemble.json",
               mdiplus::report_to_json(selection.ensemble) + "\n");
  }

  json candidates_doc = json::array();
  for (const mdiplus::CandidateModel& cand : candidates) {
    json entry;
    entry["id"] = cand.id;
    entry["glm"] = glm_to_json(cand.spec);
    entry["metric"] = metric_to_json(cand.metric);
    entry["augment_raw"] = cand.augment_raw;
    entry["loo"] = cand.loo;
    candidates_doc.push_back(std::move(entry));
  }
  json options_doc;
  options_doc["candidates_file"] = args.candidates;
  options_doc["candidates"] = std::move(candidates_doc);
  options_doc["train"] = args.train;
  options_doc["test"] = args.test;
  options_doc["response"] = args.response;
  options_doc["task"] = mdiplus::to_string(task);
  options_doc["forest"] = forest_params_json(forest.params);
  options_doc["bootstraps"] = args.bootstraps;
  options_doc["persistence"] = args.persistence;
  options_doc["fallback"] = args.fallback;
  options_doc["ensemble"] = args.ensemble;
  options_doc["seed"] = args.seed;
  options_doc["out"] = args.out;
  write_manifest(args.out, "stability", std::move(options_doc));
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string preset;
  std::string config;
  std::string out;
  mdiplus::PresetOverrides overrides;
  bool has_override = false;
  int threads = 0;
};

void cmd_simulate(const SimulateArgs& args) {
  if (args.preset.empty() == args.config.empty()) {
    throw ConfigError("pass exactly one of --preset or --config");
  }
  if (!args.config.empty() && args.has_override) {
    throw ConfigError(
        "preset overrides (--reps/--seed/--rho/--pve/--n/--trees) apply to "
        "--preset runs; edit the config file instead");
  }

  std::vector<std::pair<std::string, mdiplus::ExperimentConfig>> runs;
  if (!args.preset.empty()) {
    runs = mdiplus::expand_preset(args.preset, args.overrides);
  } else {
    runs.emplace_back("experiment", mdiplus::experiment_config_from_json(
                                        read_file(args.config)));
  }

  json runs_doc = json::array();
  for (const auto& [tag, config] : runs) {
    const mdiplus::ExperimentResult result =
        mdiplus::run_experiment(config, args.threads);
    write_file(args.out + "." + tag + ".results.csv",
               mdiplus::results_csv(result));
    write_file(args.out + "." + tag + ".summary.csv",
               mdiplus::summary_csv(result));
    json entry;
    entry["tag"] = tag;
    entry["config"] = json::parse(mdiplus::experiment_config_to_json(config));
    runs_doc.push_back(std::move(entry));
  }

  json options_doc;
  if (!args.preset.empty()) options_doc["preset"] = args.preset;
  if (!args.config.empty()) options_doc["config_file"] = args.config;
  options_doc["runs"] = std::move(runs_doc);
  options_doc["out"] = args.out;
  write_manifest(args.out, "simulate", std::move(options_doc));
}

void add_forest_options(CLI::App* cmd, mdiplus::ForestParams* params) {
  cmd->add_option("--trees", params->n_trees, "number of trees")
      ->capture_default_str();
  cmd->add_option("--max-features", params->max_features,
                  "features tried per split (0 = task default)")
      ->capture_default_str();
  cmd->add_option("--min-samples-leaf", params->min_samples_leaf,
                  "minimum rows per leaf (0 = task default)")
      ->capture_default_str();
  cmd->add_option("--max-depth", params->max_depth,
                  "maximum tree depth (-1 = unlimited)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-forest feature importance toolkit"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit and serialize a forest");
  fit->add_option("--data", fit_args.data, "training CSV")->required();
  fit->add_option("--response", fit_args.response, "response column name")
      ->capture_default_str();
  fit->add_option("--task", fit_args.task, "regression | binary")
      ->capture_default_str();
  add_forest_options(fit, &fit_args.params);
  fit->add_option("--seed", fit_args.seed, "forest seed")
      ->capture_default_str();
  fit->add_option("--test", fit_args.test, "held-out CSV for test metrics");
  fit->add_option("--threads", fit_args.threads,
                  "worker threads (0 = MDIPLUS_THREADS or 1)");
  fit->add_option("--out", fit_args.out, "output path prefix")->required();

  ImportanceArgs imp_args;
  CLI::App* imp =
      app.add_subcommand("importance", "Compute feature importances");
  imp->add_option("--model", imp_args.model, "forest JSON from fit")
      ->required();
  imp->add_option("--data", imp_args.data, "training CSV")->required();
  imp->add_option("--response", imp_args.response, "response column name")
      ->capture_default_str();
  imp->add_option("--methods", imp_args.methods,
                  "comma-separated: mdi, mdi-r2, mdi-oob, mda, mdi-plus")
      ->delimiter(',')
      ->capture_default_str();
  imp->add_option("--glm", imp_args.glm, "mdi-plus GLM: ols|ridge|logistic|huber")
      ->capture_default_str();
  imp->add_option("--metric", imp_args.metric,
                  "mdi-plus metric: r2|r2-unnormalized|neg-log-loss|neg-huber");
  imp->add_flag("--no-raw", imp_args.no_raw,
                "drop the raw-feature augmentation");
  imp->add_flag("--no-loo", imp_args.no_loo,
                "score in-bag fits instead of leave-one-out");
  imp->add_option("--seed", imp_args.seed, "permutation seed (mda)")
      ->capture_default_str();
  imp->add_option("--threads", imp_args.threads,
                  "worker threads (0 = MDIPLUS_THREADS or 1)");
  imp->add_option("--out", imp_args.out, "output path prefix")->required();

  StabilityArgs stab_args;
  CLI::App* stab = app.add_subcommand(
      "stability", "Screen candidate GLM/metric pairs and pick the stablest");
  stab->add_option("--candidates", stab_args.candidates,
                   "candidate list JSON")
      ->required();
  stab->add_option("--train", stab_args.train, "training CSV")->required();
  stab->add_option("--test", stab_args.test, "held-out CSV for screening")
      ->required();
  stab->add_option("--response", stab_args.response, "response column name")
      ->capture_default_str();
  stab->add_option("--task", stab_args.task, "regression | binary")
      ->capture_default_str();
  add_forest_options(stab, &stab_args.params);
  stab->add_option("--bootstraps", stab_args.bootstraps,
                   "tree resamples for the stability pass")
      ->capture_default_str();
  stab->add_option("--persistence", stab_args.persistence,
                   "rank-overlap persistence parameter")
      ->capture_default_str();
  stab->add_flag("--fallback", stab_args.fallback,
                 "keep every candidate if screening empties the set");
  stab->add_flag("--ensemble", stab_args.ensemble,
                 "also write the median-rank ensemble report");
  stab->add_option("--seed", stab_args.seed, "forest and resampling seed")
      ->capture_default_str();
  stab->add_option("--threads", stab_args.threads,
                   "worker threads (0 = MDIPLUS_THREADS or 1)");
  stab->add_option("--out", stab_args.out, "output path prefix")->required();

  SimulateArgs sim_args;
  CLI::App* sim =
      app.add_subcommand("simulate", "Run replicated importance experiments");
  sim->add_option("--preset", sim_args.preset, "built-in experiment preset");
  sim->add_option("--config", sim_args.config, "experiment config JSON");
  CLI::Option* reps =
      sim->add_option("--reps", sim_args.overrides.replicates,
                      "override the replicate count");
  CLI::Option* seed_opt =
      sim->add_option("--seed", sim_args.overrides.seed, "override the seed");
  CLI::Option* rho =
      sim->add_option("--rho", sim_args.overrides.rho,
                      "override the within-block correlation");
  CLI::Option* pve = sim->add_option(
      "--pve", sim_args.overrides.pve, "override the variance-explained target");
  CLI::Option* n_opt =
      sim->add_option("--n", sim_args.overrides.n, "override the sample size");
  CLI::Option* trees = sim->add_option(
      "--trees", sim_args.overrides.n_trees, "override the tree count");
  sim->add_option("--threads", sim_args.threads,
                  "worker threads (0 = MDIPLUS_THREADS or 1)");
  sim->add_option("--out", sim_args.out, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return 2;
  }

  sim_args.overrides.has_seed = seed_opt->count() > 0;
  sim_args.has_override = reps->count() > 0 || seed_opt->count() > 0 ||
                          rho->count() > 0 || pve->count() > 0 ||
                          n_opt->count() > 0 || trees->count() > 0;

  try {
    if (fit->parsed()) cmd_fit(fit_args);
    if (imp->parsed()) cmd_importance(imp_args);
    if (stab->parsed()) cmd_stability(stab_args);
    if (sim->parsed()) cmd_simulate(sim_args);
  } catch (const mdiplus::EmptyScreenError& e) {
    std::cerr << "error: " << e.what()
              << "\nhint: pass --fallback to keep every candidate, or widen "
                 "the candidate list\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
