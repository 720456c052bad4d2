#include "mdiplus/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include <Eigen/Cholesky>

#include "json.hpp"
#include "mdiplus/errors.hpp"
#include "mdiplus/forest.hpp"
#include "mdiplus/parallel.hpp"

namespace mdiplus {
namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

int signal_count(const ResponseSpec& spec) {
  return spec.kind == ResponseKind::kLinear ? spec.s_linear
                                            : 2 * spec.m_interactions;
}

// Corruption counts round halves to even: round(2.5) = 2.
std::size_t round_count(double v) {
  return static_cast<std::size_t>(std::nearbyint(v));
}

// Ten significant digits, for the human-facing summary table.
std::string format_summary(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.10g", v);
  return buffer;
}

}  // namespace

std::string to_string(ResponseKind kind) {
  switch (kind) {
    case ResponseKind::kLinear: return "linear";
    case ResponseKind::kLss: return "lss";
    case ResponseKind::kPolyInteraction: return "poly-interaction";
    case ResponseKind::kLinearPlusLss: return "linear-plus-lss";
  }
  return "linear";
}

ResponseKind response_kind_from_string(const std::string& s) {
  if (s == "linear") return ResponseKind::kLinear;
  if (s == "lss") return ResponseKind::kLss;
  if (s == "poly-interaction") return ResponseKind::kPolyInteraction;
  if (s == "linear-plus-lss") return ResponseKind::kLinearPlusLss;
  throw ConfigError("unknown response kind \"" + s +
                    "\" (expected linear, lss, poly-interaction, or "
                    "linear-plus-lss)");
}

Response gen_response(const Eigen::MatrixXd& x, const ResponseSpec& spec,
                      Rng& rng) {
  const int p = static_cast<int>(x.cols());
  const int needed = signal_count(spec);
  if (needed < 1) throw ConfigError("response uses no signal features");
  if (p < needed) {
    throw ConfigError("response needs " + std::to_string(needed) +
                      " signal features but the data has " +
                      std::to_string(p) + " columns");
  }

  Response out;
  if (spec.relabel) {
    const std::vector<std::size_t> drawn = rng.sample_without_replacement(
        static_cast<std::size_t>(p), static_cast<std::size_t>(needed));
    out.signal_cols.assign(drawn.begin(), drawn.end());
    rng.shuffle(out.signal_cols);  // random role assignment, not just a set
  } else {
    out.signal_cols.resize(static_cast<std::size_t>(needed));
    std::iota(out.signal_cols.begin(), out.signal_cols.end(), 0);
  }
  out.signal_mask.assign(static_cast<std::size_t>(p), false);
  for (int c : out.signal_cols) {
    out.signal_mask[static_cast<std::size_t>(c)] = true;
  }

  const std::vector<int>& c = out.signal_cols;
  const Eigen::Index n = x.rows();
  out.f.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double f = 0.0;
    switch (spec.kind) {
      case ResponseKind::kLinear:
        for (int j = 0; j < spec.s_linear; ++j) {
          f += x(i, c[static_cast<std::size_t>(j)]);
        }
        break;
      case ResponseKind::kLss:
        for (int m = 0; m < spec.m_interactions; ++m) {
          f += (x(i, c[static_cast<std::size_t>(2 * m)]) > 0.0 &&
                x(i, c[static_cast<std::size_t>(2 * m + 1)]) > 0.0)
                   ? 1.0
                   : 0.0;
        }
        break;
      case ResponseKind::kPolyInteraction:
        for (int m = 0; m < spec.m_interactions; ++m) {
          const double a = x(i, c[static_cast<std::size_t>(2 * m)]);
          const double b = x(i, c[static_cast<std::size_t>(2 * m + 1)]);
          f += a + a * b;
        }
        break;
      case ResponseKind::kLinearPlusLss:
        for (int m = 0; m < spec.m_interactions; ++m) {
          const double a = x(i, c[static_cast<std::size_t>(2 * m)]);
          const double b = x(i, c[static_cast<std::size_t>(2 * m + 1)]);
          f += a + ((a > 0.0 && b > 0.0) ? 1.0 : 0.0);
        }
        break;
    }
    f = spec.intercept + spec.scale * f;
    out.f[i] = spec.logistic_link ? sigmoid(f) : f;
  }
  return out;
}

double calibrate_noise(const Eigen::VectorXd& f, double pve) {
  if (!(pve > 0.0 && pve < 1.0)) {
    throw ConfigError("pve must lie strictly between 0 and 1");
  }
  const double mean = f.mean();
  const double var =
      (f.array() - mean).square().sum() / static_cast<double>(f.size());
  if (var <= 0.0) {
    throw DataError("response function is constant; cannot calibrate noise");
  }
  return var * (1.0 - pve) / pve;
}

void corrupt_labels(Eigen::VectorXd* y, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError("corrupt fraction must lie in [0, 1)");
  }
  const std::size_t n = static_cast<std::size_t>(y->size());
  const std::size_t count = round_count(fraction * static_cast<double>(n));
  if (count == 0) return;
  for (std::size_t i : rng.sample_without_replacement(n, count)) {
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    (*y)[row] = 1.0 - (*y)[row];
  }
}

void inject_outliers(const Eigen::MatrixXd& x,
                     const std::vector<bool>& signal_mask, double q,
                     double mu_corrupt, Rng& rng, Eigen::VectorXd* y) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw ConfigError("outlier mass q must lie in [0, 1)");
  }
  if (signal_mask.size() != static_cast<std::size_t>(x.cols())) {
    throw ConfigError("signal mask does not match the covariate matrix");
  }
  if (q == 0.0) return;

  std::vector<int> non_signal;
  for (std::size_t j = 0; j < signal_mask.size(); ++j) {
    if (!signal_mask[j]) non_signal.push_back(static_cast<int>(j));
  }
  if (non_signal.empty()) {
    throw DataError("outlier injection needs a non-signal feature");
  }
  const int col = non_signal[rng.uniform_below(non_signal.size())];

  const Eigen::Index n = x.rows();
  const std::size_t per_tail = round_count(static_cast<double>(n) * q / 2.0);
  if (per_tail == 0) return;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (x(a, col) != x(b, col)) return x(a, col) < x(b, col);
    return a < b;
  });

  std::vector<int> bottom(order.begin(),
                          order.begin() + static_cast<std::ptrdiff_t>(per_tail));
  std::vector<int> top(order.end() - static_cast<std::ptrdiff_t>(per_tail),
                       order.end());
  std::sort(bottom.begin(), bottom.end());
  std::sort(top.begin(), top.end());
  for (int row : bottom) (*y)[row] = mu_corrupt + rng.normal();
  for (int row : top) (*y)[row] = -mu_corrupt + rng.normal();
}

Eigen::MatrixXd gen_correlated_gaussian(int n, int p, double rho,
                                        int block_size, Rng& rng) {
  if (n < 1 || p < 1) throw ConfigError("covariates need n >= 1 and p >= 1");
  if (block_size == 0) block_size = p;
  if (block_size < 1 || block_size > p) {
    throw ConfigError("block size must lie in [1, p]");
  }
  if (block_size > 1 &&
      !(rho > -1.0 / static_cast<double>(block_size - 1) && rho < 1.0)) {
    throw ConfigError(
        "correlation must lie in (-1/(block_size-1), 1) for a "
        "positive-definite covariance");
  }

  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
  }
  if (block_size > 1 && rho != 0.0) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(block_size, block_size,
                                                    rho);
    cov.diagonal().setOnes();
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw ConfigError("block covariance is not positive-definite");
    }
    x.leftCols(block_size) =
        (x.leftCols(block_size) * llt.matrixL().transpose()).eval();
  }
  return x;
}

Eigen::MatrixXd gen_entropy_features(int n, Rng& rng) {
  if (n < 1) throw ConfigError("covariates need n >= 1");
  Eigen::MatrixXd x(n, 5);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(rng.uniform_below(2));
    x(i, 1) = rng.normal();
    x(i, 2) = static_cast<double>(rng.uniform_below(4));
    x(i, 3) = static_cast<double>(rng.uniform_below(10));
    x(i, 4) = static_cast<double>(rng.uniform_below(20));
  }
  return x;
}

std::string to_string(CovariateKind kind) {
  switch (kind) {
    case CovariateKind::kCorrelatedGaussian: return "correlated-gaussian";
    case CovariateKind::kEntropyMix: return "entropy-mix";
    case CovariateKind::kCsv: return "csv";
  }
  return "correlated-gaussian";
}

CovariateKind covariate_kind_from_string(const std::string& s) {
  if (s == "correlated-gaussian") return CovariateKind::kCorrelatedGaussian;
  if (s == "entropy-mix") return CovariateKind::kEntropyMix;
  if (s == "csv") return CovariateKind::kCsv;
  throw ConfigError("unknown covariate kind \"" + s +
                    "\" (expected correlated-gaussian, entropy-mix, or csv)");
}

Eigen::MatrixXd gen_covariates(const CovariateSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case CovariateKind::kCorrelatedGaussian:
      return gen_correlated_gaussian(spec.n, spec.p, spec.rho,
                                     spec.block_size, rng);
    case CovariateKind::kEntropyMix:
      return gen_entropy_features(spec.n, rng);
    case CovariateKind::kCsv:
      return load_matrix_csv(spec.csv_path);
  }
  throw ConfigError("unknown covariate kind");
}

std::string method_label(const MethodSpec& method) {
  if (!method.label.empty()) return method.label;
  if (method.name == "mdi-plus") {
    return "mdi-plus-" + to_string(method.glm.family);
  }
  return method.name;
}

std::string to_string(ReportKind kind) {
  switch (kind) {
    case ReportKind::kAuroc: return "auroc";
    case ReportKind::kGroupRanks: return "group-ranks";
    case ReportKind::kFeatureRanks: return "feature-ranks";
  }
  return "auroc";
}

ReportKind report_kind_from_string(const std::string& s) {
  if (s == "auroc") return ReportKind::kAuroc;
  if (s == "group-ranks") return ReportKind::kGroupRanks;
  if (s == "feature-ranks") return ReportKind::kFeatureRanks;
  throw ConfigError("unknown report kind \"" + s +
                    "\" (expected auroc, group-ranks, or feature-ranks)");
}

namespace {

const char* const kValidMethods[] = {"mdi", "mdi-r2", "mdi-oob", "mda",
                                     "mdi-plus"};

void validate_config(const ExperimentConfig& config) {
  if (config.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (config.methods.empty()) throw ConfigError("no importance methods");
  for (const MethodSpec& m : config.methods) {
    if (std::find(std::begin(kValidMethods), std::end(kValidMethods),
                  m.name) == std::end(kValidMethods)) {
      throw ConfigError("unknown importance method \"" + m.name + "\"");
    }
  }
  if (config.report == ReportKind::kGroupRanks &&
      config.covariates.kind != CovariateKind::kCorrelatedGaussian) {
    throw ConfigError(
        "group-ranks reporting needs correlated-gaussian covariates");
  }
  if (config.response.logistic_link) {
    if (config.noise.outlier_q > 0.0) {
      throw ConfigError("outlier injection applies to regression responses");
    }
  } else if (config.noise.corrupt_fraction > 0.0) {
    throw ConfigError("label corruption applies to classification responses");
  }
}

template <typename Fn>
auto with_stage(int replicate, const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("replicate " + std::to_string(replicate) + ", " +
                      stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw DataError("replicate " + std::to_string(replicate) + ", " + stage +
                    ": " + e.what());
  }
}

ImportanceReport run_method(const MethodSpec& method, const Forest& forest,
                            const Dataset& data, std::uint64_t mda_seed) {
  if (method.name == "mdi") return mdi_classical(forest);
  if (method.name == "mdi-r2") return mdi_r2(forest, data, 1);
  if (method.name == "mdi-oob") return mdi_oob(forest, data, 1);
  if (method.name == "mda") return mda(forest, data, mda_seed, 1, 1);
  return mdi_plus(forest, data, method.glm, method.metric, method.options, 1);
}

std::vector<ResultRow> score_report(const ExperimentConfig& config,
                                    const Response& response, int replicate,
                                    const std::string& label,
                                    const ImportanceReport& report) {
  std::vector<ResultRow> rows;
  switch (config.report) {
    case ReportKind::kAuroc: {
      rows.push_back({replicate, label, "auroc",
                      auroc(report.per_feature, response.signal_mask)});
      break;
    }
    case ReportKind::kGroupRanks: {
      const std::vector<int> ranks = ranks_from_scores(report.per_feature);
      const int block = config.covariates.block_size > 0
                            ? config.covariates.block_size
                            : config.covariates.p;
      double sums[3] = {0.0, 0.0, 0.0};
      int counts[3] = {0, 0, 0};
      for (std::size_t k = 0; k < ranks.size(); ++k) {
        int group;
        if (response.signal_mask[k]) {
          group = 0;
        } else if (static_cast<int>(k) < block) {
          group = 1;
        } else {
          group = 2;
        }
        sums[group] += ranks[k];
        ++counts[group];
      }
      const char* names[3] = {"mean_rank_sig", "mean_rank_cnsig",
                              "mean_rank_nsig"};
      for (int g = 0; g < 3; ++g) {
        if (counts[g] == 0) {
          throw DataError(std::string("feature group ") + names[g] +
                          " is empty");
        }
        rows.push_back({replicate, label, names[g], sums[g] / counts[g]});
      }
      break;
    }
    case ReportKind::kFeatureRanks: {
      const std::vector<int> ranks = ranks_from_scores(report.per_feature);
      for (std::size_t k = 0; k < ranks.size(); ++k) {
        rows.push_back({replicate, label,
                        "rank_" + report.feature_names[k],
                        static_cast<double>(ranks[k])});
      }
      break;
    }
  }
  return rows;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  validate_config(config);
  const Task task = config.response.logistic_link
                        ? Task::kBinaryClassification
                        : Task::kRegression;

  std::vector<std::vector<ResultRow>> per_replicate(
      static_cast<std::size_t>(config.replicates));
  parallel_for(
      static_cast<std::size_t>(config.replicates), threads,
      [&](std::size_t r) {
        const int rep = static_cast<int>(r);
        const std::uint64_t rep_key =
            Rng::derive(config.seed, static_cast<std::uint64_t>(r),
                        stream::kReplicate);

        const Eigen::MatrixXd x = with_stage(rep, "covariates", [&] {
          Rng rng(rep_key, stream::kCovariates);
          return gen_covariates(config.covariates, rng);
        });
        const Response response = with_stage(rep, "response", [&] {
          Rng rng(rep_key, stream::kSignal);
          return gen_response(x, config.response, rng);
        });

        Dataset data;
        data.task = task;
        data.x = x;
        data.feature_names.resize(static_cast<std::size_t>(x.cols()));
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          data.feature_names[static_cast<std::size_t>(j)] =
              "x" + std::to_string(j + 1);
        }
        with_stage(rep, "noise", [&] {
          Rng noise_rng(rep_key, stream::kNoise);
          data.y.resize(x.rows());
          if (task == Task::kBinaryClassification) {
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
              data.y[i] = noise_rng.uniform01() < response.f[i] ? 1.0 : 0.0;
            }
            if (config.noise.corrupt_fraction > 0.0) {
              Rng corrupt_rng(rep_key, stream::kCorrupt);
              corrupt_labels(&data.y, config.noise.corrupt_fraction,
                             corrupt_rng);
            }
          } else {
            const double sigma =
                std::sqrt(calibrate_noise(response.f, config.noise.pve));
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
              data.y[i] = response.f[i] + sigma * noise_rng.normal();
            }
            if (config.noise.outlier_q > 0.0) {
              Rng outlier_rng(rep_key, stream::kOutlier);
              inject_outliers(x, response.signal_mask,
                              config.noise.outlier_q,
                              config.noise.mu_corrupt, outlier_rng, &data.y);
            }
          }
          return 0;
        });

        const Forest forest = with_stage(rep, "forest", [&] {
          return fit_forest(data, config.forest,
                            Rng::derive(rep_key, stream::kForest), 1);
        });
        const std::uint64_t mda_seed = Rng::derive(rep_key, stream::kMda);

        std::vector<ResultRow>& rows = per_replicate[r];
        for (const MethodSpec& method : config.methods) {
          const std::string label = method_label(method);
          const std::string stage = "importance:" + label;
          const ImportanceReport report =
              with_stage(rep, stage.c_str(), [&] {
                return run_method(method, forest, data, mda_seed);
              });
          const std::vector<ResultRow> scored =
              with_stage(rep, "scoring", [&] {
                return score_report(config, response, rep, label, report);
              });
          rows.insert(rows.end(), scored.begin(), scored.end());
        }
      });

  ExperimentResult result;
  for (const std::vector<ResultRow>& rows : per_replicate) {
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

std::string results_csv(const ExperimentResult& result) {
  std::string out = "replicate,method,metric_name,value\n";
  for (const ResultRow& row : result.rows) {
    out += std::to_string(row.replicate);
    out += ',';
    out += row.method;
    out += ',';
    out += row.metric_name;
    out += ',';
    out += format_double(row.value);
    out += '\n';
  }
  return out;
}

std::string summary_csv(const ExperimentResult& result) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<std::vector<double>> values;
  for (const ResultRow& row : result.rows) {
    const std::pair<std::string, std::string> key(row.method,
                                                  row.metric_name);
    const auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      values.push_back({row.value});
    } else {
      values[static_cast<std::size_t>(it - keys.begin())].push_back(
          row.value);
    }
  }

  std::string out = "method,metric_name,mean,stderr\n";
  for (std::size_t g = 0; g < keys.size(); ++g) {
    const std::vector<double>& v = values[g];
    const double mean =
        std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double se = 0.0;
    if (v.size() > 1) {
      double ss = 0.0;
      for (double value : v) ss += (value - mean) * (value - mean);
      se = std::sqrt(ss / static_cast<double>(v.size() - 1)) /
           std::sqrt(static_cast<double>(v.size()));
    }
    out += keys[g].first + ',' + keys[g].second + ',' + format_summary(mean) +
           ',' + format_summary(se) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      throw ConfigError(std::string("unknown key \"") + item.key() +
                        "\" in " + where);
    }
  }
}

json metric_to_json(const SimilarityMetric& metric) {
  json out;
  out["kind"] = to_string(metric);
  if (std::isfinite(metric.huber_delta)) {
    out["huber_delta"] = metric.huber_delta;
  }
  return out;
}

SimilarityMetric metric_from_json(const json& obj) {
  check_keys(obj, "metric", {"kind", "huber_delta"});
  SimilarityMetric metric =
      metric_from_string(obj.at("kind").get<std::string>());
  if (obj.contains("huber_delta") && !obj.at("huber_delta").is_null()) {
    metric.huber_delta = obj.at("huber_delta").get<double>();
  }
  return metric;
}

json glm_to_json(const GlmSpec& spec) {
  json out;
  out["family"] = to_string(spec.family);
  out["lambda_multipliers"] = spec.lambda_multipliers;  // empty: default grid
  if (std::isfinite(spec.huber_delta)) out["huber_delta"] = spec.huber_delta;
  return out;
}

GlmSpec glm_from_json(const json& obj) {
  check_keys(obj, "glm", {"family", "lambda_multipliers", "huber_delta"});
  GlmSpec spec;
  spec.family = glm_family_from_string(obj.at("family").get<std::string>());
  if (obj.contains("lambda_multipliers")) {
    spec.lambda_multipliers =
        obj.at("lambda_multipliers").get<std::vector<double>>();
  }
  if (obj.contains("huber_delta") && !obj.at("huber_delta").is_null()) {
    spec.huber_delta = obj.at("huber_delta").get<double>();
  }
  return spec;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["schema_version"] = 1;
  doc["seed"] = config.seed;
  doc["replicates"] = config.replicates;
  doc["report"] = to_string(config.report);

  json cov;
  cov["kind"] = to_string(config.covariates.kind);
  cov["n"] = config.covariates.n;
  cov["p"] = config.covariates.p;
  cov["rho"] = config.covariates.rho;
  cov["block_size"] = config.covariates.block_size;
  cov["csv_path"] = config.covariates.csv_path;
  doc["covariates"] = cov;

  json resp;
  resp["kind"] = to_string(config.response.kind);
  resp["s_linear"] = config.response.s_linear;
  resp["m_interactions"] = config.response.m_interactions;
  resp["scale"] = config.response.scale;
  resp["intercept"] = config.response.intercept;
  resp["logistic_link"] = config.response.logistic_link;
  resp["relabel"] = config.response.relabel;
  doc["response"] = resp;

  json noise;
  noise["pve"] = config.noise.pve;
  noise["corrupt_fraction"] = config.noise.corrupt_fraction;
  noise["outlier_q"] = config.noise.outlier_q;
  noise["mu_corrupt"] = config.noise.mu_corrupt;
  doc["noise"] = noise;

  json forest;
  forest["n_trees"] = config.forest.n_trees;
  forest["max_features"] = config.forest.max_features;
  forest["min_samples_leaf"] = config.forest.min_samples_leaf;
  forest["max_depth"] = config.forest.max_depth;
  doc["forest"] = forest;

  json methods = json::array();
  for (const MethodSpec& m : config.methods) {
    json entry;
    entry["name"] = m.name;
    entry["label"] = method_label(m);
    if (m.name == "mdi-plus") {
      entry["glm"] = glm_to_json(m.glm);
      entry["metric"] = metric_to_json(m.metric);
      entry["augment_raw"] = m.options.augment_raw;
      entry["loo"] = m.options.loo;
    }
    methods.push_back(entry);
  }
  doc["methods"] = methods;
  return doc.dump(2);
}

namespace {

ExperimentConfig config_from_parsed(const json& doc) {
  if (!doc.is_object()) throw ConfigError("experiment config must be a JSON object");
  check_keys(doc, "experiment config",
             {"schema_version", "seed", "replicates", "report", "covariates",
              "response", "noise", "forest", "methods"});
  if (doc.contains("schema_version") && doc.at("schema_version") != 1) {
    throw ConfigError("unsupported experiment config schema_version");
  }

  ExperimentConfig config;
  if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("replicates")) {
    config.replicates = doc.at("replicates").get<int>();
  }
  if (doc.contains("report")) {
    config.report = report_kind_from_string(doc.at("report").get<std::string>());
  }

  if (doc.contains("covariates")) {
    const json& cov = doc.at("covariates");
    check_keys(cov, "covariates",
               {"kind", "n", "p", "rho", "block_size", "csv_path"});
    config.covariates.kind =
        covariate_kind_from_string(cov.at("kind").get<std::string>());
    if (cov.contains("n")) config.covariates.n = cov.at("n").get<int>();
    if (cov.contains("p")) config.covariates.p = cov.at("p").get<int>();
    if (cov.contains("rho")) config.covariates.rho = cov.at("rho").get<double>();
    if (cov.contains("block_size")) {
      config.covariates.block_size = cov.at("block_size").get<int>();
    }
    if (cov.contains("csv_path")) {
      config.covariates.csv_path = cov.at("csv_path").get<std::string>();
    }
  }

  if (doc.contains("response")) {
    const json& resp = doc.at("response");
    check_keys(resp, "response",
               {"kind", "s_linear", "m_interactions", "scale", "intercept",
                "logistic_link", "relabel"});
    config.response.kind =
        response_kind_from_string(resp.at("kind").get<std::string>());
    if (resp.contains("s_linear")) {
      config.response.s_linear = resp.at("s_linear").get<int>();
    }
    if (resp.contains("m_interactions")) {
      config.response.m_interactions = resp.at("m_interactions").get<int>();
    }
    if (resp.contains("scale")) {
      config.response.scale = resp.at("scale").get<double>();
    }
    if (resp.contains("intercept")) {
      config.response.intercept = resp.at("intercept").get<double>();
    }
    if (resp.contains("logistic_link")) {
      config.response.logistic_link = resp.at("logistic_link").get<bool>();
    }
    if (resp.contains("relabel")) {
      config.response.relabel = resp.at("relabel").get<bool>();
    }
  }

  if (doc.contains("noise")) {
    const json& noise = doc.at("noise");
    check_keys(noise, "noise",
               {"pve", "corrupt_fraction", "outlier_q", "mu_corrupt"});
    if (noise.contains("pve")) config.noise.pve = noise.at("pve").get<double>();
    if (noise.contains("corrupt_fraction")) {
      config.noise.corrupt_fraction = noise.at("corrupt_fraction").get<double>();
    }
    if (noise.contains("outlier_q")) {
      config.noise.outlier_q = noise.at("outlier_q").get<double>();
    }
    if (noise.contains("mu_corrupt")) {
      config.noise.mu_corrupt = noise.at("mu_corrupt").get<double>();
    }
  }

  if (doc.contains("forest")) {
    const json& forest = doc.at("forest");
    check_keys(forest, "forest",
               {"n_trees", "max_features", "min_samples_leaf", "max_depth"});
    if (forest.contains("n_trees")) {
      config.forest.n_trees = forest.at("n_trees").get<int>();
    }
    if (forest.contains("max_features")) {
      config.forest.max_features = forest.at("max_features").get<int>();
    }
    if (forest.contains("min_samples_leaf")) {
      config.forest.min_samples_leaf = forest.at("min_samples_leaf").get<int>();
    }
    if (forest.contains("max_depth")) {
      config.forest.max_depth = forest.at("max_depth").get<int>();
    }
  }

  if (!doc.contains("methods")) throw ConfigError("config lists no methods");
  for (const json& entry : doc.at("methods")) {
    check_keys(entry, "method",
               {"name", "label", "glm", "metric", "augment_raw", "loo"});
    MethodSpec method;
    method.name = entry.at("name").get<std::string>();
    if (entry.contains("label")) {
      method.label = entry.at("label").get<std::string>();
    }
    if (entry.contains("glm")) method.glm = glm_from_json(entry.at("glm"));
    if (entry.contains("metric")) {
      method.metric = metric_from_json(entry.at("metric"));
    }
    if (entry.contains("augment_raw")) {
      method.options.augment_raw = entry.at("augment_raw").get<bool>();
    }
    if (entry.contains("loo")) {
      method.options.loo = entry.at("loo").get<bool>();
    }
    config.methods.push_back(std::move(method));
  }
  return config;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("experiment config is not valid JSON: ") +
                      e.what());
  }
  try {
    return config_from_parsed(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

MethodSpec make_method(const std::string& name) {
  MethodSpec method;
  method.name = name;
  return method;
}

MethodSpec make_mdi_plus(GlmFamily family, const SimilarityMetric& metric) {
  MethodSpec method;
  method.name = "mdi-plus";
  method.glm.family = family;
  method.metric = metric;
  return method;
}

SimilarityMetric r2_metric() { return SimilarityMetric{}; }

SimilarityMetric log_loss_metric() {
  SimilarityMetric metric;
  metric.kind = MetricKind::kNegLogLoss;
  return metric;
}

SimilarityMetric huber_metric() {
  SimilarityMetric metric;
  metric.kind = MetricKind::kNegHuberLoss;
  return metric;
}

std::vector<MethodSpec> baseline_methods(GlmFamily family,
                                         const SimilarityMetric& metric) {
  return {make_method("mdi"), make_method("mdi-oob"), make_method("mda"),
          make_mdi_plus(family, metric)};
}

void apply_overrides(const PresetOverrides& ov, ExperimentConfig* config) {
  if (ov.replicates > 0) config->replicates = ov.replicates;
  if (ov.has_seed) config->seed = ov.seed;
  if (std::isfinite(ov.rho)) config->covariates.rho = ov.rho;
  if (std::isfinite(ov.pve)) config->noise.pve = ov.pve;
  if (ov.n > 0) config->covariates.n = ov.n;
  if (ov.n_trees > 0) config->forest.n_trees = ov.n_trees;
}

ExperimentConfig entropy_bias_config(bool classification) {
  ExperimentConfig config;
  config.covariates.kind = CovariateKind::kEntropyMix;
  config.covariates.n = classification ? 250 : 1000;
  config.covariates.p = 5;
  config.response.kind = ResponseKind::kLinear;
  config.response.s_linear = 1;
  config.response.relabel = false;
  config.forest.n_trees = 50;
  config.report = ReportKind::kFeatureRanks;
  if (classification) {
    // P(Y=1) = (1 + X1)/3, expressed through the logistic link.
    config.response.scale = 2.0 * std::log(2.0);
    config.response.intercept = -std::log(2.0);
    config.response.logistic_link = true;
    config.methods =
        baseline_methods(GlmFamily::kLogisticL2, log_loss_metric());
  } else {
    config.noise.pve = 0.1;
    config.methods = baseline_methods(GlmFamily::kRidge, r2_metric());
  }
  return config;
}

ExperimentConfig correlation_bias_config() {
  ExperimentConfig config;
  config.covariates.kind = CovariateKind::kCorrelatedGaussian;
  config.covariates.n = 250;
  config.covariates.p = 100;
  config.covariates.rho = 0.99;
  config.covariates.block_size = 50;
  config.response.kind = ResponseKind::kLinearPlusLss;
  config.response.relabel = false;  // signal fixed to the correlated block
  config.noise.pve = 0.1;
  config.forest.n_trees = 50;
  config.report = ReportKind::kGroupRanks;
  config.methods = baseline_methods(GlmFamily::kRidge, r2_metric());
  return config;
}

ExperimentConfig sweep_base(ResponseKind kind) {
  ExperimentConfig config;
  config.covariates.kind = CovariateKind::kCorrelatedGaussian;
  config.covariates.n = 250;
  config.covariates.p = 50;
  config.covariates.rho = 0.6;
  config.covariates.block_size = 25;
  config.response.kind = kind;
  config.forest.n_trees = 50;
  config.report = ReportKind::kAuroc;
  return config;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"entropy-bias-regression",
          "entropy-bias-classification",
          "correlation-bias",
          "pve-sweep-linear",
          "pve-sweep-lss",
          "pve-sweep-poly-interaction",
          "pve-sweep-linear-plus-lss",
          "outlier-sweep-linear",
          "outlier-sweep-lss",
          "outlier-sweep-poly-interaction",
          "outlier-sweep-linear-plus-lss"};
}

std::vector<std::pair<std::string, ExperimentConfig>> expand_preset(
    const std::string& name, const PresetOverrides& overrides) {
  const std::vector<std::string> known = preset_names();
  if (std::find(known.begin(), known.end(), name) == known.end()) {
    std::string list;
    for (const std::string& p : known) {
      if (!list.empty()) list += ", ";
      list += p;
    }
    throw ConfigError("unknown preset \"" + name + "\" (available: " + list +
                      ")");
  }

  std::vector<std::pair<std::string, ExperimentConfig>> out;
  const std::string pve_prefix = "pve-sweep-";
  const std::string outlier_prefix = "outlier-sweep-";

  if (name == "entropy-bias-regression" ||
      name == "entropy-bias-classification") {
    ExperimentConfig config =
        entropy_bias_config(name == "entropy-bias-classification");
    apply_overrides(overrides, &config);
    out.emplace_back(name, std::move(config));
  } else if (name == "correlation-bias") {
    ExperimentConfig config = correlation_bias_config();
    apply_overrides(overrides, &config);
    out.emplace_back(name, std::move(config));
  } else if (name.rfind(pve_prefix, 0) == 0) {
    const ResponseKind kind =
        response_kind_from_string(name.substr(pve_prefix.size()));
    for (double pve : {0.1, 0.2, 0.4, 0.8}) {
      ExperimentConfig config = sweep_base(kind);
      config.noise.pve = pve;
      config.methods = baseline_methods(GlmFamily::kRidge, r2_metric());
      apply_overrides(overrides, &config);
      out.emplace_back(name + "_pve" + format_double(config.noise.pve),
                       std::move(config));
      if (std::isfinite(overrides.pve)) break;  // pinned to a single setting
    }
  } else {
    const ResponseKind kind =
        response_kind_from_string(name.substr(outlier_prefix.size()));
    for (double mu : {10.0, 25.0}) {
      for (double q : {0.01, 0.025, 0.05}) {
        ExperimentConfig config = sweep_base(kind);
        config.noise.pve = 0.1;
        config.noise.outlier_q = q;
        config.noise.mu_corrupt = mu;
        config.methods = {make_method("mdi"),
                          make_mdi_plus(GlmFamily::kRidge, r2_metric()),
                          make_mdi_plus(GlmFamily::kHuberRidge,
                                        huber_metric())};
        apply_overrides(overrides, &config);
        out.emplace_back(name + "_q" + format_double(config.noise.outlier_q) +
                             "_mu" + format_double(config.noise.mu_corrupt),
                         std::move(config));
      }
    }
  }
  return out;
}

}  // namespace mdiplus
