#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mdiplus/dataset.hpp"
#include "mdiplus/glm.hpp"
#include "mdiplus/importance.hpp"
#include "mdiplus/metrics.hpp"
#include "mdiplus/rng.hpp"
#include "mdiplus/tree.hpp"

namespace mdiplus {

// ---------------------------------------------------------------------------
// Response functions
// ---------------------------------------------------------------------------

enum class ResponseKind { kLinear, kLss, kPolyInteraction, kLinearPlusLss };

std::string to_string(ResponseKind kind);
ResponseKind response_kind_from_string(const std::string& s);

struct ResponseSpec {
  ResponseKind kind = ResponseKind::kLinear;
  int s_linear = 5;        // linear terms (kind == kLinear)
  int m_interactions = 3;  // interaction pairs (the other kinds)
  double scale = 1.0;      // multiplies the raw formula value
  double intercept = 0.0;  // added after scaling
  // Classification: the conditional mean is the logistic transform of the
  // (scaled, shifted) formula value and responses are sampled as Bernoulli.
  bool logistic_link = false;
  // Assign the formula's signal roles to uniformly chosen distinct columns
  // instead of the leading ones.
  bool relabel = true;
};

struct Response {
  // Conditional mean E[Y|X]: the formula value for regression, the Bernoulli
  // probability when logistic_link is set.
  Eigen::VectorXd f;
  // Column playing the formula role X_{j+1}, in role order.
  std::vector<int> signal_cols;
  std::vector<bool> signal_mask;  // size p, true exactly on signal_cols
};

Response gen_response(const Eigen::MatrixXd& x, const ResponseSpec& spec,
                      Rng& rng);

// Noise variance Var_emp(f) (1 - pve)/pve (population variance) so that the
// proportion of variance explained matches the target in expectation.
// Requires 0 < pve < 1 and a non-constant f.
double calibrate_noise(const Eigen::VectorXd& f, double pve);

// Flips exactly round(fraction * n) uniformly chosen 0/1 labels in place
// (halves round to even).
void corrupt_labels(Eigen::VectorXd* y, double fraction, Rng& rng);

// Picks a uniformly random non-signal column. The round(n q / 2) rows
// (halves round to even) with the smallest values of that column (ties by
// row index) get responses drawn from Normal(mu_corrupt, 1); the same count
// with the largest values get Normal(-mu_corrupt, 1). Corrupted rows are
// redrawn in ascending row order, bottom tail first.
void inject_outliers(const Eigen::MatrixXd& x,
                     const std::vector<bool>& signal_mask, double q,
                     double mu_corrupt, Rng& rng, Eigen::VectorXd* y);

// ---------------------------------------------------------------------------
// Covariate generators
// ---------------------------------------------------------------------------

// Rows i.i.d. Normal(0, Sigma): unit variances, pairwise correlation rho
// inside the leading block of block_size columns, zero elsewhere.
// Positive-definiteness requires rho in (-1/(block_size-1), 1).
Eigen::MatrixXd gen_correlated_gaussian(int n, int p, double rho,
                                        int block_size, Rng& rng);

// The five-column mixed-entropy design: Bernoulli(1/2), a standard normal,
// and uniform discrete columns with 4, 10, and 20 categories (coded 0..C-1).
Eigen::MatrixXd gen_entropy_features(int n, Rng& rng);

enum class CovariateKind { kCorrelatedGaussian, kEntropyMix, kCsv };

std::string to_string(CovariateKind kind);
CovariateKind covariate_kind_from_string(const std::string& s);

struct CovariateSpec {
  CovariateKind kind = CovariateKind::kCorrelatedGaussian;
  int n = 100;
  int p = 10;
  double rho = 0.0;
  int block_size = 0;  // 0: the whole matrix is one block
  std::string csv_path;
};

Eigen::MatrixXd gen_covariates(const CovariateSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct NoiseSpec {
  double pve = 0.1;               // regression noise level
  double corrupt_fraction = 0.0;  // classification label flips
  double outlier_q = 0.0;         // total outlier mass, split across tails
  double mu_corrupt = 0.0;        // outlier center
};

struct MethodSpec {
  std::string name;   // mdi | mdi-r2 | mdi-oob | mda | mdi-plus
  std::string label;  // results row label; empty resolves via method_label
  // mdi-plus settings; ignored by the other methods.
  GlmSpec glm;
  SimilarityMetric metric;
  MdiPlusOptions options;
};

// The explicit label, or the method name ("mdi-plus" gains a GLM suffix,
// e.g. "mdi-plus-ridge").
std::string method_label(const MethodSpec& method);

enum class ReportKind {
  kAuroc,         // one "auroc" row per (replicate, method)
  kGroupRanks,    // mean ranks of the Sig / C-NSig / NSig feature groups
  kFeatureRanks,  // one "rank_<feature>" row per feature
};

std::string to_string(ReportKind kind);
ReportKind report_kind_from_string(const std::string& s);

struct ExperimentConfig {
  CovariateSpec covariates;
  ResponseSpec response;
  NoiseSpec noise;
  ForestParams forest;
  std::vector<MethodSpec> methods;
  ReportKind report = ReportKind::kAuroc;
  int replicates = 50;
  std::uint64_t seed = 0;
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

struct ResultRow {
  int replicate = 0;
  std::string method;
  std::string metric_name;
  double value = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // replicate-major, methods in config order
};

// Runs the replicated experiment: generate covariates and responses, fit the
// forest, compute every requested importance method, and score it against
// the signal features. Replicates run concurrently on derived streams; rows
// are assembled in replicate order. Stage failures are reported with the
// replicate id and stage name.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                int threads = 0);

// Long format: replicate,method,metric_name,value.
std::string results_csv(const ExperimentResult& result);
// Per (method, metric_name) in first-appearance order:
// method,metric_name,mean,stderr with stderr = sample SD / sqrt(reps).
std::string summary_csv(const ExperimentResult& result);

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

struct PresetOverrides {
  int replicates = -1;  // -1: keep the preset default
  bool has_seed = false;
  std::uint64_t seed = 0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double pve = std::numeric_limits<double>::quiet_NaN();
  int n = -1;
  int n_trees = -1;
};

std::vector<std::string> preset_names();

// Expands a named preset into one or more (tag, config) pairs; sweep presets
// produce one tagged config per swept setting.
std::vector<std::pair<std::string, ExperimentConfig>> expand_preset(
    const std::string& name, const PresetOverrides& overrides = {});

}  // namespace mdiplus
