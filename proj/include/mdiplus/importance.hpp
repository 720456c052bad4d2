#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mdiplus/dataset.hpp"
#include "mdiplus/forest.hpp"
#include "mdiplus/glm.hpp"
#include "mdiplus/metrics.hpp"
#include "mdiplus/stumps.hpp"

namespace mdiplus {

// Per-feature importance scores for one forest. per_tree holds the per-tree
// scores (NaN where a tree does not contribute for that feature); per_feature
// is the mean over contributing trees, -inf when no tree contributes
// (possible for mdi-plus only). ranking sorts features by descending score,
// ties and -inf broken by feature index.
struct ImportanceReport {
  std::string method;
  std::vector<std::string> feature_names;
  std::vector<double> per_feature;
  std::vector<int> ranking;                // feature ids, best first
  std::vector<int> n_trees_contributing;   // per feature
  Eigen::MatrixXd per_tree;                // T x p; 0 x 0 when not tracked
  std::vector<double> normalized;          // mdi only: variance-normalized
  std::string config;                      // mdi-plus configuration string
};

// Columns {feature, name, score, rank, n_trees_contributing}; -inf written
// as the literal "-inf"; mdi appends a `normalized` column.
std::string report_to_csv(const ImportanceReport& report);
std::string report_to_json(const ImportanceReport& report);

// Builds per_feature, ranking and n_trees_contributing from a filled
// per_tree matrix (NaN = tree does not contribute).
void finalize_report(ImportanceReport* report);

// Classical mean decrease in impurity: per tree, the sum over splits on a
// feature of N(t)/n times the impurity decrease; forest score is the mean
// over all trees. The `normalized` column divides each tree's scores by its
// root impurity before averaging.
ImportanceReport mdi_classical(const Forest& forest);

// The same scores through the regression route: transform the in-bag rows,
// fit OLS, score each feature's mean-imputed partial predictions by
// per-sample explained squared deviation. Agrees with the tally per tree.
std::vector<double> mdi_via_r2(const TreeStructure& tree,
                               const Eigen::MatrixXd& x_bag,
                               const Eigen::VectorXd& y_bag);
ImportanceReport mdi_r2(const Forest& forest, const Dataset& data,
                        int threads = 0);

// Out-of-bag variant: OLS fit on in-bag rows, partial predictions scored on
// each tree's out-of-bag rows against the out-of-bag mean. Trees without
// out-of-bag rows are skipped; never-split features score 0.
ImportanceReport mdi_oob(const Forest& forest, const Dataset& data,
                         int threads = 0);

// Permutation importance: increase in out-of-bag loss (mean squared error,
// or misclassification rate at the 0.5 threshold for classification) when
// one feature's out-of-bag values are permuted. The permutation stream is
// derived from (seed, tree, feature).
ImportanceReport mda(const Forest& forest, const Dataset& data,
                     std::uint64_t seed, int n_permutations = 1,
                     int threads = 0);

struct MdiPlusOptions {
  bool augment_raw = true;
  // true: fit the GLM on the n distinct rows and score leave-one-out partial
  // predictions. false: fit and score on the in-bag rows (with bootstrap
  // multiplicity) using the full-data coefficients -- the classical regime.
  bool loo = true;
};

// MDI+: per tree, build the (optionally raw-augmented) stump representation,
// fit the regularized GLM, score each split feature's partial predictions
// (full-data intercept, per-row leave-one-out coefficients when options.loo)
// with the similarity metric. Forest score is the mean over trees that split
// the feature; features split nowhere get -inf.
ImportanceReport mdi_plus(const Forest& forest, const Dataset& data,
                          const GlmSpec& spec, const SimilarityMetric& metric,
                          const MdiPlusOptions& options = {}, int threads = 0);

// Partial predictions of every feature for one fitted tree design: block k
// columns kept, all other columns mean-imputed, inverse link applied.
struct PartialPrediction {
  int feature = -1;
  Eigen::VectorXd values;
};
std::vector<PartialPrediction> saabas_partial(const TransformedMatrix& tm,
                                              const GlmFit& fit);

// RF+: one GLM per tree on the raw-augmented representation of the full
// data; predictions average the per-tree GLM outputs (probabilities for
// logistic). Holds a pointer to the forest it was fit from, which must
// outlive the model. With fit_in_bag each tree's GLM is trained on its own
// bootstrap rows (with multiplicity) instead of the full data; combined
// with plain least squares and no augmentation this reproduces the forest's
// predictions exactly.
struct RfPlusModel {
  const Forest* forest = nullptr;
  GlmSpec spec;
  bool augment_raw = true;
  std::vector<GlmFit> fits;  // one per tree
};

RfPlusModel fit_rf_plus(const Forest& forest, const Dataset& data,
                        const GlmSpec& spec, bool augment_raw = true,
                        bool fit_in_bag = false, int threads = 0);
Eigen::VectorXd rf_plus_predict(const RfPlusModel& model,
                                const Eigen::MatrixXd& x, int threads = 0);

}  // namespace mdiplus
