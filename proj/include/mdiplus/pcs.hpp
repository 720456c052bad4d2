#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdiplus/dataset.hpp"
#include "mdiplus/forest.hpp"
#include "mdiplus/glm.hpp"
#include "mdiplus/importance.hpp"
#include "mdiplus/metrics.hpp"

namespace mdiplus {

// One candidate importance model: the design choice (raw augmentation), the
// GLM family/penalty, the scoring metric, and the evaluation regime (loo).
struct CandidateModel {
  std::string id;
  bool augment_raw = true;
  bool loo = true;
  GlmSpec spec;
  SimilarityMetric metric;
};

struct ScreenResult {
  std::vector<int> kept;            // indices into the candidate list
  std::vector<double> performance;  // per candidate, on the test set
  double baseline = 0.0;            // the forest's own test performance
  bool fell_back = false;           // screen emptied and fallback engaged
};

// Keeps candidates whose RF+ predictor performs at least as well as the
// forest on the test set (R-squared for regression, accuracy for
// classification), with a 1e-9 tolerance so ties pass. An empty screen
// throws EmptyScreenError unless fallback_to_all, which keeps everything
// and flags the result.
ScreenResult prediction_screen(const std::vector<CandidateModel>& candidates,
                               const Forest& forest, const Dataset& train,
                               const Dataset& test, bool fallback_to_all,
                               int threads = 0);

struct StabilityResult {
  std::vector<double> mean_rbo;  // one per screened candidate
  int chosen = -1;               // index into the screened list
  int n_bootstraps = 0;
};

// Draws n_bootstraps resamples (with replacement) of the forest's trees,
// re-aggregates every candidate's per-tree scores on each resample, and
// scores each candidate by the mean rank-based overlap over all resample
// pairs. The same resamples are used for every candidate. The maximizer
// wins; ties go to the earlier candidate in the list.
StabilityResult stability_select(const std::vector<CandidateModel>& screened,
                                 const Forest& forest, const Dataset& data,
                                 int n_bootstraps, double persistence,
                                 std::uint64_t seed, int threads = 0);

// Ranks features by the median of their ranks across the given reports
// (even count: mean of the two middle ranks). Scores are negative median
// ranks so that better (smaller) ranks sort first; ties break by feature
// index.
ImportanceReport ensemble_rank(const std::vector<ImportanceReport>& reports);

struct PcsOptions {
  int n_bootstraps = 10;
  double persistence = 0.9;
  bool fallback_to_all = false;
  int threads = 0;
};

// The full recommendation pipeline: screen on test predictions, run the
// stability selection over the screened candidates, and build the
// median-rank ensemble of their importance reports.
struct PcsSelection {
  ScreenResult screen;
  StabilityResult stability;
  std::string chosen_id;
  std::vector<ImportanceReport> screened_reports;
  ImportanceReport ensemble;
};

PcsSelection pcs_select(const std::vector<CandidateModel>& candidates,
                        const Forest& forest, const Dataset& train,
                        const Dataset& test, const PcsOptions& options,
                        std::uint64_t seed);

// Per-candidate {id, test_performance, mean_rbo, screened, chosen} plus the
// run parameters.
std::string selection_summary_json(
    const std::vector<CandidateModel>& candidates, const PcsSelection& s);

}  // namespace mdiplus
