#include "mdiplus/pcs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "mdiplus/errors.hpp"
#include "mdiplus/parallel.hpp"
#include "mdiplus/rng.hpp"

namespace mdiplus {
namespace {

constexpr double kScreenTolerance = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double test_performance(const Eigen::VectorXd& y, const Eigen::VectorXd& pred,
                        Task task) {
  if (task == Task::kRegression) return r_squared(y, pred);
  double correct = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double label = pred[i] >= 0.5 ? 1.0 : 0.0;
    if (label == y[i]) correct += 1.0;
  }
  return correct / static_cast<double>(y.size());
}

std::vector<double> candidate_ranking_scores(const Eigen::MatrixXd& per_tree,
                                             const std::vector<int>& trees) {
  const Eigen::Index p = per_tree.cols();
  std::vector<double> scores(static_cast<std::size_t>(p), 0.0);
  for (Eigen::Index k = 0; k < p; ++k) {
    double sum = 0.0;
    int count = 0;
    for (int t : trees) {
      const double v = per_tree(t, k);
      if (std::isnan(v)) continue;
      sum += v;
      ++count;
    }
    scores[static_cast<std::size_t>(k)] = count > 0 ? sum / count : kNegInf;
  }
  return scores;
}

}  // namespace

ScreenResult prediction_screen(const std::vector<CandidateModel>& candidates,
                               const Forest& forest, const Dataset& train,
                               const Dataset& test, bool fallback_to_all,
                               int threads) {
  if (candidates.empty()) throw ConfigError("no candidates to screen");
  if (test.p() != forest.n_features || train.p() != forest.n_features) {
    throw ConfigError("candidate screening data does not match the forest");
  }
  ScreenResult result;
  result.performance.assign(candidates.size(), 0.0);
  result.baseline =
      test_performance(test.y, predict(forest, test.x, threads), forest.task);

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const CandidateModel& cand = candidates[c];
    const RfPlusModel model =
        fit_rf_plus(forest, train, cand.spec, cand.augment_raw,
                    /*fit_in_bag=*/!cand.loo, threads);
    const Eigen::VectorXd pred = rf_plus_predict(model, test.x, threads);
    result.performance[c] = test_performance(test.y, pred, forest.task);
    if (result.performance[c] >= result.baseline - kScreenTolerance) {
      result.kept.push_back(static_cast<int>(c));
    }
  }
  if (result.kept.empty()) {
    if (!fallback_to_all) {
      throw EmptyScreenError(
          "every candidate predicted worse than the forest");
    }
    result.fell_back = true;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      result.kept.push_back(static_cast<int>(c));
    }
  }
  return result;
}

StabilityResult stability_select(const std::vector<CandidateModel>& screened,
                                 const Forest& forest, const Dataset& data,
                                 int n_bootstraps, double persistence,
                                 std::uint64_t seed, int threads) {
  if (screened.empty()) throw ConfigError("stability needs >= 1 candidate");
  if (n_bootstraps < 2) throw ConfigError("stability needs >= 2 bootstraps");
  if (forest.trees.size() < 2) {
    throw ConfigError("stability needs a forest with >= 2 trees");
  }

  // The same tree resamples serve every candidate.
  const std::size_t t_count = forest.trees.size();
  std::vector<std::vector<int>> resamples(
      static_cast<std::size_t>(n_bootstraps));
  for (int b = 0; b < n_bootstraps; ++b) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(b)),
            stream::kStability);
    std::vector<int>& trees = resamples[static_cast<std::size_t>(b)];
    trees.resize(t_count);
    for (std::size_t i = 0; i < t_count; ++i) {
      trees[i] = static_cast<int>(rng.uniform_below(t_count));
    }
  }

  StabilityResult result;
  result.n_bootstraps = n_bootstraps;
  result.mean_rbo.assign(screened.size(), 0.0);
  for (std::size_t c = 0; c < screened.size(); ++c) {
    const CandidateModel& cand = screened[c];
    MdiPlusOptions options;
    options.augment_raw = cand.augment_raw;
    options.loo = cand.loo;
    const ImportanceReport report =
        mdi_plus(forest, data, cand.spec, cand.metric, options, threads);

    std::vector<std::vector<int>> rankings(resamples.size());
    for (std::size_t b = 0; b < resamples.size(); ++b) {
      rankings[b] = ranking_from_scores(
          candidate_ranking_scores(report.per_tree, resamples[b]));
    }
    double total = 0.0;
    int pairs = 0;
    for (std::size_t a = 0; a < rankings.size(); ++a) {
      for (std::size_t b = a + 1; b < rankings.size(); ++b) {
        total += rbo(rankings[a], rankings[b], persistence);
        ++pairs;
      }
    }
    result.mean_rbo[c] = total / pairs;
  }

  result.chosen = 0;
  for (std::size_t c = 1; c < screened.size(); ++c) {
    if (result.mean_rbo[c] > result.mean_rbo[static_cast<std::size_t>(
                                 result.chosen)]) {
      result.chosen = static_cast<int>(c);
    }
  }
  return result;
}

ImportanceReport ensemble_rank(const std::vector<ImportanceReport>& reports) {
  if (reports.empty()) throw ConfigError("ensemble needs >= 1 report");
  const std::size_t p = reports.front().per_feature.size();
  for (const ImportanceReport& r : reports) {
    if (r.per_feature.size() != p ||
        r.feature_names != reports.front().feature_names) {
      throw ConfigError("ensemble reports cover different feature sets");
    }
  }

  std::vector<std::vector<int>> report_ranks;
  report_ranks.reserve(reports.size());
  for (const ImportanceReport& r : reports) {
    report_ranks.push_back(ranks_from_scores(r.per_feature));
  }

  ImportanceReport out;
  out.method = "pcs-ensemble";
  out.feature_names = reports.front().feature_names;
  out.per_feature.resize(p);
  out.n_trees_contributing.assign(p, static_cast<int>(reports.size()));
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<double> ranks;
    ranks.reserve(reports.size());
    for (const std::vector<int>& rr : report_ranks) {
      ranks.push_back(static_cast<double>(rr[k]));
    }
    std::sort(ranks.begin(), ranks.end());
    const std::size_t h = ranks.size() / 2;
    const double median =
        ranks.size() % 2 ? ranks[h] : 0.5 * (ranks[h - 1] + ranks[h]);
    out.per_feature[k] = -median;
  }
  out.ranking = ranking_from_scores(out.per_feature);
  return out;
}

PcsSelection pcs_select(const std::vector<CandidateModel>& candidates,
                        const Forest& forest, const Dataset& train,
                        const Dataset& test, const PcsOptions& options,
                        std::uint64_t seed) {
  PcsSelection selection;
  selection.screen =
      prediction_screen(candidates, forest, train, test,
                        options.fallback_to_all, options.threads);

  std::vector<CandidateModel> screened;
  for (int c : selection.screen.kept) {
    screened.push_back(candidates[static_cast<std::size_t>(c)]);
  }
  selection.stability =
      stability_select(screened, forest, train, options.n_bootstraps,
                       options.persistence, seed, options.threads);
  selection.chosen_id =
      screened[static_cast<std::size_t>(selection.stability.chosen)].id;

  for (const CandidateModel& cand : screened) {
    MdiPlusOptions mp;
    mp.augment_raw = cand.augment_raw;
    mp.loo = cand.loo;
    selection.screened_reports.push_back(
        mdi_plus(forest, train, cand.spec, cand.metric, mp, options.threads));
  }
  selection.ensemble = ensemble_rank(selection.screened_reports);
  return selection;
}

std::string selection_summary_json(
    const std::vector<CandidateModel>& candidates, const PcsSelection& s) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["baseline_performance"] = s.screen.baseline;
  doc["fell_back"] = s.screen.fell_back;
  doc["n_bootstraps"] = s.stability.n_bootstraps;
  doc["chosen"] = s.chosen_id;

  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    nlohmann::json entry;
    entry["id"] = candidates[c].id;
    entry["test_performance"] = s.screen.performance[c];
    const auto kept_it = std::find(s.screen.kept.begin(),
                                   s.screen.kept.end(), static_cast<int>(c));
    const bool screened = kept_it != s.screen.kept.end();
    entry["screened"] = screened;
    if (screened) {
      const std::size_t pos = static_cast<std::size_t>(
          kept_it - s.screen.kept.begin());
      entry["mean_rbo"] = s.stability.mean_rbo[pos];
      entry["chosen"] = candidates[c].id == s.chosen_id;
    } else {
      entry["mean_rbo"] = nullptr;
      entry["chosen"] = false;
    }
    arr.push_back(entry);
  }
  doc["candidates"] = arr;
  return doc.dump(2);
}

}  // namespace mdiplus
