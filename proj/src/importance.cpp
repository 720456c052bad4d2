#include "mdiplus/importance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include "json.hpp"
#include <sstream>
#include <stdexcept>

#include "mdiplus/errors.hpp"
#include "mdiplus/parallel.hpp"

namespace mdiplus {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

std::string score_to_string(double v) {
  if (v == kNegInf) return "-inf";
  return format_double(v);
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  }
  return out;
}

Eigen::VectorXd entries_of(const Eigen::VectorXd& y,
                           const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[static_cast<Eigen::Index>(r)] = y[rows[r]];
  }
  return out;
}

// Linear predictors of every feature's partial model: block k columns kept,
// all other columns imputed at their evaluation-row means, coefficients
// beta (optionally downdated per row), intercept always the full-data one.
// Returns an n x p matrix with NaN columns for empty blocks.
Eigen::MatrixXd partial_linear_predictors(const TransformedMatrix& tm,
                                          const GlmFit& fit, bool loo) {
  const Eigen::Index n = tm.z.rows();
  const Eigen::Index m = tm.z.cols();
  const int p = static_cast<int>(tm.blocks.size());
  const Eigen::VectorXd zbar =
      m > 0 ? Eigen::VectorXd(tm.z.colwise().mean().transpose())
            : Eigen::VectorXd(0);
  const double base = (m > 0 ? zbar.dot(fit.beta) : 0.0) + fit.alpha;

  Eigen::MatrixXd eta(n, p);
  eta.setConstant(kNaN);
  if (m == 0) return eta;

  const Eigen::MatrixXd zc = tm.z.rowwise() - zbar.transpose();
  Eigen::VectorXd downdate_base;    // zbar . dbeta_i
  Eigen::MatrixXd downdate_terms;   // zc elementwise dbeta
  if (loo) {
    downdate_base = fit.loo_dbeta * zbar;
    downdate_terms = zc.cwiseProduct(fit.loo_dbeta);
  }

  for (int k = 0; k < p; ++k) {
    const auto [begin, end] = tm.blocks[static_cast<std::size_t>(k)];
    const Eigen::Index width = end - begin;
    if (width == 0) continue;
    Eigen::VectorXd col =
        Eigen::VectorXd::Constant(n, base) +
        zc.middleCols(begin, width) * fit.beta.segment(begin, width);
    if (loo) {
      col -= downdate_base +
             downdate_terms.middleCols(begin, width).rowwise().sum();
    }
    eta.col(k) = col;
  }
  return eta;
}

SimilarityMetric resolve_metric(const SimilarityMetric& metric,
                                const GlmFit& fit, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& full_prediction) {
  SimilarityMetric resolved = metric;
  if (metric.kind != MetricKind::kNegHuberLoss ||
      std::isfinite(metric.huber_delta)) {
    return resolved;
  }
  if (std::isfinite(fit.huber_delta_effective)) {
    resolved.huber_delta = fit.huber_delta_effective;
    return resolved;
  }
  // Adaptive fallback: 1.35 robust standard deviations of the full-model
  // residuals.
  Eigen::VectorXd r = y - full_prediction;
  std::vector<double> abs_dev(static_cast<std::size_t>(r.size()));
  std::vector<double> values(r.data(), r.data() + r.size());
  std::nth_element(values.begin(), values.begin() + values.size() / 2,
                   values.end());
  const double med = values[values.size() / 2];
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    abs_dev[static_cast<std::size_t>(i)] = std::abs(r[i] - med);
  }
  std::nth_element(abs_dev.begin(), abs_dev.begin() + abs_dev.size() / 2,
                   abs_dev.end());
  double scale = 1.4826 * abs_dev[abs_dev.size() / 2];
  if (scale <= 0.0) scale = r.cwiseAbs().maxCoeff();
  if (scale <= 0.0) scale = 1.0;
  resolved.huber_delta = 1.35 * scale;
  return resolved;
}

void validate_compatibility(const Forest& forest, const GlmSpec& spec,
                            const SimilarityMetric& metric) {
  const Link link = link_for(spec.family);
  if (link == Link::kLogit && forest.task != Task::kBinaryClassification) {
    throw ConfigError("logistic MDI+ needs a classification forest");
  }
  if (metric.kind == MetricKind::kNegLogLoss && link != Link::kLogit) {
    throw ConfigError(
        "neg-log-loss scores probabilities; pair it with the logistic GLM");
  }
  if (metric.kind != MetricKind::kNegLogLoss && link == Link::kLogit) {
    throw ConfigError("the logistic GLM pairs with the neg-log-loss metric");
  }
  if (spec.family == GlmFamily::kHuberRidge &&
      forest.task != Task::kRegression) {
    throw ConfigError("huber MDI+ applies to regression forests only");
  }
}

}  // namespace

void finalize_report(ImportanceReport* report) {
  const Eigen::Index t_count = report->per_tree.rows();
  const Eigen::Index p = report->per_tree.cols();
  report->per_feature.assign(static_cast<std::size_t>(p), 0.0);
  report->n_trees_contributing.assign(static_cast<std::size_t>(p), 0);
  for (Eigen::Index k = 0; k < p; ++k) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const double v = report->per_tree(t, k);
      if (std::isnan(v)) continue;
      sum += v;
      ++count;
    }
    report->n_trees_contributing[static_cast<std::size_t>(k)] = count;
    const double empty = report->method == "mdi-plus" ? kNegInf : 0.0;
    report->per_feature[static_cast<std::size_t>(k)] =
        count > 0 ? sum / count : empty;
  }
  report->ranking = ranking_from_scores(report->per_feature);
}

std::string report_to_csv(const ImportanceReport& report) {
  const std::size_t p = report.per_feature.size();
  const std::vector<int> ranks = ranks_from_scores(report.per_feature);
  std::ostringstream out;
  out << "feature,name,score,rank,n_trees_contributing";
  if (!report.normalized.empty()) out << ",normalized";
  out << '\n';
  for (std::size_t k = 0; k < p; ++k) {
    out << k << ',' << report.feature_names[k] << ','
        << score_to_string(report.per_feature[k]) << ',' << ranks[k] << ','
        << report.n_trees_contributing[k];
    if (!report.normalized.empty()) {
      out << ',' << format_double(report.normalized[k]);
    }
    out << '\n';
  }
  return out.str();
}

std::string report_to_json(const ImportanceReport& report) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["method"] = report.method;
  if (!report.config.empty()) doc["config"] = report.config;
  const std::vector<int> ranks = ranks_from_scores(report.per_feature);
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t k = 0; k < report.per_feature.size(); ++k) {
    nlohmann::json f;
    f["feature"] = k;
    f["name"] = report.feature_names[k];
    if (report.per_feature[k] == kNegInf) {
      f["score"] = "-inf";
    } else {
      f["score"] = report.per_feature[k];
    }
    f["rank"] = ranks[k];
    f["n_trees_contributing"] = report.n_trees_contributing[k];
    if (!report.normalized.empty()) f["normalized"] = report.normalized[k];
    features.push_back(f);
  }
  doc["features"] = features;
  return doc.dump(2);
}

ImportanceReport mdi_classical(const Forest& forest) {
  const int p = forest.n_features;
  const Eigen::Index t_count = static_cast<Eigen::Index>(forest.trees.size());
  ImportanceReport report;
  report.method = "mdi";
  report.feature_names = forest.feature_names;
  report.per_tree.resize(t_count, p);
  report.per_tree.setZero();
  report.normalized.assign(static_cast<std::size_t>(p), 0.0);

  for (Eigen::Index t = 0; t < t_count; ++t) {
    const TreeStructure& tree = forest.trees[static_cast<std::size_t>(t)].tree;
    const double n = static_cast<double>(tree.n_in_bag);
    for (const Split& s : tree.splits) {
      report.per_tree(t, s.feature) += s.n_node * s.gain / n;
    }
    if (tree.root_impurity > 0.0) {
      for (int k = 0; k < p; ++k) {
        report.normalized[static_cast<std::size_t>(k)] +=
            report.per_tree(t, k) / tree.root_impurity;
      }
    }
  }
  for (int k = 0; k < p; ++k) {
    report.normalized[static_cast<std::size_t>(k)] /=
        static_cast<double>(t_count);
  }
  finalize_report(&report);
  return report;
}

std::vector<double> mdi_via_r2(const TreeStructure& tree,
                               const Eigen::MatrixXd& x_bag,
                               const Eigen::VectorXd& y_bag) {
  const int p = tree.p;
  std::vector<double> scores(static_cast<std::size_t>(p), 0.0);
  if (tree.splits.empty()) return scores;

  const TransformedMatrix tm = transform(tree, x_bag, false);
  GlmOptions options;
  options.compute_loo = false;
  const GlmFit fit = fit_ols(tm.z, y_bag, options);
  const Eigen::MatrixXd eta = partial_linear_predictors(tm, fit, false);
  for (int k = 0; k < p; ++k) {
    const auto& block = tm.blocks[static_cast<std::size_t>(k)];
    if (block.second == block.first) continue;  // empty: score stays 0
    scores[static_cast<std::size_t>(k)] =
        unnormalized_r_squared(y_bag, eta.col(k));
  }
  return scores;
}

ImportanceReport mdi_r2(const Forest& forest, const Dataset& data,
                        int threads) {
  const int p = forest.n_features;
  const Eigen::Index t_count = static_cast<Eigen::Index>(forest.trees.size());
  ImportanceReport report;
  report.method = "mdi-r2";
  report.feature_names = forest.feature_names;
  report.per_tree.resize(t_count, p);

  parallel_for(static_cast<std::size_t>(t_count), threads, [&](std::size_t t) {
    const FittedTree& fitted = forest.trees[t];
    const std::vector<int> rows = in_bag_rows(fitted.bootstrap);
    const Eigen::MatrixXd x_bag = rows_of(data.x, rows);
    const Eigen::VectorXd y_bag = entries_of(data.y, rows);
    const std::vector<double> scores = mdi_via_r2(fitted.tree, x_bag, y_bag);
    for (int k = 0; k < p; ++k) {
      report.per_tree(static_cast<Eigen::Index>(t), k) =
          scores[static_cast<std::size_t>(k)];
    }
  });
  finalize_report(&report);
  return report;
}

ImportanceReport mdi_oob(const Forest& forest, const Dataset& data,
                         int threads) {
  const int p = forest.n_features;
  const Eigen::Index t_count = static_cast<Eigen::Index>(forest.trees.size());
  ImportanceReport report;
  report.method = "mdi-oob";
  report.feature_names = forest.feature_names;
  report.per_tree.resize(t_count, p);

  parallel_for(static_cast<std::size_t>(t_count), threads, [&](std::size_t t) {
    const FittedTree& fitted = forest.trees[t];
    const std::vector<int>& oob = fitted.bootstrap.oob;
    if (oob.empty()) {
      report.per_tree.row(static_cast<Eigen::Index>(t)).setConstant(kNaN);
      return;
    }
    Eigen::VectorXd row = Eigen::VectorXd::Zero(p);
    if (!fitted.tree.splits.empty()) {
      const std::vector<int> bag = in_bag_rows(fitted.bootstrap);
      const Eigen::MatrixXd x_bag = rows_of(data.x, bag);
      const Eigen::VectorXd y_bag = entries_of(data.y, bag);
      const TransformedMatrix tm_bag = transform(fitted.tree, x_bag, false);
      GlmOptions options;
      options.compute_loo = false;
      const GlmFit fit = fit_ols(tm_bag.z, y_bag, options);

      const Eigen::MatrixXd x_oob = rows_of(data.x, oob);
      const Eigen::VectorXd y_oob = entries_of(data.y, oob);
      const TransformedMatrix tm_oob = transform(fitted.tree, x_oob, false);
      // Impute the training (in-bag) column means for the other blocks.
      const Eigen::VectorXd train_mean =
          tm_bag.z.colwise().mean().transpose();
      const double base = train_mean.dot(fit.beta) + fit.alpha;
      const double n_oob = static_cast<double>(oob.size());
      const double y_oob_mean = y_oob.mean();
      const double ss_tot = (y_oob.array() - y_oob_mean).square().sum();
      for (int k = 0; k < p; ++k) {
        const auto [begin, end] = tm_oob.blocks[static_cast<std::size_t>(k)];
        if (end == begin) continue;  // never split: exactly 0
        const Eigen::VectorXd pred =
            Eigen::VectorXd::Constant(x_oob.rows(), base) +
            (tm_oob.z.middleCols(begin, end - begin).rowwise() -
             train_mean.segment(begin, end - begin).transpose()) *
                fit.beta.segment(begin, end - begin);
        const double ss_res = (y_oob - pred).squaredNorm();
        row[k] = (ss_tot - ss_res) / n_oob;
      }
    }
    report.per_tree.row(static_cast<Eigen::Index>(t)) = row.transpose();
  });
  finalize_report(&report);
  return report;
}

ImportanceReport mda(const Forest& forest, const Dataset& data,
                     std::uint64_t seed, int n_permutations, int threads) {
  if (n_permutations < 1) {
    throw ConfigError("mda needs at least one permutation");
  }
  const int p = forest.n_features;
  const Eigen::Index t_count = static_cast<Eigen::Index>(forest.trees.size());
  ImportanceReport report;
  report.method = "mda";
  report.feature_names = forest.feature_names;
  report.per_tree.resize(t_count, p);

  const bool classify = forest.task == Task::kBinaryClassification;
  const auto loss = [classify](const Eigen::VectorXd& y,
                               const Eigen::VectorXd& pred) {
    if (!classify) {
      return (y - pred).squaredNorm() / static_cast<double>(y.size());
    }
    double wrong = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double label = pred[i] >= 0.5 ? 1.0 : 0.0;
      if (label != y[i]) wrong += 1.0;
    }
    return wrong / static_cast<double>(y.size());
  };

  parallel_for(static_cast<std::size_t>(t_count), threads, [&](std::size_t t) {
    const FittedTree& fitted = forest.trees[t];
    const std::vector<int>& oob = fitted.bootstrap.oob;
    if (oob.empty()) {
      report.per_tree.row(static_cast<Eigen::Index>(t)).setConstant(kNaN);
      return;
    }
    const Eigen::MatrixXd x_oob = rows_of(data.x, oob);
    const Eigen::VectorXd y_oob = entries_of(data.y, oob);
    const Eigen::VectorXd baseline_pred = predict(fitted.tree, x_oob);
    const double baseline = loss(y_oob, baseline_pred);

    for (int k = 0; k < p; ++k) {
      if (fitted.tree.splits_by_feature[static_cast<std::size_t>(k)].empty()) {
        report.per_tree(static_cast<Eigen::Index>(t), k) = 0.0;
        continue;
      }
      Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t),
                          static_cast<std::uint64_t>(k)),
              stream::kMda);
      double excess = 0.0;
      Eigen::MatrixXd x_perm = x_oob;
      std::vector<int> order(oob.size());
      for (int rep = 0; rep < n_permutations; ++rep) {
        for (std::size_t i = 0; i < order.size(); ++i) {
          order[i] = static_cast<int>(i);
        }
        rng.shuffle(order);
        for (std::size_t i = 0; i < order.size(); ++i) {
          x_perm(static_cast<Eigen::Index>(i), k) =
              x_oob(order[i], k);
        }
        excess += loss(y_oob, predict(fitted.tree, x_perm)) - baseline;
      }
      report.per_tree(static_cast<Eigen::Index>(t), k) =
          excess / n_permutations;
    }
  });
  finalize_report(&report);
  return report;
}

ImportanceReport mdi_plus(const Forest& forest, const Dataset& data,
                          const GlmSpec& spec, const SimilarityMetric& metric,
                          const MdiPlusOptions& options, int threads) {
  validate_compatibility(forest, spec, metric);
  const int p = forest.n_features;
  const Eigen::Index t_count = static_cast<Eigen::Index>(forest.trees.size());
  ImportanceReport report;
  report.method = "mdi-plus";
  report.feature_names = forest.feature_names;
  report.config = "psi=" + std::string(options.augment_raw ? "stumps+raw"
                                                           : "stumps") +
                  ";glm=" + to_string(spec.family) +
                  ";metric=" + to_string(metric) +
                  ";loo=" + (options.loo ? "true" : "false");
  report.per_tree.resize(t_count, p);
  const Link link = link_for(spec.family);

  parallel_for(static_cast<std::size_t>(t_count), threads, [&](std::size_t t) {
    const FittedTree& fitted = forest.trees[t];
    if (fitted.tree.splits.empty()) {
      report.per_tree.row(static_cast<Eigen::Index>(t)).setConstant(kNaN);
      return;
    }
    try {
      Eigen::MatrixXd x_eval;
      Eigen::VectorXd y_eval;
      if (options.loo) {
        x_eval = data.x;
        y_eval = data.y;
      } else {
        const std::vector<int> bag = in_bag_rows(fitted.bootstrap);
        x_eval = rows_of(data.x, bag);
        y_eval = entries_of(data.y, bag);
      }
      const TransformedMatrix tm =
          transform(fitted.tree, x_eval, options.augment_raw);
      GlmOptions glm_options;
      glm_options.compute_loo = options.loo;
      for (int raw : tm.raw_col) {
        if (raw >= 0) glm_options.standardize_cols.push_back(raw);
      }
      const GlmFit fit = fit_regularized(tm.z, y_eval, spec, glm_options);

      SimilarityMetric resolved = metric;
      if (metric.kind == MetricKind::kNegHuberLoss) {
        resolved = resolve_metric(metric, fit, y_eval,
                                  predict_glm(fit, tm.z));
      }
      const Eigen::MatrixXd eta =
          partial_linear_predictors(tm, fit, options.loo);
      for (int k = 0; k < p; ++k) {
        const auto& block = tm.blocks[static_cast<std::size_t>(k)];
        if (block.second == block.first) {
          report.per_tree(static_cast<Eigen::Index>(t), k) = kNaN;
          continue;
        }
        Eigen::VectorXd pred = eta.col(k);
        if (link == Link::kLogit) {
          for (Eigen::Index i = 0; i < pred.size(); ++i) {
            pred[i] = sigmoid(pred[i]);
          }
        }
        report.per_tree(static_cast<Eigen::Index>(t), k) =
            evaluate_metric(resolved, y_eval, pred);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError("mdi-plus failed on tree " + std::to_string(t) + ": " +
                      e.what());
    }
  });
  finalize_report(&report);
  return report;
}

std::vector<PartialPrediction> saabas_partial(const TransformedMatrix& tm,
                                              const GlmFit& fit) {
  const int p = static_cast<int>(tm.blocks.size());
  std::vector<PartialPrediction> out(static_cast<std::size_t>(p));
  const Eigen::MatrixXd eta = partial_linear_predictors(tm, fit, false);
  const Eigen::VectorXd zbar =
      tm.z.cols() > 0 ? Eigen::VectorXd(tm.z.colwise().mean().transpose())
                      : Eigen::VectorXd(0);
  const double base =
      (tm.z.cols() > 0 ? zbar.dot(fit.beta) : 0.0) + fit.alpha;
  for (int k = 0; k < p; ++k) {
    out[static_cast<std::size_t>(k)].feature = k;
    Eigen::VectorXd values;
    const auto& block = tm.blocks[static_cast<std::size_t>(k)];
    if (block.second == block.first) {
      values = Eigen::VectorXd::Constant(tm.z.rows(), base);
    } else {
      values = eta.col(k);
    }
    if (fit.link == Link::kLogit) {
      for (Eigen::Index i = 0; i < values.size(); ++i) {
        values[i] = sigmoid(values[i]);
      }
    }
    out[static_cast<std::size_t>(k)].values = std::move(values);
  }
  return out;
}

RfPlusModel fit_rf_plus(const Forest& forest, const Dataset& data,
                        const GlmSpec& spec, bool augment_raw,
                        bool fit_in_bag, int threads) {
  RfPlusModel model;
  model.forest = &forest;
  model.spec = spec;
  model.augment_raw = augment_raw;
  model.fits.resize(forest.trees.size());
  parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
    Eigen::MatrixXd x_fit;
    Eigen::VectorXd y_fit;
    if (fit_in_bag) {
      const std::vector<int> bag = in_bag_rows(forest.trees[t].bootstrap);
      x_fit = rows_of(data.x, bag);
      y_fit = entries_of(data.y, bag);
    } else {
      x_fit = data.x;
      y_fit = data.y;
    }
    const TransformedMatrix tm =
        transform(forest.trees[t].tree, x_fit, augment_raw);
    GlmOptions options;
    options.compute_loo = false;
    for (int raw : tm.raw_col) {
      if (raw >= 0) options.standardize_cols.push_back(raw);
    }
    model.fits[t] = fit_regularized(tm.z, y_fit, spec, options);
  });
  return model;
}

Eigen::VectorXd rf_plus_predict(const RfPlusModel& model,
                                const Eigen::MatrixXd& x, int threads) {
  if (model.forest == nullptr || model.fits.empty()) {
    throw ConfigError("rf_plus_predict needs a fitted model");
  }
  if (x.cols() != model.forest->n_features) {
    throw ConfigError("query column count does not match the model");
  }
  const std::size_t t_count = model.fits.size();
  std::vector<Eigen::VectorXd> per_tree(t_count);
  parallel_for(t_count, threads, [&](std::size_t t) {
    const TransformedMatrix tm =
        transform(model.forest->trees[t].tree, x, model.augment_raw);
    per_tree[t] = predict_glm(model.fits[t], tm.z);
  });
  Eigen::VectorXd total = Eigen::VectorXd::Zero(x.rows());
  for (std::size_t t = 0; t < t_count; ++t) total += per_tree[t];
  return total / static_cast<double>(t_count);
}

}  // namespace mdiplus
