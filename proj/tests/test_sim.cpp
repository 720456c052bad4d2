#include "mdiplus/sim.hpp"

#include <algorithm>
#include <cmath>
#include "doctest.h"
#include <set>
#include <string>
#include <vector>

#include "mdiplus/errors.hpp"
#include "mdiplus/rng.hpp"

using namespace mdiplus;

namespace {

Eigen::MatrixXd ones_row(int p) { return Eigen::MatrixXd::Ones(1, p); }

ResponseSpec fixed_spec(ResponseKind kind) {
  ResponseSpec spec;
  spec.kind = kind;
  spec.relabel = false;
  return spec;
}

double empirical_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

ExperimentConfig small_auroc_config() {
  ExperimentConfig config;
  config.covariates.kind = CovariateKind::kCorrelatedGaussian;
  config.covariates.n = 60;
  config.covariates.p = 8;
  config.response.kind = ResponseKind::kLinear;
  config.response.s_linear = 3;
  config.noise.pve = 0.8;
  config.forest.n_trees = 5;
  MethodSpec mdi;
  mdi.name = "mdi";
  MethodSpec plus;
  plus.name = "mdi-plus";
  config.methods = {mdi, plus};
  config.replicates = 2;
  config.seed = 17;
  return config;
}

}  // namespace

TEST_CASE("response formulas match hand values") {
  Rng rng(1, 99);

  SUBCASE("linear on an all-ones row sums the five signals") {
    const Response r = gen_response(ones_row(7), fixed_spec(ResponseKind::kLinear), rng);
    CHECK(r.f[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.signal_cols == std::vector<int>{0, 1, 2, 3, 4});
  }

  SUBCASE("lss fires one indicator when only the first pair is positive") {
    Eigen::MatrixXd x(1, 6);
    x << 1.0, 0.5, -1.0, 1.0, 1.0, -0.5;  // pairs: (+,+), (-,+), (+,-)
    const Response r = gen_response(x, fixed_spec(ResponseKind::kLss), rng);
    CHECK(r.f[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("lss counts all three pairs on an all-ones row") {
    const Response r = gen_response(ones_row(6), fixed_spec(ResponseKind::kLss), rng);
    CHECK(r.f[0] == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("lss threshold is strict: zeros do not fire") {
    const Response r =
        gen_response(Eigen::MatrixXd::Zero(1, 6), fixed_spec(ResponseKind::kLss), rng);
    CHECK(r.f[0] == 0.0);
  }

  SUBCASE("poly-interaction on an all-ones row") {
    const Response r =
        gen_response(ones_row(6), fixed_spec(ResponseKind::kPolyInteraction), rng);
    CHECK(r.f[0] == doctest::Approx(6.0).epsilon(1e-12));
  }

  SUBCASE("linear-plus-lss on an all-ones row") {
    const Response r =
        gen_response(ones_row(6), fixed_spec(ResponseKind::kLinearPlusLss), rng);
    CHECK(r.f[0] == doctest::Approx(6.0).epsilon(1e-12));
  }

  SUBCASE("scale and intercept shift the formula value") {
    ResponseSpec spec = fixed_spec(ResponseKind::kLinear);
    spec.scale = 2.0;
    spec.intercept = -3.0;
    const Response r = gen_response(ones_row(5), spec, rng);
    CHECK(r.f[0] == doctest::Approx(7.0).epsilon(1e-12));
  }

  SUBCASE("too few columns for the signal count") {
    CHECK_THROWS_AS(gen_response(ones_row(4), fixed_spec(ResponseKind::kLinear), rng),
                    ConfigError);
    CHECK_THROWS_AS(gen_response(ones_row(5), fixed_spec(ResponseKind::kLss), rng),
                    ConfigError);
  }
}

TEST_CASE("logistic link turns the formula into a probability") {
  // P(Y=1) = (1 + X1)/3 on a binary X1 equals the logistic transform of
  // -log 2 + 2 log 2 * X1: exactly 1/3 at X1=0 and 2/3 at X1=1.
  ResponseSpec spec = fixed_spec(ResponseKind::kLinear);
  spec.s_linear = 1;
  spec.scale = 2.0 * std::log(2.0);
  spec.intercept = -std::log(2.0);
  spec.logistic_link = true;

  Eigen::MatrixXd x(2, 3);
  x << 0.0, 9.0, 9.0,
       1.0, 9.0, 9.0;
  Rng rng(2, 99);
  const Response r = gen_response(x, spec, rng);
  CHECK(r.f[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.f[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.signal_cols == std::vector<int>{0});
  CHECK(r.signal_mask == std::vector<bool>{true, false, false});
}

TEST_CASE("relabeled signal columns are distinct, recorded, and deterministic") {
  Eigen::MatrixXd x(4, 9);
  Rng fill(3, 99);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 9; ++j) x(i, j) = fill.normal();
  }
  ResponseSpec spec;  // relabel defaults on
  spec.kind = ResponseKind::kLinearPlusLss;

  Rng rng_a(11, 99);
  Rng rng_b(11, 99);
  const Response a = gen_response(x, spec, rng_a);
  const Response b = gen_response(x, spec, rng_b);
  CHECK(a.signal_cols == b.signal_cols);
  CHECK((a.f.array() == b.f.array()).all());

  CHECK(a.signal_cols.size() == 6);
  std::set<int> distinct(a.signal_cols.begin(), a.signal_cols.end());
  CHECK(distinct.size() == 6);
  for (std::size_t j = 0; j < a.signal_mask.size(); ++j) {
    CHECK(a.signal_mask[j] == (distinct.count(static_cast<int>(j)) > 0));
  }

  // The relabeled formula value equals the fixed-role formula applied to the
  // reordered columns.
  Eigen::MatrixXd reordered(x.rows(), 6);
  for (int k = 0; k < 6; ++k) reordered.col(k) = x.col(a.signal_cols[k]);
  Rng rng_c(5, 99);
  const Response fixed =
      gen_response(reordered, fixed_spec(ResponseKind::kLinearPlusLss), rng_c);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.f[i] == doctest::Approx(fixed.f[i]).epsilon(1e-12));
  }
}

TEST_CASE("noise calibration hits the target variance ratio") {
  Eigen::VectorXd f(2);
  f << -std::sqrt(2.0), std::sqrt(2.0);  // population variance 2

  CHECK(calibrate_noise(f, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(calibrate_noise(f, 0.4) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(calibrate_noise(f, 0.999) ==
        doctest::Approx(2.0 * 0.001 / 0.999).epsilon(1e-9));

  Eigen::VectorXd shifted(2);
  shifted << 10.0, 12.0;  // variance 1, mean irrelevant
  CHECK(calibrate_noise(shifted, 0.5) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(calibrate_noise(Eigen::VectorXd::Constant(5, 3.0), 0.5),
                  DataError);
  CHECK_THROWS_AS(calibrate_noise(f, 0.0), ConfigError);
  CHECK_THROWS_AS(calibrate_noise(f, 1.0), ConfigError);
  CHECK_THROWS_AS(calibrate_noise(f, -0.2), ConfigError);
}

TEST_CASE("label corruption flips the rounded count and is an involution") {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(10);
  for (int i = 1; i < 10; i += 2) y[i] = 1.0;
  const Eigen::VectorXd original = y;

  SUBCASE("zero fraction leaves labels alone") {
    Rng rng(4, 99);
    corrupt_labels(&y, 0.0, rng);
    CHECK((y.array() == original.array()).all());
  }

  SUBCASE("counts round halves to even") {
    Rng rng(4, 99);
    corrupt_labels(&y, 0.25, rng);  // 2.5 rounds to 2
    CHECK((y - original).cwiseAbs().sum() == doctest::Approx(2.0));
  }

  SUBCASE("plain rounding elsewhere") {
    Rng rng(4, 99);
    corrupt_labels(&y, 0.3, rng);
    CHECK((y - original).cwiseAbs().sum() == doctest::Approx(3.0));
    for (int i = 0; i < 10; ++i) {
      CHECK((y[i] == 0.0 || y[i] == 1.0));
    }
  }

  SUBCASE("same stream twice restores the labels") {
    Rng first(4, 99);
    corrupt_labels(&y, 0.3, first);
    Rng second(4, 99);
    corrupt_labels(&y, 0.3, second);
    CHECK((y.array() == original.array()).all());
  }

  SUBCASE("fraction bounds") {
    Rng rng(4, 99);
    CHECK_THROWS_AS(corrupt_labels(&y, 1.0, rng), ConfigError);
    CHECK_THROWS_AS(corrupt_labels(&y, -0.1, rng), ConfigError);
  }
}

TEST_CASE("outlier injection corrupts the tails of a non-signal feature") {
  const int n = 100;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 0.0;                        // signal column (unused here)
    x(i, 1) = static_cast<double>(i);     // sorting column, strictly increasing
    y[i] = 0.5;
  }
  const std::vector<bool> mask = {true, false};

  SUBCASE("q = 0 leaves responses alone") {
    Eigen::VectorXd copy = y;
    Rng rng(6, 99);
    inject_outliers(x, mask, 0.0, 25.0, rng, &copy);
    CHECK((copy.array() == y.array()).all());
  }

  SUBCASE("q = 0.05 corrupts two rows per tail") {
    Eigen::VectorXd copy = y;
    Rng rng(6, 99);
    inject_outliers(x, mask, 0.05, 25.0, rng, &copy);
    int low_tail = 0;
    int high_tail = 0;
    int untouched = 0;
    for (int i = 0; i < n; ++i) {
      if (copy[i] == 0.5) {
        ++untouched;
      } else if (i < 50) {
        ++low_tail;
        CHECK(copy[i] > 10.0);  // drawn around +25
      } else {
        ++high_tail;
        CHECK(copy[i] < -10.0);  // drawn around -25
      }
    }
    CHECK(low_tail == 2);
    CHECK(high_tail == 2);
    CHECK(untouched == n - 4);
    // The smallest values of the only non-signal column are rows 0,1; the
    // largest are rows 98,99.
    CHECK(copy[0] != 0.5);
    CHECK(copy[1] != 0.5);
    CHECK(copy[98] != 0.5);
    CHECK(copy[99] != 0.5);
  }

  SUBCASE("deterministic in the stream") {
    Eigen::VectorXd a = y;
    Eigen::VectorXd b = y;
    Rng ra(6, 99);
    Rng rb(6, 99);
    inject_outliers(x, mask, 0.1, 10.0, ra, &a);
    inject_outliers(x, mask, 0.1, 10.0, rb, &b);
    CHECK((a.array() == b.array()).all());
  }

  SUBCASE("needs a non-signal feature") {
    Eigen::VectorXd copy = y;
    Rng rng(6, 99);
    CHECK_THROWS_AS(
        inject_outliers(x, {true, true}, 0.05, 25.0, rng, &copy), DataError);
  }

  SUBCASE("q bounds and mask size") {
    Eigen::VectorXd copy = y;
    Rng rng(6, 99);
    CHECK_THROWS_AS(inject_outliers(x, mask, 1.0, 25.0, rng, &copy),
                    ConfigError);
    CHECK_THROWS_AS(inject_outliers(x, {true}, 0.05, 25.0, rng, &copy),
                    ConfigError);
  }
}

TEST_CASE("correlated gaussian covariates match the block structure") {
  Rng rng(7, 99);
  const int n = 5000;

  SUBCASE("rho = 0 gives near-identity correlations") {
    const Eigen::MatrixXd x = gen_correlated_gaussian(n, 4, 0.0, 0, rng);
    REQUIRE(x.rows() == n);
    REQUIRE(x.cols() == 4);
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        CHECK(std::abs(empirical_corr(x.col(a), x.col(b))) <= 0.1);
      }
    }
  }

  SUBCASE("within-block correlation approaches rho") {
    const Eigen::MatrixXd x = gen_correlated_gaussian(n, 6, 0.9, 3, rng);
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(x.col(a).mean()) <= 0.05);
      const double var =
          (x.col(a).array() - x.col(a).mean()).square().sum() / (n - 1);
      CHECK(var == doctest::Approx(1.0).epsilon(0.05));
      for (int b = a + 1; b < 3; ++b) {
        CHECK(empirical_corr(x.col(a), x.col(b)) ==
              doctest::Approx(0.9).epsilon(0.034));
      }
    }
  }

  SUBCASE("cross-block and tail correlations stay near zero") {
    const Eigen::MatrixXd x = gen_correlated_gaussian(n, 6, 0.9, 3, rng);
    for (int a = 0; a < 3; ++a) {
      for (int b = 3; b < 6; ++b) {
        CHECK(std::abs(empirical_corr(x.col(a), x.col(b))) <= 0.1);
      }
    }
    CHECK(std::abs(empirical_corr(x.col(3), x.col(4))) <= 0.1);
  }

  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(gen_correlated_gaussian(10, 4, 1.0, 0, rng), ConfigError);
    CHECK_THROWS_AS(gen_correlated_gaussian(10, 4, -0.5, 4, rng), ConfigError);
    CHECK_THROWS_AS(gen_correlated_gaussian(10, 4, 0.5, 5, rng), ConfigError);
    CHECK_THROWS_AS(gen_correlated_gaussian(0, 4, 0.5, 0, rng), ConfigError);
  }

  SUBCASE("negative rho above the positive-definite floor is accepted") {
    const Eigen::MatrixXd x = gen_correlated_gaussian(n, 3, -0.3, 3, rng);
    CHECK(empirical_corr(x.col(0), x.col(1)) ==
          doctest::Approx(-0.3).epsilon(0.2));
  }
}

TEST_CASE("entropy-mix covariates have the stated marginals") {
  Rng rng(8, 99);
  const Eigen::MatrixXd x = gen_entropy_features(10000, rng);
  REQUIRE(x.cols() == 5);
  REQUIRE(x.rows() == 10000);

  const Eigen::VectorXd first = x.col(0);
  std::set<double> col0(first.begin(), first.end());
  for (double v : col0) CHECK((v == 0.0 || v == 1.0));
  CHECK(first.mean() == doctest::Approx(0.5).epsilon(0.04));

  CHECK(std::abs(x.col(1).mean()) <= 0.05);

  const int cats[3] = {4, 10, 20};
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd column = x.col(2 + c);
    std::set<double> values(column.begin(), column.end());
    CHECK(static_cast<int>(values.size()) == cats[c]);
    CHECK(*values.begin() == 0.0);
    CHECK(*values.rbegin() == static_cast<double>(cats[c] - 1));
  }
}

TEST_CASE("generators are seed-deterministic") {
  Rng a1(9, 99);
  Rng a2(9, 99);
  CHECK(gen_correlated_gaussian(50, 6, 0.4, 3, a1)
            .cwiseEqual(gen_correlated_gaussian(50, 6, 0.4, 3, a2))
            .all());

  Rng b1(9, 98);
  Rng b2(9, 98);
  CHECK(gen_entropy_features(50, b1)
            .cwiseEqual(gen_entropy_features(50, b2))
            .all());

  CovariateSpec spec;
  spec.kind = CovariateKind::kEntropyMix;
  spec.n = 20;
  Rng c1(9, 97);
  Rng c2(9, 97);
  CHECK(gen_covariates(spec, c1).cwiseEqual(gen_covariates(spec, c2)).all());
}

TEST_CASE("generated regression data hits the target variance ratio") {
  Rng cov_rng(10, 99);
  const Eigen::MatrixXd x = gen_correlated_gaussian(2000, 10, 0.3, 5, cov_rng);
  Rng sig_rng(10, 98);
  const Response r = gen_response(x, fixed_spec(ResponseKind::kLinear), sig_rng);

  const double pve = 0.4;
  const double sigma = std::sqrt(calibrate_noise(r.f, pve));
  Rng noise_rng(10, 97);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    y[i] = r.f[i] + sigma * noise_rng.normal();
  }

  const double var_f = (r.f.array() - r.f.mean()).square().sum() / x.rows();
  const double var_y = (y.array() - y.mean()).square().sum() / x.rows();
  CHECK(var_f / var_y == doctest::Approx(pve).epsilon(0.05));
}

TEST_CASE("method labels expand the glm family") {
  MethodSpec method;
  method.name = "mdi";
  CHECK(method_label(method) == "mdi");

  method.name = "mdi-plus";
  CHECK(method_label(method) == "mdi-plus-ridge");
  method.glm.family = GlmFamily::kHuberRidge;
  CHECK(method_label(method) == "mdi-plus-huber");
  method.label = "custom";
  CHECK(method_label(method) == "custom");
}

TEST_CASE("experiments are deterministic and thread-invariant") {
  const ExperimentConfig config = small_auroc_config();
  const ExperimentResult first = run_experiment(config, 1);
  const ExperimentResult second = run_experiment(config, 1);
  const ExperimentResult threaded = run_experiment(config, 2);

  CHECK(results_csv(first) == results_csv(second));
  CHECK(results_csv(first) == results_csv(threaded));
  CHECK(summary_csv(first) == summary_csv(threaded));

  // 2 replicates x 2 methods x 1 auroc row.
  REQUIRE(first.rows.size() == 4);
  CHECK(first.rows[0].replicate == 0);
  CHECK(first.rows[0].method == "mdi");
  CHECK(first.rows[1].method == "mdi-plus-ridge");
  CHECK(first.rows[2].replicate == 1);
  for (const ResultRow& row : first.rows) {
    CHECK(row.metric_name == "auroc");
    CHECK(row.value >= 0.0);
    CHECK(row.value <= 1.0);
  }
}

TEST_CASE("group-rank reporting splits features into three groups") {
  ExperimentConfig config;
  config.covariates.kind = CovariateKind::kCorrelatedGaussian;
  config.covariates.n = 60;
  config.covariates.p = 12;
  config.covariates.rho = 0.5;
  config.covariates.block_size = 8;
  config.response.kind = ResponseKind::kLinear;
  config.response.s_linear = 4;
  config.response.relabel = false;  // signal = first four columns
  config.noise.pve = 0.6;
  config.forest.n_trees = 5;
  MethodSpec mdi;
  mdi.name = "mdi";
  config.methods = {mdi};
  config.report = ReportKind::kGroupRanks;
  config.replicates = 1;
  config.seed = 23;

  const ExperimentResult result = run_experiment(config, 1);
  REQUIRE(result.rows.size() == 3);
  CHECK(result.rows[0].metric_name == "mean_rank_sig");
  CHECK(result.rows[1].metric_name == "mean_rank_cnsig");
  CHECK(result.rows[2].metric_name == "mean_rank_nsig");
  // Groups of sizes 4, 4, 4 partition ranks 1..12 (sum 78).
  const double total = 4.0 * (result.rows[0].value + result.rows[1].value +
                              result.rows[2].value);
  CHECK(total == doctest::Approx(78.0).epsilon(1e-12));

  config.covariates.kind = CovariateKind::kEntropyMix;
  CHECK_THROWS_AS(run_experiment(config, 1), ConfigError);
}

TEST_CASE("feature-rank reporting emits one row per feature") {
  ExperimentConfig config;
  config.covariates.kind = CovariateKind::kEntropyMix;
  config.covariates.n = 80;
  config.response.kind = ResponseKind::kLinear;
  config.response.s_linear = 1;
  config.response.relabel = false;
  config.noise.pve = 0.3;
  config.forest.n_trees = 5;
  MethodSpec mdi;
  mdi.name = "mdi";
  config.methods = {mdi};
  config.report = ReportKind::kFeatureRanks;
  config.replicates = 2;
  config.seed = 31;

  const ExperimentResult result = run_experiment(config, 1);
  REQUIRE(result.rows.size() == 10);
  for (int rep = 0; rep < 2; ++rep) {
    std::set<double> ranks;
    for (int j = 0; j < 5; ++j) {
      const ResultRow& row = result.rows[static_cast<std::size_t>(rep * 5 + j)];
      CHECK(row.replicate == rep);
      CHECK(row.metric_name == "rank_x" + std::to_string(j + 1));
      ranks.insert(row.value);
    }
    CHECK(ranks == std::set<double>{1.0, 2.0, 3.0, 4.0, 5.0});
  }
}

TEST_CASE("experiment validation rejects inconsistent configs") {
  ExperimentConfig config = small_auroc_config();

  SUBCASE("replicate count") {
    config.replicates = 0;
    CHECK_THROWS_AS(run_experiment(config, 1), ConfigError);
  }

  SUBCASE("methods required and known") {
    config.methods.clear();
    CHECK_THROWS_AS(run_experiment(config, 1), ConfigError);
    MethodSpec bad;
    bad.name = "shapley";
    config.methods = {bad};
    CHECK_THROWS_AS(run_experiment(config, 1), ConfigError);
  }

  SUBCASE("outliers only for regression") {
    config.response.logistic_link = true;
    config.noise.outlier_q = 0.05;
    CHECK_THROWS_AS(run_experiment(config, 1), ConfigError);
  }

  SUBCASE("label corruption only for classification") {
    config.noise.corrupt_fraction = 0.1;
    CHECK_THROWS_AS(run_experiment(config, 1), ConfigError);
  }
}

TEST_CASE("replicate failures carry the replicate id and stage") {
  ExperimentConfig config = small_auroc_config();
  config.covariates.kind = CovariateKind::kEntropyMix;  // p = 5
  config.response.kind = ResponseKind::kLss;            // needs 6 columns

  try {
    run_experiment(config, 1);
    FAIL("expected a stage error");
  } catch (const ConfigError& e) {
    const std::string message = e.what();
    CHECK(message.find("replicate 0") != std::string::npos);
    CHECK(message.find("response") != std::string::npos);
  }
}

TEST_CASE("result tables format as stated") {
  ExperimentResult result;
  result.rows = {{0, "m", "auroc", 0.5}, {1, "m", "auroc", 0.7}};

  CHECK(results_csv(result) ==
        "replicate,method,metric_name,value\n"
        "0,m,auroc,0.5\n"
        "1,m,auroc,0.7\n");
  // mean 0.6, sample sd sqrt(0.02), stderr sd/sqrt(2) = 0.1.
  CHECK(summary_csv(result) ==
        "method,metric_name,mean,stderr\n"
        "m,auroc,0.6,0.1\n");

  ExperimentResult single;
  single.rows = {{0, "m", "auroc", 0.25}};
  CHECK(summary_csv(single) ==
        "method,metric_name,mean,stderr\n"
        "m,auroc,0.25,0\n");

  ExperimentResult grouped;
  grouped.rows = {{0, "b", "auroc", 1.0},
                  {0, "a", "auroc", 0.0},
                  {1, "b", "auroc", 1.0},
                  {1, "a", "auroc", 1.0}};
  // First-appearance order, not alphabetical.
  CHECK(summary_csv(grouped) ==
        "method,metric_name,mean,stderr\n"
        "b,auroc,1,0\n"
        "a,auroc,0.5,0.5\n");
}

TEST_CASE("experiment configs round-trip through json") {
  ExperimentConfig config;
  config.covariates.kind = CovariateKind::kCorrelatedGaussian;
  config.covariates.n = 123;
  config.covariates.p = 17;
  config.covariates.rho = 0.35;
  config.covariates.block_size = 9;
  config.response.kind = ResponseKind::kLinearPlusLss;
  config.response.m_interactions = 2;
  config.response.scale = 1.5;
  config.response.intercept = -0.25;
  config.response.relabel = false;
  config.noise.pve = 0.22;
  config.forest.n_trees = 13;
  config.forest.min_samples_leaf = 2;
  config.report = ReportKind::kGroupRanks;
  config.replicates = 7;
  config.seed = 4242;

  MethodSpec plus;
  plus.name = "mdi-plus";
  plus.glm.family = GlmFamily::kHuberRidge;
  plus.glm.lambda_multipliers = {0.1, 1.0, 10.0};
  plus.glm.huber_delta = 2.0;
  plus.metric.kind = MetricKind::kNegHuberLoss;
  plus.metric.huber_delta = 1.1;
  plus.options.augment_raw = false;
  plus.options.loo = false;
  MethodSpec mda_spec;
  mda_spec.name = "mda";
  config.methods = {plus, mda_spec};

  const std::string text = experiment_config_to_json(config);
  const ExperimentConfig parsed = experiment_config_from_json(text);
  CHECK(experiment_config_to_json(parsed) == text);

  CHECK(parsed.covariates.rho == 0.35);
  CHECK(parsed.response.kind == ResponseKind::kLinearPlusLss);
  CHECK(parsed.report == ReportKind::kGroupRanks);
  CHECK(parsed.methods.size() == 2);
  CHECK(parsed.methods[0].glm.family == GlmFamily::kHuberRidge);
  CHECK(parsed.methods[0].glm.lambda_multipliers ==
        std::vector<double>{0.1, 1.0, 10.0});
  CHECK(parsed.methods[0].metric.kind == MetricKind::kNegHuberLoss);
  CHECK(parsed.methods[0].metric.huber_delta == 1.1);
  CHECK(parsed.methods[0].options.augment_raw == false);
  CHECK(parsed.methods[0].options.loo == false);
  CHECK(parsed.seed == 4242);
}

TEST_CASE("experiment config json rejects malformed input") {
  CHECK_THROWS_AS(experiment_config_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json("[1,2]"), ConfigError);
  CHECK_THROWS_AS(
      experiment_config_from_json(
          R"({"methods":[{"name":"mdi"}],"bogus":1})"),
      ConfigError);
  CHECK_THROWS_AS(
      experiment_config_from_json(
          R"({"methods":[{"name":"mdi","bogus":1}]})"),
      ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"schema_version":2})"),
                  ConfigError);
  CHECK_THROWS_AS(experiment_config_from_json(R"({"replicates":3})"),
                  ConfigError);  // methods missing
  CHECK_THROWS_AS(
      experiment_config_from_json(
          R"({"methods":[{"name":"mdi"}],"replicates":"three"})"),
      ConfigError);

  // Minimal valid config picks up defaults.
  const ExperimentConfig config =
      experiment_config_from_json(R"({"methods":[{"name":"mdi"}]})");
  CHECK(config.replicates == 50);
  CHECK(config.covariates.n == 100);
  CHECK(config.methods.size() == 1);
}

TEST_CASE("presets expand to runnable configurations") {
  const std::vector<std::string> names = preset_names();
  CHECK(names.size() == 11);

  SUBCASE("entropy bias, regression flavor") {
    const auto expanded = expand_preset("entropy-bias-regression");
    REQUIRE(expanded.size() == 1);
    const ExperimentConfig& config = expanded[0].second;
    CHECK(expanded[0].first == "entropy-bias-regression");
    CHECK(config.covariates.kind == CovariateKind::kEntropyMix);
    CHECK(config.covariates.n == 1000);
    CHECK(config.response.s_linear == 1);
    CHECK(config.response.relabel == false);
    CHECK(config.response.logistic_link == false);
    CHECK(config.noise.pve == 0.1);
    CHECK(config.report == ReportKind::kFeatureRanks);
    CHECK(config.replicates == 50);
    REQUIRE(config.methods.size() == 4);
    CHECK(method_label(config.methods[0]) == "mdi");
    CHECK(method_label(config.methods[1]) == "mdi-oob");
    CHECK(method_label(config.methods[2]) == "mda");
    CHECK(method_label(config.methods[3]) == "mdi-plus-ridge");
  }

  SUBCASE("entropy bias, classification flavor") {
    const auto expanded = expand_preset("entropy-bias-classification");
    REQUIRE(expanded.size() == 1);
    const ExperimentConfig& config = expanded[0].second;
    CHECK(config.covariates.n == 250);
    CHECK(config.response.logistic_link == true);
    CHECK(config.response.scale == doctest::Approx(2.0 * std::log(2.0)));
    CHECK(config.response.intercept == doctest::Approx(-std::log(2.0)));
    CHECK(method_label(config.methods[3]) == "mdi-plus-logistic");
    CHECK(config.methods[3].metric.kind == MetricKind::kNegLogLoss);
  }

  SUBCASE("correlation bias with overrides") {
    PresetOverrides overrides;
    overrides.rho = 0.7;
    overrides.replicates = 3;
    overrides.has_seed = true;
    overrides.seed = 99;
    const auto expanded = expand_preset("correlation-bias", overrides);
    REQUIRE(expanded.size() == 1);
    const ExperimentConfig& config = expanded[0].second;
    CHECK(config.covariates.p == 100);
    CHECK(config.covariates.block_size == 50);
    CHECK(config.covariates.rho == 0.7);
    CHECK(config.replicates == 3);
    CHECK(config.seed == 99);
    CHECK(config.response.kind == ResponseKind::kLinearPlusLss);
    CHECK(config.report == ReportKind::kGroupRanks);
  }

  SUBCASE("pve sweep fans out over the grid") {
    const auto expanded = expand_preset("pve-sweep-lss");
    REQUIRE(expanded.size() == 4);
    CHECK(expanded[0].first == "pve-sweep-lss_pve0.1");
    CHECK(expanded[3].first == "pve-sweep-lss_pve0.8");
    for (const auto& [tag, config] : expanded) {
      CHECK(config.response.kind == ResponseKind::kLss);
      CHECK(config.covariates.p == 50);
      CHECK(config.covariates.block_size == 25);
      CHECK(config.covariates.rho == 0.6);
      CHECK(config.report == ReportKind::kAuroc);
    }
    PresetOverrides pinned;
    pinned.pve = 0.2;
    CHECK(expand_preset("pve-sweep-lss", pinned).size() == 1);
  }

  SUBCASE("outlier sweep fans out over mass and center") {
    const auto expanded = expand_preset("outlier-sweep-linear");
    REQUIRE(expanded.size() == 6);
    CHECK(expanded[0].first == "outlier-sweep-linear_q0.01_mu10");
    CHECK(expanded[5].first == "outlier-sweep-linear_q0.05_mu25");
    for (const auto& [tag, config] : expanded) {
      CHECK(config.noise.outlier_q > 0.0);
      REQUIRE(config.methods.size() == 3);
      CHECK(method_label(config.methods[1]) == "mdi-plus-ridge");
      CHECK(method_label(config.methods[2]) == "mdi-plus-huber");
    }
  }

  SUBCASE("unknown preset") {
    CHECK_THROWS_AS(expand_preset("entropy-bias"), ConfigError);
  }
}
