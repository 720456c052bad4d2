#include "mdiplus/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "mdiplus/errors.hpp"

namespace mdiplus {
namespace {

constexpr double kEigTruncation = 1e-12;   // relative eigenvalue cutoff (OLS)
constexpr double kLeverageGuard = 1e-10;   // 1 - h must exceed this
constexpr double kInfluenceGuard = 0.2;    // |gr| h above this: exact refit
constexpr double kGradTol = 1e-6;          // Newton stopping rule
constexpr int kMaxNewtonIter = 100;
constexpr double kProbClamp = 1e-12;

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_loss_term(double y, double eta) {
  // log(1 + exp(eta)) - y*eta, computed without overflow.
  const double softplus =
      eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
  return softplus - y * eta;
}

double huber_rho(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Column centering (all columns) and optional unit-sd scaling (selected
// columns), as one affine map zc_j = (z_j - center_j) / scale_j. Centering
// only reparameterizes the unpenalized intercept, so fits are unchanged;
// scaling changes what the penalty measures for the selected columns.
struct Preprocess {
  Eigen::MatrixXd zc;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
};

Preprocess preprocess(const Eigen::MatrixXd& z,
                      const std::vector<int>& standardize_cols) {
  Preprocess pre;
  const Eigen::Index n = z.rows();
  const Eigen::Index m = z.cols();
  pre.center = z.colwise().mean().transpose();
  pre.scale = Eigen::VectorXd::Ones(m);
  for (int j : standardize_cols) {
    if (j < 0 || j >= m) throw ConfigError("standardize column out of range");
    const double sd = std::sqrt(
        (z.col(j).array() - pre.center[j]).square().sum() /
        static_cast<double>(n));
    if (sd > 0.0) pre.scale[j] = sd;
  }
  pre.zc = (z.rowwise() - pre.center.transpose()).array().rowwise() /
           pre.scale.transpose().array();
  return pre;
}

// Maps leave-one-out downdates computed in centered/scaled coordinates back
// to the coordinates of the original design.
void map_loo_to_raw(const Eigen::MatrixXd& dbeta_c,
                    const Eigen::VectorXd& dalpha_c, const Preprocess& pre,
                    GlmFit* fit) {
  fit->loo_dbeta = dbeta_c.array().rowwise() /
                   pre.scale.transpose().array();
  fit->loo_dalpha = dalpha_c - fit->loo_dbeta * pre.center;
}

void map_coefficients_to_raw(const Eigen::VectorXd& beta_c, double alpha_c,
                             const Preprocess& pre, GlmFit* fit) {
  fit->beta = beta_c.array() / pre.scale.array();
  fit->alpha = alpha_c - fit->beta.dot(pre.center);
}

std::vector<double> resolved_grid(const GlmSpec& spec, Eigen::Index n) {
  std::vector<double> multipliers = spec.lambda_multipliers.empty()
                                        ? default_lambda_multipliers()
                                        : spec.lambda_multipliers;
  std::vector<double> grid;
  grid.reserve(multipliers.size());
  for (double m : multipliers) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw ConfigError("lambda multipliers must be finite and >= 0");
    }
    if (m == 0.0 && (spec.family == GlmFamily::kLogisticL2 ||
                     spec.family == GlmFamily::kHuberRidge)) {
      throw ConfigError("lambda must be > 0 for logistic and huber fits");
    }
    grid.push_back(m * static_cast<double>(n));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  return grid;
}

// ---------------------------------------------------------------------------
// Squared-loss families: one eigendecomposition of the centered Gram is
// shared across the grid; leverages and LOO residuals per lambda cost
// O(n*m). The leverage downdate is the exact refit without the row.
// ---------------------------------------------------------------------------

struct QuadraticWork {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // V
  Eigen::MatrixXd u;             // zc * V
  Eigen::MatrixXd u_squared;
  Eigen::VectorXd q;             // U^T y
  double y_mean = 0.0;
};

QuadraticWork quadratic_work(const Eigen::MatrixXd& zc,
                             const Eigen::VectorXd& y) {
  QuadraticWork w;
  const Eigen::Index m = zc.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(zc.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  w.eigenvalues = es.eigenvalues().cwiseMax(0.0);
  w.eigenvectors = es.eigenvectors();
  w.u = zc * w.eigenvectors;
  w.u_squared = w.u.array().square();
  w.q = w.u.transpose() * y;
  w.y_mean = y.mean();
  return w;
}

Eigen::VectorXd shrinkage_factors(const QuadraticWork& w, double lambda) {
  const Eigen::Index m = w.eigenvalues.size();
  Eigen::VectorXd g(m);
  const double cutoff =
      kEigTruncation * (m > 0 ? w.eigenvalues[m - 1] : 0.0);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double d = w.eigenvalues[j] + lambda;
    g[j] = (lambda == 0.0 && w.eigenvalues[j] <= cutoff) ? 0.0 : 1.0 / d;
  }
  return g;
}

// Exact penalized least-squares refit without one row, in centered
// coordinates with a free intercept (used when the leverage downdate is
// degenerate).
void exact_refit_quadratic(const Eigen::MatrixXd& zc, const Eigen::VectorXd& y,
                           double lambda, Eigen::Index drop,
                           Eigen::VectorXd* beta_c, double* alpha_c) {
  const Eigen::Index n = zc.rows();
  const Eigen::Index m = zc.cols();
  Eigen::MatrixXd a(n - 1, m + 1);
  Eigen::VectorXd rhs(n - 1);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == drop) continue;
    a.row(r).head(m) = zc.row(i);
    a(r, m) = 1.0;
    rhs[r] = y[i];
    ++r;
  }
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(m + 1, m + 1);
  normal.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  for (Eigen::Index j = 0; j < m; ++j) normal(j, j) += lambda;
  Eigen::VectorXd sol =
      normal.selfadjointView<Eigen::Lower>().ldlt().solve(a.transpose() * rhs);
  *beta_c = sol.head(m);
  *alpha_c = sol[m];
}

GlmFit fit_quadratic(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                     const GlmSpec& spec, const GlmOptions& options) {
  const Eigen::Index n = z.rows();
  const Eigen::Index m = z.cols();
  const Preprocess pre = preprocess(z, options.standardize_cols);
  const QuadraticWork work = quadratic_work(pre.zc, y);

  const std::vector<double> grid = spec.family == GlmFamily::kOls
                                       ? std::vector<double>{0.0}
                                       : resolved_grid(spec, n);

  double best_criterion = std::numeric_limits<double>::infinity();
  double best_lambda = grid.front();
  Eigen::VectorXd best_g;
  for (double lambda : grid) {
    const Eigen::VectorXd g = shrinkage_factors(work, lambda);
    const Eigen::VectorXd w = work.q.cwiseProduct(g);
    const Eigen::VectorXd residual =
        y - (work.u * w).array().matrix() -
        Eigen::VectorXd::Constant(n, work.y_mean);
    const Eigen::VectorXd leverage =
        (work.u_squared * g).array() + 1.0 / static_cast<double>(n);
    double criterion = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double loo_residual;
      if (leverage[i] < 1.0 - kLeverageGuard) {
        loo_residual = residual[i] / (1.0 - leverage[i]);
      } else {
        Eigen::VectorXd beta_c;
        double alpha_c;
        exact_refit_quadratic(pre.zc, y, lambda, i, &beta_c, &alpha_c);
        loo_residual = y[i] - pre.zc.row(i).dot(beta_c) - alpha_c;
      }
      criterion += loo_residual * loo_residual;
    }
    criterion /= static_cast<double>(n);
    if (criterion < best_criterion) {
      best_criterion = criterion;
      best_lambda = lambda;
      best_g = g;
    }
  }

  GlmFit fit;
  fit.link = Link::kIdentity;
  fit.lambda = best_lambda;
  fit.loo_criterion = best_criterion;

  const Eigen::VectorXd w = work.q.cwiseProduct(best_g);
  const Eigen::VectorXd beta_c = work.eigenvectors * w;
  map_coefficients_to_raw(beta_c, work.y_mean, pre, &fit);

  const Eigen::VectorXd residual = y - work.u * w -
      Eigen::VectorXd::Constant(n, work.y_mean);
  // Stationarity check in the (centered, scaled) coordinates of the solve,
  // expressed in the eigenbasis: the gradient there is -q + (D + lambda) w.
  // Directions truncated by the pseudo-inverse are excluded: the minimum-norm
  // solution is not stationary along them.
  Eigen::VectorXd grad_v =
      -work.q + (work.eigenvalues.array() + best_lambda).matrix()
                    .cwiseProduct(w);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (best_g[j] == 0.0) grad_v[j] = 0.0;
  }
  fit.kkt_residual = std::max(m > 0 ? grad_v.cwiseAbs().maxCoeff() : 0.0,
                              std::abs(residual.sum()));

  if (options.compute_loo) {
    const Eigen::VectorXd leverage =
        (work.u_squared * best_g).array() + 1.0 / static_cast<double>(n);
    // Row i of downdate_dirs is (K + lambda I)^+ zc_i.
    const Eigen::MatrixXd downdate_dirs =
        (work.u * best_g.asDiagonal()) * work.eigenvectors.transpose();
    Eigen::MatrixXd dbeta_c(n, m);
    Eigen::VectorXd dalpha_c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (leverage[i] < 1.0 - kLeverageGuard) {
        const double c = residual[i] / (1.0 - leverage[i]);
        dbeta_c.row(i) = c * downdate_dirs.row(i);
        dalpha_c[i] = c / static_cast<double>(n);
      } else {
        Eigen::VectorXd beta_ref;
        double alpha_ref;
        exact_refit_quadratic(pre.zc, y, best_lambda, i, &beta_ref, &alpha_ref);
        dbeta_c.row(i) = (beta_c - beta_ref).transpose();
        dalpha_c[i] = work.y_mean - alpha_ref;
        fit.exact_refit_rows.push_back(static_cast<int>(i));
      }
    }
    map_loo_to_raw(dbeta_c, dalpha_c, pre, &fit);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Logistic-L2 and Huber-ridge: damped Newton, warm-started along the grid
// (largest penalty first), with an approximate-LOO criterion per penalty.
// ---------------------------------------------------------------------------

struct RobustFamily {
  // theta = (coefficients in centered coordinates, intercept).
  GlmFamily family;
  double delta = 0.0;  // Huber threshold in response units

  double loss(double y, double eta) const {
    return family == GlmFamily::kLogisticL2 ? log_loss_term(y, eta)
                                            : huber_rho(y - eta, delta);
  }
  // Generalized residual: the negative derivative of the loss in eta.
  double generalized_residual(double y, double eta) const {
    if (family == GlmFamily::kLogisticL2) return y - sigmoid(eta);
    return std::clamp(y - eta, -delta, delta);
  }
  double weight(double y, double eta) const {
    if (family == GlmFamily::kLogisticL2) {
      const double p = sigmoid(eta);
      return std::max(p * (1.0 - p), 1e-12);
    }
    return std::abs(y - eta) <= delta ? 1.0 : 0.0;
  }
};

struct NewtonState {
  Eigen::VectorXd theta;  // size m+1, intercept last
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

double robust_objective(const RobustFamily& fam, const Eigen::MatrixXd& zc,
                        const Eigen::VectorXd& y, double lambda,
                        const Eigen::VectorXd& theta,
                        const std::vector<Eigen::Index>* skip = nullptr) {
  const Eigen::Index n = zc.rows();
  const Eigen::Index m = zc.cols();
  Eigen::VectorXd eta = zc * theta.head(m) +
      Eigen::VectorXd::Constant(n, theta[m]);
  double obj = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (skip && std::find(skip->begin(), skip->end(), i) != skip->end()) {
      continue;
    }
    obj += fam.loss(y[i], eta[i]);
  }
  return obj + 0.5 * lambda * theta.head(m).squaredNorm();
}

// Damped Newton on the penalized objective; `drop` optionally removes one
// row (used for exact-refit fallbacks).
NewtonState newton_solve(const RobustFamily& fam, const Eigen::MatrixXd& zc,
                         const Eigen::VectorXd& y, double lambda,
                         Eigen::VectorXd theta_init,
                         Eigen::Index drop = -1) {
  const Eigen::Index n = zc.rows();
  const Eigen::Index m = zc.cols();
  NewtonState state;
  state.theta = std::move(theta_init);

  std::vector<Eigen::Index> skip;
  if (drop >= 0) skip.push_back(drop);
  const std::vector<Eigen::Index>* skip_ptr = skip.empty() ? nullptr : &skip;

  state.objective = robust_objective(fam, zc, y, lambda, state.theta, skip_ptr);
  for (int iter = 0; iter < kMaxNewtonIter; ++iter) {
    Eigen::VectorXd eta = zc * state.theta.head(m) +
        Eigen::VectorXd::Constant(n, state.theta[m]);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m + 1);
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (drop == i) continue;
      const double gr = fam.generalized_residual(y[i], eta[i]);
      grad.head(m) -= gr * zc.row(i).transpose();
      grad[m] -= gr;
      weights[i] = fam.weight(y[i], eta[i]);
    }
    grad.head(m) += lambda * state.theta.head(m);
    state.grad_norm = grad.cwiseAbs().maxCoeff();
    state.iterations = iter;
    if (state.grad_norm <= kGradTol) return state;

    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(m + 1, m + 1);
    {
      Eigen::MatrixXd weighted = zc.array().colwise() *
          weights.array().sqrt();
      hessian.topLeftCorner(m, m).selfadjointView<Eigen::Lower>().rankUpdate(
          weighted.transpose());
    }
    hessian.block(m, 0, 1, m) = (weights.asDiagonal() * zc).colwise().sum();
    hessian(m, m) = weights.sum() + (fam.family == GlmFamily::kHuberRidge &&
                                     weights.sum() == 0.0
                                         ? 1.0
                                         : 0.0);
    for (Eigen::Index j = 0; j < m; ++j) hessian(j, j) += lambda;

    Eigen::VectorXd step = hessian.selfadjointView<Eigen::Lower>().ldlt()
                               .solve(-grad);
    double t = 1.0;
    for (;;) {
      Eigen::VectorXd candidate = state.theta + t * step;
      const double obj =
          robust_objective(fam, zc, y, lambda, candidate, skip_ptr);
      if (obj <= state.objective + 1e-12 * std::abs(state.objective) ||
          t < 1e-10) {
        state.theta = std::move(candidate);
        state.objective = obj;
        break;
      }
      t *= 0.5;
    }
  }
  // Re-evaluate the gradient norm at the final iterate.
  {
    Eigen::VectorXd eta = zc * state.theta.head(m) +
        Eigen::VectorXd::Constant(n, state.theta[m]);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (drop == i) continue;
      const double gr = fam.generalized_residual(y[i], eta[i]);
      grad.head(m) -= gr * zc.row(i).transpose();
      grad[m] -= gr;
    }
    grad.head(m) += lambda * state.theta.head(m);
    state.grad_norm = grad.cwiseAbs().maxCoeff();
  }
  return state;
}

// Curvature state shared by the approximate-LOO criterion and the final
// downdates: H^{-1} a_i for every row (a_i = (zc_i, 1)) and the quadratic
// form h_i = a_i' H^{-1} a_i, all from one blocked solve.
struct CurvatureState {
  Eigen::MatrixXd hinv_a;  // (m+1) x n, column i is H^{-1} a_i
  Eigen::VectorXd h;       // size n
};

CurvatureState curvature_state(const RobustFamily& fam,
                               const Eigen::MatrixXd& zc,
                               const Eigen::VectorXd& weights, double lambda) {
  const Eigen::Index n = zc.rows();
  const Eigen::Index m = zc.cols();
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(m + 1, m + 1);
  {
    Eigen::MatrixXd weighted =
        zc.array().colwise() * weights.array().sqrt();
    hessian.topLeftCorner(m, m).selfadjointView<Eigen::Lower>().rankUpdate(
        weighted.transpose());
  }
  hessian.block(m, 0, 1, m) = (weights.asDiagonal() * zc).colwise().sum();
  hessian(m, m) = std::max(weights.sum(), 1e-12);
  for (Eigen::Index j = 0; j < m; ++j) hessian(j, j) += lambda;

  Eigen::MatrixXd a(m + 1, n);
  a.topRows(m) = zc.transpose();
  a.row(m).setOnes();

  CurvatureState state;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian.selfadjointView<Eigen::Lower>());
  state.hinv_a = ldlt.solve(a);
  state.h = (a.array() * state.hinv_a.array()).colwise().sum().transpose();
  return state;
}

GlmFit fit_robust(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                  const GlmSpec& spec, const GlmOptions& options) {
  const Eigen::Index n = z.rows();
  const Eigen::Index m = z.cols();
  const Preprocess pre = preprocess(z, options.standardize_cols);

  RobustFamily fam;
  fam.family = spec.family;
  double delta_effective = std::numeric_limits<double>::infinity();
  if (spec.family == GlmFamily::kHuberRidge) {
    if (!(spec.huber_delta > 0.0)) {
      throw ConfigError("huber_delta must be > 0");
    }
    GlmSpec pilot_spec = spec;
    pilot_spec.family = GlmFamily::kRidge;
    GlmOptions pilot_options = options;
    pilot_options.compute_loo = false;
    const GlmFit pilot = fit_quadratic(z, y, pilot_spec, pilot_options);
    Eigen::VectorXd pilot_residual = y - z * pilot.beta -
        Eigen::VectorXd::Constant(n, pilot.alpha);
    std::vector<double> abs_dev;
    const double med = median_of(std::vector<double>(
        pilot_residual.data(), pilot_residual.data() + n));
    for (Eigen::Index i = 0; i < n; ++i) {
      abs_dev.push_back(std::abs(pilot_residual[i] - med));
    }
    double scale = 1.4826 * median_of(abs_dev);
    if (scale <= 0.0) scale = pilot_residual.cwiseAbs().maxCoeff();
    if (scale <= 0.0) {
      // Residuals identically zero: Huber and ridge coincide.
      GlmOptions full_options = options;
      GlmFit fit = fit_quadratic(z, y, pilot_spec, full_options);
      fit.huber_delta_effective = std::numeric_limits<double>::infinity();
      return fit;
    }
    delta_effective = spec.huber_delta * scale;
    fam.delta = delta_effective;
  }

  const std::vector<double> grid = resolved_grid(spec, n);

  // Initial iterate for the largest penalty.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m + 1);
  if (spec.family == GlmFamily::kLogisticL2) {
    const double p0 = std::clamp(y.mean(), kProbClamp, 1.0 - kProbClamp);
    theta[m] = std::log(p0 / (1.0 - p0));
  } else {
    theta[m] = y.mean();
  }

  struct Best {
    double criterion = std::numeric_limits<double>::infinity();
    double lambda = 0.0;
    Eigen::VectorXd theta;
    double grad_norm = 0.0;
  } best;

  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    const double lambda = *it;
    NewtonState state = newton_solve(fam, pre.zc, y, lambda, theta);
    theta = state.theta;  // warm start for the next (smaller) penalty

    // Approximate-LOO criterion at this penalty.
    Eigen::VectorXd eta = pre.zc * theta.head(m) +
        Eigen::VectorXd::Constant(n, theta[m]);
    Eigen::VectorXd weights(n), gen_residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      weights[i] = fam.weight(y[i], eta[i]);
      gen_residual[i] = fam.generalized_residual(y[i], eta[i]);
    }
    const CurvatureState curv = curvature_state(fam, pre.zc, weights, lambda);

    double criterion = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = 1.0 - weights[i] * curv.h[i];
      double eta_loo;
      if (denom > kLeverageGuard) {
        eta_loo = eta[i] - gen_residual[i] * curv.h[i] / denom;
      } else {
        NewtonState refit =
            newton_solve(fam, pre.zc, y, lambda, theta, i);
        eta_loo = pre.zc.row(i).dot(refit.theta.head(m)) + refit.theta[m];
      }
      criterion += fam.loss(y[i], eta_loo);
    }
    criterion /= static_cast<double>(n);
    if (criterion < best.criterion ||
        (criterion == best.criterion && lambda > best.lambda)) {
      best.criterion = criterion;
      best.lambda = lambda;
      best.theta = theta;
      best.grad_norm = state.grad_norm;
    }
  }

  GlmFit fit;
  fit.link = link_for(spec.family);
  fit.lambda = best.lambda;
  fit.loo_criterion = best.criterion;
  fit.kkt_residual = best.grad_norm;
  fit.huber_delta_effective = delta_effective;
  map_coefficients_to_raw(best.theta.head(m), best.theta[m], pre, &fit);

  if (options.compute_loo) {
    const Eigen::VectorXd& theta_star = best.theta;
    Eigen::VectorXd eta = pre.zc * theta_star.head(m) +
        Eigen::VectorXd::Constant(n, theta_star[m]);
    Eigen::VectorXd weights(n), gen_residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      weights[i] = fam.weight(y[i], eta[i]);
      gen_residual[i] = fam.generalized_residual(y[i], eta[i]);
    }
    const CurvatureState curv =
        curvature_state(fam, pre.zc, weights, best.lambda);

    // A one-step downdate is second-order accurate in the size of the true
    // perturbation, so its error grows with the scale-free influence
    // |gr_i| h_i of the dropped row. High-influence rows -- and rows with a
    // degenerate curvature denominator -- are refit exactly instead,
    // warm-started from the full-data optimum.
    const double influence_scale =
        fam.family == GlmFamily::kHuberRidge ? fam.delta : 1.0;
    Eigen::MatrixXd dbeta_c(n, m);
    Eigen::VectorXd dalpha_c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double denom = 1.0 - weights[i] * curv.h[i];
      const double influence =
          std::abs(gen_residual[i]) * curv.h[i] / influence_scale;
      if (denom > kLeverageGuard && influence <= kInfluenceGuard) {
        const Eigen::VectorXd dtheta =
            (gen_residual[i] / denom) * curv.hinv_a.col(i);
        dbeta_c.row(i) = dtheta.head(m);
        dalpha_c[i] = dtheta[m];
      } else {
        NewtonState refit =
            newton_solve(fam, pre.zc, y, best.lambda, theta_star, i);
        dbeta_c.row(i) = (theta_star.head(m) - refit.theta.head(m));
        dalpha_c[i] = theta_star[m] - refit.theta[m];
        fit.exact_refit_rows.push_back(static_cast<int>(i));
      }
    }
    map_loo_to_raw(dbeta_c, dalpha_c, pre, &fit);
  }
  return fit;
}

// Intercept-only fits (no design columns).
GlmFit fit_intercept_only(const Eigen::VectorXd& y, const GlmSpec& spec,
                          const GlmOptions& options) {
  const Eigen::Index n = y.size();
  GlmFit fit;
  fit.link = link_for(spec.family);
  fit.beta = Eigen::VectorXd(0);
  fit.lambda = 0.0;
  if (fit.link == Link::kLogit) {
    const double p0 = std::clamp(y.mean(), kProbClamp, 1.0 - kProbClamp);
    fit.alpha = std::log(p0 / (1.0 - p0));
  } else {
    fit.alpha = y.mean();
  }
  fit.kkt_residual = 0.0;
  if (options.compute_loo) {
    fit.loo_dbeta = Eigen::MatrixXd(n, 0);
    fit.loo_dalpha = Eigen::VectorXd::Zero(n);
    if (fit.link == Link::kIdentity && n > 1) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double alpha_loo =
            (y.sum() - y[i]) / static_cast<double>(n - 1);
        fit.loo_dalpha[i] = fit.alpha - alpha_loo;
      }
    } else if (fit.link == Link::kLogit && n > 1) {
      // One Newton step from the full-data optimum after dropping row i.
      const double p = sigmoid(fit.alpha);
      const double w = std::max(p * (1.0 - p), 1e-12);
      for (Eigen::Index i = 0; i < n; ++i) {
        fit.loo_dalpha[i] = (y[i] - p) / (w * static_cast<double>(n - 1));
      }
    }
    double criterion = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double eta = fit.alpha - fit.loo_dalpha[i];
      if (fit.link == Link::kLogit) {
        criterion += log_loss_term(y[i], eta);
      } else if (spec.family == GlmFamily::kHuberRidge) {
        criterion += huber_rho(y[i] - eta, fit.huber_delta_effective);
      } else {
        criterion += (y[i] - eta) * (y[i] - eta);
      }
    }
    fit.loo_criterion = criterion / static_cast<double>(n);
  }
  return fit;
}

}  // namespace

Link link_for(GlmFamily family) {
  return family == GlmFamily::kLogisticL2 ? Link::kLogit : Link::kIdentity;
}

std::string to_string(GlmFamily family) {
  switch (family) {
    case GlmFamily::kOls: return "ols";
    case GlmFamily::kRidge: return "ridge";
    case GlmFamily::kLogisticL2: return "logistic";
    case GlmFamily::kHuberRidge: return "huber";
  }
  return "ridge";
}

GlmFamily glm_family_from_string(const std::string& s) {
  if (s == "ols") return GlmFamily::kOls;
  if (s == "ridge") return GlmFamily::kRidge;
  if (s == "logistic" || s == "logistic-l2") return GlmFamily::kLogisticL2;
  if (s == "huber" || s == "huber-ridge") return GlmFamily::kHuberRidge;
  throw ConfigError("unknown glm family \"" + s +
                    "\" (expected ols, ridge, logistic, or huber)");
}

std::vector<double> default_lambda_multipliers() {
  std::vector<double> grid(20);
  for (int i = 0; i < 20; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::pow(10.0, -4.0 + 8.0 * static_cast<double>(i) / 19.0);
  }
  return grid;
}

GlmFit fit_ols(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
               const GlmOptions& options) {
  GlmSpec spec;
  spec.family = GlmFamily::kOls;
  return fit_regularized(z, y, spec, options);
}

GlmFit fit_regularized(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                       const GlmSpec& spec, const GlmOptions& options) {
  if (z.rows() != y.size()) {
    throw ConfigError("design and response row counts differ");
  }
  if (z.rows() == 0) throw ConfigError("cannot fit a GLM on zero rows");
  if (spec.family == GlmFamily::kLogisticL2) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) {
        throw ConfigError("logistic fits need a 0/1 response");
      }
    }
  }
  if (z.cols() == 0) return fit_intercept_only(y, spec, options);
  switch (spec.family) {
    case GlmFamily::kOls:
    case GlmFamily::kRidge:
      return fit_quadratic(z, y, spec, options);
    case GlmFamily::kLogisticL2:
    case GlmFamily::kHuberRidge:
      return fit_robust(z, y, spec, options);
  }
  throw ConfigError("unknown glm family");
}

std::pair<Eigen::VectorXd, double> loo_coefficients(const GlmFit& fit,
                                                    Eigen::Index i) {
  if (fit.loo_dbeta.rows() == 0) {
    throw ConfigError("fit was computed without leave-one-out state");
  }
  if (i < 0 || i >= fit.loo_dbeta.rows()) {
    throw ConfigError("loo_coefficients: row out of range");
  }
  return {fit.beta - fit.loo_dbeta.row(i).transpose(),
          fit.alpha - fit.loo_dalpha[i]};
}

Eigen::VectorXd predict_glm(const GlmFit& fit, const Eigen::MatrixXd& z) {
  if (z.cols() != fit.beta.size()) {
    throw ConfigError("design column count does not match the fit");
  }
  Eigen::VectorXd eta = z * fit.beta +
      Eigen::VectorXd::Constant(z.rows(), fit.alpha);
  if (fit.link == Link::kLogit) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
  }
  return eta;
}

}  // namespace mdiplus
