#pragma once

#include <Eigen/Core>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace mdiplus {

enum class GlmFamily { kOls, kRidge, kLogisticL2, kHuberRidge };
enum class Link { kIdentity, kLogit };

Link link_for(GlmFamily family);
std::string to_string(GlmFamily family);
GlmFamily glm_family_from_string(const std::string& s);

struct GlmSpec {
  GlmFamily family = GlmFamily::kRidge;
  // Penalty grid as multipliers of n (rows of the fit); the effective
  // penalty is multiplier * n. Empty selects the default 20-point
  // log-spaced grid on [1e-4, 1e4]. Ignored for OLS (lambda = 0). Must be
  // strictly positive for the logistic and Huber families.
  std::vector<double> lambda_multipliers;
  // Huber threshold in robust residual units: the effective threshold is
  // huber_delta times the MAD scale of a ridge pilot fit's residuals.
  double huber_delta = 1.35;
};

struct GlmOptions {
  // Columns centered and scaled to unit sd over the fitting rows before
  // penalization (coefficients are mapped back afterwards). Remaining
  // columns enter as-is.
  std::vector<int> standardize_cols;
  bool compute_loo = true;
};

// Fitted GLM with intercept (unpenalized). Coefficients are stored in the
// coordinates of the design passed in (any standardization is unmapped).
//
// Leave-one-out state: beta_{-i} = beta - loo_dbeta.row(i) and
// alpha_{-i} = alpha - loo_dalpha[i]. For the squared-loss families the
// downdate equals the exact refit without row i (penalty held fixed); for
// logistic/Huber it is one Newton step of the leave-i-out objective from
// the full-data optimum. Rows where that step is unreliable -- degenerate
// curvature denominator, or influence |gr_i| h_i large enough that the
// second-order error matters -- are refit exactly and listed in
// exact_refit_rows.
struct GlmFit {
  Eigen::VectorXd beta;
  double alpha = 0.0;
  double lambda = 0.0;  // selected effective penalty
  Link link = Link::kIdentity;
  double loo_criterion = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = 0.0;  // max-norm gradient of the penalized objective
  Eigen::MatrixXd loo_dbeta;
  Eigen::VectorXd loo_dalpha;
  std::vector<int> exact_refit_rows;
  double huber_delta_effective =
      std::numeric_limits<double>::infinity();  // response units
};

// Minimum-norm ordinary least squares (lambda = 0) with exact LOO.
GlmFit fit_ols(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
               const GlmOptions& options = {});

// Fits the family at every grid penalty, scores each by its leave-one-out
// criterion (squared error / log-loss / Huber loss), and returns the fit at
// the minimizing penalty.
GlmFit fit_regularized(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                       const GlmSpec& spec, const GlmOptions& options = {});

std::pair<Eigen::VectorXd, double> loo_coefficients(const GlmFit& fit,
                                                    Eigen::Index i);

// Applies coefficients and the inverse link (probabilities for logit).
Eigen::VectorXd predict_glm(const GlmFit& fit, const Eigen::MatrixXd& z);

std::vector<double> default_lambda_multipliers();

}  // namespace mdiplus
