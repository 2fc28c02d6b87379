#pragma once

#include <Eigen/Dense>
#include <optional>

#include "pwb/multipliers.hpp"
#include "pwb/panel.hpp"
#include "pwb/rng.hpp"
#include "pwb/variance.hpp"

namespace pwb {

enum class PwbKind { Oracle, D, V, H };

struct PwbVariant {
  PwbKind kind = PwbKind::H;
  std::optional<MatrixXd> oracle_sigma_a2;  // required iff kind == Oracle
  std::optional<MatrixXd> oracle_sigma_d2;
  double kappa = 0.0;  // KS cutoff; <= 0 means 1/B
};

struct ScalingState {
  MatrixXd theta_a;  // K x K
  MatrixXd theta_d;
  VectorXd ind_a;  // {0,1} diagonal of the a-side indicator matrix
  VectorXd ind_d;
  VectorXd mu_a;  // thresholds
  VectorXd mu_d;
  VectorXd d_star;  // K, H only; empty otherwise
};

struct KsResult {
  double p_value = 1.0;
  int d_star = 0;
};

// First-pass output shared by the hybrid variant and the regime classifier.
struct DiagnosticPass {
  MatrixXd t_star;     // B x K standardized raw-sum statistics
  VectorXd ks_pvalues; // K
  VectorXd d_star;     // K, {0,1}
};

struct BootstrapResult {
  MatrixXd draws;   // B x K rows of beta*_b - beta_hat
  MatrixXd t_star;  // B x K
  VectorXd ci_lower;  // K
  VectorXd ci_upper;
  bool reject = false;
  double rho_stat = 0.0;  // rho'(beta_hat - beta0)
  double q_lower = 0.0;   // empirical quantiles of rho'(beta* - beta_hat)
  double q_upper = 0.0;
  VectorXd ks_pvalues;
  VectorXd d_star;
  ScalingState scaling;
  PwbVariant variant;
};

// Survival function of the Kolmogorov distribution at lambda, by the
// alternating series truncated at |term| < 1e-12; floored at 1e-300.
double kolmogorov_pvalue(double lambda);

double standard_normal_cdf(double x);

// One-sample KS normality check on a column of raw bootstrap sums; the
// column is standardized internally by its root mean square over b.
// A column with standard deviation below 1e-14 is flagged non-Gaussian.
KsResult ks_diagnostic(const VectorXd& raw_column, double kappa);

// Whitening scalings and threshold indicators for one variant. d_star is
// consumed only by the hybrid thresholds.
ScalingState compute_scaling(const ScoreProjection& proj,
                             const VarianceEstimates& est,
                             const SpatialMultiplierEngine& engine, double q,
                             const PwbVariant& variant,
                             const VectorXd* d_star = nullptr);

// One bootstrap draw of beta* - beta_hat under the given scaling.
VectorXd bootstrap_draw(const ScoreProjection& proj,
                        const ScalingState& scaling,
                        const SpatialMultiplierEngine& engine, double q,
                        const MatrixXd& xtx, RngKey key);

// B draws under vanishing-sensitive scaling, reduced to the KS flags.
DiagnosticPass run_diagnostic_pass(const ScoreProjection& proj,
                                   const VarianceEstimates& est,
                                   const SpatialMultiplierEngine& engine,
                                   double q, int b, double kappa, RngKey key);

// Full bootstrap: scaling, B draws, standardized statistics, equal-tail
// quantile test of rho'beta = rho'beta0, per-coordinate intervals.
BootstrapResult run_pwb(const OlsFit& fit, const ScoreProjection& proj,
                        const VarianceEstimates& est,
                        const SpatialMultiplierEngine& engine, double q,
                        const PwbVariant& variant, int b, double alpha,
                        const VectorXd& rho, const VectorXd& beta0, RngKey key,
                        const DiagnosticPass* diag = nullptr);

}  // namespace pwb
