#include "pwb/bootstrap.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pwb/errors.hpp"

namespace pwb {

namespace {

// Stream ids under the per-call key: 1 = final pass, 2 = diagnostic pass.
constexpr std::uint64_t kFinalPass = 1;
constexpr std::uint64_t kDiagPass = 2;

void thresholds(PwbKind kind, int n, int t, int k, const VectorXd* d_star,
                VectorXd& mu_a, VectorXd& mu_d) {
  double log_t = std::log(static_cast<double>(t));
  double log_n = std::log(static_cast<double>(n));
  double a_div = log_t / t, d_div = log_n / n;
  double a_van = 1.0 / (t * log_t), d_van = 1.0 / (n * log_n);
  mu_a.resize(k);
  mu_d.resize(k);
  switch (kind) {
    case PwbKind::Oracle:
      mu_a.setZero();
      mu_d.setZero();
      break;
    case PwbKind::D:
      mu_a.setConstant(a_div);
      mu_d.setConstant(d_div);
      break;
    case PwbKind::V:
      mu_a.setConstant(a_van);
      mu_d.setConstant(d_van);
      break;
    case PwbKind::H:
      for (int i = 0; i < k; ++i) {
        double s = d_star ? (*d_star)(i) : 0.0;
        mu_a(i) = s * a_div + (1.0 - s) * a_van;
        mu_d(i) = s * d_div + (1.0 - s) * d_van;
      }
      break;
  }
}

// Raw bootstrap score sum over all cells for one multiplier draw.
VectorXd raw_score_sum(const ScoreProjection& proj, const ScalingState& scaling,
                       const SpatialMultiplierEngine& engine, double q,
                       RngKey key) {
  const int n = proj.n_units, t = proj.n_periods, k = proj.n_regressors;
  VectorXd eta_n = draw_spatial(engine, key.child(0));
  SerialMultiplierSpec spec{q, t};
  VectorXd eta_t = draw_serial(spec, key.child(1));

  VectorXd sum = static_cast<double>(t) *
                     (scaling.theta_a * (proj.a_dd.transpose() * eta_n)) +
                 static_cast<double>(n) *
                     (scaling.theta_d * (proj.d_dd.transpose() * eta_t));
  for (int a = 0; a < k; ++a)
    sum(a) += eta_n.dot(proj.w_dd[a] * eta_t);
  sum += static_cast<double>(n) * t * proj.s_bar;
  return sum;
}

MatrixXd standardize_columns(const MatrixXd& raw) {
  const int b = static_cast<int>(raw.rows());
  MatrixXd t_star = raw;
  for (int k = 0; k < raw.cols(); ++k) {
    double rms = std::sqrt(raw.col(k).squaredNorm() / (b - 1));
    if (rms > 0.0) t_star.col(k) /= rms;
  }
  return t_star;
}

// Order-statistic quantile at probability p (index ceil(B*p), 1-based).
double order_quantile(std::vector<double> v, double p) {
  int b = static_cast<int>(v.size());
  int idx = static_cast<int>(std::ceil(b * p));
  idx = std::clamp(idx, 1, b);
  std::nth_element(v.begin(), v.begin() + (idx - 1), v.end());
  return v[idx - 1];
}

}  // namespace

double kolmogorov_pvalue(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100000; ++j) {
    double term = 2.0 * std::exp(-2.0 * lambda * lambda * j * j);
    if (term < 1e-12) break;
    sum += sign * term;
    sign = -sign;
  }
  if (sum > 1.0) sum = 1.0;
  if (sum < 1e-300) sum = 1e-300;
  return sum;
}

double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

KsResult ks_diagnostic(const VectorXd& raw_column, double kappa) {
  const int b = static_cast<int>(raw_column.size());
  double rms = std::sqrt(raw_column.squaredNorm() / (b - 1));
  if (rms < 1e-14) return {1e-300, 1};  // degenerate draws: non-Gaussian flag

  std::vector<double> z(raw_column.data(), raw_column.data() + b);
  for (double& v : z) v /= rms;
  std::sort(z.begin(), z.end());
  double d = 0.0;
  for (int i = 0; i < b; ++i) {
    double f = standard_normal_cdf(z[i]);
    d = std::max(d, std::max((i + 1.0) / b - f, f - static_cast<double>(i) / b));
  }
  double p = kolmogorov_pvalue(std::sqrt(static_cast<double>(b)) * d);
  return {p, p < kappa ? 1 : 0};
}

ScalingState compute_scaling(const ScoreProjection& proj,
                             const VarianceEstimates& est,
                             const SpatialMultiplierEngine& engine, double q,
                             const PwbVariant& variant,
                             const VectorXd* d_star) {
  const int n = proj.n_units, t = proj.n_periods, k = proj.n_regressors;

  ScalingState s;
  thresholds(variant.kind, n, t, k, d_star, s.mu_a, s.mu_d);
  if (variant.kind == PwbKind::H && d_star) s.d_star = *d_star;

  MatrixXd sigma_a2, sigma_d2;
  if (variant.kind == PwbKind::Oracle) {
    if (!variant.oracle_sigma_a2 || !variant.oracle_sigma_d2)
      throw Error("oracle variant requires both component variance matrices");
    sigma_a2 = *variant.oracle_sigma_a2;
    sigma_d2 = *variant.oracle_sigma_d2;
    s.ind_a = VectorXd::Ones(k);
    s.ind_d = VectorXd::Ones(k);
  } else {
    sigma_a2 = est.sigma_a2;
    sigma_d2 = est.sigma_d2;
    s.ind_a.resize(k);
    s.ind_d.resize(k);
    // Threshold the pre-clipping diagonals: eigenvalue clipping exists only
    // to make the matrix square root well defined, and on near-zero matrices
    // it biases every diagonal upward, which would fire the indicators
    // spuriously in the vanishing regimes.
    for (int i = 0; i < k; ++i) {
      s.ind_a(i) = est.raw_a(i, i) >= s.mu_a(i) ? 1.0 : 0.0;
      s.ind_d(i) = est.raw_d(i, i) >= s.mu_d(i) ? 1.0 : 0.0;
    }
  }

  MatrixXd gram_a =
      proj.a_dd.transpose() * engine.kernel_matrix * proj.a_dd / n;
  MatrixXd gram_d = proj.d_dd.transpose() * serial_covariance(q, t) *
                    proj.d_dd / t;

  if (s.ind_a.maxCoeff() > 0.0 && gram_a.cwiseAbs().maxCoeff() == 0.0)
    throw SingularGram("unit-dimension Gram is zero with an active indicator");
  if (s.ind_d.maxCoeff() > 0.0 && gram_d.cwiseAbs().maxCoeff() == 0.0)
    throw SingularGram("time-dimension Gram is zero with an active indicator");

  s.theta_a = s.ind_a.asDiagonal() * psd_sqrt(sigma_a2) * psd_inv_sqrt(gram_a);
  s.theta_d = s.ind_d.asDiagonal() * psd_sqrt(sigma_d2) * psd_inv_sqrt(gram_d);
  return s;
}

VectorXd bootstrap_draw(const ScoreProjection& proj,
                        const ScalingState& scaling,
                        const SpatialMultiplierEngine& engine, double q,
                        const MatrixXd& xtx, RngKey key) {
  VectorXd sum = raw_score_sum(proj, scaling, engine, q, key);
  return xtx.ldlt().solve(sum);
}

DiagnosticPass run_diagnostic_pass(const ScoreProjection& proj,
                                   const VarianceEstimates& est,
                                   const SpatialMultiplierEngine& engine,
                                   double q, int b, double kappa, RngKey key) {
  const int k = proj.n_regressors;
  PwbVariant v_variant{PwbKind::V, std::nullopt, std::nullopt, kappa};
  ScalingState scaling = compute_scaling(proj, est, engine, q, v_variant);

  RngKey pass = key.child(kDiagPass);
  MatrixXd raw(b, k);
  for (int i = 0; i < b; ++i)
    raw.row(i) =
        raw_score_sum(proj, scaling, engine, q, pass.child(i)).transpose();

  DiagnosticPass diag;
  diag.t_star = standardize_columns(raw);
  diag.ks_pvalues.resize(k);
  diag.d_star.resize(k);
  for (int i = 0; i < k; ++i) {
    KsResult ks = ks_diagnostic(raw.col(i), kappa);
    diag.ks_pvalues(i) = ks.p_value;
    diag.d_star(i) = ks.d_star;
  }
  return diag;
}

BootstrapResult run_pwb(const OlsFit& fit, const ScoreProjection& proj,
                        const VarianceEstimates& est,
                        const SpatialMultiplierEngine& engine, double q,
                        const PwbVariant& variant, int b, double alpha,
                        const VectorXd& rho, const VectorXd& beta0, RngKey key,
                        const DiagnosticPass* diag) {
  const int k = proj.n_regressors;
  if (b < 2) throw Error("need at least two bootstrap draws");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0, 1)");
  if (b * alpha < 2.0) throw Error("B too small for the requested level");
  if (std::abs(rho.norm() - 1.0) > 1e-8)
    throw Error("rho must be a unit vector");

  BootstrapResult res;
  res.variant = variant;
  double kappa = variant.kappa > 0.0 ? variant.kappa : 1.0 / b;
  res.variant.kappa = kappa;

  DiagnosticPass local_diag;
  if (variant.kind == PwbKind::H) {
    if (diag) {
      local_diag = *diag;
    } else {
      local_diag = run_diagnostic_pass(proj, est, engine, q, b, kappa, key);
    }
    res.scaling =
        compute_scaling(proj, est, engine, q, variant, &local_diag.d_star);
  } else {
    res.scaling = compute_scaling(proj, est, engine, q, variant);
  }

  Eigen::LDLT<MatrixXd> xtx_solver(fit.xtx);
  RngKey pass = key.child(kFinalPass);
  MatrixXd raw(b, k);
  res.draws.resize(b, k);
  for (int i = 0; i < b; ++i) {
    VectorXd sum = raw_score_sum(proj, res.scaling, engine, q, pass.child(i));
    raw.row(i) = sum.transpose();
    res.draws.row(i) = xtx_solver.solve(sum).transpose();
  }
  res.t_star = standardize_columns(raw);

  if (variant.kind == PwbKind::H) {
    res.ks_pvalues = local_diag.ks_pvalues;
    res.d_star = local_diag.d_star;
  } else {
    res.ks_pvalues.resize(k);
    res.d_star.resize(k);
    for (int i = 0; i < k; ++i) {
      KsResult ks = ks_diagnostic(raw.col(i), kappa);
      res.ks_pvalues(i) = ks.p_value;
      res.d_star(i) = ks.d_star;
    }
  }

  // Equal-tail order-statistic quantiles of rho'(beta* - beta_hat).
  std::vector<double> stat(b);
  VectorXd proj_draws = res.draws * rho;
  for (int i = 0; i < b; ++i) stat[i] = proj_draws(i);
  res.q_lower = order_quantile(stat, alpha / 2.0);
  res.q_upper = order_quantile(stat, 1.0 - alpha / 2.0);
  res.rho_stat = rho.dot(fit.beta_hat - beta0);
  res.reject = res.rho_stat < res.q_lower || res.rho_stat > res.q_upper;

  res.ci_lower.resize(k);
  res.ci_upper.resize(k);
  for (int i = 0; i < k; ++i) {
    std::vector<double> col(res.draws.col(i).data(),
                            res.draws.col(i).data() + b);
    double lo = order_quantile(col, alpha / 2.0);
    double hi = order_quantile(col, 1.0 - alpha / 2.0);
    res.ci_lower(i) = fit.beta_hat(i) - hi;
    res.ci_upper(i) = fit.beta_hat(i) - lo;
  }
  return res;
}

}  // namespace pwb
