#include "pwb/variance.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pwb/errors.hpp"

namespace pwb {

MatrixXd evc(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd estimate_sigma_a(const ScoreProjection& proj,
                          const SpatialMultiplierEngine& engine) {
  const int n = proj.n_units, t = proj.n_periods, k = proj.n_regressors;
  const MatrixXd& ker = engine.kernel_matrix;

  MatrixXd term1 = proj.a_dd.transpose() * ker * proj.a_dd / n;

  MatrixXd term2 = MatrixXd::Zero(k, k);
  std::vector<MatrixXd> kw(k);
  for (int a = 0; a < k; ++a) kw[a] = ker * proj.w_dd[a];
  double scale = 1.0 / (static_cast<double>(n) * t * t);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b <= a; ++b) {
      double v = (kw[a].array() * proj.w_dd[b].array()).sum() * scale;
      term2(a, b) = v;
      term2(b, a) = v;
    }
  return evc(term1 - term2);
}

MatrixXd estimate_sigma_d(const ScoreProjection& proj, double q) {
  const int n = proj.n_units, t = proj.n_periods, k = proj.n_regressors;
  MatrixXd lag = serial_covariance(q, t);

  MatrixXd term1 = proj.d_dd.transpose() * lag * proj.d_dd / t;

  MatrixXd term2 = MatrixXd::Zero(k, k);
  std::vector<MatrixXd> wq(k);
  for (int a = 0; a < k; ++a) wq[a] = proj.w_dd[a] * lag;
  double scale = 1.0 / (static_cast<double>(n) * n * t);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b <= a; ++b) {
      double v = (wq[a].array() * proj.w_dd[b].array()).sum() * scale;
      term2(a, b) = v;
      term2(b, a) = v;
    }
  return evc(term1 - term2);
}

MatrixXd estimate_sigma_w(const ScoreProjection& proj,
                          const SpatialMultiplierEngine& engine, double q) {
  const int n = proj.n_units, t = proj.n_periods, k = proj.n_regressors;
  MatrixXd serial_root = serial_covariance_root(q, t);

  // m_k = R_spatial * w_k * R_serial; sigma[a][b] = <m_a, m_b> / NT.
  std::vector<MatrixXd> m(k);
  for (int a = 0; a < k; ++a)
    m[a] = engine.kernel_root * proj.w_dd[a] * serial_root;

  MatrixXd sigma = MatrixXd::Zero(k, k);
  double scale = 1.0 / (static_cast<double>(n) * t);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b <= a; ++b) {
      double v = (m[a].array() * m[b].array()).sum() * scale;
      sigma(a, b) = v;
      sigma(b, a) = v;
    }
  return sigma;
}

VarianceEstimates estimate_variances(const ScoreProjection& proj,
                                     const SpatialMultiplierEngine& engine,
                                     double q) {
  VarianceEstimates est;
  est.q = q;
  est.bandwidth = engine.bandwidth;

  const int n = proj.n_units, t = proj.n_periods, k = proj.n_regressors;
  const MatrixXd& ker = engine.kernel_matrix;
  MatrixXd lag = serial_covariance(q, t);

  est.raw_a = proj.a_dd.transpose() * ker * proj.a_dd / n;
  est.raw_d = proj.d_dd.transpose() * lag * proj.d_dd / t;
  {
    std::vector<MatrixXd> kw(k), wq(k);
    for (int a = 0; a < k; ++a) {
      kw[a] = ker * proj.w_dd[a];
      wq[a] = proj.w_dd[a] * lag;
    }
    double sa = 1.0 / (static_cast<double>(n) * t * t);
    double sd = 1.0 / (static_cast<double>(n) * n * t);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b <= a; ++b) {
        double va = (kw[a].array() * proj.w_dd[b].array()).sum() * sa;
        est.raw_a(a, b) -= va;
        if (b != a) est.raw_a(b, a) -= va;
        double vd = (wq[a].array() * proj.w_dd[b].array()).sum() * sd;
        est.raw_d(a, b) -= vd;
        if (b != a) est.raw_d(b, a) -= vd;
      }
  }
  est.sigma_a2 = evc(est.raw_a);
  est.sigma_d2 = evc(est.raw_d);
  est.sigma_w2 = estimate_sigma_w(proj, engine, q);
  return est;
}

CrveResult crve(const OlsFit& fit, const VarianceEstimates& est) {
  const double n = fit.n_units, t = fit.n_periods;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fit.q_hat_matrix);
  const VectorXd& ev = es.eigenvalues();
  double lmax = ev.cwiseAbs().maxCoeff();
  if (lmax <= 0.0 || ev.minCoeff() < kSingularityTol * lmax)
    throw SingularDesign("Q-hat is numerically singular");
  MatrixXd qinv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();

  CrveResult r;
  MatrixXd core =
      est.sigma_a2 / n + est.sigma_d2 / t + est.sigma_w2 / (n * t);
  r.v_hat = qinv * core * qinv;
  r.standard_errors = r.v_hat.diagonal().cwiseMax(0.0).cwiseSqrt();
  return r;
}

double feasible_rate(const VarianceEstimates& est, int n, int t,
                     int coordinate) {
  double sa = std::sqrt(std::max(0.0, est.sigma_a2(coordinate, coordinate)));
  double sd = std::sqrt(std::max(0.0, est.sigma_d2(coordinate, coordinate)));
  double r = std::sqrt(static_cast<double>(n) * t);
  if (sa > 0.0) r = std::min(r, std::sqrt(static_cast<double>(n)) / sa);
  if (sd > 0.0) r = std::min(r, std::sqrt(static_cast<double>(t)) / sd);
  return r;
}

}  // namespace pwb
