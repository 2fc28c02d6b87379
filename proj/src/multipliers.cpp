#include "pwb/multipliers.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "pwb/errors.hpp"

namespace pwb {

double wendland_c2(double u) {
  double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  double b = 1.0 - a;
  double b2 = b * b;
  return b2 * b2 * (4.0 * a + 1.0);
}

double default_bandwidth(int n_units) {
  double v = std::floor(std::pow(static_cast<double>(n_units), 0.125));
  return v < 1.0 ? 1.0 : v;
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

MatrixXd psd_inv_sqrt(const MatrixXd& m, double ridge) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  VectorXd ev = es.eigenvalues();
  double lmax = ev.maxCoeff();
  double cut = ridge * (lmax > 0.0 ? lmax : 1.0);
  VectorXd inv = VectorXd::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > cut) inv(i) = 1.0 / std::sqrt(ev(i));
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

SpatialMultiplierEngine build_spatial_engine(const MatrixXd& distances,
                                             double bandwidth) {
  const int n = static_cast<int>(distances.rows());
  SpatialMultiplierEngine engine;
  engine.bandwidth = bandwidth;
  engine.kernel_matrix.resize(n, n);
  for (int i = 0; i < n; ++i) {
    engine.kernel_matrix(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      double v = wendland_c2(distances(i, j) / bandwidth);
      engine.kernel_matrix(i, j) = v;
      engine.kernel_matrix(j, i) = v;
    }
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(engine.kernel_matrix);
  VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-6)
    throw NotPositiveSemiDefinite(
        "kernel over the supplied distances is not positive semi-definite");
  ev = ev.cwiseMax(0.0);
  engine.kernel_root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                       es.eigenvectors().transpose();
  return engine;
}

VectorXd draw_spatial(const SpatialMultiplierEngine& engine, RngKey key) {
  RngStream rng(key);
  const int n = engine.n_units();
  VectorXd base(n);
  for (int i = 0; i < n; ++i) base(i) = rng.rademacher();
  return engine.kernel_root * base;
}

VectorXd draw_serial(const SerialMultiplierSpec& spec, RngKey key) {
  RngStream rng(key);
  VectorXd eta(spec.length);
  double keep_prob = 0.5 * (1.0 + spec.q);
  double cur = rng.rademacher();
  eta(0) = cur;
  for (int t = 1; t < spec.length; ++t) {
    if (rng.uniform() >= keep_prob) cur = -cur;
    eta(t) = cur;
  }
  return eta;
}

double select_q(const MatrixXd& scores_t, int n_periods) {
  const int t = n_periods;
  const int k = static_cast<int>(scores_t.cols());
  if (t < 3) throw DegenerateAutocorrelation("need at least three periods");

  double num = 0.0, den = 0.0;
  bool any_valid = false;
  for (int a = 0; a < k; ++a) {
    double sxy = 0.0, sxx = 0.0;
    for (int s = 1; s < t; ++s) {
      sxy += scores_t(s, a) * scores_t(s - 1, a);
      sxx += scores_t(s - 1, a) * scores_t(s - 1, a);
    }
    if (sxx <= 0.0) continue;  // constant-zero series carries no information
    any_valid = true;
    double rho = sxy / sxx;
    if (std::abs(rho) >= 1.0 - 1e-8)
      throw DegenerateAutocorrelation("near-unit-root score series");
    double d4 = std::pow(1.0 - rho, 4);
    num += rho * rho / d4;
    double c = 1.0 - rho * rho;
    den += c * c / d4;
  }
  if (!any_valid) throw DegenerateAutocorrelation("all score series constant");
  if (num <= 0.0 || den <= 0.0) return 0.0;
  double omega = num / den;
  double q = std::exp(-std::pow(omega, -1.0 / 3.0) *
                      std::pow(static_cast<double>(t), -1.0 / 3.0));
  if (q < 0.0) q = 0.0;
  if (q > 1.0 - 1e-8) q = 1.0 - 1e-8;
  return q;
}

MatrixXd serial_covariance(double q, int t) {
  MatrixXd m(t, t);
  // powers by diagonal: q^|t - tau|
  std::vector<double> pw(t);
  pw[0] = 1.0;
  for (int h = 1; h < t; ++h) pw[h] = pw[h - 1] * q;
  for (int a = 0; a < t; ++a)
    for (int b = 0; b < t; ++b) m(a, b) = pw[std::abs(a - b)];
  return m;
}

MatrixXd serial_covariance_root(double q, int t) {
  return psd_sqrt(serial_covariance(q, t));
}

}  // namespace pwb
