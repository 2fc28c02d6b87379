#include "pwb/panel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pwb/errors.hpp"

namespace pwb {

MatrixXd PanelData::distances() const {
  if (distance) return *distance;
  return euclidean_distances(locations);
}

void PanelData::validate() const {
  if (n_units <= 0 || n_periods <= 0 || n_regressors <= 0)
    throw ParseError("panel dimensions must be strictly positive");
  if (y.rows() != n_units || y.cols() != n_periods)
    throw ParseError("outcome matrix does not match panel dimensions");
  if (static_cast<int>(x.size()) != n_regressors)
    throw ParseError("regressor count does not match panel dimensions");
  for (const auto& xk : x)
    if (xk.rows() != n_units || xk.cols() != n_periods)
      throw ParseError("regressor matrix does not match panel dimensions");
  if (locations.rows() != n_units || locations.cols() != 2)
    throw ParseError("locations must be N x 2");
  if (distance) {
    const MatrixXd& d = *distance;
    if (d.rows() != n_units || d.cols() != n_units)
      throw ParseError("distance matrix must be N x N");
    for (int i = 0; i < n_units; ++i) {
      if (d(i, i) != 0.0) throw ParseError("distance matrix must have zero diagonal");
      for (int j = 0; j < i; ++j) {
        if (d(i, j) < 0.0) throw ParseError("distances must be nonnegative");
        if (d(i, j) != d(j, i)) throw ParseError("distance matrix must be symmetric");
      }
    }
  }
}

MatrixXd ScoreProjection::reconstruct(int k) const {
  MatrixXd s = w_dd[k];
  s.colwise() += a_dd.col(k);
  s.rowwise() += d_dd.col(k).transpose();
  s.array() += s_bar(k);
  return s;
}

OlsFit ols_fit(const PanelData& panel, double singularity_tol) {
  panel.validate();
  const int n = panel.n_units, t = panel.n_periods, k = panel.n_regressors;
  const double nt = static_cast<double>(n) * t;

  MatrixXd xtx = MatrixXd::Zero(k, k);
  VectorXd xty = VectorXd::Zero(k);
  for (int a = 0; a < k; ++a) {
    xty(a) = (panel.x[a].array() * panel.y.array()).sum();
    for (int b = 0; b <= a; ++b) {
      double v = (panel.x[a].array() * panel.x[b].array()).sum();
      xtx(a, b) = v;
      xtx(b, a) = v;
    }
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(xtx);
  const VectorXd& ev = es.eigenvalues();
  double lmax = ev.cwiseAbs().maxCoeff();
  if (lmax <= 0.0 || ev.minCoeff() < singularity_tol * lmax)
    throw SingularDesign("X'X is numerically singular");

  OlsFit fit;
  fit.n_units = n;
  fit.n_periods = t;
  fit.n_regressors = k;
  fit.xtx = xtx;
  fit.q_hat_matrix = xtx / nt;
  fit.beta_hat = es.eigenvectors() *
                 ev.cwiseInverse().asDiagonal() *
                 (es.eigenvectors().transpose() * xty);

  fit.residuals = panel.y;
  for (int a = 0; a < k; ++a) fit.residuals -= fit.beta_hat(a) * panel.x[a];

  fit.scores.reserve(k);
  for (int a = 0; a < k; ++a)
    fit.scores.push_back(panel.x[a].cwiseProduct(fit.residuals));
  return fit;
}

ScoreProjection project_score_array(const std::vector<MatrixXd>& scores) {
  const int k = static_cast<int>(scores.size());
  const int n = static_cast<int>(scores[0].rows());
  const int t = static_cast<int>(scores[0].cols());

  ScoreProjection p;
  p.n_units = n;
  p.n_periods = t;
  p.n_regressors = k;
  p.a_dd.resize(n, k);
  p.d_dd.resize(t, k);
  p.s_bar.resize(k);
  p.w_dd.reserve(k);

  for (int a = 0; a < k; ++a) {
    const MatrixXd& s = scores[a];
    double grand = s.mean();
    VectorXd row_means = s.rowwise().mean();       // N
    VectorXd col_means = s.colwise().mean();       // T
    p.s_bar(a) = grand;
    p.a_dd.col(a) = row_means.array() - grand;
    p.d_dd.col(a) = col_means.array() - grand;
    MatrixXd w = s;
    w.colwise() -= row_means;
    w.rowwise() -= col_means.transpose();
    w.array() += grand;
    p.w_dd.push_back(std::move(w));
  }
  return p;
}

ScoreProjection project_scores(const OlsFit& fit) {
  return project_score_array(fit.scores);
}

MatrixXd euclidean_distances(const MatrixXd& locations) {
  const int n = static_cast<int>(locations.rows());
  MatrixXd d = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      double v = (locations.row(i) - locations.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

}  // namespace pwb
