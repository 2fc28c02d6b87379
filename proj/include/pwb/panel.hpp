#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace pwb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Balanced N x T panel: scalar outcome, K regressors per cell, plane
// locations for the unit dimension. Regressors and scores are stored
// coordinate-major (one N x T matrix per k) since row/column aggregation
// dominates downstream.
struct PanelData {
  int n_units = 0;
  int n_periods = 0;
  int n_regressors = 0;
  MatrixXd y;                  // N x T
  std::vector<MatrixXd> x;     // K matrices, each N x T
  MatrixXd locations;          // N x 2
  std::optional<MatrixXd> distance;  // N x N override of Euclidean distances

  // Effective distance matrix: the override when present, else Euclidean.
  MatrixXd distances() const;

  void validate() const;  // throws ParseError on dimension/invariant violations
};

struct OlsFit {
  VectorXd beta_hat;           // K
  MatrixXd residuals;          // N x T
  std::vector<MatrixXd> scores;  // K matrices N x T, scores[k](i,t) = x_k(i,t) * u(i,t)
  MatrixXd q_hat_matrix;       // K x K, (1/NT) X'X
  MatrixXd xtx;                // K x K, X'X
  int n_units = 0;
  int n_periods = 0;
  int n_regressors = 0;
};

// Four-way projection of the empirical scores onto unit, period, and
// interaction components plus the grand mean.
struct ScoreProjection {
  MatrixXd a_dd;               // N x K
  MatrixXd d_dd;               // T x K
  std::vector<MatrixXd> w_dd;  // K matrices N x T
  VectorXd s_bar;              // K
  int n_units = 0;
  int n_periods = 0;
  int n_regressors = 0;

  // Reassembled score s_it = a_i + d_t + w_it + s_bar.
  MatrixXd reconstruct(int k) const;
};

// Relative eigenvalue cutoff below which X'X is treated as singular.
inline constexpr double kSingularityTol = 1e-12;

OlsFit ols_fit(const PanelData& panel, double singularity_tol = kSingularityTol);

ScoreProjection project_scores(const OlsFit& fit);

// Projection of an arbitrary score array (test/diagnostic entry point).
ScoreProjection project_score_array(const std::vector<MatrixXd>& scores);

MatrixXd euclidean_distances(const MatrixXd& locations);

}  // namespace pwb
