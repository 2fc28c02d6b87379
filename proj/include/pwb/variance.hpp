#pragma once

#include <Eigen/Dense>

#include "pwb/multipliers.hpp"
#include "pwb/panel.hpp"

namespace pwb {

struct VarianceEstimates {
  MatrixXd sigma_a2;  // K x K, PSD after clipping
  MatrixXd sigma_d2;  // K x K, PSD after clipping
  MatrixXd sigma_w2;  // K x K, PSD by construction
  MatrixXd raw_a;     // pre-clipping value of the a estimator
  MatrixXd raw_d;
  double q = 0.0;
  double bandwidth = 1.0;
};

struct CrveResult {
  MatrixXd v_hat;            // K x K
  VectorXd standard_errors;  // K
};

// Eigenvalue clipping: project a symmetric matrix onto the PSD cone.
MatrixXd evc(const MatrixXd& m);

MatrixXd estimate_sigma_a(const ScoreProjection& proj,
                          const SpatialMultiplierEngine& engine);

MatrixXd estimate_sigma_d(const ScoreProjection& proj, double q);

// Kernel- and lag-weighted interaction variance, computed as a Gram sandwich
// in the two multiplier covariance roots so the result is PSD exactly.
MatrixXd estimate_sigma_w(const ScoreProjection& proj,
                          const SpatialMultiplierEngine& engine, double q);

VarianceEstimates estimate_variances(const ScoreProjection& proj,
                                     const SpatialMultiplierEngine& engine,
                                     double q);

CrveResult crve(const OlsFit& fit, const VarianceEstimates& est);

// min{ sqrt(N)/sigma_a, sqrt(T)/sigma_d, sqrt(NT) } on the chosen coordinate;
// vanishing components drop out of the min.
double feasible_rate(const VarianceEstimates& est, int n, int t,
                     int coordinate = 0);

}  // namespace pwb
