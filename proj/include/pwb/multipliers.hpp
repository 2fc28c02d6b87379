#pragma once

#include <Eigen/Dense>

#include "pwb/rng.hpp"

namespace pwb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Wendland C2 kernel (1-|u|)_+^4 (4|u|+1); compactly supported on [-1, 1].
double wendland_c2(double u);

// Default spatial bandwidth max(1, floor(N^{1/8})).
double default_bandwidth(int n_units);

// Spatially correlated multiplier generator: kernel matrix over unit
// distances and its symmetric PSD square root.
struct SpatialMultiplierEngine {
  MatrixXd kernel_matrix;  // N x N
  MatrixXd kernel_root;    // N x N, root * root = kernel_matrix
  double bandwidth = 1.0;

  int n_units() const { return static_cast<int>(kernel_matrix.rows()); }
};

// Eigenvalues in [-1e-10, 0) are clamped to zero before rooting; anything
// below -1e-6 rejects the kernel as NotPositiveSemiDefinite.
SpatialMultiplierEngine build_spatial_engine(const MatrixXd& distances,
                                             double bandwidth);

// eta = root * (i.i.d. Rademacher); Cov*(eta_i, eta_j) = kernel entry.
VectorXd draw_spatial(const SpatialMultiplierEngine& engine, RngKey key);

// Two-state Markov sign chain over T periods with Corr*(eta_t, eta_{t+h}) = q^h.
struct SerialMultiplierSpec {
  double q = 0.0;  // in [0, 1)
  int length = 0;
};

VectorXd draw_serial(const SerialMultiplierSpec& spec, RngKey key);

// Andrews-style plug-in rule for the serial parameter from the T x K matrix
// of cross-sectional average scores. Throws DegenerateAutocorrelation on
// near-unit-root or constant series; callers fall back to q = 0.
double select_q(const MatrixXd& scores_t, int n_periods);

// T x T Toeplitz matrix q^{|t - tau|} (serial multiplier covariance).
MatrixXd serial_covariance(double q, int t);

// Symmetric PSD square root of the serial covariance.
MatrixXd serial_covariance_root(double q, int t);

// Symmetric PSD square root via eigendecomposition, negatives clamped to 0.
MatrixXd psd_sqrt(const MatrixXd& m);

// Inverse of the symmetric square root with pseudo-inversion of eigenvalues
// below ridge * lambda_max.
MatrixXd psd_inv_sqrt(const MatrixXd& m, double ridge = 1e-10);

}  // namespace pwb
