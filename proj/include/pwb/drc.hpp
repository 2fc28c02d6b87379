#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pwb/variance.hpp"

namespace pwb {

// The two non-Gaussian regimes are reported as a single label; they are not
// separable from the data.
enum class RegimeLabel { D, VandG, IandG, NonGaussian };

std::string to_string(RegimeLabel label);

struct RegimeCoordinate {
  int d_star = 0;  // KS non-Gaussianity flag
  int d_D = 0;     // divergence-threshold indicator
  int d_V = 0;     // vanishing-threshold indicator
  RegimeLabel label = RegimeLabel::VandG;
  double t_sigma_a2 = 0.0;  // T * sigma_a2[kk]
  double n_sigma_d2 = 0.0;  // N * sigma_d2[kk]
};

struct RegimeReport {
  std::vector<RegimeCoordinate> coordinates;
};

RegimeReport classify(const VarianceEstimates& est, const VectorXd& d_star,
                      int n, int t);

}  // namespace pwb
