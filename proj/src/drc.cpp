#include "pwb/drc.hpp"

#include <cmath>

namespace pwb {

std::string to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::D: return "D";
    case RegimeLabel::VandG: return "V&G";
    case RegimeLabel::IandG: return "I&G";
    case RegimeLabel::NonGaussian: return "NonGaussian";
  }
  return "?";
}

RegimeReport classify(const VarianceEstimates& est, const VectorXd& d_star,
                      int n, int t) {
  const int k = static_cast<int>(est.sigma_a2.rows());
  double log_t = std::log(static_cast<double>(t));
  double log_n = std::log(static_cast<double>(n));
  double mu_a_div = log_t / t, mu_d_div = log_n / n;
  double mu_a_van = 1.0 / (t * log_t), mu_d_van = 1.0 / (n * log_n);

  RegimeReport report;
  report.coordinates.resize(k);
  for (int i = 0; i < k; ++i) {
    RegimeCoordinate& c = report.coordinates[i];
    // Classify on the pre-clipping diagonals; see compute_scaling for why
    // the clipped values are unsuitable as magnitude statistics.
    double sa = est.raw_a(i, i);
    double sd = est.raw_d(i, i);
    c.t_sigma_a2 = t * sa;
    c.n_sigma_d2 = n * sd;
    c.d_star = d_star(i) > 0.5 ? 1 : 0;
    c.d_D = (sa >= mu_a_div || sd >= mu_d_div) ? 1 : 0;
    c.d_V = (sa >= mu_a_van || sd >= mu_d_van) ? 1 : 0;
    if (c.d_star == 1) {
      c.label = RegimeLabel::NonGaussian;
    } else if (c.d_D == 1) {
      c.label = RegimeLabel::D;
    } else if (c.d_V == 0) {
      c.label = RegimeLabel::VandG;
    } else {
      // Gaussian transition region, reported as I&G.
      c.label = RegimeLabel::IandG;
    }
  }
  return report;
}

}  // namespace pwb
