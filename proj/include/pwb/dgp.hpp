#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "pwb/panel.hpp"
#include "pwb/rng.hpp"

namespace pwb {

enum class Design { D1, D2, D3, D4, D5, Hetero, Nonseparable, SpatialSweep };

std::string to_string(Design d);
Design design_from_string(const std::string& s);

struct DgpSpec {
  Design design = Design::D1;
  int n = 50;
  int t = 50;
  int k = 5;  // intercept + k-1 regressor channels
  double rho = 0.5;       // AR(1) coefficient of time effects
  double m = 5.0;         // spatial moving-average range
  double rho_d = 0.10;    // spatial decay
  double sigma_z2 = 1.0;  // innovation variance of the spatial field
  VectorXd beta;          // defaults to all ones
  double nonsep_sigma = 1.0;
  double het_coef = 0.5;

  void validate() const;
};

// First N points of the ceil(sqrt(N)) x ceil(sqrt(N)) unit grid, row-major.
MatrixXd lattice_locations(int n);

// Stationary AR(1) with unit variance: xi_1 ~ N(0,1),
// xi_t = rho xi_{t-1} + N(0, 1 - rho^2).
VectorXd ar1_effects(int t, double rho, RngKey key);

// Truncated geometrically weighted moving-average field over the locations.
VectorXd spatial_effects(const MatrixXd& locations, double m, double rho_d,
                         double sigma_z2, RngKey key);

// Local-to-zero loading shift used by the intermediate designs.
inline double drift_term(int n) {
  return std::pow(static_cast<double>(n), -0.25);
}

// Disturbance-channel latents, exposed for diagnostics and tests.
struct DgpLatents {
  VectorXd alpha_u;  // N
  VectorXd xi_u;     // T
  MatrixXd eps_u;    // N x T
};

std::pair<PanelData, VectorXd> generate(const DgpSpec& spec, RngKey key,
                                        DgpLatents* latents_out = nullptr);

// Population component variances (unit and time dimension) for the five core
// designs, for the oracle bootstrap. K x K diagonal matrices.
std::pair<MatrixXd, MatrixXd> oracle_component_variances(const DgpSpec& spec);

}  // namespace pwb
