#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pwb/bootstrap.hpp"
#include "pwb/dgp.hpp"
#include "pwb/drc.hpp"
#include "pwb/panel.hpp"

namespace pwb {

enum class Method { PwbD, PwbV, PwbH, Oracle, CrveWald };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

// Fitted state shared by every downstream consumer: OLS, projection, spatial
// engine, serial parameter, variance estimates.
struct PipelineState {
  OlsFit fit;
  ScoreProjection proj;
  SpatialMultiplierEngine engine;
  double q = 0.0;
  VarianceEstimates est;
};

PipelineState run_pipeline(const PanelData& panel,
                           std::optional<double> bandwidth = std::nullopt,
                           std::optional<double> q_override = std::nullopt);

struct InferenceOptions {
  Method method = Method::PwbH;
  VectorXd rho;    // empty: unit vector on the last coordinate
  VectorXd beta0;  // empty: zeros
  double alpha = 0.05;
  int b = 999;
  std::uint64_t seed = 1;
  std::optional<double> bandwidth;
  std::optional<double> q;
  std::optional<MatrixXd> oracle_sigma_a2;
  std::optional<MatrixXd> oracle_sigma_d2;
};

// Full pipeline on user data; JSON report with estimates, intervals, test
// decision, variance components, and regime labels.
nlohmann::json run_inference(const PanelData& panel,
                             const InferenceOptions& options);

struct ExperimentConfig {
  std::vector<Design> designs{Design::D1};
  std::vector<std::pair<int, int>> grid{{50, 50}};  // (N, T)
  int k = 5;
  int b = 999;
  int replications = 1000;
  double alpha = 0.05;
  std::vector<Method> methods{Method::PwbH};
  std::uint64_t seed = 1;
  double rho_ar1 = 0.5;
  double m = 5.0;
  double rho_d = 0.10;
  double sigma_z2 = 1.0;
  double nonsep_sigma = 1.0;
  double het_coef = 0.5;
  std::optional<double> bandwidth;
};

struct ResultRow {
  Design design = Design::D1;
  int n = 0, t = 0;
  Method method = Method::PwbH;
  int reps = 0;
  int b = 0;
  double alpha = 0.05;
  double reject_freq = 0.0;
  double mc_se = 0.0;
  double drc_accuracy = 0.0;
  double mean_ci_len = 0.0;
  int failures = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Monte Carlo grid: independent panels per replicate, H0: beta_K = 1 tested
// on the last coordinate, rejection frequencies and classifier accuracy.
// Deterministic given the seed. Aborts if more than 1% of replicates fail.
ResultTable run_experiment(const ExperimentConfig& config);

// Fraction of labels matching the design's population regime; either
// non-Gaussian label counts as correct for the two non-Gaussian designs.
// Designs without a defined population regime return NaN.
double classification_accuracy(const std::vector<RegimeLabel>& labels,
                               Design true_design);

double normal_quantile(double p);

}  // namespace pwb
