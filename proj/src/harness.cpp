#include "pwb/harness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "pwb/errors.hpp"
#include "pwb/panel_io.hpp"

namespace pwb {

namespace {

nlohmann::json matrix_to_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_to_json(const VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

PwbVariant variant_for(Method method, const InferenceOptions* opt) {
  PwbVariant v;
  switch (method) {
    case Method::PwbD: v.kind = PwbKind::D; break;
    case Method::PwbV: v.kind = PwbKind::V; break;
    case Method::PwbH: v.kind = PwbKind::H; break;
    case Method::Oracle:
      v.kind = PwbKind::Oracle;
      if (opt) {
        v.oracle_sigma_a2 = opt->oracle_sigma_a2;
        v.oracle_sigma_d2 = opt->oracle_sigma_d2;
      }
      break;
    case Method::CrveWald:
      throw Error("CRVE-Wald is not a bootstrap variant");
  }
  return v;
}

// T x K matrix of cross-sectional average scores, for the serial plug-in.
MatrixXd average_scores_over_units(const OlsFit& fit) {
  MatrixXd avg(fit.n_periods, fit.n_regressors);
  for (int a = 0; a < fit.n_regressors; ++a)
    avg.col(a) = fit.scores[a].colwise().mean().transpose();
  return avg;
}

nlohmann::json regime_to_json(const RegimeReport& report) {
  nlohmann::json out = nlohmann::json::array();
  for (const RegimeCoordinate& c : report.coordinates) {
    out.push_back({{"label", to_string(c.label)},
                   {"d_star", c.d_star},
                   {"d_D", c.d_D},
                   {"d_V", c.d_V},
                   {"t_sigma_a2", c.t_sigma_a2},
                   {"n_sigma_d2", c.n_sigma_d2}});
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::PwbD: return "pwb-d";
    case Method::PwbV: return "pwb-v";
    case Method::PwbH: return "pwb-h";
    case Method::Oracle: return "oracle";
    case Method::CrveWald: return "crve";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "pwb-d") return Method::PwbD;
  if (s == "pwb-v") return Method::PwbV;
  if (s == "pwb-h") return Method::PwbH;
  if (s == "oracle") return Method::Oracle;
  if (s == "crve") return Method::CrveWald;
  throw Error("unknown method: " + s);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("quantile probability out of range");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (standard_normal_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

PipelineState run_pipeline(const PanelData& panel,
                           std::optional<double> bandwidth,
                           std::optional<double> q_override) {
  PipelineState st;
  st.fit = ols_fit(panel);
  st.proj = project_scores(st.fit);

  double bw = bandwidth.value_or(default_bandwidth(panel.n_units));
  st.engine = build_spatial_engine(panel.distances(), bw);

  if (q_override) {
    st.q = *q_override;
  } else {
    try {
      st.q = select_q(average_scores_over_units(st.fit), panel.n_periods);
    } catch (const DegenerateAutocorrelation&) {
      st.q = 0.0;
    }
  }
  st.est = estimate_variances(st.proj, st.engine, st.q);
  return st;
}

nlohmann::json run_inference(const PanelData& panel,
                             const InferenceOptions& options) {
  PipelineState st = run_pipeline(panel, options.bandwidth, options.q);
  const int k = panel.n_regressors;
  const int n = panel.n_units, t = panel.n_periods;

  VectorXd rho = options.rho;
  if (rho.size() == 0) {
    rho = VectorXd::Zero(k);
    rho(k - 1) = 1.0;
  }
  VectorXd beta0 =
      options.beta0.size() == k ? options.beta0 : VectorXd::Zero(k);

  CrveResult cr = crve(st.fit, st.est);
  RngKey key(options.seed);

  nlohmann::json report;
  report["method"] = to_string(options.method);
  report["n_units"] = n;
  report["n_periods"] = t;
  report["n_regressors"] = k;
  report["alpha"] = options.alpha;
  report["seed"] = options.seed;
  report["beta_hat"] = vector_to_json(st.fit.beta_hat);
  report["rho"] = vector_to_json(rho);
  report["beta0"] = vector_to_json(beta0);
  report["q"] = st.q;
  report["bandwidth"] = st.est.bandwidth;
  report["rate"] = feasible_rate(st.est, n, t);
  report["sigma_a2"] = matrix_to_json(st.est.sigma_a2);
  report["sigma_d2"] = matrix_to_json(st.est.sigma_d2);
  report["sigma_w2"] = matrix_to_json(st.est.sigma_w2);
  report["crve"] = {{"v_hat", matrix_to_json(cr.v_hat)},
                    {"standard_errors", vector_to_json(cr.standard_errors)}};

  if (options.method == Method::CrveWald) {
    double se = std::sqrt(std::max(0.0, rho.dot(cr.v_hat * rho)));
    double stat = rho.dot(st.fit.beta_hat - beta0);
    double z = se > 0.0 ? stat / se : (stat == 0.0 ? 0.0 : INFINITY);
    double crit = normal_quantile(1.0 - options.alpha / 2.0);
    report["b"] = 0;
    report["reject"] = std::abs(z) > crit;
    report["wald_statistic"] = z;
    report["ci"] = {{"lower", vector_to_json(st.fit.beta_hat.array() -
                                             crit * cr.standard_errors.array())},
                    {"upper", vector_to_json(st.fit.beta_hat.array() +
                                             crit * cr.standard_errors.array())}};
    DiagnosticPass diag = run_diagnostic_pass(st.proj, st.est, st.engine, st.q,
                                              options.b, 1.0 / options.b, key);
    report["regime"] = regime_to_json(classify(st.est, diag.d_star, n, t));
    return report;
  }

  PwbVariant variant = variant_for(options.method, &options);
  BootstrapResult boot =
      run_pwb(st.fit, st.proj, st.est, st.engine, st.q, variant, options.b,
              options.alpha, rho, beta0, key);

  report["b"] = options.b;
  report["reject"] = boot.reject;
  report["rho_stat"] = boot.rho_stat;
  report["ci"] = {{"lower", vector_to_json(boot.ci_lower)},
                  {"upper", vector_to_json(boot.ci_upper)}};
  report["ks_pvalues"] = vector_to_json(boot.ks_pvalues);
  report["d_star"] = vector_to_json(boot.d_star);
  report["draws_summary"] = {{"q_lower", boot.q_lower},
                             {"q_upper", boot.q_upper},
                             {"mean", boot.draws.colwise().mean()(
                                          boot.draws.cols() - 1)}};
  report["regime"] =
      regime_to_json(classify(st.est, boot.d_star, n, t));
  return report;
}

double classification_accuracy(const std::vector<RegimeLabel>& labels,
                               Design true_design) {
  RegimeLabel truth;
  switch (true_design) {
    case Design::D1: truth = RegimeLabel::D; break;
    case Design::D2: truth = RegimeLabel::NonGaussian; break;
    case Design::D3: truth = RegimeLabel::VandG; break;
    case Design::D4: truth = RegimeLabel::NonGaussian; break;
    case Design::D5: truth = RegimeLabel::IandG; break;
    default: return std::nan("");
  }
  if (labels.empty()) return std::nan("");
  int correct = 0;
  for (RegimeLabel l : labels)
    if (l == truth) ++correct;
  return static_cast<double>(correct) / labels.size();
}

ResultTable run_experiment(const ExperimentConfig& config) {
  if (config.replications < 1) throw Error("replications must be >= 1");
  if (config.b * config.alpha < 2.0) throw Error("B too small for alpha");

  ResultTable table;
  const double crit = normal_quantile(1.0 - config.alpha / 2.0);

  for (Design design : config.designs) {
    for (auto [n, t] : config.grid) {
      DgpSpec spec;
      spec.design = design;
      spec.n = n;
      spec.t = t;
      spec.k = config.k;
      spec.rho = config.rho_ar1;
      spec.m = config.m;
      spec.rho_d = config.rho_d;
      spec.sigma_z2 = config.sigma_z2;
      spec.nonsep_sigma = config.nonsep_sigma;
      spec.het_coef = config.het_coef;

      std::optional<MatrixXd> oracle_a, oracle_d;
      for (Method m : config.methods)
        if (m == Method::Oracle) {
          auto [sa, sd] = oracle_component_variances(spec);
          oracle_a = sa;
          oracle_d = sd;
        }

      const int k = config.k;
      VectorXd rho_vec = VectorXd::Zero(k);
      rho_vec(k - 1) = 1.0;
      const VectorXd beta0 = VectorXd::Ones(k);

      std::vector<int> rejects(config.methods.size(), 0);
      std::vector<double> ci_len(config.methods.size(), 0.0);
      std::vector<int> done(config.methods.size(), 0);
      std::vector<RegimeLabel> labels;
      int failures = 0;

      RngKey cell_key = RngKey(config.seed)
                            .child(static_cast<std::uint64_t>(design))
                            .child(static_cast<std::uint64_t>(n))
                            .child(static_cast<std::uint64_t>(t));

      for (int rep = 0; rep < config.replications; ++rep) {
        RngKey rep_key = cell_key.child(rep);
        try {
          auto [panel, beta_true] = generate(spec, rep_key.child(0));
          PipelineState st = run_pipeline(panel, config.bandwidth);
          RngKey boot_key = rep_key.child(1);

          DiagnosticPass diag =
              run_diagnostic_pass(st.proj, st.est, st.engine, st.q, config.b,
                                  1.0 / config.b, boot_key);
          labels.push_back(
              classify(st.est, diag.d_star, n, t).coordinates[k - 1].label);

          for (size_t mi = 0; mi < config.methods.size(); ++mi) {
            Method method = config.methods[mi];
            if (method == Method::CrveWald) {
              CrveResult cr = crve(st.fit, st.est);
              double se = std::sqrt(std::max(0.0, rho_vec.dot(cr.v_hat * rho_vec)));
              double stat = rho_vec.dot(st.fit.beta_hat - beta0);
              bool rej = se > 0.0 ? std::abs(stat / se) > crit : stat != 0.0;
              rejects[mi] += rej ? 1 : 0;
              ci_len[mi] += 2.0 * crit * se;
              ++done[mi];
              continue;
            }
            PwbVariant variant = variant_for(method, nullptr);
            if (method == Method::Oracle) {
              variant.oracle_sigma_a2 = oracle_a;
              variant.oracle_sigma_d2 = oracle_d;
            }
            BootstrapResult boot = run_pwb(
                st.fit, st.proj, st.est, st.engine, st.q, variant, config.b,
                config.alpha, rho_vec, beta0, boot_key,
                method == Method::PwbH ? &diag : nullptr);
            rejects[mi] += boot.reject ? 1 : 0;
            ci_len[mi] += boot.q_upper - boot.q_lower;
            ++done[mi];
          }
        } catch (const Error&) {
          ++failures;
          if (failures > config.replications / 100)
            throw Error("more than 1% of replicates failed for design " +
                        to_string(design));
        }
      }

      double accuracy = classification_accuracy(labels, design);
      for (size_t mi = 0; mi < config.methods.size(); ++mi) {
        ResultRow row;
        row.design = design;
        row.n = n;
        row.t = t;
        row.method = config.methods[mi];
        row.reps = done[mi];
        row.b = config.b;
        row.alpha = config.alpha;
        double p = done[mi] > 0 ? static_cast<double>(rejects[mi]) / done[mi] : 0.0;
        row.reject_freq = p;
        row.mc_se = done[mi] > 0 ? std::sqrt(p * (1.0 - p) / done[mi]) : 0.0;
        row.drc_accuracy = accuracy;
        row.mean_ci_len = done[mi] > 0 ? ci_len[mi] / done[mi] : 0.0;
        row.failures = failures;
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  out << "design,n,t,method,reps,b,alpha,reject_freq,mc_se,drc_accuracy,"
         "mean_ci_len,failures\n";
  char buf[160];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%s,%d,%d,%.4f,%.6f,%.6f,%.6f,%.6f,%d\n",
                  to_string(r.design).c_str(), r.n, r.t,
                  to_string(r.method).c_str(), r.reps, r.b, r.alpha,
                  r.reject_freq, r.mc_se, r.drc_accuracy, r.mean_ci_len,
                  r.failures);
    out << buf;
  }
  return out.str();
}

nlohmann::json ResultTable::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    out.push_back({{"design", to_string(r.design)},
                   {"n", r.n},
                   {"t", r.t},
                   {"method", to_string(r.method)},
                   {"reps", r.reps},
                   {"b", r.b},
                   {"alpha", r.alpha},
                   {"reject_freq", r.reject_freq},
                   {"mc_se", r.mc_se},
                   {"drc_accuracy", r.drc_accuracy},
                   {"mean_ci_len", r.mean_ci_len},
                   {"failures", r.failures}});
  }
  return out;
}

}  // namespace pwb
