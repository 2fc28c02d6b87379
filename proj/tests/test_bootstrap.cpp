#include <cmath>
#include <vector>

#include "doctest.h"
#include "pwb/bootstrap.hpp"
#include "pwb/dgp.hpp"
#include "pwb/errors.hpp"
#include "pwb/harness.hpp"
#include "pwb/rng.hpp"

using namespace pwb;

namespace {

SpatialMultiplierEngine identity_engine(int n) {
  MatrixXd d = MatrixXd::Constant(n, n, 100.0);
  d.diagonal().setZero();
  return build_spatial_engine(d, 1.0);
}

struct Fitted {
  PanelData panel;
  VectorXd beta;
  PipelineState state;
};

Fitted fitted_panel(Design design, int n, int t, int k, std::uint64_t seed) {
  DgpSpec spec;
  spec.design = design;
  spec.n = n;
  spec.t = t;
  spec.k = k;
  Fitted f;
  auto [panel, beta] = generate(spec, RngKey(seed));
  f.panel = std::move(panel);
  f.beta = std::move(beta);
  f.state = run_pipeline(f.panel);
  return f;
}

VectorXd unit_last(int k) {
  VectorXd rho = VectorXd::Zero(k);
  rho(k - 1) = 1.0;
  return rho;
}

}  // namespace

TEST_CASE("kolmogorov survival function") {
  CHECK(kolmogorov_pvalue(0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_pvalue(0.05) == doctest::Approx(1.0));
  // classical critical value: P(K > 1.358) ~ 0.05
  CHECK(kolmogorov_pvalue(1.358) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(kolmogorov_pvalue(30.0) == doctest::Approx(1e-300));
  double p1 = kolmogorov_pvalue(0.8);
  double p2 = kolmogorov_pvalue(1.2);
  CHECK(p1 > p2);
}

TEST_CASE("standard normal cdf") {
  CHECK(standard_normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(standard_normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-6));
  CHECK(standard_normal_cdf(-8.0) < 1e-14);
}

TEST_CASE("KS diagnostic accepts an ideal Gaussian column") {
  const int b = 999;
  VectorXd col(b);
  for (int i = 0; i < b; ++i)
    col(i) = normal_quantile((i + 0.5) / b);
  KsResult ks = ks_diagnostic(col, 1.0 / b);
  CHECK(ks.d_star == 0);
  CHECK(ks.p_value > 0.9);
}

TEST_CASE("KS diagnostic flags product and degenerate columns") {
  const int b = 999;
  int flagged = 0;
  for (int s = 0; s < 40; ++s) {
    RngStream rng(RngKey(900 + s));
    VectorXd col(b);
    for (int i = 0; i < b; ++i) col(i) = rng.normal() * rng.normal();
    flagged += ks_diagnostic(col, 1.0 / b).d_star;
  }
  CHECK(flagged >= 38);

  VectorXd flat = VectorXd::Constant(b, 2.5);
  CHECK(ks_diagnostic(flat, 1.0 / b).d_star == 1);
  VectorXd zero = VectorXd::Zero(b);
  KsResult z = ks_diagnostic(zero, 1.0 / b);
  CHECK(z.d_star == 1);
  CHECK(z.p_value == doctest::Approx(1e-300));
}

TEST_CASE("whitening scaling on a scalar hand case") {
  // unit-dimension component 4, Gram 16 -> scaling 1/2
  std::vector<MatrixXd> s(1, MatrixXd(2, 2));
  s[0] << -4, -4, 4, 4;  // s_it = a_i
  ScoreProjection proj = project_score_array(s);
  SpatialMultiplierEngine e = identity_engine(2);

  VarianceEstimates est;
  est.sigma_a2 = MatrixXd::Constant(1, 1, 4.0);
  est.sigma_d2 = MatrixXd::Zero(1, 1);
  est.sigma_w2 = MatrixXd::Zero(1, 1);
  est.raw_a = est.sigma_a2;
  est.raw_d = est.sigma_d2;

  PwbVariant variant{PwbKind::D, std::nullopt, std::nullopt, 0.0};
  ScalingState sc = compute_scaling(proj, est, e, 0.0, variant);
  CHECK(sc.ind_a(0) == doctest::Approx(1.0));  // 4 >= log(2)/2
  CHECK(sc.ind_d(0) == doctest::Approx(0.0));
  CHECK(sc.theta_a(0, 0) == doctest::Approx(0.5));
  CHECK(sc.theta_d(0, 0) == doctest::Approx(0.0));
  CHECK(sc.mu_a(0) == doctest::Approx(std::log(2.0) / 2.0));
}

TEST_CASE("whitening identity and threshold menus") {
  Fitted f = fitted_panel(Design::D1, 16, 12, 3, 101);
  const auto& st = f.state;

  PwbVariant oracle{PwbKind::Oracle, st.est.sigma_a2, st.est.sigma_d2, 0.0};
  ScalingState sc = compute_scaling(st.proj, st.est, st.engine, st.q, oracle);
  MatrixXd gram_a = st.proj.a_dd.transpose() * st.engine.kernel_matrix *
                    st.proj.a_dd / st.proj.n_units;
  MatrixXd back = sc.theta_a * gram_a * sc.theta_a.transpose();
  CHECK((back - st.est.sigma_a2).cwiseAbs().maxCoeff() < 1e-8);

  int n = st.proj.n_units, t = st.proj.n_periods;
  PwbVariant vd{PwbKind::D, std::nullopt, std::nullopt, 0.0};
  PwbVariant vv{PwbKind::V, std::nullopt, std::nullopt, 0.0};
  ScalingState sd = compute_scaling(st.proj, st.est, st.engine, st.q, vd);
  ScalingState sv = compute_scaling(st.proj, st.est, st.engine, st.q, vv);
  CHECK(sd.mu_a(0) == doctest::Approx(std::log(t) / t));
  CHECK(sd.mu_d(0) == doctest::Approx(std::log(n) / n));
  CHECK(sv.mu_a(0) == doctest::Approx(1.0 / (t * std::log(t))));
  CHECK(sv.mu_d(0) == doctest::Approx(1.0 / (n * std::log(n))));
  // vanishing cutoffs sit strictly below divergence cutoffs
  CHECK(sv.mu_a(0) < sd.mu_a(0));
  CHECK(sv.mu_d(0) < sd.mu_d(0));
  // indicators are monotone in the cutoff
  for (int i = 0; i < 3; ++i) CHECK(sv.ind_a(i) >= sd.ind_a(i));

  VectorXd mixed(3);
  mixed << 1, 0, 1;
  PwbVariant vh{PwbKind::H, std::nullopt, std::nullopt, 0.0};
  ScalingState sh = compute_scaling(st.proj, st.est, st.engine, st.q, vh, &mixed);
  CHECK(sh.mu_a(0) == doctest::Approx(sd.mu_a(0)));
  CHECK(sh.mu_a(1) == doctest::Approx(sv.mu_a(0)));
  CHECK(sh.mu_a(2) == doctest::Approx(sd.mu_a(0)));
}

TEST_CASE("oracle scaling requires the component variances") {
  Fitted f = fitted_panel(Design::D3, 8, 8, 2, 102);
  PwbVariant bad{PwbKind::Oracle, std::nullopt, std::nullopt, 0.0};
  CHECK_THROWS_AS(
      compute_scaling(f.state.proj, f.state.est, f.state.engine, f.state.q, bad),
      Error);
}

TEST_CASE("bootstrap draws have mean near zero and covariance near the CRVE") {
  Fitted f = fitted_panel(Design::D1, 12, 10, 2, 103);
  const auto& st = f.state;
  PwbVariant oracle{PwbKind::Oracle, st.est.sigma_a2, st.est.sigma_d2, 0.0};
  ScalingState sc = compute_scaling(st.proj, st.est, st.engine, st.q, oracle);

  const int reps = 20000;
  RngKey key(104);
  MatrixXd draws(reps, 2);
  for (int r = 0; r < reps; ++r)
    draws.row(r) =
        bootstrap_draw(st.proj, sc, st.engine, st.q, st.fit.xtx, key.child(r))
            .transpose();

  MatrixXd v_hat = crve(st.fit, st.est).v_hat;
  VectorXd mean = draws.colwise().mean();
  MatrixXd cov = draws.transpose() * draws / reps;
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(mean(i)) < 4 * std::sqrt(v_hat(i, i) / reps));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double se = std::sqrt((v_hat(i, i) * v_hat(j, j) +
                             v_hat(i, j) * v_hat(i, j)) /
                            reps);
      CHECK(std::abs(cov(i, j) - v_hat(i, j)) < 5 * se);
    }
}

TEST_CASE("full run is deterministic in the key") {
  Fitted f = fitted_panel(Design::D2, 10, 10, 2, 105);
  const auto& st = f.state;
  PwbVariant vh{PwbKind::H, std::nullopt, std::nullopt, 0.0};
  VectorXd rho = unit_last(2), beta0 = VectorXd::Ones(2);

  BootstrapResult r1 = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vh,
                               199, 0.05, rho, beta0, RngKey(7));
  BootstrapResult r2 = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vh,
                               199, 0.05, rho, beta0, RngKey(7));
  CHECK((r1.draws - r2.draws).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(r1.q_lower == doctest::Approx(r2.q_lower));
  CHECK(r1.reject == r2.reject);

  BootstrapResult r3 = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vh,
                               199, 0.05, rho, beta0, RngKey(8));
  CHECK((r1.draws - r3.draws).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("hybrid collapses to the pure variants at extreme flags") {
  Fitted f = fitted_panel(Design::D1, 12, 12, 2, 106);
  const auto& st = f.state;
  VectorXd rho = unit_last(2), beta0 = VectorXd::Ones(2);
  RngKey key(9);
  const int b = 299;

  PwbVariant vh{PwbKind::H, std::nullopt, std::nullopt, 0.0};
  PwbVariant vv{PwbKind::V, std::nullopt, std::nullopt, 0.0};
  PwbVariant vd{PwbKind::D, std::nullopt, std::nullopt, 0.0};

  DiagnosticPass diag;
  diag.t_star = MatrixXd::Zero(b, 2);
  diag.ks_pvalues = VectorXd::Ones(2);

  diag.d_star = VectorXd::Zero(2);
  BootstrapResult h0 = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vh, b,
                               0.05, rho, beta0, key, &diag);
  BootstrapResult v = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vv, b,
                              0.05, rho, beta0, key);
  CHECK((h0.draws - v.draws).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  diag.d_star = VectorXd::Ones(2);
  BootstrapResult h1 = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vh, b,
                               0.05, rho, beta0, key, &diag);
  BootstrapResult d = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vd, b,
                              0.05, rho, beta0, key);
  CHECK((h1.draws - d.draws).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("oracle run matches the feasible run when the estimates agree") {
  Fitted f = fitted_panel(Design::D1, 16, 16, 2, 113);
  const auto& st = f.state;
  VectorXd rho = unit_last(2), beta0 = VectorXd::Ones(2);

  PwbVariant vv{PwbKind::V, std::nullopt, std::nullopt, 0.0};
  ScalingState sc = compute_scaling(st.proj, st.est, st.engine, st.q, vv);
  REQUIRE(sc.ind_a.minCoeff() == doctest::Approx(1.0));
  REQUIRE(sc.ind_d.minCoeff() == doctest::Approx(1.0));

  PwbVariant oracle{PwbKind::Oracle, st.est.sigma_a2, st.est.sigma_d2, 0.0};
  BootstrapResult rd = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vv,
                               199, 0.05, rho, beta0, RngKey(10));
  BootstrapResult ro = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, oracle,
                               199, 0.05, rho, beta0, RngKey(10));
  CHECK((rd.draws - ro.draws).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("test decision is invariant to a common scale change") {
  DgpSpec spec;
  spec.design = Design::D1;
  spec.n = 12;
  spec.t = 12;
  spec.k = 3;
  auto [panel, beta] = generate(spec, RngKey(108));
  double c = 3.0;
  PanelData scaled = panel;
  scaled.y *= c;

  PipelineState s1 = run_pipeline(panel);
  PipelineState s2 = run_pipeline(scaled);
  CHECK(s2.q == doctest::Approx(s1.q).epsilon(1e-12));

  VectorXd rho = unit_last(3);
  PwbVariant vv{PwbKind::V, std::nullopt, std::nullopt, 0.0};
  BootstrapResult r1 = run_pwb(s1.fit, s1.proj, s1.est, s1.engine, s1.q, vv,
                               199, 0.05, rho, beta, RngKey(11));
  BootstrapResult r2 = run_pwb(s2.fit, s2.proj, s2.est, s2.engine, s2.q, vv,
                               199, 0.05, rho, c * beta, RngKey(11));
  CHECK(r1.reject == r2.reject);
  CHECK((r2.draws - c * r1.draws).cwiseAbs().maxCoeff() <
        1e-8 * r1.draws.cwiseAbs().maxCoeff() * c);
  CHECK(r2.rho_stat == doctest::Approx(c * r1.rho_stat).epsilon(1e-8));
}

TEST_CASE("a gross violation of the null is rejected") {
  Fitted f = fitted_panel(Design::D3, 20, 20, 2, 109);
  const auto& st = f.state;
  VectorXd rho = unit_last(2);
  VectorXd beta0 = f.beta;
  beta0(1) += 50.0;
  PwbVariant vh{PwbKind::H, std::nullopt, std::nullopt, 0.0};
  BootstrapResult r = run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vh,
                              199, 0.05, rho, beta0, RngKey(12));
  CHECK(r.reject);
  // and the interval straddles the fitted coefficient
  CHECK(r.ci_lower(1) < st.fit.beta_hat(1));
  CHECK(r.ci_upper(1) > st.fit.beta_hat(1));
}

TEST_CASE("input validation") {
  Fitted f = fitted_panel(Design::D3, 6, 6, 2, 110);
  const auto& st = f.state;
  VectorXd rho = unit_last(2), beta0 = VectorXd::Ones(2);
  PwbVariant vv{PwbKind::V, std::nullopt, std::nullopt, 0.0};

  CHECK_THROWS_AS(run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vv, 1,
                          0.05, rho, beta0, RngKey(1)),
                  Error);
  CHECK_THROWS_AS(run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vv, 199,
                          0.0, rho, beta0, RngKey(1)),
                  Error);
  CHECK_THROWS_AS(run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vv, 10,
                          0.05, rho, beta0, RngKey(1)),
                  Error);
  CHECK_THROWS_AS(run_pwb(st.fit, st.proj, st.est, st.engine, st.q, vv, 199,
                          0.05, 2.0 * rho, beta0, RngKey(1)),
                  Error);
}

TEST_CASE("diagnostic pass flags a product-regime panel and not a noise panel") {
  Fitted prod = fitted_panel(Design::D2, 40, 40, 2, 111);
  DiagnosticPass dp = run_diagnostic_pass(prod.state.proj, prod.state.est,
                                          prod.state.engine, prod.state.q, 999,
                                          1.0 / 999, RngKey(13));
  CHECK(dp.d_star(1) == doctest::Approx(1.0));

  Fitted noise = fitted_panel(Design::D3, 40, 40, 2, 112);
  DiagnosticPass dn = run_diagnostic_pass(noise.state.proj, noise.state.est,
                                          noise.state.engine, noise.state.q,
                                          999, 1.0 / 999, RngKey(14));
  CHECK(dn.d_star(1) == doctest::Approx(0.0));
}
