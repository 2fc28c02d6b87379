#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "pwb/dgp.hpp"
#include "pwb/errors.hpp"
#include "pwb/harness.hpp"
#include "pwb/panel_io.hpp"

using namespace pwb;

namespace {

std::string temp_path(const std::string& name) {
  return "/tmp/pwb_test_" + name;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : {Method::PwbD, Method::PwbV, Method::PwbH, Method::Oracle,
                   Method::CrveWald})
    CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("pwb-x"), Error);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959964).epsilon(1e-5));
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
}

TEST_CASE("classification accuracy") {
  using L = RegimeLabel;
  std::vector<L> labels{L::D, L::D, L::VandG, L::D};
  CHECK(classification_accuracy(labels, Design::D1) == doctest::Approx(0.75));
  CHECK(classification_accuracy(labels, Design::D3) == doctest::Approx(0.25));
  CHECK(classification_accuracy({L::NonGaussian}, Design::D2) ==
        doctest::Approx(1.0));
  CHECK(classification_accuracy({L::NonGaussian}, Design::D4) ==
        doctest::Approx(1.0));
  CHECK(classification_accuracy({L::IandG}, Design::D5) == doctest::Approx(1.0));
  CHECK(std::isnan(classification_accuracy(labels, Design::Hetero)));
  CHECK(std::isnan(classification_accuracy({}, Design::D1)));
}

TEST_CASE("CSV writer and loader round-trip a generated panel") {
  DgpSpec spec;
  spec.design = Design::D1;
  spec.n = 6;
  spec.t = 4;
  spec.k = 3;
  auto [panel, beta] = generate(spec, RngKey(301));

  std::string path = temp_path("roundtrip.csv");
  write_panel_csv(panel, path);
  PanelData back = load_panel(path);

  CHECK(back.n_units == 6);
  CHECK(back.n_periods == 4);
  CHECK(back.n_regressors == 3);
  CHECK((back.y - panel.y).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  for (int a = 0; a < 3; ++a)
    CHECK((back.x[a] - panel.x[a]).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
  CHECK((back.locations - panel.locations).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  std::remove(path.c_str());
}

TEST_CASE("CSV loader diagnostics") {
  std::string dup = temp_path("dup.csv");
  write_file(dup,
             "i,t,y,x1\n"
             "1,1,1.0,1\n"
             "1,2,2.0,1\n"
             "2,1,3.0,1\n"
             "1,2,4.0,1\n");
  try {
    load_panel_csv(dup);
    CHECK(false);
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find("1") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
  std::remove(dup.c_str());

  std::string bad = temp_path("badheader.csv");
  write_file(bad, "unit,period,y,x1\n1,1,1.0,1\n");
  CHECK_THROWS_AS(load_panel_csv(bad), ParseError);
  std::remove(bad.c_str());

  std::string hole = temp_path("hole.csv");
  write_file(hole,
             "i,t,y,x1\n"
             "1,1,1.0,1\n"
             "2,2,2.0,1\n");
  CHECK_THROWS_AS(load_panel_csv(hole), ParseError);
  std::remove(hole.c_str());

  std::string garbled = temp_path("garbled.csv");
  write_file(garbled, "i,t,y,x1\n1,1,abc,1\n");
  CHECK_THROWS_AS(load_panel_csv(garbled), ParseError);
  std::remove(garbled.c_str());

  CHECK_THROWS_AS(load_panel_csv(temp_path("missing.csv")), ParseError);
}

TEST_CASE("CSV without locations falls back to the lattice") {
  std::string path = temp_path("noloc.csv");
  write_file(path,
             "i,t,y,x1\n"
             "1,1,1.0,1\n"
             "1,2,2.0,1\n"
             "2,1,3.0,1\n"
             "2,2,4.0,1\n");
  PanelData p = load_panel_csv(path);
  CHECK((p.locations - lattice_locations(2)).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  std::remove(path.c_str());
}

TEST_CASE("JSON loader reads row objects") {
  std::string path = temp_path("panel.json");
  write_file(path, R"([
    {"i": 1, "t": 1, "y": 1.5, "x1": 1.0, "loc_x": 0.0, "loc_y": 0.0},
    {"i": 1, "t": 2, "y": 2.5, "x1": 1.0, "loc_x": 0.0, "loc_y": 0.0},
    {"i": 2, "t": 1, "y": 3.5, "x1": 1.0, "loc_x": 1.0, "loc_y": 0.0},
    {"i": 2, "t": 2, "y": 4.5, "x1": 1.0, "loc_x": 1.0, "loc_y": 0.0}
  ])");
  PanelData p = load_panel(path);
  CHECK(p.n_units == 2);
  CHECK(p.n_periods == 2);
  CHECK(p.y(1, 1) == doctest::Approx(4.5));
  CHECK(p.locations(1, 0) == doctest::Approx(1.0));
  std::remove(path.c_str());

  std::string bad = temp_path("bad.json");
  write_file(bad, "{\"not\": \"an array\"}");
  CHECK_THROWS_AS(load_panel_json(bad), ParseError);
  std::remove(bad.c_str());
}

TEST_CASE("inference report on a generated panel") {
  DgpSpec spec;
  spec.design = Design::D1;
  spec.n = 16;
  spec.t = 16;
  spec.k = 3;
  auto [panel, beta] = generate(spec, RngKey(302));

  InferenceOptions opt;
  opt.method = Method::PwbH;
  opt.b = 199;
  opt.beta0 = beta;
  opt.seed = 5;
  nlohmann::json rep = run_inference(panel, opt);

  CHECK(rep["method"] == "pwb-h");
  CHECK(rep["n_units"] == 16);
  CHECK(rep["b"] == 199);
  CHECK(rep["beta_hat"].size() == 3);
  CHECK(rep["regime"].size() == 3);
  CHECK(rep["ci"]["lower"].size() == 3);
  CHECK(rep["q"].get<double>() >= 0.0);
  CHECK(rep["rate"].get<double>() > 0.0);
  // the interval brackets the point estimate
  for (int i = 0; i < 3; ++i) {
    double bh = rep["beta_hat"][i].get<double>();
    CHECK(rep["ci"]["lower"][i].get<double>() <= bh);
    CHECK(rep["ci"]["upper"][i].get<double>() >= bh);
  }

  nlohmann::json again = run_inference(panel, opt);
  CHECK(rep == again);

  opt.method = Method::CrveWald;
  nlohmann::json wald = run_inference(panel, opt);
  CHECK(wald.contains("wald_statistic"));
  CHECK(wald["b"] == 0);
  CHECK(wald["regime"].size() == 3);
}

TEST_CASE("inference on a noiseless panel degenerates gracefully") {
  DgpSpec spec;
  spec.design = Design::D3;
  spec.n = 8;
  spec.t = 8;
  spec.k = 2;
  auto [panel, beta] = generate(spec, RngKey(303));
  panel.y.setZero();
  for (int c = 0; c < 2; ++c) panel.y += beta(c) * panel.x[c];

  InferenceOptions opt;
  opt.method = Method::PwbV;
  opt.b = 99;
  opt.beta0 = beta;
  nlohmann::json rep = run_inference(panel, opt);
  // residuals are rounding noise, so everything collapses onto beta
  CHECK(std::abs(rep["rho_stat"].get<double>()) < 1e-8);
  CHECK(rep["ci"]["lower"][1].get<double>() ==
        doctest::Approx(beta(1)).epsilon(1e-8));
  CHECK(rep["ci"]["upper"][1].get<double>() ==
        doctest::Approx(beta(1)).epsilon(1e-8));
  CHECK(rep["crve"]["standard_errors"][1].get<double>() < 1e-10);

  // an exactly constant score series hits the q fallback
  PipelineState st = run_pipeline(panel, std::nullopt, std::nullopt);
  CHECK(st.q >= 0.0);
  CHECK(st.q < 1.0);
}

TEST_CASE("experiment tables are deterministic and well-shaped") {
  ExperimentConfig cfg;
  cfg.designs = {Design::D3, Design::D2};
  cfg.grid = {{10, 10}, {10, 14}};
  cfg.k = 2;
  cfg.b = 60;
  cfg.replications = 4;
  cfg.alpha = 0.05;
  cfg.methods = {Method::PwbV, Method::PwbH, Method::CrveWald};
  cfg.seed = 42;

  ResultTable t1 = run_experiment(cfg);
  ResultTable t2 = run_experiment(cfg);
  CHECK(t1.to_csv() == t2.to_csv());
  CHECK(t1.rows.size() == 2 * 2 * 3);
  CHECK(t1.to_csv().substr(0, 6) == "design");

  for (const ResultRow& r : t1.rows) {
    CHECK(r.reps == 4);
    CHECK(r.failures == 0);
    CHECK(r.reject_freq >= 0.0);
    CHECK(r.reject_freq <= 1.0);
    CHECK(r.b == 60);
  }

  nlohmann::json j = t1.to_json();
  CHECK(j.size() == t1.rows.size());
  CHECK(j[0].contains("reject_freq"));

  ExperimentConfig changed = cfg;
  changed.seed = 43;
  CHECK(run_experiment(changed).to_csv() != t1.to_csv());
}

TEST_CASE("oracle method runs inside an experiment") {
  ExperimentConfig cfg;
  cfg.designs = {Design::D1};
  cfg.grid = {{9, 9}};
  cfg.k = 2;
  cfg.b = 60;
  cfg.replications = 3;
  cfg.methods = {Method::Oracle};
  cfg.seed = 7;
  ResultTable t = run_experiment(cfg);
  CHECK(t.rows.size() == 1);
  CHECK(t.rows[0].reps == 3);
}

TEST_CASE("experiment validation") {
  ExperimentConfig cfg;
  cfg.replications = 0;
  CHECK_THROWS_AS(run_experiment(cfg), Error);
  cfg.replications = 2;
  cfg.b = 10;
  CHECK_THROWS_AS(run_experiment(cfg), Error);
}
