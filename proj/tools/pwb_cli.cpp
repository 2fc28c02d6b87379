#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "pwb/errors.hpp"
#include "pwb/harness.hpp"
#include "pwb/panel_io.hpp"

namespace {

// --config JSON file: keys override any flag left at its default.
void apply_config(const std::string& path, nlohmann::json& out) {
  std::ifstream in(path);
  if (!in) throw pwb::ParseError("cannot open config " + path);
  try {
    in >> out;
  } catch (const std::exception& e) {
    throw pwb::ParseError("config " + path + ": " + e.what());
  }
}

template <typename T>
void maybe(const nlohmann::json& cfg, const char* key, T& target) {
  if (cfg.contains(key)) target = cfg.at(key).get<T>();
}

int run_simulate(const nlohmann::json& cfg) {
  pwb::ExperimentConfig config;
  std::vector<std::string> designs = {"d1"};
  std::vector<std::string> methods = {"pwb-h"};
  std::vector<int> ns = {50}, ts = {50};
  std::string out_path = "-", format = "csv";

  maybe(cfg, "design", designs);
  maybe(cfg, "method", methods);
  maybe(cfg, "n", ns);
  maybe(cfg, "t", ts);
  maybe(cfg, "k", config.k);
  maybe(cfg, "b", config.b);
  maybe(cfg, "reps", config.replications);
  maybe(cfg, "alpha", config.alpha);
  maybe(cfg, "seed", config.seed);
  maybe(cfg, "rho", config.rho_ar1);
  maybe(cfg, "m", config.m);
  maybe(cfg, "rho_d", config.rho_d);
  maybe(cfg, "sigma_z2", config.sigma_z2);
  maybe(cfg, "nonsep_sigma", config.nonsep_sigma);
  maybe(cfg, "het_coef", config.het_coef);
  maybe(cfg, "out", out_path);
  maybe(cfg, "format", format);
  if (cfg.contains("bandwidth")) config.bandwidth = cfg.at("bandwidth").get<double>();

  config.designs.clear();
  for (const auto& d : designs) config.designs.push_back(pwb::design_from_string(d));
  config.methods.clear();
  for (const auto& m : methods) config.methods.push_back(pwb::method_from_string(m));
  if (ns.size() != ts.size())
    throw pwb::Error("--n and --t must have the same number of entries");
  config.grid.clear();
  for (size_t i = 0; i < ns.size(); ++i) config.grid.emplace_back(ns[i], ts[i]);

  pwb::ResultTable table = pwb::run_experiment(config);
  std::string text =
      format == "json" ? table.to_json().dump(2) + "\n" : table.to_csv();
  if (out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw pwb::ParseError("cannot write " + out_path);
    out << text;
  }
  return 0;
}

int run_infer(const nlohmann::json& cfg) {
  std::string data_path, method = "pwb-h", out_path = "-";
  pwb::InferenceOptions options;
  std::vector<double> rho, beta0;

  maybe(cfg, "data", data_path);
  maybe(cfg, "method", method);
  maybe(cfg, "rho", rho);
  maybe(cfg, "beta0", beta0);
  maybe(cfg, "alpha", options.alpha);
  maybe(cfg, "b", options.b);
  maybe(cfg, "seed", options.seed);
  maybe(cfg, "out", out_path);
  if (cfg.contains("bandwidth")) options.bandwidth = cfg.at("bandwidth").get<double>();
  if (cfg.contains("q")) options.q = cfg.at("q").get<double>();

  options.method = pwb::method_from_string(method);
  options.rho = Eigen::Map<Eigen::VectorXd>(rho.data(), rho.size());
  options.beta0 = Eigen::Map<Eigen::VectorXd>(beta0.data(), beta0.size());

  pwb::PanelData panel = pwb::load_panel(data_path);
  nlohmann::json report = pwb::run_inference(panel, options);
  if (out_path == "-") {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw pwb::ParseError("cannot write " + out_path);
    out << report.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection-based wild bootstrap inference for two-way clustered panels"};
  app.require_subcommand(1);

  // Flags are collected into a JSON object so a --config file can fill any
  // key the command line leaves unset.
  nlohmann::json sim_cfg, inf_cfg;
  std::string sim_config_path, inf_config_path;

  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo experiment grid");
  std::vector<std::string> sim_designs, sim_methods;
  std::vector<int> sim_n, sim_t;
  int sim_k = 0, sim_b = 0, sim_reps = 0;
  double sim_alpha = -1, sim_rho = -10, sim_m = -1, sim_rho_d = -1,
         sim_nonsep = -1, sim_het = -10, sim_bw = -1;
  long long sim_seed = -1;
  std::string sim_out, sim_format;
  sim->add_option("--design", sim_designs,
                  "d1|d2|d3|d4|d5|hetero|nonsep|spatial-sweep");
  sim->add_option("--method", sim_methods, "pwb-d|pwb-v|pwb-h|oracle|crve");
  sim->add_option("--n", sim_n, "unit counts (paired with --t)");
  sim->add_option("--t", sim_t, "period counts");
  sim->add_option("--k", sim_k, "regressor count incl. intercept");
  sim->add_option("--b", sim_b, "bootstrap draws");
  sim->add_option("--reps", sim_reps, "Monte Carlo replications");
  sim->add_option("--alpha", sim_alpha, "test level");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--rho", sim_rho, "AR(1) coefficient of time effects");
  sim->add_option("--m", sim_m, "spatial range");
  sim->add_option("--rho-d", sim_rho_d, "spatial decay");
  sim->add_option("--nonsep-sigma", sim_nonsep, "nonseparable kernel width");
  sim->add_option("--het-coef", sim_het, "heteroskedasticity coefficient");
  sim->add_option("--bandwidth", sim_bw, "spatial multiplier bandwidth");
  sim->add_option("--out", sim_out, "output path ('-' for stdout)");
  sim->add_option("--format", sim_format, "csv|json");
  sim->add_option("--config", sim_config_path, "JSON config file");

  auto* inf = app.add_subcommand("infer", "Inference on a panel data file");
  std::string inf_data, inf_method, inf_out;
  std::vector<double> inf_rho, inf_beta0;
  int inf_b = 0;
  double inf_alpha = -1, inf_bw = -1, inf_q = -1;
  long long inf_seed = -1;
  inf->add_option("--data", inf_data, "panel CSV or JSON file");
  inf->add_option("--method", inf_method, "pwb-d|pwb-v|pwb-h|crve");
  inf->add_option("--rho", inf_rho, "tested unit vector");
  inf->add_option("--beta0", inf_beta0, "null coefficient vector");
  inf->add_option("--alpha", inf_alpha, "test level");
  inf->add_option("--b", inf_b, "bootstrap draws");
  inf->add_option("--seed", inf_seed, "seed");
  inf->add_option("--bandwidth", inf_bw, "spatial multiplier bandwidth");
  inf->add_option("--q", inf_q, "serial parameter override");
  inf->add_option("--out", inf_out, "output path ('-' for stdout)");
  inf->add_option("--config", inf_config_path, "JSON config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      if (!sim_config_path.empty()) apply_config(sim_config_path, sim_cfg);
      if (!sim_designs.empty()) sim_cfg["design"] = sim_designs;
      if (!sim_methods.empty()) sim_cfg["method"] = sim_methods;
      if (!sim_n.empty()) sim_cfg["n"] = sim_n;
      if (!sim_t.empty()) sim_cfg["t"] = sim_t;
      if (sim_k > 0) sim_cfg["k"] = sim_k;
      if (sim_b > 0) sim_cfg["b"] = sim_b;
      if (sim_reps > 0) sim_cfg["reps"] = sim_reps;
      if (sim_alpha >= 0) sim_cfg["alpha"] = sim_alpha;
      if (sim_seed >= 0) sim_cfg["seed"] = static_cast<std::uint64_t>(sim_seed);
      if (sim_rho > -2) sim_cfg["rho"] = sim_rho;
      if (sim_m >= 0) sim_cfg["m"] = sim_m;
      if (sim_rho_d >= 0) sim_cfg["rho_d"] = sim_rho_d;
      if (sim_nonsep >= 0) sim_cfg["nonsep_sigma"] = sim_nonsep;
      if (sim_het > -2) sim_cfg["het_coef"] = sim_het;
      if (sim_bw >= 0) sim_cfg["bandwidth"] = sim_bw;
      if (!sim_out.empty()) sim_cfg["out"] = sim_out;
      if (!sim_format.empty()) sim_cfg["format"] = sim_format;
      return run_simulate(sim_cfg);
    }
    if (inf->parsed()) {
      if (!inf_config_path.empty()) apply_config(inf_config_path, inf_cfg);
      if (!inf_data.empty()) inf_cfg["data"] = inf_data;
      if (!inf_method.empty()) inf_cfg["method"] = inf_method;
      if (!inf_rho.empty()) inf_cfg["rho"] = inf_rho;
      if (!inf_beta0.empty()) inf_cfg["beta0"] = inf_beta0;
      if (inf_alpha >= 0) inf_cfg["alpha"] = inf_alpha;
      if (inf_b > 0) inf_cfg["b"] = inf_b;
      if (inf_seed >= 0) inf_cfg["seed"] = static_cast<std::uint64_t>(inf_seed);
      if (inf_bw >= 0) inf_cfg["bandwidth"] = inf_bw;
      if (inf_q >= 0) inf_cfg["q"] = inf_q;
      if (!inf_out.empty()) inf_cfg["out"] = inf_out;
      if (!inf_cfg.contains("data")) {
        std::cerr << "infer: --data is required\n";
        return 1;
      }
      return run_infer(inf_cfg);
    }
  } catch (const pwb::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const pwb::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
