// Command line front end over the C interface.
#include <hdsa/hdsa.h>

#include "studio_http.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

// Runs a C call returning JSON; reports and converts failures to an exit code.
template <class F>
int call(F&& f, json& result) {
  char* out = nullptr;
  hdsa_status s = f(&out);
  if (s != HDSA_OK) {
    std::cerr << "error: " << hdsa_status_name(s) << ": " << hdsa_last_error() << '\n';
    return static_cast<int>(s) < 100 ? 2 : 3;
  }
  result = json::parse(out);
  hdsa_string_free(out);
  return 0;
}

hdsa_http::StudioServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrepancy prior construction, calibration and sample studio"};
  app.require_subcommand(1);

  std::string scenario_path, dataset_path, out_path, hyper_path, out_dir = ".", host = "127.0.0.1";
  double delta_kappa = 0.0;
  int mc_gamma = 200, mc_eig = 10000, q = 200, port = 8080, n_ensemble = 100;
  unsigned long long seed = 0;

  auto* init = app.add_subcommand("init-hyper", "Initialize hyper-parameters from a calibration dataset");
  init->add_option("--scenario", scenario_path, "ScenarioConfig JSON file")->required();
  init->add_option("--dataset", dataset_path, "Dataset JSON file")->required();
  init->add_option("--out", out_path, "HyperParams JSON output (stdout if omitted)");
  init->add_option("--delta-kappa", delta_kappa, "Correlation search increment (0: mesh spacing)");
  init->add_option("--mc-gamma", mc_gamma, "Monte Carlo draws for gamma^2");
  init->add_option("--mc-eig", mc_eig, "Monte Carlo draws for the eigenvalue ratio");
  init->add_option("--seed", seed, "Base seed");

  auto* run = app.add_subcommand("run", "Scenario, data generation, initialization, calibration and ensemble");
  run->add_option("--scenario", scenario_path, "ScenarioConfig JSON file")->required();
  run->add_option("--out-dir", out_dir, "Directory for hyperparams.json, dataset.json, ensemble.json");
  run->add_option("--n-ensemble", n_ensemble, "Posterior optimum samples");
  run->add_option("--seed", seed, "Base seed");
  run->add_option("--mc-gamma", mc_gamma, "Monte Carlo draws for gamma^2");
  run->add_option("--mc-eig", mc_eig, "Monte Carlo draws for the eigenvalue ratio");

  auto* serve = app.add_subcommand("serve", "Serve the sample studio HTTP API");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "Bind address");

  auto* sample = app.add_subcommand("sample", "Generate a prior sample dataset");
  sample->add_option("--scenario", scenario_path, "ScenarioConfig JSON file")->required();
  sample->add_option("--hyper", hyper_path, "HyperParams JSON file (initialized if omitted)");
  sample->add_option("--q", q, "Number of samples");
  sample->add_option("--seed", seed, "Base seed");
  sample->add_option("--out", out_path, "Output JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    json result;
    if (*init) {
      json opt{{"delta_kappa", delta_kappa}, {"mc_gamma", mc_gamma}, {"mc_eig", mc_eig}, {"seed", seed}};
      std::string sc = slurp(scenario_path), ds = slurp(dataset_path), o = opt.dump();
      int rc = call([&](char** out) { return hdsa_init_hyper(sc.c_str(), ds.c_str(), o.c_str(), out); }, result);
      if (rc) return rc;
      if (out_path.empty())
        std::cout << result.dump(2) << '\n';
      else
        spit(out_path, result);
    } else if (*run) {
      json opt{{"n_ensemble", n_ensemble}, {"seed", seed}, {"mc_gamma", mc_gamma}, {"mc_eig", mc_eig}};
      std::string sc = slurp(scenario_path), o = opt.dump();
      int rc = call([&](char** out) { return hdsa_run(sc.c_str(), o.c_str(), out); }, result);
      if (rc) return rc;
      std::filesystem::create_directories(out_dir);
      spit(out_dir + "/hyperparams.json", result["hyperparams"]);
      spit(out_dir + "/dataset.json", result["dataset"]);
      spit(out_dir + "/ensemble.json", result["ensemble"]);
      std::cout << "wrote " << out_dir << "/{hyperparams,dataset,ensemble}.json\n";
    } else if (*serve) {
      hdsa_http::StudioServer server;
      int bound = server.bind(host, port);
      if (bound < 0) {
        std::cerr << "error: cannot bind " << host << ":" << port << '\n';
        return 1;
      }
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      server.listen();
      g_server = nullptr;
    } else if (*sample) {
      std::string sc = slurp(scenario_path);
      std::string hy = hyper_path.empty() ? std::string() : slurp(hyper_path);
      int rc = call(
          [&](char** out) { return hdsa_sample(sc.c_str(), hy.empty() ? nullptr : hy.c_str(), q, seed, out); }, result);
      if (rc) return rc;
      spit(out_path, result);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
