// damisac <command> --config <file> [--set key=value]... --out <dir> --seed <n>
//
// Exit codes: 0 success, 2 configuration error, 3 infeasible optimization, 1 anything else.

#include "damisac/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

#ifndef DAMISAC_GIT_DESCRIBE
#define DAMISAC_GIT_DESCRIBE "unknown"
#endif

namespace {

nlohmann::json to_json(const damisac::ParamValue& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          if (std::isinf(x)) return x > 0 ? "inf" : "-inf";  // JSON has no infinities
          return x;
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          nlohmann::json a = nlohmann::json::array();
          for (double d : x) a.push_back(std::isinf(d) ? nlohmann::json(d > 0 ? "inf" : "-inf") : nlohmann::json(d));
          return a;
        } else {
          return x;
        }
      },
      v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay alignment modulation ISAC experiments"};
  std::string command, config_path, out_dir = "out";
  std::vector<std::string> sets;
  std::uint64_t seed = 1;
  app.add_option("command", command, "experiment to run")
      ->required()
      ->check(CLI::IsMember(damisac::experiment_commands()));
  app.add_option("--config", config_path, "YAML config file (flat key: value mapping)");
  app.add_option("--set", sets, "override one key, key=value (repeatable)")->take_all();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "base seed; trial i uses derive_seed(seed, i)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    damisac::Config cfg = config_path.empty() ? damisac::Config{} : damisac::Config::from_file(config_path);
    for (const auto& s : sets) cfg.set(s);
    const damisac::ExperimentSpec spec{command, cfg, seed};
    const damisac::FigureBundle bundle = damisac::run_experiment(spec);
    const auto files = bundle.write(out_dir);

    {
      std::ofstream os(std::filesystem::path(out_dir) / "resolved_config.yaml");
      os << cfg.to_yaml();
    }
    nlohmann::ordered_json m;
    m["command"] = command;
    m["seed"] = seed;
    m["git_describe"] = DAMISAC_GIT_DESCRIBE;
    m["config_file"] = config_path;
    m["overrides"] = sets;
    nlohmann::ordered_json resolved;
    for (const auto& p : damisac::config_schema()) resolved[p.key] = to_json(cfg.values().at(p.key));
    m["config"] = resolved;
    m["threads"] = damisac::worker_count();
    m["outputs"] = files;
    nlohmann::ordered_json metrics;
    for (const auto& [k, v] : bundle.metrics) metrics[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    m["metrics"] = metrics;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m["rerun"] = "damisac " + command + " --config resolved_config.yaml --seed " + std::to_string(seed);
    std::ofstream(std::filesystem::path(out_dir) / "manifest.json") << m.dump(2) << "\n";
    std::cout << command << ": wrote " << files.size() << " files to " << out_dir << "\n";
    return 0;
  } catch (const damisac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const damisac::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
