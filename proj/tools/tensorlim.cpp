#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tensorlim/config.hpp"
#include "tensorlim/errors.hpp"
#include "tensorlim/threads.hpp"
#include "tensorlim/verify.hpp"
#include "tensorlim/version.hpp"

namespace {

int run_from_config(const std::string& config_path, const std::string& out_path,
                    int64_t seed_override, int threads) {
  tensorlim::Json config;
  try {
    std::ifstream in(config_path);
    if (!in) throw tensorlim::ConfigError("cannot open config: " + config_path);
    config = tensorlim::Json::parse(in);
    if (seed_override >= 0) config["seed"] = seed_override;
    if (threads > 0)
      tensorlim::set_thread_count(threads);
    else if (config.contains("threads"))
      tensorlim::set_thread_count(config["threads"].get<int>());
    else
      tensorlim::set_thread_count(tensorlim::default_thread_count());
    tensorlim::RunOutput out = tensorlim::run_command(config);
    if (!out_path.empty()) {
      tensorlim::write_outputs(out, out_path);
    } else {
      std::cout << out.csv;
    }
    return 0;
  } catch (const tensorlim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "computation failed: " << e.what() << "\n";
    return 3;
  }
}

int run_verify(uint64_t seed, int threads) {
  tensorlim::set_thread_count(threads > 0 ? threads
                                          : tensorlim::default_thread_count());
  auto results = tensorlim::run_verification(seed);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%-42s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.detail.c_str());
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensorlim: variational free energy for q-wise interaction models"};
  app.set_version_flag("--version", tensorlim::kVersion);

  std::string config_path, out_path;
  int64_t seed_override = -1;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "config file (JSON)")->required();
    cmd->add_option("--out", out_path, "output path (.csv, .json, or basename)");
    cmd->add_option("--seed", seed_override, "override the config seed");
    cmd->add_option("--threads", threads,
                    "worker threads (default: TENSORLIM_THREADS or hardware)");
  };

  const char* subcommands[] = {"channel", "free-energy", "oracle", "hetero", "qap"};
  const char* command_names[] = {"channel", "free_energy", "oracle", "hetero", "qap"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(
        subcommands[i], std::string("run the ") + subcommands[i] + " command");
    add_common(sub, true);
    const std::string expect = command_names[i];
    sub->callback([&, expect] {
      tensorlim::Json probe;
      {
        std::ifstream in(config_path);
        if (in) {
          try {
            probe = tensorlim::Json::parse(in);
          } catch (...) {
          }
        }
      }
      if (probe.is_object() && probe.contains("command") &&
          probe["command"] != expect) {
        std::cerr << "config error: config command '"
                  << probe["command"].get<std::string>()
                  << "' does not match subcommand '" << expect << "'\n";
        std::exit(2);
      }
      std::exit(run_from_config(config_path, out_path, seed_override, threads));
    });
  }

  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  uint64_t verify_seed = 1;
  verify->add_option("--seed", verify_seed, "verification seed");
  verify->add_option("--threads", threads, "worker threads");
  verify->callback([&] { std::exit(run_verify(verify_seed, threads)); });

  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);
  return 0;
}
