#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dressbath/errors.hpp"
#include "dressbath/harness.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kDimension = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dressbath: dressed-qubit spin-bath experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dressbath::version_string());

  std::string config_path;
  std::string out_dir;
  int workers = 1;
  std::optional<std::uint64_t> seed;
  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "YAML or JSON configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--workers", workers, "worker threads for sweeps")->check(CLI::Range(1, 1024));
  run->add_option("--seed", seed, "global seed (overrides the config)");

  CLI::App* list = app.add_subcommand("list", "list the registered experiments");
  bool verbose = false;
  list->add_flag("-v,--verbose", verbose, "include a one-line description");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& name : dressbath::experiment_names()) {
      std::cout << name;
      if (verbose) std::cout << "\t" << dressbath::describe_experiment(name);
      std::cout << "\n";
    }
    return kOk;
  }

  try {
    const dressbath::ConfigDoc doc = dressbath::load_config(config_path);
    dressbath::RunOptions opt;
    if (!out_dir.empty()) opt.out_dir = out_dir;
    opt.seed = seed;
    opt.workers = workers;
    const dressbath::RunSummary s = dressbath::run_config(doc, opt);
    std::cout << "wrote " << s.files.size() << " files to " << s.out_dir.string() << " in " << s.wall_time
              << " s\n";
    return kOk;
  } catch (const dressbath::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const dressbath::DimensionOverflow& e) {
    std::cerr << "dimension overflow: " << e.what() << "\n";
    return kDimension;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
