// Experiment registry and runner behind the command-line tool.
//
// A configuration has three blocks:
//   seed: <u64>                       (optional, default 0)
//   spec: {K, I | two_I, A_hf, alpha, zeeman, dipolar}
//   experiment: {name, ...parameters}
//   output: {dir, formats: [csv, json]}  (optional)

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dressbath/config.hpp"
#include "dressbath/serialize.hpp"

namespace dressbath {

struct ExperimentOutput {
  json report;
  std::vector<std::pair<std::string, CsvTable>> tables;  // file stem -> table
  std::vector<std::pair<std::string, std::string>> texts;  // file name -> content
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

// Registry order is fixed.
const std::vector<std::string>& experiment_names();
std::string describe_experiment(const std::string& name);

// Runs the configured experiment in memory. Throws ConfigError for unknown
// names or invalid parameters.
ExperimentOutput run_experiment(const ConfigDoc& doc, const RunOptions& options = {});

struct RunSummary {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;
  double wall_time = 0.0;
};

// run_experiment plus the files: report.json, <table>.csv, text outputs and
// manifest.json (config echo, seed, version, wall time).
RunSummary run_config(const ConfigDoc& doc, const RunOptions& options = {});

std::string version_string();

// Calls fn(i) for i in [0, n) on `workers` threads; the first exception by
// index is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dressbath
