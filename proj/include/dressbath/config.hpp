// Experiment configuration: YAML or JSON text normalized to one JSON tree,
// with source lines kept for diagnostics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dressbath/spin_core.hpp"

namespace dressbath {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& origin, int line, const std::string& field, const std::string& what);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct ConfigDoc {
  json root;
  std::map<std::string, int> lines;  // JSON pointer -> 1-based source line
  std::filesystem::path base_dir;    // relative file references resolve here
  std::string origin = "<config>";

  // Line of the field, or of its nearest ancestor that has one; 0 if unknown.
  int line_of(const std::string& pointer) const;
  [[noreturn]] void fail(const std::string& pointer, const std::string& what) const;
};

ConfigDoc parse_config(const std::string& text, bool is_json, std::string origin = "<config>",
                       std::filesystem::path base_dir = ".");
// Format chosen by extension (.json) or a leading '{'.
ConfigDoc load_config(const std::filesystem::path& path);

// Typed access to one object of the tree; errors name the field and line.
class Section {
 public:
  Section(const ConfigDoc& doc, std::string pointer);

  bool has(const std::string& key) const;
  Section child(const std::string& key) const;
  const json& value() const;
  const std::string& pointer() const { return pointer_; }
  const ConfigDoc& doc() const { return *doc_; }

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key) const;
  long long integer(const std::string& key, long long fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<long long> integers(const std::string& key, std::vector<long long> fallback) const;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  const json& at(const std::string& key) const;
  std::string path(const std::string& key) const { return pointer_ + "/" + key; }

  const ConfigDoc* doc_;
  std::string pointer_;
};

// Builds the spec block. Random alpha profiles and geometries draw from the
// seed. Dimension limits are checked here so oversize requests fail early.
SpinBathSpec spec_from_config(const Section& spec, std::uint64_t seed);

// One `x y z` triple per line; blank lines and '#' comments are skipped.
std::vector<Eigen::Vector3d> read_geometry_file(const std::filesystem::path& path);

class CounterRng;

// alpha_i proportional to 0.2 + u_i with u_i uniform in [0, 1), normalized.
Eigen::VectorXd random_alpha(CounterRng& rng, int K);
// First K sites of a 3 x 3 x ... cubic lattice of the given spacing, each
// displaced by up to `jitter` spacings per axis.
std::vector<Eigen::Vector3d> lattice_geometry(CounterRng& rng, int K, double spacing, double jitter);

// alpha_i proportional to 1 + eps cos(2 pi i / K), normalized.
Eigen::VectorXd perturbed_alpha(int K, double eps);
// alpha_i proportional to exp(-x_i^2 / width^2), x_i = i - (K - 1)/2.
Eigen::VectorXd gaussian_alpha(int K, double width);

}  // namespace dressbath
