#include "dressbath/config.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "dressbath/errors.hpp"
#include "dressbath/hamiltonians.hpp"
#include "dressbath/rng.hpp"

namespace dressbath {

namespace {

std::string escape_pointer_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

json scalar_to_json(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  static const std::regex int_re(R"([-+]?[0-9]+)");
  static const std::regex float_re(R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)");
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (std::regex_match(s, int_re)) {
    try {
      return std::stoll(s);
    } catch (const std::out_of_range&) {
      return std::stod(s);
    }
  }
  if (std::regex_match(s, float_re)) return std::stod(s);
  return s;
}

json yaml_to_json(const YAML::Node& node, const std::string& pointer, std::map<std::string, int>& lines) {
  if (node.Mark().line >= 0) lines[pointer] = node.Mark().line + 1;
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      std::size_t i = 0;
      for (const auto& item : node) {
        arr.push_back(yaml_to_json(item, pointer + "/" + std::to_string(i), lines));
        ++i;
      }
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        const std::string child = pointer + "/" + escape_pointer_token(key);
        if (kv.first.Mark().line >= 0) lines[child] = kv.first.Mark().line + 1;
        obj[key] = yaml_to_json(kv.second, child, lines);
        if (kv.first.Mark().line >= 0) lines[child] = kv.first.Mark().line + 1;
      }
      return obj;
    }
  }
  return nullptr;
}

std::string type_name(const json& v) {
  if (v.is_null()) return "null";
  if (v.is_boolean()) return "a boolean";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "a list";
  return "a mapping";
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, int line, const std::string& field,
                         const std::string& what)
    : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         ": field '" + field + "': " + what),
      field_(field),
      line_(line) {}

int ConfigDoc::line_of(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    const auto it = lines.find(p);
    if (it != lines.end()) return it->second;
    if (p.empty()) return 0;
    const auto slash = p.rfind('/');
    p = slash == std::string::npos ? std::string() : p.substr(0, slash);
  }
}

void ConfigDoc::fail(const std::string& pointer, const std::string& what) const {
  std::string field = pointer;
  if (!field.empty() && field.front() == '/') field.erase(0, 1);
  for (auto& c : field)
    if (c == '/') c = '.';
  throw ConfigError(origin, line_of(pointer), field.empty() ? "<root>" : field, what);
}

ConfigDoc parse_config(const std::string& text, bool is_json, std::string origin,
                       std::filesystem::path base_dir) {
  ConfigDoc doc;
  doc.origin = std::move(origin);
  doc.base_dir = std::move(base_dir);
  if (is_json) {
    try {
      doc.root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(doc.origin, 0, "<root>", std::string("invalid JSON: ") + e.what());
    }
    // JSON is a YAML subset; reuse the YAML reader only to recover line numbers.
    try {
      std::map<std::string, int> lines;
      yaml_to_json(YAML::Load(text), "", lines);
      doc.lines = std::move(lines);
    } catch (const YAML::Exception&) {
    }
  } else {
    try {
      doc.root = yaml_to_json(YAML::Load(text), "", doc.lines);
    } catch (const YAML::Exception& e) {
      throw ConfigError(doc.origin, e.mark.line >= 0 ? e.mark.line + 1 : 0, "<root>",
                        "invalid YAML: " + e.msg);
    }
  }
  if (!doc.root.is_object()) doc.fail("", "the configuration must be a mapping");
  return doc;
}

ConfigDoc load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "<file>", "cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  bool is_json = path.extension() == ".json";
  if (!is_json) {
    const auto first = text.find_first_not_of(" \t\r\n");
    is_json = first != std::string::npos && text[first] == '{';
  }
  return parse_config(text, is_json, path.string(), path.parent_path().empty() ? "." : path.parent_path());
}

Section::Section(const ConfigDoc& doc, std::string pointer) : doc_(&doc), pointer_(std::move(pointer)) {
  if (!value().is_object()) doc.fail(pointer_, "expected a mapping, found " + type_name(value()));
}

const json& Section::value() const { return doc_->root.at(json::json_pointer(pointer_)); }

bool Section::has(const std::string& key) const {
  const auto& v = value();
  return v.contains(key) && !v.at(key).is_null();
}

const json& Section::at(const std::string& key) const {
  if (!has(key)) fail(key, "missing required field");
  return value().at(key);
}

Section Section::child(const std::string& key) const {
  at(key);
  return Section(*doc_, path(escape_pointer_token(key)));
}

void Section::fail(const std::string& key, const std::string& what) const {
  doc_->fail(key.empty() ? pointer_ : path(escape_pointer_token(key)), what);
}

double Section::number(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number()) fail(key, "expected a number, found " + type_name(v));
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(key, "must be finite");
  return d;
}

double Section::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long long Section::integer(const std::string& key) const {
  const json& v = at(key);
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  fail(key, "expected an integer, found " + (v.is_number() ? v.dump() : type_name(v)));
}

long long Section::integer(const std::string& key, long long fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool Section::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_boolean()) fail(key, "expected true or false, found " + type_name(v));
  return v.get<bool>();
}

std::string Section::string(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_string()) fail(key, "expected a string, found " + type_name(v));
  return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::vector<double> Section::numbers(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_array()) fail(key, "expected a list of numbers, found " + type_name(v));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(key + "/" + std::to_string(i), "expected a number, found " + type_name(v[i]));
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::vector<double> Section::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<long long> Section::integers(const std::string& key, std::vector<long long> fallback) const {
  if (!has(key)) return fallback;
  std::vector<long long> out;
  const std::vector<double> v = numbers(key);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::floor(v[i]) != v[i]) fail(key + "/" + std::to_string(i), "expected an integer");
    out.push_back(static_cast<long long>(v[i]));
  }
  return out;
}

Eigen::VectorXd perturbed_alpha(int K, double eps) {
  Eigen::VectorXd a(K);
  for (int i = 0; i < K; ++i) a(i) = 1.0 + eps * std::cos(2.0 * std::numbers::pi * i / K);
  return a.normalized();
}

Eigen::VectorXd gaussian_alpha(int K, double width) {
  Eigen::VectorXd a(K);
  for (int i = 0; i < K; ++i) {
    const double x = i - 0.5 * (K - 1);
    a(i) = std::exp(-x * x / (width * width));
  }
  return a.normalized();
}

Eigen::VectorXd random_alpha(CounterRng& rng, int K) {
  Eigen::VectorXd a(K);
  for (int i = 0; i < K; ++i) a(i) = 0.2 + rng.uniform();
  return a.normalized();
}

std::vector<Eigen::Vector3d> lattice_geometry(CounterRng& rng, int K, double spacing, double jitter) {
  const int side = std::max(1, static_cast<int>(std::ceil(std::cbrt(static_cast<double>(K)))));
  std::vector<Eigen::Vector3d> pos;
  for (int k = 0; k < K; ++k) {
    Eigen::Vector3d p(k % side, (k / side) % side, k / (side * side));
    for (int d = 0; d < 3; ++d) p(d) += rng.uniform(-jitter, jitter);
    pos.push_back(spacing * p);
  }
  return pos;
}

std::vector<Eigen::Vector3d> read_geometry_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open geometry file " + path.string());
  std::vector<Eigen::Vector3d> pos;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Eigen::Vector3d p;
    std::string extra;
    if (!(ls >> p(0) >> p(1) >> p(2)) || (ls >> extra))
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected `x y z`");
    pos.push_back(p);
  }
  return pos;
}

namespace {

enum Stream : std::uint64_t { kAlphaStream = 1, kGeometryStream = 2 };

Eigen::VectorXd alpha_from(const Section& spec, int K, std::uint64_t seed) {
  std::string profile = "uniform";
  std::optional<Section> block;
  if (spec.has("alpha")) {
    const json& v = spec.value().at("alpha");
    if (v.is_string()) profile = v.get<std::string>();
    else if (v.is_array()) profile = "explicit";
    else {
      block.emplace(spec.child("alpha"));
      profile = block->string("profile");
    }
  }
  Eigen::VectorXd a;
  if (profile == "uniform") {
    a = Eigen::VectorXd::Constant(K, 1.0 / std::sqrt(static_cast<double>(K)));
  } else if (profile == "gaussian") {
    if (!block) spec.fail("alpha", "the gaussian profile needs a width");
    const double w = block->number("width");
    if (!(w > 0)) block->fail("width", "must be positive");
    a = gaussian_alpha(K, w);
  } else if (profile == "perturbed") {
    a = perturbed_alpha(K, block ? block->number("epsilon", 0.3) : 0.3);
  } else if (profile == "random") {
    CounterRng rng(seed, kAlphaStream);
    a = random_alpha(rng, K);
  } else if (profile == "explicit") {
    const std::vector<double> v = block ? block->numbers("values") : spec.numbers("alpha");
    if (static_cast<int>(v.size()) != K)
      spec.fail("alpha", "has " + std::to_string(v.size()) + " entries but K = " + std::to_string(K));
    a = Eigen::Map<const Eigen::VectorXd>(v.data(), K);
    const bool normalize = block ? block->boolean("normalize", true) : true;
    if (a.norm() == 0.0) spec.fail("alpha", "must not be all zero");
    if (normalize) a.normalize();
    else if (std::abs(a.squaredNorm() - 1.0) > 1e-12)
      spec.fail("alpha", "sum of squares is " + std::to_string(a.squaredNorm()) + ", expected 1");
  } else {
    spec.fail("alpha", "unknown profile '" + profile + "' (uniform, gaussian, perturbed, random, explicit)");
  }
  return a;
}

Eigen::MatrixXd dipolar_from(const Section& spec, const Eigen::VectorXd& alpha, std::uint64_t seed) {
  const int K = static_cast<int>(alpha.size());
  if (!spec.has("dipolar")) return Eigen::MatrixXd::Zero(K, K);
  const Section d = spec.child("dipolar");
  const std::string source = d.string("source");
  if (source == "none") return Eigen::MatrixXd::Zero(K, K);
  if (source == "matrix") {
    const json& m = d.value().contains("matrix") ? d.value().at("matrix") : json();
    if (!m.is_array() || static_cast<int>(m.size()) != K) d.fail("matrix", "expected a list of K rows");
    Eigen::MatrixXd b(K, K);
    for (int i = 0; i < K; ++i) {
      const std::string row = "matrix/" + std::to_string(i);
      if (!m[i].is_array() || static_cast<int>(m[i].size()) != K) d.fail(row, "expected K entries");
      for (int j = 0; j < K; ++j) {
        if (!m[i][j].is_number()) d.fail(row + "/" + std::to_string(j), "expected a number");
        b(i, j) = m[i][j].get<double>();
      }
    }
    return b;
  }
  if (source == "geometry" || source == "random_geometry") {
    DotGeometry geom;
    geom.prefactor = d.number("prefactor", 1.0);
    if (source == "geometry") {
      const auto path = d.doc().base_dir / d.string("file");
      if (!std::filesystem::exists(path)) d.fail("file", "geometry file " + path.string() + " does not exist");
      try {
        geom.positions = read_geometry_file(path);
      } catch (const std::runtime_error& e) {
        d.fail("file", e.what());
      }
      if (static_cast<int>(geom.positions.size()) != K)
        d.fail("file", "lists " + std::to_string(geom.positions.size()) + " positions but K = " +
                           std::to_string(K));
    } else {
      CounterRng rng(seed, kGeometryStream);
      geom.positions = lattice_geometry(rng, K, d.number("spacing", 1.0), d.number("jitter", 0.2));
    }
    try {
      return dipolar_from_geometry(geom);
    } catch (const std::invalid_argument& e) {
      d.fail("", e.what());
    }
  }
  if (source == "constrained") {
    try {
      return constrained_dipolar(alpha, d.number("b_bar"), d.number("tol", 1e-8)).b;
    } catch (const InfeasibleError& e) {
      d.fail("b_bar", e.what());
    }
  }
  d.fail("source", "unknown dipolar source '" + source + "' (none, matrix, geometry, random_geometry, constrained)");
}

}  // namespace

SpinBathSpec spec_from_config(const Section& spec, std::uint64_t seed) {
  const long long K = spec.integer("K");
  if (K < 2) spec.fail("K", "must be at least 2");
  if (K > 64) {
    throw DimensionOverflow("K = " + std::to_string(K) +
                            " exceeds the desk-scale limit of 64 nuclei; reduce spec.K");
  }
  int two_I = 1;
  if (spec.has("two_I")) {
    two_I = static_cast<int>(spec.integer("two_I"));
  } else if (spec.has("I")) {
    const double I = spec.number("I");
    if (std::abs(2 * I - std::round(2 * I)) > 1e-12) spec.fail("I", "must be a half-integer");
    two_I = static_cast<int>(std::round(2 * I));
  }
  if (two_I < 1) spec.fail(spec.has("two_I") ? "two_I" : "I", "must be positive");
  if (two_I > 9) spec.fail(spec.has("two_I") ? "two_I" : "I", "spin magnitude above 9/2 is not supported");

  SpinBathSpec s;
  s.K = static_cast<int>(K);
  s.two_I = two_I;
  s.A_hf = spec.number("A_hf", 1.0);
  s.alpha = alpha_from(spec, s.K, seed);
  if (spec.has("zeeman")) {
    const Section z = spec.child("zeeman");
    s.zeeman.g_e = z.number("g_e", s.zeeman.g_e);
    s.zeeman.mu_B = z.number("mu_B", s.zeeman.mu_B);
    s.zeeman.g_n = z.number("g_n", s.zeeman.g_n);
    s.zeeman.mu_n = z.number("mu_n", s.zeeman.mu_n);
    s.zeeman.B = z.number("B", s.zeeman.B);
  }
  s.b = dipolar_from(spec, s.alpha, seed);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    spec.fail("", e.what());
  }
  return s;
}

}  // namespace dressbath
