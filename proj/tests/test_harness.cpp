#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dressbath/config.hpp"
#include "dressbath/errors.hpp"
#include "dressbath/harness.hpp"
#include "dressbath/rng.hpp"
#include "dressbath/serialize.hpp"

using namespace dressbath;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("dressbath_harness_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

struct Shell {
  int code;
  std::string err;
};

Shell cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + DRESSBATH_CLI + "\" " + args + " >\"" + (dir / "stdout.txt").string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

ConfigDoc yaml(const std::string& text) { return parse_config(text, false, "test.yaml"); }

}  // namespace

TEST_CASE("parse_config YAML and JSON agree") {
  const ConfigDoc a = yaml(
      "seed: 7\n"
      "spec:\n"
      "  K: 3\n"
      "  I: 1.5\n"
      "  alpha: {profile: explicit, values: [0.6, 0.8, 0.0]}\n"
      "experiment:\n"
      "  name: frame-check\n");
  const ConfigDoc b = parse_config(
      R"({"seed": 7, "spec": {"K": 3, "I": 1.5, "alpha": {"profile": "explicit", "values": [0.6, 0.8, 0.0]}},
          "experiment": {"name": "frame-check"}})",
      true);
  CHECK(a.root == b.root);
  CHECK(a.line_of("/spec/K") == 3);
  CHECK(a.line_of("/experiment/name") == 7);
  const SpinBathSpec s = spec_from_config(Section(a, "/spec"), 7);
  CHECK(s.K == 3);
  CHECK(s.two_I == 3);
  CHECK(s.alpha(1) == doctest::Approx(0.8));
  CHECK(s.b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("config diagnostics name the field and line") {
  SUBCASE("missing K") {
    const ConfigDoc d = yaml("spec:\n  I: 0.5\nexperiment:\n  name: frame-check\n");
    try {
      spec_from_config(Section(d, "/spec"), 0);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "spec.K");
      CHECK(e.line() == 1);
      CHECK(std::string(e.what()).find("K") != std::string::npos);
      CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
  }
  SUBCASE("wrong type") {
    const ConfigDoc d = yaml("spec:\n  K: 3\n  A_hf: big\n");
    try {
      spec_from_config(Section(d, "/spec"), 0);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "spec.A_hf");
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("bad values") {
    CHECK_THROWS_AS(spec_from_config(Section(yaml("spec:\n  K: 1\n"), "/spec"), 0), ConfigError);
    CHECK_THROWS_AS(spec_from_config(Section(yaml("spec:\n  K: 3\n  I: 0.7\n"), "/spec"), 0), ConfigError);
    CHECK_THROWS_AS(spec_from_config(Section(yaml("spec:\n  K: 3\n  two_I: 0\n"), "/spec"), 0), ConfigError);
    CHECK_THROWS_AS(spec_from_config(Section(yaml("spec:\n  K: 2\n  alpha: {profile: explicit, values: [1, 1], "
                                                  "normalize: false}\n"),
                                             "/spec"),
                                     0),
                    ConfigError);
    CHECK(spec_from_config(Section(yaml("spec:\n  K: 2\n  alpha: {profile: explicit, values: [1, 1]}\n"), "/spec"), 0)
              .alpha(0) == doctest::Approx(std::sqrt(0.5)));
    CHECK_THROWS_AS(
        spec_from_config(Section(yaml("spec:\n  K: 2\n  alpha: {profile: zigzag}\n"), "/spec"), 0), ConfigError);
    CHECK_THROWS_AS(
        spec_from_config(Section(yaml("spec:\n  K: 2\n  dipolar: {source: geometry, file: nope.xyz}\n"), "/spec"), 0),
        ConfigError);
    CHECK_THROWS_AS(spec_from_config(Section(yaml("spec:\n  K: 65\n"), "/spec"), 0), DimensionOverflow);
    CHECK_THROWS_AS(parse_config("{\"spec\": ", true), ConfigError);
    CHECK_THROWS_AS(yaml("- 1\n- 2\n"), ConfigError);
  }
  SUBCASE("unknown experiment and keys") {
    CHECK_THROWS_AS(run_experiment(yaml("spec:\n  K: 2\nexperiment:\n  name: nonsense\n")), ConfigError);
    CHECK_THROWS_AS(run_experiment(yaml("spec:\n  K: 2\n  colour: red\nexperiment:\n  name: frame-check\n")),
                    ConfigError);
    CHECK_THROWS_AS(run_experiment(yaml("spec:\n  K: 2\n")), ConfigError);
  }
}

TEST_CASE("alpha profiles and geometries") {
  CHECK(perturbed_alpha(6, 0.0).isApprox(Eigen::VectorXd::Constant(6, 1.0 / std::sqrt(6.0)), 1e-15));
  const Eigen::VectorXd g = gaussian_alpha(5, 2.0);
  CHECK(g.norm() == doctest::Approx(1.0));
  CHECK(g(2) > g(1));
  CHECK(std::abs(g(1) - g(3)) < 1e-15);

  dressbath::CounterRng r1(9, 2), r2(9, 2);
  CHECK(random_alpha(r1, 7) == random_alpha(r2, 7));
  const auto lat = lattice_geometry(r1, 10, 1.5, 0.0);
  REQUIRE(lat.size() == 10);
  std::set<std::tuple<double, double, double>> distinct;
  for (const auto& p : lat) distinct.insert({p.x(), p.y(), p.z()});
  CHECK(distinct.size() == 10);

  const fs::path dir = scratch("geom");
  put(dir / "g.xyz", "# three sites\n0 0 0\n\n1 0 0  \n0 2.5 -1\n");
  const auto pts = read_geometry_file(dir / "g.xyz");
  REQUIRE(pts.size() == 3);
  CHECK(pts[2].y() == 2.5);
  CHECK(pts[2].z() == -1.0);
  put(dir / "bad.xyz", "0 0\n");
  CHECK_THROWS(read_geometry_file(dir / "bad.xyz"));
  fs::remove_all(dir);
}

TEST_CASE("CSV formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(1e-20) == "9.9999999999999995e-21");
  CHECK(std::stod(format_number(std::numbers::pi)) == std::numbers::pi);
  CsvTable t{{"a", "b", "c"}, {}};
  t.add({1.5, 3LL, std::string("x")});
  t.add({-0.0, -2LL, std::string("y")});
  CHECK(t.render(42) == "# seed: 42\na,b,c\n1.5,3,x\n0,-2,y\n");
  CHECK_THROWS_AS(t.add({1.0}), std::logic_error);
}

TEST_CASE("parallel_for") {
  for (int w : {1, 3, 8}) {
    std::vector<int> hit(50, 0);
    parallel_for(hit.size(), w, [&](std::size_t i) { hit[i] += static_cast<int>(i); });
    for (std::size_t i = 0; i < hit.size(); ++i) CHECK(hit[i] == static_cast<int>(i));
  }
  for (int w : {1, 4}) {
    std::atomic<int> calls{0};
    try {
      parallel_for(20, w, [&](std::size_t i) {
        ++calls;
        if (i == 7 || i == 13) throw std::runtime_error("boom " + std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "boom 7");
    }
    CHECK(calls == 20);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("loglog_slope") {
  std::vector<double> x, y;
  for (int k = 1; k <= 6; ++k) {
    x.push_back(std::pow(2.0, -k));
    y.push_back(3.0 * std::pow(x.back(), 2.0));
  }
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("counter RNG") {
  dressbath::CounterRng a(5, 3), b(5, 3), c(5, 4), d(6, 3);
  std::vector<double> va, vb, vc, vd;
  for (int i = 0; i < 100; ++i) {
    va.push_back(a.uniform());
    vb.push_back(b.uniform());
    vc.push_back(c.uniform());
    vd.push_back(d.uniform());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
  CHECK(*std::min_element(va.begin(), va.end()) >= 0.0);
  CHECK(*std::max_element(va.begin(), va.end()) < 1.0);
  for (int i = 0; i < 200; ++i) {
    const int k = a.integer(2, 5);
    CHECK(k >= 2);
    CHECK(k <= 5);
  }
}

TEST_CASE("experiment registry") {
  const std::vector<std::string> expected{"frame-check",   "gate-compile",   "leakage-report",  "bangbang-sweep",
                                          "leo-verify",    "froehlich-check", "bcs-uniform",     "bcs-random",
                                          "gap-vs-filling", "two-qubit-check", "sector-crosscheck"};
  CHECK(experiment_names() == expected);
  for (const auto& n : expected) CHECK(!describe_experiment(n).empty());
  for (const auto& n : expected) CHECK(fs::exists(fs::path(DRESSBATH_CONFIG_DIR) / (n + ".yaml")));
}

TEST_CASE("small experiments run in memory") {
  for (const char* name : {"two-qubit-check", "gap-vs-filling", "bcs-uniform", "froehlich-check", "bcs-random"}) {
    CAPTURE(name);
    const ConfigDoc doc = load_config(fs::path(DRESSBATH_CONFIG_DIR) / (std::string(name) + ".yaml"));
    const ExperimentOutput a = run_experiment(doc);
    RunOptions o;
    o.workers = 3;
    const ExperimentOutput b = run_experiment(doc, o);
    CHECK(a.report.at("experiment") == name);
    CHECK(a.report.dump() == b.report.dump());
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t k = 0; k < a.tables.size(); ++k) CHECK(a.tables[k].second.render(1) == b.tables[k].second.render(1));
    o.seed = 99;
    CHECK(run_experiment(doc, o).report.at("seed") == 99);
  }
}

TEST_CASE("run_config writes results and a manifest") {
  const fs::path dir = scratch("run");
  const ConfigDoc doc = load_config(fs::path(DRESSBATH_CONFIG_DIR) / "gap-vs-filling.yaml");
  RunOptions o;
  o.out_dir = dir / "a";
  o.seed = 12;
  const RunSummary s = run_config(doc, o);
  CHECK(s.out_dir == dir / "a");
  for (const auto& f : s.files) CHECK(fs::exists(f));
  REQUIRE(fs::exists(dir / "a" / "manifest.json"));
  const json m = json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(m.at("experiment") == "gap-vs-filling");
  CHECK(m.at("seed") == 12);
  CHECK(m.at("version") == version_string());
  CHECK(m.at("config") == doc.root);
  CHECK(m.at("wall_time_s").get<double>() >= 0.0);
  const json r = json::parse(slurp(dir / "a" / "report.json"));
  CHECK(r.at("seed") == 12);

  bool found_csv = false;
  for (const auto& f : s.files) {
    if (f.extension() != ".csv") continue;
    found_csv = true;
    const std::string text = slurp(f);
    CHECK(text.rfind("# seed: 12\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.back() == '\n');
  }
  CHECK(found_csv);

  o.out_dir = dir / "b";
  const RunSummary again = run_config(doc, o);
  for (const auto& f : again.files)
    if (f.extension() == ".csv") CHECK(slurp(f) == slurp(dir / "a" / f.filename()));

  const ConfigDoc json_only = yaml(
      "spec:\n  K: 4\nexperiment:\n  name: bcs-uniform\n  K_values: [4]\noutput:\n  formats: [json]\n");
  o.out_dir = dir / "c";
  run_config(json_only, o);
  CHECK(fs::exists(dir / "c" / "report.json"));
  for (const auto& e : fs::directory_iterator(dir / "c")) CHECK(e.path().extension() != ".csv");
  CHECK_THROWS_AS(run_config(yaml("spec:\n  K: 4\nexperiment:\n  name: bcs-uniform\noutput:\n  formats: [xml]\n"), o),
                  ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(cli("--version", dir).code == 0);
  CHECK(slurp(dir / "stdout.txt").find(version_string()) != std::string::npos);

  REQUIRE(cli("list", dir).code == 0);
  std::istringstream names(slurp(dir / "stdout.txt"));
  std::vector<std::string> listed;
  for (std::string line; std::getline(names, line);) listed.push_back(line);
  CHECK(listed == experiment_names());
  CHECK(cli("list -v", dir).code == 0);

  CHECK(cli("list --bogus", dir).code != 0);
  CHECK(cli("", dir).code != 0);
  CHECK(cli("run " + (dir / "absent.yaml").string(), dir).code != 0);

  put(dir / "nok.yaml", "spec:\n  I: 0.5\nexperiment:\n  name: frame-check\n");
  const Shell nok = cli("run " + (dir / "nok.yaml").string() + " --out " + (dir / "o").string(), dir);
  CHECK(nok.code == 2);
  CHECK(nok.err.find("'spec.K'") != std::string::npos);
  CHECK(nok.err.find("nok.yaml:1") != std::string::npos);

  put(dir / "big.yaml", "spec:\n  K: 200\nexperiment:\n  name: frame-check\n");
  const Shell big = cli("run " + (dir / "big.yaml").string() + " --out " + (dir / "o").string(), dir);
  CHECK(big.code == 3);
  CHECK(big.err.find("K = 200") != std::string::npos);

  put(dir / "unk.yaml", "spec:\n  K: 2\nexperiment:\n  name: nonsense\n");
  CHECK(cli("run " + (dir / "unk.yaml").string() + " --out " + (dir / "o").string(), dir).code == 2);
  CHECK(cli("run " + (dir / "unk.yaml").string() + " --workers 0", dir).code != 0);

  const std::string cfg = (fs::path(DRESSBATH_CONFIG_DIR) / "two-qubit-check.yaml").string();
  CHECK(cli("run " + cfg + " --out " + (dir / "ok").string() + " --seed 4", dir).code == 0);
  CHECK(json::parse(slurp(dir / "ok" / "manifest.json")).at("seed") == 4);
  fs::remove_all(dir);
}
