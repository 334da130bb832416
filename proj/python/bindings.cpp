#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dressbath/config.hpp"
#include "dressbath/dressed_frame.hpp"
#include "dressbath/errors.hpp"
#include "dressbath/harness.hpp"
#include "dressbath/hamiltonians.hpp"
#include "dressbath/leakage.hpp"
#include "dressbath/pairing.hpp"
#include "dressbath/serialize.hpp"

namespace py = pybind11;
using namespace dressbath;

namespace {

SpinBathSpec make_spec(const Eigen::VectorXd& alpha, int two_I, double A_hf, std::optional<Eigen::MatrixXd> b,
                       double B) {
  SpinBathSpec s = SpinBathSpec::with_alpha(alpha, two_I, A_hf);
  if (b) s.b = *b;
  s.zeeman.B = B;
  s.validate();
  return s;
}

// Config text in, report JSON text out.
std::string run_text(const std::string& text, bool is_json, std::optional<std::uint64_t> seed, int workers) {
  const ConfigDoc doc = parse_config(text, is_json, "<python>");
  RunOptions o;
  o.seed = seed;
  o.workers = workers;
  return run_experiment(doc, o).report.dump();
}

py::dict run_tables(const std::string& text, bool is_json, std::optional<std::uint64_t> seed) {
  const ConfigDoc doc = parse_config(text, is_json, "<python>");
  RunOptions o;
  o.seed = seed;
  const ExperimentOutput out = run_experiment(doc, o);
  py::dict d;
  const std::uint64_t s = out.report.at("seed").get<std::uint64_t>();
  for (const auto& [stem, table] : out.tables) d[py::str(stem)] = table.render(s);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "dressbath core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_IndexError);
  py::register_exception<DimensionOverflow>(m, "DimensionOverflow", PyExc_OverflowError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<Unsupported>(m, "Unsupported", PyExc_NotImplementedError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

  m.def("version", &version_string);
  m.def("experiment_names", &experiment_names);
  m.def("describe_experiment", &describe_experiment, py::arg("name"));
  m.def("run_experiment", &run_text, py::arg("config"), py::arg("is_json") = false, py::arg("seed") = py::none(),
        py::arg("workers") = 1);
  m.def("run_tables", &run_tables, py::arg("config"), py::arg("is_json") = false, py::arg("seed") = py::none());

  py::class_<SpinBathSpec>(m, "SpinBathSpec")
      .def(py::init(&make_spec), py::arg("alpha"), py::arg("two_I") = 1, py::arg("A_hf") = 1.0,
           py::arg("b") = py::none(), py::arg("B") = 0.0)
      .def_static("uniform", &SpinBathSpec::uniform, py::arg("K"), py::arg("two_I") = 1, py::arg("A_hf") = 1.0)
      .def_readonly("K", &SpinBathSpec::K)
      .def_readonly("two_I", &SpinBathSpec::two_I)
      .def_readonly("A_hf", &SpinBathSpec::A_hf)
      .def_readonly("alpha", &SpinBathSpec::alpha)
      .def_readonly("b", &SpinBathSpec::b);

  m.def("sector_dimension", [](int K, int two_I, int N, bool electron) {
    return sector_dimension(Layout{K, two_I, electron}, N);
  }, py::arg("K"), py::arg("two_I"), py::arg("N"), py::arg("electron") = true);

  m.def("frame_h_m", [](const SpinBathSpec& s) { return build_frame_N1(s).h_m; }, py::arg("spec"));
  m.def("frame_rows", [](const SpinBathSpec& s) { return build_frame_N1(s).frame_rows(); }, py::arg("spec"));
  m.def("pulse_unitary", py::overload_cast<double, double>(&pulse_unitary), py::arg("phi"), py::arg("theta"));
  m.def("gate_infidelity", &gate_infidelity, py::arg("U"), py::arg("V"));
  m.def("compile_gate", [](const Eigen::Matrix2cd& target, const SpinBathSpec& s) {
    std::vector<std::pair<double, double>> out;
    for (const auto& seg : compile_gate(target, s)) out.emplace_back(seg.F, seg.duration);
    return out;
  }, py::arg("target"), py::arg("spec"));
  m.def("compose_pulses", [](const std::vector<std::pair<double, double>>& segs, const SpinBathSpec& s) {
    std::vector<PulseSegment> v;
    for (const auto& [F, t] : segs) v.push_back({F, t});
    return compose_pulses(v, s);
  }, py::arg("segments"), py::arg("spec"));

  m.def("c_z", &closed_form::c_z, py::arg("spec"));
  m.def("overhauser_diag", &closed_form::overhauser_diag, py::arg("spec"));
  m.def("dipolar_from_geometry", [](const std::vector<std::array<double, 3>>& pts, double prefactor) {
    DotGeometry g;
    g.prefactor = prefactor;
    for (const auto& p : pts) g.positions.emplace_back(p[0], p[1], p[2]);
    return dipolar_from_geometry(g);
  }, py::arg("positions"), py::arg("prefactor") = 1.0);

  py::class_<BcsSolution>(m, "BcsSolution")
      .def_readonly("delta", &BcsSolution::delta)
      .def_readonly("lambda_", &BcsSolution::lambda)
      .def_readonly("u", &BcsSolution::u)
      .def_readonly("v", &BcsSolution::v)
      .def_readonly("residual", &BcsSolution::residual)
      .def_readonly("number_residual", &BcsSolution::number_residual)
      .def_readonly("iterations", &BcsSolution::iterations)
      .def_readonly("normal_state", &BcsSolution::normal_state);

  m.def("solve_bcs_uniform", [](int K, double n, double A_hf, double F, double b) {
    return solve_bcs(uniform_pairing_model(K, n, A_hf, F, b));
  }, py::arg("K"), py::arg("n"), py::arg("A_hf") = 1.0, py::arg("F") = 1.0, py::arg("b") = 0.0);
  m.def("solve_bcs", [](const SpinBathSpec& s, double F, double n) {
    return solve_bcs(build_pairing_model(s, F, n));
  }, py::arg("spec"), py::arg("F"), py::arg("n"));
}
