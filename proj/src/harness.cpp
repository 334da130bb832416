#include "dressbath/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

#include "dressbath/dressed_frame.hpp"
#include "dressbath/errors.hpp"
#include "dressbath/hamiltonians.hpp"
#include "dressbath/leakage.hpp"
#include "dressbath/pairing.hpp"
#include "dressbath/rng.hpp"

#ifndef DRESSBATH_VERSION
#define DRESSBATH_VERSION "0.0.0"
#endif

namespace dressbath {

std::string version_string() { return DRESSBATH_VERSION; }

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  std::vector<std::exception_ptr> errors(n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs two or more points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = std::log(x[static_cast<std::size_t>(i)]);
    A(i, 1) = 1.0;
    rhs(i) = std::log(y[static_cast<std::size_t>(i)]);
  }
  return A.colPivHouseholderQr().solve(rhs)(0);
}

namespace {

constexpr double kPi = std::numbers::pi;

enum Stream : std::uint64_t {
  kSampleStream = 11,
  kStateStream = 12,
  kGateStream = 13,
};

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

json to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json checks_json(const std::vector<CoefficientCheck>& checks) {
  json out = json::array();
  for (const auto& c : checks)
    out.push_back({{"name", c.name}, {"oracle", c.oracle}, {"closed_form", c.closed_form},
                   {"printed", c.printed}, {"status", c.status()}});
  return out;
}

struct Context {
  const ConfigDoc& doc;
  Section exp;
  std::uint64_t seed;
  int workers;

  bool has_spec() const { return doc.root.contains("spec"); }
  SpinBathSpec spec() const { return spec_from_config(Section(doc, "").child("spec"), seed); }
};

void check_keys(const Section& s, const std::vector<std::string>& allowed) {
  for (const auto& [key, _] : s.value().items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      s.fail(key, "unknown field (expected one of: " + list + ")");
    }
  }
}

// Operator 2-norm of (1 - P) H P for the frame projector P.
double closure_norm(const LinearOp& H, const DressedFrame& f) {
  const auto d = static_cast<Eigen::Index>(f.sector->dim());
  CMatrix V(d, 2);
  V.col(0) = f.ket0.amps;
  V.col(1) = f.ket1.amps;
  const CMatrix HV = H.matrix() * V;
  const CMatrix out = HV - V * (V.adjoint() * HV);
  return Eigen::JacobiSVD<CMatrix>(out).singularValues()(0);
}

double orthonormality_defect(const DressedFrame& f) {
  std::vector<const KetState*> all{&f.ket0, &f.ket1};
  for (const auto& l : f.leak_modes) all.push_back(&l);
  double worst = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j)
      worst = std::max(worst, std::abs(all[i]->inner(*all[j]) - (i == j ? 1.0 : 0.0)));
  return worst;
}

SpinBathSpec sample_spec(CounterRng& rng, int K, int two_I, bool dipolar) {
  SpinBathSpec s = SpinBathSpec::with_alpha(random_alpha(rng, K), two_I, rng.uniform(0.5, 1.5));
  s.zeeman.B = rng.uniform(-1.0, 1.0);
  if (dipolar) {
    DotGeometry g;
    g.positions = lattice_geometry(rng, K, 1.0, 0.2);
    g.prefactor = 0.05;
    s.b = dipolar_from_geometry(g);
  }
  return s;
}

FrameSelector selector_from(const Section& exp) {
  const std::string kind = exp.string("selector", "max_h");
  if (kind == "max_h") return FrameSelector::max_h();
  if (kind == "min_h") return FrameSelector::min_h();
  if (kind == "target_iz") return FrameSelector::target_iz(exp.number("iz"));
  exp.fail("selector", "unknown selector '" + kind + "' (max_h, min_h, target_iz)");
}

// ---------------------------------------------------------------- frame-check

ExperimentOutput frame_check(const Context& ctx) {
  check_keys(ctx.exp, {"name", "N", "selector", "iz", "F", "random_specs"});
  const SpinBathSpec spec = ctx.spec();
  const double F = ctx.exp.number("F", 0.5);
  const FrameSelector sel = selector_from(ctx.exp);
  const int N = sel.kind == SelectorKind::target_iz
                    ? static_cast<int>(std::lround(sel.iz + spec.K * spec.I() + 1))
                    : static_cast<int>(ctx.exp.integer("N", 1));
  const DressedFrame f = build_frame_general(spec, N, sel);
  const LinearOp HD = build_dominant(spec, F, f.sector);
  const HyperfineParts hf = build_hyperfine(spec, f.sector);
  const LinearOp Sz = spin_op(spec, 0, Comp::z, f.sector);

  ExperimentOutput out;
  json& r = out.report;
  r["N"] = f.N;
  r["dim"] = f.sector->dim();
  r["h_m"] = f.h_m;
  r["orthonormality_residual"] = orthonormality_defect(f);
  r["mode_matrix_residual"] =
      (f.mode_matrix * f.mode_matrix.transpose() - Eigen::MatrixXd::Identity(spec.K, spec.K)).cwiseAbs().maxCoeff();
  r["closure_norm"] = closure_norm(HD, f);
  // V_f = flipflop / (A sqrt(2I))
  const double scale = spec.A_hf * spec.sqrt_2I();
  if (scale != 0.0) {
    const Eigen::Matrix2cd vf = matrix_rep(hf.flipflop, f) / scale;
    r["rep_Vf"] = to_json(CMatrix(vf));
    r["rep_Vf_residual"] = (vf - std::sqrt(f.h_m) * pauli::X() / 2.0).cwiseAbs().maxCoeff();
  }
  const Eigen::Matrix2cd sz = matrix_rep(Sz, f);
  r["rep_Sz_residual"] = (sz - pauli::Z() / 2.0).cwiseAbs().maxCoeff();
  r["rep_HD_residual"] =
      (matrix_rep(HD, f) - (F * pauli::Z() + scale * std::sqrt(f.h_m) * pauli::X()) / 2.0).cwiseAbs().maxCoeff();
  const LinearOp W = dressing_unitary(f);
  const CMatrix Wd = W.dense();
  r["dressing_WWdag_residual"] = (Wd * Wd.adjoint() - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff();
  r["dressing_WdagW_residual"] = (Wd.adjoint() * Wd - f.projector()).cwiseAbs().maxCoeff();
  if (f.N == 1) {
    double vf_leak = 0.0;
    for (const auto& l : f.leak_modes) vf_leak = std::max(vf_leak, hf.flipflop.apply(l).norm());
    r["flipflop_on_leak_modes"] = vf_leak;
  }
  out.texts.emplace_back("frame.txt", write_frame(f));

  const long long samples = ctx.exp.integer("random_specs", 0);
  if (samples < 0) ctx.exp.fail("random_specs", "must be non-negative");
  if (samples > 0) {
    struct Row {
      int K, two_I, N;
      std::size_t dim;
      double closure, ortho, h_err, vf_err, sz_err;
    };
    std::vector<Row> rows(static_cast<std::size_t>(samples));
    parallel_for(rows.size(), ctx.workers, [&](std::size_t i) {
      CounterRng rng(ctx.seed, kSampleStream * 1000003 + i);
      const int K = rng.integer(2, 8);
      const int two_I = rng.integer(1, 2);
      const int Nmax = std::min(3, K * two_I);
      const int Ni = rng.integer(1, Nmax);
      const SpinBathSpec s = sample_spec(rng, K, two_I, false);
      const double Fi = rng.uniform(-2.0, 2.0);
      const FrameSelector si = rng.uniform() < 0.5 ? FrameSelector::max_h() : FrameSelector::min_h();
      const DressedFrame fg = build_frame_general(s, Ni, si);
      const DressedFrame f1 = build_frame_N1(s);
      const double sc = s.A_hf * s.sqrt_2I();
      const Eigen::Matrix2cd vf = matrix_rep(build_hyperfine(s, f1.sector).flipflop, f1) / sc;
      const Eigen::Matrix2cd sz1 = matrix_rep(spin_op(s, 0, Comp::z, f1.sector), f1);
      rows[i] = {K,
                 two_I,
                 Ni,
                 fg.sector->dim(),
                 closure_norm(build_dominant(s, Fi, fg.sector), fg),
                 std::max(orthonormality_defect(fg), orthonormality_defect(f1)),
                 std::abs(f1.h_m - 1.0),
                 (vf - pauli::X() / 2.0).cwiseAbs().maxCoeff(),
                 (sz1 - pauli::Z() / 2.0).cwiseAbs().maxCoeff()};
    });
    CsvTable t{{"index", "K", "two_I", "N", "dim", "closure_norm", "orthonormality", "h_m_error",
                "rep_Vf_residual", "rep_Sz_residual"},
               {}};
    double mc = 0, mo = 0, mh = 0, mv = 0, ms = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& w = rows[i];
      t.add({static_cast<long long>(i), static_cast<long long>(w.K), static_cast<long long>(w.two_I),
             static_cast<long long>(w.N), static_cast<long long>(w.dim), w.closure, w.ortho, w.h_err, w.vf_err,
             w.sz_err});
      mc = std::max(mc, w.closure);
      mo = std::max(mo, w.ortho);
      mh = std::max(mh, w.h_err);
      mv = std::max(mv, w.vf_err);
      ms = std::max(ms, w.sz_err);
    }
    out.tables.emplace_back("random_frames", std::move(t));
    r["random"] = {{"count", samples},
                   {"max_closure_norm", mc},
                   {"max_orthonormality", mo},
                   {"max_h_m_error", mh},
                   {"max_rep_Vf_residual", mv},
                   {"max_rep_Sz_residual", ms}};
  }
  return out;
}

// ---------------------------------------------------------------- gate-compile

Eigen::Matrix2cd haar_unitary(CounterRng& rng) {
  Eigen::Matrix2cd z;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) z(i, j) = cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
  Eigen::HouseholderQR<Eigen::Matrix2cd> qr(z);
  Eigen::Matrix2cd q = qr.householderQ();
  const Eigen::Matrix2cd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < 2; ++j) q.col(j) *= R(j, j) / std::abs(R(j, j));
  return q;
}

ExperimentOutput gate_compile(const Context& ctx) {
  check_keys(ctx.exp, {"name", "targets", "grid"});
  const SpinBathSpec spec = ctx.spec();
  const long long n_targets = ctx.exp.integer("targets", 100);
  const long long grid = ctx.exp.integer("grid", 20);
  if (n_targets < 0) ctx.exp.fail("targets", "must be non-negative");
  if (grid < 1) ctx.exp.fail("grid", "must be positive");

  ExperimentOutput out;
  double decomp = 0.0;
  for (long long j = 0; j < grid; ++j)
    for (long long k = 0; k < grid; ++k) {
      const double phi = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(grid);
      const double theta = -kPi / 2 + kPi * static_cast<double>(k + 1) / static_cast<double>(grid);
      decomp = std::max(decomp,
                        (pulse_unitary(phi, theta) - pulse_unitary_factored(phi, theta)).cwiseAbs().maxCoeff());
    }
  out.report["decomposition_max_residual"] = decomp;
  out.report["grid"] = grid;

  auto describe = [&](const std::vector<PulseSegment>& segs, const Eigen::Matrix2cd& target) {
    json s = json::array();
    for (const auto& p : segs) {
      const PulseAngles a = pulse_angles(p, spec);
      s.push_back({{"F", p.F}, {"duration", p.duration}, {"phi", a.phi}, {"theta", a.theta}});
    }
    return json{{"segments", s}, {"infidelity", gate_infidelity(compose_pulses(segs, spec), target)}};
  };
  Eigen::Matrix2cd H;
  H << 1, 1, 1, -1;
  H /= std::sqrt(2.0);
  out.report["named"] = {{"identity", describe(compile_gate(pauli::I(), spec), pauli::I())},
                         {"X", describe(compile_gate(pauli::X(), spec), pauli::X())},
                         {"Hadamard", describe(compile_gate(H, spec), H)}};

  std::vector<std::vector<PulseSegment>> compiled(static_cast<std::size_t>(n_targets));
  std::vector<Eigen::Matrix2cd> targets(compiled.size());
  CounterRng rng(ctx.seed, kGateStream);
  for (auto& t : targets) t = haar_unitary(rng);
  parallel_for(compiled.size(), ctx.workers, [&](std::size_t i) { compiled[i] = compile_gate(targets[i], spec); });
  CsvTable t{{"index", "infidelity", "segments", "total_duration"}, {}};
  double worst = 0.0;
  for (std::size_t i = 0; i < compiled.size(); ++i) {
    const double inf = gate_infidelity(compose_pulses(compiled[i], spec), targets[i]);
    double total = 0.0;
    for (const auto& p : compiled[i]) total += p.duration;
    worst = std::max(worst, inf);
    t.add({static_cast<long long>(i), inf, static_cast<long long>(compiled[i].size()), total});
  }
  out.report["random_targets"] = n_targets;
  out.report["max_infidelity"] = worst;
  out.tables.emplace_back("gates", std::move(t));
  return out;
}

// ---------------------------------------------------------------- leakage-report

ExperimentOutput leakage_report(const Context& ctx) {
  check_keys(ctx.exp, {"name", "scaling_K", "epsilon"});
  const SpinBathSpec spec = ctx.spec();
  const DressedFrame f = build_frame_N1(spec);
  const LeakageReport ov = overhauser_report(spec, f);
  const LeakageReport dp = dipolar_report(spec, f);

  ExperimentOutput out;
  json& r = out.report;
  r["overhauser"] = {{"c_z_oracle", ov.ref_coeff},
                     {"c_z_closed_form", closed_form::c_z(spec)},
                     {"c_z_error", std::abs(ov.ref_coeff - closed_form::c_z(spec))},
                     {"ket0_eigen_residual", ov.ref_residual},
                     {"diag_coeff", ov.diag_coeff},
                     {"diag_closed_form", closed_form::overhauser_diag(spec)},
                     {"diag_error", std::abs(ov.diag_coeff - closed_form::overhauser_diag(spec))},
                     {"leak_norm", ov.leak_norm},
                     {"ratio", ov.ratio},
                     {"shift_ratio", ov.shift_ratio},
                     {"paper_estimate", ov.paper_estimate},
                     {"checks", checks_json(ov.checks)}};
  r["dipolar"] = {{"c0", dp.ref_coeff},
                  {"c1", dp.diag_coeff},
                  {"ket0_eigen_residual", dp.ref_residual},
                  {"leak_norm", dp.leak_norm},
                  {"ratio", dp.ratio},
                  {"checks", checks_json(dp.checks)}};

  // H_L of the full Hamiltonian against its two leaking parts.
  const LinearOp H = build_total(spec, f.sector);
  const SplitHamiltonian split = split_leakage(H, f);
  const LinearOp zz = build_hyperfine(spec, f.sector).zz;
  const LinearOp dip = build_dipolar(spec, f.sector);
  const CVector leak_total = split.leak.apply(f.ket1).amps;
  const CMatrix Q = CMatrix::Identity(f.projector().rows(), f.projector().cols()) - f.projector();
  const CVector leak_ovh = Q * zz.apply(f.ket1).amps;
  const CVector leak_dip = Q * dip.apply(f.ket1).amps;
  r["H_L"] = {{"norm_on_ket1", leak_total.norm()},
              {"overhauser_part", leak_ovh.norm()},
              {"dipolar_part", leak_dip.norm()},
              {"vector_sum_residual", (leak_total - leak_ovh - leak_dip).norm()},
              {"ket0_leak", split.leak.apply(f.ket0).norm()}};

  const std::vector<long long> Ks = ctx.exp.integers("scaling_K", {4, 5, 6, 7, 8, 9, 10, 11, 12});
  const double eps = ctx.exp.number("epsilon", 0.3);
  if (Ks.size() >= 2) {
    CsvTable t{{"K", "leak_ratio", "shift_ratio", "paper_estimate"}, {}};
    std::vector<double> xs, ys, ss, ps;
    for (const long long K : Ks) {
      if (K < 2 || K > 64) ctx.exp.fail("scaling_K", "entries must lie in [2, 64]");
      SpinBathSpec s = SpinBathSpec::with_alpha(perturbed_alpha(static_cast<int>(K), eps), spec.two_I, spec.A_hf);
      const LeakageReport rep = overhauser_report(s, build_frame_N1(s));
      t.add({K, rep.ratio, rep.shift_ratio, rep.paper_estimate});
      xs.push_back(static_cast<double>(K));
      ys.push_back(rep.ratio);
      ss.push_back(rep.shift_ratio);
      ps.push_back(rep.paper_estimate);
    }
    const double slope = loglog_slope(xs, ss);
    // Informal extrapolation of the fitted law to a large bath.
    const double K_big = 1e5;
    const double extrap = ss.back() * std::pow(K_big / xs.back(), slope);
    r["scaling"] = {{"epsilon", eps},
                    {"exponent", slope},
                    {"diag_ratio_exponent", loglog_slope(xs, ys)},
                    {"paper_estimate_exponent", loglog_slope(xs, ps)},
                    {"extrapolated_ratio_at_1e5", extrap}};
    out.tables.emplace_back("overhauser_scaling", std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------- bangbang-sweep

ExperimentOutput bangbang_sweep(const Context& ctx) {
  check_keys(ctx.exp, {"name", "total_time", "divisors", "initial"});
  const SpinBathSpec spec = ctx.spec();
  const double T = ctx.exp.number("total_time", 2.0);
  if (!(T > 0)) ctx.exp.fail("total_time", "must be positive");
  const std::vector<long long> divs = ctx.exp.integers("divisors", {4, 8, 16, 32, 64, 128, 256});
  if (divs.size() < 2) ctx.exp.fail("divisors", "need at least two schedules");
  for (const long long d : divs)
    if (d < 1) ctx.exp.fail("divisors", "entries must be positive");
  const DressedFrame f = build_frame_N1(spec);
  const std::string initial = ctx.exp.string("initial", "ket1");
  KetState psi0;
  if (initial == "ket1") psi0 = f.ket1;
  else if (initial == "superposition") psi0 = KetState{f.sector, (f.ket0.amps + f.ket1.amps) / std::sqrt(2.0)};
  else ctx.exp.fail("initial", "expected ket1 or superposition");

  const LinearOp H = build_total(spec, f.sector);
  const BangBangResult free = free_evolve(H, f, {T, 1}, psi0);
  const double free_leak = free.leak_prob.back();

  std::vector<BangBangResult> runs(divs.size());
  parallel_for(runs.size(), ctx.workers, [&](std::size_t i) {
    const auto d = static_cast<int>(divs[i]);
    runs[i] = bangbang_evolve(H, f, {T / d, d}, psi0);
  });

  ExperimentOutput out;
  CsvTable t{{"tau", "cycles", "leak_prob"}, {}};
  std::vector<double> taus, leaks;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double tau = T / static_cast<double>(divs[i]);
    t.add({tau, divs[i], runs[i].leak_prob.back()});
    taus.push_back(tau);
    leaks.push_back(runs[i].leak_prob.back());
  }
  const auto smallest = static_cast<std::size_t>(std::min_element(taus.begin(), taus.end()) - taus.begin());
  CsvTable trace{{"cycle", "time", "leak_prob"}, {}};
  const double tau_min = taus[smallest];
  for (std::size_t c = 0; c < runs[smallest].leak_prob.size(); ++c)
    trace.add({static_cast<long long>(c + 1), tau_min * static_cast<double>(c + 1), runs[smallest].leak_prob[c]});

  // Ratios leak/tau^2 for the two smallest taus.
  std::vector<std::size_t> order(taus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return taus[a] < taus[b]; });
  const double q0 = leaks[order[0]] / (taus[order[0]] * taus[order[0]]);
  const double q1 = leaks[order[1]] / (taus[order[1]] * taus[order[1]]);

  bool positive = true;
  for (double l : leaks) positive = positive && l > 0;
  out.report = {{"total_time", T},
                {"initial", initial},
                {"free_leak_prob", free_leak},
                {"min_tau", tau_min},
                {"min_tau_leak_prob", leaks[smallest]},
                {"reduction_factor", leaks[smallest] > 0 ? json(free_leak / leaks[smallest]) : json(nullptr)},
                {"loglog_slope", positive ? json(loglog_slope(taus, leaks)) : json(nullptr)},
                {"tau2_ratio_variation", std::abs(q0 - q1) / std::max(q0, q1)}};
  out.tables.emplace_back("bangbang", std::move(t));
  out.tables.emplace_back("leak_trace", std::move(trace));
  return out;
}

// ---------------------------------------------------------------- leo-verify

ExperimentOutput leo_verify(const Context& ctx) {
  check_keys(ctx.exp, {"name", "samples", "K_max"});
  const long long samples = ctx.exp.integer("samples", 20);
  const long long K_max = ctx.exp.integer("K_max", 6);
  if (samples < 0) ctx.exp.fail("samples", "must be non-negative");
  if (K_max < 2 || K_max > 12) ctx.exp.fail("K_max", "must lie in [2, 12]");

  struct Row {
    int K, two_I;
    double dual, anti, invol, block, leak_norm;
  };
  auto evaluate = [](const SpinBathSpec& s) {
    const DressedFrame f = build_frame_N1(s);
    const CMatrix Re = leakage_elimination_op(s, f).dense();
    const CMatrix Rs = leakage_elimination_spectral(f).dense();
    const CMatrix HL = split_leakage(build_total(s, f.sector), f).leak.dense();
    const auto d = Re.rows();
    CMatrix B(d, d);
    Eigen::VectorXd expect = Eigen::VectorXd::Ones(d);
    B.col(0) = f.ket0.amps;
    B.col(1) = f.ket1.amps;
    expect(0) = expect(1) = -1.0;
    for (std::size_t k = 0; k < f.leak_modes.size(); ++k) B.col(static_cast<Eigen::Index>(k + 2)) = f.leak_modes[k].amps;
    const CMatrix inframe = B.adjoint() * Re * B;
    return Row{s.K,
               s.two_I,
               (Re - Rs).cwiseAbs().maxCoeff(),
               (Re * HL * Re + HL).norm(),
               (Re * Re - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff(),
               (inframe - CMatrix(expect.cast<cplx>().asDiagonal())).cwiseAbs().maxCoeff(),
               HL.norm()};
  };

  std::vector<Row> rows(static_cast<std::size_t>(samples) + (ctx.has_spec() ? 1 : 0));
  std::size_t offset = 0;
  if (ctx.has_spec()) {
    rows[0] = evaluate(ctx.spec());
    offset = 1;
  }
  parallel_for(static_cast<std::size_t>(samples), ctx.workers, [&](std::size_t i) {
    CounterRng rng(ctx.seed, kSampleStream * 1000003 + 500000 + i);
    const int K = rng.integer(2, static_cast<int>(K_max));
    const int two_I = rng.integer(1, 2);
    rows[offset + i] = evaluate(sample_spec(rng, K, two_I, true));
  });
  ExperimentOutput out;
  CsvTable t{{"index", "K", "two_I", "exp_vs_spectral", "anticommutator", "involution", "block_structure",
              "leak_norm"},
             {}};
  double md = 0, ma = 0, mi = 0, mb = 0, min_leak = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& w = rows[i];
    t.add({static_cast<long long>(i), static_cast<long long>(w.K), static_cast<long long>(w.two_I), w.dual, w.anti,
           w.invol, w.block, w.leak_norm});
    md = std::max(md, w.dual);
    ma = std::max(ma, w.anti);
    mi = std::max(mi, w.invol);
    mb = std::max(mb, w.block);
    min_leak = std::min(min_leak, w.leak_norm);
  }
  out.report = {{"count", rows.size()},
                {"max_exp_vs_spectral", md},
                {"max_anticommutator", ma},
                {"max_involution", mi},
                {"max_block_structure", mb},
                {"min_leak_norm", finite_or_null(min_leak)}};
  out.tables.emplace_back("leo", std::move(t));
  return out;
}

// ---------------------------------------------------------------- froehlich-check

ExperimentOutput froehlich_check(const Context& ctx) {
  check_keys(ctx.exp, {"name", "N", "ratios"});
  const SpinBathSpec spec = ctx.spec();
  const int N = static_cast<int>(ctx.exp.integer("N", 2));
  const std::vector<double> ratios = ctx.exp.numbers("ratios", {0.1, 0.05, 0.025});
  for (double x : ratios)
    if (!(x > 0)) ctx.exp.fail("ratios", "entries must be positive");
  if (N < 1 || N > spec.K * spec.two_I) ctx.exp.fail("N", "must lie in [1, 2KI]");
  if (spec.A_hf == 0.0) ctx.exp.fail("", "the spec needs A_hf != 0");
  const FroehlichCheck fc = froehlich_consistency(spec, N, ratios);

  ExperimentOutput out;
  CsvTable t{{"ratio", "F", "error"}, {}};
  for (const auto& p : fc.points) t.add({p.coupling_ratio, p.F, p.error});
  out.tables.emplace_back("froehlich", std::move(t));

  // First-order cancellation of the generator and V_eff on A_+|0>.
  const double F = spec.A_hf / ratios.front();
  const BasisPtr sector = enumerate_sector(spec, N);
  const LinearOp S = froehlich_generator(spec, F, sector);
  const LinearOp H0 = F * spin_op(spec, 0, Comp::z, sector);
  const LinearOp V = build_hyperfine(spec, sector).flipflop;
  const double gen_residual = (commutator(H0, S) + V).max_abs();
  const BasisPtr vac = nuclear_sector(spec, 0);
  const KetState zero = KetState::basis_state(vac, 0);
  const KetState one = collective_op(spec, spec.alpha, Comp::plus, vac).apply(zero);
  const LinearOp Veff = froehlich_effective(spec, F, one.basis);
  const double v_on_one = one.inner(Veff.apply(one)).real();
  const KetState lowered = collective_op(spec, spec.alpha, Comp::minus, one.basis).apply(one);
  const double oracle = -spec.A_hf * spec.A_hf * spec.I() / (2.0 * F) * lowered.amps.squaredNorm();
  out.report = {{"N", N},
                {"errors", [&] {
                   json e = json::array();
                   for (const auto& p : fc.points) e.push_back(p.error);
                   return e;
                 }()},
                {"error_ratios", fc.error_ratios},
                {"generator_residual", gen_residual},
                {"V_eff_on_one", v_on_one},
                {"V_eff_on_one_oracle", oracle}};
  return out;
}

// ---------------------------------------------------------------- BCS

ExperimentOutput bcs_uniform(const Context& ctx) {
  check_keys(ctx.exp, {"name", "K_values", "A_hf", "F", "b", "tol"});
  const std::vector<long long> Ks = ctx.exp.integers("K_values", {4, 8, 16, 32});
  const double A = ctx.exp.number("A_hf", 1.0);
  const double F = ctx.exp.number("F", 1.0);
  const double b = ctx.exp.number("b", 0.01);
  BcsOptions opt;
  opt.tol = ctx.exp.number("tol", opt.tol);
  if (F == 0.0) ctx.exp.fail("F", "must be non-zero");

  struct Job {
    long long K, n;
  };
  std::vector<Job> jobs;
  for (const long long K : Ks) {
    if (K < 2 || K > 4096) ctx.exp.fail("K_values", "entries must lie in [2, 4096]");
    for (long long n = 1; n < K; ++n) jobs.push_back({K, n});
  }
  std::vector<BcsSolution> sols(jobs.size());
  parallel_for(jobs.size(), ctx.workers, [&](std::size_t i) {
    sols[i] = solve_bcs(uniform_pairing_model(static_cast<int>(jobs[i].K), static_cast<double>(jobs[i].n), A, F, b), opt);
  });

  ExperimentOutput out;
  CsvTable t{{"K", "n", "delta", "closed_form", "abs_error", "v", "v_expected", "residual", "number_residual",
              "iterations"},
             {}};
  double max_err = 0.0, max_v_err = 0.0, max_res = 0.0;
  std::map<long long, std::pair<long long, double>> argmax;  // K -> (n, delta)
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto [K, n] = jobs[i];
    const BcsSolution& s = sols[i];
    const double g = A * A / (4.0 * F * static_cast<double>(K)) + b;
    const double closed = g * std::sqrt(static_cast<double>(n * (K - n)));
    const double v_exp = std::sqrt(static_cast<double>(n) / static_cast<double>(K));
    const double err = (s.delta.array() - closed).abs().maxCoeff();
    const double v_err = (s.v.array() - v_exp).abs().maxCoeff();
    max_err = std::max(max_err, err);
    max_v_err = std::max(max_v_err, v_err);
    max_res = std::max({max_res, s.residual, s.number_residual});
    t.add({K, n, s.delta.maxCoeff(), closed, err, s.v(0), v_exp, s.residual, s.number_residual,
           static_cast<long long>(s.iterations)});
    auto& best = argmax[K];
    if (best.first == 0 || s.delta.maxCoeff() > best.second + 1e-14) best = {n, s.delta.maxCoeff()};
  }
  json am = json::object();
  bool argmax_ok = true;
  for (const auto& [K, best] : argmax) {
    am[std::to_string(K)] = best.first;
    if (K % 2 == 0) argmax_ok = argmax_ok && best.first == K / 2;
  }
  out.report = {{"max_delta_error", max_err},
                {"max_v_error", max_v_err},
                {"max_residual", max_res},
                {"argmax_n", am},
                {"argmax_at_half_filling", argmax_ok}};
  out.tables.emplace_back("bcs_uniform", std::move(t));
  return out;
}

double dense_defect(const LinearOp& a, const LinearOp& b) { return (a.dense() - b.dense()).cwiseAbs().maxCoeff(); }

ExperimentOutput bcs_random(const Context& ctx) {
  check_keys(ctx.exp, {"name", "F", "n", "tol", "exact"});
  const SpinBathSpec spec = ctx.spec();
  const double F = ctx.exp.number("F", 1.0);
  const double n = ctx.exp.number("n", 0.5 * spec.K);
  BcsOptions opt;
  opt.tol = ctx.exp.number("tol", opt.tol);
  const PairingModel m = build_pairing_model(spec, F, n);
  const BcsSolution s = solve_bcs(m, opt);

  ExperimentOutput out;
  json& r = out.report;
  r["eps"] = to_json(m.eps);
  r["g"] = to_json(m.g);
  r["delta"] = to_json(s.delta);
  r["lambda"] = s.lambda;
  r["u"] = to_json(s.u);
  r["v"] = to_json(s.v);
  r["iterations"] = s.iterations;
  r["normal_state"] = s.normal_state;
  r["gap_residual"] = gap_equation_residual(m, s.delta, s.lambda);
  r["number_residual"] = number_equation_residual(m, s.delta, s.lambda);
  r["uv_normalization"] = (s.u.array().square() + s.v.array().square() - 1.0).abs().maxCoeff();

  const bool exact = ctx.exp.boolean("exact", spec.K <= 12);
  if (exact) {
    const Layout lay{spec.K, 1, false};
    const BasisPtr full = Basis::full(lay);
    const LinearOp Hs = pairing_hamiltonian(m, full);
    const LinearOp Hp = pairing_hamiltonian_pairs(m, full);
    r["dual_construction_defect"] = dense_defect(Hs, Hp);
    r["number_commutator"] = commutator(Hs, pair_number_ops(spec, full).n_nuclear).max_abs();
    const double nr = std::round(n);
    if (std::abs(nr - n) < 1e-12 && nr > 0 && nr < spec.K) {
      const SpectralGap g = exact_pairing_gap(m, static_cast<int>(nr));
      r["exact"] = {{"n", g.n},
                    {"ground", g.ground},
                    {"excitation_gap", finite_or_null(g.excitation_gap)},
                    {"ground_below", finite_or_null(g.ground_below)},
                    {"ground_above", finite_or_null(g.ground_above)}};
      const KetState bcs = bcs_state(m, s, static_cast<int>(nr));
      const LinearOp Hn = pairing_hamiltonian(m, bcs.basis);
      r["projected_bcs_energy"] = bcs.inner(Hn.apply(bcs)).real();
    }
  }
  return out;
}

ExperimentOutput gap_vs_filling_exp(const Context& ctx) {
  check_keys(ctx.exp, {"name", "K", "A_hf", "F", "b", "n_grid", "exact_gap", "tol"});
  UniformFamily fam;
  fam.K = static_cast<int>(ctx.exp.integer("K", 8));
  fam.A_hf = ctx.exp.number("A_hf", 1.0);
  fam.F = ctx.exp.number("F", 1.0);
  fam.b = ctx.exp.number("b", 0.0);
  if (fam.K < 2) ctx.exp.fail("K", "must be at least 2");
  if (fam.F == 0.0) ctx.exp.fail("F", "must be non-zero");
  std::vector<double> grid;
  for (int k = 0; k <= fam.K; ++k) grid.push_back(k);
  grid = ctx.exp.numbers("n_grid", grid);
  BcsOptions opt;
  opt.tol = ctx.exp.number("tol", opt.tol);

  std::vector<GapRow> rows(grid.size());
  parallel_for(grid.size(), ctx.workers, [&](std::size_t i) {
    rows[i] = gap_vs_filling(fam, std::span<const double>(&grid[i], 1), opt).front();
  });
  ExperimentOutput out;
  CsvTable t{{"n", "lambda", "delta_min", "delta_max", "residual", "iterations"}, {}};
  std::size_t best = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const GapRow& g = rows[i];
    t.add({g.n, g.lambda, g.delta_min, g.delta_max, g.residual, static_cast<long long>(g.iterations)});
    if (g.delta_max > rows[best].delta_max + 1e-14) best = i;
  }
  double sym = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j)
      if (std::abs(rows[i].n + rows[j].n - fam.K) < 1e-12)
        sym = std::max(sym, std::abs(rows[i].delta_max - rows[j].delta_max));
  out.report = {{"K", fam.K}, {"argmax_n", rows[best].n}, {"symmetry_defect", sym}};
  out.tables.emplace_back("gap_vs_filling", std::move(t));

  if (ctx.exp.boolean("exact_gap", fam.K <= 12)) {
    if (fam.K > 16) ctx.exp.fail("exact_gap", "exact diagonalization is limited to K <= 16");
    CsvTable p{{"n", "delta", "exact_gap", "condensation_energy"}, {}};
    std::vector<double> d, gap, d2, cond;
    bool positive = true;
    for (int n = 1; n < fam.K; ++n) {
      const PairingModel m = uniform_pairing_model(fam.K, n, fam.A_hf, fam.F, fam.b);
      const BcsSolution s = solve_bcs(m, opt);
      const SpectralGap g = exact_pairing_gap(m, n);
      PairingModel free = m;
      free.g.setZero();
      const double e_free = exact_pairing_gap(free, n).ground;
      const double delta = s.delta.maxCoeff();
      p.add({static_cast<double>(n), delta, g.excitation_gap, g.ground - e_free});
      if (delta > 0) positive = positive && g.excitation_gap > 0;
      d.push_back(delta);
      gap.push_back(g.excitation_gap);
      d2.push_back(delta * delta);
      cond.push_back(e_free - g.ground);
    }
    auto corr = [](const std::vector<double>& x, const std::vector<double>& y) -> json {
      const auto n = static_cast<Eigen::Index>(x.size());
      const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), n).array() -
                                Eigen::Map<const Eigen::VectorXd>(x.data(), n).mean();
      const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), n).array() -
                                Eigen::Map<const Eigen::VectorXd>(y.data(), n).mean();
      const double den = a.norm() * b.norm();
      const double scale = std::max(1.0, Eigen::Map<const Eigen::VectorXd>(y.data(), n).cwiseAbs().maxCoeff());
      if (b.norm() <= 1e-12 * scale * std::sqrt(static_cast<double>(n)) || den == 0.0) return nullptr;
      return a.dot(b) / den;
    };
    const auto gmin = *std::min_element(gap.begin(), gap.end());
    const auto gmax = *std::max_element(gap.begin(), gap.end());
    out.report["gap_protection"] = {{"gaps_positive_where_delta_positive", positive},
                                    {"min_exact_gap", gmin},
                                    {"max_exact_gap", gmax},
                                    {"corr_delta_exact_gap", corr(d, gap)},
                                    {"corr_delta2_condensation", corr(d2, cond)}};
    out.tables.emplace_back("gap_protection", std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------- two-qubit-check

ExperimentOutput two_qubit_check(const Context& ctx) {
  check_keys(ctx.exp, {"name", "J", "spec_b"});
  const SpinBathSpec a = ctx.spec();
  const SpinBathSpec b = ctx.exp.has("spec_b") ? spec_from_config(ctx.exp.child("spec_b"), ctx.seed ^ 0x5bd1e995ULL) : a;
  const double J = ctx.exp.number("J", 1.0);
  const TwoQubitReport t = two_qubit_phase_check(a, b, J);
  ExperimentOutput out;
  out.report = {{"J", t.J},
                {"product_dim", t.product_dim},
                {"rep_residual", t.rep_residual},
                {"propagation_residual", t.propagation_residual},
                {"gate", to_json(CMatrix(t.gate))},
                {"makhlin_G1", to_json(t.makhlin_G1)},
                {"makhlin_G2", t.makhlin_G2},
                {"cz_invariant_distance", t.cz_invariant_distance},
                {"leak_coupling", t.leak_coupling}};
  return out;
}

// ---------------------------------------------------------------- sector-crosscheck

std::size_t brute_force_count(int K, int two_I, int N) {
  // Odometer over every slot digit; independent of the enumeration code.
  std::vector<int> d(static_cast<std::size_t>(K) + 1, 0);
  std::size_t count = 0;
  while (true) {
    int s = 0;
    for (int x : d) s += x;
    if (s == N) ++count;
    std::size_t k = 0;
    while (k < d.size()) {
      const int lim = k == 0 ? 1 : two_I;
      if (++d[k] <= lim) break;
      d[k] = 0;
      ++k;
    }
    if (k == d.size()) break;
  }
  return count;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

ExperimentOutput sector_crosscheck(const Context& ctx) {
  check_keys(ctx.exp, {"name", "N", "time", "dims_K_max", "general_I_K_max"});
  const SpinBathSpec spec = ctx.spec();
  const int N = static_cast<int>(ctx.exp.integer("N", 1));
  const double t = ctx.exp.number("time", 2.0);
  const int dims_K = static_cast<int>(ctx.exp.integer("dims_K_max", 10));
  const int gen_K = static_cast<int>(ctx.exp.integer("general_I_K_max", 5));
  if (spec.K > 8) ctx.exp.fail("", "full-space evolution is limited to K <= 8 here");
  if (dims_K < 1 || dims_K > 16) ctx.exp.fail("dims_K_max", "must lie in [1, 16]");
  if (gen_K < 1 || gen_K > 8) ctx.exp.fail("general_I_K_max", "must lie in [1, 8]");

  const BasisPtr full = full_space(spec);
  const BasisPtr sector = enumerate_sector(spec, N);
  CounterRng rng(ctx.seed, kStateStream);
  KetState psi = KetState::zero(sector);
  for (Eigen::Index i = 0; i < psi.amps.size(); ++i) psi.amps(i) = cplx(rng.normal(), rng.normal());
  psi = psi.normalized();
  const LinearOp Hf = build_total(spec, full);
  const LinearOp Hs = build_total(spec, sector);
  const KetState a = propagate(Hf, embed(psi, full), t);
  const KetState b = embed(propagate(Hs, psi, t), full);
  const double fidelity = std::norm(a.inner(b));

  ExperimentOutput out;
  CsvTable dims{{"K", "two_I", "N", "dim", "expected", "match"}, {}};
  bool all_match = true;
  auto add = [&](int K, int two_I, int n, std::size_t expected) {
    const Layout lay{K, two_I, true};
    const std::size_t dim = Basis::sector(lay, n)->dim();
    const bool ok = dim == expected && sector_dimension(lay, n) == expected;
    all_match = all_match && ok;
    dims.add({static_cast<long long>(K), static_cast<long long>(two_I), static_cast<long long>(n),
              static_cast<long long>(dim), static_cast<long long>(expected), static_cast<long long>(ok)});
  };
  for (int K = 1; K <= dims_K; ++K)
    for (int n = 0; n <= K + 1; ++n) add(K, 1, n, static_cast<std::size_t>(binomial(K + 1, n)));
  for (int two_I = 2; two_I <= 3; ++two_I)
    for (int K = 1; K <= gen_K; ++K)
      for (int n = 0; n <= K * two_I + 1; ++n) add(K, two_I, n, brute_force_count(K, two_I, n));
  out.report = {{"N", N},
                {"time", t},
                {"full_dim", full->dim()},
                {"sector_dim", sector->dim()},
                {"fidelity", fidelity},
                {"infidelity", 1.0 - fidelity},
                {"restriction_defect", dense_defect(restrict_to(Hf, sector), Hs)},
                {"dimensions_match", all_match}};
  out.tables.emplace_back("dims", std::move(dims));
  return out;
}

struct Entry {
  std::string name;
  std::string description;
  ExperimentOutput (*run)(const Context&);
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = {
      {"frame-check", "dressed frame, closure and matrix representations (optionally over random specs)", frame_check},
      {"gate-compile", "pulse decomposition grid and compiled single-qubit gates", gate_compile},
      {"leakage-report", "Overhauser and dipolar coefficients, H_L, leak-ratio scaling with K", leakage_report},
      {"bangbang-sweep", "leak probability vs cycle time at fixed total time", bangbang_sweep},
      {"leo-verify", "exponential vs spectral R_L, anticommutation with H_L", leo_verify},
      {"froehlich-check", "effective V_eff spectrum vs exact H_D as A/F shrinks", froehlich_check},
      {"bcs-uniform", "uniform pairing model against the closed-form gap", bcs_uniform},
      {"bcs-random", "pairing model of a general spec: solver residuals and exact checks", bcs_random},
      {"gap-vs-filling", "gap table over pair filling and exact-spectrum gap protection", gap_vs_filling_exp},
      {"two-qubit-check", "S_z S_z coupling of two dressed qubits and its local invariants", two_qubit_check},
      {"sector-crosscheck", "full-space vs sector evolution and sector dimension counts", sector_crosscheck},
  };
  return r;
}

std::uint64_t seed_of(const ConfigDoc& doc, const RunOptions& opt) {
  if (opt.seed) return *opt.seed;
  if (!doc.root.contains("seed") || doc.root.at("seed").is_null()) return 0;
  const json& s = doc.root.at("seed");
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer() && s.get<long long>() >= 0) return static_cast<std::uint64_t>(s.get<long long>());
  doc.fail("/seed", "expected a non-negative integer");
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& e : registry()) n.push_back(e.name);
    return n;
  }();
  return names;
}

std::string describe_experiment(const std::string& name) {
  for (const auto& e : registry())
    if (e.name == name) return e.description;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

ExperimentOutput run_experiment(const ConfigDoc& doc, const RunOptions& options) {
  const Section root(doc, "");
  check_keys(root, {"seed", "spec", "experiment", "output"});
  const Section exp = root.child("experiment");
  const std::string name = exp.string("name");
  const auto it = std::find_if(registry().begin(), registry().end(), [&](const Entry& e) { return e.name == name; });
  if (it == registry().end()) {
    std::string list;
    for (const auto& n : experiment_names()) list += (list.empty() ? "" : ", ") + n;
    exp.fail("name", "unknown experiment '" + name + "' (available: " + list + ")");
  }
  if (name != "leo-verify" && !doc.root.contains("spec")) root.fail("spec", "missing required field");
  if (doc.root.contains("spec"))
    check_keys(root.child("spec"), {"K", "I", "two_I", "A_hf", "alpha", "zeeman", "dipolar"});
  const Context ctx{doc, exp, seed_of(doc, options), std::max(1, options.workers)};
  ExperimentOutput out = it->run(ctx);
  out.report["experiment"] = name;
  out.report["seed"] = ctx.seed;
  return out;
}

RunSummary run_config(const ConfigDoc& doc, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = seed_of(doc, options);
  std::filesystem::path dir = "out";
  std::set<std::string> formats{"csv", "json"};
  if (doc.root.contains("output")) {
    const Section o = Section(doc, "").child("output");
    check_keys(o, {"dir", "formats"});
    dir = o.string("dir", dir.string());
    if (o.has("formats")) {
      formats.clear();
      const json& f = o.value().at("formats");
      if (!f.is_array()) o.fail("formats", "expected a list such as [csv, json]");
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f[i].is_string() || (f[i] != "csv" && f[i] != "json"))
          o.fail("formats/" + std::to_string(i), "expected csv or json");
        formats.insert(f[i].get<std::string>());
      }
    }
  }
  if (options.out_dir) dir = *options.out_dir;

  const ExperimentOutput out = run_experiment(doc, options);
  std::filesystem::create_directories(dir);
  RunSummary summary;
  summary.out_dir = dir;
  auto write = [&](const std::string& file, const std::string& content) {
    const auto path = dir / file;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
    summary.files.push_back(path);
  };
  if (formats.count("json")) write("report.json", out.report.dump(2) + "\n");
  if (formats.count("csv"))
    for (const auto& [stem, table] : out.tables) write(stem + ".csv", table.render(seed));
  for (const auto& [file, text] : out.texts) write(file, text);

  summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json files = json::array();
  for (const auto& f : summary.files) files.push_back(f.filename().string());
  const json manifest = {{"experiment", out.report.at("experiment")},
                         {"seed", seed},
                         {"version", version_string()},
                         {"workers", std::max(1, options.workers)},
                         {"wall_time_s", summary.wall_time},
                         {"config", doc.root},
                         {"config_origin", doc.origin},
                         {"files", files}};
  write("manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace dressbath
