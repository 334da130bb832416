#include "dressbath/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dressbath/errors.hpp"
#include "dressbath/hamiltonians.hpp"

namespace dressbath {

namespace {

void require_detuning(double F) {
  if (F == 0.0) throw std::invalid_argument("singular detuning: F must be non-zero");
}

Layout bath_layout(int K) { return Layout{K, 1, false}; }

void check_model(const PairingModel& m) {
  if (m.K < 1 || m.eps.size() != m.K || m.g.rows() != m.K || m.g.cols() != m.K)
    throw std::invalid_argument("pairing model dimensions are inconsistent");
  if (!m.eps.allFinite() || !m.g.allFinite()) throw std::invalid_argument("pairing model must be finite");
  if ((m.g - m.g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.g.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("pairing couplings g must be symmetric");
}

struct Quasiparticles {
  Eigen::VectorXd xi;
  Eigen::VectorXd v2;
};

Quasiparticles quasiparticles(const PairingModel& m, const Eigen::VectorXd& delta, double lambda) {
  Quasiparticles q{Eigen::VectorXd(m.K), Eigen::VectorXd(m.K)};
  for (int i = 0; i < m.K; ++i) {
    const double e = m.eps(i) - lambda;
    q.xi(i) = std::hypot(e, delta(i));
    q.v2(i) = q.xi(i) > 0 ? 0.5 * (1.0 - e / q.xi(i)) : 0.5;
  }
  return q;
}

Eigen::VectorXd gap_map(const PairingModel& m, const Eigen::VectorXd& delta, const Eigen::VectorXd& xi) {
  Eigen::VectorXd ratio(m.K);
  for (int j = 0; j < m.K; ++j) ratio(j) = xi(j) > 0 ? delta(j) / xi(j) : 0.0;
  return 0.5 * m.g * ratio;
}

// Chemical potential solving sum_i v_i^2 = n by bisection.
double solve_lambda(const PairingModel& m, const Eigen::VectorXd& delta) {
  auto excess = [&](double lambda) { return quasiparticles(m, delta, lambda).v2.sum() - m.n_target; };
  const double spread = std::max({1.0, m.eps.cwiseAbs().maxCoeff(), delta.cwiseAbs().maxCoeff()});
  double lo = m.eps.minCoeff() - spread;
  double hi = m.eps.maxCoeff() + spread;
  for (int k = 0; excess(lo) > 0 && k < 200; ++k) lo -= spread * std::pow(2.0, k);
  for (int k = 0; excess(hi) < 0 && k < 200; ++k) hi += spread * std::pow(2.0, k);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (excess(mid) < 0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Delta = 0: levels filled from the bottom, a partially filled degenerate
// shell shares its occupation evenly and pins lambda.
BcsSolution normal_state(const PairingModel& m) {
  BcsSolution s;
  s.normal_state = true;
  s.delta = Eigen::VectorXd::Zero(m.K);
  std::vector<int> order(static_cast<std::size_t>(m.K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return m.eps(a) < m.eps(b); });
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(m.K);
  double left = m.n_target;
  std::size_t k = 0;
  s.lambda = m.eps(order.front());
  while (k < order.size() && left > 1e-15) {
    std::size_t end = k;
    while (end < order.size() && std::abs(m.eps(order[end]) - m.eps(order[k])) <= 1e-12) ++end;
    const double shell = static_cast<double>(end - k);
    const double take = std::min(shell, left);
    for (std::size_t j = k; j < end; ++j) occ(order[j]) = take / shell;
    left -= take;
    if (take < shell) {
      s.lambda = m.eps(order[k]);
    } else {
      s.lambda = end < order.size() ? 0.5 * (m.eps(order[k]) + m.eps(order[end])) : m.eps(order[k]);
    }
    k = end;
  }
  s.v = occ.cwiseSqrt();
  s.u = (Eigen::VectorXd::Ones(m.K) - occ).cwiseMax(0.0).cwiseSqrt();
  s.residual = 0.0;
  s.number_residual = std::abs(occ.sum() - m.n_target);
  return s;
}

}  // namespace

LinearOp froehlich_effective(const SpinBathSpec& spec, double F, BasisPtr nuclear_domain) {
  require_detuning(F);
  const double pref = -spec.A_hf * spec.A_hf * spec.I() / (2.0 * F) / spec.two_I;
  OpSum s;
  for (int i = 0; i < spec.K; ++i)
    for (int j = 0; j < spec.K; ++j) {
      const double c = pref * spec.alpha(i) * spec.alpha(j);
      if (c != 0.0) s.add(c, {{i + 1, Comp::plus}, {j + 1, Comp::minus}});
    }
  LinearOp op = s.build(std::move(nuclear_domain));
  op.mark_hermitian();
  return op;
}

LinearOp froehlich_generator(const SpinBathSpec& spec, double F, BasisPtr domain) {
  require_detuning(F);
  const double pref = -(spec.A_hf / F) * std::sqrt(spec.I() / 2.0) / spec.sqrt_2I();
  OpSum s;
  for (int i = 0; i < spec.K; ++i) {
    const double c = pref * spec.alpha(i);
    if (c == 0.0) continue;
    s.add(c, {{i + 1, Comp::minus}, {0, Comp::plus}});
    s.add(-c, {{i + 1, Comp::plus}, {0, Comp::minus}});
  }
  return s.build(std::move(domain));
}

FroehlichCheck froehlich_consistency(const SpinBathSpec& spec, int N, std::span<const double> ratios) {
  spec.validate();
  FroehlichCheck out;
  out.N = N;
  const BasisPtr sector = enumerate_sector(spec, N);
  const BasisPtr bath = nuclear_sector(spec, N);
  const auto low = static_cast<Eigen::Index>(bath->dim());
  for (double r : ratios) {
    if (!(r > 0)) throw std::invalid_argument("coupling ratios must be positive");
    const double F = spec.A_hf / r;
    Eigen::SelfAdjointEigenSolver<CMatrix> exact(build_dominant(spec, F, sector).dense(),
                                                 Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<CMatrix> eff(froehlich_effective(spec, F, bath).dense(),
                                               Eigen::EigenvaluesOnly);
    const Eigen::VectorXd shift_exact = exact.eigenvalues().head(low).array() + F / 2.0;
    const Eigen::VectorXd& shift_eff = eff.eigenvalues();
    const double scale = shift_eff.cwiseAbs().maxCoeff();
    out.points.push_back({r, F, (shift_exact - shift_eff).cwiseAbs().maxCoeff() / scale});
  }
  for (std::size_t k = 1; k < out.points.size(); ++k)
    out.error_ratios.push_back(out.points[k - 1].error / out.points[k].error);
  return out;
}

PairingModel build_pairing_model(const SpinBathSpec& spec, double F, double n_target) {
  spec.validate();
  if (spec.two_I != 1) throw Unsupported("the pairing description is implemented for I = 1/2 only");
  require_detuning(F);
  PairingModel m;
  m.K = spec.K;
  m.b = spec.b;
  m.n_target = n_target;
  m.eps.resize(spec.K);
  for (int i = 0; i < spec.K; ++i) {
    double s = 0.0;
    for (int j = 0; j < spec.K; ++j)
      if (j != i) s += spec.b(i, j) + spec.b(j, i);
    m.eps(i) = -spec.A_hf * spec.alpha(i) / 2.0 - 2.0 * s;
  }
  m.g = (spec.A_hf * spec.A_hf / (4.0 * F)) * spec.alpha * spec.alpha.transpose() + spec.b;
  return m;
}

PairingModel uniform_pairing_model(int K, double n_target, double A_hf, double F, double b) {
  require_detuning(F);
  if (K < 1) throw std::invalid_argument("K must be positive");
  PairingModel m;
  m.K = K;
  m.n_target = n_target;
  m.b = Eigen::MatrixXd::Constant(K, K, b);
  const double a = 1.0 / std::sqrt(static_cast<double>(K));
  m.eps = Eigen::VectorXd::Constant(K, -A_hf * a / 2.0 - 4.0 * (K - 1) * b);
  m.g = Eigen::MatrixXd::Constant(K, K, A_hf * A_hf / (4.0 * F * K) + b);
  return m;
}

LinearOp pairing_hamiltonian(const PairingModel& model, BasisPtr nuclear_domain) {
  check_model(model);
  if (!(nuclear_domain->layout() == bath_layout(model.K)))
    throw ContractViolation("pairing Hamiltonian needs a spin-1/2 bath basis of size K");
  OpSum s;
  auto add_n = [&s](double c, int site) {  // c (I_z + 1/2)
    s.add(c, {{site, Comp::z}});
    s.add(0.5 * c, {});
  };
  for (int i = 0; i < model.K; ++i) add_n(model.eps(i), i + 1);
  for (int i = 0; i < model.K; ++i)
    for (int j = 0; j < model.K; ++j) {
      if (i == j) continue;
      const double c = -2.0 * model.b(i, j);
      if (c != 0.0) {
        // c n_i n_j = c (Iz_i Iz_j + Iz_i/2 + Iz_j/2 + 1/4)
        s.add(c, {{i + 1, Comp::z}, {j + 1, Comp::z}});
        s.add(0.5 * c, {{i + 1, Comp::z}});
        s.add(0.5 * c, {{j + 1, Comp::z}});
        s.add(0.25 * c, {});
      }
      if (model.g(i, j) != 0.0) s.add(-model.g(i, j), {{i + 1, Comp::plus}, {j + 1, Comp::minus}});
    }
  LinearOp op = s.build(std::move(nuclear_domain));
  op.mark_hermitian();
  return op;
}

LinearOp pairing_hamiltonian_pairs(const PairingModel& model, BasisPtr nuclear_domain) {
  check_model(model);
  if (!(nuclear_domain->layout() == bath_layout(model.K)))
    throw ContractViolation("pairing Hamiltonian needs a spin-1/2 bath basis of size K");
  const Basis& basis = *nuclear_domain;
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<std::uint8_t> moved(static_cast<std::size_t>(model.K));
  for (std::size_t c = 0; c < basis.dim(); ++c) {
    const auto occ = basis.config(c);
    double diag = 0.0;
    for (int i = 0; i < model.K; ++i) {
      if (!occ[i]) continue;
      diag += model.eps(i);
      for (int j = 0; j < model.K; ++j)
        if (j != i && occ[j]) diag -= 2.0 * model.b(i, j);
    }
    trip.emplace_back(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c), diag);
    // pair transfer j -> i
    for (int j = 0; j < model.K; ++j) {
      if (!occ[j]) continue;
      for (int i = 0; i < model.K; ++i) {
        if (i == j || occ[i] || model.g(i, j) == 0.0) continue;
        std::copy(occ.begin(), occ.end(), moved.begin());
        moved[j] = 0;
        moved[i] = 1;
        const auto r = basis.find(moved);
        if (!r) throw ContractViolation("pair transfer left the basis");
        trip.emplace_back(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(c), -model.g(i, j));
      }
    }
  }
  const auto d = static_cast<Eigen::Index>(basis.dim());
  SparseOp m(d, d);
  m.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(nuclear_domain, nuclear_domain, std::move(m), true);
}

double gap_equation_residual(const PairingModel& model, const Eigen::VectorXd& delta, double lambda) {
  const auto q = quasiparticles(model, delta, lambda);
  return (delta - gap_map(model, delta, q.xi)).cwiseAbs().maxCoeff();
}

double number_equation_residual(const PairingModel& model, const Eigen::VectorXd& delta, double lambda) {
  return std::abs(quasiparticles(model, delta, lambda).v2.sum() - model.n_target);
}

BcsSolution solve_bcs(const PairingModel& model, const BcsOptions& options) {
  check_model(model);
  if (!(model.n_target > 0.0 && model.n_target < model.K))
    throw RangeError("pair number n must lie in (0, K)");
  if (model.g.maxCoeff() <= 0.0) return normal_state(model);

  const double fill = std::sqrt(model.n_target * (model.K - model.n_target));
  Eigen::VectorXd delta = (model.g.rowwise().sum() / model.K * fill).cwiseMax(0.0);
  if (delta.maxCoeff() <= 0.0) delta.setConstant(model.g.maxCoeff() * fill);

  BcsSolution s;
  double damping = options.damping;
  double previous = std::numeric_limits<double>::infinity();
  double lambda = 0.0;
  for (int it = 1; it <= options.max_iter; ++it) {
    lambda = solve_lambda(model, delta);
    const auto q = quasiparticles(model, delta, lambda);
    const Eigen::VectorXd target = gap_map(model, delta, q.xi);
    const double res = (target - delta).cwiseAbs().maxCoeff();
    s.residual_history.push_back(res);
    s.iterations = it;
    if (res < options.tol) break;
    if (res > previous) damping = std::max(1e-3, 0.5 * damping);
    previous = res;
    delta = (1.0 - damping) * delta + damping * target;
    if (delta.cwiseAbs().maxCoeff() < 1e-14) {
      BcsSolution n = normal_state(model);
      n.iterations = it;
      n.residual_history = std::move(s.residual_history);
      return n;
    }
    if (it == options.max_iter) {
      std::ostringstream os;
      os << "BCS iteration did not converge in " << options.max_iter << " steps; last residuals:";
      const std::size_t n = s.residual_history.size();
      for (std::size_t k = n > 5 ? n - 5 : 0; k < n; ++k) os << ' ' << s.residual_history[k];
      throw ConvergenceError(os.str());
    }
  }
  s.delta = delta;
  s.lambda = solve_lambda(model, delta);
  const auto q = quasiparticles(model, delta, s.lambda);
  s.v = q.v2.cwiseSqrt();
  s.u = (Eigen::VectorXd::Ones(model.K) - q.v2).cwiseMax(0.0).cwiseSqrt();
  s.residual = gap_equation_residual(model, delta, s.lambda);
  s.number_residual = number_equation_residual(model, delta, s.lambda);
  return s;
}

KetState bcs_state(const PairingModel& model, const BcsSolution& sol, std::optional<int> project_n) {
  const Layout layout = bath_layout(model.K);
  const BasisPtr basis = project_n ? Basis::sector(layout, *project_n) : Basis::full(layout);
  KetState psi = KetState::zero(basis);
  for (std::size_t c = 0; c < basis->dim(); ++c) {
    const auto occ = basis->config(c);
    double a = 1.0;
    for (int i = 0; i < model.K && a != 0.0; ++i) a *= occ[i] ? sol.v(i) : sol.u(i);
    psi.amps(static_cast<Eigen::Index>(c)) = a;
  }
  if (psi.norm() == 0.0) throw ContractViolation("BCS state has no weight in the requested sector");
  return psi.normalized();
}

std::vector<GapRow> gap_vs_filling(const UniformFamily& family, std::span<const double> n_grid,
                                   const BcsOptions& options) {
  std::vector<GapRow> rows;
  rows.reserve(n_grid.size());
  for (double n : n_grid) {
    const PairingModel m = uniform_pairing_model(family.K, n, family.A_hf, family.F, family.b);
    if (!(n > 0.0 && n < family.K)) {
      const BcsSolution s = normal_state(m);
      rows.push_back({n, s.lambda, 0.0, 0.0, 0.0, 0});
      continue;
    }
    const BcsSolution s = solve_bcs(m, options);
    rows.push_back({n, s.lambda, s.delta.minCoeff(), s.delta.maxCoeff(), s.residual, s.iterations});
  }
  return rows;
}

SpectralGap exact_pairing_gap(const PairingModel& model, int n) {
  const Layout layout = bath_layout(model.K);
  auto spectrum = [&](int sector) -> Eigen::VectorXd {
    if (sector < 0 || sector > model.K) return {};
    const BasisPtr basis = Basis::sector(layout, sector);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        pairing_hamiltonian(model, basis).dense().real(), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SpectralGap g;
  g.n = n;
  const Eigen::VectorXd here = spectrum(n);
  if (here.size() == 0) throw RangeError("pair number outside [0, K]");
  g.ground = here(0);
  g.excitation_gap = here.size() > 1 ? here(1) - here(0) : nan;
  const Eigen::VectorXd below = spectrum(n - 1);
  const Eigen::VectorXd above = spectrum(n + 1);
  g.ground_below = below.size() ? below(0) : nan;
  g.ground_above = above.size() ? above(0) : nan;
  return g;
}

}  // namespace dressbath
