#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dressbath/errors.hpp"
#include "dressbath/hamiltonians.hpp"
#include "dressbath/pairing.hpp"
#include "oracle.hpp"

using namespace dressbath;

namespace {

SpinBathSpec half_spec(dressbath::CounterRng& rng, int K, double b_scale) {
  SpinBathSpec s = SpinBathSpec::with_alpha(oracle::random_unit(rng, K), 1, rng.uniform(0.5, 1.5));
  s.b = oracle::random_symmetric(rng, K, b_scale);
  return s;
}

// H_eff on the full bath space from Kronecker products.
CMatrix dense_pairing(const PairingModel& m) {
  const SpinBathSpec s = SpinBathSpec::uniform(m.K);
  const oracle::Ops o(s, false);
  CMatrix h = o.zero();
  std::vector<CMatrix> n;
  for (int i = 1; i <= m.K; ++i) n.push_back(o.I(i, 'z') + 0.5 * o.id());
  for (int i = 0; i < m.K; ++i) {
    h += m.eps(i) * n[i];
    for (int j = 0; j < m.K; ++j) {
      if (i == j) continue;
      h -= 2.0 * m.b(i, j) * n[i] * n[j];
      h -= m.g(i, j) * o.I(i + 1, '+') * o.I(j + 1, '-');
    }
  }
  return h;
}

double expectation(const LinearOp& H, const KetState& psi) { return psi.inner(H.apply(psi)).real(); }

}  // namespace

TEST_CASE("froehlich_effective") {
  dressbath::CounterRng rng(41, 1);
  SUBCASE("zero coupling") {
    SpinBathSpec s = SpinBathSpec::uniform(4, 1, 0.0);
    CHECK(froehlich_effective(s, 2.0, nuclear_full_space(s)).max_abs() == 0.0);
  }
  SUBCASE("singular detuning") {
    const SpinBathSpec s = SpinBathSpec::uniform(3);
    CHECK_THROWS_AS(froehlich_effective(s, 0.0, nuclear_full_space(s)), std::invalid_argument);
    CHECK_THROWS_AS(froehlich_generator(s, 0.0, full_space(s)), std::invalid_argument);
  }
  SUBCASE("dense oracle") {
    for (int two_I = 1; two_I <= 3; ++two_I) {
      const int K = two_I == 3 ? 3 : 4;
      const SpinBathSpec s = oracle::random_spec(rng, K, two_I);
      const double F = rng.uniform(1.0, 4.0);
      const oracle::Ops o(s, false);
      const CMatrix ref = -(s.A_hf * s.A_hf * s.I() / (2.0 * F)) * o.A(s.alpha, '+') * o.A(s.alpha, '-');
      const BasisPtr full = nuclear_full_space(s);
      const LinearOp V = froehlich_effective(s, F, full);
      CHECK(V.is_hermitian());
      CHECK(oracle::max_abs(V.dense() - oracle::restrict(ref, *full, *full)) < 1e-12);
      for (int n = 0; n <= K * two_I; ++n) {
        const BasisPtr sec = nuclear_sector(s, n);
        CHECK(oracle::max_abs(froehlich_effective(s, F, sec).dense() - oracle::restrict(ref, *sec, *sec)) < 1e-12);
      }
    }
  }
  SUBCASE("<1|V|1> = -(A^2 I/2F) ||A_- |1>||^2") {
    const SpinBathSpec s = oracle::random_spec(rng, 5, 2);
    const double F = 3.0;
    const BasisPtr vac = nuclear_sector(s, 0);
    const KetState one =
        collective_op(s, s.alpha, Comp::plus, vac).apply(KetState::basis_state(vac, 0)).normalized();
    const double v = expectation(froehlich_effective(s, F, one.basis), one);
    const KetState low = collective_op(s, s.alpha, Comp::minus, one.basis).apply(one);
    CHECK(v == doctest::Approx(-s.A_hf * s.A_hf * s.I() / (2.0 * F) * low.amps.squaredNorm()).epsilon(1e-12));
    CHECK(v < 0.0);
  }
}

TEST_CASE("froehlich generator cancels the flip-flop term") {
  dressbath::CounterRng rng(43, 1);
  for (int two_I = 1; two_I <= 2; ++two_I) {
    const SpinBathSpec s = oracle::random_spec(rng, 4, two_I);
    const double F = rng.uniform(2.0, 5.0);
    const oracle::Ops o(s);
    const CMatrix Sref = -(s.A_hf / F) * std::sqrt(s.I() / 2.0) *
                         (o.A(s.alpha, '-') * o.S('+') - o.A(s.alpha, '+') * o.S('-'));
    const CMatrix H0 = F * o.S('z');
    const CMatrix V = oracle::flipflop(s);
    CHECK(oracle::max_abs(H0 * Sref - Sref * H0 + V) < 1e-12);
    CHECK(oracle::max_abs(Sref + Sref.adjoint()) < 1e-14);
    for (int N = 0; N <= s.K * two_I + 1; ++N) {
      const BasisPtr sec = enumerate_sector(s, N);
      const LinearOp S = froehlich_generator(s, F, sec);
      CHECK(oracle::max_abs(S.dense() - oracle::restrict(Sref, *sec, *sec)) < 1e-12);
      const LinearOp R = commutator(F * spin_op(s, 0, Comp::z, sec), S) + build_hyperfine(s, sec).flipflop;
      CHECK(R.max_abs() < 1e-12);
    }
  }
}

TEST_CASE("froehlich_consistency is second order") {
  dressbath::CounterRng rng(47, 1);
  const std::vector<double> ratios{0.1, 0.05, 0.025};
  for (int two_I = 1; two_I <= 2; ++two_I) {
    const SpinBathSpec s = oracle::random_spec(rng, 4, two_I, 0.0);
    const FroehlichCheck fc = froehlich_consistency(s, 2, ratios);
    REQUIRE(fc.points.size() == 3);
    REQUIRE(fc.error_ratios.size() == 2);
    for (std::size_t k = 0; k < 3; ++k) CHECK(fc.points[k].F == doctest::Approx(s.A_hf / ratios[k]));
    for (double r : fc.error_ratios) CHECK(std::abs(r - 4.0) < 1.0);
    CHECK(fc.points.back().error < 0.05);
  }
  const SpinBathSpec s = SpinBathSpec::uniform(3);
  const std::vector<double> bad{0.1, -0.1};
  CHECK_THROWS_AS(froehlich_consistency(s, 1, bad), std::invalid_argument);
}

TEST_CASE("build_pairing_model") {
  dressbath::CounterRng rng(53, 1);
  SUBCASE("no coupling") {
    const PairingModel m = build_pairing_model(SpinBathSpec::uniform(5, 1, 0.0), 1.0, 2.0);
    CHECK(m.eps.cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.g.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("explicit formulas") {
    const SpinBathSpec s = half_spec(rng, 6, 0.05);
    const double F = 1.7;
    const PairingModel m = build_pairing_model(s, F, 3.0);
    CHECK(m.K == 6);
    CHECK(m.n_target == 3.0);
    for (int i = 0; i < 6; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 6; ++j)
        if (j != i) sum += 2.0 * s.b(i, j);
      CHECK(std::abs(m.eps(i) - (-s.A_hf * s.alpha(i) / 2.0 - 2.0 * sum)) < 1e-12);
      for (int j = 0; j < 6; ++j)
        CHECK(std::abs(m.g(i, j) - (s.A_hf * s.A_hf / (4.0 * F) * s.alpha(i) * s.alpha(j) + s.b(i, j))) < 1e-12);
    }
    CHECK((m.g - m.g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("uniform profile") {
    const int K = 7;
    const double A = 1.3, F = 2.1, b = 0.02;
    SpinBathSpec s = SpinBathSpec::uniform(K, 1, A);
    s.b = Eigen::MatrixXd::Constant(K, K, b);
    s.b.diagonal().setZero();
    const PairingModel m = build_pairing_model(s, F, 2.0);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        if (i != j) CHECK(std::abs(m.g(i, j) - (A * A / (4.0 * F * K) + b)) < 1e-12);
    const PairingModel u = uniform_pairing_model(K, 2.0, A, F, b);
    CHECK((u.g - Eigen::MatrixXd::Constant(K, K, A * A / (4.0 * F * K) + b)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((u.eps.array() - (-A / (2.0 * std::sqrt(double(K))) - 4.0 * (K - 1) * b)).abs().maxCoeff() < 1e-14);
    CHECK((m.eps - u.eps).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_pairing_model(SpinBathSpec::uniform(3, 2), 1.0, 1.0), Unsupported);
    CHECK_THROWS_AS(build_pairing_model(SpinBathSpec::uniform(3), 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(uniform_pairing_model(3, 1.0, 1.0, 0.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("pairing Hamiltonian constructions agree") {
  dressbath::CounterRng rng(59, 1);
  for (int K = 2; K <= 7; ++K) {
    const SpinBathSpec s = half_spec(rng, K, 0.1);
    const PairingModel m = build_pairing_model(s, rng.uniform(0.5, 3.0), 1.0);
    const CMatrix ref = dense_pairing(m);
    const BasisPtr full = nuclear_full_space(s);
    const LinearOp a = pairing_hamiltonian(m, full);
    const LinearOp b = pairing_hamiltonian_pairs(m, full);
    CHECK(a.is_hermitian());
    CHECK(oracle::max_abs(a.dense() - b.dense()) < 1e-12);
    CHECK(oracle::max_abs(a.dense() - oracle::restrict(ref, *full, *full)) < 1e-12);
    const LinearOp n = pair_number_ops(s, full).n_nuclear;
    CHECK(commutator(a, n).max_abs() < 1e-12);
    for (int k = 0; k <= K; ++k) {
      const BasisPtr sec = nuclear_sector(s, k);
      CHECK(oracle::max_abs(pairing_hamiltonian(m, sec).dense() - pairing_hamiltonian_pairs(m, sec).dense()) < 1e-12);
      CHECK(oracle::max_abs(pairing_hamiltonian(m, sec).dense() - oracle::restrict(ref, *sec, *sec)) < 1e-12);
    }
  }
  const PairingModel m = uniform_pairing_model(3, 1.0, 1.0, 1.0, 0.0);
  CHECK_THROWS_AS(pairing_hamiltonian(m, nuclear_full_space(SpinBathSpec::uniform(4))), ContractViolation);
  CHECK_THROWS_AS(pairing_hamiltonian(m, full_space(SpinBathSpec::uniform(3))), ContractViolation);
  PairingModel asym = m;
  asym.g(0, 1) += 0.1;
  CHECK_THROWS_AS(pairing_hamiltonian(asym, nuclear_full_space(SpinBathSpec::uniform(3))), std::invalid_argument);
}

TEST_CASE("solve_bcs uniform closed form") {
  const PairingModel ex = uniform_pairing_model(4, 2.0, 1.0, 1.0, 0.0);
  const BcsSolution e = solve_bcs(ex);
  CHECK(!e.normal_state);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(e.delta(i) - 0.125) < 1e-8);

  dressbath::CounterRng rng(61, 1);
  for (int K : {2, 3, 5, 8, 13, 20, 32}) {
    for (int trial = 0; trial < 3; ++trial) {
      const int n = rng.integer(1, K - 1);
      const double A = rng.uniform(0.5, 2.0), F = rng.uniform(0.5, 4.0), b = rng.uniform(0.0, 0.05);
      const PairingModel m = uniform_pairing_model(K, n, A, F, b);
      const BcsSolution s = solve_bcs(m);
      const double gap = (A * A / (4.0 * F * K) + b) * std::sqrt(double(n) * (K - n));
      CAPTURE(K);
      CAPTURE(n);
      CHECK((s.delta.array() - gap).abs().maxCoeff() < 1e-8);
      CHECK((s.v.array() - std::sqrt(double(n) / K)).abs().maxCoeff() < 1e-8);
      CHECK((s.u.array() - std::sqrt(1.0 - double(n) / K)).abs().maxCoeff() < 1e-8);
      // eps - lambda = xi (1 - 2n/K) with xi = g K / 2
      const double G = m.g(0, 0);
      CHECK(std::abs(m.eps(0) - s.lambda - 0.5 * G * K * (1.0 - 2.0 * n / K)) < 1e-8);
    }
  }
}

TEST_CASE("solve_bcs residuals and normalization") {
  dressbath::CounterRng rng(67, 1);
  for (int trial = 0; trial < 8; ++trial) {
    const int K = rng.integer(3, 10);
    const SpinBathSpec s = half_spec(rng, K, 0.02);
    const double n = rng.uniform(0.5, K - 0.5);
    const PairingModel m = build_pairing_model(s, rng.uniform(0.3, 1.0), n);
    const BcsSolution sol = solve_bcs(m);
    if (sol.normal_state) continue;
    CHECK(sol.residual < 1e-10);
    CHECK(sol.number_residual < 1e-10);
    CHECK(sol.delta.minCoeff() >= 0.0);
    double worst = 0.0, count = 0.0;
    for (int i = 0; i < K; ++i) {
      double rhs = 0.0;
      for (int j = 0; j < K; ++j) rhs += 0.5 * m.g(i, j) * sol.delta(j) / std::hypot(m.eps(j) - sol.lambda, sol.delta(j));
      worst = std::max(worst, std::abs(sol.delta(i) - rhs));
      const double xi = std::hypot(m.eps(i) - sol.lambda, sol.delta(i));
      CHECK(xi > 0.0);
      const double v2 = 0.5 * (1.0 - (m.eps(i) - sol.lambda) / xi);
      CHECK(std::abs(sol.v(i) * sol.v(i) - v2) < 1e-12);
      CHECK(std::abs(sol.u(i) * sol.u(i) + sol.v(i) * sol.v(i) - 1.0) < 1e-12);
      count += v2;
    }
    CHECK(worst < 1e-10);
    CHECK(std::abs(count - n) < 1e-10);
    CHECK(gap_equation_residual(m, sol.delta, sol.lambda) < 1e-10);
    CHECK(number_equation_residual(m, sol.delta, sol.lambda) < 1e-10);
    CHECK(sol.residual_history.size() == static_cast<std::size_t>(sol.iterations));
  }
}

TEST_CASE("solve_bcs edge cases") {
  SUBCASE("no pairing gives the filled normal state") {
    PairingModel m;
    m.K = 4;
    m.eps = Eigen::Vector4d(0.3, -0.2, 0.5, -0.7);
    m.g = Eigen::MatrixXd::Zero(4, 4);
    m.b = m.g;
    m.n_target = 2.0;
    const BcsSolution s = solve_bcs(m);
    CHECK(s.normal_state);
    CHECK(s.delta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.v(3) == 1.0);
    CHECK(s.v(1) == 1.0);
    CHECK(s.v(0) == 0.0);
    CHECK(s.v(2) == 0.0);
    CHECK(s.lambda > -0.2);
    CHECK(s.lambda < 0.3);
    // fully occupied levels factorize without error
    const KetState psi = bcs_state(m, s);
    const std::vector<std::uint8_t> occ{0, 1, 0, 1};
    const KetState ref = KetState::from_config(psi.basis, occ);
    CHECK(std::abs(std::abs(ref.inner(psi)) - 1.0) < 1e-14);
  }
  SUBCASE("degenerate shell shares the filling") {
    PairingModel m = uniform_pairing_model(4, 1.0, 1.0, 1.0, 0.0);
    m.g.setZero();
    const BcsSolution s = solve_bcs(m);
    CHECK(s.normal_state);
    CHECK((s.v.array().square() - 0.25).abs().maxCoeff() < 1e-14);
    CHECK(s.number_residual < 1e-14);
  }
  SUBCASE("filling outside (0, K)") {
    for (double n : {0.0, -1.0, 4.0, 5.0})
      CHECK_THROWS_AS(solve_bcs(uniform_pairing_model(4, n, 1.0, 1.0, 0.0)), RangeError);
  }
  SUBCASE("iteration budget") {
    dressbath::CounterRng rng(71, 1);
    const PairingModel m = build_pairing_model(half_spec(rng, 6, 0.02), 0.5, 2.5);
    BcsOptions o;
    o.max_iter = 2;
    o.tol = 1e-15;
    CHECK_THROWS_AS(solve_bcs(m, o), ConvergenceError);
  }
}

TEST_CASE("bcs_state") {
  SUBCASE("v = 0 is the polarized bath") {
    const PairingModel m = uniform_pairing_model(5, 1.0, 1.0, 1.0, 0.0);
    BcsSolution s;
    s.v = Eigen::VectorXd::Zero(5);
    s.u = Eigen::VectorXd::Ones(5);
    const KetState psi = bcs_state(m, s);
    const std::vector<std::uint8_t> vac(5, 0);
    CHECK(std::abs(KetState::from_config(psi.basis, vac).inner(psi) - 1.0) < 1e-15);
    CHECK_THROWS_AS(bcs_state(m, s, 2), ContractViolation);
  }
  SUBCASE("uniform projection is the collective pair state") {
    for (int K = 2; K <= 12; K += 2) {
      for (int n = 1; n < K; ++n) {
        const PairingModel m = uniform_pairing_model(K, n, 1.0, 1.5, 0.01);
        const BcsSolution sol = solve_bcs(m);
        const KetState proj = bcs_state(m, sol, n);
        const SpinBathSpec spec = SpinBathSpec::uniform(K);
        BasisPtr cur = nuclear_sector(spec, 0);
        KetState ref = KetState::basis_state(cur, 0);
        for (int k = 0; k < n; ++k) ref = collective_op(spec, spec.alpha, Comp::plus, ref.basis).apply(ref);
        ref = ref.normalized();
        REQUIRE(ref.basis->same_space(*proj.basis));
        CHECK(std::abs(std::abs(ref.inner(proj)) - 1.0) < 1e-10);
      }
    }
  }
  SUBCASE("full state has mean pair number n") {
    dressbath::CounterRng rng(73, 1);
    const SpinBathSpec s = half_spec(rng, 6, 0.02);
    const PairingModel m = build_pairing_model(s, 0.6, 2.7);
    const BcsSolution sol = solve_bcs(m);
    const KetState psi = bcs_state(m, sol);
    CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
    CHECK(std::abs(expectation(pair_number_ops(s, psi.basis).n_nuclear, psi) - 2.7) < 1e-9);
  }
  SUBCASE("projected energy lies below every basis configuration") {
    for (int K : {4, 6, 9}) {
      const int n = K / 2;
      const PairingModel m = uniform_pairing_model(K, n, 1.0, 0.8, 0.01);
      const KetState psi = bcs_state(m, solve_bcs(m), n);
      const LinearOp H = pairing_hamiltonian(m, psi.basis);
      const double e = expectation(H, psi);
      for (std::size_t c = 0; c < psi.basis->dim(); ++c)
        CHECK(e <= expectation(H, KetState::basis_state(psi.basis, c)) + 1e-10);
    }
  }
}

TEST_CASE("gap_vs_filling") {
  UniformFamily fam;
  fam.K = 10;
  fam.F = 0.7;
  fam.b = 0.005;
  std::vector<double> grid;
  for (int k = 1; k < 20; ++k) grid.push_back(0.5 * k);
  const auto rows = gap_vs_filling(fam, grid);
  REQUIRE(rows.size() == grid.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].residual < 1e-10);
    CHECK(rows[k].delta_max - rows[k].delta_min < 1e-10);
    if (rows[k].delta_max > rows[best].delta_max) best = k;
  }
  CHECK(rows[best].n == 5.0);
  for (std::size_t k = 0; k < rows.size(); ++k)
    CHECK(std::abs(rows[k].delta_max - rows[rows.size() - 1 - k].delta_max) < 1e-9);

  const std::vector<double> edge{0.0, 1e-8, 1e-4, 10.0};
  const auto e = gap_vs_filling(fam, edge);
  CHECK(e[0].delta_max == 0.0);
  CHECK(e[1].delta_max < e[2].delta_max);
  CHECK(e[2].delta_max < 1e-2);
  CHECK(e[3].delta_max == 0.0);
}

TEST_CASE("exact pairing gap") {
  for (int K : {4, 6, 8, 10, 12}) {
    for (int n = 1; n < K; ++n) {
      const PairingModel m = uniform_pairing_model(K, n, 1.0, 1.0, 0.01);
      const BcsSolution sol = solve_bcs(m);
      const SpectralGap g = exact_pairing_gap(m, n);
      CHECK(sol.delta.maxCoeff() > 0.0);
      CHECK(g.excitation_gap > 1e-8);
      CHECK(std::isfinite(g.ground_below));
      CHECK(std::isfinite(g.ground_above));
    }
  }
  const PairingModel m = uniform_pairing_model(4, 2.0, 1.0, 1.0, 0.0);
  // the fully symmetric state: eps n - g (n(K - n + 1) - n) with g = 1/16
  const SpectralGap g = exact_pairing_gap(m, 2);
  const double G = 1.0 / 16.0;
  CHECK(g.ground == doctest::Approx(m.eps(0) * 2 - G * (2 * 3 - 2)).epsilon(1e-12));
  const SpectralGap top = exact_pairing_gap(m, 4);
  CHECK(std::isnan(top.ground_above));
  CHECK(std::isnan(top.excitation_gap));
  CHECK_THROWS_AS(exact_pairing_gap(m, 5), RangeError);
  CHECK_THROWS_AS(exact_pairing_gap(m, -1), RangeError);
}
