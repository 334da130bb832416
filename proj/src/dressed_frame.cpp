#include "dressbath/dressed_frame.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dressbath/errors.hpp"

namespace dressbath {

namespace {

constexpr double kPi = std::numbers::pi;

// |e>|nuc> as a vector of the combined sector; e_digit 1 = up, 0 = down.
KetState with_electron(int e_digit, const KetState& nuc, const BasisPtr& combined) {
  KetState out = KetState::zero(combined);
  const std::size_t slots = static_cast<std::size_t>(combined->layout().slots());
  std::vector<std::uint8_t> digits(slots);
  digits[0] = static_cast<std::uint8_t>(e_digit);
  for (std::size_t i = 0; i < nuc.basis->dim(); ++i) {
    const cplx a = nuc.amps(static_cast<Eigen::Index>(i));
    if (a == cplx(0.0)) continue;
    const auto cfg = nuc.basis->config(i);
    std::copy(cfg.begin(), cfg.end(), digits.begin() + 1);
    auto idx = combined->find(digits);
    if (!idx) throw ContractViolation("nuclear state does not fit the combined sector");
    out.amps(static_cast<Eigen::Index>(*idx)) = a;
  }
  return out;
}

// Deterministic representative of a (possibly degenerate) eigenspace: the
// projection of the standard basis vector with the largest overlap, lowest
// index on ties, with its first significant amplitude made positive.
Eigen::VectorXd canonical_vector(const Eigen::MatrixXd& span) {
  const Eigen::VectorXd weights = span.rowwise().squaredNorm();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < weights.size(); ++i)
    if (weights(i) > weights(best) + 1e-9) best = i;
  Eigen::VectorXd v = span * span.row(best).transpose();
  v.normalize();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      break;
    }
  return v;
}

double wrap_symmetric(double x) {
  // into [-pi/2, pi/2)
  double y = std::fmod(x + kPi / 2, kPi);
  if (y < 0) y += kPi;
  return y - kPi / 2;
}

void fill_N1_leak_modes(const SpinBathSpec& spec, DressedFrame& f) {
  const KetState vacuum = f.m_state;
  for (Eigen::Index k = 1; k < f.mode_matrix.rows(); ++k) {
    const Eigen::VectorXd row = f.mode_matrix.row(k).transpose();
    KetState raised = collective_op(spec, row, Comp::plus, vacuum.basis).apply(vacuum);
    f.leak_modes.push_back(with_electron(0, raised, f.sector));
  }
}

}  // namespace

CMatrix DressedFrame::frame_rows() const {
  CMatrix rows(2, ket0.amps.size());
  rows.row(0) = ket0.amps.adjoint();
  rows.row(1) = ket1.amps.adjoint();
  return rows;
}

CMatrix DressedFrame::projector() const {
  return ket0.amps * ket0.amps.adjoint() + ket1.amps * ket1.amps.adjoint();
}

Eigen::MatrixXd complete_mode_matrix(const Eigen::VectorXd& alpha) {
  const Eigen::Index K = alpha.size();
  if (std::abs(alpha.norm() - 1.0) > 1e-10) throw std::invalid_argument("alpha is not normalized");
  Eigen::MatrixXd modes(K, K);
  modes.row(0) = alpha.transpose();
  Eigen::Index filled = 1;
  for (Eigen::Index e = 0; e < K && filled < K; ++e) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(K, e);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index r = 0; r < filled; ++r) v -= modes.row(r).dot(v) * modes.row(r).transpose();
    const double n = v.norm();
    if (n < 1e-8) continue;
    modes.row(filled++) = (v / n).transpose();
  }
  return modes;
}

DressedFrame build_frame_N1(const SpinBathSpec& spec) {
  spec.validate();
  DressedFrame f;
  f.N = 1;
  f.sector = enumerate_sector(spec, 1);
  f.nuclear = nuclear_sector(spec, 0);
  f.m_state = KetState::basis_state(f.nuclear, 0);
  const LinearOp A_plus = collective_op(spec, spec.alpha, Comp::plus, f.nuclear);
  const KetState raised = A_plus.apply(f.m_state);
  const LinearOp A_minus = collective_op(spec, spec.alpha, Comp::minus, raised.basis);
  f.h_m = f.m_state.inner((A_minus * A_plus).apply(f.m_state)).real();
  f.ket0 = with_electron(1, f.m_state, f.sector);
  f.ket1 = with_electron(0, KetState{raised.basis, raised.amps / std::sqrt(f.h_m)}, f.sector);
  f.mode_matrix = complete_mode_matrix(spec.alpha);
  fill_N1_leak_modes(spec, f);
  return f;
}

DressedFrame build_frame_general(const SpinBathSpec& spec, int N, FrameSelector selector) {
  spec.validate();
  const int top = spec.K * spec.two_I + 1;
  if (selector.kind == SelectorKind::target_iz) {
    const double n_exact = selector.iz + spec.K * spec.I();
    const int n = static_cast<int>(std::lround(n_exact));
    if (std::abs(n_exact - n) > 1e-9 || n + 1 != N)
      throw RangeError("target I_z=" + std::to_string(selector.iz) + " selects N=" +
                       std::to_string(n + 1) + ", not the requested N=" + std::to_string(N));
  }
  if (N <= 0 || N >= top)
    throw RangeError("N=" + std::to_string(N) + " must lie strictly between 0 and 2KI+1=" +
                     std::to_string(top) + " (the polarized one-dimensional sectors are excluded)");
  if (N == 1 && selector.kind != SelectorKind::min_h) return build_frame_N1(spec);

  DressedFrame f;
  f.N = N;
  f.sector = enumerate_sector(spec, N);
  f.nuclear = nuclear_sector(spec, N - 1);
  const LinearOp A_plus = collective_op(spec, spec.alpha, Comp::plus, f.nuclear);
  const LinearOp A_minus = collective_op(spec, spec.alpha, Comp::minus, A_plus.codomain());
  const Eigen::MatrixXd h = (A_minus * A_plus).dense().real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  // Only eigenstates with a partner (h_m > 0) span a two-dimensional subspace.
  std::vector<Eigen::Index> usable;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-10 * scale) usable.push_back(i);
  if (usable.empty()) throw ContractViolation("no eigenstate of A_-A_+ with h_m > 0 in this sector");
  const double target = selector.kind == SelectorKind::min_h ? ev(usable.front()) : ev(usable.back());
  std::vector<Eigen::Index> members;
  for (auto i : usable)
    if (std::abs(ev(i) - target) <= 1e-9 * scale) members.push_back(i);
  Eigen::MatrixXd span(h.rows(), static_cast<Eigen::Index>(members.size()));
  for (std::size_t c = 0; c < members.size(); ++c)
    span.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(members[c]);
  const Eigen::VectorXd m = canonical_vector(span);

  f.m_state = KetState{f.nuclear, m.cast<cplx>()};
  f.h_m = (m.transpose() * h * m)(0, 0);
  const KetState raised = A_plus.apply(f.m_state);
  f.ket0 = with_electron(1, f.m_state, f.sector);
  f.ket1 = with_electron(0, KetState{raised.basis, raised.amps / std::sqrt(f.h_m)}, f.sector);
  f.mode_matrix = complete_mode_matrix(spec.alpha);
  if (N == 1) {
    fill_N1_leak_modes(spec, f);
    return f;
  }
  // Orthonormal completion of the frame inside the sector.
  const auto d = static_cast<Eigen::Index>(f.sector->dim());
  CMatrix pair(d, 2);
  pair.col(0) = f.ket0.amps;
  pair.col(1) = f.ket1.amps;
  Eigen::HouseholderQR<CMatrix> qr(pair);
  const CMatrix Q = qr.householderQ() * CMatrix::Identity(d, d);
  for (Eigen::Index c = 2; c < d; ++c) f.leak_modes.push_back(KetState{f.sector, Q.col(c)});
  return f;
}

LinearOp dressing_unitary(const DressedFrame& frame) {
  if ((frame.ket0.amps - frame.ket1.amps).norm() < 1e-6)
    throw ContractViolation("degenerate frame: ket0 and ket1 coincide");
  const BasisPtr e = electron_space();
  const auto d = static_cast<Eigen::Index>(frame.sector->dim());
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index c = 0; c < d; ++c) {
    // row 0 = |down>, row 1 = |up>
    trip.emplace_back(1, c, std::conj(frame.ket0.amps(c)));
    trip.emplace_back(0, c, std::conj(frame.ket1.amps(c)));
  }
  SparseOp m(2, d);
  m.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(frame.sector, e, std::move(m));
}

Eigen::Matrix2cd matrix_rep(const LinearOp& op, const DressedFrame& frame) {
  if (!op.domain()->same_space(*frame.sector) || !op.codomain()->same_space(*frame.sector))
    throw ContractViolation("matrix_rep: operator acts on " + op.domain()->describe() +
                            ", frame lives in " + frame.sector->describe());
  CMatrix cols(frame.ket0.amps.size(), 2);
  cols.col(0) = frame.ket0.amps;
  cols.col(1) = frame.ket1.amps;
  const CMatrix image = op.matrix() * cols;
  return cols.adjoint() * image;
}

namespace pauli {
Eigen::Matrix2cd I() { return Eigen::Matrix2cd::Identity(); }
Eigen::Matrix2cd X() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}
Eigen::Matrix2cd Y() {
  Eigen::Matrix2cd m;
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
Eigen::Matrix2cd Z() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}
Eigen::Matrix2cd rotation(const Eigen::Matrix2cd& P, double angle) {
  return std::cos(angle) * I() - cplx(0, std::sin(angle)) * P;
}
}  // namespace pauli

PulseAngles pulse_angles(const PulseSegment& seg, const SpinBathSpec& spec) {
  if (seg.duration < 0) throw std::invalid_argument("pulse duration must be non-negative");
  const double c = spec.sqrt_2I() * spec.A_hf;
  return {seg.duration * std::hypot(seg.F, c), std::atan2(c, seg.F)};
}

Eigen::Matrix2cd pulse_unitary(double phi, double theta) {
  const Eigen::Matrix2cd axis = std::cos(theta) * pauli::Z() + std::sin(theta) * pauli::X();
  return pauli::rotation(axis, phi);
}

Eigen::Matrix2cd pulse_unitary(const PulseSegment& seg, const SpinBathSpec& spec) {
  const auto [phi, theta] = pulse_angles(seg, spec);
  return pulse_unitary(phi, theta);
}

Eigen::Matrix2cd pulse_unitary_factored(double phi, double theta) {
  return pauli::rotation(pauli::Y(), theta / 2) * pauli::rotation(pauli::Z(), phi) *
         pauli::rotation(pauli::Y(), -theta / 2);
}

Eigen::Matrix2cd compose_pulses(const std::vector<PulseSegment>& segments, const SpinBathSpec& spec) {
  Eigen::Matrix2cd U = Eigen::Matrix2cd::Identity();
  for (const auto& s : segments) U = pulse_unitary(s, spec) * U;
  return U;
}

double gate_infidelity(const Eigen::Matrix2cd& U, const Eigen::Matrix2cd& V) {
  const double f = std::abs((U.adjoint() * V).trace() / 2.0);
  return 1.0 - f * f;
}

namespace {

struct Control {
  double c;     // sqrt(2I) A
  double sign;  // sign of c
};

// exp(-i x X) up to global phase, as one F = 0 segment (nothing if trivial).
void emit_x_rotation(double x, const Control& ctl, std::vector<PulseSegment>& out) {
  double phi = std::fmod(ctl.sign * x, kPi);
  if (phi < 0) phi += kPi;
  if (phi < 1e-12 || kPi - phi < 1e-12) return;
  out.push_back({0.0, phi / std::abs(ctl.c)});
}

// exp(-i beta Y) up to global phase via U(pi/2, theta) X, theta = beta - pi/2.
void emit_y_rotation(double beta, const Control& ctl, std::vector<PulseSegment>& out) {
  if (std::abs(wrap_symmetric(beta)) < 1e-12) return;
  const double centre = ctl.sign * kPi / 2;
  const double theta = centre + wrap_symmetric(beta - kPi / 2 - centre);
  constexpr double margin = 0.05;
  if (std::abs(theta - centre) > kPi / 2 - margin) {
    // theta near 0 or pi needs |F| -> infinity; split into two halves.
    emit_y_rotation(beta / 2 + kPi / 2, ctl, out);
    emit_y_rotation(beta / 2 + kPi / 2, ctl, out);
    return;
  }
  out.push_back({0.0, (kPi / 2) / std::abs(ctl.c)});  // X up to phase
  const double F = ctl.c * std::cos(theta) / std::sin(theta);
  const double omega = std::hypot(F, ctl.c);
  out.push_back({F, (kPi / 2) / omega});
}

}  // namespace

std::vector<PulseSegment> compile_gate(const Eigen::Matrix2cd& target, const SpinBathSpec& spec) {
  if ((target.adjoint() * target - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("compile_gate: target is not unitary");
  const Control ctl{spec.sqrt_2I() * spec.A_hf, spec.A_hf >= 0 ? 1.0 : -1.0};
  if (ctl.c == 0.0) throw std::invalid_argument("compile_gate: no X control without hyperfine coupling");
  if (gate_infidelity(target, Eigen::Matrix2cd::Identity()) < 1e-14) return {};

  const Eigen::Matrix2cd V = target / std::sqrt(target.determinant());
  const Eigen::Matrix2cd H = (pauli::X() + pauli::Z()) / std::sqrt(2.0);
  // H X H = Z and H Y H = -Y turn the X-Y-X problem into Z-Y-Z.
  const Eigen::Matrix2cd W = H * V * H;
  const double c0 = std::abs(W(0, 0));
  const double s0 = std::abs(W(1, 0));
  const double bp = std::atan2(s0, c0);
  const double sum = c0 > 1e-14 ? -std::arg(W(0, 0)) : 0.0;   // a + c
  const double diff = s0 > 1e-14 ? std::arg(W(1, 0)) : 0.0;   // a - c
  const double a = 0.5 * (sum + diff);
  const double c = 0.5 * (sum - diff);
  const double b = -bp;

  std::vector<PulseSegment> out;
  if (std::abs(wrap_symmetric(b)) < 1e-12) {
    emit_x_rotation(a + c, ctl, out);
    return out;
  }
  emit_x_rotation(c, ctl, out);
  emit_y_rotation(b, ctl, out);
  emit_x_rotation(a, ctl, out);
  return out;
}

std::pair<cplx, double> makhlin_invariants(const Eigen::Matrix4cd& U) {
  const cplx i(0, 1);
  Eigen::Matrix4cd Q;
  Q << 1, 0, 0, i, 0, i, 1, 0, 0, i, -1, 0, 1, 0, 0, -i;
  Q /= std::sqrt(2.0);
  const Eigen::Matrix4cd UB = Q.adjoint() * U * Q;
  const Eigen::Matrix4cd m = UB.transpose() * UB;
  const cplx det = U.determinant();
  const cplx tr = m.trace();
  const cplx tr2 = (m * m).trace();
  const cplx G1 = tr * tr / (16.0 * det);
  const cplx G2 = (tr * tr - tr2) / (4.0 * det);
  return {G1, G2.real()};
}

TwoQubitReport two_qubit_phase_check(const SpinBathSpec& a, const SpinBathSpec& b, double J) {
  const DressedFrame fa = build_frame_N1(a);
  const DressedFrame fb = build_frame_N1(b);
  const std::size_t da = fa.sector->dim();
  const std::size_t db = fb.sector->dim();
  TwoQubitReport r;
  r.J = J;
  r.product_dim = da * db;
  if (r.product_dim > 4096)
    throw DimensionOverflow("two-dot product space has dimension " + std::to_string(r.product_dim) +
                            " > 4096; use smaller K");
  const LinearOp sa = spin_op(a, 0, Comp::z, fa.sector);
  const LinearOp sb = spin_op(b, 0, Comp::z, fb.sector);
  if (!sa.is_diagonal() || !sb.is_diagonal()) throw ContractViolation("S_z is not diagonal");
  // J S_z^1 S_z^2 is diagonal in the product configuration basis.
  Eigen::VectorXd diag(static_cast<Eigen::Index>(r.product_dim));
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < db; ++j)
      diag(static_cast<Eigen::Index>(i * db + j)) =
          J * sa.matrix().coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real() *
          sb.matrix().coeff(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)).real();

  CMatrix frame(static_cast<Eigen::Index>(r.product_dim), 4);
  const KetState* ka[2] = {&fa.ket0, &fa.ket1};
  const KetState* kb[2] = {&fb.ket0, &fb.ket1};
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) {
      CVector v(static_cast<Eigen::Index>(r.product_dim));
      for (std::size_t i = 0; i < da; ++i)
        v.segment(static_cast<Eigen::Index>(i * db), static_cast<Eigen::Index>(db)) =
            ka[p]->amps(static_cast<Eigen::Index>(i)) * kb[q]->amps;
      frame.col(2 * p + q) = v;
    }
  const CMatrix image = diag.cast<cplx>().asDiagonal() * frame;
  r.rep = frame.adjoint() * image;
  Eigen::Matrix4cd zz = Eigen::Matrix4cd::Zero();
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) zz(2 * p + q, 2 * p + q) = pauli::Z()(p, p) * pauli::Z()(q, q);
  r.rep_residual = (r.rep - J * zz / 4.0).cwiseAbs().maxCoeff();

  const CMatrix leaked = image - frame * (frame.adjoint() * image);
  r.leak_coupling = leaked.colwise().norm().maxCoeff();

  const double t = J == 0.0 ? 0.0 : kPi / J;
  const CVector phases = (diag.cast<cplx>() * cplx(0, -t)).array().exp().matrix();
  r.gate = frame.adjoint() * (phases.asDiagonal() * frame);
  r.propagation_residual = (r.gate - dense_evolution(r.rep, t)).cwiseAbs().maxCoeff();
  const auto [G1, G2] = makhlin_invariants(r.gate);
  r.makhlin_G1 = G1;
  r.makhlin_G2 = G2;
  r.cz_invariant_distance = std::abs(G1) + std::abs(G2 - 1.0);
  return r;
}

}  // namespace dressbath
