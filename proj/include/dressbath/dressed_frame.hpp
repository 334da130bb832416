// Dressed-qubit encoding: the invariant pair |0>_d = |up>|m>,
// |1>_d = |down>|Phi_{m+1}> of the dominant Hamiltonian, the dressing map onto
// the bare electron spin, and single-qubit control from square F pulses.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dressbath/spin_core.hpp"

namespace dressbath {

enum class SelectorKind { max_h, min_h, target_iz };

// How to pick |m> among the eigenstates of h = A_- A_+ in a nuclear sector.
// target_iz(v) fixes the nuclear sector by I_z = v (so N = v + KI + 1) and
// then takes the largest h_m there.
struct FrameSelector {
  SelectorKind kind = SelectorKind::max_h;
  double iz = 0.0;

  static FrameSelector max_h() { return {SelectorKind::max_h, 0.0}; }
  static FrameSelector min_h() { return {SelectorKind::min_h, 0.0}; }
  static FrameSelector target_iz(double v) { return {SelectorKind::target_iz, v}; }
};

struct DressedFrame {
  int N = 1;
  BasisPtr sector;    // electron + bath, total pair number N
  BasisPtr nuclear;   // bath sector n = N - 1 holding |m>
  KetState m_state;
  double h_m = 0.0;
  KetState ket0;
  KetState ket1;
  // N = 1: |down> A_{k+}|0>, k = 1..K-1. Otherwise an orthonormal completion
  // of {ket0, ket1} inside the sector.
  std::vector<KetState> leak_modes;
  Eigen::MatrixXd mode_matrix;  // rows are modes, row 0 = alpha

  // 2 x dim matrix whose rows are <ket0|, <ket1|.
  CMatrix frame_rows() const;
  // Dense projector onto span{ket0, ket1} within the sector.
  CMatrix projector() const;
};

// Completes alpha to a real orthogonal matrix (row 0 = alpha) by
// Gram-Schmidt over the standard basis vectors taken in order.
Eigen::MatrixXd complete_mode_matrix(const Eigen::VectorXd& alpha);

DressedFrame build_frame_N1(const SpinBathSpec& spec);
DressedFrame build_frame_general(const SpinBathSpec& spec, int N,
                                 FrameSelector selector = FrameSelector::max_h());

// W = |up><ket0| + |down><ket1|, a map from the frame's sector onto the
// two-dimensional electron space (basis order down, up).
LinearOp dressing_unitary(const DressedFrame& frame);

// [op]_{ab} = <a|op|b> with a, b in (ket0, ket1).
Eigen::Matrix2cd matrix_rep(const LinearOp& op, const DressedFrame& frame);

namespace pauli {
Eigen::Matrix2cd I();
Eigen::Matrix2cd X();
Eigen::Matrix2cd Y();  // standard sigma_y = -i Z X
Eigen::Matrix2cd Z();
// exp(-i angle P) for a Pauli matrix P
Eigen::Matrix2cd rotation(const Eigen::Matrix2cd& P, double angle);
}  // namespace pauli

// A square pulse: F held constant for `duration`.
struct PulseSegment {
  double F = 0.0;
  double duration = 0.0;
};

struct PulseAngles {
  double phi;
  double theta;
};

// phi = t sqrt(F^2 + 2I A^2); theta = atan2(sqrt(2I) A, F), so theta lies in
// (0, pi) for A > 0 and F = 0 gives pi/2.
PulseAngles pulse_angles(const PulseSegment& seg, const SpinBathSpec& spec);

// U(phi, theta) = exp(-i phi (cos(theta) Z + sin(theta) X)).
Eigen::Matrix2cd pulse_unitary(double phi, double theta);
Eigen::Matrix2cd pulse_unitary(const PulseSegment& seg, const SpinBathSpec& spec);
// exp(-i theta Y/2) exp(-i phi Z) exp(i theta Y/2)
Eigen::Matrix2cd pulse_unitary_factored(double phi, double theta);

// Segments are in time order; the product is U_last ... U_first.
Eigen::Matrix2cd compose_pulses(const std::vector<PulseSegment>& segments, const SpinBathSpec& spec);

// 1 - |tr(U^dagger V)/2|^2: zero iff equal up to global phase.
double gate_infidelity(const Eigen::Matrix2cd& U, const Eigen::Matrix2cd& V);

// X-Y-X Euler factorization realized with F = 0 pulses (X rotations) and the
// circuit U(pi/2, theta) X (Y rotations). Requires A != 0.
std::vector<PulseSegment> compile_gate(const Eigen::Matrix2cd& target, const SpinBathSpec& spec);

struct TwoQubitReport {
  double J = 0.0;
  std::size_t product_dim = 0;
  Eigen::Matrix4cd rep;               // [J S_z^1 S_z^2] in the product frame
  double rep_residual = 0.0;          // || rep - J Z Z / 4 ||_max
  Eigen::Matrix4cd gate;              // frame block of exp(-i J S_z S_z t), t = pi/J
  double propagation_residual = 0.0;  // product-space evolution vs exp of the 4x4 rep
  cplx makhlin_G1;
  double makhlin_G2 = 0.0;
  double cz_invariant_distance = 0.0; // distance of (G1, G2) from CZ's (0, 1)
  double leak_coupling = 0.0;         // max |<leak|S_z S_z|frame>|
};

// Checks Z_d^1 Z_d^2 / 4 = S_z^1 S_z^2 on the N = 1 frames of two dots.
TwoQubitReport two_qubit_phase_check(const SpinBathSpec& a, const SpinBathSpec& b, double J);

// Local invariants (G1, G2) of a two-qubit unitary.
std::pair<cplx, double> makhlin_invariants(const Eigen::Matrix4cd& U);

}  // namespace dressbath
