// Leakage out of the dressed pair: oracle extraction of the Overhauser and
// dipolar coefficients, the leakage-elimination operator R_L, and bang-bang
// suppression R_L e^{-iH tau/2} R_L e^{-iH tau/2}.

#pragma once

#include <string>
#include <vector>

#include "dressbath/dressed_frame.hpp"
#include "dressbath/spin_core.hpp"

namespace dressbath {

// A closed-form coefficient compared against its operator-level value.
struct CoefficientCheck {
  std::string name;
  double oracle = 0.0;
  double closed_form = 0.0;
  bool matches = false;  // |oracle - closed_form| <= 1e-10 max(1, |oracle|)
  bool printed = true;   // closed form as printed, rather than derived here

  // printed: "matches-paper" or "differs-from-paper(<value>)";
  // derived: "matches-derived" or "differs-from-derived(<value>)"
  std::string status() const;
};

struct LeakageReport {
  double diag_coeff = 0.0;   // <1|X|1> for the examined operator X
  double ref_coeff = 0.0;    // eigenvalue on |0> (c_z or c_0)
  double ref_residual = 0.0; // ||(X - ref_coeff)|0>||
  KetState leak_vec;         // component of X|1> orthogonal to ket0, ket1
  double leak_norm = 0.0;
  double ratio = 0.0;        // leak_norm / |diag_coeff|
  double shift_ratio = 0.0;  // leak_norm / |ref_coeff|, relative to the shift on |0>
  double paper_estimate = 0.0;
  std::vector<CoefficientCheck> checks;
};

struct SplitHamiltonian {
  LinearOp block;  // P H P + Q H Q
  LinearOp leak;   // P H Q + Q H P
};

SplitHamiltonian split_leakage(const LinearOp& H, const DressedFrame& frame);

// A_z on the N = 1 frame. paper_estimate = alpha_rms / (I sum_j alpha_j).
LeakageReport overhauser_report(const SpinBathSpec& spec, const DressedFrame& frame);
// H_nuc on the N = 1 frame; diag_coeff holds c_1 = <1|H_nuc|1> - c_0.
LeakageReport dipolar_report(const SpinBathSpec& spec, const DressedFrame& frame);

// Closed-form coefficient values. The "printed" variants reproduce the published
// expressions; the "direct" ones follow from applying the operators.
namespace closed_form {
double c_z(const SpinBathSpec& spec);
double overhauser_diag(const SpinBathSpec& spec);
double overhauser_phase_printed(const SpinBathSpec& spec);   // -A sum a(I + a^2/2)
double overhauser_phase_direct(const SpinBathSpec& spec);  // -A sum a(I - a^2/2)
double c0_printed(const SpinBathSpec& spec);                 // -16 I^2 sum_{n<m} b
double c0_direct(const SpinBathSpec& spec);                // -4 I^2 sum_{n<m} b
double c1_printed_ordered(const SpinBathSpec& spec);         // 4I sum_{n != i} a_i b_ni (8 a_i + a_n)
double c1_printed_unordered(const SpinBathSpec& spec);       // same summand, n < i only
double c1_direct(const SpinBathSpec& spec);                // 2I sum_{n != i} a_i b_ni (2 a_i + a_n)
double cons_printed(const SpinBathSpec& spec, double b_bar); // 36 I b_bar
double cons_direct(const SpinBathSpec& spec, double b_bar);// 6 I b_bar
}  // namespace closed_form

// R_L = exp(-i pi (A_+ S_- + A_- S_+)) on the frame's sector.
LinearOp leakage_elimination_op(const SpinBathSpec& spec, const DressedFrame& frame);
// 1 - 2 P_2: -1 on the frame, +1 on its complement.
LinearOp leakage_elimination_spectral(const DressedFrame& frame);

struct BangBangSchedule {
  double tau = 0.0;  // duration of one cycle
  int cycles = 0;

  double total_time() const { return tau * cycles; }
};

struct BangBangResult {
  KetState final_state;
  std::vector<double> leak_prob;  // after each cycle
};

// 1 - ||P_2 psi||^2
double leak_probability(const DressedFrame& frame, const KetState& psi);

BangBangResult bangbang_evolve(const LinearOp& H, const DressedFrame& frame,
                               const BangBangSchedule& sched, const KetState& psi0);
// Same time grid, no pulses.
BangBangResult free_evolve(const LinearOp& H, const DressedFrame& frame,
                           const BangBangSchedule& sched, const KetState& psi0);

// |<psi|[A_{k-}, A_{k'+}]|psi> - delta_{kk'}| with the modes taken from
// complete_mode_matrix(alpha).
double bosonization_deviation(const SpinBathSpec& spec, const KetState& psi, int k, int k_prime);
// The same quantity from |sum_i a^k_i a^k'_i <n_i>| / I.
double bosonization_deviation_formula(const SpinBathSpec& spec, const KetState& psi, int k,
                                      int k_prime);

}  // namespace dressbath
