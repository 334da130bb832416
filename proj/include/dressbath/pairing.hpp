// Induced nuclear pairing: the Froehlich generator and V_eff, the equivalent
// pairing Hamiltonian for I = 1/2, and the self-consistent BCS gap equations.
//
// Sign convention: g_ij > 0 is attractive; the pair-transfer term of H_eff
// carries an explicit minus sign.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dressbath/spin_core.hpp"

namespace dressbath {

// V_eff = -(A^2 I / 2F) A_+ A_- on a bath basis. Throws std::invalid_argument for F = 0.
LinearOp froehlich_effective(const SpinBathSpec& spec, double F, BasisPtr nuclear_domain);
// S = -(A/F) sqrt(I/2) (A_- S_+ - A_+ S_-) on an electron + bath basis.
LinearOp froehlich_generator(const SpinBathSpec& spec, double F, BasisPtr domain);

struct FroehlichPoint {
  double coupling_ratio;  // A/F
  double F;
  double error;           // max |shift_exact - shift_eff| / max |shift_eff|
};

struct FroehlichCheck {
  int N = 0;
  std::vector<FroehlichPoint> points;
  std::vector<double> error_ratios;  // error(r) / error(r/2)
};

// Compares the spin-down branch of H_D in sector N with -F/2 + V_eff on the
// bath sector n = N, at fixed A and F = A / ratio.
FroehlichCheck froehlich_consistency(const SpinBathSpec& spec, int N, std::span<const double> ratios);

struct PairingModel {
  int K = 0;
  Eigen::VectorXd eps;
  Eigen::MatrixXd g;   // includes the diagonal self-pairing entries
  Eigen::MatrixXd b;
  double n_target = 0.0;
};

// eps_i = -A alpha_i/2 - 2 sum_{j != i}(b_ij + b_ji), g_ij = (A^2/4F) alpha_i alpha_j + b_ij.
// Requires I = 1/2 (throws Unsupported) and F != 0.
PairingModel build_pairing_model(const SpinBathSpec& spec, double F, double n_target);

// alpha_i = 1/sqrt(K) and b_ij = b for every pair including i = j, so that
// g_ij = A^2/(4FK) + b throughout.
PairingModel uniform_pairing_model(int K, double n_target, double A_hf, double F, double b);

// H_eff = sum eps_i n_i - 2 sum_{i != j} b_ij n_i n_j - sum_{i != j} g_ij P_i^+ P_j
// with the I = 1/2 identities n_i = I_z^i + 1/2 and P_i^+ P_j = I_+^i I_-^j.
LinearOp pairing_hamiltonian(const PairingModel& model, BasisPtr nuclear_domain);
// Same operator assembled directly on pair occupations (hard-core pairs).
LinearOp pairing_hamiltonian_pairs(const PairingModel& model, BasisPtr nuclear_domain);

struct BcsOptions {
  double tol = 1e-12;
  int max_iter = 20000;
  double damping = 0.5;
};

struct BcsSolution {
  Eigen::VectorXd delta;
  double lambda = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double residual = 0.0;         // max_i |Delta_i - 1/2 sum_j g_ij Delta_j / xi_j|
  double number_residual = 0.0;  // |sum_i v_i^2 - n|
  int iterations = 0;
  bool normal_state = false;
  std::vector<double> residual_history;
};

BcsSolution solve_bcs(const PairingModel& model, const BcsOptions& options = {});

// Independent residual evaluation from (Delta, lambda).
double gap_equation_residual(const PairingModel& model, const Eigen::VectorXd& delta, double lambda);
double number_equation_residual(const PairingModel& model, const Eigen::VectorXd& delta, double lambda);

// prod_i (u_i + v_i I_+^i)|0>, normalized; with `project_n` the component with
// n pairs, renormalized, on the bath sector n.
KetState bcs_state(const PairingModel& model, const BcsSolution& sol,
                   std::optional<int> project_n = std::nullopt);

struct UniformFamily {
  int K = 8;
  double A_hf = 1.0;
  double F = 1.0;
  double b = 0.0;
};

struct GapRow {
  double n;
  double lambda;
  double delta_min;
  double delta_max;
  double residual;
  int iterations;
};

std::vector<GapRow> gap_vs_filling(const UniformFamily& family, std::span<const double> n_grid,
                                   const BcsOptions& options = {});

struct SpectralGap {
  int n = 0;
  double ground = 0.0;
  double excitation_gap = 0.0;  // E_1 - E_0 inside the n sector
  double ground_below = 0.0;    // ground energy of the n - 1 sector (NaN if absent)
  double ground_above = 0.0;    // ground energy of the n + 1 sector (NaN if absent)
};

// Exact diagonalization of H_eff in the bath sector n and its neighbours.
SpectralGap exact_pairing_gap(const PairingModel& model, int n);

}  // namespace dressbath
