#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dressbath/spin_core.hpp"

namespace dressbath {

struct DotGeometry {
  std::vector<Eigen::Vector3d> positions;
  double prefactor = 1.0;
};

struct EffectiveField {
  double B_eff;
  double F;
};

struct HyperfineParts {
  LinearOp full;      // A sqrt(2I) (A_z S_z + V_f)
  LinearOp zz;        // A sqrt(2I) A_z S_z
  LinearOp flipflop;  // A sqrt(2I) V_f
};

// Term-level forms, usable on any basis of the electron + bath layout.
OpSum zeeman_terms(const SpinBathSpec& spec);
OpSum hyperfine_zz_terms(const SpinBathSpec& spec);
OpSum flipflop_terms(const SpinBathSpec& spec);  // V_f = (A_+ S_- + A_- S_+)/2
OpSum dipolar_terms(const SpinBathSpec& spec);

LinearOp build_zeeman(const SpinBathSpec& spec, BasisPtr domain);
HyperfineParts build_hyperfine(const SpinBathSpec& spec, BasisPtr domain);
LinearOp build_dipolar(const SpinBathSpec& spec, BasisPtr domain);
// H = H_B + H_I + H_nuc
LinearOp build_total(const SpinBathSpec& spec, BasisPtr domain);
// H_D = F S_z + A sqrt(2I) V_f. The conserved g_n mu_n B J_z offset is not included.
LinearOp build_dominant(const SpinBathSpec& spec, double F, BasisPtr domain);

// b_ij = prefactor (3 cos^2 theta_ij - 1) / r_ij^3 with theta the zenith angle
// of r_j - r_i. Throws std::invalid_argument on coincident nuclei.
Eigen::MatrixXd dipolar_from_geometry(const DotGeometry& geom);

struct ConstrainedDipolar {
  Eigen::MatrixXd b;
  double b_bar = 0.0;
  double b_tilde = 0.0;       // fitted eigenvalue of b on alpha
  double row_residual = 0.0;  // max_n |sum_i b_ni - b_bar|
  double mode_residual = 0.0; // max_n |sum_i b_ni alpha_i - b_tilde alpha_n|
};

// Symmetric zero-diagonal couplings with uniform row sums b_bar and alpha as
// an eigenvector. Starts from the uniform matrix b_bar/(K-1) and applies the
// minimum-norm correction onto the affine constraint set. Throws
// InfeasibleError listing the residuals when they exceed `tol`.
ConstrainedDipolar constrained_dipolar(const Eigen::VectorXd& alpha, double b_bar, double tol = 1e-8);

// B_eff = B - A sum_i alpha_i (I + alpha_i^2/2) / (g* mu_B), F = g* mu_B B_eff - g_n mu_n B.
EffectiveField effective_field(const SpinBathSpec& spec);

}  // namespace dressbath
