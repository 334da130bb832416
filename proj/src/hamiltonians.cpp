#include "dressbath/hamiltonians.hpp"

#include <cmath>
#include <sstream>

#include "dressbath/errors.hpp"

namespace dressbath {

OpSum zeeman_terms(const SpinBathSpec& spec) {
  OpSum s;
  const double e = spec.zeeman.electron_scale() * spec.zeeman.B;
  const double n = spec.zeeman.nuclear_scale() * spec.zeeman.B;
  if (e != 0.0) s.add(e, {{0, Comp::z}});
  if (n != 0.0)
    for (int i = 1; i <= spec.K; ++i) s.add(n, {{i, Comp::z}});
  return s;
}

OpSum hyperfine_zz_terms(const SpinBathSpec& spec) {
  // A sqrt(2I) A_z S_z = A sum_i alpha_i I_z^i S_z
  OpSum s;
  for (int i = 0; i < spec.K; ++i) {
    const double c = spec.A_hf * spec.alpha(i);
    if (c != 0.0) s.add(c, {{i + 1, Comp::z}, {0, Comp::z}});
  }
  return s;
}

OpSum flipflop_terms(const SpinBathSpec& spec) {
  // V_f = (A_+ S_- + A_- S_+)/2 with A_pm = sum_i alpha_i I_pm^i / sqrt(2I)
  OpSum s;
  const double norm = 0.5 / spec.sqrt_2I();
  for (int i = 0; i < spec.K; ++i) {
    const double c = norm * spec.alpha(i);
    if (c == 0.0) continue;
    s.add(c, {{i + 1, Comp::plus}, {0, Comp::minus}});
    s.add(c, {{i + 1, Comp::minus}, {0, Comp::plus}});
  }
  return s;
}

OpSum dipolar_terms(const SpinBathSpec& spec) {
  OpSum s;
  for (int i = 0; i < spec.K; ++i)
    for (int j = i + 1; j < spec.K; ++j) {
      const double b = spec.b(i, j);
      if (b == 0.0) continue;
      s.add(b, {{i + 1, Comp::plus}, {j + 1, Comp::minus}});
      s.add(b, {{i + 1, Comp::minus}, {j + 1, Comp::plus}});
      s.add(-4.0 * b, {{i + 1, Comp::z}, {j + 1, Comp::z}});
    }
  return s;
}

namespace {

LinearOp hermitian_build(const OpSum& terms, BasisPtr domain) {
  LinearOp op = terms.build(std::move(domain));
  op.mark_hermitian();
  return op;
}

}  // namespace

LinearOp build_zeeman(const SpinBathSpec& spec, BasisPtr domain) {
  return hermitian_build(zeeman_terms(spec), std::move(domain));
}

HyperfineParts build_hyperfine(const SpinBathSpec& spec, BasisPtr domain) {
  const double scale = spec.A_hf * spec.sqrt_2I();
  OpSum zz = hyperfine_zz_terms(spec);
  OpSum ff;
  ff.add(flipflop_terms(spec), scale);
  OpSum full;
  full.add(zz).add(ff);
  return {hermitian_build(full, domain), hermitian_build(zz, domain), hermitian_build(ff, domain)};
}

LinearOp build_dipolar(const SpinBathSpec& spec, BasisPtr domain) {
  return hermitian_build(dipolar_terms(spec), std::move(domain));
}

LinearOp build_total(const SpinBathSpec& spec, BasisPtr domain) {
  OpSum s;
  s.add(zeeman_terms(spec))
      .add(hyperfine_zz_terms(spec))
      .add(flipflop_terms(spec), spec.A_hf * spec.sqrt_2I())
      .add(dipolar_terms(spec));
  return hermitian_build(s, std::move(domain));
}

LinearOp build_dominant(const SpinBathSpec& spec, double F, BasisPtr domain) {
  OpSum s;
  if (F != 0.0) s.add(F, {{0, Comp::z}});
  s.add(flipflop_terms(spec), spec.A_hf * spec.sqrt_2I());
  return hermitian_build(s, std::move(domain));
}

Eigen::MatrixXd dipolar_from_geometry(const DotGeometry& geom) {
  const auto K = static_cast<Eigen::Index>(geom.positions.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = i + 1; j < K; ++j) {
      const Eigen::Vector3d d = geom.positions[j] - geom.positions[i];
      const double r = d.norm();
      if (!(r > 0.0))
        throw std::invalid_argument("nuclei " + std::to_string(i + 1) + " and " +
                                    std::to_string(j + 1) + " coincide");
      const double c = d.z() / r;
      b(i, j) = b(j, i) = geom.prefactor * (3.0 * c * c - 1.0) / (r * r * r);
    }
  return b;
}

ConstrainedDipolar constrained_dipolar(const Eigen::VectorXd& alpha, double b_bar, double tol) {
  const auto K = alpha.size();
  if (K < 2) throw std::invalid_argument("constrained_dipolar needs K >= 2");
  if (std::abs(alpha.squaredNorm() - 1.0) > 1e-12)
    throw std::invalid_argument("alpha is not normalized");
  // Unknowns: the K(K-1)/2 upper-triangle couplings followed by b_tilde.
  const Eigen::Index pairs = K * (K - 1) / 2;
  Eigen::MatrixXi pair_index(K, K);
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = i + 1; j < K; ++j) pair_index(i, j) = pair_index(j, i) = static_cast<int>(p++);

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * K, pairs + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * K);
  for (Eigen::Index n = 0; n < K; ++n) {
    for (Eigen::Index i = 0; i < K; ++i) {
      if (i == n) continue;
      C(n, pair_index(n, i)) += 1.0;
      C(K + n, pair_index(n, i)) += alpha(i);
    }
    rhs(n) = b_bar;
    C(K + n, pairs) = -alpha(n);
  }
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(pairs + 1, b_bar / static_cast<double>(K - 1));
  x0(pairs) = b_bar;
  const Eigen::VectorXd defect = rhs - C * x0;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(C);
  const Eigen::VectorXd x = x0 + cod.solve(defect);

  ConstrainedDipolar out;
  out.b_bar = b_bar;
  out.b_tilde = x(pairs);
  out.b = Eigen::MatrixXd::Zero(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = i + 1; j < K; ++j) out.b(i, j) = out.b(j, i) = x(pair_index(i, j));
  const Eigen::VectorXd rows = out.b.rowwise().sum();
  out.row_residual = (rows.array() - b_bar).abs().maxCoeff();
  out.mode_residual = (out.b * alpha - out.b_tilde * alpha).cwiseAbs().maxCoeff();
  if (out.row_residual > tol || out.mode_residual > tol) {
    std::ostringstream os;
    os << "constraint family infeasible for K=" << K << ": row-sum residual " << out.row_residual
       << ", eigen-mode residual " << out.mode_residual << " (tolerance " << tol << ")";
    throw InfeasibleError(os.str());
  }
  return out;
}

EffectiveField effective_field(const SpinBathSpec& spec) {
  const double I = spec.I();
  const double shift =
      spec.A_hf * (spec.alpha.array() * (I + spec.alpha.array().square() / 2.0)).sum();
  const double ge = spec.zeeman.electron_scale();
  EffectiveField f;
  f.B_eff = spec.zeeman.B - shift / ge;
  f.F = ge * f.B_eff - spec.zeeman.nuclear_scale() * spec.zeeman.B;
  return f;
}

}  // namespace dressbath
