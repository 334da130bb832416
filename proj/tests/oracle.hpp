// Dense reference constructions for the unit tests. Operators are assembled
// from Kronecker products of single-spin matrices, independently of OpSum,
// and compared against the sparse builders on any basis of the same layout.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dressbath/rng.hpp"
#include "dressbath/spin_core.hpp"

namespace oracle {

using dressbath::cplx;
using dressbath::CMatrix;
using dressbath::CVector;

// Local basis ordered by digit = m + s.
inline CMatrix sz(int two_s) {
  const int d = two_s + 1;
  CMatrix m = CMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) m(k, k) = k - 0.5 * two_s;
  return m;
}

inline CMatrix splus(int two_s) {
  const int d = two_s + 1;
  const double s = 0.5 * two_s;
  CMatrix m = CMatrix::Zero(d, d);
  for (int k = 0; k + 1 < d; ++k) {
    const double mm = k - s;
    m(k + 1, k) = std::sqrt(s * (s + 1) - mm * (mm + 1));
  }
  return m;
}

inline CMatrix sminus(int two_s) { return splus(two_s).adjoint(); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

// Full-space matrix of `local` on `slot`, identity elsewhere, slot 0 most significant.
inline CMatrix on_slot(const dressbath::Layout& lay, int slot, const CMatrix& local) {
  CMatrix r = CMatrix::Identity(1, 1);
  for (int s = 0; s < lay.slots(); ++s) {
    const int d = lay.two_s(s) + 1;
    r = kron(r, s == slot ? local : CMatrix(CMatrix::Identity(d, d)));
  }
  return r;
}

inline std::size_t full_index(const dressbath::Layout& lay, std::span<const std::uint8_t> digits) {
  std::size_t idx = 0;
  for (int s = 0; s < lay.slots(); ++s) idx = idx * static_cast<std::size_t>(lay.two_s(s) + 1) + digits[s];
  return idx;
}

// Rows and columns of a full-space dense matrix picked out by two bases.
inline CMatrix restrict(const CMatrix& full, const dressbath::Basis& rows, const dressbath::Basis& cols) {
  CMatrix r(rows.dim(), cols.dim());
  for (std::size_t i = 0; i < rows.dim(); ++i)
    for (std::size_t j = 0; j < cols.dim(); ++j)
      r(i, j) = full(full_index(rows.layout(), rows.config(i)), full_index(cols.layout(), cols.config(j)));
  return r;
}

// Electron + bath operators in the full space.
struct Ops {
  dressbath::Layout lay;
  int e0 = 0;  // slot of site 1

  explicit Ops(const dressbath::SpinBathSpec& spec, bool electron = true)
      : lay{spec.K, spec.two_I, electron}, e0(electron ? 1 : 0) {}

  CMatrix S(char c) const { return on_slot(lay, 0, c == 'z' ? sz(1) : c == '+' ? splus(1) : sminus(1)); }
  CMatrix I(int site, char c) const {
    const int t = lay.two_I;
    return on_slot(lay, e0 + site - 1, c == 'z' ? sz(t) : c == '+' ? splus(t) : sminus(t));
  }
  Eigen::Index dim() const {
    Eigen::Index d = lay.electron ? 2 : 1;
    for (int i = 0; i < lay.K; ++i) d *= lay.two_I + 1;
    return d;
  }
  CMatrix zero() const { return CMatrix::Zero(dim(), dim()); }
  CMatrix id() const { return CMatrix::Identity(dim(), dim()); }
  // sum_i row_i I^i_c / sqrt(2I)
  CMatrix A(const Eigen::VectorXd& row, char c) const {
    CMatrix r = zero();
    for (int i = 0; i < lay.K; ++i) r += row(i) * I(i + 1, c);
    return r / std::sqrt(static_cast<double>(lay.two_I));
  }
};

inline CMatrix hyperfine(const dressbath::SpinBathSpec& spec) {
  const Ops o(spec);
  CMatrix h = o.zero();
  for (int i = 1; i <= spec.K; ++i)
    h += spec.A_hf * spec.alpha(i - 1) *
         (o.I(i, 'z') * o.S('z') + 0.5 * (o.I(i, '+') * o.S('-') + o.I(i, '-') * o.S('+')));
  return h;
}

inline CMatrix flipflop(const dressbath::SpinBathSpec& spec) {
  const Ops o(spec);
  CMatrix h = o.zero();
  for (int i = 1; i <= spec.K; ++i)
    h += spec.A_hf * spec.alpha(i - 1) * 0.5 * (o.I(i, '+') * o.S('-') + o.I(i, '-') * o.S('+'));
  return h;
}

inline CMatrix dipolar(const dressbath::SpinBathSpec& spec, bool electron = true) {
  const Ops o(spec, electron);
  CMatrix h = o.zero();
  for (int i = 1; i <= spec.K; ++i)
    for (int j = i + 1; j <= spec.K; ++j)
      h += spec.b(i - 1, j - 1) *
           (o.I(i, '+') * o.I(j, '-') + o.I(i, '-') * o.I(j, '+') - 4.0 * o.I(i, 'z') * o.I(j, 'z'));
  return h;
}

inline CMatrix zeeman(const dressbath::SpinBathSpec& spec) {
  const Ops o(spec);
  CMatrix h = spec.zeeman.electron_scale() * spec.zeeman.B * o.S('z');
  for (int i = 1; i <= spec.K; ++i) h += spec.zeeman.nuclear_scale() * spec.zeeman.B * o.I(i, 'z');
  return h;
}

inline CMatrix total_pairs(const dressbath::SpinBathSpec& spec) {
  const Ops o(spec);
  CMatrix n = o.S('z') + 0.5 * o.id();
  for (int i = 1; i <= spec.K; ++i) n += o.I(i, 'z') + spec.I() * o.id();
  return n;
}

inline Eigen::VectorXd random_unit(dressbath::CounterRng& rng, int K) {
  Eigen::VectorXd a(K);
  for (int i = 0; i < K; ++i) a(i) = 0.2 + rng.uniform();
  return a.normalized();
}

inline Eigen::MatrixXd random_symmetric(dressbath::CounterRng& rng, int K, double scale) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j) b(i, j) = b(j, i) = scale * rng.uniform(-1.0, 1.0);
  return b;
}

inline dressbath::SpinBathSpec random_spec(dressbath::CounterRng& rng, int K, int two_I, double b_scale = 0.05) {
  dressbath::SpinBathSpec s = dressbath::SpinBathSpec::with_alpha(random_unit(rng, K), two_I, rng.uniform(0.5, 1.5));
  s.b = random_symmetric(rng, K, b_scale);
  s.zeeman.B = rng.uniform(-1.0, 1.0);
  s.zeeman.g_n = 0.01;
  return s;
}

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace oracle
