// Sector-resolved Hilbert spaces for one electron spin coupled to K nuclear
// spins, sparse spin operators over them, and exact time propagation.
//
// Configurations are stored as one digit per slot, the digit being the pair
// occupation of that slot (digit = m + s, so 0 is the fully lowered state).
// The electron, when present, occupies slot 0 and is addressed as site 0;
// nuclei are sites 1..K. Inside a basis configurations are ordered
// lexicographically over (m_s, m_1, ..., m_K).

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dressbath {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseOp = Eigen::SparseMatrix<cplx>;

// Entries with modulus below this are dropped from every sparse operator.
inline constexpr double kDropTolerance = 1e-14;
// Largest basis the library will enumerate.
inline constexpr std::size_t kMaxBasisDim = std::size_t{1} << 21;

struct Zeeman {
  double g_e = 2.0;   // g*
  double mu_B = 1.0;
  double g_n = 0.0;
  double mu_n = 1.0;
  double B = 0.0;

  double electron_scale() const { return g_e * mu_B; }
  double nuclear_scale() const { return g_n * mu_n; }
};

// Static description of one quantum dot.
struct SpinBathSpec {
  int K = 2;
  int two_I = 1;
  Eigen::VectorXd alpha;   // hyperfine profile, sum of squares 1
  double A_hf = 1.0;       // average hyperfine constant
  Zeeman zeeman;
  Eigen::MatrixXd b;       // dipolar couplings, symmetric, zero diagonal

  double I() const { return 0.5 * two_I; }
  double sqrt_2I() const;

  // Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  // Uniform profile alpha_i = 1/sqrt(K), no dipolar coupling, zero field.
  static SpinBathSpec uniform(int K, int two_I = 1, double A_hf = 1.0);
  static SpinBathSpec with_alpha(Eigen::VectorXd alpha, int two_I = 1, double A_hf = 1.0);
};

struct Layout {
  int K = 0;
  int two_I = 1;
  bool electron = true;

  int slots() const { return K + (electron ? 1 : 0); }
  int slot_of(int site) const;
  int two_s(int slot) const { return (electron && slot == 0) ? 1 : two_I; }
  int max_pairs() const { return K * two_I + (electron ? 1 : 0); }
  bool operator==(const Layout&) const = default;
};

class Basis;
using BasisPtr = std::shared_ptr<const Basis>;

// Enumerated configurations of a conserved-N sector, or of the full space.
class Basis {
 public:
  static BasisPtr sector(const Layout& layout, int N);
  static BasisPtr full(const Layout& layout);

  const Layout& layout() const { return layout_; }
  std::optional<int> pair_number() const { return N_; }
  bool is_sector() const { return N_.has_value(); }
  std::size_t dim() const { return dim_; }

  std::span<const std::uint8_t> config(std::size_t i) const {
    return {digits_.data() + i * stride_, stride_};
  }
  std::optional<std::size_t> find(std::span<const std::uint8_t> digits) const;

  // Spin projection of `site` in configuration i.
  double m(std::size_t i, int site) const;
  // Total pair number of configuration i.
  int pairs(std::size_t i) const;

  bool same_space(const Basis& other) const {
    return layout_ == other.layout_ && N_ == other.N_;
  }
  std::string describe() const;

  Basis(Layout layout, std::optional<int> N, std::vector<std::uint8_t> digits);

 private:
  Layout layout_;
  std::optional<int> N_;
  std::size_t stride_;
  std::size_t dim_;
  std::vector<std::uint8_t> digits_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Number of configurations with total pair number N, by dynamic programming
// over slots (no enumeration). Equals Omega(I, N) for the combined layout.
std::size_t sector_dimension(const Layout& layout, int N);

// Sector of the electron + bath space with total pair number N.
BasisPtr enumerate_sector(const SpinBathSpec& spec, int N);
BasisPtr full_space(const SpinBathSpec& spec);
// Bath-only sector with nuclear pair number n.
BasisPtr nuclear_sector(const SpinBathSpec& spec, int n);
BasisPtr nuclear_full_space(const SpinBathSpec& spec);
// Two-dimensional electron space, basis order (down, up).
BasisPtr electron_space();

struct KetState {
  BasisPtr basis;
  CVector amps;

  double norm() const { return amps.norm(); }
  KetState normalized() const;
  // <this|other>
  cplx inner(const KetState& other) const;
  static KetState zero(BasisPtr basis);
  static KetState basis_state(BasisPtr basis, std::size_t i);
  static KetState from_config(BasisPtr basis, std::span<const std::uint8_t> digits);
};

// Sparse operator between two bases (rectangular for ladder operators).
class LinearOp {
 public:
  LinearOp(BasisPtr domain, BasisPtr codomain, SparseOp matrix, bool hermitian = false);

  static LinearOp zero(BasisPtr domain, BasisPtr codomain);
  static LinearOp zero(BasisPtr domain) { return zero(domain, domain); }
  static LinearOp identity(BasisPtr domain);

  const BasisPtr& domain() const { return domain_; }
  const BasisPtr& codomain() const { return codomain_; }
  const SparseOp& matrix() const { return m_; }
  bool is_hermitian() const { return hermitian_; }
  bool is_square() const { return domain_->same_space(*codomain_); }

  // Verifies ||M - M^dagger||_max < 1e-12 (scaled by max(1, ||M||_max)) and
  // sets the flag; throws ContractViolation otherwise.
  LinearOp& mark_hermitian();
  double hermiticity_defect() const;

  LinearOp adjoint() const;
  KetState apply(const KetState& psi) const;
  CMatrix dense() const { return CMatrix(m_); }
  double max_abs() const;
  bool is_diagonal() const;

  LinearOp& operator+=(const LinearOp& rhs);
  LinearOp& operator-=(const LinearOp& rhs);
  LinearOp& operator*=(double s);

 private:
  BasisPtr domain_;
  BasisPtr codomain_;
  SparseOp m_;
  bool hermitian_ = false;
};

LinearOp operator+(LinearOp a, const LinearOp& b);
LinearOp operator-(LinearOp a, const LinearOp& b);
LinearOp operator*(double s, LinearOp a);
LinearOp operator*(cplx s, const LinearOp& a);
// Composition: (a * b) psi = a(b(psi)).
LinearOp operator*(const LinearOp& a, const LinearOp& b);
LinearOp commutator(const LinearOp& a, const LinearOp& b);

// Restriction of a full-space operator to a sector (rows and columns).
LinearOp restrict_to(const LinearOp& op, BasisPtr sector);
// Embedding of a sector state into the full space of the same layout.
KetState embed(const KetState& psi, BasisPtr full);

enum class Comp { z, plus, minus };

struct Factor {
  int site;
  Comp comp;
};

struct Term {
  cplx coeff;
  std::vector<Factor> factors;  // applied right to left
};

// A polynomial in single-site spin operators, materialized on demand over a
// chosen basis.
class OpSum {
 public:
  OpSum& add(cplx coeff, std::vector<Factor> factors);
  OpSum& add(const OpSum& other, cplx scale = 1.0);

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  // Change of total pair number produced by every term; throws if mixed.
  int pair_shift() const;

  // Codomain is derived from the domain and pair_shift().
  LinearOp build(BasisPtr domain) const;
  LinearOp build(BasisPtr domain, BasisPtr codomain) const;

 private:
  std::vector<Term> terms_;
};

// Codomain of an operator shifting N by `shift` on `domain`.
BasisPtr shifted_basis(const BasisPtr& domain, int shift);

OpSum spin_term(int site, Comp component);
// sum_i row_i I^i_mu / sqrt(2I)
OpSum collective_term(const SpinBathSpec& spec, const Eigen::VectorXd& row, Comp component);

LinearOp spin_op(const SpinBathSpec& spec, int site, Comp component, BasisPtr domain);
LinearOp collective_op(const SpinBathSpec& spec, const Eigen::VectorXd& row, Comp component,
                       BasisPtr domain);

struct PairNumberOps {
  LinearOp n_nuclear;  // n = sum_i n_i
  LinearOp N_total;    // N = n + n_0
  LinearOp J_z;        // S_z + sum_i I_z^i
};
PairNumberOps pair_number_ops(const SpinBathSpec& spec, BasisPtr domain);
// n_i = I_z^i + I  (site 1..K), n_0 = S_z + 1/2 (site 0)
LinearOp site_pair_number(const SpinBathSpec& spec, int site, BasisPtr domain);

struct PropagateOptions {
  std::size_t dense_limit = 4096;
  double tol = 1e-10;
  int max_subspace = 64;
};

// e^{-iHt} for a fixed hermitian H. The dense route caches the spectral
// decomposition so repeated calls are cheap.
class Propagator {
 public:
  explicit Propagator(const LinearOp& H, PropagateOptions options = {});

  KetState operator()(const KetState& psi, double t) const;
  bool uses_krylov() const { return krylov_; }
  // Total number of Krylov steps taken over the lifetime of this object.
  std::size_t krylov_steps() const { return steps_; }

 private:
  CVector krylov_apply(const CVector& v, double t) const;

  LinearOp H_;
  PropagateOptions opt_;
  bool diagonal_ = false;
  bool krylov_ = false;
  Eigen::VectorXd evals_;
  CMatrix evecs_;
  mutable std::size_t steps_ = 0;
};

KetState propagate(const LinearOp& H, const KetState& psi, double t,
                   PropagateOptions options = {});

// exp(-i t H) for a small dense hermitian matrix.
CMatrix dense_evolution(const CMatrix& H, double t);

}  // namespace dressbath
