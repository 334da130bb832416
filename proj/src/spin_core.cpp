#include "dressbath/spin_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dressbath/errors.hpp"

namespace dressbath {

namespace {

std::string key_of(std::span<const std::uint8_t> digits) {
  return {reinterpret_cast<const char*>(digits.data()), digits.size()};
}

// Appends all digit strings of slots [slot, end) summing to `remaining`.
void enumerate_digits(const Layout& layout, int slot, int remaining,
                      const std::vector<int>& capacity_after, std::vector<std::uint8_t>& current,
                      std::vector<std::uint8_t>& out) {
  const int slots = layout.slots();
  if (slot == slots) {
    if (remaining == 0) out.insert(out.end(), current.begin(), current.end());
    return;
  }
  const int top = layout.two_s(slot);
  for (int d = 0; d <= top && d <= remaining; ++d) {
    if (remaining - d > capacity_after[slot]) continue;
    current[slot] = static_cast<std::uint8_t>(d);
    enumerate_digits(layout, slot + 1, remaining - d, capacity_after, current, out);
  }
}

void check_layout(const Layout& layout) {
  if (layout.K < 0 || layout.two_I < 1) throw RangeError("invalid layout");
  if (layout.slots() == 0) throw RangeError("layout has no sites");
}

}  // namespace

double SpinBathSpec::sqrt_2I() const { return std::sqrt(static_cast<double>(two_I)); }

void SpinBathSpec::validate() const {
  if (K < 2) throw std::invalid_argument("K must be at least 2");
  if (two_I < 1) throw std::invalid_argument("2I must be a positive integer");
  if (alpha.size() != K) throw std::invalid_argument("alpha must have length K");
  if (!alpha.allFinite()) throw std::invalid_argument("alpha must be finite");
  if (std::abs(alpha.squaredNorm() - 1.0) > 1e-12)
    throw std::invalid_argument("alpha is not normalized: sum alpha_i^2 = " +
                                std::to_string(alpha.squaredNorm()));
  if (b.rows() != K || b.cols() != K) throw std::invalid_argument("b must be K x K");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  for (int i = 0; i < K; ++i) {
    if (b(i, i) != 0.0) throw std::invalid_argument("b must have zero diagonal");
    for (int j = i + 1; j < K; ++j)
      if (std::abs(b(i, j) - b(j, i)) > 1e-12 * scale)
        throw std::invalid_argument("b must be symmetric");
  }
}

SpinBathSpec SpinBathSpec::uniform(int K, int two_I, double A_hf) {
  return with_alpha(Eigen::VectorXd::Constant(K, 1.0 / std::sqrt(static_cast<double>(K))), two_I,
                    A_hf);
}

SpinBathSpec SpinBathSpec::with_alpha(Eigen::VectorXd alpha, int two_I, double A_hf) {
  SpinBathSpec s;
  s.K = static_cast<int>(alpha.size());
  s.two_I = two_I;
  s.alpha = std::move(alpha);
  s.A_hf = A_hf;
  s.b = Eigen::MatrixXd::Zero(s.K, s.K);
  return s;
}

int Layout::slot_of(int site) const {
  if (electron) {
    if (site < 0 || site > K) throw RangeError("site " + std::to_string(site) + " out of range");
    return site;
  }
  if (site < 1 || site > K) throw RangeError("site " + std::to_string(site) + " out of range");
  return site - 1;
}

Basis::Basis(Layout layout, std::optional<int> N, std::vector<std::uint8_t> digits)
    : layout_(layout),
      N_(N),
      stride_(static_cast<std::size_t>(layout.slots())),
      dim_(digits.size() / static_cast<std::size_t>(layout.slots())),
      digits_(std::move(digits)) {
  index_.reserve(dim_);
  for (std::size_t i = 0; i < dim_; ++i) index_.emplace(key_of(config(i)), i);
}

std::size_t sector_dimension(const Layout& layout, int N) {
  check_layout(layout);
  if (N < 0 || N > layout.max_pairs()) return 0;
  // counts[p] = number of prefixes with p pairs; saturates instead of overflowing
  std::vector<double> counts(static_cast<std::size_t>(N) + 1, 0.0);
  counts[0] = 1.0;
  for (int slot = 0; slot < layout.slots(); ++slot) {
    std::vector<double> next(counts.size(), 0.0);
    for (int p = 0; p <= N; ++p) {
      if (counts[p] == 0.0) continue;
      for (int d = 0; d <= layout.two_s(slot) && p + d <= N; ++d) next[p + d] += counts[p];
    }
    counts.swap(next);
  }
  if (counts[N] > static_cast<double>(std::numeric_limits<std::size_t>::max() / 2))
    return std::numeric_limits<std::size_t>::max() / 2;
  return static_cast<std::size_t>(counts[N]);
}

BasisPtr Basis::sector(const Layout& layout, int N) {
  check_layout(layout);
  if (N < 0 || N > layout.max_pairs())
    throw RangeError("pair number N=" + std::to_string(N) + " outside [0, " +
                     std::to_string(layout.max_pairs()) + "]");
  const std::size_t dim = sector_dimension(layout, N);
  if (dim > kMaxBasisDim)
    throw DimensionOverflow("sector N=" + std::to_string(N) + " has dimension " +
                            std::to_string(dim) + ", above the limit " +
                            std::to_string(kMaxBasisDim) + "; reduce K or I");
  const int slots = layout.slots();
  std::vector<int> capacity_after(static_cast<std::size_t>(slots), 0);
  for (int s = slots - 2; s >= 0; --s) capacity_after[s] = capacity_after[s + 1] + layout.two_s(s + 1);
  std::vector<std::uint8_t> current(static_cast<std::size_t>(slots), 0);
  std::vector<std::uint8_t> digits;
  digits.reserve(dim * static_cast<std::size_t>(slots));
  enumerate_digits(layout, 0, N, capacity_after, current, digits);
  return std::make_shared<const Basis>(layout, N, std::move(digits));
}

BasisPtr Basis::full(const Layout& layout) {
  check_layout(layout);
  const int slots = layout.slots();
  double dim = 1.0;
  for (int s = 0; s < slots; ++s) dim *= layout.two_s(s) + 1;
  if (dim > static_cast<double>(kMaxBasisDim))
    throw DimensionOverflow("full space has dimension " + std::to_string(dim) +
                            ", above the limit " + std::to_string(kMaxBasisDim) +
                            "; work in a conserved sector or reduce K");
  std::vector<std::uint8_t> digits;
  digits.reserve(static_cast<std::size_t>(dim) * static_cast<std::size_t>(slots));
  std::vector<std::uint8_t> current(static_cast<std::size_t>(slots), 0);
  while (true) {
    digits.insert(digits.end(), current.begin(), current.end());
    int s = slots - 1;
    while (s >= 0 && current[s] == layout.two_s(s)) current[s--] = 0;
    if (s < 0) break;
    ++current[s];
  }
  return std::make_shared<const Basis>(layout, std::nullopt, std::move(digits));
}

std::optional<std::size_t> Basis::find(std::span<const std::uint8_t> digits) const {
  auto it = index_.find(key_of(digits));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double Basis::m(std::size_t i, int site) const {
  const int slot = layout_.slot_of(site);
  return config(i)[slot] - 0.5 * layout_.two_s(slot);
}

int Basis::pairs(std::size_t i) const {
  int p = 0;
  for (auto d : config(i)) p += d;
  return p;
}

std::string Basis::describe() const {
  std::ostringstream os;
  os << (layout_.electron ? "electron+" : "") << "bath(K=" << layout_.K
     << ", 2I=" << layout_.two_I << ")";
  if (N_) os << " sector N=" << *N_;
  else os << " full space";
  os << " dim=" << dim_;
  return os.str();
}

BasisPtr enumerate_sector(const SpinBathSpec& spec, int N) {
  return Basis::sector(Layout{spec.K, spec.two_I, true}, N);
}

BasisPtr full_space(const SpinBathSpec& spec) { return Basis::full(Layout{spec.K, spec.two_I, true}); }

BasisPtr nuclear_sector(const SpinBathSpec& spec, int n) {
  return Basis::sector(Layout{spec.K, spec.two_I, false}, n);
}

BasisPtr nuclear_full_space(const SpinBathSpec& spec) {
  return Basis::full(Layout{spec.K, spec.two_I, false});
}

BasisPtr electron_space() {
  static const BasisPtr space = Basis::full(Layout{0, 1, true});
  return space;
}

// ---------------------------------------------------------------- KetState

KetState KetState::normalized() const {
  const double n = norm();
  if (n == 0.0) throw ContractViolation("cannot normalize the zero vector");
  return {basis, amps / n};
}

cplx KetState::inner(const KetState& other) const {
  if (!basis->same_space(*other.basis)) throw ContractViolation("inner product across bases");
  return amps.dot(other.amps);
}

KetState KetState::zero(BasisPtr basis) {
  const auto d = static_cast<Eigen::Index>(basis->dim());
  return {std::move(basis), CVector::Zero(d)};
}

KetState KetState::basis_state(BasisPtr basis, std::size_t i) {
  KetState k = zero(std::move(basis));
  k.amps(static_cast<Eigen::Index>(i)) = 1.0;
  return k;
}

KetState KetState::from_config(BasisPtr basis, std::span<const std::uint8_t> digits) {
  auto idx = basis->find(digits);
  if (!idx) throw RangeError("configuration not in " + basis->describe());
  return basis_state(std::move(basis), *idx);
}

// ---------------------------------------------------------------- LinearOp

LinearOp::LinearOp(BasisPtr domain, BasisPtr codomain, SparseOp matrix, bool hermitian)
    : domain_(std::move(domain)), codomain_(std::move(codomain)), m_(std::move(matrix)) {
  if (m_.cols() != static_cast<Eigen::Index>(domain_->dim()) ||
      m_.rows() != static_cast<Eigen::Index>(codomain_->dim()))
    throw ContractViolation("operator shape does not match its bases");
  m_.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) >= kDropTolerance; });
  m_.makeCompressed();
  if (hermitian) mark_hermitian();
}

LinearOp LinearOp::zero(BasisPtr domain, BasisPtr codomain) {
  SparseOp m(static_cast<Eigen::Index>(codomain->dim()), static_cast<Eigen::Index>(domain->dim()));
  const bool square = domain->same_space(*codomain);
  return LinearOp(std::move(domain), std::move(codomain), std::move(m), square);
}

LinearOp LinearOp::identity(BasisPtr domain) {
  const auto d = static_cast<Eigen::Index>(domain->dim());
  SparseOp m(d, d);
  m.setIdentity();
  return LinearOp(domain, domain, std::move(m), true);
}

double LinearOp::hermiticity_defect() const {
  if (!is_square()) return std::numeric_limits<double>::infinity();
  SparseOp diff = m_ - SparseOp(m_.adjoint());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
    for (SparseOp::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

LinearOp& LinearOp::mark_hermitian() {
  const double defect = hermiticity_defect();
  if (!(defect < 1e-12 * std::max(1.0, max_abs())))
    throw ContractViolation("operator is not hermitian (defect " + std::to_string(defect) + ")");
  hermitian_ = true;
  return *this;
}

LinearOp LinearOp::adjoint() const { return LinearOp(codomain_, domain_, SparseOp(m_.adjoint()), hermitian_); }

KetState LinearOp::apply(const KetState& psi) const {
  if (!psi.basis->same_space(*domain_))
    throw ContractViolation("state in " + psi.basis->describe() + " but operator acts on " +
                            domain_->describe());
  return {codomain_, m_ * psi.amps};
}

double LinearOp::max_abs() const {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < m_.outerSize(); ++k)
    for (SparseOp::InnerIterator it(m_, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

bool LinearOp::is_diagonal() const {
  for (Eigen::Index k = 0; k < m_.outerSize(); ++k)
    for (SparseOp::InnerIterator it(m_, k); it; ++it)
      if (it.row() != it.col()) return false;
  return is_square();
}

LinearOp& LinearOp::operator+=(const LinearOp& rhs) {
  if (!domain_->same_space(*rhs.domain_) || !codomain_->same_space(*rhs.codomain_))
    throw ContractViolation("sum of operators on different spaces");
  m_ += rhs.m_;
  m_.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) >= kDropTolerance; });
  hermitian_ = hermitian_ && rhs.hermitian_;
  return *this;
}

LinearOp& LinearOp::operator-=(const LinearOp& rhs) {
  if (!domain_->same_space(*rhs.domain_) || !codomain_->same_space(*rhs.codomain_))
    throw ContractViolation("difference of operators on different spaces");
  m_ -= rhs.m_;
  m_.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) >= kDropTolerance; });
  hermitian_ = hermitian_ && rhs.hermitian_;
  return *this;
}

LinearOp& LinearOp::operator*=(double s) {
  m_ *= cplx(s, 0.0);
  return *this;
}

LinearOp operator+(LinearOp a, const LinearOp& b) { return a += b; }
LinearOp operator-(LinearOp a, const LinearOp& b) { return a -= b; }
LinearOp operator*(double s, LinearOp a) { return a *= s; }

LinearOp operator*(cplx s, const LinearOp& a) {
  SparseOp m = a.matrix() * s;
  const bool herm = a.is_hermitian() && s.imag() == 0.0;
  return LinearOp(a.domain(), a.codomain(), std::move(m), herm);
}

LinearOp operator*(const LinearOp& a, const LinearOp& b) {
  if (!a.domain()->same_space(*b.codomain()))
    throw ContractViolation("cannot compose: " + a.domain()->describe() + " vs " +
                            b.codomain()->describe());
  SparseOp m = (a.matrix() * b.matrix()).pruned();
  return LinearOp(b.domain(), a.codomain(), std::move(m), false);
}

LinearOp commutator(const LinearOp& a, const LinearOp& b) { return a * b - b * a; }

LinearOp restrict_to(const LinearOp& op, BasisPtr sector) {
  const Basis& from = *op.domain();
  if (from.is_sector() || !op.is_square() || !(from.layout() == sector->layout()))
    throw ContractViolation("restrict_to expects a full-space square operator of the same layout");
  std::vector<Eigen::Index> rows(sector->dim());
  for (std::size_t i = 0; i < sector->dim(); ++i) {
    auto idx = from.find(sector->config(i));
    rows[i] = static_cast<Eigen::Index>(*idx);
  }
  const auto d = static_cast<Eigen::Index>(sector->dim());
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      const cplx v = op.matrix().coeff(rows[r], rows[c]);
      if (v != cplx(0.0)) trip.emplace_back(r, c, v);
    }
  SparseOp m(d, d);
  m.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(sector, sector, std::move(m), op.is_hermitian());
}

KetState embed(const KetState& psi, BasisPtr full) {
  if (!(psi.basis->layout() == full->layout()) || full->is_sector())
    throw ContractViolation("embed expects a full space of the same layout");
  KetState out = KetState::zero(full);
  for (std::size_t i = 0; i < psi.basis->dim(); ++i)
    out.amps(static_cast<Eigen::Index>(*full->find(psi.basis->config(i)))) =
        psi.amps(static_cast<Eigen::Index>(i));
  return out;
}

// ---------------------------------------------------------------- OpSum

OpSum& OpSum::add(cplx coeff, std::vector<Factor> factors) {
  terms_.push_back({coeff, std::move(factors)});
  return *this;
}

OpSum& OpSum::add(const OpSum& other, cplx scale) {
  for (const auto& t : other.terms_) terms_.push_back({t.coeff * scale, t.factors});
  return *this;
}

int OpSum::pair_shift() const {
  std::optional<int> shift;
  for (const auto& t : terms_) {
    int s = 0;
    for (const auto& f : t.factors) s += f.comp == Comp::plus ? 1 : (f.comp == Comp::minus ? -1 : 0);
    if (shift && *shift != s) throw ContractViolation("operator sum mixes pair-number shifts");
    shift = s;
  }
  return shift.value_or(0);
}

BasisPtr shifted_basis(const BasisPtr& domain, int shift) {
  if (!domain->is_sector() || shift == 0) return domain;
  const int target = *domain->pair_number() + shift;
  const Layout& l = domain->layout();
  if (target < 0 || target > l.max_pairs()) {
    // Empty codomain: every term annihilates the domain.
    return std::make_shared<const Basis>(l, target, std::vector<std::uint8_t>{});
  }
  return Basis::sector(l, target);
}

LinearOp OpSum::build(BasisPtr domain) const {
  return build(domain, shifted_basis(domain, pair_shift()));
}

LinearOp OpSum::build(BasisPtr domain, BasisPtr codomain) const {
  const Layout& layout = domain->layout();
  if (!(layout == codomain->layout())) throw ContractViolation("domain/codomain layouts differ");
  struct Step {
    int slot;
    int two_s;
    Comp comp;
  };
  std::vector<std::vector<Step>> plans;
  plans.reserve(terms_.size());
  for (const auto& t : terms_) {
    std::vector<Step> plan;
    for (auto it = t.factors.rbegin(); it != t.factors.rend(); ++it) {
      const int slot = layout.slot_of(it->site);
      plan.push_back({slot, layout.two_s(slot), it->comp});
    }
    plans.push_back(std::move(plan));
  }
  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<std::uint8_t> work(static_cast<std::size_t>(layout.slots()));
  for (std::size_t col = 0; col < domain->dim(); ++col) {
    const auto cfg = domain->config(col);
    for (std::size_t ti = 0; ti < terms_.size(); ++ti) {
      std::copy(cfg.begin(), cfg.end(), work.begin());
      double amp = 1.0;
      for (const auto& st : plans[ti]) {
        const int d = work[st.slot];
        const int m2 = 2 * d - st.two_s;  // twice the projection
        if (st.comp == Comp::z) {
          amp *= 0.5 * m2;
        } else if (st.comp == Comp::plus) {
          if (d == st.two_s) { amp = 0.0; break; }
          amp *= 0.5 * std::sqrt(static_cast<double>(st.two_s * (st.two_s + 2) - m2 * (m2 + 2)));
          work[st.slot] = static_cast<std::uint8_t>(d + 1);
        } else {
          if (d == 0) { amp = 0.0; break; }
          amp *= 0.5 * std::sqrt(static_cast<double>(st.two_s * (st.two_s + 2) - m2 * (m2 - 2)));
          work[st.slot] = static_cast<std::uint8_t>(d - 1);
        }
        if (amp == 0.0) break;
      }
      if (amp == 0.0) continue;
      auto row = codomain->find(work);
      if (!row) throw ContractViolation("operator maps outside its codomain " + codomain->describe());
      trip.emplace_back(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(col),
                        terms_[ti].coeff * amp);
    }
  }
  SparseOp m(static_cast<Eigen::Index>(codomain->dim()), static_cast<Eigen::Index>(domain->dim()));
  m.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(std::move(domain), std::move(codomain), std::move(m), false);
}

OpSum spin_term(int site, Comp component) {
  OpSum s;
  s.add(1.0, {{site, component}});
  return s;
}

OpSum collective_term(const SpinBathSpec& spec, const Eigen::VectorXd& row, Comp component) {
  if (row.size() != spec.K)
    throw std::invalid_argument("mode row has length " + std::to_string(row.size()) +
                                ", expected K=" + std::to_string(spec.K));
  if (!row.allFinite()) throw std::invalid_argument("mode row must be finite");
  OpSum s;
  const double norm = 1.0 / spec.sqrt_2I();
  for (int i = 0; i < spec.K; ++i)
    if (row(i) != 0.0) s.add(row(i) * norm, {{i + 1, component}});
  return s;
}

LinearOp spin_op(const SpinBathSpec& spec, int site, Comp component, BasisPtr domain) {
  if (site < 0 || site > spec.K) throw RangeError("site " + std::to_string(site) + " out of range");
  LinearOp op = spin_term(site, component).build(std::move(domain));
  if (component == Comp::z) op.mark_hermitian();
  return op;
}

LinearOp collective_op(const SpinBathSpec& spec, const Eigen::VectorXd& row, Comp component,
                       BasisPtr domain) {
  LinearOp op = collective_term(spec, row, component).build(std::move(domain));
  if (component == Comp::z) op.mark_hermitian();
  return op;
}

namespace {

// Diagonal operator whose entries come straight from configuration digits.
template <class Fn>
LinearOp diagonal_from_digits(const BasisPtr& domain, Fn&& value) {
  const auto d = static_cast<Eigen::Index>(domain->dim());
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double v = value(domain->config(static_cast<std::size_t>(i)));
    if (v != 0.0) trip.emplace_back(i, i, v);
  }
  SparseOp m(d, d);
  m.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(domain, domain, std::move(m), true);
}

}  // namespace

LinearOp site_pair_number(const SpinBathSpec& spec, int site, BasisPtr domain) {
  const int slot = domain->layout().slot_of(site);
  (void)spec;
  return diagonal_from_digits(domain, [slot](std::span<const std::uint8_t> c) {
    return static_cast<double>(c[slot]);
  });
}

PairNumberOps pair_number_ops(const SpinBathSpec& spec, BasisPtr domain) {
  const Layout& l = domain->layout();
  const int first = l.electron ? 1 : 0;
  LinearOp n = diagonal_from_digits(domain, [first](std::span<const std::uint8_t> c) {
    double s = 0.0;
    for (std::size_t k = static_cast<std::size_t>(first); k < c.size(); ++k) s += c[k];
    return s;
  });
  LinearOp N = n;
  if (l.electron) N += site_pair_number(spec, 0, domain);
  // J_z from the spin operators themselves, independent of the digit counts.
  OpSum jz;
  if (l.electron) jz.add(1.0, {{0, Comp::z}});
  for (int i = 1; i <= l.K; ++i) jz.add(1.0, {{i, Comp::z}});
  LinearOp Jz = jz.build(domain);
  Jz.mark_hermitian();
  return {std::move(n), std::move(N), std::move(Jz)};
}

// ---------------------------------------------------------------- propagation

CMatrix dense_evolution(const CMatrix& H, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  const CVector phases = (es.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Propagator::Propagator(const LinearOp& H, PropagateOptions options) : H_(H), opt_(options) {
  if (!H_.is_square()) throw ContractViolation("propagator needs a square operator");
  const double defect = H_.hermiticity_defect();
  if (!(defect < 1e-12 * std::max(1.0, H_.max_abs())))
    throw ContractViolation("propagate: H is not hermitian (defect " + std::to_string(defect) + ")");
  if (H_.is_diagonal()) {
    diagonal_ = true;
    evals_ = H_.matrix().diagonal().real();
    return;
  }
  if (H_.domain()->dim() > opt_.dense_limit) {
    krylov_ = true;
    return;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H_.dense());
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

KetState Propagator::operator()(const KetState& psi, double t) const {
  if (!psi.basis->same_space(*H_.domain()))
    throw ContractViolation("propagate: state in " + psi.basis->describe() + ", H on " +
                            H_.domain()->describe());
  if (t == 0.0) return psi;
  if (diagonal_) {
    const CVector phases = (evals_.cast<cplx>() * cplx(0.0, -t)).array().exp().matrix();
    return {psi.basis, phases.cwiseProduct(psi.amps)};
  }
  if (krylov_) return {psi.basis, krylov_apply(psi.amps, t)};
  const CVector phases = (evals_.cast<cplx>() * cplx(0.0, -t)).array().exp().matrix();
  return {psi.basis, evecs_ * phases.cwiseProduct(evecs_.adjoint() * psi.amps)};
}

// Lanczos with full reorthogonalization. The Krylov basis does not depend on
// the step length, so a rejected step only recomputes the small exponential.
CVector Propagator::krylov_apply(const CVector& v0, double t) const {
  const SparseOp& A = H_.matrix();
  const Eigen::Index n = A.rows();
  const int mmax = static_cast<int>(std::min<Eigen::Index>(opt_.max_subspace, n));
  CVector v = v0;
  double done = 0.0;
  const double total = std::abs(t);
  const double sign = t < 0 ? -1.0 : 1.0;
  double step = total;
  while (done < total) {
    const double beta = v.norm();
    if (beta == 0.0) return v;
    CMatrix V(n, mmax + 1);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(mmax);
    Eigen::VectorXd offdiag = Eigen::VectorXd::Zero(mmax);
    V.col(0) = v / beta;
    int m = 0;
    bool breakdown = false;
    for (; m < mmax; ++m) {
      CVector w = A * V.col(m);
      alpha(m) = V.col(m).dot(w).real();
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j <= m; ++j) w -= V.col(j).dot(w) * V.col(j);
      offdiag(m) = w.norm();
      if (offdiag(m) < 1e-13 * std::max(1.0, std::abs(alpha(m)))) {
        breakdown = true;
        ++m;
        break;
      }
      V.col(m + 1) = w / offdiag(m);
    }
    const int dim = m;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
      T(j, j) = alpha(j);
      if (j + 1 < dim) T(j, j + 1) = T(j + 1, j) = offdiag(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const double remaining = total - done;
    step = std::min(step, remaining);
    if (breakdown) step = remaining;
    CVector coeff;
    for (int attempt = 0;; ++attempt) {
      const CVector phases =
          (es.eigenvalues().cast<cplx>() * cplx(0.0, -sign * step)).array().exp().matrix();
      coeff = es.eigenvectors().cast<cplx>() *
              phases.cwiseProduct(es.eigenvectors().row(0).transpose().cast<cplx>());
      if (breakdown) break;
      const double err = beta * offdiag(dim - 1) * std::abs(coeff(dim - 1));
      if (err <= opt_.tol * step / total || attempt > 60) {
        if (attempt > 60) throw ConvergenceError("Krylov propagation failed to reach tolerance");
        break;
      }
      step *= 0.5;
    }
    v = beta * (V.leftCols(dim) * coeff);
    done += step;
    ++steps_;
    step = std::min(2.0 * step, total - done);
  }
  return v;
}

KetState propagate(const LinearOp& H, const KetState& psi, double t, PropagateOptions options) {
  if (t == 0.0) {
    if (!psi.basis->same_space(*H.domain())) throw ContractViolation("propagate: domain mismatch");
    if (!(H.hermiticity_defect() < 1e-12 * std::max(1.0, H.max_abs())))
      throw ContractViolation("propagate: H is not hermitian");
    return psi;
  }
  return Propagator(H, options)(psi, t);
}

}  // namespace dressbath
