#include "derivstab/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "derivstab/errors.hpp"

namespace derivstab {

namespace {

bool all_finite(std::span<const Scalar> v) {
  return std::all_of(v.begin(), v.end(), [](const Scalar& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

double max_abs_diff(std::span<const Scalar> a, std::span<const Scalar> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::string triple(std::size_t i, std::size_t j, std::size_t k) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + ")";
}

AlgebraDescriptor matrix_unit_descriptor(std::size_t n) {
  AlgebraDescriptor desc;
  desc.dim = n * n;
  desc.structure.assign(desc.dim * desc.dim * desc.dim, 0.0);
  desc.unit.assign(desc.dim, 0.0);
  // E_pq E_rs = [q == r] E_ps
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t s = 0; s < n; ++s) desc.c(p * n + q, q * n + s, p * n + s) = 1.0;
  for (std::size_t p = 0; p < n; ++p) desc.unit[p * n + p] = 1.0;
  desc.norm_kind = NormKind::Spectral;
  desc.involution = Involution::ConjugateTranspose;
  return desc;
}

}  // namespace

// ---------------------------------------------------------------- Algebra

Algebra::Algebra(AlgebraDescriptor desc) : desc_(std::move(desc)) {}

std::shared_ptr<const Algebra> Algebra::create(AlgebraDescriptor desc) {
  const std::size_t d = desc.dim;
  if (d == 0 || d > kMaxAlgebraDim)
    throw InvariantViolation("algebra dimension must be in [1, " + std::to_string(kMaxAlgebraDim) +
                             "], got " + std::to_string(d));
  if (desc.structure.size() != d * d * d)
    throw InvariantViolation("structure tensor must have dim^3 = " + std::to_string(d * d * d) +
                             " entries");
  if (desc.unit.size() != d) throw InvariantViolation("unit must have dim coordinates");
  if (!all_finite(desc.structure) || !all_finite(desc.unit))
    throw InvariantViolation("structure constants and unit must be finite");

  std::shared_ptr<Algebra> alg(new Algebra(std::move(desc)));
  alg->products_.resize(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        const Scalar c = alg->desc_.c(i, j, k);
        if (c != Scalar{}) alg->products_[i * d + j].push_back({k, c});
      }
  if (alg->desc_.norm_kind == NormKind::Spectral) {
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    if (n * n != d || n > kMaxMatrixOrder)
      throw InvariantViolation("spectral norm requires a matrix algebra M_n with n <= 8");
    alg->matrix_order_ = n;
  }
  alg->validate();
  return alg;
}

void Algebra::validate() const {
  const std::size_t d = desc_.dim;

  if (matrix_order_) {
    const auto reference = matrix_unit_descriptor(*matrix_order_);
    if (max_abs_diff(desc_.structure, reference.structure) > kAxiomTolerance)
      throw InvariantViolation("spectral norm requires the matrix-unit basis of M_n");
  } else {
    if (desc_.involution != Involution::None)
      throw InvariantViolation("an involution is only supported on matrix algebras (C*-mode)");
    if (desc_.weights.size() != d)
      throw InvariantViolation("weighted-l1 norm needs one weight per basis element");
    for (double w : desc_.weights)
      if (!(w > 0.0) || !std::isfinite(w))
        throw InvariantViolation("weighted-l1 weights must be positive and finite");
    // Sufficient condition for ||ab|| <= ||a|| ||b||: ||e_i e_j|| <= w_i w_j.
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double lhs = 0.0;
        for (const auto& t : product_terms(i, j)) lhs += desc_.weights[t.k] * std::abs(t.c);
        const double rhs = desc_.weights[i] * desc_.weights[j];
        if (lhs > rhs * (1.0 + kAxiomTolerance))
          throw InvariantViolation("weighted-l1 norm is not submultiplicative on e_" +
                                   std::to_string(i) + " e_" + std::to_string(j));
      }
  }

  CVector lhs(d);
  CVector rhs(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        std::fill(lhs.begin(), lhs.end(), Scalar{});
        std::fill(rhs.begin(), rhs.end(), Scalar{});
        for (const auto& t1 : product_terms(i, j))
          for (const auto& t2 : product_terms(t1.k, k)) lhs[t2.k] += t1.c * t2.c;
        for (const auto& t1 : product_terms(j, k))
          for (const auto& t2 : product_terms(i, t1.k)) rhs[t2.k] += t1.c * t2.c;
        for (std::size_t m = 0; m < d; ++m) lhs[m] -= rhs[m];
        if (l2_norm(lhs) > kAxiomTolerance)
          throw InvariantViolation("structure constants are not associative on basis triple " +
                                   triple(i, j, k));
      }

  for (std::size_t i = 0; i < d; ++i) {
    CVector ei(d);
    ei[i] = 1.0;
    const CVector left = multiply(desc_.unit, ei);
    const CVector right = multiply(ei, desc_.unit);
    if (max_abs_diff(left, ei) > kAxiomTolerance || max_abs_diff(right, ei) > kAxiomTolerance)
      throw InvariantViolation("unit does not act as a two-sided identity on e_" + std::to_string(i));
  }
}

CVector Algebra::multiply(std::span<const Scalar> a, std::span<const Scalar> b) const {
  const std::size_t d = desc_.dim;
  CVector out(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (a[i] == Scalar{}) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (b[j] == Scalar{}) continue;
      const Scalar ab = a[i] * b[j];
      for (const auto& t : product_terms(i, j)) out[t.k] += ab * t.c;
    }
  }
  return out;
}

double Algebra::norm(std::span<const Scalar> a) const {
  if (matrix_order_) return spectral_norm(to_matrix(a));
  double sum = 0.0;
  for (std::size_t i = 0; i < desc_.dim; ++i) sum += desc_.weights[i] * std::abs(a[i]);
  return sum;
}

CVector Algebra::adjoint(std::span<const Scalar> a) const {
  if (!has_involution()) throw InvariantViolation("algebra has no involution");
  const std::size_t n = *matrix_order_;
  CVector out(desc_.dim);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) out[p * n + q] = std::conj(a[q * n + p]);
  return out;
}

CMatrix Algebra::to_matrix(std::span<const Scalar> a) const {
  if (!matrix_order_) throw InvariantViolation("not a matrix algebra");
  const std::size_t n = *matrix_order_;
  CMatrix m(n, n);
  std::copy(a.begin(), a.end(), m.data().begin());
  return m;
}

CVector Algebra::from_matrix(const CMatrix& m) const {
  if (!matrix_order_ || m.rows() != *matrix_order_ || m.cols() != *matrix_order_)
    throw InvariantViolation("matrix shape does not match the algebra");
  return CVector(m.data().begin(), m.data().end());
}

Element Algebra::element(CVector coords) const { return Element(shared_from_this(), std::move(coords)); }
Element Algebra::zero() const { return element(CVector(desc_.dim)); }
Element Algebra::unit() const { return element(desc_.unit); }

Element Algebra::basis(std::size_t i) const {
  CVector v(desc_.dim);
  v.at(i) = 1.0;
  return element(std::move(v));
}

// ---------------------------------------------------------------- Bimodule

Bimodule::Bimodule(std::shared_ptr<const Algebra> algebra, BimoduleDescriptor desc, bool self)
    : algebra_(std::move(algebra)), desc_(std::move(desc)), self_(self) {}

std::shared_ptr<const Bimodule> Bimodule::create(std::shared_ptr<const Algebra> algebra,
                                                 BimoduleDescriptor desc) {
  if (!algebra) throw InvariantViolation("bimodule needs an algebra");
  const std::size_t d = algebra->dim();
  const std::size_t m = desc.dim;
  if (m == 0 || m > kMaxAlgebraDim) throw InvariantViolation("bimodule dimension out of range");
  if (desc.left.size() != d * m * m || desc.right.size() != m * d * m)
    throw InvariantViolation("action tensors have the wrong size");
  if (!all_finite(desc.left) || !all_finite(desc.right))
    throw InvariantViolation("action tensors must be finite");
  if (algebra->norm_kind() != NormKind::WeightedL1)
    throw InvariantViolation("tensor-given bimodules require a weighted-l1 algebra norm");
  if (desc.weights.size() != m) throw InvariantViolation("bimodule needs one weight per basis vector");
  for (double w : desc.weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw InvariantViolation("bimodule weights must be positive");

  std::shared_ptr<Bimodule> mod(new Bimodule(std::move(algebra), std::move(desc), false));
  mod->left_.resize(d * m);
  mod->right_.resize(m * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        const Scalar l = mod->desc_.left[(i * m + j) * m + k];
        if (l != Scalar{}) mod->left_[i * m + j].push_back({k, l});
        const Scalar r = mod->desc_.right[(j * d + i) * m + k];
        if (r != Scalar{}) mod->right_[j * d + i].push_back({k, r});
      }
  mod->validate();
  return mod;
}

std::shared_ptr<const Bimodule> Bimodule::self(std::shared_ptr<const Algebra> algebra) {
  if (!algebra) throw InvariantViolation("bimodule needs an algebra");
  const std::size_t d = algebra->dim();
  BimoduleDescriptor desc;
  desc.dim = d;
  desc.left.assign(d * d * d, 0.0);
  desc.right.assign(d * d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        desc.left[(i * d + j) * d + k] = algebra->descriptor().c(i, j, k);
        desc.right[(j * d + i) * d + k] = algebra->descriptor().c(j, i, k);
      }
  desc.weights = algebra->descriptor().weights;

  std::shared_ptr<Bimodule> mod(new Bimodule(algebra, std::move(desc), true));
  mod->left_.resize(d * d);
  mod->right_.resize(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      for (const auto& t : algebra->product_terms(i, j)) mod->left_[i * d + j].push_back({t.k, t.c});
      for (const auto& t : algebra->product_terms(j, i)) mod->right_[j * d + i].push_back({t.k, t.c});
    }
  mod->validate();
  return mod;
}

void Bimodule::validate() const {
  const std::size_t d = algebra_->dim();
  const std::size_t m = desc_.dim;
  const auto& unit = algebra_->descriptor().unit;

  for (std::size_t j = 0; j < m; ++j) {
    CVector xj(m);
    xj[j] = 1.0;
    if (max_abs_diff(act_left(unit, xj), xj) > kAxiomTolerance ||
        max_abs_diff(act_right(xj, unit), xj) > kAxiomTolerance)
      throw InvariantViolation("bimodule is not unit-linked on x_" + std::to_string(j));
  }

  // Self-bimodule axioms reduce to associativity, already checked on the algebra.
  if (self_) return;

  const auto& w = algebra_->descriptor().weights;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double l = 0.0;
      for (const auto& t : left_[i * m + j]) l += desc_.weights[t.k] * std::abs(t.c);
      double r = 0.0;
      for (const auto& t : right_[j * d + i]) r += desc_.weights[t.k] * std::abs(t.c);
      const double bound = w[i] * desc_.weights[j] * (1.0 + kAxiomTolerance);
      if (l > bound || r > bound)
        throw InvariantViolation("module norm is not compatible with the algebra norm at " +
                                 triple(i, j, 0));
    }

  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      CVector ei(d), ej(d);
      ei[i] = 1.0;
      ej[j] = 1.0;
      const CVector eiej = algebra_->multiply(ei, ej);
      for (std::size_t k = 0; k < m; ++k) {
        CVector xk(m);
        xk[k] = 1.0;
        const bool ok =
            max_abs_diff(act_left(eiej, xk), act_left(ei, act_left(ej, xk))) <= kAxiomTolerance &&
            max_abs_diff(act_right(xk, eiej), act_right(act_right(xk, ei), ej)) <= kAxiomTolerance &&
            max_abs_diff(act_right(act_left(ei, xk), ej), act_left(ei, act_right(xk, ej))) <=
                kAxiomTolerance;
        if (!ok) throw InvariantViolation("bimodule actions are not associative at " + triple(i, j, k));
      }
    }
}

CVector Bimodule::act_left(std::span<const Scalar> a, std::span<const Scalar> x) const {
  const std::size_t d = algebra_->dim();
  const std::size_t m = desc_.dim;
  CVector out(m);
  for (std::size_t i = 0; i < d; ++i) {
    if (a[i] == Scalar{}) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (x[j] == Scalar{}) continue;
      const Scalar ax = a[i] * x[j];
      for (const auto& t : left_[i * m + j]) out[t.k] += ax * t.c;
    }
  }
  return out;
}

CVector Bimodule::act_right(std::span<const Scalar> x, std::span<const Scalar> a) const {
  const std::size_t d = algebra_->dim();
  const std::size_t m = desc_.dim;
  CVector out(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (x[j] == Scalar{}) continue;
    for (std::size_t i = 0; i < d; ++i) {
      if (a[i] == Scalar{}) continue;
      const Scalar xa = x[j] * a[i];
      for (const auto& t : right_[j * d + i]) out[t.k] += xa * t.c;
    }
  }
  return out;
}

double Bimodule::norm(std::span<const Scalar> x) const {
  if (self_) return algebra_->norm(x);
  double sum = 0.0;
  for (std::size_t k = 0; k < desc_.dim; ++k) sum += desc_.weights[k] * std::abs(x[k]);
  return sum;
}

CVector Bimodule::adjoint(std::span<const Scalar> x) const {
  if (!self_) throw InvariantViolation("module adjoint needs the self-bimodule of a C*-algebra");
  return algebra_->adjoint(x);
}

ModuleElement Bimodule::element(CVector coords) const {
  return ModuleElement(shared_from_this(), std::move(coords));
}
ModuleElement Bimodule::zero() const { return element(CVector(desc_.dim)); }

ModuleElement Bimodule::basis(std::size_t k) const {
  CVector v(desc_.dim);
  v.at(k) = 1.0;
  return element(std::move(v));
}

// ---------------------------------------------------------------- elements

Element::Element(std::shared_ptr<const Algebra> algebra, CVector coords)
    : algebra_(std::move(algebra)), coords_(std::move(coords)) {
  if (!algebra_) throw InvariantViolation("element without algebra");
  if (coords_.size() != algebra_->dim())
    throw InvariantViolation("element has " + std::to_string(coords_.size()) +
                             " coordinates, algebra dimension is " + std::to_string(algebra_->dim()));
  if (!all_finite(coords_)) throw InvariantViolation("element coordinates must be finite");
}

bool Element::is_zero() const noexcept {
  return std::all_of(coords_.begin(), coords_.end(), [](const Scalar& z) { return z == Scalar{}; });
}

ModuleElement::ModuleElement(std::shared_ptr<const Bimodule> bimodule, CVector coords)
    : bimodule_(std::move(bimodule)), coords_(std::move(coords)) {
  if (!bimodule_) throw InvariantViolation("module element without bimodule");
  if (coords_.size() != bimodule_->dim())
    throw InvariantViolation("module element has the wrong number of coordinates");
  if (!all_finite(coords_)) throw InvariantViolation("module element coordinates must be finite");
}

bool ModuleElement::is_zero() const noexcept {
  return std::all_of(coords_.begin(), coords_.end(), [](const Scalar& z) { return z == Scalar{}; });
}

namespace {

void require_same(const Element& a, const Element& b) {
  if (a.algebra_ptr() != b.algebra_ptr()) throw HandleMismatch("elements belong to different algebras");
}

void require_same(const ModuleElement& x, const ModuleElement& y) {
  if (x.bimodule_ptr() != y.bimodule_ptr())
    throw HandleMismatch("module elements belong to different bimodules");
}

void require_same(const Element& a, const ModuleElement& x) {
  if (a.algebra_ptr() != x.bimodule().algebra_ptr())
    throw HandleMismatch("element does not act on this bimodule");
}

template <class F>
CVector zip(std::span<const Scalar> a, std::span<const Scalar> b, F f) {
  CVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Element operator+(const Element& a, const Element& b) {
  require_same(a, b);
  return Element(a.algebra_ptr(), zip(a.coords(), b.coords(), std::plus<>{}));
}

Element operator-(const Element& a, const Element& b) {
  require_same(a, b);
  return Element(a.algebra_ptr(), zip(a.coords(), b.coords(), std::minus<>{}));
}

Element operator*(const Element& a, const Element& b) {
  require_same(a, b);
  return Element(a.algebra_ptr(), a.algebra().multiply(a.coords(), b.coords()));
}

Element operator*(Scalar s, const Element& a) {
  CVector out(a.coords().begin(), a.coords().end());
  for (auto& v : out) v *= s;
  return Element(a.algebra_ptr(), std::move(out));
}

double norm(const Element& a) { return a.algebra().norm(a.coords()); }

Element adjoint(const Element& a) { return Element(a.algebra_ptr(), a.algebra().adjoint(a.coords())); }

ModuleElement operator+(const ModuleElement& x, const ModuleElement& y) {
  require_same(x, y);
  return ModuleElement(x.bimodule_ptr(), zip(x.coords(), y.coords(), std::plus<>{}));
}

ModuleElement operator-(const ModuleElement& x, const ModuleElement& y) {
  require_same(x, y);
  return ModuleElement(x.bimodule_ptr(), zip(x.coords(), y.coords(), std::minus<>{}));
}

ModuleElement operator*(Scalar s, const ModuleElement& x) {
  CVector out(x.coords().begin(), x.coords().end());
  for (auto& v : out) v *= s;
  return ModuleElement(x.bimodule_ptr(), std::move(out));
}

ModuleElement operator*(const Element& a, const ModuleElement& x) {
  require_same(a, x);
  return ModuleElement(x.bimodule_ptr(), x.bimodule().act_left(a.coords(), x.coords()));
}

ModuleElement operator*(const ModuleElement& x, const Element& a) {
  require_same(a, x);
  return ModuleElement(x.bimodule_ptr(), x.bimodule().act_right(x.coords(), a.coords()));
}

double norm(const ModuleElement& x) { return x.bimodule().norm(x.coords()); }

ModuleElement adjoint(const ModuleElement& x) {
  return ModuleElement(x.bimodule_ptr(), x.bimodule().adjoint(x.coords()));
}

ModuleElement as_module(const std::shared_ptr<const Bimodule>& self, const Element& a) {
  if (!self->is_self()) throw HandleMismatch("not a self-bimodule");
  if (self->algebra_ptr() != a.algebra_ptr()) throw HandleMismatch("element is from another algebra");
  return ModuleElement(self, CVector(a.coords().begin(), a.coords().end()));
}

Element as_algebra(const ModuleElement& x) {
  if (!x.bimodule().is_self()) throw HandleMismatch("not a self-bimodule");
  return Element(x.bimodule().algebra_ptr(), CVector(x.coords().begin(), x.coords().end()));
}

// ---------------------------------------------------------------- factories

std::shared_ptr<const Algebra> make_matrix_algebra(std::size_t n) {
  if (n < 1 || n > kMaxMatrixOrder)
    throw InvariantViolation("matrix order must be in [1, 8], got " + std::to_string(n));
  return Algebra::create(matrix_unit_descriptor(n));
}

std::shared_ptr<const Algebra> make_pauli_algebra() {
  AlgebraDescriptor desc;
  desc.dim = 4;
  desc.structure.assign(64, 0.0);
  desc.unit = {1.0, 0.0, 0.0, 0.0};
  desc.weights = {1.0, 1.0, 1.0, 1.0};
  desc.norm_kind = NormKind::WeightedL1;
  const Scalar i{0.0, 1.0};
  for (std::size_t a = 0; a < 4; ++a) {
    desc.c(0, a, a) = 1.0;
    desc.c(a, 0, a) = 1.0;
  }
  // sigma_a sigma_b = delta_ab 1 + i eps_abc sigma_c
  for (std::size_t a = 1; a < 4; ++a) desc.c(a, a, 0) = 1.0;
  desc.c(1, 2, 3) = i;
  desc.c(2, 3, 1) = i;
  desc.c(3, 1, 2) = i;
  desc.c(2, 1, 3) = -i;
  desc.c(3, 2, 1) = -i;
  desc.c(1, 3, 2) = -i;
  return Algebra::create(std::move(desc));
}

std::shared_ptr<const Bimodule> make_self_bimodule(const std::shared_ptr<const Algebra>& algebra) {
  return Bimodule::self(algebra);
}

}  // namespace derivstab
