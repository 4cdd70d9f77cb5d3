#pragma once

// Finite-dimensional complex normed algebras given by structure constants,
// their unit-linked bimodules, and the elements living in them.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "derivstab/linalg.hpp"

namespace derivstab {

enum class NormKind {
  Spectral,    ///< operator norm; only for matrix algebras in the matrix-unit basis
  WeightedL1,  ///< sum_i w_i |a_i| with weights validated against the structure constants
};

enum class Involution {
  None,
  ConjugateTranspose,
};

/// Plain description of an algebra: e_i e_j = sum_k c[i][j][k] e_k.
struct AlgebraDescriptor {
  std::size_t dim = 0;
  CVector structure;  // dim^3 entries, index (i * dim + j) * dim + k
  CVector unit;
  NormKind norm_kind = NormKind::WeightedL1;
  std::vector<double> weights;  // WeightedL1 only
  Involution involution = Involution::None;

  Scalar& c(std::size_t i, std::size_t j, std::size_t k) { return structure[(i * dim + j) * dim + k]; }
  Scalar c(std::size_t i, std::size_t j, std::size_t k) const {
    return structure[(i * dim + j) * dim + k];
  }
};

/// Plain description of a bimodule X over an algebra of dimension d:
/// e_i . x_j = sum_k L[i][j][k] x_k  and  x_j . e_i = sum_k R[j][i][k] x_k.
struct BimoduleDescriptor {
  std::size_t dim = 0;
  CVector left;   // d * m * m, index (i * m + j) * m + k
  CVector right;  // m * d * m, index (j * d + i) * m + k
  std::vector<double> weights;  // weighted-l1 module norm
};

inline constexpr double kAxiomTolerance = 1e-12;
inline constexpr std::size_t kMaxAlgebraDim = 64;
inline constexpr std::size_t kMaxMatrixOrder = 8;

class Element;

/// Validated, immutable algebra. Construction checks associativity on every
/// basis triple, the two-sided unit, and the norm's submultiplicativity
/// condition; any violation throws InvariantViolation.
class Algebra : public std::enable_shared_from_this<Algebra> {
 public:
  static std::shared_ptr<const Algebra> create(AlgebraDescriptor desc);

  const AlgebraDescriptor& descriptor() const noexcept { return desc_; }
  std::size_t dim() const noexcept { return desc_.dim; }
  NormKind norm_kind() const noexcept { return desc_.norm_kind; }
  bool has_involution() const noexcept { return desc_.involution != Involution::None; }
  /// n when this is M_n(C) in the matrix-unit basis (spectral norm).
  std::optional<std::size_t> matrix_order() const noexcept { return matrix_order_; }

  CVector multiply(std::span<const Scalar> a, std::span<const Scalar> b) const;
  double norm(std::span<const Scalar> a) const;
  CVector adjoint(std::span<const Scalar> a) const;

  CMatrix to_matrix(std::span<const Scalar> a) const;
  CVector from_matrix(const CMatrix& m) const;

  Element element(CVector coords) const;
  Element zero() const;
  Element unit() const;
  Element basis(std::size_t i) const;

  struct Term {
    std::size_t k;
    Scalar c;
  };
  /// Nonzero structure constants of e_i e_j.
  std::span<const Term> product_terms(std::size_t i, std::size_t j) const {
    return products_[i * desc_.dim + j];
  }

 private:
  explicit Algebra(AlgebraDescriptor desc);
  void validate() const;

  AlgebraDescriptor desc_;
  std::optional<std::size_t> matrix_order_;
  std::vector<std::vector<Term>> products_;
};

class ModuleElement;

/// Validated, immutable unit-linked bimodule.
class Bimodule : public std::enable_shared_from_this<Bimodule> {
 public:
  static std::shared_ptr<const Bimodule> create(std::shared_ptr<const Algebra> algebra,
                                                BimoduleDescriptor desc);
  /// X = A with both actions given by the algebra product.
  static std::shared_ptr<const Bimodule> self(std::shared_ptr<const Algebra> algebra);

  const Algebra& algebra() const noexcept { return *algebra_; }
  const std::shared_ptr<const Algebra>& algebra_ptr() const noexcept { return algebra_; }
  const BimoduleDescriptor& descriptor() const noexcept { return desc_; }
  std::size_t dim() const noexcept { return desc_.dim; }
  bool is_self() const noexcept { return self_; }

  CVector act_left(std::span<const Scalar> a, std::span<const Scalar> x) const;
  CVector act_right(std::span<const Scalar> x, std::span<const Scalar> a) const;
  double norm(std::span<const Scalar> x) const;
  /// Only for self-bimodules over an algebra with involution.
  CVector adjoint(std::span<const Scalar> x) const;

  ModuleElement element(CVector coords) const;
  ModuleElement zero() const;
  ModuleElement basis(std::size_t k) const;

 private:
  Bimodule(std::shared_ptr<const Algebra> algebra, BimoduleDescriptor desc, bool self);
  void validate() const;

  struct Term {
    std::size_t k;
    Scalar c;
  };

  std::shared_ptr<const Algebra> algebra_;
  BimoduleDescriptor desc_;
  bool self_ = false;
  std::vector<std::vector<Term>> left_;   // [i * m + j]
  std::vector<std::vector<Term>> right_;  // [j * d + i]
};

/// Coordinates of an algebra element together with the algebra they belong to.
class Element {
 public:
  Element(std::shared_ptr<const Algebra> algebra, CVector coords);

  const Algebra& algebra() const noexcept { return *algebra_; }
  const std::shared_ptr<const Algebra>& algebra_ptr() const noexcept { return algebra_; }
  std::span<const Scalar> coords() const noexcept { return coords_; }
  Scalar operator[](std::size_t i) const { return coords_[i]; }
  std::size_t size() const noexcept { return coords_.size(); }
  bool is_zero() const noexcept;

 private:
  std::shared_ptr<const Algebra> algebra_;
  CVector coords_;
};

class ModuleElement {
 public:
  ModuleElement(std::shared_ptr<const Bimodule> bimodule, CVector coords);

  const Bimodule& bimodule() const noexcept { return *bimodule_; }
  const std::shared_ptr<const Bimodule>& bimodule_ptr() const noexcept { return bimodule_; }
  std::span<const Scalar> coords() const noexcept { return coords_; }
  Scalar operator[](std::size_t i) const { return coords_[i]; }
  std::size_t size() const noexcept { return coords_.size(); }
  bool is_zero() const noexcept;

 private:
  std::shared_ptr<const Bimodule> bimodule_;
  CVector coords_;
};

Element operator+(const Element& a, const Element& b);
Element operator-(const Element& a, const Element& b);
Element operator*(const Element& a, const Element& b);
Element operator*(Scalar s, const Element& a);
double norm(const Element& a);
Element adjoint(const Element& a);

ModuleElement operator+(const ModuleElement& x, const ModuleElement& y);
ModuleElement operator-(const ModuleElement& x, const ModuleElement& y);
ModuleElement operator*(Scalar s, const ModuleElement& x);
/// a . x
ModuleElement operator*(const Element& a, const ModuleElement& x);
/// x . a
ModuleElement operator*(const ModuleElement& x, const Element& a);
double norm(const ModuleElement& x);
ModuleElement adjoint(const ModuleElement& x);

/// Embeds an algebra element into its self-bimodule and back.
ModuleElement as_module(const std::shared_ptr<const Bimodule>& self, const Element& a);
Element as_algebra(const ModuleElement& x);

/// M_n(C) in the matrix-unit basis E_pq (coordinate index p * n + q), spectral
/// norm, conjugate-transpose involution. 1 <= n <= 8.
std::shared_ptr<const Algebra> make_matrix_algebra(std::size_t n);

/// M_2(C) in the basis {1, sigma_x, sigma_y, sigma_z} with the unweighted l1
/// norm: a non-C* normed presentation given purely by structure constants.
std::shared_ptr<const Algebra> make_pauli_algebra();

std::shared_ptr<const Bimodule> make_self_bimodule(const std::shared_ptr<const Algebra>& algebra);

}  // namespace derivstab
