#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace derivstab {

using Scalar = std::complex<double>;
using CVector = std::vector<Scalar>;

/// Dense row-major complex matrix. Small sizes only (at most 64 x 64 here).
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static CMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Scalar& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Scalar& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const Scalar> data() const noexcept { return data_; }
  std::span<Scalar> data() noexcept { return data_; }

  CVector column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const Scalar> values);

  CMatrix adjoint() const;
  CVector apply(std::span<const Scalar> x) const;

  double frobenius_norm() const;

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b);
  friend CMatrix operator+(const CMatrix& a, const CMatrix& b);
  friend CMatrix operator-(const CMatrix& a, const CMatrix& b);
  friend CMatrix operator*(Scalar s, const CMatrix& a);
  friend bool operator==(const CMatrix&, const CMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  CVector data_;
};

/// Largest singular value: square root of the top eigenvalue of A^H A, found
/// by Jacobi so that clustered singular values converge as fast as any other.
double spectral_norm(const CMatrix& a);

/// Eigen-decomposition of a real symmetric matrix (row-major, n x n).
struct SymmetricEigen {
  std::vector<double> values;
  std::vector<double> vectors;  // column k is the k-th eigenvector, row-major n x n
  int sweeps = 0;
};

/// Cyclic Jacobi. Converged when the off-diagonal Frobenius mass drops below
/// `off_tol` times the Frobenius norm of the input.
SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n, double off_tol = 1e-13,
                            int max_sweeps = 100);

/// H = V diag(values) V^H for a Hermitian H.
struct HermitianEigen {
  std::vector<double> values;
  CMatrix vectors;  // column k is the k-th eigenvector
  int sweeps = 0;
};

/// Cyclic complex Jacobi: each rotation first removes the phase of the pivot,
/// then applies the real rotation. Same convergence rule as jacobi_eigen.
HermitianEigen hermitian_jacobi(const CMatrix& h, double off_tol = 1e-14, int max_sweeps = 100);

/// Eigenvalues (ascending) of a Hermitian matrix.
std::vector<double> hermitian_eigenvalues(const CMatrix& h);

/// One eigen-decomposition of a Hermitian H, reusable for several functions.
/// Functions applied to the same spectrum commute up to the unitarity of the
/// shared eigenvectors.
class HermitianSpectrum {
 public:
  explicit HermitianSpectrum(const CMatrix& h) : eig_(hermitian_jacobi(h)) {}

  const std::vector<double>& values() const noexcept { return eig_.values; }
  double max_abs_eigenvalue() const noexcept;
  /// V diag(f(values)) V^H; f may be complex-valued.
  CMatrix apply(const std::function<Scalar(double)>& f) const;

 private:
  HermitianEigen eig_;
};

/// f(H) for Hermitian H through its eigen-decomposition.
CMatrix hermitian_function(const CMatrix& h, const std::function<double(double)>& f);

/// Euclidean norm of a coordinate vector.
double l2_norm(std::span<const Scalar> v);

}  // namespace derivstab
