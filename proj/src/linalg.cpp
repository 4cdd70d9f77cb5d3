#include "derivstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "derivstab/errors.hpp"

namespace derivstab {

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CVector CMatrix::column(std::size_t c) const {
  CVector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void CMatrix::set_column(std::size_t c, std::span<const Scalar> values) {
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

CVector CMatrix::apply(std::span<const Scalar> x) const {
  CVector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    Scalar acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) acc += (*this)(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

double CMatrix::frobenius_norm() const { return l2_norm(data_); }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const Scalar aik = a(i, k);
      if (aik == Scalar{}) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

CMatrix operator+(const CMatrix& a, const CMatrix& b) {
  CMatrix out = a;
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] += b.data_[i];
  return out;
}

CMatrix operator-(const CMatrix& a, const CMatrix& b) {
  CMatrix out = a;
  for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] -= b.data_[i];
  return out;
}

CMatrix operator*(Scalar s, const CMatrix& a) {
  CMatrix out = a;
  for (auto& v : out.data_) v *= s;
  return out;
}

double l2_norm(std::span<const Scalar> v) {
  // Scaled accumulation so 2^500-sized coordinates do not overflow.
  double scale = 0.0;
  for (const auto& z : v) scale = std::max({scale, std::abs(z.real()), std::abs(z.imag())});
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double sum = 0.0;
  for (const auto& z : v) {
    const double re = z.real() / scale;
    const double im = z.imag() / scale;
    sum += re * re + im * im;
  }
  return scale * std::sqrt(sum);
}

double spectral_norm(const CMatrix& a) {
  if (a.cols() == 0) return 0.0;
  const double fro = a.frobenius_norm();
  if (fro == 0.0) return 0.0;

  // Rescale by a power of two near ||A||_F: keeps A^H A in range and makes
  // the result exactly equivariant under dyadic scaling of A.
  const int exponent = std::ilogb(fro);
  const CMatrix scaled = Scalar(std::ldexp(1.0, -exponent)) * a;
  const auto eig = hermitian_jacobi(scaled.adjoint() * scaled);
  const double top = *std::max_element(eig.values.begin(), eig.values.end());
  return std::ldexp(std::sqrt(std::max(top, 0.0)), exponent);
}

SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n, double off_tol, int max_sweeps) {
  SymmetricEigen out;
  out.vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + i] = 1.0;
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };
  auto vec = [&](std::size_t r, std::size_t c) -> double& { return out.vectors[r * n + c]; };

  double fro = 0.0;
  for (double v : a) fro += v * v;
  fro = std::sqrt(fro);
  const double target = off_tol * fro;

  for (int sweep = 0;; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        if (p != q) off += at(p, q) * at(p, q);
    off = std::sqrt(off);
    if (off <= target) {
      out.sweeps = sweep;
      break;
    }
    if (sweep == max_sweeps)
      throw ConvergenceFailure("jacobi: off-diagonal mass " + std::to_string(off) +
                               " above tolerance after " + std::to_string(max_sweeps) + " sweeps");

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vec(k, p);
          const double vkq = vec(k, q);
          vec(k, p) = c * vkp - s * vkq;
          vec(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = at(i, i);
  return out;
}


HermitianEigen hermitian_jacobi(const CMatrix& h, double off_tol, int max_sweeps) {
  const std::size_t n = h.rows();
  CMatrix a(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) a(r, c) = 0.5 * (h(r, c) + std::conj(h(c, r)));
  HermitianEigen out{{}, CMatrix::identity(n), 0};
  CMatrix& v = out.vectors;
  const double target = off_tol * a.frobenius_norm();

  for (int sweep = 0;; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        if (p != q) off += std::norm(a(p, q));
    off = std::sqrt(off);
    if (off <= target) {
      out.sweeps = sweep;
      break;
    }
    if (sweep == max_sweeps)
      throw ConvergenceFailure("hermitian jacobi: off-diagonal mass " + std::to_string(off) +
                               " above tolerance after " + std::to_string(max_sweeps) + " sweeps");

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double beta = std::abs(a(p, q));
        if (beta == 0.0) continue;
        const Scalar phase = a(p, q) / beta;  // e^{i phi}
        const Scalar unphase = std::conj(phase);
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * beta);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::hypot(t, 1.0);
        const double s = t * c;
        // J = diag(1, e^{-i phi}) [[c, s], [-s, c]] on (p, q).
        const Scalar jqp = -s * unphase;
        const Scalar jqq = c * unphase;
        for (std::size_t k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp + jqp * akq;
          a(k, q) = s * akp + jqq * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk + std::conj(jqp) * aqk;
          a(q, k) = s * apk + std::conj(jqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const Scalar vkp = v(k, p);
          const Scalar vkq = v(k, q);
          v(k, p) = c * vkp + jqp * vkq;
          v(k, q) = s * vkp + jqq * vkq;
        }
      }
    }
  }
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i).real();
  return out;
}

std::vector<double> hermitian_eigenvalues(const CMatrix& h) {
  auto values = hermitian_jacobi(h).values;
  std::sort(values.begin(), values.end());
  return values;
}

double HermitianSpectrum::max_abs_eigenvalue() const noexcept {
  double out = 0.0;
  for (double v : eig_.values) out = std::max(out, std::abs(v));
  return out;
}

CMatrix HermitianSpectrum::apply(const std::function<Scalar(double)>& f) const {
  const std::size_t n = eig_.values.size();
  const CMatrix& v = eig_.vectors;
  std::vector<Scalar> fvals(n);
  for (std::size_t k = 0; k < n; ++k) fvals[k] = f(eig_.values[k]);
  CMatrix out(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      Scalar acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += v(r, k) * fvals[k] * std::conj(v(c, k));
      out(r, c) = acc;
    }
  return out;
}

CMatrix hermitian_function(const CMatrix& h, const std::function<double(double)>& f) {
  return HermitianSpectrum(h).apply([&f](double t) { return Scalar(f(t)); });
}

}  // namespace derivstab
