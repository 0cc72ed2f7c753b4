#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "chosvd/errors.hpp"

namespace chosvd {

using Complex = std::complex<double>;

// Dense column-major complex matrix: entry (r, c) lives at r + rows*c.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {
    if (rows == 0 || cols == 0)
      throw UsageError("ComplexMatrix: dimensions must be positive");
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  Complex& operator()(std::size_t r, std::size_t c) {
    return data_[r + rows_ * c];
  }
  const Complex& operator()(std::size_t r, std::size_t c) const {
    return data_[r + rows_ * c];
  }

  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  bool all_finite() const {
    for (const Complex& z : data_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

// Dense column-major real matrix, used for phase features and statistics.
class RealMatrix {
 public:
  RealMatrix() = default;

  RealMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0)
      throw UsageError("RealMatrix: dimensions must be positive");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r + rows_ * c];
  }
  const double& operator()(std::size_t r, std::size_t c) const {
    return data_[r + rows_ * c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Third-order complex tensor with mode-1 fastest layout:
// entry (i1, i2, i3) lives at i1 + I1*(i2 + I2*i3).
class ComplexTensor3 {
 public:
  ComplexTensor3() = default;

  ComplexTensor3(std::size_t i1, std::size_t i2, std::size_t i3)
      : dims_{i1, i2, i3}, data_(i1 * i2 * i3) {
    if (i1 == 0 || i2 == 0 || i3 == 0)
      throw UsageError("ComplexTensor3: dimensions must be positive");
  }

  const std::array<std::size_t, 3>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Complex& operator()(std::size_t i1, std::size_t i2, std::size_t i3) {
    return data_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
  }
  const Complex& operator()(std::size_t i1, std::size_t i2,
                            std::size_t i3) const {
    return data_[i1 + dims_[0] * (i2 + dims_[1] * i3)];
  }

  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  bool all_finite() const {
    for (const Complex& z : data_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

 private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::vector<Complex> data_;
};

namespace detail {

inline void check_mode(int mode) {
  if (mode < 1 || mode > 3)
    throw UsageError("tensor mode must be 1, 2, or 3, got " +
                     std::to_string(mode));
}

}  // namespace detail

// Mode-n unfolding.  Rows index mode n; columns run over the remaining modes
// in ascending order with the earlier-listed mode varying fastest:
//   mode 1: column = i2 + I2*i3
//   mode 2: column = i1 + I1*i3
//   mode 3: column = i1 + I1*i2
inline ComplexMatrix unfold(const ComplexTensor3& t, int mode) {
  detail::check_mode(mode);
  if (t.empty()) throw UsageError("unfold: empty tensor");
  const auto& d = t.dims();
  const std::size_t i1n = d[0], i2n = d[1], i3n = d[2];
  switch (mode) {
    case 1: {
      // The storage order is already mode-1 major, so this is a reshape.
      ComplexMatrix m(i1n, i2n * i3n);
      m.data() = t.data();
      return m;
    }
    case 2: {
      ComplexMatrix m(i2n, i1n * i3n);
      for (std::size_t i3 = 0; i3 < i3n; ++i3)
        for (std::size_t i2 = 0; i2 < i2n; ++i2)
          for (std::size_t i1 = 0; i1 < i1n; ++i1)
            m(i2, i1 + i1n * i3) = t(i1, i2, i3);
      return m;
    }
    default: {
      ComplexMatrix m(i3n, i1n * i2n);
      for (std::size_t i3 = 0; i3 < i3n; ++i3)
        for (std::size_t i2 = 0; i2 < i2n; ++i2)
          for (std::size_t i1 = 0; i1 < i1n; ++i1)
            m(i3, i1 + i1n * i2) = t(i1, i2, i3);
      return m;
    }
  }
}

// Inverse of unfold for the given target dimensions.
inline ComplexTensor3 fold(const ComplexMatrix& m, int mode,
                           const std::array<std::size_t, 3>& dims) {
  detail::check_mode(mode);
  const std::size_t i1n = dims[0], i2n = dims[1], i3n = dims[2];
  if (i1n == 0 || i2n == 0 || i3n == 0)
    throw UsageError("fold: dimensions must be positive");
  const std::size_t mode_dim = dims[static_cast<std::size_t>(mode - 1)];
  const std::size_t rest = i1n * i2n * i3n / mode_dim;
  if (m.rows() != mode_dim || m.cols() != rest)
    throw UsageError("fold: matrix shape does not match target dimensions");
  ComplexTensor3 t(i1n, i2n, i3n);
  switch (mode) {
    case 1:
      t.data() = m.data();
      break;
    case 2:
      for (std::size_t i3 = 0; i3 < i3n; ++i3)
        for (std::size_t i2 = 0; i2 < i2n; ++i2)
          for (std::size_t i1 = 0; i1 < i1n; ++i1)
            t(i1, i2, i3) = m(i2, i1 + i1n * i3);
      break;
    default:
      for (std::size_t i3 = 0; i3 < i3n; ++i3)
        for (std::size_t i2 = 0; i2 < i2n; ++i2)
          for (std::size_t i1 = 0; i1 < i1n; ++i1)
            t(i1, i2, i3) = m(i3, i1 + i1n * i2);
      break;
  }
  return t;
}

inline ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows())
    throw UsageError("matmul: inner dimensions disagree");
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex bkj = b(k, j);
      if (bkj == Complex{}) continue;
      for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) += a(i, k) * bkj;
    }
  return c;
}

// Conjugate transpose.
inline ComplexMatrix adjoint(const ComplexMatrix& m) {
  ComplexMatrix a(m.cols(), m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (std::size_t r = 0; r < m.rows(); ++r) a(c, r) = std::conj(m(r, c));
  return a;
}

inline ComplexMatrix conjugate(const ComplexMatrix& m) {
  ComplexMatrix out = m;
  for (Complex& z : out.data()) z = std::conj(z);
  return out;
}

inline ComplexMatrix head_cols(const ComplexMatrix& m, std::size_t k) {
  if (k == 0 || k > m.cols())
    throw UsageError("head_cols: column count out of range");
  ComplexMatrix out(m.rows(), k);
  std::copy(m.data().begin(), m.data().begin() + m.rows() * k,
            out.data().begin());
  return out;
}

// Contracts mode `mode` of t with the columns of m: result has the mode-n
// dimension replaced by m.rows().  Requires m.cols() == t.dims()[mode-1].
inline ComplexTensor3 mode_product(const ComplexTensor3& t,
                                   const ComplexMatrix& m, int mode) {
  detail::check_mode(mode);
  const auto& d = t.dims();
  if (m.cols() != d[static_cast<std::size_t>(mode - 1)])
    throw UsageError("mode_product: matrix columns must match mode dimension");
  std::array<std::size_t, 3> out_dims = d;
  out_dims[static_cast<std::size_t>(mode - 1)] = m.rows();
  return fold(matmul(m, unfold(t, mode)), mode, out_dims);
}

inline double frobenius_norm(const ComplexMatrix& m) {
  double sum = 0.0;
  for (const Complex& z : m.data()) sum += std::norm(z);
  return std::sqrt(sum);
}

inline double frobenius_norm(const ComplexTensor3& t) {
  double sum = 0.0;
  for (const Complex& z : t.data()) sum += std::norm(z);
  return std::sqrt(sum);
}

}  // namespace chosvd
