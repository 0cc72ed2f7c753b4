#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "chosvd/errors.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

// Economy-size singular value decomposition m = U diag(S) V^H with
// k = min(rows, cols) columns in U and V and S nonincreasing.
struct SvdResult {
  ComplexMatrix u;
  std::vector<double> s;
  ComplexMatrix v;
};

struct SvdOptions {
  // Stop when the off-diagonal Frobenius mass falls below this fraction of
  // the initial matrix norm.
  double convergence_tol = 1e-12;
  int max_sweeps = 100;
  // Switch to the one-sided algorithm when the estimated condition number
  // exceeds this value.
  double fallback_condition = 1e8;
};

namespace detail {

struct HermitianEig {
  std::vector<double> values;  // unordered
  ComplexMatrix vectors;       // columns, unitary
};

// One plane rotation that zeroes the (p, q) entry of the implicit Hermitian
// 2x2 block [[app, b], [conj(b), aqq]].  Returns c real and s complex with
// c^2 + |s|^2 = 1; the rotation matrix has columns (c, s) and (-conj(s), c).
inline void jacobi_rotation(double app, double aqq, Complex b, double& c,
                            Complex& s) {
  const double absb = std::abs(b);
  const Complex phase = b / absb;  // e^{i arg b}
  const double tau = (aqq - app) / (2.0 * absb);
  // Smaller-magnitude root of t^2 - 2*tau*t - 1 = 0, written without
  // cancellation.
  const double t = (tau >= 0.0) ? -1.0 / (tau + std::sqrt(tau * tau + 1.0))
                                : 1.0 / (-tau + std::sqrt(tau * tau + 1.0));
  c = 1.0 / std::sqrt(t * t + 1.0);
  s = std::conj(phase) * (t * c);
}

inline double offdiagonal_mass(const ComplexMatrix& a) {
  double sum = 0.0;
  for (std::size_t q = 0; q < a.cols(); ++q)
    for (std::size_t p = 0; p < a.rows(); ++p)
      if (p != q) sum += std::norm(a(p, q));
  return std::sqrt(sum);
}

// Cyclic Jacobi eigensolver for a Hermitian matrix.  Convergence is measured
// by the off-diagonal Frobenius mass relative to the initial norm.
inline HermitianEig jacobi_hermitian_eig(ComplexMatrix a, double tol,
                                         int max_sweeps) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw UsageError("eig: matrix must be square");
  // Force exact Hermitian symmetry so roundoff in the Gram product cannot
  // leak into complex eigenvalues.
  for (std::size_t p = 0; p < n; ++p) {
    a(p, p) = Complex{a(p, p).real(), 0.0};
    for (std::size_t q = p + 1; q < n; ++q) {
      const Complex mean = 0.5 * (a(p, q) + std::conj(a(q, p)));
      a(p, q) = mean;
      a(q, p) = std::conj(mean);
    }
  }
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale = frobenius_norm(a);
  HermitianEig out;
  out.values.resize(n);
  if (scale == 0.0 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i).real();
    out.vectors = std::move(v);
    return out;
  }
  const double threshold = tol * scale;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (offdiagonal_mass(a) <= threshold) {
      converged = true;
      break;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex b = a(p, q);
        if (std::abs(b) == 0.0) continue;
        double c;
        Complex s;
        jacobi_rotation(a(p, p).real(), a(q, q).real(), b, c, s);
        // a <- a * J (columns p, q)
        for (std::size_t i = 0; i < n; ++i) {
          const Complex ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap + s * aq;
          a(i, q) = -std::conj(s) * ap + c * aq;
        }
        // a <- J^H * a (rows p, q)
        for (std::size_t j = 0; j < n; ++j) {
          const Complex ap = a(p, j), aq = a(q, j);
          a(p, j) = c * ap + std::conj(s) * aq;
          a(q, j) = -s * ap + c * aq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = Complex{a(p, p).real(), 0.0};
        a(q, q) = Complex{a(q, q).real(), 0.0};
        // v <- v * J
        for (std::size_t i = 0; i < n; ++i) {
          const Complex vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp + s * vq;
          v(i, q) = -std::conj(s) * vp + c * vq;
        }
      }
    }
  }
  if (!converged && offdiagonal_mass(a) > threshold)
    throw NumericalError(
        "Jacobi eigensolver failed to converge: n=" + std::to_string(n) +
        ", residual off-diagonal mass " + std::to_string(offdiagonal_mass(a)) +
        " vs threshold " + std::to_string(threshold));
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i).real();
  out.vectors = std::move(v);
  return out;
}

// Indices that sort `values` in nonincreasing order; equal values keep their
// original relative order so ties resolve deterministically.
inline std::vector<std::size_t> descending_order(
    const std::vector<double>& values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  return idx;
}

// Appends orthonormal columns to u starting at column `from`, drawing
// candidates from the canonical basis (deterministic).
inline void complete_orthonormal(ComplexMatrix& u, std::size_t from) {
  const std::size_t n = u.rows();
  for (std::size_t j = from; j < u.cols(); ++j) {
    bool placed = false;
    for (std::size_t cand = 0; cand < n && !placed; ++cand) {
      std::vector<Complex> w(n, Complex{});
      w[cand] = 1.0;
      // Two Gram-Schmidt passes keep the result orthogonal to working
      // precision even when the candidate nearly lies in the current span.
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < j; ++i) {
          Complex dot{};
          for (std::size_t r = 0; r < n; ++r)
            dot += std::conj(u(r, i)) * w[r];
          for (std::size_t r = 0; r < n; ++r) w[r] -= dot * u(r, i);
        }
      }
      double nrm = 0.0;
      for (const Complex& z : w) nrm += std::norm(z);
      nrm = std::sqrt(nrm);
      if (nrm > 0.3) {
        for (std::size_t r = 0; r < n; ++r) u(r, j) = w[r] / nrm;
        placed = true;
      }
    }
    if (!placed)
      throw NumericalError("orthonormal completion found no candidate column");
  }
}

// Two-pass modified Gram-Schmidt on the columns of m, in place.  Throws if a
// column is numerically dependent on its predecessors.
inline void mgs_orthonormalize(ComplexMatrix& m) {
  const std::size_t rows = m.rows(), cols = m.cols();
  if (cols > rows)
    throw UsageError("mgs_orthonormalize: more columns than rows");
  for (std::size_t j = 0; j < cols; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        Complex dot{};
        for (std::size_t r = 0; r < rows; ++r)
          dot += std::conj(m(r, i)) * m(r, j);
        for (std::size_t r = 0; r < rows; ++r) m(r, j) -= dot * m(r, i);
      }
    }
    double nrm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) nrm += std::norm(m(r, j));
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12)
      throw NumericalError(
          "mgs_orthonormalize: rank-deficient column set at column " +
          std::to_string(j));
    for (std::size_t r = 0; r < rows; ++r) m(r, j) /= nrm;
  }
}

// Makes the largest-modulus entry of each U column real and positive and
// applies the compensating phase to the matching V column, so the
// decomposition is unique up to exactly degenerate ties.
inline void fix_column_phases(ComplexMatrix& u, ComplexMatrix& v) {
  for (std::size_t j = 0; j < u.cols(); ++j) {
    std::size_t best = 0;
    double best_mod = -1.0;
    for (std::size_t i = 0; i < u.rows(); ++i) {
      const double mod = std::abs(u(i, j));
      if (mod > best_mod + 1e-15 * (1.0 + best_mod)) {
        best_mod = mod;
        best = i;
      }
    }
    if (best_mod <= 0.0) continue;
    const Complex pivot = u(best, j);
    const Complex factor = std::conj(pivot) / std::abs(pivot);
    for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) *= factor;
    for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) *= factor;
    u(best, j) = Complex{std::abs(pivot), 0.0};
  }
}

// Worst deviation of u's columns from orthonormality (max |u_i^H u_j - d_ij|).
inline double orthonormality_defect(const ComplexMatrix& u) {
  double worst = 0.0;
  for (std::size_t j = 0; j < u.cols(); ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      Complex dot{};
      for (std::size_t r = 0; r < u.rows(); ++r)
        dot += std::conj(u(r, i)) * u(r, j);
      const double target = (i == j) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(dot - Complex{target, 0.0}));
    }
  }
  return worst;
}

// One-sided Jacobi on the columns of a tall matrix w (rows >= cols): returns
// left singular vectors in w's normalized columns, accumulates the right
// rotations in v.  Accurate at any condition number because it never forms
// the Gram matrix explicitly.
inline SvdResult one_sided_jacobi(ComplexMatrix w, double tol,
                                  int max_sweeps) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  ComplexMatrix v = ComplexMatrix::identity(cols);
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0;
        Complex gamma{};
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += std::norm(w(r, p));
          beta += std::norm(w(r, q));
          gamma += std::conj(w(r, p)) * w(r, q);
        }
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) ||
            std::abs(gamma) == 0.0)
          continue;
        ++rotations;
        double c;
        Complex s;
        jacobi_rotation(alpha, beta, gamma, c, s);
        for (std::size_t r = 0; r < rows; ++r) {
          const Complex wp = w(r, p), wq = w(r, q);
          w(r, p) = c * wp + s * wq;
          w(r, q) = -std::conj(s) * wp + c * wq;
        }
        for (std::size_t r = 0; r < cols; ++r) {
          const Complex vp = v(r, p), vq = v(r, q);
          v(r, p) = c * vp + s * vq;
          v(r, q) = -std::conj(s) * vp + c * vq;
        }
      }
    }
    if (rotations == 0) converged = true;
  }
  if (!converged)
    throw NumericalError("one-sided Jacobi failed to converge within " +
                         std::to_string(max_sweeps) + " sweeps");
  std::vector<double> norms(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) sum += std::norm(w(r, j));
    norms[j] = std::sqrt(sum);
  }
  const std::vector<std::size_t> order = descending_order(norms);
  SvdResult out;
  out.u = ComplexMatrix(rows, cols);
  out.v = ComplexMatrix(cols, cols);
  out.s.resize(cols);
  std::size_t filled = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    const std::size_t src = order[j];
    out.s[j] = norms[src];
    for (std::size_t r = 0; r < cols; ++r) out.v(r, j) = v(r, src);
    if (norms[src] > 0.0) {
      for (std::size_t r = 0; r < rows; ++r)
        out.u(r, j) = w(r, src) / norms[src];
      filled = j + 1;
    }
  }
  complete_orthonormal(out.u, filled);
  return out;
}

}  // namespace detail

// Economy SVD of a complex matrix.  The primary route diagonalizes the
// smaller Gram matrix with a Hermitian Jacobi sweep; when the spectrum is too
// spread for that route to be trustworthy (condition estimate beyond
// options.fallback_condition, or the recovered factor fails its
// orthonormality check) it falls back to one-sided Jacobi on the original
// columns.
inline SvdResult complex_svd(const ComplexMatrix& m,
                             const SvdOptions& options = {}) {
  if (m.empty()) throw UsageError("complex_svd: empty matrix");
  if (!m.all_finite())
    throw DataError("complex_svd: input contains non-finite entries");
  const std::size_t rows = m.rows(), cols = m.cols();
  const std::size_t k = std::min(rows, cols);

  const auto fallback = [&]() -> SvdResult {
    SvdResult r;
    if (rows >= cols) {
      r = detail::one_sided_jacobi(m, options.convergence_tol,
                                   options.max_sweeps);
    } else {
      // Run on the adjoint and swap factors: m = (V S U^H)^H of m^H.
      SvdResult t = detail::one_sided_jacobi(adjoint(m),
                                             options.convergence_tol,
                                             options.max_sweeps);
      r.u = std::move(t.v);
      r.v = std::move(t.u);
      r.s = std::move(t.s);
    }
    detail::fix_column_phases(r.u, r.v);
    return r;
  };

  // Gram matrix of the smaller side.
  const bool gram_left = rows < cols;  // m m^H when wide, m^H m when tall
  const std::size_t n = k;
  ComplexMatrix gram(n, n);
  if (gram_left) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i <= j; ++i) {
        Complex sum{};
        for (std::size_t c = 0; c < cols; ++c)
          sum += m(i, c) * std::conj(m(j, c));
        gram(i, j) = sum;
        gram(j, i) = std::conj(sum);
      }
  } else {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i <= j; ++i) {
        Complex sum{};
        for (std::size_t r = 0; r < rows; ++r)
          sum += std::conj(m(r, i)) * m(r, j);
        gram(i, j) = sum;
        gram(j, i) = std::conj(sum);
      }
  }
  detail::HermitianEig eig = detail::jacobi_hermitian_eig(
      gram, options.convergence_tol, options.max_sweeps);
  const std::vector<std::size_t> order = detail::descending_order(eig.values);

  SvdResult out;
  out.s.resize(k);
  ComplexMatrix small(n, n);  // eigenvector side, reordered
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t src = order[j];
    out.s[j] = std::sqrt(std::max(0.0, eig.values[src]));
    for (std::size_t r = 0; r < n; ++r) small(r, j) = eig.vectors(r, src);
  }
  const double smax = out.s[0];
  if (smax == 0.0) {
    // Zero matrix: all singular values vanish; return canonical bases.
    out.u = ComplexMatrix(rows, k);
    out.v = ComplexMatrix(cols, k);
    detail::complete_orthonormal(out.u, 0);
    detail::complete_orthonormal(out.v, 0);
    return out;
  }
  const double smin = out.s[k - 1];
  if (smin <= 0.0 || smax / smin > options.fallback_condition)
    return fallback();

  // Lift the eigenvectors through m to get the other factor.
  if (gram_left) {
    out.u = std::move(small);
    out.v = ComplexMatrix(cols, k);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < cols; ++c) {
        Complex sum{};
        for (std::size_t r = 0; r < rows; ++r)
          sum += std::conj(m(r, c)) * out.u(r, j);
        out.v(c, j) = sum / out.s[j];
      }
    if (detail::orthonormality_defect(out.v) > 1e-11) return fallback();
  } else {
    out.v = std::move(small);
    out.u = ComplexMatrix(rows, k);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t r = 0; r < rows; ++r) {
        Complex sum{};
        for (std::size_t c = 0; c < cols; ++c) sum += m(r, c) * out.v(c, j);
        out.u(r, j) = sum / out.s[j];
      }
    if (detail::orthonormality_defect(out.u) > 1e-11) return fallback();
  }
  detail::fix_column_phases(out.u, out.v);
  return out;
}

// Best rank-r approximation in the Frobenius sense (truncated SVD).
inline ComplexMatrix low_rank_approx(const ComplexMatrix& m, std::size_t r) {
  const std::size_t k = std::min(m.rows(), m.cols());
  if (r == 0 || r > k)
    throw UsageError("low_rank_approx: rank must be in [1, min(rows, cols)]");
  const SvdResult svd = complex_svd(m);
  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t j = 0; j < r; ++j) {
    if (svd.s[j] == 0.0) break;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const Complex w = svd.s[j] * std::conj(svd.v(c, j));
      for (std::size_t i = 0; i < m.rows(); ++i)
        out(i, c) += svd.u(i, j) * w;
    }
  }
  return out;
}

}  // namespace chosvd
