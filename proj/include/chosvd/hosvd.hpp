#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chosvd/errors.hpp"
#include "chosvd/linalg.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

// Requested truncation ranks per mode; nullopt keeps the mode at full rank.
struct HosvdRanks {
  std::optional<std::size_t> r1;
  std::optional<std::size_t> r2;
  std::optional<std::size_t> r3;

  std::optional<std::size_t> operator[](std::size_t i) const {
    return i == 0 ? r1 : (i == 1 ? r2 : r3);
  }
};

// Tucker factors of a third-order tensor: t ~ core x1 u1 x2 u2 x3 u3 with
// orthonormal factor columns.  mode_singular_values holds the full singular
// spectrum of each unfolding (not truncated), which both bounds the
// truncation error and drives energy-based rank selection.
struct HosvdFactors {
  ComplexMatrix u1, u2, u3;
  ComplexTensor3 core;
  std::array<std::vector<double>, 3> mode_singular_values;

  const ComplexMatrix& factor(std::size_t mode_index) const {
    return mode_index == 0 ? u1 : (mode_index == 1 ? u2 : u3);
  }
};

// Smallest rank whose leading singular values carry at least fraction tau of
// the total spectral energy (sum of squares).
inline std::size_t rank_for_energy(const std::vector<double>& singular_values,
                                   double tau) {
  if (singular_values.empty())
    throw UsageError("rank_for_energy: empty spectrum");
  if (tau <= 0.0 || tau > 1.0)
    throw UsageError("rank_for_energy: tau must be in (0, 1]");
  double total = 0.0;
  for (double s : singular_values) total += s * s;
  if (total == 0.0) return 1;
  double acc = 0.0;
  for (std::size_t r = 0; r < singular_values.size(); ++r) {
    acc += singular_values[r] * singular_values[r];
    if (acc >= tau * total) return r + 1;
  }
  return singular_values.size();
}

// Higher-order SVD: each factor holds the leading left singular vectors of
// the matching unfolding; the core is the tensor contracted against the
// conjugated factors.  Truncating mode n to R_n discards at most
// sum_n sum_{k>R_n} sigma_k(n)^2 of squared reconstruction error.
inline HosvdFactors hosvd(const ComplexTensor3& t,
                          const HosvdRanks& ranks = {},
                          const SvdOptions& svd_options = {}) {
  if (t.empty()) throw UsageError("hosvd: empty tensor");
  if (!t.all_finite())
    throw DataError("hosvd: tensor contains non-finite entries");
  const auto& d = t.dims();
  std::array<std::size_t, 3> r{};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t full = std::min(d[i], t.size() / d[i]);
    const std::size_t want = ranks[i].value_or(full);
    if (want == 0)
      throw UsageError("hosvd: rank for mode " + std::to_string(i + 1) +
                       " must be positive");
    if (want > full)
      throw UsageError("hosvd: rank " + std::to_string(want) + " for mode " +
                       std::to_string(i + 1) + " exceeds attainable rank " +
                       std::to_string(full));
    r[i] = want;
  }

  HosvdFactors out;
  std::array<ComplexMatrix, 3> factors;
  for (int mode = 1; mode <= 3; ++mode) {
    const SvdResult svd = complex_svd(unfold(t, mode), svd_options);
    const std::size_t i = static_cast<std::size_t>(mode - 1);
    out.mode_singular_values[i] = svd.s;
    factors[i] = head_cols(svd.u, r[i]);
  }
  out.u1 = std::move(factors[0]);
  out.u2 = std::move(factors[1]);
  out.u3 = std::move(factors[2]);
  ComplexTensor3 core = mode_product(t, adjoint(out.u1), 1);
  core = mode_product(core, adjoint(out.u2), 2);
  core = mode_product(core, adjoint(out.u3), 3);
  out.core = std::move(core);
  return out;
}

// Expands the Tucker factors back to a full tensor.
inline ComplexTensor3 reconstruct(const HosvdFactors& f) {
  if (f.core.empty()) throw UsageError("reconstruct: empty core");
  const auto& cd = f.core.dims();
  if (f.u1.cols() != cd[0] || f.u2.cols() != cd[1] || f.u3.cols() != cd[2])
    throw UsageError("reconstruct: factor columns must match core dimensions");
  ComplexTensor3 t = mode_product(f.core, f.u1, 1);
  t = mode_product(t, f.u2, 2);
  t = mode_product(t, f.u3, 3);
  return t;
}

// Relative Frobenius reconstruction error against a reference tensor.
inline double reconstruction_error(const HosvdFactors& f,
                                   const ComplexTensor3& reference) {
  const ComplexTensor3 approx = reconstruct(f);
  if (approx.dims() != reference.dims())
    throw UsageError("reconstruction_error: dimension mismatch");
  const double denom = frobenius_norm(reference);
  if (denom == 0.0)
    throw UsageError("reconstruction_error: reference tensor is zero");
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i)
    sum += std::norm(approx.data()[i] - reference.data()[i]);
  return std::sqrt(sum) / denom;
}

}  // namespace chosvd
