#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "chosvd/errors.hpp"
#include "chosvd/hosvd.hpp"
#include "chosvd/signal.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

inline constexpr double kDegeneratePhaseEps = 1e-12;

enum class ProjectionKind { bilinear, normalized };
enum class FisherKind { linear, circular };

// Principal argument in (-pi, pi].  atan2 maps the negative real axis with a
// negative-zero imaginary part to -pi; fold that onto +pi so the boundary has
// one representation.
inline double phase(Complex z) {
  const double a = std::arg(z);
  return (a <= -kPi) ? kPi : a;
}

inline bool phase_degenerate(Complex z, double eps = kDegeneratePhaseEps) {
  return std::abs(z) <= eps;
}

// Bilinear projection of one subject slice onto factor column pair (a, b),
// 1-based: u_a^H * slice * conj(u_b).  When mode-3 is kept at full rank this
// equals sum_c core(a, b, c) * u3(p, c), the subject's coordinate along the
// (a, b) interaction.
inline Complex project(const ComplexMatrix& slice, const ComplexMatrix& u1,
                       const ComplexMatrix& u2, std::size_t a, std::size_t b) {
  if (slice.rows() != u1.rows() || slice.cols() != u2.rows())
    throw UsageError("project: slice shape must match factor row counts");
  if (a == 0 || a > u1.cols() || b == 0 || b > u2.cols())
    throw UsageError("project: factor column index out of range");
  Complex acc{};
  for (std::size_t j = 0; j < slice.cols(); ++j) {
    const Complex wb = std::conj(u2(j, b - 1));
    Complex inner{};
    for (std::size_t i = 0; i < slice.rows(); ++i)
      inner += std::conj(u1(i, a - 1)) * slice(i, j);
    acc += inner * wb;
  }
  return acc;
}

// All projections at once: out(a, b) = u1^H * slice * conj(u2).
inline ComplexMatrix project_grid(const ComplexMatrix& slice,
                                  const ComplexMatrix& u1,
                                  const ComplexMatrix& u2) {
  if (slice.rows() != u1.rows() || slice.cols() != u2.rows())
    throw UsageError("project_grid: slice shape must match factor row counts");
  return matmul(adjoint(u1), matmul(slice, conjugate(u2)));
}

// Removes a subject-specific phase reference: multiplies the projection by
// the conjugate of that subject's factor entry, cancelling gauge phase that
// is shared across features of the subject.
inline Complex rotate_projection(Complex coeff, Complex subject_factor_entry) {
  return coeff * std::conj(subject_factor_entry);
}

// Phase features for a cohort: rows are subjects, columns enumerate factor
// pairs (a, b) with a major, i.e. column (a-1)*R2 + (b-1).
struct PhaseFeatureMatrix {
  ComplexMatrix coeffs;  // subjects x features, projection coefficients
  RealMatrix phases;     // subjects x features, principal arguments
  std::vector<std::pair<std::size_t, std::size_t>> feature_pairs;  // 1-based
  bool rotated = false;
  // (subject, feature) pairs whose modulus fell below the degeneracy
  // threshold; their phase is recorded as 0 rather than noise.
  std::vector<std::pair<std::size_t, std::size_t>> degenerate;
};

// Projects every subject slice of the cohort tensor onto the factor pair
// grid.  With rotate set, each subject's coefficients are referenced to that
// subject's entry in the leading mode-3 component, which removes phase that
// is common to all of the subject's features.  The normalized projection
// divides by the slice Frobenius norm so amplitude differences between
// subjects drop out.
inline PhaseFeatureMatrix build_phase_features(
    const ComplexTensor3& t, const HosvdFactors& factors, bool rotate = false,
    ProjectionKind kind = ProjectionKind::bilinear) {
  const auto& d = t.dims();
  if (factors.u1.rows() != d[0] || factors.u2.rows() != d[1])
    throw UsageError("build_phase_features: factors do not match tensor");
  if (rotate && factors.u3.rows() != d[2])
    throw UsageError(
        "build_phase_features: subject factor does not match tensor");
  const std::size_t subjects = d[2];
  const std::size_t r1 = factors.u1.cols(), r2 = factors.u2.cols();
  const std::size_t nfeat = r1 * r2;

  PhaseFeatureMatrix out;
  out.rotated = rotate;
  out.coeffs = ComplexMatrix(subjects, nfeat);
  out.phases = RealMatrix(subjects, nfeat);
  out.feature_pairs.reserve(nfeat);
  for (std::size_t a = 1; a <= r1; ++a)
    for (std::size_t b = 1; b <= r2; ++b) out.feature_pairs.emplace_back(a, b);

  ComplexMatrix slice(d[0], d[1]);
  for (std::size_t p = 0; p < subjects; ++p) {
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t i = 0; i < d[0]; ++i) slice(i, j) = t(i, j, p);
    ComplexMatrix grid = project_grid(slice, factors.u1, factors.u2);
    if (kind == ProjectionKind::normalized) {
      const double nrm = frobenius_norm(slice);
      if (nrm > 0.0)
        for (Complex& z : grid.data()) z /= nrm;
    }
    const Complex reference = rotate ? factors.u3(p, 0) : Complex{1.0, 0.0};
    for (std::size_t a = 0; a < r1; ++a)
      for (std::size_t b = 0; b < r2; ++b) {
        const std::size_t f = a * r2 + b;
        const Complex coeff = rotate_projection(grid(a, b), reference);
        out.coeffs(p, f) = coeff;
        if (phase_degenerate(coeff)) {
          out.degenerate.emplace_back(p, f);
          out.phases(p, f) = 0.0;
        } else {
          out.phases(p, f) = phase(coeff);
        }
      }
  }
  return out;
}

// Fisher discriminant score per feature column for binary labels:
// (mu1 - mu0)^2 / (s0^2 + s1^2 + eps), population variances.
inline std::vector<double> fisher_scores(const RealMatrix& x,
                                         const std::vector<int>& labels,
                                         double eps = 1e-12) {
  const std::size_t n = x.rows();
  if (labels.size() != n)
    throw UsageError("fisher_scores: label count must match rows");
  std::size_t n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0)
      ++n0;
    else if (y == 1)
      ++n1;
    else
      throw UsageError("fisher_scores: labels must be 0 or 1");
  }
  if (n0 == 0 || n1 == 0)
    throw UsageError("fisher_scores: both classes must be present");
  std::vector<double> scores(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      (labels[i] == 0 ? m0 : m1) += x(i, j);
    m0 /= static_cast<double>(n0);
    m1 /= static_cast<double>(n1);
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = x(i, j) - (labels[i] == 0 ? m0 : m1);
      (labels[i] == 0 ? v0 : v1) += c * c;
    }
    v0 /= static_cast<double>(n0);
    v1 /= static_cast<double>(n1);
    scores[j] = (m1 - m0) * (m1 - m0) / (v0 + v1 + eps);
  }
  return scores;
}

// Mean resultant length of a set of angles.
inline double mean_resultant_length(const std::vector<double>& angles) {
  if (angles.empty()) throw UsageError("mean_resultant_length: empty input");
  double cs = 0.0, sn = 0.0;
  for (double a : angles) {
    cs += std::cos(a);
    sn += std::sin(a);
  }
  const double n = static_cast<double>(angles.size());
  return std::sqrt(cs * cs + sn * sn) / n;
}

// Circular standard deviation sqrt(-2 ln R); returns +inf when the angles
// cancel completely.
inline double circular_stddev(const std::vector<double>& angles) {
  const double r = mean_resultant_length(angles);
  if (r <= 0.0) return std::numeric_limits<double>::infinity();
  if (r >= 1.0) return 0.0;
  return std::sqrt(-2.0 * std::log(r));
}

inline double circular_mean(const std::vector<double>& angles) {
  if (angles.empty()) throw UsageError("circular_mean: empty input");
  double cs = 0.0, sn = 0.0;
  for (double a : angles) {
    cs += std::cos(a);
    sn += std::sin(a);
  }
  return phase(Complex{cs, sn});
}

// Wrap-aware variant of the Fisher score: class separation is the angular
// distance between circular means, spread is the circular variance.
inline std::vector<double> fisher_scores_circular(
    const RealMatrix& x, const std::vector<int>& labels, double eps = 1e-12) {
  const std::size_t n = x.rows();
  if (labels.size() != n)
    throw UsageError("fisher_scores: label count must match rows");
  std::vector<double> scores(x.cols());
  std::vector<double> a0, a1;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    a0.clear();
    a1.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] == 0)
        a0.push_back(x(i, j));
      else if (labels[i] == 1)
        a1.push_back(x(i, j));
      else
        throw UsageError("fisher_scores: labels must be 0 or 1");
    }
    if (a0.empty() || a1.empty())
      throw UsageError("fisher_scores: both classes must be present");
    double diff = circular_mean(a1) - circular_mean(a0);
    while (diff > kPi) diff -= 2.0 * kPi;
    while (diff <= -kPi) diff += 2.0 * kPi;
    const double s0 = circular_stddev(a0), s1 = circular_stddev(a1);
    const double spread =
        (std::isfinite(s0) && std::isfinite(s1)) ? s0 * s0 + s1 * s1
                                                 : std::numeric_limits<double>::infinity();
    scores[j] = std::isfinite(spread) ? diff * diff / (spread + eps) : 0.0;
  }
  return scores;
}

// Indices of the k largest scores, ordered by decreasing score; equal scores
// keep ascending index order so selection is deterministic.
inline std::vector<std::size_t> select_top_k(const std::vector<double>& scores,
                                             std::size_t k) {
  if (k == 0 || k > scores.size())
    throw UsageError("select_top_k: k must be in [1, feature count]");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  idx.resize(k);
  return idx;
}

}  // namespace chosvd
