#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "chosvd/errors.hpp"
#include "chosvd/rng.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

// Two-class linear discriminant: score(x) = w . x - bias, positive means
// class 1.  The pooled covariance is ridge-stabilized before inversion.
struct LdaModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::array<double, 2> class_means_projected{0.0, 0.0};
  bool underdetermined = false;  // fewer samples than dimensions
};

namespace detail {

// Cholesky solve of (A + ridge I) x = b for symmetric positive definite A,
// in place on a copy.  Small dimensions only (feature count is ~3).
inline std::vector<double> cholesky_solve(RealMatrix a,
                                          std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (d <= 0.0)
      throw NumericalError(
          "pooled covariance is singular beyond ridge rescue");
    a(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
      a(i, j) = v / a(j, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {      // forward: L y = b
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a(i, k) * b[k];
    b[i] = v / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {        // backward: L^T x = y
    double v = b[i];
    for (std::size_t k = i + 1; k < n; ++k) v -= a(k, i) * b[k];
    b[i] = v / a(i, i);
  }
  return b;
}

}  // namespace detail

// Fits the discriminant on rows of x with binary labels.  The pooled
// covariance uses the unbiased two-class divisor (n - 2); a relative ridge
// of 1e-6 * trace/d guards near-singular pools.  The bias places the
// decision boundary at the class-mean midpoint shifted by the log prior
// ratio estimated from the training proportions.
inline LdaModel lda_fit(const RealMatrix& x, const std::vector<int>& y) {
  const std::size_t n = x.rows(), d = x.cols();
  if (y.size() != n) throw UsageError("lda_fit: label count must match rows");
  std::size_t n0 = 0, n1 = 0;
  for (int label : y) {
    if (label == 0)
      ++n0;
    else if (label == 1)
      ++n1;
    else
      throw UsageError("lda_fit: labels must be 0 or 1");
  }
  if (n0 == 0 || n1 == 0)
    throw UsageError("lda_fit: both classes must be present");

  std::vector<double> mu0(d, 0.0), mu1(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      (y[i] == 0 ? mu0[j] : mu1[j]) += x(i, j);
  for (std::size_t j = 0; j < d; ++j) {
    mu0[j] /= static_cast<double>(n0);
    mu1[j] /= static_cast<double>(n1);
  }

  RealMatrix pooled(d, d);
  std::vector<double> c(d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& mu = (y[i] == 0) ? mu0 : mu1;
    for (std::size_t j = 0; j < d; ++j) c[j] = x(i, j) - mu[j];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b <= a; ++b) pooled(a, b) += c[a] * c[b];
  }
  const double divisor = static_cast<double>(n > 2 ? n - 2 : 1);
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      pooled(a, b) /= divisor;
      pooled(b, a) = pooled(a, b);
    }
    trace += pooled(a, a);
  }
  const double ridge =
      std::max(1e-6 * trace / static_cast<double>(d), 1e-12);
  for (std::size_t a = 0; a < d; ++a) pooled(a, a) += ridge;

  std::vector<double> delta(d);
  for (std::size_t j = 0; j < d; ++j) delta[j] = mu1[j] - mu0[j];

  LdaModel model;
  model.weights = detail::cholesky_solve(pooled, delta);
  model.underdetermined = (n <= d + 1);
  double w_mid = 0.0, w_mu0 = 0.0, w_mu1 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    w_mid += model.weights[j] * 0.5 * (mu0[j] + mu1[j]);
    w_mu0 += model.weights[j] * mu0[j];
    w_mu1 += model.weights[j] * mu1[j];
  }
  model.bias = w_mid - std::log(static_cast<double>(n1) /
                                static_cast<double>(n0));
  model.class_means_projected = {w_mu0, w_mu1};
  return model;
}

inline double lda_score(const LdaModel& model,
                        const std::vector<double>& x) {
  if (x.size() != model.weights.size())
    throw UsageError("lda_score: dimension mismatch");
  double s = -model.bias;
  for (std::size_t j = 0; j < x.size(); ++j) s += model.weights[j] * x[j];
  return s;
}

inline int lda_predict(const LdaModel& model, const std::vector<double>& x) {
  return lda_score(model, x) > 0.0 ? 1 : 0;
}

// Stratified fold assignment: within each class the subjects are shuffled
// with the seeded generator and dealt round-robin, so per-class fold counts
// differ by at most one.  Every class must have at least 2 members so each
// training set can contain both classes.
inline std::vector<int> stratified_kfold(const std::vector<int>& labels,
                                         std::size_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("stratified_kfold: need at least 2 folds");
  std::size_t n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0)
      ++n0;
    else if (y == 1)
      ++n1;
    else
      throw UsageError("stratified_kfold: labels must be 0 or 1");
  }
  if (n0 < 2 || n1 < 2)
    throw UsageError(
        "stratified_kfold: each class needs at least 2 subjects, got " +
        std::to_string(n0) + " and " + std::to_string(n1));
  Rng rng(seed);
  std::vector<int> fold(labels.size(), -1);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i)
      fold[members[i]] = static_cast<int>(i % k);
  }
  return fold;
}

// Binary confusion counts with class 1 (severe) as positive.
struct ConfusionCounts {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
};

// Pooled cross-validation result for one cohort group.  Ratio metrics are
// absent rather than zero when their denominator is empty.
struct EvalReport {
  std::string group;
  std::string horizon;
  bool rotated = false;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  ConfusionCounts counts;
  std::optional<double> ppv, tpr, tnr;
  std::optional<double> auc;
  std::vector<int> fold_assignments;
  std::vector<std::vector<std::size_t>> selected_features;  // per fold
  std::vector<std::string> notes;
};

inline ConfusionCounts confusion_counts(const std::vector<int>& predicted,
                                        const std::vector<int>& actual) {
  if (predicted.size() != actual.size())
    throw UsageError("confusion_counts: length mismatch");
  if (predicted.empty()) throw UsageError("confusion_counts: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (actual[i] == 1)
      (predicted[i] == 1 ? c.tp : c.fn) += 1;
    else
      (predicted[i] == 1 ? c.fp : c.tn) += 1;
  }
  return c;
}

// Fills the ratio metrics of a report from its confusion counts.
inline void confusion_and_metrics(EvalReport& report) {
  const ConfusionCounts& c = report.counts;
  const auto ratio = [](std::size_t num,
                        std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  report.ppv = ratio(c.tp, c.tp + c.fp);
  report.tpr = ratio(c.tp, c.tp + c.fn);
  report.tnr = ratio(c.tn, c.tn + c.fp);
}

// Mann-Whitney AUC with midrank tie handling: the probability that a random
// positive scores above a random negative, ties counting one half.
inline double auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw UsageError("auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n0 = 0, n1 = 0;
  for (int y : labels) {
    if (y == 0)
      ++n0;
    else if (y == 1)
      ++n1;
    else
      throw UsageError("auc: labels must be 0 or 1");
  }
  if (n0 == 0 || n1 == 0)
    throw UsageError("auc: both classes must be present");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n1) *
                                      static_cast<double>(n1 + 1);
  return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

}  // namespace chosvd
