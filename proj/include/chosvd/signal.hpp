#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "chosvd/errors.hpp"
#include "chosvd/tensor.hpp"

namespace chosvd {

inline constexpr double kPi = 3.14159265358979323846;

// One uniformly sampled real channel.
struct RealSeries {
  std::vector<double> samples;
  double rate_per_min = 1.0;
};

struct ComplexSeries {
  std::vector<Complex> samples;
  double rate_per_min = 1.0;
};

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Iterative radix-2 transform, unnormalized; inverse leaves the 1/N to the
// caller.
inline void fft_pow2(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const Complex step = std::polar(1.0, angle);
    for (std::size_t i = 0; i < n; i += len) {
      Complex w{1.0, 0.0};
      for (std::size_t j = 0; j < len / 2; ++j) {
        const Complex even = a[i + j];
        const Complex odd = a[i + j + len / 2] * w;
        a[i + j] = even + odd;
        a[i + j + len / 2] = even - odd;
        w *= step;
      }
    }
  }
}

// Bluestein chirp factor e^{-i pi n^2 / N}, with n^2 reduced mod 2N in exact
// integer arithmetic so the phase stays accurate for any n.
inline Complex chirp(std::size_t n, std::size_t length) {
  const std::uint64_t m = (static_cast<std::uint64_t>(n) * n) %
                          (2 * static_cast<std::uint64_t>(length));
  return std::polar(1.0, -kPi * static_cast<double>(m) /
                             static_cast<double>(length));
}

}  // namespace detail

// Unnormalized forward transform X_k = sum_n x_n e^{-2 pi i k n / N}.
// Power-of-two lengths use radix-2 Cooley-Tukey directly; other lengths go
// through the Bluestein chirp-z reduction to a padded power-of-two
// convolution, so every length costs O(N log N).
inline std::vector<Complex> dft(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  if (n == 0) throw UsageError("dft: empty input");
  if (n == 1) return x;
  if (detail::is_power_of_two(n)) {
    std::vector<Complex> a = x;
    detail::fft_pow2(a, false);
    return a;
  }
  const std::size_t m = detail::next_power_of_two(2 * n - 1);
  std::vector<Complex> a(m, Complex{});
  std::vector<Complex> b(m, Complex{});
  b[0] = Complex{1.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const Complex c = detail::chirp(i, n);
    a[i] = x[i] * c;
    if (i > 0) {
      b[i] = std::conj(c);
      b[m - i] = std::conj(c);
    }
  }
  detail::fft_pow2(a, true);   // reuse a as scratch: convolve via transforms
  detail::fft_pow2(b, true);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  detail::fft_pow2(a, false);
  std::vector<Complex> out(n);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = a[k] * inv_m * detail::chirp(k, n);
  return out;
}

// Inverse transform with the 1/N convention, via conjugation of the forward
// transform so both directions share one code path.
inline std::vector<Complex> idft(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  if (n == 0) throw UsageError("idft: empty input");
  std::vector<Complex> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = std::conj(x[i]);
  std::vector<Complex> y = dft(c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::conj(y[i]) * inv_n;
  return y;
}

// Zero-mean, unit-SD rescale under the population convention (divide by N).
// A flat channel carries no usable signal, so zero variance is a data error;
// `context` names the offending channel in the message.
inline RealSeries standardize(const RealSeries& series,
                              const std::string& context = "") {
  const std::size_t n = series.samples.size();
  if (n < 2) throw UsageError("standardize: need at least 2 samples");
  double mean = 0.0;
  for (double v : series.samples) {
    if (!std::isfinite(v))
      throw DataError("standardize: non-finite sample" +
                      (context.empty() ? "" : " in " + context));
    mean += v;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : series.samples) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0)
    throw DataError("standardize: zero-variance series" +
                    (context.empty() ? "" : " in " + context));
  const double inv_sd = 1.0 / std::sqrt(var);
  RealSeries out;
  out.rate_per_min = series.rate_per_min;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = (series.samples[i] - mean) * inv_sd;
  return out;
}

// Analytic signal: suppress negative frequencies, double positive ones, keep
// DC (and Nyquist for even lengths) unscaled, then transform back.  The real
// part of the result reproduces the input; the imaginary part is its Hilbert
// transform.
inline ComplexSeries analytic_signal(const RealSeries& series) {
  const std::size_t n = series.samples.size();
  if (n < 2) throw UsageError("analytic_signal: need at least 2 samples");
  std::vector<Complex> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(series.samples[i]))
      throw DataError("analytic_signal: non-finite sample");
    x[i] = Complex{series.samples[i], 0.0};
  }
  std::vector<Complex> spec = dft(x);
  const bool even = (n % 2 == 0);
  const std::size_t nyquist = n / 2;  // valid bin only when even
  for (std::size_t k = 1; k < n; ++k) {
    if (even && k == nyquist) continue;          // keep as-is
    if (k < (n + 1) / 2)
      spec[k] *= 2.0;                            // positive frequencies
    else
      spec[k] = Complex{};                       // negative frequencies
  }
  ComplexSeries out;
  out.rate_per_min = series.rate_per_min;
  out.samples = idft(spec);
  return out;
}

// Fills NaN gaps: linear interpolation between the nearest finite neighbors,
// hold extrapolation at either edge.  Refuses series that are missing more
// than max_missing_fraction of their samples, or missing entirely.
inline std::vector<double> fill_gaps(const std::vector<double>& samples,
                                     double max_missing_fraction = 0.10,
                                     const std::string& context = "") {
  const std::size_t n = samples.size();
  if (n == 0) throw UsageError("fill_gaps: empty series");
  const std::string where = context.empty() ? "" : " in " + context;
  std::size_t missing = 0;
  for (double v : samples)
    if (!std::isfinite(v)) ++missing;
  if (missing == n) throw DataError("fill_gaps: all samples missing" + where);
  if (static_cast<double>(missing) >
      max_missing_fraction * static_cast<double>(n))
    throw DataError("fill_gaps: " + std::to_string(missing) + " of " +
                    std::to_string(n) + " samples missing exceeds " +
                    std::to_string(max_missing_fraction * 100.0) + "% cap" +
                    where);
  std::vector<double> out = samples;
  std::size_t i = 0;
  while (i < n) {
    if (std::isfinite(out[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && !std::isfinite(out[j])) ++j;
    const bool has_left = (i > 0);
    const bool has_right = (j < n);
    for (std::size_t g = i; g < j; ++g) {
      if (has_left && has_right) {
        const double t = static_cast<double>(g - (i - 1)) /
                         static_cast<double>(j - (i - 1));
        out[g] = out[i - 1] + t * (out[j] - out[i - 1]);
      } else if (has_left) {
        out[g] = out[i - 1];
      } else {
        out[g] = out[j];
      }
    }
    i = j;
  }
  return out;
}

// Raised-cosine ramp over the first and last `ramp` samples; softens Hilbert
// edge effects when requested.
inline void cosine_taper(std::vector<double>& samples, std::size_t ramp = 5) {
  const std::size_t n = samples.size();
  if (n == 0 || ramp == 0) return;
  const std::size_t r = std::min(ramp, n / 2);
  for (std::size_t i = 0; i < r; ++i) {
    const double w =
        0.5 * (1.0 - std::cos(kPi * (static_cast<double>(i) + 0.5) /
                              static_cast<double>(r)));
    samples[i] *= w;
    samples[n - 1 - i] *= w;
  }
}

}  // namespace chosvd
