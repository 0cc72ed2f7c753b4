#include <catch2/catch_amalgamated.hpp>

#include <chosvd/rng.hpp>
#include <chosvd/tensor.hpp>

#include <array>
#include <complex>
#include <vector>

using chosvd::Complex;
using chosvd::ComplexMatrix;
using chosvd::ComplexTensor3;

namespace {

// Reference unfolding written as an index walk straight from the definition:
// row index is i_n, column index enumerates the remaining two indices with the
// lower-numbered mode varying fastest.
ComplexMatrix naive_unfold(const ComplexTensor3& t, int mode) {
  const auto d = t.dims();
  ComplexMatrix m(1, 1);
  if (mode == 1) {
    m = ComplexMatrix(d[0], d[1] * d[2]);
    for (std::size_t i3 = 0; i3 < d[2]; ++i3)
      for (std::size_t i2 = 0; i2 < d[1]; ++i2)
        for (std::size_t i1 = 0; i1 < d[0]; ++i1)
          m(i1, i2 + d[1] * i3) = t(i1, i2, i3);
  } else if (mode == 2) {
    m = ComplexMatrix(d[1], d[0] * d[2]);
    for (std::size_t i3 = 0; i3 < d[2]; ++i3)
      for (std::size_t i2 = 0; i2 < d[1]; ++i2)
        for (std::size_t i1 = 0; i1 < d[0]; ++i1)
          m(i2, i1 + d[0] * i3) = t(i1, i2, i3);
  } else {
    m = ComplexMatrix(d[2], d[0] * d[1]);
    for (std::size_t i3 = 0; i3 < d[2]; ++i3)
      for (std::size_t i2 = 0; i2 < d[1]; ++i2)
        for (std::size_t i1 = 0; i1 < d[0]; ++i1)
          m(i3, i1 + d[0] * i2) = t(i1, i2, i3);
  }
  return m;
}

// Reference mode product: contract the tensor's mode-n index against the
// matrix's second index, one scalar sum per output entry.
ComplexTensor3 naive_mode_product(const ComplexTensor3& t, const ComplexMatrix& m, int mode) {
  auto d = t.dims();
  auto nd = d;
  nd[static_cast<std::size_t>(mode - 1)] = m.rows();
  ComplexTensor3 out(nd[0], nd[1], nd[2]);
  for (std::size_t i1 = 0; i1 < nd[0]; ++i1)
    for (std::size_t i2 = 0; i2 < nd[1]; ++i2)
      for (std::size_t i3 = 0; i3 < nd[2]; ++i3) {
        Complex acc{};
        if (mode == 1) {
          for (std::size_t k = 0; k < d[0]; ++k) acc += m(i1, k) * t(k, i2, i3);
        } else if (mode == 2) {
          for (std::size_t k = 0; k < d[1]; ++k) acc += m(i2, k) * t(i1, k, i3);
        } else {
          for (std::size_t k = 0; k < d[2]; ++k) acc += m(i3, k) * t(i1, i2, k);
        }
        out(i1, i2, i3) = acc;
      }
  return out;
}

ComplexTensor3 counting_tensor(std::size_t d1, std::size_t d2, std::size_t d3) {
  ComplexTensor3 t(d1, d2, d3);
  double v = 1.0;
  for (std::size_t i3 = 0; i3 < d3; ++i3)
    for (std::size_t i2 = 0; i2 < d2; ++i2)
      for (std::size_t i1 = 0; i1 < d1; ++i1) {
        t(i1, i2, i3) = Complex(v, 0.5 * (v + 1.0));
        v += 1.0;
      }
  return t;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double worst = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

double max_abs_diff(const ComplexTensor3& a, const ComplexTensor3& b) {
  REQUIRE(a.dims() == b.dims());
  double worst = 0.0;
  const auto d = a.dims();
  for (std::size_t i3 = 0; i3 < d[2]; ++i3)
    for (std::size_t i2 = 0; i2 < d[1]; ++i2)
      for (std::size_t i1 = 0; i1 < d[0]; ++i1)
        worst = std::max(worst, std::abs(a(i1, i2, i3) - b(i1, i2, i3)));
  return worst;
}

}  // namespace

TEST_CASE("matrix storage is column-major with identity and adjoint behaving") {
  ComplexMatrix m(2, 3);
  m(0, 0) = {1, 1};
  m(1, 2) = {4, -2};
  CHECK(m.data()[0] == Complex(1, 1));
  CHECK(m.data()[5] == Complex(4, -2));

  auto eye = ComplexMatrix::identity(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(eye(i, j) == (i == j ? Complex(1, 0) : Complex(0, 0)));

  auto mh = chosvd::adjoint(m);
  REQUIRE(mh.rows() == 3);
  REQUIRE(mh.cols() == 2);
  CHECK(mh(0, 0) == Complex(1, -1));
  CHECK(mh(2, 1) == Complex(4, 2));
}

TEST_CASE("matmul matches a hand-computed 2x2 complex product") {
  ComplexMatrix a(2, 2), b(2, 2);
  a(0, 0) = {1, 2};
  a(0, 1) = {0, 1};
  a(1, 0) = {3, 0};
  a(1, 1) = {-1, 1};
  b(0, 0) = {2, 0};
  b(0, 1) = {0, -1};
  b(1, 0) = {1, 1};
  b(1, 1) = {4, 0};
  auto c = chosvd::matmul(a, b);
  CHECK(std::abs(c(0, 0) - (Complex(1, 2) * Complex(2, 0) + Complex(0, 1) * Complex(1, 1))) < 1e-15);
  CHECK(std::abs(c(0, 1) - (Complex(1, 2) * Complex(0, -1) + Complex(0, 1) * Complex(4, 0))) < 1e-15);
  CHECK(std::abs(c(1, 0) - (Complex(3, 0) * Complex(2, 0) + Complex(-1, 1) * Complex(1, 1))) < 1e-15);
  CHECK(std::abs(c(1, 1) - (Complex(3, 0) * Complex(0, -1) + Complex(-1, 1) * Complex(4, 0))) < 1e-15);
}

TEST_CASE("2x2x2 unfoldings enumerate exactly as defined") {
  // Entries 1..8 laid out with mode 1 fastest, so slices are
  // [[1,3],[2,4]] and [[5,7],[6,8]].
  auto t = ComplexTensor3(2, 2, 2);
  double v = 1.0;
  for (std::size_t i3 = 0; i3 < 2; ++i3)
    for (std::size_t i2 = 0; i2 < 2; ++i2)
      for (std::size_t i1 = 0; i1 < 2; ++i1) t(i1, i2, i3) = v++;

  auto m1 = chosvd::unfold(t, 1);
  const double r1a[] = {1, 3, 5, 7};
  const double r1b[] = {2, 4, 6, 8};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(m1(0, j).real() == r1a[j]);
    CHECK(m1(1, j).real() == r1b[j]);
  }

  auto m2 = chosvd::unfold(t, 2);
  const double r2a[] = {1, 2, 5, 6};
  const double r2b[] = {3, 4, 7, 8};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(m2(0, j).real() == r2a[j]);
    CHECK(m2(1, j).real() == r2b[j]);
  }

  auto m3 = chosvd::unfold(t, 3);
  const double r3a[] = {1, 2, 3, 4};
  const double r3b[] = {5, 6, 7, 8};
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(m3(0, j).real() == r3a[j]);
    CHECK(m3(1, j).real() == r3b[j]);
  }
}

TEST_CASE("unfold agrees with the naive index walk on every shape up to 4x4x4") {
  for (std::size_t d1 = 1; d1 <= 4; ++d1)
    for (std::size_t d2 = 1; d2 <= 4; ++d2)
      for (std::size_t d3 = 1; d3 <= 4; ++d3) {
        auto t = counting_tensor(d1, d2, d3);
        for (int mode = 1; mode <= 3; ++mode) {
          auto fast = chosvd::unfold(t, mode);
          auto slow = naive_unfold(t, mode);
          CHECK(max_abs_diff(fast, slow) == 0.0);
        }
      }
}

TEST_CASE("fold inverts unfold exactly on every shape up to 4x4x4") {
  for (std::size_t d1 = 1; d1 <= 4; ++d1)
    for (std::size_t d2 = 1; d2 <= 4; ++d2)
      for (std::size_t d3 = 1; d3 <= 4; ++d3) {
        auto t = counting_tensor(d1, d2, d3);
        for (int mode = 1; mode <= 3; ++mode) {
          auto back = chosvd::fold(chosvd::unfold(t, mode), mode, t.dims());
          CHECK(max_abs_diff(back, t) == 0.0);
        }
      }
}

TEST_CASE("mode_product agrees with the naive contraction on every shape up to 4x4x4") {
  chosvd::Rng rng(7);
  for (std::size_t d1 = 1; d1 <= 4; ++d1)
    for (std::size_t d2 = 1; d2 <= 4; ++d2)
      for (std::size_t d3 = 1; d3 <= 4; ++d3) {
        auto t = counting_tensor(d1, d2, d3);
        const std::array<std::size_t, 3> d = {d1, d2, d3};
        for (int mode = 1; mode <= 3; ++mode) {
          const std::size_t rows = (static_cast<std::size_t>(mode) % 3) + 1;  // varies 2,3,1
          ComplexMatrix m(rows, d[static_cast<std::size_t>(mode - 1)]);
          for (std::size_t j = 0; j < m.cols(); ++j)
            for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = rng.complex_gaussian();
          auto fast = chosvd::mode_product(t, m, mode);
          auto slow = naive_mode_product(t, m, mode);
          CHECK(max_abs_diff(fast, slow) < 1e-12);
        }
      }
}

TEST_CASE("successive mode products commute across distinct modes") {
  chosvd::Rng rng(11);
  ComplexTensor3 t(3, 4, 2);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.complex_gaussian();
  ComplexMatrix a(2, 3), b(5, 4);
  for (std::size_t i = 0; i < a.rows() * a.cols(); ++i) a.data()[i] = rng.complex_gaussian();
  for (std::size_t i = 0; i < b.rows() * b.cols(); ++i) b.data()[i] = rng.complex_gaussian();

  auto ab = chosvd::mode_product(chosvd::mode_product(t, a, 1), b, 2);
  auto ba = chosvd::mode_product(chosvd::mode_product(t, b, 2), a, 1);
  CHECK(max_abs_diff(ab, ba) < 1e-12);
}

TEST_CASE("frobenius norm is unfolding-invariant") {
  auto t = counting_tensor(3, 2, 4);
  const double tn = chosvd::frobenius_norm(t);
  for (int mode = 1; mode <= 3; ++mode) {
    CHECK(chosvd::frobenius_norm(chosvd::unfold(t, mode)) == Catch::Approx(tn).epsilon(1e-14));
  }
}

TEST_CASE("shape validation rejects zero dimensions and bad modes") {
  CHECK_THROWS_AS(ComplexMatrix(0, 2), chosvd::UsageError);
  CHECK_THROWS_AS(ComplexTensor3(2, 0, 2), chosvd::UsageError);
  auto t = counting_tensor(2, 2, 2);
  CHECK_THROWS_AS(chosvd::unfold(t, 0), chosvd::UsageError);
  CHECK_THROWS_AS(chosvd::unfold(t, 4), chosvd::UsageError);
  ComplexMatrix m(2, 3);
  CHECK_THROWS_AS(chosvd::fold(m, 1, {2, 2, 2}), chosvd::UsageError);  // 6 entries into 8
  ComplexMatrix a(2, 3), b(2, 3);
  CHECK_THROWS_AS(chosvd::matmul(a, b), chosvd::UsageError);
  ComplexMatrix bad(2, 3);
  CHECK_THROWS_AS(chosvd::mode_product(t, bad, 3), chosvd::UsageError);  // 3 cols vs extent 2
}

TEST_CASE("head_cols keeps the leading columns verbatim") {
  ComplexMatrix m(3, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) m(i, j) = Complex(double(i), double(j));
  auto h = chosvd::head_cols(m, 2);
  REQUIRE(h.cols() == 2);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 3; ++i) CHECK(h(i, j) == m(i, j));
  CHECK_THROWS_AS(chosvd::head_cols(m, 4), chosvd::UsageError);
}
