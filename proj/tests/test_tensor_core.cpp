#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sclab/mat.hpp"
#include "sclab/ops.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

// Independent elementwise oracle, plain triple loop.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += double(a(i, k)) * double(b(k, j));
      out(i, j) = float(acc);
    }
  return out;
}

double row_norm_oracle(const Matrix& m, int r) {
  double s = 0.0;
  for (int c = 0; c < m.cols; ++c) s += double(m(r, c)) * double(m(r, c));
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("matmul identity") {
  Rng rng(11);
  Matrix m = rng.gaussian(3, 5, 0.f, 1.f);
  Matrix im = matmul(Matrix::identity(3), m);
  CHECK(im == m);
}

TEST_CASE("matmul hand example") {
  Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  Matrix b = Matrix::from_rows({{0}, {1}});
  Matrix c = matmul(a, b);
  CHECK(c(0, 0) == doctest::Approx(2));
  CHECK(c(1, 0) == doctest::Approx(4));
}

TEST_CASE("matmul matches triple-loop oracle") {
  Rng rng(42);
  Matrix a = rng.gaussian(5, 7, 0.f, 1.f);
  Matrix b = rng.gaussian(7, 3, 0.f, 1.f);
  Matrix got = matmul(a, b);
  Matrix want = matmul_oracle(a, b);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(got.data[i] - want.data[i]) <= 1e-6);
  }
}

TEST_CASE("matmul shape mismatch throws") {
  Matrix a(2, 3), b(4, 2);
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("matmul transpose variants agree with plain matmul") {
  Rng rng(7);
  Matrix a = rng.gaussian(6, 4, 0.f, 1.f);
  Matrix b = rng.gaussian(5, 4, 0.f, 1.f);
  Matrix nt = matmul_nt(a, b);
  Matrix ref = matmul_oracle(a, transpose(b));
  for (std::size_t i = 0; i < nt.size(); ++i) CHECK(std::abs(nt.data[i] - ref.data[i]) <= 1e-5);

  Matrix c = rng.gaussian(6, 3, 0.f, 1.f);
  Matrix tn = matmul_tn(a, c);
  Matrix ref2 = matmul_oracle(transpose(a), c);
  for (std::size_t i = 0; i < tn.size(); ++i) CHECK(std::abs(tn.data[i] - ref2.data[i]) <= 1e-5);
}

TEST_CASE("matmul associativity within 1e-5") {
  Rng rng(3);
  Matrix a = rng.gaussian(4, 5, 0.f, 1.f);
  Matrix b = rng.gaussian(5, 6, 0.f, 1.f);
  Matrix c = rng.gaussian(6, 3, 0.f, 1.f);
  Matrix left = matmul(matmul(a, b), c);
  Matrix right = matmul(a, matmul(b, c));
  for (std::size_t i = 0; i < left.size(); ++i) {
    CHECK(std::abs(left.data[i] - right.data[i]) <= 1e-5);
  }
}

TEST_CASE("l2_normalize_rows 3-4-5") {
  Matrix m = Matrix::from_rows({{3, 4}});
  Matrix n = l2_normalize_rows(m, 1e-12f);
  CHECK(n(0, 0) == doctest::Approx(0.6));
  CHECK(n(0, 1) == doctest::Approx(0.8));
}

TEST_CASE("l2_normalize_rows zero row stays zero") {
  Matrix m = Matrix::from_rows({{0, 0}});
  Matrix n = l2_normalize_rows(m, 1e-12f);
  CHECK(n(0, 0) == 0.f);
  CHECK(n(0, 1) == 0.f);
}

TEST_CASE("l2_normalize_rows output norms are 0 or 1") {
  Rng rng(5);
  Matrix m = rng.gaussian(4, 6, 0.f, 2.f);
  m(2, 0) = m(2, 1) = m(2, 2) = m(2, 3) = m(2, 4) = m(2, 5) = 0.f;
  Matrix n = l2_normalize_rows(m, 1e-12f);
  for (int r = 0; r < n.rows; ++r) {
    double norm = row_norm_oracle(n, r);
    CHECK((std::abs(norm) <= 1e-6 || std::abs(norm - 1.0) <= 1e-6));
  }
}

TEST_CASE("l2_normalize_rows backward matches finite differences") {
  Rng rng(19);
  Mat<double> x = rng.gaussian(3, 4, 0.f, 1.f).cast<double>();
  Mat<double> g = rng.gaussian(3, 4, 0.f, 1.f).cast<double>();
  Mat<double> grad = l2_normalize_rows_backward(x, g, 1e-12);
  const double eps = 1e-6;
  for (int r = 0; r < x.rows; ++r) {
    for (int c = 0; c < x.cols; ++c) {
      Mat<double> xp = x, xm = x;
      xp(r, c) += eps;
      xm(r, c) -= eps;
      Mat<double> yp = l2_normalize_rows(xp, 1e-12);
      Mat<double> ym = l2_normalize_rows(xm, 1e-12);
      double fd = 0.0;
      for (std::size_t i = 0; i < yp.size(); ++i) fd += g.data[i] * (yp.data[i] - ym.data[i]);
      fd /= 2 * eps;
      CHECK(grad(r, c) == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("softmax CE uniform logits") {
  Matrix logits = Matrix::from_rows({{0, 0}});
  auto res = softmax_cross_entropy_rows(logits, {0});
  CHECK(res.loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("softmax CE confident logits closed form") {
  Matrix logits = Matrix::from_rows({{10, 0}});
  auto res = softmax_cross_entropy_rows(logits, {0});
  // -log sigma(10) = log(1 + e^-10)
  CHECK(res.loss == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-4));
}

TEST_CASE("softmax CE grad matches central differences") {
  Rng rng(23);
  Mat<double> logits = rng.gaussian(3, 5, 0.f, 2.f).cast<double>();
  std::vector<int> targets = {1, 4, 0};
  auto res = softmax_cross_entropy_rows(logits, targets);
  const double eps = 1e-5;
  for (int r = 0; r < logits.rows; ++r) {
    for (int c = 0; c < logits.cols; ++c) {
      Mat<double> lp = logits, lm = logits;
      lp(r, c) += eps;
      lm(r, c) -= eps;
      double fd = (softmax_cross_entropy_rows(lp, targets).loss -
                   softmax_cross_entropy_rows(lm, targets).loss) /
                  (2 * eps);
      double rel = std::abs(res.grad(r, c) - fd) / std::max({std::abs(fd), std::abs(double(res.grad(r, c))), 1e-8});
      CHECK(rel <= 1e-4);
    }
  }
}

TEST_CASE("softmax CE grad rows sum to zero") {
  Rng rng(29);
  Matrix logits = rng.gaussian(6, 9, 0.f, 3.f);
  std::vector<int> targets = {0, 1, 2, 3, 4, 5};
  auto res = softmax_cross_entropy_rows(logits, targets);
  for (int r = 0; r < res.grad.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < res.grad.cols; ++c) s += double(res.grad(r, c));
    CHECK(std::abs(s) <= 1e-6);
  }
}

TEST_CASE("softmax CE target out of range throws") {
  Matrix logits(2, 3);
  CHECK_THROWS_AS(softmax_cross_entropy_rows(logits, {0, 3}), ShapeError);
}

TEST_CASE("relu and backward") {
  Matrix m = Matrix::from_rows({{-1, 0, 2}});
  Matrix r = relu(m);
  CHECK(r(0, 0) == 0.f);
  CHECK(r(0, 1) == 0.f);
  CHECK(r(0, 2) == 2.f);
  Matrix g = Matrix::from_rows({{5, 5, 5}});
  Matrix gb = relu_backward(m, g);
  CHECK(gb(0, 0) == 0.f);
  CHECK(gb(0, 1) == 0.f);  // subgradient 0 at 0
  CHECK(gb(0, 2) == 5.f);
}

TEST_CASE("topk keeps k largest by value, ties to lower index") {
  Matrix m = Matrix::from_rows({{5, 0, -1, 0}});
  Matrix mask;
  Matrix out = topk_rows(m, 2, &mask);
  CHECK(out(0, 0) == 5.f);
  CHECK(mask(0, 1) == 1.f);  // zero at index 1 beats zero at index 3 and -1
  CHECK(mask(0, 3) == 0.f);
  CHECK(out(0, 2) == 0.f);
}

TEST_CASE("mat rejects non-finite data at construction") {
  std::vector<float> bad = {1.f, std::numeric_limits<float>::infinity()};
  CHECK_THROWS_AS(Matrix(1, 2, bad), DomainError);
  std::vector<float> nan_data = {std::nanf(""), 0.f};
  CHECK_THROWS_AS(Matrix(1, 2, nan_data), DomainError);
}

TEST_CASE("rng reproducibility over 1e4 draws") {
  Rng a(123456), b(123456);
  for (int i = 0; i < 10000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(9), d(9);
  for (int i = 0; i < 10000; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("rng derive is independent of parent draws") {
  Rng a(77);
  Rng b(77);
  (void)a.next_u64();
  (void)a.next_u64();
  CHECK(a.derive(3).next_u64() == b.derive(3).next_u64());
  CHECK(a.derive(3).next_u64() != a.derive(4).next_u64());
}

TEST_CASE("rng shuffle deterministic") {
  std::vector<int> v1(20), v2(20);
  for (int i = 0; i < 20; ++i) v1[i] = v2[i] = i;
  Rng a(5), b(5);
  a.shuffle(v1);
  b.shuffle(v2);
  CHECK(v1 == v2);
  bool moved = false;
  for (int i = 0; i < 20; ++i) moved |= (v1[i] != i);
  CHECK(moved);
}
