#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sclab/errors.hpp"
#include "sclab/mat.hpp"

// Dense kernels shared by every module. Reductions accumulate in double with
// a fixed four-lane summation order (lanes by k mod 4, combined lane0+lane1+
// lane2+lane3, then a scalar tail); results are bitwise reproducible across
// runs regardless of optimization level.

namespace sclab {

namespace detail {

template <typename T>
inline double dot4(const T* a, const T* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += double(a[k]) * double(b[k]);
    s1 += double(a[k + 1]) * double(b[k + 1]);
    s2 += double(a[k + 2]) * double(b[k + 2]);
    s3 += double(a[k + 3]) * double(b[k + 3]);
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; k < n; ++k) s += double(a[k]) * double(b[k]);
  return s;
}

}  // namespace detail

template <typename T>
Mat<T> transpose(const Mat<T>& m) {
  Mat<T> out(m.cols, m.rows);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out(c, r) = m(r, c);
  return out;
}

// a (n x k) * b (k x m)
template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: " + shape_str(a.rows, a.cols) + " * " + shape_str(b.rows, b.cols));
  }
  const Mat<T> bt = transpose(b);
  Mat<T> out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const T* ai = a.row(i);
    for (int j = 0; j < b.cols; ++j) {
      out(i, j) = T(detail::dot4(ai, bt.row(j), a.cols));
    }
  }
  return out;
}

// a (n x d) * b^T, b (m x d)
template <typename T>
Mat<T> matmul_nt(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.cols) {
    throw ShapeError("matmul_nt: " + shape_str(a.rows, a.cols) + " * " + shape_str(b.rows, b.cols) + "^T");
  }
  Mat<T> out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const T* ai = a.row(i);
    for (int j = 0; j < b.rows; ++j) {
      out(i, j) = T(detail::dot4(ai, b.row(j), a.cols));
    }
  }
  return out;
}

// a^T * b, a (n x i), b (n x o). Rank-one accumulation over n in double.
template <typename T>
Mat<T> matmul_tn(const Mat<T>& a, const Mat<T>& b) {
  if (a.rows != b.rows) {
    throw ShapeError("matmul_tn: " + shape_str(a.rows, a.cols) + "^T * " + shape_str(b.rows, b.cols));
  }
  std::vector<double> acc(std::size_t(a.cols) * std::size_t(b.cols), 0.0);
  for (int n = 0; n < a.rows; ++n) {
    const T* an = a.row(n);
    const T* bn = b.row(n);
    for (int i = 0; i < a.cols; ++i) {
      const double ai = double(an[i]);
      double* out_row = acc.data() + std::size_t(i) * b.cols;
      for (int o = 0; o < b.cols; ++o) out_row[o] += ai * double(bn[o]);
    }
  }
  Mat<T> out(a.cols, b.cols);
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = T(acc[i]);
  return out;
}

template <typename T>
Mat<T> add(const Mat<T>& a, const Mat<T>& b) {
  if (!a.same_shape(b)) throw ShapeError("add: shape mismatch");
  Mat<T> out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

template <typename T>
Mat<T> sub(const Mat<T>& a, const Mat<T>& b) {
  if (!a.same_shape(b)) throw ShapeError("sub: shape mismatch");
  Mat<T> out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

template <typename T>
Mat<T> scale(const Mat<T>& a, T s) {
  Mat<T> out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * s;
  return out;
}

template <typename T>
Mat<T> hadamard(const Mat<T>& a, const Mat<T>& b) {
  if (!a.same_shape(b)) throw ShapeError("hadamard: shape mismatch");
  Mat<T> out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

template <typename T>
void add_row_inplace(Mat<T>& m, const std::vector<T>& v) {
  if (int(v.size()) != m.cols) throw ShapeError("add_row_inplace: bias length mismatch");
  for (int r = 0; r < m.rows; ++r) {
    T* row = m.row(r);
    for (int c = 0; c < m.cols; ++c) row[c] += v[std::size_t(c)];
  }
}

// Column sums in double; gradient of a broadcast bias.
template <typename T>
std::vector<T> col_sums(const Mat<T>& m) {
  std::vector<double> acc(std::size_t(m.cols), 0.0);
  for (int r = 0; r < m.rows; ++r) {
    const T* row = m.row(r);
    for (int c = 0; c < m.cols; ++c) acc[std::size_t(c)] += double(row[c]);
  }
  std::vector<T> out(std::size_t(m.cols));
  for (int c = 0; c < m.cols; ++c) out[std::size_t(c)] = T(acc[std::size_t(c)]);
  return out;
}

template <typename T>
double row_norm(const Mat<T>& m, int r) {
  return std::sqrt(detail::dot4(m.row(r), m.row(r), m.cols));
}

// Rows scaled to unit L2 norm; rows with norm < eps come back as zeros
// (ReLU heads legitimately emit all-zero rows).
template <typename T>
Mat<T> l2_normalize_rows(const Mat<T>& m, T eps) {
  Mat<T> out(m.rows, m.cols);
  for (int r = 0; r < m.rows; ++r) {
    const double norm = row_norm(m, r);
    if (norm < double(eps)) continue;  // leave zeros
    const T inv = T(1.0 / norm);
    const T* src = m.row(r);
    T* dst = out.row(r);
    for (int c = 0; c < m.cols; ++c) dst[c] = src[c] * inv;
  }
  return out;
}

// Backward of l2_normalize_rows: dx = (g - (g.y) y) / |x|, zero for zero rows.
template <typename T>
Mat<T> l2_normalize_rows_backward(const Mat<T>& x, const Mat<T>& grad_y, T eps) {
  if (!x.same_shape(grad_y)) throw ShapeError("l2_normalize_rows_backward: shape mismatch");
  Mat<T> out(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    const double norm = row_norm(x, r);
    if (norm < double(eps)) continue;
    const T* xr = x.row(r);
    const T* gr = grad_y.row(r);
    double gy = 0.0;
    for (int c = 0; c < x.cols; ++c) gy += double(gr[c]) * (double(xr[c]) / norm);
    T* dst = out.row(r);
    for (int c = 0; c < x.cols; ++c) {
      dst[c] = T((double(gr[c]) - gy * (double(xr[c]) / norm)) / norm);
    }
  }
  return out;
}

template <typename T>
Mat<T> relu(const Mat<T>& m) {
  Mat<T> out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.size(); ++i) out.data[i] = m.data[i] > T(0) ? m.data[i] : T(0);
  return out;
}

// Subgradient 0 at 0: gradient passes only where pre > 0.
template <typename T>
Mat<T> relu_backward(const Mat<T>& pre, const Mat<T>& grad_out) {
  if (!pre.same_shape(grad_out)) throw ShapeError("relu_backward: shape mismatch");
  Mat<T> out(pre.rows, pre.cols);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    out.data[i] = pre.data[i] > T(0) ? grad_out.data[i] : T(0);
  }
  return out;
}

// Keeps the k largest entries per row by value, ties broken toward the lower
// index; everything else zeroed. Returns the kept {0,1} mask.
template <typename T>
Mat<T> topk_rows(const Mat<T>& m, int k, Mat<T>* mask_out = nullptr) {
  if (k < 1 || k > m.cols) throw ConfigError("topk_rows: k must be in [1, cols]");
  Mat<T> out(m.rows, m.cols);
  Mat<T> mask(m.rows, m.cols);
  std::vector<int> idx(std::size_t(m.cols));
  for (int r = 0; r < m.rows; ++r) {
    const T* src = m.row(r);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return src[a] > src[b]; });
    for (int j = 0; j < k; ++j) {
      const int c = idx[std::size_t(j)];
      out(r, c) = src[c];
      mask(r, c) = T(1);
    }
  }
  if (mask_out) *mask_out = std::move(mask);
  return out;
}

// Mean over rows of -log softmax(row)[target]; grad is d loss / d logits.
template <typename T>
struct SoftmaxCeResult {
  T loss;
  Mat<T> grad;
};

template <typename T>
SoftmaxCeResult<T> softmax_cross_entropy_rows(const Mat<T>& logits, const std::vector<int>& targets) {
  if (int(targets.size()) != logits.rows) {
    throw ShapeError("softmax_cross_entropy_rows: one target per row required");
  }
  for (int t : targets) {
    if (t < 0 || t >= logits.cols) throw ShapeError("softmax_cross_entropy_rows: target out of range");
  }
  const int n = logits.rows;
  Mat<T> grad(logits.rows, logits.cols);
  double loss_acc = 0.0;
  std::vector<double> p(std::size_t(logits.cols));
  for (int r = 0; r < n; ++r) {
    const T* row = logits.row(r);
    double mx = -HUGE_VAL;
    for (int c = 0; c < logits.cols; ++c) mx = std::max(mx, double(row[c]));
    double z = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
      p[std::size_t(c)] = std::exp(double(row[c]) - mx);
      z += p[std::size_t(c)];
    }
    loss_acc += -(double(row[targets[std::size_t(r)]]) - mx - std::log(z));
    T* grow = grad.row(r);
    for (int c = 0; c < logits.cols; ++c) {
      double g = p[std::size_t(c)] / z;
      if (c == targets[std::size_t(r)]) g -= 1.0;
      grow[c] = T(g / n);
    }
  }
  return {T(loss_acc / n), std::move(grad)};
}

template <typename T>
double frobenius_sq(const Mat<T>& m) {
  return detail::dot4(m.data.data(), m.data.data(), int(m.size()));
}

}  // namespace sclab
