#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "sclab/errors.hpp"

namespace sclab {

// Dense row-major matrix. Float32 in production paths (Matrix); the double
// instantiation backs finite-difference oracles.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Mat() = default;

  Mat(int r, int c) : rows(r), cols(c), data(check_dims(r, c), T(0)) {}

  // Construction from explicit values rejects NaN/Inf.
  Mat(int r, int c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != check_dims(r, c)) {
      throw ShapeError("Mat: data length " + std::to_string(data.size()) +
                       " != rows*cols " + std::to_string(std::size_t(r) * std::size_t(c)));
    }
    validate_finite();
  }

  static Mat from_rows(std::initializer_list<std::initializer_list<T>> rws) {
    Mat m;
    m.rows = static_cast<int>(rws.size());
    m.cols = m.rows > 0 ? static_cast<int>(rws.begin()->size()) : 0;
    m.data.reserve(std::size_t(m.rows) * std::size_t(m.cols));
    for (const auto& r : rws) {
      if (static_cast<int>(r.size()) != m.cols) {
        throw ShapeError("Mat::from_rows: ragged rows");
      }
      m.data.insert(m.data.end(), r.begin(), r.end());
    }
    m.validate_finite();
    return m;
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  T& operator()(int r, int c) { return data[std::size_t(r) * cols + c]; }
  const T& operator()(int r, int c) const { return data[std::size_t(r) * cols + c]; }

  T* row(int r) { return data.data() + std::size_t(r) * cols; }
  const T* row(int r) const { return data.data() + std::size_t(r) * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void validate_finite() const {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(static_cast<double>(data[i]))) {
        throw DomainError("Mat: non-finite entry at flat index " + std::to_string(i));
      }
    }
  }

  template <typename U>
  Mat<U> cast() const {
    Mat<U> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const Mat& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }

 private:
  static std::size_t check_dims(int r, int c) {
    if (r < 0 || c < 0) throw ShapeError("Mat: negative dimension");
    return std::size_t(r) * std::size_t(c);
  }
};

using Matrix = Mat<float>;

inline std::string shape_str(int r, int c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace sclab
