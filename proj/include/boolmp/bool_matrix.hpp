#pragma once

#include <cstdint>
#include <vector>

#include "boolmp/core.hpp"

namespace boolmp {

// Dense 0/1 matrix, one byte per element, row-major. Immutable use after
// construction is safe across threads.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(int rows, int cols, std::uint8_t fill = 0)
      : rows_(rows),
        cols_(cols),
        bits_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw input_error("BoolMatrix: negative dimensions");
    if (fill > 1) throw input_error("BoolMatrix: fill must be 0 or 1");
  }

  static BoolMatrix identity(int n) {
    BoolMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return bits_.size(); }

  std::uint8_t operator()(int i, int j) const {
    return bits_[static_cast<std::size_t>(i) * cols_ + j];
  }
  std::uint8_t& operator()(int i, int j) {
    return bits_[static_cast<std::size_t>(i) * cols_ + j];
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// z[m][n] = OR_k (x[m][k] AND y[k][n]).
inline BoolMatrix boolean_product(const BoolMatrix& x, const BoolMatrix& y) {
  if (x.cols() != y.rows())
    throw input_error("boolean_product: inner dimensions disagree");
  BoolMatrix z(x.rows(), y.cols());
  for (int m = 0; m < x.rows(); ++m) {
    for (int k = 0; k < x.cols(); ++k) {
      if (!x(m, k)) continue;
      for (int n = 0; n < y.cols(); ++n) {
        if (y(k, n)) z(m, n) = 1;
      }
    }
  }
  return z;
}

// z[m][n] = (sum_k x[m][k] AND y[k][n]) mod 2.
inline BoolMatrix xor_product(const BoolMatrix& x, const BoolMatrix& y) {
  if (x.cols() != y.rows())
    throw input_error("xor_product: inner dimensions disagree");
  BoolMatrix z(x.rows(), y.cols());
  for (int m = 0; m < x.rows(); ++m) {
    for (int k = 0; k < x.cols(); ++k) {
      if (!x(m, k)) continue;
      for (int n = 0; n < y.cols(); ++n) {
        if (y(k, n)) z(m, n) ^= 1;
      }
    }
  }
  return z;
}

// Normalized Hamming distance: fraction of entries where the matrices differ.
inline double reconstruction_error(const BoolMatrix& z, const BoolMatrix& zhat) {
  if (z.rows() != zhat.rows() || z.cols() != zhat.cols())
    throw input_error("reconstruction_error: dimension mismatch");
  if (z.size() == 0) return 0.0;
  std::size_t mismatches = 0;
  const auto& a = z.bits();
  const auto& b = zhat.bits();
  for (std::size_t i = 0; i < a.size(); ++i) mismatches += a[i] != b[i];
  return static_cast<double>(mismatches) / static_cast<double>(z.size());
}

}  // namespace boolmp
