#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace carlin {

using DenseVector = std::vector<double>;

/// Row-major dense matrix.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  DenseMatrix(int r, int c, std::vector<double> d)
      : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(r) * c)
      throw std::invalid_argument("DenseMatrix: data length != rows*cols");
  }

  double& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

/// Position of one factor inside an i-fold tensor product: level i, slot in [1, i].
struct LiftIndex {
  int level = 1;
  int slot = 1;
};

inline bool all_finite(const DenseVector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const DenseMatrix& m) { return all_finite(m.data); }

/// base^exp as int64, throwing on overflow rather than wrapping.
inline std::int64_t checked_pow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int k = 0; k < exp; ++k) {
    if (base != 0 && r > std::numeric_limits<std::int64_t>::max() / base)
      throw std::overflow_error("checked_pow: " + std::to_string(base) + "^" +
                                std::to_string(exp) + " overflows int64");
    r *= base;
  }
  return r;
}

}  // namespace carlin
