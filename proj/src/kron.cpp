#include "carlin/kron.hpp"

namespace carlin {

DenseVector kron_vec(const DenseVector& a, const DenseVector& b) {
  DenseVector out(a.size() * b.size());
  std::size_t k = 0;
  for (double ap : a)
    for (double bq : b) out[k++] = ap * bq;
  return out;
}

DenseVector kron_power(const DenseVector& u, int i) {
  if (i < 0) throw std::invalid_argument("kron_power: negative power");
  if (i == 0) return DenseVector{1.0};
  DenseVector acc = u;
  for (int k = 1; k < i; ++k) acc = kron_vec(acc, u);
  return acc;
}

namespace {

// Resolves j from cols = n^j; the factor slot count F consumes.
int factor_order(const DenseMatrix& F) {
  std::int64_t n = F.rows, want = F.cols;
  std::int64_t p = 1;
  for (int j = 0; j <= 62; ++j) {
    if (p == want) return j;
    if (n <= 1) break;  // n=1: cols must be 1, any j acts identically
    if (p > want / n + 1) break;
    p *= n;
  }
  throw std::invalid_argument("lifted_apply: cols=" + std::to_string(F.cols) +
                              " is not a power of rows=" +
                              std::to_string(F.rows));
}

}  // namespace

void lifted_apply_add(const DenseMatrix& F, LiftIndex idx,
                      std::span<const double> y, std::span<double> out) {
  const int n = F.rows;
  factor_order(F);  // validates that cols is a power of rows
  if (idx.slot < 1 || idx.slot > idx.level)
    throw std::invalid_argument("lifted_apply: slot " +
                                std::to_string(idx.slot) +
                                " outside [1, " + std::to_string(idx.level) +
                                "]");
  const std::int64_t left = checked_pow(n, idx.slot - 1);
  const std::int64_t right = checked_pow(n, idx.level - idx.slot);
  const std::int64_t mid_in = F.cols;
  const std::int64_t expect_in = left * mid_in * right;
  if (static_cast<std::int64_t>(y.size()) != expect_in)
    throw std::invalid_argument(
        "lifted_apply: level " + std::to_string(idx.level) + " slot " +
        std::to_string(idx.slot) + ": expected input length " +
        std::to_string(expect_in) + ", got " + std::to_string(y.size()));
  const std::int64_t expect_out = left * n * right;
  if (static_cast<std::int64_t>(out.size()) != expect_out)
    throw std::invalid_argument(
        "lifted_apply: level " + std::to_string(idx.level) + " slot " +
        std::to_string(idx.slot) + ": expected output length " +
        std::to_string(expect_out) + ", got " + std::to_string(out.size()));

  // out[l,p,r] += sum_q F(p,q) * y[l,q,r]
  for (std::int64_t l = 0; l < left; ++l) {
    const double* yl = y.data() + l * mid_in * right;
    double* ol = out.data() + l * n * right;
    for (int p = 0; p < n; ++p) {
      double* op = ol + p * right;
      for (std::int64_t r = 0; r < right; ++r) {
        double acc = 0.0;
        for (std::int64_t q = 0; q < mid_in; ++q)
          acc += F.data[static_cast<std::size_t>(p) * mid_in + q] *
                 yl[q * right + r];
        op[r] += acc;
      }
    }
  }
}

DenseVector lifted_apply(const DenseMatrix& F, LiftIndex idx,
                         const DenseVector& y) {
  DenseVector out(checked_pow(F.rows, idx.level), 0.0);
  lifted_apply_add(F, idx, y, out);
  return out;
}

}  // namespace carlin
