#pragma once

#include "carlin/errors.hpp"
#include "carlin/kron.hpp"

namespace carlin {

/// du/dt = F0 + F1 u + F2 (u x u), with time-independent coefficients.
struct QuadraticODESystem {
  int n = 1;
  DenseVector f0;   // length n
  DenseMatrix f1;   // n x n
  DenseMatrix f2;   // n x n^2

  QuadraticODESystem(int n_, DenseVector f0_, DenseMatrix f1_, DenseMatrix f2_);
};

/// Total dimension n + n^2 + ... + n^N of the truncated lift. Throws
/// std::overflow_error instead of wrapping.
std::int64_t carleman_delta(int n, int levels);

/// Block state z = [z_1, ..., z_N]; block i holds an order-i tensor of
/// length n^i.
struct LiftedState {
  std::vector<DenseVector> blocks;
  double time = 0.0;
};

/// Truncated Carleman lift of a quadratic ODE system: holds the system, the
/// truncation level, and the total dimension. Construction refuses states
/// whose flat storage would exceed the memory cap.
struct CarlemanOperator {
  QuadraticODESystem system;
  int levels;          // truncation level N
  std::int64_t delta;  // n + n^2 + ... + n^N

  CarlemanOperator(QuadraticODESystem sys, int truncation_level,
                   std::int64_t memory_cap_bytes = kDefaultMemoryCapBytes);

  std::int64_t block_length(int level) const {
    return checked_pow(system.n, level);
  }
  const DenseMatrix& factor_matrix(int j) const;  // F_j as n x n^j

  std::vector<double> flatten(const LiftedState& z) const;
  LiftedState unflatten(const std::vector<double>& flat, double time) const;

 private:
  DenseMatrix f0_mat_;  // F0 as an n x 1 matrix for the j = 0 insertions
};

/// Transfer operator block: sum over slots of one F_j insertion. The input
/// lives at level + j - 1, the output at level.
DenseVector transfer_apply(const CarlemanOperator& op, int level, int j,
                           const DenseVector& y);

/// Linear part: out_i = A^i_{i-1} z_{i-1} + A^i_i z_i + A^i_{i+1} z_{i+1},
/// with the sub-diagonal term absent for i = 1 and the super-diagonal term
/// truncated away for i = N. Blocks beyond N are ignored.
LiftedState apply_linear(const CarlemanOperator& op, const LiftedState& z);

/// Inhomogeneity b_N: block 1 equals F0, the rest are zero.
LiftedState bias(const CarlemanOperator& op);

/// Full right-hand side A_N z + b_N.
LiftedState ode_rhs(const CarlemanOperator& op, const LiftedState& z);

/// z(0) with block i = u0^{(x) i}.
LiftedState lift_initial(const DenseVector& u0, int levels);

/// The approximation to u(t): a copy of block 1.
DenseVector extract_solution(const LiftedState& z);

}  // namespace carlin
