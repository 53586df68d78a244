#pragma once

#include <span>

#include "carlin/dense.hpp"

namespace carlin {

/// Kronecker product of two vectors: out[p*len(b)+q] = a[p]*b[q].
DenseVector kron_vec(const DenseVector& a, const DenseVector& b);

/// i-fold Kronecker power of u; kron_power(u, 0) is the length-1 vector [1].
DenseVector kron_power(const DenseVector& u, int i);

/// Applies one summand I_n x ... x F x ... x I_n of a lifted factor operator
/// without materializing it. F is n x n^j and sits at slot idx.slot of an
/// idx.level-fold product; it consumes j adjacent factor slots of the input
/// (length n^{level+j-1}) and produces one, so the output has length n^level.
/// Slot 1 is the most significant index (row-major ordering of u x u = [u1^2,
/// u1 u2, ..., un^2]). j = 0 inserts F as a column against an implicit scalar
/// factor at the slot.
DenseVector lifted_apply(const DenseMatrix& F, LiftIndex idx,
                         const DenseVector& y);

/// Accumulating form: out += (I x ... F ... x I) y. out must have length
/// n^level.
void lifted_apply_add(const DenseMatrix& F, LiftIndex idx,
                      std::span<const double> y, std::span<double> out);

}  // namespace carlin
