#pragma once

#include <memory>
#include <vector>

#include "carlin/grid.hpp"

namespace carlin {

/// Which coordinate copy an operator factor touches: the free copy x or the
/// contracted dummy copy w.
enum class CopyTag { X, W };

enum class DerivScheme { Central2, Spectral };

struct OpNode;
using OpPtr = std::shared_ptr<const OpNode>;

/// One node of a discretized linear operator expression. Operators act on a
/// scalar function of the x copy plus any still-active dims of the w copy;
/// CumInt, FullInt and Restrict each consume one w dim.
struct OpNode {
  enum class Kind {
    Scale,     // multiply by a constant
    CoordMul,  // multiply pointwise by the coordinate of (copy, dim)
    Deriv,     // d^order / d(copy, dim)^order
    CumInt,    // integrate w dim `dim` from the lower edge up to x dim `dim`
    FullInt,   // integrate w dim `dim` over the whole extent
    Restrict,  // set w dim `dim` equal to x dim `xdim`
    Compose,   // children applied right to left (rightmost acts first)
    Sum,       // weighted sum of children applied to the same input
  };

  Kind kind = Kind::Scale;
  double value = 1.0;         // Scale
  CopyTag copy = CopyTag::X;  // CoordMul, Deriv
  int dim = 0;                // 0-based; for CumInt/FullInt/Restrict the w dim
  int xdim = 0;               // Restrict target
  int order = 1;              // Deriv
  DerivScheme scheme = DerivScheme::Central2;
  std::shared_ptr<const std::vector<double>> dense;  // spectral g x g matrix
  std::vector<OpPtr> children;  // Compose / Sum
  std::vector<double> weights;  // Sum
};

OpPtr op_scale(double c);
OpPtr op_coord(CopyTag copy, int dim);
OpPtr op_deriv(const GridSpec& grid, CopyTag copy, int dim, int order,
               DerivScheme scheme = DerivScheme::Central2);
OpPtr op_cumint(int wdim);
OpPtr op_fullint(int wdim);
OpPtr op_restrict(int wdim, int xdim);
OpPtr op_compose(std::vector<OpPtr> ops);
OpPtr op_sum(std::vector<double> weights, std::vector<OpPtr> ops);

/// Threads a bitmask of active w dims through the operator (bit d <=> w dim d
/// still present). Throws when an op touches an inactive w dim or the
/// branches of a Sum disagree; returns the output mask.
unsigned op_trace_wmask(const OpNode& op, unsigned in_mask, int dims);

/// Scalar samples over the x copy plus the still-active w dims. Layout is
/// x multi-index outer (dim 0 most significant), then the active w dims in
/// ascending dim order.
struct PairField {
  const GridSpec* grid = nullptr;
  std::vector<int> wdims;
  std::vector<double> data;

  PairField() = default;
  PairField(const GridSpec& g, std::vector<int> w);

  std::int64_t wcells() const;
};

/// Applies the operator in place; collapsing ops shrink field.data.
void apply_op(const OpNode& op, PairField& field);

/// Convenience for one-copy functions (no w dims), e.g. F1 entries and
/// reference solvers.
void apply_one_copy(const OpNode& op, const GridSpec& grid,
                    std::vector<double>& samples);

/// Trapezoid weights over one dim: spacing h everywhere for periodic dims,
/// halved at both ends for box dims.
std::vector<double> integration_weights(const GridSpec& grid, int dim);

/// Peak single-buffer size bookkeeping, used to assert that contraction
/// cascades never materialize tensors above level 2.
namespace alloc_stats {
void reset();
std::size_t max_elements();
void note(std::size_t elements);
}  // namespace alloc_stats

}  // namespace carlin
