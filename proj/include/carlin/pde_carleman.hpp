#pragma once

#include <cstdint>
#include <vector>

#include "carlin/discrete_op.hpp"
#include "carlin/errors.hpp"
#include "carlin/grid.hpp"

namespace carlin {

/// Samples of a level-i lifted tensor: i coordinate copies, each carrying
/// `comp` components on the shared grid. Copy 1 is outermost; within one copy
/// the grid multi-index is outer (dim 0 most significant) and the component
/// index innermost.
struct GridTensor {
  int level = 1;
  int comp = 1;
  std::vector<double> data;
};

/// Allocates a zeroed tensor and records the allocation size.
GridTensor make_grid_tensor(int level, int comp, std::int64_t length);

/// Quadratic evolution du/dt = F0 + F1 u + F2 (u x u) with operator-valued
/// coefficients. F1 entries act on the x copy only; F2 entries see the x copy
/// (first factor) and the w copy (second factor) and must eliminate every w
/// dim, which is checked at construction.
struct PDEQuadraticSystem {
  GridSpec grid;
  int comp = 1;
  GridTensor f0;          // level-1 bias samples; empty data means zero
  std::vector<OpPtr> f1;  // comp x comp, row-major; nullptr means zero
  std::vector<OpPtr> f2;  // comp rows, comp^2 columns; column = k1*comp + k2

  PDEQuadraticSystem(GridSpec grid_, int comp_, GridTensor f0_,
                     std::vector<OpPtr> f1_, std::vector<OpPtr> f2_);

  /// Length of one coordinate copy: comp * g^dims.
  std::int64_t per_copy() const { return comp * grid.cells(); }

  /// Length of a level-i tensor: per_copy^i.
  std::int64_t tensor_length(int level) const;

  const OpPtr& f1_entry(int k_out, int k_in) const;
  const OpPtr& f2_entry(int k_out, int k1, int k2) const;
  bool has_bias() const { return !f0.data.empty(); }
  bool has_linear() const;
};

/// Total length of the truncated lifted state, sum of per_copy^i for
/// i = 1..levels. Throws std::overflow_error instead of wrapping.
std::int64_t pde_delta(const PDEQuadraticSystem& sys, int levels);

/// Bias insertion into slot `slot` of a level-`level` output: input has
/// level-1 fewer copies and the F0 samples take the freed slot.
GridTensor slot_insert_f0(const PDEQuadraticSystem& sys, int level, int slot,
                          const GridTensor& y);

/// F1 acting on slot `slot` of a level-`level` tensor.
GridTensor slot_apply_f1(const PDEQuadraticSystem& sys, int level, int slot,
                         const GridTensor& y);

/// F2 contracting slots (slot, slot+1) of a level-(`level`+1) input down to a
/// level-`level` output; the first factor becomes the x copy, the second the
/// w copy.
GridTensor slot_contract_f2(const PDEQuadraticSystem& sys, int level, int slot,
                            const GridTensor& y);

/// F2 applied to the rank-1 pair f x g of two level-1 fields, without
/// materializing the level-2 tensor.
GridTensor f2_pair_contract(const PDEQuadraticSystem& sys, const GridTensor& f,
                            const GridTensor& g);

/// Block A^i_{i+j-1} of the lifted generator: the F_j terms summed over all
/// `level` slots. y has level `level` + j - 1.
GridTensor pde_transfer_apply(const PDEQuadraticSystem& sys, int level, int j,
                              const GridTensor& y);

/// The truncated lifted generator applied to a block state (bias excluded).
std::vector<GridTensor> pde_apply_linear(const PDEQuadraticSystem& sys,
                                         int levels,
                                         const std::vector<GridTensor>& z);

/// The constant bias of the lifted system: F0 in block 1, zero elsewhere.
std::vector<GridTensor> pde_bias(const PDEQuadraticSystem& sys, int levels);

/// dz/dt for the truncated lifted system: generator times z plus bias.
std::vector<GridTensor> pde_rhs(const PDEQuadraticSystem& sys, int levels,
                                const std::vector<GridTensor>& z);

/// Builds (u0, u0 x u0, ..., u0^{x levels}). Refuses with MemoryGuardError
/// when the state would exceed memory_cap_bytes before allocating anything.
std::vector<GridTensor> lift_initial_grid(
    const PDEQuadraticSystem& sys, const GridTensor& u0, int levels,
    std::int64_t memory_cap_bytes = kDefaultMemoryCapBytes);

std::vector<double> pde_flatten(const std::vector<GridTensor>& z);
std::vector<GridTensor> pde_unflatten(const PDEQuadraticSystem& sys,
                                      int levels,
                                      const std::vector<double>& flat);

}  // namespace carlin
