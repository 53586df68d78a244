#include "carlin/ode_carleman.hpp"

namespace carlin {

QuadraticODESystem::QuadraticODESystem(int n_, DenseVector f0_, DenseMatrix f1_,
                                       DenseMatrix f2_)
    : n(n_), f0(std::move(f0_)), f1(std::move(f1_)), f2(std::move(f2_)) {
  if (n < 1) throw std::invalid_argument("QuadraticODESystem: n must be >= 1");
  if (static_cast<int>(f0.size()) != n)
    throw std::invalid_argument("QuadraticODESystem: F0 must have length n");
  if (f1.rows != n || f1.cols != n)
    throw std::invalid_argument("QuadraticODESystem: F1 must be n x n");
  if (f2.rows != n || f2.cols != n * n)
    throw std::invalid_argument("QuadraticODESystem: F2 must be n x n^2");
  if (!all_finite(f0) || !all_finite(f1) || !all_finite(f2))
    throw std::invalid_argument("QuadraticODESystem: non-finite entry");
}

std::int64_t carleman_delta(int n, int levels) {
  if (n < 1 || levels < 1)
    throw std::invalid_argument("carleman_delta: need n >= 1 and N >= 1");
  std::int64_t total = 0, p = 1;
  for (int i = 1; i <= levels; ++i) {
    if (p > std::numeric_limits<std::int64_t>::max() / n)
      throw std::overflow_error("carleman_delta: n^i overflows int64");
    p *= n;
    if (total > std::numeric_limits<std::int64_t>::max() - p)
      throw std::overflow_error("carleman_delta: sum overflows int64");
    total += p;
  }
  return total;
}

CarlemanOperator::CarlemanOperator(QuadraticODESystem sys, int truncation_level,
                                   std::int64_t memory_cap_bytes)
    : system(std::move(sys)),
      levels(truncation_level),
      delta(carleman_delta(system.n, truncation_level)),
      f0_mat_(system.n, 1, system.f0) {
  if (levels < 1)
    throw std::invalid_argument("CarlemanOperator: truncation level must be >= 1");
  if (delta > memory_cap_bytes / 8)
    throw MemoryGuardError(delta * 8, memory_cap_bytes);
}

const DenseMatrix& CarlemanOperator::factor_matrix(int j) const {
  switch (j) {
    case 0: return f0_mat_;
    case 1: return system.f1;
    case 2: return system.f2;
    default: throw std::invalid_argument("factor_matrix: j must be 0, 1 or 2");
  }
}

std::vector<double> CarlemanOperator::flatten(const LiftedState& z) const {
  std::vector<double> flat;
  flat.reserve(delta);
  for (int i = 1; i <= levels; ++i)
    flat.insert(flat.end(), z.blocks[i - 1].begin(), z.blocks[i - 1].end());
  return flat;
}

LiftedState CarlemanOperator::unflatten(const std::vector<double>& flat,
                                        double time) const {
  LiftedState z;
  z.time = time;
  std::size_t off = 0;
  for (int i = 1; i <= levels; ++i) {
    const std::size_t len = block_length(i);
    z.blocks.emplace_back(flat.begin() + off, flat.begin() + off + len);
    off += len;
  }
  return z;
}

DenseVector transfer_apply(const CarlemanOperator& op, int level, int j,
                           const DenseVector& y) {
  const DenseMatrix& f = op.factor_matrix(j);
  DenseVector out(checked_pow(op.system.n, level), 0.0);
  for (int slot = 1; slot <= level; ++slot)
    lifted_apply_add(f, {level, slot}, y, out);
  return out;
}

namespace {

void check_conforms(const CarlemanOperator& op, const LiftedState& z) {
  if (static_cast<int>(z.blocks.size()) < op.levels)
    throw std::invalid_argument("lifted state has fewer blocks than levels");
  for (int i = 1; i <= op.levels; ++i)
    if (static_cast<std::int64_t>(z.blocks[i - 1].size()) !=
        op.block_length(i))
      throw std::invalid_argument("block " + std::to_string(i) +
                                  " has length " +
                                  std::to_string(z.blocks[i - 1].size()) +
                                  ", expected " +
                                  std::to_string(op.block_length(i)));
}

}  // namespace

LiftedState apply_linear(const CarlemanOperator& op, const LiftedState& z) {
  check_conforms(op, z);
  LiftedState out;
  out.time = z.time;
  out.blocks.resize(op.levels);
  for (int i = 1; i <= op.levels; ++i) {
    DenseVector acc(op.block_length(i), 0.0);
    const DenseMatrix* fs[3] = {&op.factor_matrix(0), &op.factor_matrix(1),
                                &op.factor_matrix(2)};
    for (int j = 0; j <= 2; ++j) {
      const int src = i + j - 1;
      if (src < 1 || src > op.levels) continue;  // i=1 j=0 is the bias; i=N j=2 truncated
      for (int slot = 1; slot <= i; ++slot)
        lifted_apply_add(*fs[j], {i, slot}, z.blocks[src - 1], acc);
    }
    out.blocks[i - 1] = std::move(acc);
  }
  return out;
}

LiftedState bias(const CarlemanOperator& op) {
  LiftedState b;
  b.blocks.resize(op.levels);
  b.blocks[0] = op.system.f0;
  for (int i = 2; i <= op.levels; ++i)
    b.blocks[i - 1].assign(op.block_length(i), 0.0);
  return b;
}

LiftedState ode_rhs(const CarlemanOperator& op, const LiftedState& z) {
  LiftedState out = apply_linear(op, z);
  for (int k = 0; k < op.system.n; ++k) out.blocks[0][k] += op.system.f0[k];
  return out;
}

LiftedState lift_initial(const DenseVector& u0, int levels) {
  if (levels < 1) throw std::invalid_argument("lift_initial: levels must be >= 1");
  LiftedState z;
  z.blocks.reserve(levels);
  for (int i = 1; i <= levels; ++i) z.blocks.push_back(kron_power(u0, i));
  return z;
}

DenseVector extract_solution(const LiftedState& z) {
  if (z.blocks.empty()) return {};
  return z.blocks.front();
}

}  // namespace carlin
