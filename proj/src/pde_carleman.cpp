#include "carlin/pde_carleman.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#include "carlin/dense.hpp"
#include "carlin/kron.hpp"

namespace carlin {

namespace {

[[noreturn]] void pde_error(const std::string& what) {
  throw std::invalid_argument("pde_carleman: " + what);
}

void check_tensor(const PDEQuadraticSystem& sys, const GridTensor& t,
                  int level, const char* name) {
  if (t.level != level)
    pde_error(std::string(name) + " has level " + std::to_string(t.level) +
              ", expected " + std::to_string(level));
  if (t.comp != sys.comp)
    pde_error(std::string(name) + " has " + std::to_string(t.comp) +
              " components, expected " + std::to_string(sys.comp));
  if (static_cast<std::int64_t>(t.data.size()) != sys.tensor_length(level))
    pde_error(std::string(name) + " has length " +
              std::to_string(t.data.size()) + ", expected " +
              std::to_string(sys.tensor_length(level)));
}

void check_slot(int level, int slot) {
  if (level < 1) pde_error("level must be >= 1");
  if (slot < 1 || slot > level)
    pde_error("slot " + std::to_string(slot) + " out of range for level " +
              std::to_string(level));
}

std::vector<int> all_dims(const GridSpec& grid) {
  std::vector<int> d(static_cast<std::size_t>(grid.dims));
  std::iota(d.begin(), d.end(), 0);
  return d;
}

void slot_insert_f0_add(const PDEQuadraticSystem& sys, int level, int slot,
                        const GridTensor& y, GridTensor& out) {
  const std::int64_t q = sys.per_copy();
  const std::int64_t left = checked_pow(q, slot - 1);
  const std::int64_t right = checked_pow(q, level - slot);
  const std::vector<double>& f0 = sys.f0.data;
  for (std::int64_t l = 0; l < left; ++l) {
    const double* yl = y.data.data() + l * right;
    double* ol = out.data.data() + l * q * right;
    for (std::int64_t c = 0; c < q; ++c) {
      double* oc = ol + c * right;
      const double fc = f0[static_cast<std::size_t>(c)];
      for (std::int64_t r = 0; r < right; ++r) oc[r] += fc * yl[r];
    }
  }
}

void slot_apply_f1_add(const PDEQuadraticSystem& sys, int level, int slot,
                       const GridTensor& y, GridTensor& out) {
  const int n = sys.comp;
  const std::int64_t cells = sys.grid.cells();
  const std::int64_t q = sys.per_copy();
  const std::int64_t left = checked_pow(q, slot - 1);
  const std::int64_t right = checked_pow(q, level - slot);

  std::vector<std::vector<double>> slice(
      static_cast<std::size_t>(n),
      std::vector<double>(static_cast<std::size_t>(cells)));
  std::vector<double> acc(static_cast<std::size_t>(cells));
  PairField work;
  work.grid = &sys.grid;

  for (std::int64_t l = 0; l < left; ++l) {
    for (std::int64_t r = 0; r < right; ++r) {
      const std::int64_t base = l * q * right + r;
      for (int k_in = 0; k_in < n; ++k_in) {
        std::vector<double>& s = slice[static_cast<std::size_t>(k_in)];
        for (std::int64_t a = 0; a < cells; ++a)
          s[static_cast<std::size_t>(a)] = y.data[base + (a * n + k_in) * right];
      }
      for (int k_out = 0; k_out < n; ++k_out) {
        std::fill(acc.begin(), acc.end(), 0.0);
        bool any = false;
        for (int k_in = 0; k_in < n; ++k_in) {
          const OpPtr& entry = sys.f1_entry(k_out, k_in);
          if (!entry) continue;
          work.wdims.clear();
          work.data = slice[static_cast<std::size_t>(k_in)];
          alloc_stats::note(work.data.size());
          apply_op(*entry, work);
          if (static_cast<std::int64_t>(work.data.size()) != cells)
            pde_error("F1 entry changed the field length");
          for (std::int64_t a = 0; a < cells; ++a)
            acc[static_cast<std::size_t>(a)] +=
                work.data[static_cast<std::size_t>(a)];
          any = true;
        }
        if (!any) continue;
        for (std::int64_t a = 0; a < cells; ++a)
          out.data[base + (a * n + k_out) * right] +=
              acc[static_cast<std::size_t>(a)];
      }
    }
  }
}

/// Shared core of the F2 contraction: pair(k1, k2) yields the level-2 samples
/// over (x, w) for that component pair, already gathered to the
/// [x multi-index, w multi-index] layout.
template <class PairFn>
void contract_pairs(const PDEQuadraticSystem& sys, PairFn&& pair,
                    std::int64_t out_base, std::int64_t right,
                    GridTensor& out) {
  const int n = sys.comp;
  const std::int64_t cells = sys.grid.cells();
  const std::vector<int> wdims = all_dims(sys.grid);
  std::vector<double> acc(static_cast<std::size_t>(cells));
  PairField work;
  work.grid = &sys.grid;

  for (int k_out = 0; k_out < n; ++k_out) {
    std::fill(acc.begin(), acc.end(), 0.0);
    bool any = false;
    for (int k1 = 0; k1 < n; ++k1) {
      for (int k2 = 0; k2 < n; ++k2) {
        const OpPtr& entry = sys.f2_entry(k_out, k1, k2);
        if (!entry) continue;
        work.wdims = wdims;
        work.data = pair(k1, k2);
        alloc_stats::note(work.data.size());
        apply_op(*entry, work);
        if (static_cast<std::int64_t>(work.data.size()) != cells ||
            !work.wdims.empty())
          pde_error("F2 entry left w dims active");
        for (std::int64_t a = 0; a < cells; ++a)
          acc[static_cast<std::size_t>(a)] +=
              work.data[static_cast<std::size_t>(a)];
        any = true;
      }
    }
    if (!any) continue;
    for (std::int64_t a = 0; a < cells; ++a)
      out.data[out_base + (a * n + k_out) * right] +=
          acc[static_cast<std::size_t>(a)];
  }
}

void slot_contract_f2_add(const PDEQuadraticSystem& sys, int level, int slot,
                          const GridTensor& y, GridTensor& out) {
  const int n = sys.comp;
  const std::int64_t cells = sys.grid.cells();
  const std::int64_t q = sys.per_copy();
  const std::int64_t left = checked_pow(q, slot - 1);
  const std::int64_t right = checked_pow(q, level - slot);

  std::vector<std::vector<double>> pair(
      static_cast<std::size_t>(n) * n,
      std::vector<double>(static_cast<std::size_t>(cells * cells)));

  for (std::int64_t l = 0; l < left; ++l) {
    for (std::int64_t r = 0; r < right; ++r) {
      const std::int64_t base2 = l * q * q * right + r;
      for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) {
          std::vector<double>& p =
              pair[static_cast<std::size_t>(k1) * n + k2];
          for (std::int64_t ax = 0; ax < cells; ++ax) {
            const std::int64_t row = base2 + (ax * n + k1) * q * right;
            for (std::int64_t aw = 0; aw < cells; ++aw)
              p[static_cast<std::size_t>(ax * cells + aw)] =
                  y.data[row + (aw * n + k2) * right];
          }
        }
      contract_pairs(
          sys,
          [&](int k1, int k2) -> const std::vector<double>& {
            return pair[static_cast<std::size_t>(k1) * n + k2];
          },
          l * q * right + r, right, out);
    }
  }
}

}  // namespace

GridTensor make_grid_tensor(int level, int comp, std::int64_t length) {
  GridTensor t;
  t.level = level;
  t.comp = comp;
  t.data.assign(static_cast<std::size_t>(length), 0.0);
  alloc_stats::note(t.data.size());
  return t;
}

PDEQuadraticSystem::PDEQuadraticSystem(GridSpec grid_, int comp_,
                                       GridTensor f0_, std::vector<OpPtr> f1_,
                                       std::vector<OpPtr> f2_)
    : grid(std::move(grid_)),
      comp(comp_),
      f0(std::move(f0_)),
      f1(std::move(f1_)),
      f2(std::move(f2_)) {
  if (comp < 1) pde_error("comp must be >= 1");
  if (grid.dims > 31) pde_error("more than 31 dims per copy");
  if (has_bias()) check_tensor(*this, f0, 1, "F0");
  if (f1.size() != static_cast<std::size_t>(comp) * comp)
    pde_error("F1 needs comp x comp entries");
  if (f2.size() != static_cast<std::size_t>(comp) * comp * comp)
    pde_error("F2 needs comp x comp^2 entries");
  const unsigned full = (1u << grid.dims) - 1u;
  for (const OpPtr& op : f1)
    if (op && op_trace_wmask(*op, 0u, grid.dims) != 0u)
      pde_error("F1 entry must not touch the w copy");
  for (const OpPtr& op : f2)
    if (op && op_trace_wmask(*op, full, grid.dims) != 0u)
      pde_error("F2 entry must eliminate every w dim");
}

std::int64_t PDEQuadraticSystem::tensor_length(int level) const {
  return checked_pow(per_copy(), level);
}

const OpPtr& PDEQuadraticSystem::f1_entry(int k_out, int k_in) const {
  return f1[static_cast<std::size_t>(k_out) * comp + k_in];
}

const OpPtr& PDEQuadraticSystem::f2_entry(int k_out, int k1, int k2) const {
  return f2[(static_cast<std::size_t>(k_out) * comp + k1) * comp + k2];
}

bool PDEQuadraticSystem::has_linear() const {
  for (const OpPtr& op : f1)
    if (op) return true;
  return false;
}

std::int64_t pde_delta(const PDEQuadraticSystem& sys, int levels) {
  if (levels < 1) pde_error("levels must be >= 1");
  const std::int64_t q = sys.per_copy();
  std::int64_t total = 0;
  for (int i = 1; i <= levels; ++i) {
    const std::int64_t len = checked_pow(q, i);
    if (total > std::numeric_limits<std::int64_t>::max() - len)
      throw std::overflow_error("pde_delta: sum overflows int64");
    total += len;
  }
  return total;
}

GridTensor slot_insert_f0(const PDEQuadraticSystem& sys, int level, int slot,
                          const GridTensor& y) {
  check_slot(level, slot);
  check_tensor(sys, y, level - 1, "input");
  if (!sys.has_bias()) pde_error("system has no F0");
  GridTensor out = make_grid_tensor(level, sys.comp, sys.tensor_length(level));
  slot_insert_f0_add(sys, level, slot, y, out);
  return out;
}

GridTensor slot_apply_f1(const PDEQuadraticSystem& sys, int level, int slot,
                         const GridTensor& y) {
  check_slot(level, slot);
  check_tensor(sys, y, level, "input");
  GridTensor out = make_grid_tensor(level, sys.comp, sys.tensor_length(level));
  slot_apply_f1_add(sys, level, slot, y, out);
  return out;
}

GridTensor slot_contract_f2(const PDEQuadraticSystem& sys, int level, int slot,
                            const GridTensor& y) {
  check_slot(level, slot);
  check_tensor(sys, y, level + 1, "input");
  GridTensor out = make_grid_tensor(level, sys.comp, sys.tensor_length(level));
  slot_contract_f2_add(sys, level, slot, y, out);
  return out;
}

GridTensor f2_pair_contract(const PDEQuadraticSystem& sys, const GridTensor& f,
                            const GridTensor& g) {
  check_tensor(sys, f, 1, "first factor");
  check_tensor(sys, g, 1, "second factor");
  const int n = sys.comp;
  const std::int64_t cells = sys.grid.cells();
  GridTensor out = make_grid_tensor(1, sys.comp, sys.tensor_length(1));
  std::vector<double> p(static_cast<std::size_t>(cells * cells));
  alloc_stats::note(p.size());
  contract_pairs(
      sys,
      [&](int k1, int k2) -> const std::vector<double>& {
        for (std::int64_t ax = 0; ax < cells; ++ax) {
          const double fv = f.data[static_cast<std::size_t>(ax * n + k1)];
          for (std::int64_t aw = 0; aw < cells; ++aw)
            p[static_cast<std::size_t>(ax * cells + aw)] =
                fv * g.data[static_cast<std::size_t>(aw * n + k2)];
        }
        return p;
      },
      0, 1, out);
  return out;
}

GridTensor pde_transfer_apply(const PDEQuadraticSystem& sys, int level, int j,
                              const GridTensor& y) {
  if (j < 0 || j > 2) pde_error("j must be 0, 1 or 2");
  if (level < 1) pde_error("level must be >= 1");
  check_tensor(sys, y, level + j - 1, "input");
  GridTensor out = make_grid_tensor(level, sys.comp, sys.tensor_length(level));
  if (j == 0 && !sys.has_bias()) return out;
  for (int slot = 1; slot <= level; ++slot) {
    if (j == 0)
      slot_insert_f0_add(sys, level, slot, y, out);
    else if (j == 1)
      slot_apply_f1_add(sys, level, slot, y, out);
    else
      slot_contract_f2_add(sys, level, slot, y, out);
  }
  return out;
}

std::vector<GridTensor> pde_apply_linear(const PDEQuadraticSystem& sys,
                                         int levels,
                                         const std::vector<GridTensor>& z) {
  if (levels < 1) pde_error("levels must be >= 1");
  if (static_cast<int>(z.size()) < levels)
    pde_error("state has fewer blocks than levels");
  for (int i = 1; i <= levels; ++i)
    check_tensor(sys, z[i - 1], i, "state block");

  std::vector<GridTensor> out;
  out.reserve(static_cast<std::size_t>(levels));
  for (int i = 1; i <= levels; ++i) {
    GridTensor acc = make_grid_tensor(i, sys.comp, sys.tensor_length(i));
    for (int j = 0; j <= 2; ++j) {
      const int src = i + j - 1;
      if (src < 1 || src > levels) continue;  // i=1 j=0 is the bias; i=N j=2 truncated
      if (j == 0 && !sys.has_bias()) continue;
      for (int slot = 1; slot <= i; ++slot) {
        if (j == 0)
          slot_insert_f0_add(sys, i, slot, z[src - 1], acc);
        else if (j == 1)
          slot_apply_f1_add(sys, i, slot, z[src - 1], acc);
        else
          slot_contract_f2_add(sys, i, slot, z[src - 1], acc);
      }
    }
    out.push_back(std::move(acc));
  }
  return out;
}

std::vector<GridTensor> pde_bias(const PDEQuadraticSystem& sys, int levels) {
  std::vector<GridTensor> b;
  b.reserve(static_cast<std::size_t>(levels));
  for (int i = 1; i <= levels; ++i)
    b.push_back(make_grid_tensor(i, sys.comp, sys.tensor_length(i)));
  if (sys.has_bias()) b[0].data = sys.f0.data;
  return b;
}

std::vector<GridTensor> pde_rhs(const PDEQuadraticSystem& sys, int levels,
                                const std::vector<GridTensor>& z) {
  std::vector<GridTensor> out = pde_apply_linear(sys, levels, z);
  if (sys.has_bias()) {
    const std::int64_t q = sys.per_copy();
    for (std::int64_t c = 0; c < q; ++c)
      out[0].data[static_cast<std::size_t>(c)] +=
          sys.f0.data[static_cast<std::size_t>(c)];
  }
  return out;
}

std::vector<GridTensor> lift_initial_grid(const PDEQuadraticSystem& sys,
                                          const GridTensor& u0, int levels,
                                          std::int64_t memory_cap_bytes) {
  check_tensor(sys, u0, 1, "initial state");
  const std::int64_t delta = pde_delta(sys, levels);
  if (delta > memory_cap_bytes / 8)
    throw MemoryGuardError(delta * 8, memory_cap_bytes);
  std::vector<GridTensor> z;
  z.reserve(static_cast<std::size_t>(levels));
  z.push_back(u0);
  for (int i = 2; i <= levels; ++i) {
    GridTensor t;
    t.level = i;
    t.comp = sys.comp;
    t.data = kron_vec(z.back().data, u0.data);
    alloc_stats::note(t.data.size());
    z.push_back(std::move(t));
  }
  return z;
}

std::vector<double> pde_flatten(const std::vector<GridTensor>& z) {
  std::size_t total = 0;
  for (const GridTensor& t : z) total += t.data.size();
  std::vector<double> flat;
  flat.reserve(total);
  for (const GridTensor& t : z)
    flat.insert(flat.end(), t.data.begin(), t.data.end());
  return flat;
}

std::vector<GridTensor> pde_unflatten(const PDEQuadraticSystem& sys,
                                      int levels,
                                      const std::vector<double>& flat) {
  if (static_cast<std::int64_t>(flat.size()) != pde_delta(sys, levels))
    pde_error("flat state has length " + std::to_string(flat.size()) +
              ", expected " + std::to_string(pde_delta(sys, levels)));
  std::vector<GridTensor> z;
  z.reserve(static_cast<std::size_t>(levels));
  std::size_t off = 0;
  for (int i = 1; i <= levels; ++i) {
    const std::size_t len =
        static_cast<std::size_t>(sys.tensor_length(i));
    GridTensor t;
    t.level = i;
    t.comp = sys.comp;
    t.data.assign(flat.begin() + off, flat.begin() + off + len);
    z.push_back(std::move(t));
    off += len;
  }
  return z;
}

}  // namespace carlin
