#include "carlin/discrete_op.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace carlin {

namespace alloc_stats {
namespace {
std::size_t g_max_elements = 0;
}
void reset() { g_max_elements = 0; }
std::size_t max_elements() { return g_max_elements; }
void note(std::size_t elements) {
  g_max_elements = std::max(g_max_elements, elements);
}
}  // namespace alloc_stats

namespace {

[[noreturn]] void op_error(const std::string& what) {
  throw std::invalid_argument("discrete_op: " + what);
}

void check_dim(int dim, int dims) {
  if (dim < 0 || dim >= dims)
    op_error("dim " + std::to_string(dim) + " out of range for " +
             std::to_string(dims) + "-dim grid");
}

/// Dense g x g matrix of the order-k periodic spectral derivative, built by
/// summing the inverse-transform series directly: row j, column l couple
/// through theta = 2*pi*(j-l)/g. Odd orders drop the Nyquist mode; even
/// orders keep it with its real weight.
std::vector<double> spectral_matrix(int g, double length, int order) {
  const double omega = 2.0 * std::numbers::pi / length;
  const int pmax = (g % 2 == 0) ? g / 2 - 1 : (g - 1) / 2;
  // Re[i^order] cycle: 1, 0, -1, 0; Im enters through the sin term.
  const int re_pow[4] = {1, 0, -1, 0};
  const int im_pow[4] = {0, 1, 0, -1};
  const int re = re_pow[order % 4];
  const int im = im_pow[order % 4];
  std::vector<double> m(static_cast<std::size_t>(g) * g, 0.0);
  for (int j = 0; j < g; ++j) {
    for (int l = 0; l < g; ++l) {
      const double theta = 2.0 * std::numbers::pi * (j - l) / g;
      double s = 0.0;
      for (int p = 1; p <= pmax; ++p) {
        const double pk = std::pow(static_cast<double>(p), order);
        s += pk * (re * std::cos(p * theta) - im * std::sin(p * theta));
      }
      double v = 2.0 * s;
      if (g % 2 == 0 && re != 0) {
        const double pk = std::pow(g / 2.0, order);
        v += re * pk * (((j - l) % 2 == 0) ? 1.0 : -1.0);
      }
      m[static_cast<std::size_t>(j) * g + l] =
          std::pow(omega, order) * v / g;
    }
  }
  return m;
}

void deriv1_periodic(const double* in, double* out, int g, double h) {
  const double c = 1.0 / (2.0 * h);
  for (int k = 0; k < g; ++k) {
    const int kp = (k + 1 == g) ? 0 : k + 1;
    const int km = (k == 0) ? g - 1 : k - 1;
    out[k] = c * (in[kp] - in[km]);
  }
}

void deriv2_periodic(const double* in, double* out, int g, double h) {
  const double c = 1.0 / (h * h);
  for (int k = 0; k < g; ++k) {
    const int kp = (k + 1 == g) ? 0 : k + 1;
    const int km = (k == 0) ? g - 1 : k - 1;
    out[k] = c * (in[kp] - 2.0 * in[k] + in[km]);
  }
}

void deriv1_box(const double* in, double* out, int g, double h) {
  const double c = 1.0 / (2.0 * h);
  out[0] = c * (-3.0 * in[0] + 4.0 * in[1] - in[2]);
  for (int k = 1; k + 1 < g; ++k) out[k] = c * (in[k + 1] - in[k - 1]);
  out[g - 1] = c * (3.0 * in[g - 1] - 4.0 * in[g - 2] + in[g - 3]);
}

void deriv2_box(const double* in, double* out, int g, double h) {
  const double c = 1.0 / (h * h);
  out[0] = c * (2.0 * in[0] - 5.0 * in[1] + 4.0 * in[2] - in[3]);
  for (int k = 1; k + 1 < g; ++k)
    out[k] = c * (in[k + 1] - 2.0 * in[k] + in[k - 1]);
  out[g - 1] =
      c * (2.0 * in[g - 1] - 5.0 * in[g - 2] + 4.0 * in[g - 3] - in[g - 4]);
}

struct AxisInfo {
  std::int64_t stride = 1;
  std::int64_t len = 1;
};

std::int64_t ipow64(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

/// Stride of an axis in the [x dims..., active w dims ascending] layout.
AxisInfo axis_info(const PairField& f, CopyTag copy, int dim) {
  const int g = f.grid->points;
  const int m = f.grid->dims;
  const std::int64_t w_total = f.wcells();
  AxisInfo a;
  a.len = g;
  if (copy == CopyTag::X) {
    a.stride = ipow64(g, m - 1 - dim) * w_total;
    return a;
  }
  auto it = std::find(f.wdims.begin(), f.wdims.end(), dim);
  if (it == f.wdims.end())
    op_error("w dim " + std::to_string(dim + 1) + " is not active");
  const int pos = static_cast<int>(it - f.wdims.begin());
  a.stride = ipow64(g, static_cast<int>(f.wdims.size()) - 1 - pos);
  return a;
}

template <class Fn>
void for_each_line(std::int64_t total, std::int64_t len, std::int64_t stride,
                   Fn&& fn) {
  const std::int64_t block = len * stride;
  for (std::int64_t b = 0; b < total; b += block)
    for (std::int64_t i = 0; i < stride; ++i) fn(b + i);
}

void apply_coord_mul(const OpNode& op, PairField& f) {
  const AxisInfo ax = axis_info(f, op.copy, op.dim);
  const GridSpec& g = *f.grid;
  std::vector<double> coord(static_cast<std::size_t>(ax.len));
  for (int k = 0; k < ax.len; ++k) coord[k] = g.coord(op.dim, k);
  for_each_line(static_cast<std::int64_t>(f.data.size()), ax.len, ax.stride,
                [&](std::int64_t start) {
                  for (std::int64_t k = 0; k < ax.len; ++k)
                    f.data[start + k * ax.stride] *= coord[k];
                });
}

void apply_deriv(const OpNode& op, PairField& f) {
  const AxisInfo ax = axis_info(f, op.copy, op.dim);
  const int g = static_cast<int>(ax.len);
  const double h = f.grid->spacing(op.dim);
  const bool periodic = f.grid->boundary[op.dim] == Boundary::Periodic;
  std::vector<double> buf(g), res(g);
  auto one_pass = [&](int order) {
    for_each_line(
        static_cast<std::int64_t>(f.data.size()), ax.len, ax.stride,
        [&](std::int64_t start) {
          for (int k = 0; k < g; ++k) buf[k] = f.data[start + k * ax.stride];
          if (op.scheme == DerivScheme::Spectral) {
            const std::vector<double>& m = *op.dense;
            for (int j = 0; j < g; ++j) {
              double acc = 0.0;
              for (int l = 0; l < g; ++l)
                acc += m[static_cast<std::size_t>(j) * g + l] * buf[l];
              res[j] = acc;
            }
          } else if (order == 1) {
            periodic ? deriv1_periodic(buf.data(), res.data(), g, h)
                     : deriv1_box(buf.data(), res.data(), g, h);
          } else {
            periodic ? deriv2_periodic(buf.data(), res.data(), g, h)
                     : deriv2_box(buf.data(), res.data(), g, h);
          }
          for (int k = 0; k < g; ++k) f.data[start + k * ax.stride] = res[k];
        });
  };
  if (op.scheme == DerivScheme::Spectral) {
    one_pass(op.order);
    return;
  }
  int left = op.order;
  while (left >= 2) {
    one_pass(2);
    left -= 2;
  }
  if (left == 1) one_pass(1);
}

/// Index of the output element along x dim `dim`, for a field whose w axes
/// after the collapse are `wdims_out`.
struct XIndexer {
  std::int64_t w_total;
  std::int64_t xstride;
  int g;
  XIndexer(const GridSpec& grid, const std::vector<int>& wdims_out, int dim)
      : w_total(ipow64(grid.points, static_cast<int>(wdims_out.size()))),
        xstride(ipow64(grid.points, grid.dims - 1 - dim)),
        g(grid.points) {}
  int operator()(std::int64_t flat_out) const {
    return static_cast<int>((flat_out / (w_total * xstride)) % g);
  }
};

void collapse_axis(PairField& f, const OpNode& op) {
  const int wd = op.dim;
  auto it = std::find(f.wdims.begin(), f.wdims.end(), wd);
  if (it == f.wdims.end())
    op_error("w dim " + std::to_string(wd + 1) + " is not active");
  const int pos = static_cast<int>(it - f.wdims.begin());
  const int g = f.grid->points;
  const std::int64_t post =
      ipow64(g, static_cast<int>(f.wdims.size()) - 1 - pos);
  const std::int64_t total = static_cast<std::int64_t>(f.data.size());
  const std::int64_t pre = total / (g * post);

  std::vector<int> wdims_out = f.wdims;
  wdims_out.erase(wdims_out.begin() + pos);
  std::vector<double> out(static_cast<std::size_t>(pre * post), 0.0);
  alloc_stats::note(out.size());

  if (op.kind == OpNode::Kind::FullInt) {
    const std::vector<double> wgt = integration_weights(*f.grid, wd);
    for (std::int64_t p = 0; p < pre; ++p)
      for (std::int64_t q = 0; q < post; ++q) {
        double acc = 0.0;
        for (int b = 0; b < g; ++b)
          acc += wgt[b] * f.data[(p * g + b) * post + q];
        out[p * post + q] = acc;
      }
  } else if (op.kind == OpNode::Kind::CumInt) {
    const double h = f.grid->spacing(wd);
    const XIndexer xidx(*f.grid, wdims_out, wd);
    for (std::int64_t p = 0; p < pre; ++p)
      for (std::int64_t q = 0; q < post; ++q) {
        const std::int64_t fo = p * post + q;
        const int a = xidx(fo);
        double acc = 0.0;
        if (a > 0) {
          acc = 0.5 * f.data[(p * g + 0) * post + q];
          for (int b = 1; b < a; ++b) acc += f.data[(p * g + b) * post + q];
          acc += 0.5 * f.data[(p * g + a) * post + q];
          acc *= h;
        }
        out[fo] = acc;
      }
  } else {  // Restrict
    const XIndexer xidx(*f.grid, wdims_out, op.xdim);
    for (std::int64_t p = 0; p < pre; ++p)
      for (std::int64_t q = 0; q < post; ++q) {
        const std::int64_t fo = p * post + q;
        out[fo] = f.data[(p * g + xidx(fo)) * post + q];
      }
  }
  f.wdims = std::move(wdims_out);
  f.data = std::move(out);
}

}  // namespace

OpPtr op_scale(double c) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::Scale;
  n->value = c;
  return n;
}

OpPtr op_coord(CopyTag copy, int dim) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::CoordMul;
  n->copy = copy;
  n->dim = dim;
  return n;
}

OpPtr op_deriv(const GridSpec& grid, CopyTag copy, int dim, int order,
               DerivScheme scheme) {
  check_dim(dim, grid.dims);
  if (order < 1) op_error("derivative order must be positive");
  if (grid.points < 4)
    op_error("derivatives need at least 4 points per dim, got " +
             std::to_string(grid.points));
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::Deriv;
  n->copy = copy;
  n->dim = dim;
  n->order = order;
  n->scheme = scheme;
  if (scheme == DerivScheme::Spectral) {
    if (grid.boundary[dim] != Boundary::Periodic)
      op_error("spectral derivatives require a periodic dim");
    n->dense = std::make_shared<const std::vector<double>>(
        spectral_matrix(grid.points, grid.upper[dim] - grid.lower[dim],
                        order));
  }
  return n;
}

OpPtr op_cumint(int wdim) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::CumInt;
  n->dim = wdim;
  return n;
}

OpPtr op_fullint(int wdim) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::FullInt;
  n->dim = wdim;
  return n;
}

OpPtr op_restrict(int wdim, int xdim) {
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::Restrict;
  n->dim = wdim;
  n->xdim = xdim;
  return n;
}

OpPtr op_compose(std::vector<OpPtr> ops) {
  if (ops.empty()) op_error("empty composition");
  for (const OpPtr& p : ops)
    if (!p) op_error("null operator in composition");
  if (ops.size() == 1) return ops[0];
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::Compose;
  n->children = std::move(ops);
  return n;
}

OpPtr op_sum(std::vector<double> weights, std::vector<OpPtr> ops) {
  if (ops.empty() || ops.size() != weights.size())
    op_error("sum needs matching weights and operands");
  for (const OpPtr& p : ops)
    if (!p) op_error("null operator in sum");
  auto n = std::make_shared<OpNode>();
  n->kind = OpNode::Kind::Sum;
  n->children = std::move(ops);
  n->weights = std::move(weights);
  return n;
}

unsigned op_trace_wmask(const OpNode& op, unsigned in_mask, int dims) {
  switch (op.kind) {
    case OpNode::Kind::Scale:
      return in_mask;
    case OpNode::Kind::CoordMul:
    case OpNode::Kind::Deriv:
      check_dim(op.dim, dims);
      if (op.copy == CopyTag::W && !(in_mask & (1u << op.dim)))
        op_error("operator reads w dim " + std::to_string(op.dim + 1) +
                 " which is not active");
      return in_mask;
    case OpNode::Kind::CumInt:
    case OpNode::Kind::FullInt:
    case OpNode::Kind::Restrict:
      check_dim(op.dim, dims);
      if (op.kind == OpNode::Kind::Restrict) check_dim(op.xdim, dims);
      if (!(in_mask & (1u << op.dim)))
        op_error("operator consumes w dim " + std::to_string(op.dim + 1) +
                 " which is not active");
      return in_mask & ~(1u << op.dim);
    case OpNode::Kind::Compose: {
      unsigned m = in_mask;
      for (auto it = op.children.rbegin(); it != op.children.rend(); ++it)
        m = op_trace_wmask(**it, m, dims);
      return m;
    }
    case OpNode::Kind::Sum: {
      const unsigned m0 = op_trace_wmask(*op.children[0], in_mask, dims);
      for (std::size_t k = 1; k < op.children.size(); ++k)
        if (op_trace_wmask(*op.children[k], in_mask, dims) != m0)
          op_error("sum branches leave different w dims active");
      return m0;
    }
  }
  op_error("unknown operator kind");
}

PairField::PairField(const GridSpec& g, std::vector<int> w)
    : grid(&g), wdims(std::move(w)) {
  data.assign(static_cast<std::size_t>(g.cells() * wcells()), 0.0);
  alloc_stats::note(data.size());
}

std::int64_t PairField::wcells() const {
  return ipow64(grid->points, static_cast<int>(wdims.size()));
}

void apply_op(const OpNode& op, PairField& field) {
  switch (op.kind) {
    case OpNode::Kind::Scale:
      for (double& v : field.data) v *= op.value;
      return;
    case OpNode::Kind::CoordMul:
      apply_coord_mul(op, field);
      return;
    case OpNode::Kind::Deriv:
      apply_deriv(op, field);
      return;
    case OpNode::Kind::CumInt:
    case OpNode::Kind::FullInt:
    case OpNode::Kind::Restrict:
      collapse_axis(field, op);
      return;
    case OpNode::Kind::Compose:
      for (auto it = op.children.rbegin(); it != op.children.rend(); ++it)
        apply_op(**it, field);
      return;
    case OpNode::Kind::Sum: {
      PairField acc;
      for (std::size_t k = 0; k < op.children.size(); ++k) {
        PairField branch = field;
        alloc_stats::note(branch.data.size());
        apply_op(*op.children[k], branch);
        for (double& v : branch.data) v *= op.weights[k];
        if (k == 0) {
          acc = std::move(branch);
        } else {
          if (acc.data.size() != branch.data.size())
            op_error("sum branches produced different shapes");
          for (std::size_t i = 0; i < acc.data.size(); ++i)
            acc.data[i] += branch.data[i];
        }
      }
      field = std::move(acc);
      return;
    }
  }
}

void apply_one_copy(const OpNode& op, const GridSpec& grid,
                    std::vector<double>& samples) {
  PairField f;
  f.grid = &grid;
  f.data = std::move(samples);
  apply_op(op, f);
  samples = std::move(f.data);
}

std::vector<double> integration_weights(const GridSpec& grid, int dim) {
  check_dim(dim, grid.dims);
  const int g = grid.points;
  const double h = grid.spacing(dim);
  std::vector<double> w(static_cast<std::size_t>(g), h);
  if (grid.boundary[dim] == Boundary::Box) {
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
  }
  return w;
}

}  // namespace carlin
