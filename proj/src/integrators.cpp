#include "carlin/integrators.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>

namespace carlin {

namespace {

bool finite_vec(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}

}  // namespace

Trajectory rk4_integrate(const LinearAction& rhs, const std::vector<double>& z0,
                         const IntegratorConfig& cfg) {
  if (cfg.dt <= 0.0) throw std::invalid_argument("rk4: dt must be positive");
  if (cfg.t_final < 0.0)
    throw std::invalid_argument("rk4: t_final must be nonnegative");
  const int stride = cfg.sample_stride < 1 ? 1 : cfg.sample_stride;

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(z0);

  std::vector<double> z = z0, stage(z0.size());
  double t = 0.0;
  std::int64_t step = 0;
  while (t < cfg.t_final - 1e-12 * cfg.t_final && t < cfg.t_final) {
    const double h = std::min(cfg.dt, cfg.t_final - t);
    const std::vector<double> k1 = rhs(z);
    stage = z;
    axpy(0.5 * h, k1, stage);
    const std::vector<double> k2 = rhs(stage);
    stage = z;
    axpy(0.5 * h, k2, stage);
    const std::vector<double> k3 = rhs(stage);
    stage = z;
    axpy(h, k3, stage);
    const std::vector<double> k4 = rhs(stage);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t += h;
    ++step;
    if (!finite_vec(z)) throw NumericalAbort(step);
    if (step % stride == 0 || t >= cfg.t_final - 1e-12 * cfg.t_final) {
      traj.times.push_back(t);
      traj.states.push_back(z);
    }
  }
  return traj;
}

std::vector<double> expm_action(const LinearAction& apply_a,
                                const std::vector<double>& z0,
                                const std::vector<double>& b, double t,
                                int substeps, int taylor_order) {
  if (substeps < 1)
    throw std::invalid_argument("expm_action: substeps must be >= 1");
  if (taylor_order < 1)
    throw std::invalid_argument("expm_action: taylor_order must be >= 1");
  if (!b.empty() && b.size() != z0.size())
    throw std::invalid_argument("expm_action: bias length mismatch");
  const double tau = t / substeps;
  std::vector<double> z = z0;
  for (int s = 0; s < substeps; ++s) {
    std::vector<double> next = z;
    std::vector<double> term = z;
    for (int k = 1; k <= taylor_order; ++k) {
      term = apply_a(term);
      for (double& v : term) v *= tau / k;
      axpy(1.0, term, next);
    }
    if (!b.empty()) {
      std::vector<double> bterm = b;
      for (double& v : bterm) v *= tau;
      axpy(1.0, bterm, next);
      for (int k = 1; k <= taylor_order; ++k) {
        bterm = apply_a(bterm);
        for (double& v : bterm) v *= tau / (k + 1);
        axpy(1.0, bterm, next);
      }
    }
    z = std::move(next);
    if (!finite_vec(z)) throw NumericalAbort(s + 1);
  }
  return z;
}

std::vector<std::vector<double>> nilpotent_expm_apply(
    const StepDown& step_down, const std::vector<std::vector<double>>& z0,
    double t) {
  const int levels = static_cast<int>(z0.size());
  std::vector<std::vector<double>> out(z0.size());
  for (int i = 1; i <= levels; ++i)
    out[i - 1].assign(z0[i - 1].size(), 0.0);
  for (int jstart = 1; jstart <= levels; ++jstart) {
    std::vector<double> w = z0[jstart - 1];
    axpy(1.0, w, out[jstart - 1]);
    double coeff = 1.0;
    for (int i = jstart - 1; i >= 1; --i) {
      w = step_down(i, w);
      coeff *= t / (jstart - i);
      axpy(coeff, w, out[i - 1]);
    }
  }
  return out;
}

std::vector<GridTensor> nilpotent_expm_apply(const PDEQuadraticSystem& sys,
                                             const std::vector<GridTensor>& z0,
                                             double t) {
  if (sys.has_bias() || sys.has_linear())
    throw std::invalid_argument(
        "nilpotent_expm_apply: generator is not strictly upper triangular "
        "(system has a bias or linear part)");
  std::vector<std::vector<double>> blocks;
  blocks.reserve(z0.size());
  for (const GridTensor& tns : z0) blocks.push_back(tns.data);
  blocks = nilpotent_expm_apply(
      [&](int level, const std::vector<double>& y) {
        GridTensor in;
        in.level = level + 1;
        in.comp = sys.comp;
        in.data = y;
        return pde_transfer_apply(sys, level, 2, in).data;
      },
      blocks, t);
  std::vector<GridTensor> out;
  out.reserve(blocks.size());
  for (int i = 1; i <= static_cast<int>(blocks.size()); ++i) {
    GridTensor tns;
    tns.level = i;
    tns.comp = sys.comp;
    tns.data = std::move(blocks[static_cast<std::size_t>(i - 1)]);
    out.push_back(std::move(tns));
  }
  return out;
}

namespace {

/// Rank-1 cascade state for taylor_series_solution. A field is a level-1
/// tensor; a term is an ordered product of fields with a scalar coefficient.
/// Contracting adjacent copies of a rank-1 product only ever needs the pair
/// of level-1 factors, so the whole cascade stays at level <= 2.
struct RankOneCascade {
  const PDEQuadraticSystem& sys;
  std::vector<GridTensor> fields;
  std::map<std::pair<int, int>, int> pair_memo;

  explicit RankOneCascade(const PDEQuadraticSystem& s) : sys(s) {}

  int add_field(GridTensor f) {
    fields.push_back(std::move(f));
    return static_cast<int>(fields.size()) - 1;
  }

  int contract(int a, int b) {
    const auto key = std::make_pair(a, b);
    auto it = pair_memo.find(key);
    if (it != pair_memo.end()) return it->second;
    GridTensor r = f2_pair_contract(sys, fields[static_cast<std::size_t>(a)],
                                    fields[static_cast<std::size_t>(b)]);
    const int id = add_field(std::move(r));
    pair_memo.emplace(key, id);
    return id;
  }
};

using TermMap = std::map<std::vector<int>, double>;

}  // namespace

GridTensor taylor_series_solution(const PDEQuadraticSystem& sys,
                                  const GridTensor& u0, int levels,
                                  double t) {
  if (sys.has_bias() || sys.has_linear())
    throw std::invalid_argument(
        "taylor_series_solution: system must be purely quadratic");
  if (levels < 1)
    throw std::invalid_argument("taylor_series_solution: levels must be >= 1");

  RankOneCascade cas(sys);
  const int u0_id = cas.add_field(u0);

  GridTensor result = u0;
  double factorial = 1.0;  // (j-1)! running value
  for (int j = 2; j <= levels; ++j) {
    factorial *= j - 1;
    TermMap terms;
    terms[std::vector<int>(static_cast<std::size_t>(j), u0_id)] = 1.0;
    for (int i = j; i >= 2; --i) {
      TermMap next;
      for (const auto& [ids, coeff] : terms) {
        for (int slot = 0; slot + 1 < static_cast<int>(ids.size()); ++slot) {
          std::vector<int> merged;
          merged.reserve(ids.size() - 1);
          merged.insert(merged.end(), ids.begin(), ids.begin() + slot);
          merged.push_back(cas.contract(ids[static_cast<std::size_t>(slot)],
                                        ids[static_cast<std::size_t>(slot + 1)]));
          merged.insert(merged.end(), ids.begin() + slot + 2, ids.end());
          next[merged] += coeff;
        }
      }
      terms = std::move(next);
    }
    const double scale = std::pow(t, j - 1) / factorial;
    for (const auto& [ids, coeff] : terms) {
      const std::vector<double>& f =
          cas.fields[static_cast<std::size_t>(ids[0])].data;
      axpy(scale * coeff, f, result.data);
    }
  }
  return result;
}

}  // namespace carlin
