#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "carlin/integrators.hpp"
#include "carlin/models.hpp"
#include "carlin/ode_carleman.hpp"
#include "carlin/opdsl.hpp"
#include "carlin/pde_carleman.hpp"

namespace {

using namespace carlin;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMemoryGuard = 3;
constexpr int kExitNumericalAbort = 4;

/// Shortest decimal form that parses back to the same double, so CSV output
/// is byte-stable across platforms.
std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt(std::int64_t v) { return std::to_string(v); }

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::invalid_argument("cannot open output file " + path);
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (k) out_ << ',';
      out_ << header[k];
    }
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

/// Run metadata next to the CSV: written once before the computation starts,
/// rewritten with the wall time and final status when it ends.
class MetaSidecar {
 public:
  MetaSidecar(const std::string& out_path, std::string command, json params)
      : path_(out_path + ".meta.json") {
    doc_["command"] = std::move(command);
    doc_["output"] = out_path;
    doc_["params"] = std::move(params);
    doc_["status"] = "running";
    start_ = std::chrono::steady_clock::now();
    write();
  }

  void merge(const json& extra) {
    for (auto it = extra.begin(); it != extra.end(); ++it)
      doc_[it.key()] = it.value();
  }

  void finalize(const std::string& status) {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    doc_["wall_ms"] =
        std::chrono::duration<double, std::milli>(elapsed).count();
    doc_["status"] = status;
    write();
  }

 private:
  void write() {
    std::ofstream f(path_);
    if (!f) throw std::invalid_argument("cannot open sidecar file " + path_);
    f << doc_.dump(2) << '\n';
  }

  std::string path_;
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

struct CommonOpts {
  std::string out = "run.csv";
  std::uint64_t seed = 1;
  int threads = 1;
  std::int64_t memory_cap = kDefaultMemoryCapBytes;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--out", c.out, "Output CSV path");
  cmd->add_option("--seed", c.seed, "Seed for randomized checks");
  cmd->add_option("--threads", c.threads, "Worker threads (convergence rows)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--memory-cap-bytes", c.memory_cap,
                  "Refuse lifted states larger than this");
}

double scalar_rk4_ref(double u0, double t_final, double dt,
                      double (*f)(double)) {
  double u = u0, t = 0.0;
  while (t < t_final - 1e-12) {
    const double h = std::min(dt, t_final - t);
    const double k1 = f(u);
    const double k2 = f(u + 0.5 * h * k1);
    const double k3 = f(u + 0.5 * h * k2);
    const double k4 = f(u + h * k3);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return u;
}

// ---------------------------------------------------------------- ode-sim --

struct OdeSimOpts {
  CommonOpts common;
  std::string model = "logistic";
  double u0 = 0.1;
  int levels = 6;
  double dt = 1e-3;
  double t_final = 1.0;
  int sample_stride = 10;
  std::string method = "rk4";
  int substeps = 8;
  int taylor_order = 16;
};

QuadraticODESystem ode_preset(const std::string& name) {
  if (name == "logistic")
    return {1, DenseVector{0.0}, DenseMatrix(1, 1, {1.0}),
            DenseMatrix(1, 1, {-1.0})};
  if (name == "decay")
    return {1, DenseVector{0.0}, DenseMatrix(1, 1, {-1.0}),
            DenseMatrix(1, 1, {0.0})};
  if (name == "growth")
    return {1, DenseVector{0.0}, DenseMatrix(1, 1, {1.0}),
            DenseMatrix(1, 1, {0.0})};
  if (name == "zero")
    return {1, DenseVector{0.0}, DenseMatrix(1, 1, {0.0}),
            DenseMatrix(1, 1, {0.0})};
  throw std::invalid_argument("unknown ode model '" + name +
                              "' (logistic, decay, growth, zero)");
}

/// Scalar reference for the preset at time t, integrated step by step so a
/// whole trajectory of sample times costs one pass.
class OdeReference {
 public:
  explicit OdeReference(const std::string& model, double u0)
      : model_(model), u_(u0) {}

  double advance_to(double t) {
    if (model_ == "zero") return u_;
    if (model_ == "decay" || model_ == "growth") {
      const double sign = model_ == "decay" ? -1.0 : 1.0;
      u_ *= std::exp(sign * (t - t_));
      t_ = t;
      return u_;
    }
    while (t_ < t - 1e-12) {
      const double h = std::min(1e-5, t - t_);
      const double k1 = rhs(u_);
      const double k2 = rhs(u_ + 0.5 * h * k1);
      const double k3 = rhs(u_ + 0.5 * h * k2);
      const double k4 = rhs(u_ + h * k3);
      u_ += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t_ += h;
    }
    return u_;
  }

 private:
  static double rhs(double u) { return u - u * u; }

  std::string model_;
  double u_;
  double t_ = 0.0;
};

int run_ode_sim(const OdeSimOpts& o) {
  MetaSidecar meta(o.common.out, "ode-sim",
                   json{{"model", o.model},
                        {"u0", o.u0},
                        {"levels", o.levels},
                        {"dt", o.dt},
                        {"t_final", o.t_final},
                        {"method", o.method},
                        {"seed", o.common.seed}});
  try {
    const QuadraticODESystem sys = ode_preset(o.model);
    const CarlemanOperator op(sys, o.levels, o.common.memory_cap);
    meta.merge({{"delta", op.delta}});

    const LiftedState z0 = lift_initial(DenseVector{o.u0}, o.levels);
    Trajectory traj;
    if (o.method == "rk4") {
      IntegratorConfig cfg;
      cfg.dt = o.dt;
      cfg.t_final = o.t_final;
      cfg.sample_stride = o.sample_stride;
      traj = rk4_integrate(
          [&](const std::vector<double>& flat) {
            return op.flatten(ode_rhs(op, op.unflatten(flat, 0.0)));
          },
          op.flatten(z0), cfg);
    } else if (o.method == "expm") {
      traj.times = {0.0, o.t_final};
      traj.states.push_back(op.flatten(z0));
      traj.states.push_back(expm_action(
          [&](const std::vector<double>& flat) {
            return op.flatten(apply_linear(op, op.unflatten(flat, 0.0)));
          },
          op.flatten(z0), op.flatten(bias(op)), o.t_final, o.substeps,
          o.taylor_order));
    } else {
      throw std::invalid_argument("unknown method '" + o.method +
                                  "' (rk4, expm)");
    }

    std::vector<std::string> header{"t"};
    for (int k = 1; k <= sys.n; ++k) header.push_back("u_" + std::to_string(k));
    header.push_back("u_ref");
    CsvWriter csv(o.common.out, header);

    OdeReference ref(o.model, o.u0);
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
      const LiftedState z = op.unflatten(traj.states[r], traj.times[r]);
      const DenseVector u = extract_solution(z);
      std::vector<std::string> cells{fmt(traj.times[r])};
      for (double v : u) cells.push_back(fmt(v));
      cells.push_back(fmt(ref.advance_to(traj.times[r])));
      csv.row(cells);
    }
    meta.finalize("ok");
    return kExitOk;
  } catch (const MemoryGuardError& e) {
    std::cerr << "memory guard: " << e.what() << '\n';
    meta.finalize("memory-guard");
    return kExitMemoryGuard;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    meta.finalize("numerical-abort");
    return kExitNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta.finalize("config-error");
    return kExitConfig;
  }
}

// ---------------------------------------------------------------- burgers --

struct BurgersOpts {
  CommonOpts common;
  double mu = 0.0;
  int grid_points = 64;
  std::string boundary = "periodic";
  double x_min = 0.0;
  double x_max = 2.0 * std::numbers::pi;
  std::string scheme = "central";
  std::string f2_form = "ddx";
  std::string u0 = "sine(0.05,1)";
  int levels = 8;
  double t_final = 1.0;
  std::string method = "auto";
  double dt = 2e-3;
  int substeps = 8;
  int taylor_order = 16;
  std::string f1_expr;
  std::string f2_expr;
  std::vector<std::string> bindings;
};

ScalarField1D parse_field(const std::string& spec, const GridSpec& grid) {
  const auto open = spec.find('(');
  const std::string name = spec.substr(0, open);
  std::vector<double> args;
  if (open != std::string::npos) {
    if (spec.back() != ')')
      throw std::invalid_argument("field spec '" + spec + "' missing ')'");
    std::string inner = spec.substr(open + 1, spec.size() - open - 2);
    std::stringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) args.push_back(std::stod(tok));
  }
  auto want = [&](std::size_t k) {
    if (args.size() != k)
      throw std::invalid_argument("field '" + name + "' takes " +
                                  std::to_string(k) + " argument(s)");
  };
  if (name == "linear") return want(0), preset_linear();
  if (name == "const") return want(1), preset_const(args[0]);
  if (name == "sine") return want(2), preset_sine(grid, args[0], args[1]);
  if (name == "gaussian") return want(2), preset_gaussian(args[0], args[1]);
  throw std::invalid_argument("unknown field '" + name +
                              "' (linear, const, sine, gaussian)");
}

CompileOptions parse_bindings(const std::vector<std::string>& pairs,
                              DerivScheme scheme) {
  CompileOptions opts;
  opts.scheme = scheme;
  for (const std::string& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("binding '" + p + "' is not name=value");
    opts.bindings[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
  }
  return opts;
}

int run_burgers(const BurgersOpts& o) {
  MetaSidecar meta(o.common.out, "burgers",
                   json{{"mu", o.mu},
                        {"grid_points", o.grid_points},
                        {"boundary", o.boundary},
                        {"scheme", o.scheme},
                        {"u0", o.u0},
                        {"levels", o.levels},
                        {"t_final", o.t_final},
                        {"method", o.method},
                        {"dt", o.dt},
                        {"seed", o.common.seed}});
  try {
    BurgersParams p;
    p.mu = o.mu;
    if (o.boundary != "periodic" && o.boundary != "box")
      throw std::invalid_argument("boundary must be periodic or box");
    p.grid = GridSpec::uniform(1, o.grid_points, o.x_min, o.x_max,
                               o.boundary == "periodic" ? Boundary::Periodic
                                                        : Boundary::Box);
    if (o.scheme == "spectral")
      p.scheme = DerivScheme::Spectral;
    else if (o.scheme != "central")
      throw std::invalid_argument("scheme must be central or spectral");
    if (o.f2_form == "ddw")
      p.f2_form = BurgersF2Form::DDw;
    else if (o.f2_form != "ddx")
      throw std::invalid_argument("f2-form must be ddx or ddw");

    PDEQuadraticSystem sys = burgers_system(p);
    if (!o.f1_expr.empty() || !o.f2_expr.empty()) {
      const CompileOptions copts = parse_bindings(o.bindings, p.scheme);
      std::vector<OpPtr> f1 = sys.f1, f2 = sys.f2;
      if (!o.f1_expr.empty())
        f1[0] = o.f1_expr == "0"
                    ? nullptr
                    : compile_linear_entry(*parse_operator(o.f1_expr), p.grid,
                                           copts);
      if (!o.f2_expr.empty())
        f2[0] = o.f2_expr == "0"
                    ? nullptr
                    : compile_quadratic_entry(*parse_operator(o.f2_expr),
                                              p.grid, copts);
      sys = PDEQuadraticSystem(p.grid, 1, GridTensor{}, std::move(f1),
                               std::move(f2));
    }

    const ScalarField1D u0_field = parse_field(o.u0, p.grid);
    const GridTensor u0 = sample_field(p.grid, u0_field);

    std::string method = o.method;
    if (method == "auto") method = sys.has_linear() ? "rk4" : "taylor-series";
    meta.merge({{"resolved_method", method},
                {"delta", pde_delta(sys, o.levels)}});

    GridTensor u_final;
    if (method == "taylor-series") {
      u_final = taylor_series_solution(sys, u0, o.levels, o.t_final);
    } else if (method == "nilpotent") {
      const std::vector<GridTensor> z0 =
          lift_initial_grid(sys, u0, o.levels, o.common.memory_cap);
      u_final = nilpotent_expm_apply(sys, z0, o.t_final).front();
    } else if (method == "rk4" || method == "expm") {
      const std::vector<GridTensor> z0 =
          lift_initial_grid(sys, u0, o.levels, o.common.memory_cap);
      std::vector<double> flat;
      const auto act_full = [&](const std::vector<double>& f) {
        return pde_flatten(
            pde_rhs(sys, o.levels, pde_unflatten(sys, o.levels, f)));
      };
      if (method == "rk4") {
        IntegratorConfig cfg;
        cfg.dt = o.dt;
        cfg.t_final = o.t_final;
        cfg.sample_stride = std::numeric_limits<int>::max();
        flat = rk4_integrate(act_full, pde_flatten(z0), cfg).states.back();
      } else {
        const auto act_lin = [&](const std::vector<double>& f) {
          return pde_flatten(
              pde_apply_linear(sys, o.levels, pde_unflatten(sys, o.levels, f)));
        };
        flat = expm_action(act_lin, pde_flatten(z0),
                           pde_flatten(pde_bias(sys, o.levels)), o.t_final,
                           o.substeps, o.taylor_order);
      }
      u_final = pde_unflatten(sys, o.levels, flat).front();
    } else {
      throw std::invalid_argument(
          "unknown method '" + method +
          "' (auto, taylor-series, nilpotent, rk4, expm)");
    }

    const ReferenceSolution ref = burgers_reference(p, u0_field, o.t_final);

    CsvWriter csv(o.common.out, {"x", "u_carleman", "u_reference", "abs_err"});
    for (int i = 0; i < p.grid.points; ++i) {
      const double uc = u_final.data[static_cast<std::size_t>(i)];
      const double ur = ref.samples.data[static_cast<std::size_t>(i)];
      csv.row({fmt(p.grid.coord(0, i)), fmt(uc), fmt(ur),
               fmt(std::abs(uc - ur))});
    }
    meta.finalize("ok");
    return kExitOk;
  } catch (const MemoryGuardError& e) {
    std::cerr << "memory guard: " << e.what() << '\n';
    meta.finalize("memory-guard");
    return kExitMemoryGuard;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    meta.finalize("numerical-abort");
    return kExitNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta.finalize("config-error");
    return kExitConfig;
  }
}

// ----------------------------------------------------------------- vlasov --

struct VlasovOpts {
  CommonOpts common;
  double c1 = 1.0;
  double c2 = 1.0;
  int grid_points = 16;
  double v_max = 6.0;
  std::string u0 = "two-stream";
  double v0 = 1.5;
  double spread = 0.5;
  double t_final = 0.0;
  double dt = 1e-3;
  int sample_stride = 50;
};

int run_vlasov(const VlasovOpts& o) {
  MetaSidecar meta(o.common.out, "vlasov",
                   json{{"c1", o.c1},
                        {"c2", o.c2},
                        {"grid_points", o.grid_points},
                        {"v_max", o.v_max},
                        {"u0", o.u0},
                        {"t_final", o.t_final},
                        {"dt", o.dt},
                        {"seed", o.common.seed}});
  try {
    VlasovParams p;
    p.c1 = o.c1;
    p.c2 = o.c2;
    p.grid = GridSpec(2, o.grid_points, {0.0, -o.v_max},
                      {2.0 * std::numbers::pi, o.v_max},
                      {Boundary::Periodic, Boundary::Box});
    const PDEQuadraticSystem sys = vlasov_system(p);

    GridTensor u0;
    if (o.u0 == "two-stream")
      u0 = vlasov_two_stream(p.grid, o.v0, o.spread);
    else if (o.u0 == "equal-species")
      u0 = vlasov_equal_species(p.grid, o.spread);
    else
      throw std::invalid_argument("unknown preset '" + o.u0 +
                                  "' (two-stream, equal-species)");
    check_velocity_tails(p.grid, u0);

    // Level-1 consistency: block-1 lifted RHS against the direct nonlinear
    // discretization on the same samples.
    GridTensor block1 = f2_pair_contract(sys, u0, u0);
    const double nonlinear_max0 = [&] {
      double m = 0.0;
      for (double v : block1.data) m = std::max(m, std::abs(v));
      return m;
    }();
    {
      const GridTensor lin = slot_apply_f1(sys, 1, 1, u0);
      for (std::size_t k = 0; k < block1.data.size(); ++k)
        block1.data[k] += lin.data[k];
    }
    const GridTensor direct = vlasov_direct_rhs(p, u0);
    double consistency = 0.0;
    for (std::size_t k = 0; k < block1.data.size(); ++k)
      consistency =
          std::max(consistency, std::abs(block1.data[k] - direct.data[k]));
    meta.merge({{"consistency_max_abs_diff", consistency},
                {"nonlinear_term_max", nonlinear_max0}});

    const std::vector<double> wx = integration_weights(p.grid, 0);
    const std::vector<double> wv = integration_weights(p.grid, 1);
    const int g = p.grid.points;
    const auto mass = [&](const std::vector<double>& state, int species) {
      double m = 0.0;
      for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
          m += wx[static_cast<std::size_t>(i)] *
               wv[static_cast<std::size_t>(j)] *
               state[static_cast<std::size_t>(2 * (i * g + j) + species)];
      return m;
    };

    if (o.t_final <= 0.0) {
      CsvWriter csv(o.common.out, {"metric", "value"});
      csv.row({"consistency_max_abs_diff", fmt(consistency)});
      csv.row({"nonlinear_term_max", fmt(nonlinear_max0)});
      csv.row({"mass_1", fmt(mass(u0.data, 0))});
      csv.row({"mass_2", fmt(mass(u0.data, 1))});
      meta.finalize("ok");
      return kExitOk;
    }

    IntegratorConfig cfg;
    cfg.dt = o.dt;
    cfg.t_final = o.t_final;
    cfg.sample_stride = o.sample_stride;
    const Trajectory traj = rk4_integrate(
        [&](const std::vector<double>& flat) {
          GridTensor u = make_grid_tensor(1, 2, sys.per_copy());
          u.data = flat;
          return vlasov_direct_rhs(p, u).data;
        },
        u0.data, cfg);

    CsvWriter csv(o.common.out, {"t", "mass_1", "mass_2", "nonlinear_max"});
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
      GridTensor u = make_grid_tensor(1, 2, sys.per_copy());
      u.data = traj.states[r];
      const GridTensor quad = f2_pair_contract(sys, u, u);
      double qmax = 0.0;
      for (double v : quad.data) qmax = std::max(qmax, std::abs(v));
      csv.row({fmt(traj.times[r]), fmt(mass(traj.states[r], 0)),
               fmt(mass(traj.states[r], 1)), fmt(qmax)});
    }
    meta.finalize("ok");
    return kExitOk;
  } catch (const MemoryGuardError& e) {
    std::cerr << "memory guard: " << e.what() << '\n';
    meta.finalize("memory-guard");
    return kExitMemoryGuard;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    meta.finalize("numerical-abort");
    return kExitNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta.finalize("config-error");
    return kExitConfig;
  }
}

// ------------------------------------------------------------ convergence --

struct ConvergenceOpts {
  CommonOpts common;
  std::string model = "logistic";
  std::vector<int> levels_list = {1, 2, 3, 4, 5, 6, 7, 8};
  double u0 = 0.1;
  double t_final = 1.0;
  double dt = 1e-4;
  int grid_points = 17;
};

struct ConvergenceRow {
  int levels = 0;
  double error_max = 0.0;
  double error_l2 = 0.0;
  std::int64_t delta = 0;
  double wall_ms = 0.0;
};

ConvergenceRow converge_logistic(const ConvergenceOpts& o, int levels,
                                 double reference) {
  const auto start = std::chrono::steady_clock::now();
  const QuadraticODESystem sys = ode_preset("logistic");
  const CarlemanOperator op(sys, levels, o.common.memory_cap);
  IntegratorConfig cfg;
  cfg.dt = o.dt;
  cfg.t_final = o.t_final;
  cfg.sample_stride = std::numeric_limits<int>::max();
  const Trajectory traj = rk4_integrate(
      [&](const std::vector<double>& flat) {
        return op.flatten(ode_rhs(op, op.unflatten(flat, 0.0)));
      },
      op.flatten(lift_initial(DenseVector{o.u0}, levels)), cfg);
  const double got = op.unflatten(traj.states.back(), 0.0).blocks[0][0];
  ConvergenceRow row;
  row.levels = levels;
  row.error_max = std::abs(got - reference);
  row.error_l2 = row.error_max;
  row.delta = op.delta;
  row.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return row;
}

ConvergenceRow converge_burgers_linear(const ConvergenceOpts& o, int levels) {
  const auto start = std::chrono::steady_clock::now();
  BurgersParams p;
  p.grid = GridSpec::uniform(1, o.grid_points, 0.0, 1.0, Boundary::Box);
  const PDEQuadraticSystem sys = burgers_system(p);
  const GridTensor u0 = sample_field(p.grid, preset_linear());
  const GridTensor got = taylor_series_solution(sys, u0, levels, o.t_final);

  ConvergenceRow row;
  row.levels = levels;
  double sq = 0.0;
  for (int i = 0; i < p.grid.points; ++i) {
    const double want = p.grid.coord(0, i) / (1.0 + o.t_final);
    const double err = std::abs(got.data[static_cast<std::size_t>(i)] - want);
    row.error_max = std::max(row.error_max, err);
    sq += err * err;
  }
  row.error_l2 = std::sqrt(sq / p.grid.points);
  row.delta = pde_delta(sys, levels);
  row.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return row;
}

int run_convergence(const ConvergenceOpts& o) {
  MetaSidecar meta(o.common.out, "convergence",
                   json{{"model", o.model},
                        {"levels_list", o.levels_list},
                        {"u0", o.u0},
                        {"t_final", o.t_final},
                        {"dt", o.dt},
                        {"threads", o.common.threads},
                        {"seed", o.common.seed}});
  try {
    if (o.model != "logistic" && o.model != "burgers-linear")
      throw std::invalid_argument("unknown model '" + o.model +
                                  "' (logistic, burgers-linear)");
    if (o.levels_list.empty())
      throw std::invalid_argument("levels list must not be empty");

    std::vector<int> levels = o.levels_list;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.front() < 1)
      throw std::invalid_argument("levels must be >= 1");

    double reference = 0.0;
    if (o.model == "logistic")
      reference = scalar_rk4_ref(o.u0, o.t_final, 1e-5,
                                 [](double u) { return u - u * u; });

    const auto run_one = [&](int n) {
      return o.model == "logistic" ? converge_logistic(o, n, reference)
                                   : converge_burgers_linear(o, n);
    };

    std::vector<ConvergenceRow> rows(levels.size());
    if (o.common.threads <= 1) {
      for (std::size_t k = 0; k < levels.size(); ++k)
        rows[k] = run_one(levels[k]);
    } else {
      std::vector<std::future<ConvergenceRow>> futs;
      futs.reserve(levels.size());
      for (int n : levels)
        futs.push_back(
            std::async(std::launch::async, [&run_one, n] { return run_one(n); }));
      for (std::size_t k = 0; k < futs.size(); ++k) rows[k] = futs[k].get();
    }

    CsvWriter csv(o.common.out,
                  {"N", "error_max", "error_l2", "delta", "wall_ms"});
    for (const ConvergenceRow& r : rows)
      csv.row({fmt(static_cast<std::int64_t>(r.levels)), fmt(r.error_max),
               fmt(r.error_l2), fmt(r.delta), fmt(r.wall_ms)});
    meta.finalize("ok");
    return kExitOk;
  } catch (const MemoryGuardError& e) {
    std::cerr << "memory guard: " << e.what() << '\n';
    meta.finalize("memory-guard");
    return kExitMemoryGuard;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    meta.finalize("numerical-abort");
    return kExitNumericalAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    meta.finalize("config-error");
    return kExitConfig;
  }
}

// ---------------------------------------------------------------- selftest --

int run_selftest(std::uint64_t seed) {
  int failures = 0;
  const auto report = [&](const std::string& name, bool ok,
                          const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << ' ' << name;
    if (!detail.empty()) std::cout << " (" << detail << ')';
    std::cout << '\n';
    if (!ok) ++failures;
  };

  // Lift round-trip: block 1 of the lifted initial state is the input.
  {
    std::mt19937_64 rng(seed);
    DenseVector u(3);
    for (double& v : u) v = -1.0 + 2.0 * (rng() >> 11) * 0x1.0p-53;
    const LiftedState z = lift_initial(u, 3);
    report("lift-extract-roundtrip", extract_solution(z) == u, "");
  }

  // Logistic truncation error must fall with the level.
  {
    const double ref = scalar_rk4_ref(0.1, 1.0, 1e-5,
                                      [](double u) { return u - u * u; });
    bool decreasing = true;
    double prev = 1e300;
    std::string detail;
    for (int n = 1; n <= 5; ++n) {
      const QuadraticODESystem sys = ode_preset("logistic");
      const CarlemanOperator op(sys, n);
      IntegratorConfig cfg;
      cfg.dt = 1e-3;
      cfg.sample_stride = std::numeric_limits<int>::max();
      const Trajectory tr = rk4_integrate(
          [&](const std::vector<double>& f) {
            return op.flatten(ode_rhs(op, op.unflatten(f, 0.0)));
          },
          op.flatten(lift_initial(DenseVector{0.1}, n)), cfg);
      const double err = std::abs(tr.states.back()[0] - ref);
      if (err >= prev) decreasing = false;
      prev = err;
      detail = "error(N=5) = " + fmt(err);
    }
    report("logistic-convergence", decreasing, detail);
  }

  // The two quadratic advection forms agree on symmetric data.
  {
    BurgersParams px;
    px.grid = GridSpec::uniform(1, 32, 0.0, 2.0 * std::numbers::pi,
                                Boundary::Periodic);
    BurgersParams pw = px;
    pw.f2_form = BurgersF2Form::DDw;
    const GridTensor u = sample_field(px.grid, preset_sine(px.grid, 0.5, 1.0));
    const GridTensor a = f2_pair_contract(burgers_system(px), u, u);
    const GridTensor b = f2_pair_contract(burgers_system(pw), u, u);
    double diff = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k)
      diff = std::max(diff, std::abs(a.data[k] - b.data[k]));
    report("advection-form-agreement", diff <= 1e-12, "max diff " + fmt(diff));
  }

  // Compiled textual entries match the hand-built constructors.
  {
    BurgersParams p;
    p.grid = GridSpec::uniform(1, 16, 0.0, 1.0, Boundary::Periodic);
    const OpPtr built = burgers_system(p).f2_entry(0, 0, 0);
    const OpPtr compiled = compile_quadratic_entry(
        *parse_operator("-delta(w1=x1) * d/dx1"), p.grid, {});
    std::mt19937_64 rng(seed + 1);
    double diff = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      PairField f(p.grid, {0});
      for (double& v : f.data) v = -1.0 + 2.0 * (rng() >> 11) * 0x1.0p-53;
      PairField g = f;
      apply_op(*built, f);
      apply_op(*compiled, g);
      for (std::size_t k = 0; k < f.data.size(); ++k)
        diff = std::max(diff, std::abs(f.data[k] - g.data[k]));
    }
    report("dsl-matches-hand-built", diff <= 1e-13, "max diff " + fmt(diff));
  }

  // Identical species cancel the quadratic coupling.
  {
    VlasovParams p;
    p.grid = GridSpec(2, 16, {0.0, -6.0}, {2.0 * std::numbers::pi, 6.0},
                      {Boundary::Periodic, Boundary::Box});
    const PDEQuadraticSystem sys = vlasov_system(p);
    const GridTensor u = vlasov_equal_species(p.grid, 0.5);
    const GridTensor quad = f2_pair_contract(sys, u, u);
    double m = 0.0;
    for (double v : quad.data) m = std::max(m, std::abs(v));
    report("equal-species-cancellation", m <= 1e-12, "max " + fmt(m));
  }

  // The terminating exponential equals the generic series on a pure
  // quadratic lift.
  {
    BurgersParams p;
    p.grid = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Box);
    const PDEQuadraticSystem sys = burgers_system(p);
    const GridTensor u0 = sample_field(p.grid, preset_linear());
    const int levels = 4;
    const std::vector<GridTensor> z0 = lift_initial_grid(sys, u0, levels);
    const std::vector<GridTensor> nil = nilpotent_expm_apply(sys, z0, 0.2);
    const std::vector<double> flat = expm_action(
        [&](const std::vector<double>& f) {
          return pde_flatten(
              pde_apply_linear(sys, levels, pde_unflatten(sys, levels, f)));
        },
        pde_flatten(z0), {}, 0.2, 1, levels + 2);
    const std::vector<GridTensor> gen = pde_unflatten(sys, levels, flat);
    double diff = 0.0;
    for (int i = 0; i < levels; ++i)
      for (std::size_t k = 0; k < nil[static_cast<std::size_t>(i)].data.size();
           ++k)
        diff = std::max(
            diff, std::abs(nil[static_cast<std::size_t>(i)].data[k] -
                           gen[static_cast<std::size_t>(i)].data[k]));
    report("terminating-exponential", diff <= 1e-13, "max diff " + fmt(diff));
  }

  std::cout << (failures == 0 ? "all checks passed" : "checks failed") << '\n';
  return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated Carleman lifting of quadratic ODE/PDE systems"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");

  OdeSimOpts ode;
  CLI::App* ode_cmd =
      app.add_subcommand("ode-sim", "Integrate a lifted quadratic ODE");
  add_common(ode_cmd, ode.common);
  ode_cmd->add_option("--model", ode.model,
                      "Preset: logistic, decay, growth, zero");
  ode_cmd->add_option("--u0", ode.u0, "Initial value");
  ode_cmd->add_option("--levels", ode.levels, "Truncation level N")
      ->check(CLI::PositiveNumber);
  ode_cmd->add_option("--dt", ode.dt, "Step size");
  ode_cmd->add_option("--t-final", ode.t_final, "Final time");
  ode_cmd->add_option("--sample-stride", ode.sample_stride,
                      "Keep every k-th step");
  ode_cmd->add_option("--method", ode.method, "rk4 or expm");
  ode_cmd->add_option("--substeps", ode.substeps, "expm substeps");
  ode_cmd->add_option("--taylor-order", ode.taylor_order,
                      "expm series order");

  BurgersOpts bur;
  CLI::App* bur_cmd =
      app.add_subcommand("burgers", "Lifted advection-diffusion run");
  add_common(bur_cmd, bur.common);
  bur_cmd->add_option("--mu", bur.mu, "Viscosity");
  bur_cmd->add_option("--grid-points", bur.grid_points, "Grid points")
      ->check(CLI::PositiveNumber);
  bur_cmd->add_option("--boundary", bur.boundary, "periodic or box");
  bur_cmd->add_option("--x-min", bur.x_min, "Domain lower edge");
  bur_cmd->add_option("--x-max", bur.x_max, "Domain upper edge");
  bur_cmd->add_option("--scheme", bur.scheme, "central or spectral");
  bur_cmd->add_option("--f2-form", bur.f2_form,
                      "Quadratic term variant: ddx or ddw");
  bur_cmd->add_option("--u0", bur.u0,
                      "linear | const(c) | sine(a,k) | gaussian(c,w)");
  bur_cmd->add_option("--levels", bur.levels, "Truncation level N")
      ->check(CLI::PositiveNumber);
  bur_cmd->add_option("--t-final", bur.t_final, "Final time");
  bur_cmd->add_option("--method", bur.method,
                      "auto, taylor-series, nilpotent, rk4, expm");
  bur_cmd->add_option("--dt", bur.dt, "RK4 step size");
  bur_cmd->add_option("--substeps", bur.substeps, "expm substeps");
  bur_cmd->add_option("--taylor-order", bur.taylor_order, "expm series order");
  bur_cmd->add_option("--f1-expr", bur.f1_expr,
                      "Override the linear entry (textual operator)");
  bur_cmd->add_option("--f2-expr", bur.f2_expr,
                      "Override the quadratic entry (textual operator)");
  bur_cmd->add_option("--bind", bur.bindings,
                      "Symbol binding name=value (repeatable)");

  VlasovOpts vla;
  CLI::App* vla_cmd = app.add_subcommand(
      "vlasov", "Two-species phase-space consistency and mass tracking");
  add_common(vla_cmd, vla.common);
  vla_cmd->add_option("--c1", vla.c1, "Species-1 coupling");
  vla_cmd->add_option("--c2", vla.c2, "Species-2 coupling");
  vla_cmd->add_option("--grid-points", vla.grid_points, "Points per dim")
      ->check(CLI::PositiveNumber);
  vla_cmd->add_option("--v-max", vla.v_max, "Velocity box half-width");
  vla_cmd->add_option("--u0", vla.u0, "two-stream or equal-species");
  vla_cmd->add_option("--v0", vla.v0, "Stream velocity");
  vla_cmd->add_option("--spread", vla.spread, "Velocity spread");
  vla_cmd->add_option("--t-final", vla.t_final,
                      "0 runs the consistency report only");
  vla_cmd->add_option("--dt", vla.dt, "RK4 step size");
  vla_cmd->add_option("--sample-stride", vla.sample_stride,
                      "Keep every k-th step");

  ConvergenceOpts cvg;
  CLI::App* cvg_cmd =
      app.add_subcommand("convergence", "Error-vs-level study");
  add_common(cvg_cmd, cvg.common);
  cvg_cmd->add_option("--model", cvg.model, "logistic or burgers-linear");
  cvg_cmd->add_option("--levels-list", cvg.levels_list,
                      "Truncation levels to run")
      ->delimiter(',');
  cvg_cmd->add_option("--u0", cvg.u0, "Initial value (logistic)");
  cvg_cmd->add_option("--t-final", cvg.t_final, "Final time");
  cvg_cmd->add_option("--dt", cvg.dt, "RK4 step size (logistic)");
  cvg_cmd->add_option("--grid-points", cvg.grid_points,
                      "Grid points (burgers-linear)");

  CommonOpts self_common;
  CLI::App* self_cmd =
      app.add_subcommand("selftest", "Run built-in equivalence checks");
  self_cmd->add_option("--seed", self_common.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  if (*ode_cmd) return run_ode_sim(ode);
  if (*bur_cmd) return run_burgers(bur);
  if (*vla_cmd) return run_vlasov(vla);
  if (*cvg_cmd) return run_convergence(cvg);
  if (*self_cmd) return run_selftest(self_common.seed);
  return kExitConfig;
}
