#include "carlin/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace carlin {

namespace {

[[noreturn]] void model_error(const std::string& what) {
  throw std::invalid_argument("models: " + what);
}

OpPtr vlasov_streaming(const GridSpec& grid) {
  return op_compose({op_scale(-1.0), op_coord(CopyTag::X, 1),
                     op_deriv(grid, CopyTag::X, 0, 1)});
}

OpPtr vlasov_field_coupling(const GridSpec& grid, double weight) {
  return op_compose({op_scale(weight), op_deriv(grid, CopyTag::X, 1, 1),
                     op_cumint(0), op_fullint(1)});
}

}  // namespace

PDEQuadraticSystem burgers_system(const BurgersParams& p) {
  if (p.mu < 0.0) model_error("viscosity must be nonnegative");
  if (p.grid.dims != 1) model_error("Burgers needs a one-dim grid");
  std::vector<OpPtr> f1(1);
  if (p.mu != 0.0)
    f1[0] = op_compose(
        {op_scale(p.mu), op_deriv(p.grid, CopyTag::X, 0, 2, p.scheme)});
  const CopyTag dcopy =
      p.f2_form == BurgersF2Form::DDx ? CopyTag::X : CopyTag::W;
  std::vector<OpPtr> f2{op_compose({op_scale(-1.0), op_restrict(0, 0),
                                    op_deriv(p.grid, dcopy, 0, 1, p.scheme)})};
  return PDEQuadraticSystem(p.grid, 1, GridTensor{}, std::move(f1),
                            std::move(f2));
}

PDEQuadraticSystem vlasov_system(const VlasovParams& p) {
  if (p.grid.dims != 2) model_error("Vlasov needs a two-dim grid");
  std::vector<OpPtr> f1(4);
  f1[0] = vlasov_streaming(p.grid);
  f1[3] = vlasov_streaming(p.grid);
  // Row s couples only pairs whose first factor is species s; the second
  // factor enters through the integrated charge u2 - u1.
  std::vector<OpPtr> f2(8);
  f2[0] = vlasov_field_coupling(p.grid, -p.c1);  // (out 1; u1, u1)
  f2[1] = vlasov_field_coupling(p.grid, p.c1);   // (out 1; u1, u2)
  f2[6] = vlasov_field_coupling(p.grid, -p.c2);  // (out 2; u2, u1)
  f2[7] = vlasov_field_coupling(p.grid, p.c2);   // (out 2; u2, u2)
  return PDEQuadraticSystem(p.grid, 2, GridTensor{}, std::move(f1),
                            std::move(f2));
}

namespace {

double breaking_time(const ScalarField1D& u0, double lo, double hi) {
  const int samples = 4096;
  const double h = (hi - lo) / samples;
  double min_slope = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double x = lo + k * h;
    const double s = (u0(x + 1e-6) - u0(x - 1e-6)) / 2e-6;
    if (s < min_slope) min_slope = s;
  }
  return min_slope < 0.0 ? -1.0 / min_slope
                         : std::numeric_limits<double>::infinity();
}

ReferenceSolution burgers_characteristics(const BurgersParams& p,
                                          const ScalarField1D& u0,
                                          double t_final) {
  const double lo = p.grid.lower[0], hi = p.grid.upper[0];
  const double t_break = breaking_time(u0, lo, hi);
  if (t_final >= t_break)
    model_error("t_final " + std::to_string(t_final) +
                " is past the wave-breaking time " + std::to_string(t_break));
  ReferenceSolution ref;
  ref.t = t_final;
  ref.method = ReferenceMethod::Characteristics;
  ref.samples = make_grid_tensor(1, 1, p.grid.cells());
  for (int a = 0; a < p.grid.points; ++a) {
    const double x = p.grid.coord(0, a);
    double x0 = x;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      const double g = x0 + u0(x0) * t_final - x;
      if (std::abs(g) <= 1e-12) {
        converged = true;
        break;
      }
      const double slope = (u0(x0 + 1e-7) - u0(x0 - 1e-7)) / 2e-7;
      x0 -= g / (1.0 + slope * t_final);
    }
    if (!converged)
      model_error("characteristic solve did not reach residual 1e-12 at x = " +
                  std::to_string(x));
    ref.samples.data[static_cast<std::size_t>(a)] = u0(x0);
  }
  return ref;
}

ReferenceSolution burgers_pseudo_spectral(const BurgersParams& p,
                                          const ScalarField1D& u0,
                                          double t_final) {
  if (p.grid.boundary[0] != Boundary::Periodic)
    model_error("the viscous reference needs a periodic grid");
  const OpPtr d1 = op_deriv(p.grid, CopyTag::X, 0, 1, DerivScheme::Spectral);
  const OpPtr d2 = op_deriv(p.grid, CopyTag::X, 0, 2, DerivScheme::Spectral);
  const double h = p.grid.spacing(0);
  const double dt_cap = h * h / (4.0 * p.mu);
  const int steps =
      t_final > 0.0 ? static_cast<int>(std::ceil(t_final / dt_cap)) : 0;

  std::vector<double> u(static_cast<std::size_t>(p.grid.points));
  for (int a = 0; a < p.grid.points; ++a)
    u[static_cast<std::size_t>(a)] = u0(p.grid.coord(0, a));

  auto rhs = [&](const std::vector<double>& v) {
    std::vector<double> ux = v, uxx = v;
    apply_one_copy(*d1, p.grid, ux);
    apply_one_copy(*d2, p.grid, uxx);
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
      out[k] = p.mu * uxx[k] - v[k] * ux[k];
    return out;
  };
  IntegratorConfig cfg;
  cfg.dt = steps > 0 ? t_final / steps : 1.0;
  cfg.t_final = t_final;
  cfg.sample_stride = steps > 0 ? steps : 1;
  Trajectory traj = rk4_integrate(rhs, u, cfg);

  ReferenceSolution ref;
  ref.t = t_final;
  ref.method = ReferenceMethod::PseudoSpectral;
  ref.samples = make_grid_tensor(1, 1, p.grid.cells());
  ref.samples.data = traj.states.back();
  return ref;
}

}  // namespace

ReferenceSolution burgers_reference(const BurgersParams& p,
                                    const ScalarField1D& u0, double t_final) {
  if (p.grid.dims != 1) model_error("Burgers needs a one-dim grid");
  return p.mu == 0.0 ? burgers_characteristics(p, u0, t_final)
                     : burgers_pseudo_spectral(p, u0, t_final);
}

GridTensor burgers_direct_rhs(const BurgersParams& p, const GridTensor& u) {
  std::vector<double> ux = u.data, uxx = u.data;
  apply_one_copy(*op_deriv(p.grid, CopyTag::X, 0, 1, p.scheme), p.grid, ux);
  GridTensor out = make_grid_tensor(1, 1, p.grid.cells());
  if (p.mu != 0.0) {
    apply_one_copy(*op_deriv(p.grid, CopyTag::X, 0, 2, p.scheme), p.grid, uxx);
    for (std::size_t k = 0; k < out.data.size(); ++k)
      out.data[k] = p.mu * uxx[k] - u.data[k] * ux[k];
  } else {
    for (std::size_t k = 0; k < out.data.size(); ++k)
      out.data[k] = -u.data[k] * ux[k];
  }
  return out;
}

namespace {

/// Splits an interleaved two-species tensor into per-species fields and back.
void split_species(const GridTensor& u, std::vector<double>& u1,
                   std::vector<double>& u2) {
  const std::size_t cells = u.data.size() / 2;
  u1.resize(cells);
  u2.resize(cells);
  for (std::size_t a = 0; a < cells; ++a) {
    u1[a] = u.data[2 * a];
    u2[a] = u.data[2 * a + 1];
  }
}

/// E(x) = cumulative-in-x trapezoid of the velocity-integrated charge u2-u1.
std::vector<double> vlasov_field(const GridSpec& grid,
                                 const std::vector<double>& u1,
                                 const std::vector<double>& u2) {
  const int g = grid.points;
  const std::vector<double> wv = integration_weights(grid, 1);
  std::vector<double> rho(static_cast<std::size_t>(g), 0.0);
  for (int i = 0; i < g; ++i) {
    double acc = 0.0;
    for (int j = 0; j < g; ++j)
      acc += wv[static_cast<std::size_t>(j)] *
             (u2[static_cast<std::size_t>(i * g + j)] -
              u1[static_cast<std::size_t>(i * g + j)]);
    rho[static_cast<std::size_t>(i)] = acc;
  }
  const double hx = grid.spacing(0);
  std::vector<double> e(static_cast<std::size_t>(g), 0.0);
  for (int i = 1; i < g; ++i) {
    double acc = 0.5 * rho[0];
    for (int k = 1; k < i; ++k) acc += rho[static_cast<std::size_t>(k)];
    acc += 0.5 * rho[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(i)] = hx * acc;
  }
  return e;
}

}  // namespace

GridTensor vlasov_direct_rhs(const VlasovParams& p, const GridTensor& u) {
  const int g = p.grid.points;
  std::vector<double> u1, u2;
  split_species(u, u1, u2);
  const std::vector<double> e = vlasov_field(p.grid, u1, u2);
  const OpPtr stream = vlasov_streaming(p.grid);
  const OpPtr dv = op_deriv(p.grid, CopyTag::X, 1, 1);

  GridTensor out = make_grid_tensor(1, 2, 2 * p.grid.cells());
  const double cs[2] = {p.c1, p.c2};
  const std::vector<double>* us[2] = {&u1, &u2};
  for (int s = 0; s < 2; ++s) {
    std::vector<double> str = *us[s];
    apply_one_copy(*stream, p.grid, str);
    std::vector<double> prod(us[s]->size());
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j)
        prod[static_cast<std::size_t>(i * g + j)] =
            (*us[s])[static_cast<std::size_t>(i * g + j)] *
            e[static_cast<std::size_t>(i)];
    apply_one_copy(*dv, p.grid, prod);
    for (std::size_t a = 0; a < str.size(); ++a)
      out.data[2 * a + static_cast<std::size_t>(s)] =
          str[a] + cs[s] * prod[a];
  }
  return out;
}

ReferenceSolution vlasov_reference(const VlasovParams& p, const GridTensor& u0,
                                   double t_final, double dt) {
  if (p.grid.dims != 2) model_error("Vlasov needs a two-dim grid");
  if (p.grid.points > 32) model_error("reference solver is desk-scale only");
  check_velocity_tails(p.grid, u0);

  const std::vector<double> wx = integration_weights(p.grid, 0);
  const std::vector<double> wv = integration_weights(p.grid, 1);
  const int g = p.grid.points;
  auto mass = [&](const std::vector<double>& interleaved, int s) {
    double acc = 0.0;
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j)
        acc += wx[static_cast<std::size_t>(i)] *
               wv[static_cast<std::size_t>(j)] *
               interleaved[static_cast<std::size_t>(2 * (i * g + j) + s)];
    return acc;
  };

  auto rhs = [&](const std::vector<double>& flat) {
    GridTensor state;
    state.level = 1;
    state.comp = 2;
    state.data = flat;
    return vlasov_direct_rhs(p, state).data;
  };
  IntegratorConfig cfg;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.sample_stride = 1;
  Trajectory traj = rk4_integrate(rhs, u0.data, cfg);

  ReferenceSolution ref;
  ref.t = t_final;
  ref.method = ReferenceMethod::DirectRk4;
  ref.samples.level = 1;
  ref.samples.comp = 2;
  ref.samples.data = traj.states.back();
  ref.mass_times = traj.times;
  ref.mass_history.assign(2, std::vector<double>());
  for (const std::vector<double>& state : traj.states)
    for (int s = 0; s < 2; ++s)
      ref.mass_history[static_cast<std::size_t>(s)].push_back(mass(state, s));
  return ref;
}

void check_velocity_tails(const GridSpec& grid, const GridTensor& u0) {
  const int g = grid.points;
  double worst = 0.0;
  for (int i = 0; i < g; ++i)
    for (int s = 0; s < u0.comp; ++s)
      for (int j : {0, g - 1})
        worst = std::max(
            worst, std::abs(u0.data[static_cast<std::size_t>(
                       u0.comp * (i * g + j) + s)]));
  if (worst >= 1e-12)
    model_error("initial data reaches " + std::to_string(worst) +
                " at the velocity boundary; the box truncation needs < 1e-12");
}

GridTensor sample_field(const GridSpec& grid, const ScalarField1D& f) {
  if (grid.dims != 1) model_error("sample_field needs a one-dim grid");
  GridTensor t = make_grid_tensor(1, 1, grid.cells());
  for (int a = 0; a < grid.points; ++a)
    t.data[static_cast<std::size_t>(a)] = f(grid.coord(0, a));
  return t;
}

ScalarField1D preset_linear() {
  return [](double x) { return x; };
}

ScalarField1D preset_const(double c) {
  return [c](double) { return c; };
}

ScalarField1D preset_sine(const GridSpec& grid, double amplitude,
                          double wavenumber) {
  const double lo = grid.lower[0];
  const double len = grid.upper[0] - grid.lower[0];
  return [=](double x) {
    return amplitude *
           std::sin(2.0 * std::numbers::pi * wavenumber * (x - lo) / len);
  };
}

ScalarField1D preset_gaussian(double center, double width) {
  return [=](double x) {
    const double z = (x - center) / width;
    return std::exp(-0.5 * z * z);
  };
}

namespace {

GridTensor fill_two_species(
    const GridSpec& grid,
    const std::function<double(double, double)>& f1,
    const std::function<double(double, double)>& f2) {
  const int g = grid.points;
  GridTensor t = make_grid_tensor(1, 2, 2 * grid.cells());
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const double x = grid.coord(0, i), v = grid.coord(1, j);
      t.data[static_cast<std::size_t>(2 * (i * g + j))] = f1(x, v);
      t.data[static_cast<std::size_t>(2 * (i * g + j) + 1)] = f2(x, v);
    }
  return t;
}

}  // namespace

GridTensor vlasov_two_stream(const GridSpec& grid, double v0, double spread) {
  if (grid.dims != 2) model_error("two-stream preset needs a two-dim grid");
  const double lo = grid.lower[0];
  const double len = grid.upper[0] - grid.lower[0];
  auto stream = [=](double x, double v, double center) {
    const double z = (v - center) / spread;
    const double mod =
        1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * (x - lo) / len);
    return mod * std::exp(-0.5 * z * z);
  };
  return fill_two_species(
      grid, [=](double x, double v) { return stream(x, v, v0); },
      [=](double x, double v) { return stream(x, v, -v0); });
}

GridTensor vlasov_equal_species(const GridSpec& grid, double spread) {
  if (grid.dims != 2) model_error("equal-species preset needs a two-dim grid");
  const double lo = grid.lower[0];
  const double len = grid.upper[0] - grid.lower[0];
  auto bump = [=](double x, double v) {
    const double z = v / spread;
    const double mod =
        1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * (x - lo) / len);
    return mod * std::exp(-0.5 * z * z);
  };
  return fill_two_species(grid, bump, bump);
}

}  // namespace carlin
