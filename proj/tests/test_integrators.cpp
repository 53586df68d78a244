#include "carlin/integrators.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

#include "carlin/models.hpp"
#include "carlin/ode_carleman.hpp"
#include "oracles.hpp"

using namespace carlin;
using namespace carlin::testing;

namespace {

LinearAction scalar_action(double a) {
  return [a](const std::vector<double>& z) {
    return std::vector<double>{a * z[0]};
  };
}

/// Flat linear action of the truncated lifted generator of an ODE system.
LinearAction lifted_action(const CarlemanOperator& op) {
  return [&op](const std::vector<double>& flat) {
    return op.flatten(apply_linear(op, op.unflatten(flat, 0.0)));
  };
}

BurgersParams inviscid(int g) {
  BurgersParams p;
  p.grid = GridSpec::uniform(1, g, 0.0, 1.0, Boundary::Box);
  return p;
}

}  // namespace

TEST_CASE("rk4 reproduces exponential decay to its design order") {
  const Trajectory tr = rk4_integrate(scalar_action(-1.0), {1.0}, {});
  CHECK(tr.states.back()[0] ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rk4 error shrinks sixteen-fold when the step halves") {
  auto run = [](double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.t_final = 2.0;
    const Trajectory tr = rk4_integrate(scalar_action(-1.3), {1.0}, cfg);
    return std::abs(tr.states.back()[0] - std::exp(-2.6));
  };
  const double e1 = run(0.1);
  const double e2 = run(0.05);
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("rk4 respects the sample stride and records the endpoints") {
  IntegratorConfig cfg;
  cfg.dt = 0.25;
  cfg.t_final = 1.0;
  cfg.sample_stride = 2;
  const Trajectory tr = rk4_integrate(scalar_action(0.0), {3.0}, cfg);
  REQUIRE(tr.times.size() == 3);
  CHECK(tr.times[0] == 0.0);
  CHECK(tr.times[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tr.times[2] == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& s : tr.states) CHECK(s[0] == 3.0);
}

TEST_CASE("rk4 aborts with the failing step index on blow-up") {
  const LinearAction square = [](const std::vector<double>& z) {
    return std::vector<double>{z[0] * z[0]};
  };
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_final = 2.0;
  try {
    rk4_integrate(square, {1.0}, cfg);
    FAIL("expected NumericalAbort");
  } catch (const NumericalAbort& e) {
    CHECK(e.step > 0);
  }
}

TEST_CASE("expm_action with a zero generator integrates the bias exactly") {
  const LinearAction zero = [](const std::vector<double>& z) {
    return std::vector<double>(z.size(), 0.0);
  };
  const std::vector<double> got =
      expm_action(zero, {2.0, -1.0}, {0.5, 4.0}, 3.0, 2, 8);
  CHECK(got[0] == doctest::Approx(2.0 + 3.0 * 0.5).epsilon(1e-14));
  CHECK(got[1] == doctest::Approx(-1.0 + 3.0 * 4.0).epsilon(1e-14));
}

TEST_CASE("expm_action matches the scalar exponential") {
  const std::vector<double> got =
      expm_action(scalar_action(-2.0), {1.0}, {}, 1.0, 1, 20);
  CHECK(got[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  // Inhomogeneous closed form: z(t) = e^{at} z0 + (e^{at} - 1)/a * b.
  const double a = 0.7, b = 1.9, t = 1.5;
  const std::vector<double> zi =
      expm_action(scalar_action(a), {0.3}, {b}, t, 4, 20);
  const double want = std::exp(a * t) * 0.3 + (std::exp(a * t) - 1.0) / a * b;
  CHECK(zi[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("expm_action substeps compose as a semigroup") {
  std::mt19937_64 rng(83);
  const QuadraticODESystem sys = random_ode_system(rng, 2);
  const CarlemanOperator op(sys, 3);
  const LinearAction act = lifted_action(op);
  const std::vector<double> z0 =
      op.flatten(lift_initial(random_vector(rng, 2), 3));

  const std::vector<double> whole = expm_action(act, z0, {}, 0.5, 4, 24);
  const std::vector<double> half = expm_action(act, z0, {}, 0.25, 2, 24);
  const std::vector<double> again = expm_action(act, half, {}, 0.25, 2, 24);
  CHECK(max_abs_diff(whole, again) <= 1e-10);
}

TEST_CASE("the terminating series matches the generic exponential") {
  // A purely quadratic system makes the lifted generator strictly upper
  // triangular, so exp(tA) z0 terminates after N - 1 applications.
  const QuadraticODESystem sys(1, DenseVector{0.0}, DenseMatrix(1, 1, {0.0}),
                               DenseMatrix(1, 1, {-1.0}));
  const int levels = 5;
  const CarlemanOperator op(sys, levels);
  const LiftedState z0 = lift_initial(DenseVector{0.4}, levels);

  const StepDown down = [&op](int level, const std::vector<double>& y) {
    return transfer_apply(op, level, 2, y);
  };
  const std::vector<std::vector<double>> nil =
      nilpotent_expm_apply(down, z0.blocks, 0.8);

  const std::vector<double> flat =
      expm_action(lifted_action(op), op.flatten(z0), {}, 0.8, 1, levels + 2);
  const LiftedState generic = op.unflatten(flat, 0.8);

  REQUIRE(nil.size() == static_cast<std::size_t>(levels));
  for (int i = 0; i < levels; ++i)
    CHECK(max_abs_diff(nil[static_cast<std::size_t>(i)],
                       generic.blocks[static_cast<std::size_t>(i)]) <= 1e-13);
}

TEST_CASE("two-level closed form of the terminating exponential") {
  std::mt19937_64 rng(89);
  const QuadraticODESystem sys(2, DenseVector(2, 0.0), DenseMatrix(2, 2),
                               DenseMatrix(2, 4, random_vector(rng, 8)));
  const CarlemanOperator op(sys, 2);
  const DenseVector u = random_vector(rng, 2);
  const LiftedState z0 = lift_initial(u, 2);

  const StepDown down = [&op](int level, const std::vector<double>& y) {
    return transfer_apply(op, level, 2, y);
  };
  const auto out = nilpotent_expm_apply(down, z0.blocks, 0.3);

  // out_1 = z_1 + t A^1_2 z_2, out_2 = z_2.
  const DenseVector a12 = transfer_apply(op, 1, 2, z0.blocks[1]);
  for (int k = 0; k < 2; ++k)
    CHECK(out[0][static_cast<std::size_t>(k)] ==
          doctest::Approx(u[static_cast<std::size_t>(k)] +
                          0.3 * a12[static_cast<std::size_t>(k)])
              .epsilon(1e-14));
  CHECK(max_abs_diff(out[1], z0.blocks[1]) == 0.0);
}

TEST_CASE("grid wrapper of the terminating exponential rejects bias and "
          "linear parts") {
  BurgersParams with_mu;
  with_mu.mu = 0.5;
  with_mu.grid = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Periodic);
  const PDEQuadraticSystem sys = burgers_system(with_mu);
  const GridTensor u0 = sample_field(with_mu.grid, preset_const(0.5));
  const std::vector<GridTensor> z0 = lift_initial_grid(sys, u0, 2);
  CHECK_THROWS_AS(nilpotent_expm_apply(sys, z0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(taylor_series_solution(sys, u0, 3, 0.1),
                  std::invalid_argument);
}

TEST_CASE("grid terminating exponential agrees with the generic one") {
  const PDEQuadraticSystem sys = burgers_system(inviscid(8));
  const GridTensor u0 =
      sample_field(sys.grid, [](double x) { return 0.25 + 0.5 * x * x; });
  const int levels = 4;
  const std::vector<GridTensor> z0 = lift_initial_grid(sys, u0, levels);

  const std::vector<GridTensor> nil = nilpotent_expm_apply(sys, z0, 0.2);

  const LinearAction act = [&](const std::vector<double>& flat) {
    return pde_flatten(pde_apply_linear(sys, levels,
                                        pde_unflatten(sys, levels, flat)));
  };
  const std::vector<double> flat =
      expm_action(act, pde_flatten(z0), {}, 0.2, 1, levels + 2);
  const std::vector<GridTensor> generic = pde_unflatten(sys, levels, flat);

  for (int i = 0; i < levels; ++i)
    CHECK(max_abs_diff(nil[static_cast<std::size_t>(i)].data,
                       generic[static_cast<std::size_t>(i)].data) <= 1e-13);
}

TEST_CASE("series solution at t = 0 returns the initial data") {
  const PDEQuadraticSystem sys = burgers_system(inviscid(8));
  const GridTensor u0 = sample_field(sys.grid, preset_gaussian(0.5, 0.2));
  const GridTensor got = taylor_series_solution(sys, u0, 6, 0.0);
  CHECK(max_abs_diff(got.data, u0.data) == 0.0);
}

TEST_CASE("series solution keeps constants stationary") {
  BurgersParams p;
  p.grid = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Periodic);
  const PDEQuadraticSystem sys = burgers_system(p);
  const GridTensor u0 = sample_field(p.grid, preset_const(0.7));
  const GridTensor got = taylor_series_solution(sys, u0, 8, 0.9);
  for (double v : got.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("series solution reproduces the rarefaction partial sums") {
  // With u0(x) = x the exact solution is x/(1+t) and every series term is
  // (-t)^{j-1} x, so the truncated sum is x times a geometric partial sum.
  const PDEQuadraticSystem sys = burgers_system(inviscid(9));
  const GridTensor u0 = sample_field(sys.grid, preset_linear());
  const double t = 0.25;
  for (int levels : {2, 4, 6}) {
    const GridTensor got = taylor_series_solution(sys, u0, levels, t);
    for (int i = 0; i < sys.grid.points; ++i) {
      double partial = 0.0, pw = 1.0;
      for (int j = 0; j < levels; ++j) {
        partial += pw;
        pw *= -t;
      }
      const double x = sys.grid.coord(0, i);
      CHECK(got.data[static_cast<std::size_t>(i)] ==
            doctest::Approx(x * partial).epsilon(1e-12));
    }
  }
}

TEST_CASE("series solution stays within level-two storage") {
  const PDEQuadraticSystem sys = burgers_system(inviscid(16));
  const GridTensor u0 =
      sample_field(sys.grid, [](double x) { return 0.3 * x * (1.0 - x); });
  const std::int64_t q = sys.per_copy();

  alloc_stats::reset();
  taylor_series_solution(sys, u0, 10, 0.4);
  CHECK(alloc_stats::max_elements() <= static_cast<std::size_t>(q * q));
}
