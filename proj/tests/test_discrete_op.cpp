#include "carlin/discrete_op.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"

using namespace carlin;
using namespace carlin::testing;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample1(const GridSpec& grid, double (*f)(double)) {
  std::vector<double> s(static_cast<std::size_t>(grid.points));
  for (int i = 0; i < grid.points; ++i) s[i] = f(grid.coord(0, i));
  return s;
}

}  // namespace

TEST_CASE("box finite differences are exact on quadratics") {
  const GridSpec grid = GridSpec::uniform(1, 9, 0.0, 2.0, Boundary::Box);
  std::vector<double> u = sample1(grid, [](double x) { return x * x; });

  std::vector<double> d1 = u;
  apply_one_copy(*op_deriv(grid, CopyTag::X, 0, 1), grid, d1);
  std::vector<double> d2 = u;
  apply_one_copy(*op_deriv(grid, CopyTag::X, 0, 2), grid, d2);

  for (int i = 0; i < grid.points; ++i) {
    CHECK(d1[i] == doctest::Approx(2.0 * grid.coord(0, i)).epsilon(1e-12));
    CHECK(d2[i] == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("periodic central differences converge at second order") {
  double prev_err = 0.0;
  for (int g : {16, 32, 64}) {
    const GridSpec grid =
        GridSpec::uniform(1, g, 0.0, 2.0 * kPi, Boundary::Periodic);
    std::vector<double> u = sample1(grid, [](double x) { return std::sin(x); });
    apply_one_copy(*op_deriv(grid, CopyTag::X, 0, 1), grid, u);
    double err = 0.0;
    for (int i = 0; i < g; ++i)
      err = std::max(err, std::abs(u[i] - std::cos(grid.coord(0, i))));
    if (prev_err > 0.0) {
      const double ratio = prev_err / err;
      CHECK(ratio > 3.5);
      CHECK(ratio < 4.5);
    }
    prev_err = err;
  }
}

TEST_CASE("spectral derivatives are exact on trigonometric modes") {
  const GridSpec grid =
      GridSpec::uniform(1, 16, 0.0, 2.0 * kPi, Boundary::Periodic);
  for (int k = 1; k <= 3; ++k) {
    std::vector<double> u(16), want1(16), want2(16), want3(16);
    for (int i = 0; i < 16; ++i) {
      const double x = grid.coord(0, i);
      u[i] = std::sin(k * x);
      want1[i] = k * std::cos(k * x);
      want2[i] = -k * k * std::sin(k * x);
      want3[i] = -k * k * k * std::cos(k * x);
    }
    std::vector<double> d1 = u, d2 = u, d3 = u;
    apply_one_copy(*op_deriv(grid, CopyTag::X, 0, 1, DerivScheme::Spectral),
                   grid, d1);
    apply_one_copy(*op_deriv(grid, CopyTag::X, 0, 2, DerivScheme::Spectral),
                   grid, d2);
    apply_one_copy(*op_deriv(grid, CopyTag::X, 0, 3, DerivScheme::Spectral),
                   grid, d3);
    CHECK(max_abs_diff(d1, want1) <= 1e-12);
    CHECK(max_abs_diff(d2, want2) <= 1e-11);
    CHECK(max_abs_diff(d3, want3) <= 1e-10);
  }
}

TEST_CASE("spectral derivatives on a nonuniform length rescale correctly") {
  const GridSpec grid = GridSpec::uniform(1, 20, 0.0, 1.0, Boundary::Periodic);
  std::vector<double> u(20), want(20);
  for (int i = 0; i < 20; ++i) {
    const double x = grid.coord(0, i);
    u[i] = std::cos(2.0 * kPi * x);
    want[i] = -2.0 * kPi * std::sin(2.0 * kPi * x);
  }
  apply_one_copy(*op_deriv(grid, CopyTag::X, 0, 1, DerivScheme::Spectral),
                 grid, u);
  CHECK(max_abs_diff(u, want) <= 1e-11);
}

TEST_CASE("operator construction rejects unusable grids") {
  const GridSpec tiny = GridSpec::uniform(1, 3, 0.0, 1.0, Boundary::Periodic);
  CHECK_THROWS_AS(op_deriv(tiny, CopyTag::X, 0, 1), std::invalid_argument);

  const GridSpec box = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Box);
  CHECK_THROWS_AS(op_deriv(box, CopyTag::X, 0, 1, DerivScheme::Spectral),
                  std::invalid_argument);

  const GridSpec ok = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Periodic);
  CHECK_THROWS_AS(op_deriv(ok, CopyTag::X, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(op_deriv(ok, CopyTag::X, 0, 0), std::invalid_argument);
}

TEST_CASE("coordinate multiplication acts on the named copy and dim") {
  const GridSpec grid(2, 5, {0.0, -1.0}, {1.0, 1.0},
                      {Boundary::Periodic, Boundary::Box});
  PairField f(grid, {1});
  const int g = grid.points;
  for (std::size_t k = 0; k < f.data.size(); ++k) f.data[k] = 1.0;

  PairField fx = f;
  apply_op(*op_coord(CopyTag::X, 1), fx);
  PairField fw = f;
  apply_op(*op_coord(CopyTag::W, 1), fw);

  for (int i0 = 0; i0 < g; ++i0)
    for (int i1 = 0; i1 < g; ++i1)
      for (int j1 = 0; j1 < g; ++j1) {
        const std::size_t at =
            static_cast<std::size_t>((i0 * g + i1) * g + j1);
        CHECK(fx.data[at] == grid.coord(1, i1));
        CHECK(fw.data[at] == grid.coord(1, j1));
      }
}

TEST_CASE("full integration matches the trapezoid weights") {
  const GridSpec grid(2, 6, {0.0, 0.0}, {1.0, 2.0},
                      {Boundary::Periodic, Boundary::Box});
  const int g = grid.points;
  PairField f(grid, {1});
  std::mt19937_64 rng(5);
  for (double& v : f.data) v = uniform(rng);
  const PairField orig = f;

  apply_op(*op_fullint(1), f);
  CHECK(f.wdims.empty());
  REQUIRE(static_cast<std::int64_t>(f.data.size()) == grid.cells());

  const std::vector<double> wts = integration_weights(grid, 1);
  for (int i0 = 0; i0 < g; ++i0)
    for (int i1 = 0; i1 < g; ++i1) {
      double want = 0.0;
      for (int j = 0; j < g; ++j)
        want += wts[j] * orig.data[static_cast<std::size_t>((i0 * g + i1) * g + j)];
      CHECK(f.data[static_cast<std::size_t>(i0 * g + i1)] ==
            doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("cumulative integration runs from the lower edge to the x point") {
  const GridSpec grid = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Box);
  const int g = grid.points;
  const double h = grid.spacing(0);
  PairField f(grid, {0});
  std::mt19937_64 rng(9);
  for (double& v : f.data) v = uniform(rng);
  const PairField orig = f;

  apply_op(*op_cumint(0), f);
  CHECK(f.wdims.empty());
  REQUIRE(static_cast<int>(f.data.size()) == g);

  for (int a = 0; a < g; ++a) {
    double want = 0.0;
    if (a > 0) {
      want = 0.5 * orig.data[static_cast<std::size_t>(a * g + 0)];
      for (int k = 1; k < a; ++k)
        want += orig.data[static_cast<std::size_t>(a * g + k)];
      want += 0.5 * orig.data[static_cast<std::size_t>(a * g + a)];
      want *= h;
    }
    CHECK(f.data[static_cast<std::size_t>(a)] ==
          doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(f.data[0] == 0.0);
}

TEST_CASE("restriction reads the diagonal against the named x dim") {
  const GridSpec grid = GridSpec::uniform(2, 4, 0.0, 1.0, Boundary::Periodic);
  const int g = grid.points;
  PairField f(grid, {1});
  for (std::size_t k = 0; k < f.data.size(); ++k)
    f.data[k] = static_cast<double>(k);
  const PairField orig = f;

  PairField r0 = f;
  apply_op(*op_restrict(1, 0), r0);
  PairField r1 = f;
  apply_op(*op_restrict(1, 1), r1);
  CHECK(r0.wdims.empty());

  for (int i0 = 0; i0 < g; ++i0)
    for (int i1 = 0; i1 < g; ++i1) {
      const std::size_t cell = static_cast<std::size_t>(i0 * g + i1);
      CHECK(r0.data[cell] ==
            orig.data[static_cast<std::size_t>((i0 * g + i1) * g + i0)]);
      CHECK(r1.data[cell] ==
            orig.data[static_cast<std::size_t>((i0 * g + i1) * g + i1)]);
    }
}

TEST_CASE("composition applies the rightmost factor first") {
  const GridSpec grid = GridSpec::uniform(1, 17, 0.0, 1.0, Boundary::Box);
  std::vector<double> u = sample1(grid, [](double x) { return x * x; });

  // x * d/dx (x^2) = 2 x^2 exactly; d/dx (x * x^2) = d/dx (x^3), whose
  // central difference is 3 x^2 + h^2 at interior points.
  std::vector<double> a = u;
  apply_one_copy(*op_compose({op_coord(CopyTag::X, 0),
                              op_deriv(grid, CopyTag::X, 0, 1)}),
                 grid, a);
  std::vector<double> b = u;
  apply_one_copy(*op_compose({op_deriv(grid, CopyTag::X, 0, 1),
                              op_coord(CopyTag::X, 0)}),
                 grid, b);

  const double h = grid.spacing(0);
  for (int i = 1; i + 1 < grid.points; ++i) {
    const double x = grid.coord(0, i);
    CHECK(a[i] == doctest::Approx(2.0 * x * x).epsilon(1e-11));
    CHECK(b[i] == doctest::Approx(3.0 * x * x + h * h).epsilon(1e-11));
  }
}

TEST_CASE("sums weight their branches") {
  const GridSpec grid = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Periodic);
  std::vector<double> u = sample1(grid, [](double x) { return x; });
  std::vector<double> got = u;
  apply_one_copy(*op_sum({2.0, -3.0}, {op_scale(1.0), op_scale(1.0)}), grid,
                 got);
  for (int i = 0; i < grid.points; ++i)
    CHECK(got[i] == doctest::Approx(-u[i]).epsilon(1e-15));

  CHECK_THROWS_AS(op_sum({1.0}, {op_scale(1.0), op_scale(1.0)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(op_compose({op_scale(1.0), nullptr}),
                  std::invalid_argument);
}

TEST_CASE("w-mask tracing accepts exact consumption and rejects misuse") {
  // int(w0) then cumint on the already-consumed dim must fail.
  const OpPtr good = op_compose({op_cumint(1), op_fullint(0)});
  CHECK(op_trace_wmask(*good, 0b11u, 2) == 0u);

  const OpPtr reuse = op_compose({op_cumint(0), op_fullint(0)});
  CHECK_THROWS_AS(op_trace_wmask(*reuse, 0b01u, 1), std::invalid_argument);

  CHECK_THROWS_AS(op_trace_wmask(*op_fullint(0), 0b0u, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(op_trace_wmask(*op_coord(CopyTag::W, 0), 0b0u, 1),
                  std::invalid_argument);

  const OpPtr disagree =
      op_sum({1.0, 1.0}, {op_fullint(0), op_scale(2.0)});
  CHECK_THROWS_AS(op_trace_wmask(*disagree, 0b01u, 1),
                  std::invalid_argument);

  const OpPtr agree =
      op_sum({1.0, 1.0}, {op_fullint(0), op_cumint(0)});
  CHECK(op_trace_wmask(*agree, 0b01u, 1) == 0u);
}

TEST_CASE("integration weights follow the boundary type") {
  const GridSpec per = GridSpec::uniform(1, 6, 0.0, 3.0, Boundary::Periodic);
  const std::vector<double> wp = integration_weights(per, 0);
  for (double w : wp) CHECK(w == doctest::Approx(0.5).epsilon(1e-15));

  const GridSpec box = GridSpec::uniform(1, 6, 0.0, 1.0, Boundary::Box);
  const std::vector<double> wb = integration_weights(box, 0);
  const double h = 1.0 / 5.0;
  CHECK(wb.front() == doctest::Approx(0.5 * h).epsilon(1e-15));
  CHECK(wb.back() == doctest::Approx(0.5 * h).epsilon(1e-15));
  for (int i = 1; i < 5; ++i)
    CHECK(wb[i] == doctest::Approx(h).epsilon(1e-15));

  double total = 0.0;
  for (double w : wb) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("allocation bookkeeping records the largest buffer") {
  alloc_stats::reset();
  CHECK(alloc_stats::max_elements() == 0);
  const GridSpec grid = GridSpec::uniform(1, 8, 0.0, 1.0, Boundary::Periodic);
  { PairField f(grid, {0}); }
  CHECK(alloc_stats::max_elements() == 64);
  { PairField f(grid, {}); }
  CHECK(alloc_stats::max_elements() == 64);
  alloc_stats::reset();
  CHECK(alloc_stats::max_elements() == 0);
}
