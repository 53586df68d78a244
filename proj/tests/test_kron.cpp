#include "carlin/kron.hpp"

#include <doctest.h>

#include <random>

#include "oracles.hpp"

using namespace carlin;
using namespace carlin::testing;

TEST_CASE("kron_vec matches the index formula") {
  const DenseVector a{2.0, -3.0};
  const DenseVector b{1.0, 0.5, 4.0};
  const DenseVector p = kron_vec(a, b);
  REQUIRE(p.size() == 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) CHECK(p[i * 3 + j] == a[i] * b[j]);
}

TEST_CASE("kron_vec is exactly associative on dyadic inputs") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const DenseVector a = random_vector(rng, 2, true);
    const DenseVector b = random_vector(rng, 3, true);
    const DenseVector c = random_vector(rng, 2, true);
    CHECK(kron_vec(kron_vec(a, b), c) == kron_vec(a, kron_vec(b, c)));
  }
}

TEST_CASE("kron_power edge cases") {
  const DenseVector u{2.0, -1.0};
  CHECK(kron_power(u, 0) == DenseVector{1.0});
  CHECK(kron_power(u, 1) == u);
  CHECK(kron_power(u, 2) == kron_vec(u, u));
  CHECK(kron_power(u, 3) == kron_vec(u, kron_vec(u, u)));
  CHECK(kron_power(DenseVector{3.0}, 4) == DenseVector{81.0});
}

TEST_CASE("lifted_apply matches the dense slot operator") {
  std::mt19937_64 rng(21);
  for (int n = 1; n <= 3; ++n)
    for (int level = 1; level <= 3; ++level)
      for (int j = 0; j <= 2; ++j)
        for (int slot = 1; slot <= level; ++slot) {
          DenseMatrix f(n, static_cast<int>(checked_pow(n, j)),
                        random_vector(rng, static_cast<std::size_t>(n) *
                                               checked_pow(n, j)));
          const DenseVector y =
              random_vector(rng, static_cast<std::size_t>(
                                     checked_pow(n, level + j - 1)));
          const DenseVector got = lifted_apply(f, {level, slot}, y);

          // The explicit operator I x ... x F x ... x I; for j != 1 it is
          // rectangular, with F consuming j adjacent slots.
          DenseMatrix op = dense_identity(1);
          for (int pos = 1; pos <= level; ++pos)
            op = dense_kron(op, pos == slot ? f : dense_identity(n));
          CHECK(max_abs_diff(got, dense_matvec(op, y)) == 0.0);
        }
}

TEST_CASE("lifted_apply is linear in the input") {
  std::mt19937_64 rng(31);
  const int n = 3;
  DenseMatrix f(n, n * n, random_vector(rng, 27));
  const DenseVector y1 = random_vector(rng, 27);
  const DenseVector y2 = random_vector(rng, 27);
  DenseVector sum(27);
  for (int k = 0; k < 27; ++k) sum[k] = y1[k] + 2.0 * y2[k];

  const DenseVector a = lifted_apply(f, {2, 1}, y1);
  const DenseVector b = lifted_apply(f, {2, 1}, y2);
  const DenseVector c = lifted_apply(f, {2, 1}, sum);
  for (int k = 0; k < 9; ++k)
    CHECK(c[k] == doctest::Approx(a[k] + 2.0 * b[k]).epsilon(1e-14));
}

TEST_CASE("square insertions at disjoint slots commute") {
  std::mt19937_64 rng(41);
  const int n = 2;
  DenseMatrix f(n, n, random_vector(rng, 4));
  DenseMatrix g(n, n, random_vector(rng, 4));
  const DenseVector y = random_vector(rng, 8);

  const DenseVector fg = lifted_apply(f, {3, 1}, lifted_apply(g, {3, 3}, y));
  const DenseVector gf = lifted_apply(g, {3, 3}, lifted_apply(f, {3, 1}, y));
  CHECK(max_abs_diff(fg, gf) <= 1e-15);
}

TEST_CASE("lifted_apply_add accumulates into the output") {
  std::mt19937_64 rng(51);
  const int n = 2;
  DenseMatrix f(n, n, random_vector(rng, 4));
  const DenseVector y = random_vector(rng, 4);
  DenseVector out(4, 1.0);
  lifted_apply_add(f, {2, 2}, y, out);
  const DenseVector once = lifted_apply(f, {2, 2}, y);
  for (int k = 0; k < 4; ++k) CHECK(out[k] == 1.0 + once[k]);
}

TEST_CASE("lifted_apply validates shapes") {
  DenseMatrix f(2, 2, {1.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_AS(lifted_apply(f, {2, 1}, DenseVector(5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(lifted_apply(f, {2, 3}, DenseVector(4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(lifted_apply(f, {2, 0}, DenseVector(4)),
                  std::invalid_argument);
  DenseMatrix bad(2, 3, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0});
  CHECK_THROWS_AS(lifted_apply(bad, {2, 1}, DenseVector(8)),
                  std::invalid_argument);
}
