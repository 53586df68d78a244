#pragma once

#include <random>
#include <vector>

#include "carlin/models.hpp"
#include "carlin/ode_carleman.hpp"
#include "carlin/opdsl.hpp"
#include "carlin/pde_carleman.hpp"

namespace carlin::testing {

/// Uniform double in [lo, hi) from the top 53 bits, identical on every
/// platform for a given seed.
double uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

/// Dyadic rational k/16 with k in [-64, 64]; products of a few of these are
/// exact in double precision, so Kronecker identities can be tested with ==.
double dyadic(std::mt19937_64& rng);

DenseVector random_vector(std::mt19937_64& rng, std::size_t len,
                          bool dyadic_values = false);

QuadraticODESystem random_ode_system(std::mt19937_64& rng, int n);

double max_abs(const std::vector<double>& v);
double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

DenseMatrix dense_identity(int n);
DenseMatrix dense_kron(const DenseMatrix& a, const DenseMatrix& b);
DenseVector dense_matvec(const DenseMatrix& m, const DenseVector& v);

/// Explicitly assembled I x ... x F x ... x I with identities of size n.
DenseMatrix dense_lifted(const DenseMatrix& f, int n, int level, int slot);

/// Explicitly assembled transfer block: sum of dense_lifted over slots.
DenseMatrix dense_transfer(const CarlemanOperator& op, int level, int j);

/// Product-rule derivative of u^{x i} along the degree-j term of the ODE:
/// sum over slots nu of u^{x (nu-1)} x (F_j u^{x j}) x u^{x (i-nu)}.
DenseVector ode_leibniz_rhs(const QuadraticODESystem& sys, int j, int level,
                            const DenseVector& u);

/// Grid analogue, built from plain Kronecker products of the level-1 image.
GridTensor grid_leibniz_rhs(const PDEQuadraticSystem& sys, int j, int level,
                            const GridTensor& u);

/// Fully explicit two-species coupling: the field by raw trapezoid loops,
/// then c_s d/dv(u_s * field) by raw difference stencils. No shared code with
/// the operator pipeline.
GridTensor vlasov_coupling_oracle(double c1, double c2, const GridSpec& grid,
                                  const GridTensor& u);

/// Streaming term -v du/dx by raw stencils (periodic dim 0).
GridTensor vlasov_streaming_oracle(const GridSpec& grid, const GridTensor& u);

/// Random grammar-valid expression for the parser round-trip property.
DslPtr random_dsl_expr(std::mt19937_64& rng, int depth = 0);

/// Scalar RK4 for du/dt = f(u), the convergence-study reference.
double scalar_rk4(double u0, double t_final, double dt,
                  double (*f)(double));

}  // namespace carlin::testing
