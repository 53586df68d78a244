#pragma once

#include <functional>
#include <vector>

#include "carlin/errors.hpp"
#include "carlin/pde_carleman.hpp"

namespace carlin {

/// Action of the lifted generator (or any linear map) on a flat state.
using LinearAction =
    std::function<std::vector<double>(const std::vector<double>&)>;

struct IntegratorConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  int taylor_order = 16;  // series terms per exponential substep
  int sample_stride = 1;  // keep every k-th step in the trajectory
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

/// Classic fourth-order Runge-Kutta for dz/dt = rhs(z). The final step is
/// shortened to land on t_final exactly. Throws NumericalAbort when the state
/// stops being finite.
Trajectory rk4_integrate(const LinearAction& rhs, const std::vector<double>& z0,
                         const IntegratorConfig& cfg);

/// z(t) = exp(tA) z0 + int_0^t exp(sA) ds b, via a truncated Taylor series of
/// the exponential over `substeps` uniform substeps. apply_a must be the
/// linear action of A alone; pass an empty b for a homogeneous system.
std::vector<double> expm_action(const LinearAction& apply_a,
                                const std::vector<double>& z0,
                                const std::vector<double>& b, double t,
                                int substeps, int taylor_order);

/// Exact exp(tA) z0 for a lifted generator with no bias and no linear part,
/// where A is strictly block upper triangular and the series terminates:
/// out_i = sum_{j >= i} t^{j-i}/(j-i)! A^i_{i+1} ... A^{j-1}_j z_j.
/// step_down(i, y) must apply the superdiagonal block taking level i+1 to
/// level i.
using StepDown =
    std::function<std::vector<double>(int, const std::vector<double>&)>;
std::vector<std::vector<double>> nilpotent_expm_apply(
    const StepDown& step_down, const std::vector<std::vector<double>>& z0,
    double t);

/// Grid-tensor convenience wrapper; the system must be purely quadratic.
std::vector<GridTensor> nilpotent_expm_apply(const PDEQuadraticSystem& sys,
                                             const std::vector<GridTensor>& z0,
                                             double t);

/// u(t) = u0 + sum_{j=2}^{levels} t^{j-1}/(j-1)! A^1_2 ... A^{j-1}_j u0^{x j}
/// for a purely quadratic system, evaluated without materializing any tensor
/// above level 2: every cascade keeps rank-1 sums of level-1 fields, and the
/// pairwise contractions are memoized.
GridTensor taylor_series_solution(const PDEQuadraticSystem& sys,
                                  const GridTensor& u0, int levels, double t);

}  // namespace carlin
