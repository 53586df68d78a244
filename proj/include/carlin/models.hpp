#pragma once

#include <functional>
#include <vector>

#include "carlin/integrators.hpp"
#include "carlin/pde_carleman.hpp"

namespace carlin {

/// The two equivalent quadratic forms of the Burgers nonlinearity: the
/// derivative can act on the x copy or on the w copy before the diagonal
/// restriction; both contract to -u u' on symmetric lifted data.
enum class BurgersF2Form { DDx, DDw };

struct BurgersParams {
  double mu = 0.0;  // viscosity, >= 0
  GridSpec grid;    // one dim, one component
  DerivScheme scheme = DerivScheme::Central2;
  BurgersF2Form f2_form = BurgersF2Form::DDx;
};

/// du/dt = mu u_xx - u u_x as a one-component quadratic system. mu = 0 leaves
/// the linear part empty, making the lifted generator strictly upper
/// triangular.
PDEQuadraticSystem burgers_system(const BurgersParams& p);

struct VlasovParams {
  double c1 = 1.0;  // species coupling constants
  double c2 = 1.0;
  GridSpec grid;  // two dims: dim 0 position, dim 1 velocity; two species
};

/// Two-species phase-space system: streaming -v d/dx per species plus the
/// quadratic field coupling c_s d/dv of the species density times the
/// cumulative-in-x integral of the velocity-integrated charge (u2 - u1).
PDEQuadraticSystem vlasov_system(const VlasovParams& p);

enum class ReferenceMethod { Characteristics, PseudoSpectral, DirectRk4 };

struct ReferenceSolution {
  GridTensor samples;  // level 1
  double t = 0.0;
  ReferenceMethod method = ReferenceMethod::Characteristics;
  std::vector<double> mass_times;                 // direct-rk4 runs only
  std::vector<std::vector<double>> mass_history;  // one row per species
};

using ScalarField1D = std::function<double(double)>;

/// Independent nonlinear Burgers solve: method of characteristics for mu = 0
/// (per-point solve of x = x0 + u0(x0) t to residual <= 1e-12, refused past
/// the wave-breaking time), pseudo-spectral RK4 for mu > 0 (periodic grids,
/// dt capped at h^2/(4 mu)).
ReferenceSolution burgers_reference(const BurgersParams& p,
                                    const ScalarField1D& u0, double t_final);

/// Direct nonlinear RK4 of the two-species system on the grid, recording the
/// per-species total mass at every step. u0 is an interleaved two-component
/// level-1 tensor.
ReferenceSolution vlasov_reference(const VlasovParams& p, const GridTensor& u0,
                                   double t_final, double dt = 1e-3);

/// The nonlinear right-hand side the direct solver integrates, exposed for
/// consistency checks against the Carleman block-1 RHS.
GridTensor vlasov_direct_rhs(const VlasovParams& p, const GridTensor& u);

/// Burgers analogue: mu D2 u - u (D1 u) on the grid.
GridTensor burgers_direct_rhs(const BurgersParams& p, const GridTensor& u);

/// Velocity integrals are truncated to the grid box, so initial data must be
/// negligible at the velocity boundary. Throws when either species exceeds
/// 1e-12 there.
void check_velocity_tails(const GridSpec& grid, const GridTensor& u0);

/// Samples a scalar field on a one-dim grid as a level-1 tensor.
GridTensor sample_field(const GridSpec& grid, const ScalarField1D& f);

ScalarField1D preset_linear();
ScalarField1D preset_const(double c);
/// amplitude * sin(2 pi k (x - lower) / length) over the grid's dim-0 extent.
ScalarField1D preset_sine(const GridSpec& grid, double amplitude,
                          double wavenumber);
ScalarField1D preset_gaussian(double center, double width);

/// Counter-propagating velocity bumps, species 1 centered at +v0 and species
/// 2 at -v0, weakly modulated in x. Interleaved two-component level-1 tensor.
GridTensor vlasov_two_stream(const GridSpec& grid, double v0, double spread);

/// Single stationary bump, identical species; the field coupling vanishes.
GridTensor vlasov_equal_species(const GridSpec& grid, double spread);

}  // namespace carlin
