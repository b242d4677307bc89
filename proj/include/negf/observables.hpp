// Physical observables from Green's function diagonals: local density of
// states, energy-integrated electron density maps, and per-layer line
// densities.
#pragma once

#include <vector>

#include "negf/dense.hpp"

namespace negf {

// Energy quadrature grid.  Weights are trapezoid weights, so they are
// positive and sum to E_max - E_min; a single-point grid gets weight 1 so
// one-energy "integrals" are just the integrand.
struct EnergyGrid {
  std::vector<double> energies_ev;
  std::vector<double> weights;
};

// Validates strict monotonicity and builds the trapezoid weights.
EnergyGrid make_energy_grid(const std::vector<double>& energies_ev);

// count >= 2: uniformly spaced between emin and emax (inclusive);
// count == 1 requires emin == emax.
EnergyGrid uniform_energy_grid(double emin_ev, double emax_ev, int count);

// LDOS_j = -Im(G^r_jj) / pi.
std::vector<double> ldos(const std::vector<cplx>& gr_diag);

// Per-dof density on a grid of nx columns and ny rows (dof = y*nx + x).
struct DensityMap {
  std::vector<double> value;
  int nx = 0;
  int ny = 0;
  // Diagnostic: largest relative real part seen on any G^< diagonal entry
  // (the diagonal of a skew-Hermitian matrix is purely imaginary).
  double max_real_residual = 0.0;
};

// n_j = (1/2pi) sum_k w_k Re(-i G^<_jj(E_k)).  One gless vector per grid
// energy, each of length nx*ny.  Raises ResidualTooLarge when any diagonal
// entry has a relative real part above 1e-8.
DensityMap electron_density(const std::vector<std::vector<cplx>>& gless_diag,
                            const EnergyGrid& grid, int nx, int ny);

// result[y] = sum over x of map value at (x, y).
std::vector<double> line_density_y(const DensityMap& map);

}  // namespace negf
