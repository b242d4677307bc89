// Device builders: Hamiltonians, contact self-energies, lesser self-energies.
//
// Two experiment families: a 2D effective-mass superlattice discretized with
// a five-point stencil, and an armchair graphene nanoribbon in the four-atom
// layer slicing.  Both produce real complex-symmetric Hamiltonians that are
// block tridiagonal on their layer maps.
#pragma once

#include <array>
#include <vector>

#include "negf/block.hpp"
#include "negf/dense.hpp"
#include "negf/sparse.hpp"

namespace negf {

inline constexpr double kBoltzmannEvPerK = 8.617333262e-5;
// hbar^2 / (2 m0) in eV nm^2.
inline constexpr double kHbar2Over2m0 = 0.0380998;

struct SuperlatticeSpec {
  int nx = 50;
  int ny = 200;
  double dx_nm = 0.1;
  double dy_nm = 0.1;
  int n_barriers = 8;
  double barrier_width_nm = 1.0;
  double well_width_nm = 1.0;
  double barrier_height_ev = 0.4;
  double left_flat_nm = 2.0;
  double right_flat_nm = 3.0;
  double m_eff = 0.067;  // units of the free-electron mass
  double fermi_energy_ev = 0.140;
  double temperature_k = 300.0;
  std::vector<double> energy_grid_ev;

  // Hopping t = hbar^2 / (2 m* dx^2).
  double hopping_ev() const;
};

struct GrapheneSpec {
  int nx = 8;   // atoms across the ribbon
  int ny = 16;  // atom layers along transport (a whole number of 4-layer rows)
  double onsite_ev = 0.0;
  double hopping_ev = -3.1;
  double fermi_energy_ev = 0.0;
  std::vector<double> energy_points_ev{0.5};
};

struct DeviceSystem {
  SparseCoo h;  // Hamiltonian, eV
  Graph graph;  // adjacency of the Hamiltonian pattern
  std::vector<std::vector<int>> layers;
  std::vector<std::array<double, 2>> coords;  // per-dof (x, y) grid position
};

// Five-point-stencil superlattice: H_jj = 4t + V(y_j), nearest neighbors -t,
// barriers stacked along y (left flat, alternating barrier/well, right
// flat), potential uniform in x.  Layer j holds the dofs of grid row j.
DeviceSystem build_superlattice_hamiltonian(const SuperlatticeSpec& spec);

// Per-row potential profile of the superlattice (size ny, eV).
std::vector<double> superlattice_potential(const SuperlatticeSpec& spec);

// Armchair nanoribbon: Ny atom layers of Nx atoms; layer types cycle
// diagonal / lower-bidiagonal / diagonal / upper-bidiagonal couplings, so
// every atom bonds to at most three neighbors and the layer map is block
// tridiagonal.
DeviceSystem build_graphene_hamiltonian(const GrapheneSpec& spec);

// Retarded surface self-energy of a semi-infinite periodic lead:
//   Sigma^r(E) = H01^dagger g_s H01,
//   g_s = ((E + i eta) I - H00 - H01^dagger g_s H01)^-1,
// solved by decimation (energy-doubling); ConvergenceError when the
// fixed-point residual has not reached 1e-10 within 200 sweeps.  The result
// is symmetrized to be exactly complex symmetric.
CMatrix surface_self_energy(const CMatrix& h00, const CMatrix& h01,
                            double energy_ev, double eta_ev);

// Fermi-Dirac occupation.
double fermi_function(double energy_ev, double mu_ev, double temperature_k);

struct SelfEnergySet {
  ContactBlock sigma_r_left;
  ContactBlock sigma_r_right;
  std::vector<cplx> sigma_r_phonon;  // diagonal, one entry per dof
  SparseCoo sigma_lesser;            // block diagonal, exactly skew-Hermitian
  double mu_left = 0.0;
  double mu_right = 0.0;
  double temperature_k = 300.0;
};

enum class ContactModel { Diagonal, DenseLead };

// Retarded contact blocks for a device: either the broadening-only model
// Sigma = -i eta I on the boundary layers, or the decimated surface
// self-energy of a lead that repeats the boundary layer periodically with
// the device's own inter-layer coupling.
void attach_contacts(const DeviceSystem& dev, ContactModel model,
                     double energy_ev, double eta_ev, SelfEnergySet& out);

// Diagonal phonon self-energy -i eta_ph on every interior dof (zero on the
// two boundary layers).
std::vector<cplx> phonon_self_energy(const DeviceSystem& dev, double eta_ph_ev);

// Sigma^< from the retarded parts:
//   contacts: Sigma^<_c = -f(E, mu_c, T) (Sigma^r_c - (Sigma^r_c)^dagger),
//   phonon:   Sigma^<_jj = -f(E, mu_ph, T) (sigma_jj - conj(sigma_jj)) with
//             mu_ph = (mu_left + mu_right) / 2.
// The result is exactly skew-Hermitian by construction.
SparseCoo lesser_self_energy(const ContactBlock& sigma_r_left,
                             const ContactBlock& sigma_r_right,
                             const std::vector<cplx>& sigma_r_phonon,
                             int n_dofs, double energy_ev, double mu_left,
                             double mu_right, double temperature_k);

}  // namespace negf
