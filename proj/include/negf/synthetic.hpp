// Seeded synthetic systems on five-point grids: complex-symmetric
// Hamiltonians with dense contact self-energy blocks and skew-Hermitian
// lesser self-energies.  Used for oracle fuzzing and for the operation-count
// benchmarks, where they decouple solver behavior from device physics.
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "negf/block.hpp"
#include "negf/sparse.hpp"

namespace negf {

// Canonical uniform draw in [0, 1): the top 53 bits of one 64-bit output.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct SyntheticSpec {
  int nx = 8;  // dofs per layer (grid width)
  int ny = 8;  // layers (grid height, transport direction)
  std::uint64_t seed = 1;
  // Inter/intra-layer coupling strength of the regular variant; every
  // inter-layer block is exactly -t * I.
  double coupling_t = 1.0;
  // Fuzz variant: random complex within-layer bonds, inter-layer blocks of
  // varying structure (scaled-identity / diagonal / dense), an imaginary
  // diagonal part on H, and an interior diagonal lesser self-energy.
  bool fuzz = false;
};

struct SyntheticSystem {
  SparseCoo h;  // complex symmetric
  std::vector<std::vector<int>> layers;
  std::vector<std::array<double, 2>> coords;
  Graph graph;  // pattern of the assembled system, contact blocks included
  ContactBlock sigma_r_left;
  ContactBlock sigma_r_right;
  std::vector<cplx> sigma_r_phonon;  // zeros; the grid carries no phonon term
  SparseCoo sigma_lesser;            // exactly skew-Hermitian

  // A(E) = E*I - H - Sigma_L - Sigma_R.
  SparseCoo system_matrix(double energy) const;
};

// Deterministic for a fixed spec: one generator seeded with spec.seed, drawn
// in a fixed documented order (diagonal, within-layer bonds, inter-layer
// blocks, contact retarded blocks, lesser blocks).
SyntheticSystem make_synthetic_system(const SyntheticSpec& spec);

}  // namespace negf
