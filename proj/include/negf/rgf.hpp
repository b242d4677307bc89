// Recursive Green's function solver for block-tridiagonal systems.
//
// Works on a layered view of A(E): diagonal blocks A_ii plus upper couplings
// B_i = A_{i,i+1}; the lower couplings are B_i^T because A is complex
// symmetric.  A forward sweep builds left-connected resolvents g_i, a
// backward sweep turns them into exact diagonal blocks of G^r and G^<.
// Couplings are tagged by structure so the operation ledger only charges
// work the structure actually requires.
#pragma once

#include <vector>

#include "negf/dense.hpp"
#include "negf/sparse.hpp"

namespace negf {

enum class CouplingKind { ScaledIdentity, Diagonal, Dense };

struct LayerCoupling {
  CouplingKind kind = CouplingKind::Dense;
  cplx alpha{0.0, 0.0};    // ScaledIdentity: B = alpha * I
  std::vector<cplx> diag;  // Diagonal: B = diag(diag)
  CMatrix dense;           // Dense: explicit block
  int rows = 0;
  int cols = 0;

  // Explicit dense form (tests and generic paths).
  CMatrix materialize() const;
};

struct LayeredSystem {
  std::vector<std::vector<int>> layers;  // ascending global dofs per layer
  std::vector<CMatrix> diag;             // A_ii
  std::vector<LayerCoupling> coupling;   // B_i = A_{i,i+1}, size L-1
  std::vector<CMatrix> sigma_lesser;     // per-layer blocks; 0x0 means zero
  int n_dofs = 0;

  int num_layers() const { return static_cast<int>(diag.size()); }
};

// Splits a complex-symmetric block-tridiagonal matrix into layers.  Raises
// PartitionViolation (with the offending entries) when an entry couples
// non-adjacent layers, ContractViolation when the lower couplings are not
// the exact transposes of the upper ones.
LayeredSystem layered_from_coo(const SparseCoo& a,
                               const std::vector<std::vector<int>>& layers);

// Attaches per-layer lesser self-energy blocks taken from a COO matrix that
// must be block diagonal with respect to the layer map.
void attach_sigma_lesser(LayeredSystem& sys, const SparseCoo& sigma_lesser);

struct RgfGrOptions {
  bool keep_offdiag = false;  // also return the subdiagonal blocks G_{i+1,i}
};

struct RgfGrResult {
  std::vector<CMatrix> g;         // left-connected g_i (kept for the < pass)
  std::vector<CMatrix> gr_diag;   // G_ii
  std::vector<CMatrix> gr_lower;  // G_{i+1,i}, only when keep_offdiag
  std::vector<CMatrix> xcoef;     // -G_{i+1,i}^T B_i^T, reused by the < pass
  std::vector<CMatrix> gb;        // g_i B_i, cached for dense couplings
};

// Diagonal (and optionally first subdiagonal) blocks of G^r = A^{-1}.
RgfGrResult rgf_gr(const LayeredSystem& sys, const RgfGrOptions& opt,
                   FlopLedger& ledger);

// Diagonal blocks of G^< = G^r Sigma^< (G^r)^dagger, using the sweep state
// of a prior rgf_gr on the same system.  Each returned block is
// skew-Hermitian.  Raises NonSkewHermitianInput when a stored Sigma^< block
// is not skew-Hermitian.
std::vector<CMatrix> rgf_gless(const LayeredSystem& sys,
                               const RgfGrResult& gr_result,
                               FlopLedger& ledger);

}  // namespace negf
