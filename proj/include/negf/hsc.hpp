// Hierarchical selected-inversion solver on a nested-dissection partition.
//
// Three phases over the cluster tree:
//   fold    - eliminate clusters bottom-up, storing per-cluster elimination
//             maps Psi_{i,j} = -(A_ii)^-1 A_{i,j} and the block inverses, and
//             accumulating Schur updates A_{j,k} += Psi_{i,j}^T A_{i,k} on
//             ancestor pairs (one evaluation per unordered pair, the mirror
//             block is its transpose);
//   extract - walk the tree top-down and rebuild the rows of G over each
//             cluster's ancestor set, G_{i,j} = sum_k Psi_{i,k} G_{k,j},
//             G_{i,i} = (A_ii)^-1 + sum_j Psi_{i,j} G_{j,i};
//   lesser  - seed N_{i,j} = Sigma^<_ii conj(G_{i,j}), fold N bottom-up with
//             N_{j,k} += Psi_{i,j}^T N_{i,k}, seed P = diag((A_ii)^-1) N, and
//             extract P top-down with P_{i,j} += sum_k Psi_{i,k} P_{k,j},
//             P_{j,i} = -(P_{i,j})^dagger; the diagonal blocks of P are the
//             diagonal blocks of G^<.
//
// Two execution modes share the same arithmetic:
//   * the default lean mode walks the tree depth-first, stores each row only
//     over its ancestor columns, skips mirror blocks (recovered by symmetry
//     on lookup) and frees rows once their subtree is finished;
//   * the full-pattern mode replays the textbook level-by-level schedule,
//     stores every block including mirrors and lower fills, and can record
//     dense snapshots of every intermediate level (used by the fixture
//     tests).  Diagonal results are identical in both modes.
#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "negf/block.hpp"
#include "negf/dense.hpp"
#include "negf/partition.hpp"

namespace negf {

// Dense snapshots of the intermediate matrices, one per level.
//   a_levels[l] = A after folding all clusters of level <= l  (l = 0..L-1)
//   g_levels[l] = G after extracting all clusters of level > l (g_levels[L-1]
//                 is the block-diagonal start, g_levels[0] the final state)
//   n_levels[l] / p_levels[l] mirror a_levels / g_levels for the lesser pass.
struct HscTrace {
  std::vector<CMatrix> a_levels;
  std::vector<CMatrix> g_levels;
  std::vector<CMatrix> n_levels;
  std::vector<CMatrix> p_levels;
};

struct HscFactorization {
  std::shared_ptr<const SeparatorTree> tree;
  // psi[i] = (ancestor id j, Psi_{i,j}) for the ancestors j that carried a
  // nonzero (original or filled) block A_{i,j} at fold time, nearest
  // ancestor first.  Absent ancestors have Psi_{i,j} = 0.
  std::vector<std::vector<std::pair<int, CMatrix>>> psi;
  // inv_diag[i] = (A_ii)^-1 at elimination time (root: of the fully folded
  // root block).
  std::vector<CMatrix> inv_diag;
};

// Folds the system bottom-up (ascending level, ascending id within each
// level) and inverts the root block.  Consumes `a`.  When `trace` is given
// the full mirrored fill pattern is kept and per-level snapshots recorded;
// the returned factorization and the ledger are identical either way.
HscFactorization hsc_fold(ClusterBlockMatrix a, FlopLedger& ledger,
                          HscTrace* trace = nullptr);

// Diagonal blocks of G^r = A^{-1}, indexed by cluster id.
// trace == nullptr runs the lean depth-first mode; otherwise the full
// level-order replay with snapshot capture.
std::vector<CMatrix> hsc_gr(const HscFactorization& fact, FlopLedger& ledger,
                            HscTrace* trace = nullptr);

struct HscGlessResult {
  std::vector<CMatrix> gr_diag;     // per cluster id
  std::vector<CMatrix> gless_diag;  // per cluster id
};

// Diagonal blocks of G^r and of G^< = G^r Sigma^< (G^r)^dagger.
// `sigma_lesser` must live on the same tree and hold only diagonal blocks,
// each skew-Hermitian (NonSkewHermitianInput otherwise).  The G^r extraction
// runs as part of this call (the lesser seeds consume rows of G while they
// are alive).
HscGlessResult hsc_gless(const HscFactorization& fact,
                         const ClusterBlockMatrix& sigma_lesser,
                         FlopLedger& ledger, HscTrace* trace = nullptr);

}  // namespace negf
