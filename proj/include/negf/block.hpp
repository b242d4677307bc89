// Cluster-block storage of sparse symmetric systems.
//
// A ClusterBlockMatrix keeps dense blocks keyed by cluster pairs of a
// SeparatorTree.  Off-diagonal blocks exist only between ancestor-related
// clusters (the partition rule); a block absent from the map is an exact
// zero, and fill-in materializes blocks lazily during folding.
#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "negf/dense.hpp"
#include "negf/partition.hpp"
#include "negf/sparse.hpp"

namespace negf {

enum class BlockSymmetry { ComplexSymmetric, General, SkewHermitian };

class ClusterBlockMatrix {
 public:
  ClusterBlockMatrix(std::shared_ptr<const SeparatorTree> tree,
                     BlockSymmetry symmetry)
      : tree_(std::move(tree)), symmetry_(symmetry) {}

  const SeparatorTree& tree() const { return *tree_; }
  std::shared_ptr<const SeparatorTree> tree_ptr() const { return tree_; }
  BlockSymmetry symmetry() const { return symmetry_; }

  bool has(int i, int j) const { return blocks_.count({i, j}) != 0; }

  // Stored block (throws when absent — callers use has() or zero semantics).
  const CMatrix& block(int i, int j) const;

  // Mutable access; materializes a correctly shaped zero block when absent.
  CMatrix& block_mut(int i, int j);

  void set(int i, int j, CMatrix m);
  void erase(int i, int j) { blocks_.erase({i, j}); }

  // Keys in deterministic (row, col) order.
  std::vector<std::pair<int, int>> keys() const;

  std::size_t num_blocks() const { return blocks_.size(); }

  // Shape a block between clusters i and j would have.
  std::pair<int, int> block_shape(int i, int j) const;

 private:
  std::shared_ptr<const SeparatorTree> tree_;
  BlockSymmetry symmetry_;
  std::map<std::pair<int, int>, CMatrix> blocks_;
};

// Scatters the entries of `a` into cluster blocks.  Raises
// PartitionViolation (listing every offending edge) when an entry joins two
// clusters that are not ancestor-related.  Both orientations of each
// off-diagonal block are stored explicitly.
ClusterBlockMatrix group_by_partition(
    const SparseCoo& a, std::shared_ptr<const SeparatorTree> tree,
    BlockSymmetry symmetry = BlockSymmetry::ComplexSymmetric);

// Inverse of group_by_partition: emits the nonzero entries of all stored
// blocks in canonical order.
SparseCoo scatter(const ClusterBlockMatrix& m);

// Dense self-energy block attached to a contiguous dof set (a contact).
struct ContactBlock {
  std::vector<int> dofs;  // ascending global dof indices
  CMatrix sigma;          // |dofs| x |dofs|

  bool empty() const { return dofs.empty(); }
};

// A(E) = E*I - H - Sigma_L - Sigma_R - diag(sigma_phonon).
//
// `layers` is the device layer map; each contact's dof set must lie inside
// the first (left contact) or last (right contact) layer, otherwise
// ConfigError.  `sigma_phonon` holds one diagonal entry per dof (zero where
// no phonon broadening applies).  The result pattern is H's pattern plus the
// dense contact sub-blocks, in canonical order.
SparseCoo assemble_system(const SparseCoo& h, const ContactBlock& sigma_r_left,
                          const ContactBlock& sigma_r_right,
                          const std::vector<cplx>& sigma_phonon, double energy,
                          const std::vector<std::vector<int>>& layers);

// Per-block diagonal results of one energy point.  Block k holds the dofs in
// dof_sets[k] (a cluster or a layer, depending on the solver).
struct GreensDiagonal {
  double energy_eV = 0.0;
  int n_dofs = 0;
  std::vector<std::vector<int>> dof_sets;
  std::vector<CMatrix> gr_diag;
  std::vector<CMatrix> gless_diag;  // empty when only G^r was computed

  // Per-dof diagonal entries, in global dof order.
  std::vector<cplx> gr_dof_diagonal() const;
  std::vector<cplx> gless_dof_diagonal() const;
};

}  // namespace negf
