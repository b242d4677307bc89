// Multilevel separator trees.
//
// A SeparatorTree partitions the dof set 0..n-1 into clusters arranged in an
// elimination hierarchy: level-1 clusters are leaves, the single level-L
// cluster is the root, and every non-root cluster has one parent strictly
// higher up.  The ancestor chain P_i of cluster i is the set the solvers fold
// into and extract from.  Partition rule: an edge of the system graph may
// only join two dofs whose clusters are identical or ancestor-related.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "negf/sparse.hpp"

namespace negf {

class SeparatorTree {
 public:
  struct Cluster {
    int id = -1;
    int level = 0;            // 1 = leaf layer, L = root
    int parent = -1;          // -1 for the root
    std::vector<int> dofs;    // ascending global dof indices
  };

  // Builds a tree from clusters whose parent links are set; levels are
  // derived (leaf = 1, internal = 1 + max over children), dof lists are
  // sorted, and the structural invariants are checked.
  static SeparatorTree build(std::vector<Cluster> clusters, int n_dofs);

  int num_clusters() const { return static_cast<int>(clusters_.size()); }
  int num_dofs() const { return n_dofs_; }
  int levels() const { return levels_; }
  int root() const { return root_; }

  const Cluster& cluster(int id) const { return clusters_[id]; }
  const std::vector<int>& children(int id) const { return children_[id]; }

  // Ancestor chain P_i, nearest ancestor first, ending at the root.
  const std::vector<int>& ancestors(int id) const { return ancestors_[id]; }

  int dof_cluster(int dof) const { return dof_cluster_[dof]; }

  // Position of a global dof inside its cluster's sorted dof list.
  int local_index(int cluster_id, int dof) const;

  // True when `anc` lies on the ancestor chain of `node` (strict).
  bool is_ancestor(int anc, int node) const;

  // Non-root clusters ordered by (level ascending, id ascending): the order
  // in which the fold pass eliminates clusters.
  const std::vector<int>& fold_order() const { return fold_order_; }

  // JSON text dump (levels, clusters with id/level/parent/dofs).
  std::string to_json() const;

 private:
  std::vector<Cluster> clusters_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> ancestors_;
  std::vector<int> dof_cluster_;
  std::vector<int> fold_order_;
  int n_dofs_ = 0;
  int levels_ = 0;
  int root_ = -1;
};

// Recursive bisection nested dissection.
//
//   graph        connectivity of the dofs (disconnected inputs are handled by
//                an artificial empty root separator),
//   atomic_groups dof sets that must never be split across clusters (dense
//                contact blocks); pairwise disjoint,
//   max_leaf     recursion stops when a region holds at most this many dofs
//                (an atomic group may force a larger leaf),
//   coords       optional per-dof 2-D coordinates guiding the bisection; when
//                absent, breadth-first levelization provides a 1-D surrogate.
//
// The separator of each split is the boundary layer of the lighter half:
// every vertex of that half adjacent to the other half.  Removing it
// disconnects the two children by construction.
SeparatorTree nested_dissection(
    const Graph& graph, const std::vector<std::vector<int>>& atomic_groups,
    int max_leaf,
    const std::vector<std::array<double, 2>>& coords = {});

// The degenerate partition that reproduces the layered (RGF) elimination
// order: each layer is one cluster and each layer's parent is the next one.
SeparatorTree rgf_chain_partition(const std::vector<std::vector<int>>& layers,
                                  int n_dofs);

// Diagnostic check of the partition rule plus size statistics.
struct PartitionReport {
  // Edges joining two clusters that are not ancestor-related:
  // {dof u, dof v, cluster of u, cluster of v}.  Empty for a valid tree.
  std::vector<std::array<int, 4>> violations;
  std::vector<int> leaf_sizes;       // dof counts of leaf clusters
  std::vector<int> separator_sizes;  // dof counts of internal clusters
  int levels = 0;
  int num_clusters = 0;

  bool valid() const { return violations.empty(); }
  std::string summary() const;
};

PartitionReport validate_partition(const SeparatorTree& tree,
                                   const Graph& graph);

}  // namespace negf
