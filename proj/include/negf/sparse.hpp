// Coordinate-format sparse matrix and the undirected graph view used by the
// partitioner.  Only the access patterns the solvers need — this is not a
// general sparse-arithmetic library.
#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "negf/dense.hpp"

namespace negf {

// Sparse n x n matrix as (row, col, value) triples.  The stored pattern is
// structurally symmetric: entry (i, j) is present iff (j, i) is present.
struct SparseCoo {
  struct Entry {
    int row = 0;
    int col = 0;
    cplx val;
  };

  int n = 0;
  std::vector<Entry> entries;

  void add(int row, int col, cplx val) { entries.push_back({row, col, val}); }
};

// Sums duplicate coordinates and orders entries by (row, col); gives every
// matrix a unique canonical form, which the regression fixtures rely on.
void coo_normalize(SparseCoo& a);

// True when every (i, j) has a matching (j, i) in the pattern.
bool coo_pattern_symmetric(const SparseCoo& a);

// Text dump: one header line "n n nnz", then one "row col re im" line per
// entry, 0-based, in canonical order.  For debugging fixtures.
void coo_dump(const SparseCoo& a, std::ostream& os);

// Undirected simple graph on n vertices; the connectivity view of a matrix
// pattern (diagonal ignored).
struct Graph {
  int n = 0;
  std::vector<std::array<int, 2>> edges;

  // Neighbor lists, built on demand.
  std::vector<std::vector<int>> adjacency() const;
};

// Graph whose edges are the off-diagonal pattern of a.
Graph graph_of_pattern(const SparseCoo& a);

}  // namespace negf
