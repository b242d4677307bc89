// Brute-force dense reference solver.
//
// Ground truth for cross-validation: builds the full dense system matrix and
// inverts it outright.  Deliberately simple, capped in size, and independent
// of the structured solvers.
#pragma once

#include "negf/dense.hpp"
#include "negf/sparse.hpp"

namespace negf {

// Largest system the oracle accepts (dense O(n^3) stays tractable below it).
inline constexpr int kOracleMaxDofs = 2500;

// Densifies a COO matrix (duplicates summed).
CMatrix dense_from_coo(const SparseCoo& a);

// Sub-block of `a` at the given row/column dof lists.
CMatrix submatrix(const CMatrix& a, const std::vector<int>& rows,
                  const std::vector<int>& cols);

// G^r = A^{-1}, verified to residual ||A G - I||_F / ||I||_F <= 1e-10.
CMatrix dense_gr(const CMatrix& a);
CMatrix dense_gr(const SparseCoo& a);

// G^< = G^r Sigma^< (G^r)^dagger for a skew-Hermitian Sigma^<.
CMatrix dense_gless(const CMatrix& gr, const CMatrix& sigma_lesser);

}  // namespace negf
