#include "negf/oracle.hpp"

#include <cmath>
#include <string>

#include "negf/errors.hpp"

namespace negf {

CMatrix dense_from_coo(const SparseCoo& a) {
  CMatrix m(a.n, a.n);
  for (const auto& e : a.entries) m(e.row, e.col) += e.val;
  return m;
}

CMatrix submatrix(const CMatrix& a, const std::vector<int>& rows,
                  const std::vector<int>& cols) {
  CMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<int>(i), static_cast<int>(j)) = a(rows[i], cols[j]);
    }
  }
  return out;
}

CMatrix dense_gr(const CMatrix& a) {
  if (a.rows() != a.cols()) {
    throw ContractViolation("dense_gr needs a square matrix");
  }
  if (a.rows() > kOracleMaxDofs) {
    throw ConfigError("dense oracle refuses systems above " +
                      std::to_string(kOracleMaxDofs) + " dofs");
  }
  FlopLedger scratch;
  CMatrix g = inverse(a, scratch);
  // Residual check: ||A G - I||_F relative to ||I||_F = sqrt(n).
  CMatrix ag = matmul(a, g, scratch);
  for (int i = 0; i < ag.rows(); ++i) ag(i, i) -= 1.0;
  const double rel =
      frobenius_norm(ag) / std::sqrt(static_cast<double>(a.rows()));
  if (!(rel <= 1e-10)) {
    throw ResidualTooLarge("dense inverse residual " + std::to_string(rel) +
                           " exceeds 1e-10");
  }
  return g;
}

CMatrix dense_gr(const SparseCoo& a) {
  if (a.n > kOracleMaxDofs) {
    throw ConfigError("dense oracle refuses systems above " +
                      std::to_string(kOracleMaxDofs) + " dofs");
  }
  return dense_gr(dense_from_coo(a));
}

CMatrix dense_gless(const CMatrix& gr, const CMatrix& sigma_lesser) {
  if (gr.rows() != gr.cols() || !gr.same_shape(sigma_lesser)) {
    throw ContractViolation("dense_gless shape mismatch");
  }
  FlopLedger scratch;
  CMatrix t = matmul(gr, sigma_lesser, scratch);
  CMatrix g = matmul(t, adjoint(gr, AdjointMode::ConjugateTranspose), scratch);
  return g;
}

}  // namespace negf
