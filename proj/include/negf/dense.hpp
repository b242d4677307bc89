// Dense complex matrix kernels with an exact operation ledger.
//
// Counting convention used throughout the library:
//   * a dense (i x j) * (j x k) product charges exactly i*j*k multiplications,
//   * an n x n inversion charges the nominal n^3 regardless of the internal
//     algorithm (LU with partial pivoting here),
//   * transposition, conjugation, additions and sign flips are free.
// The structure-aware helpers further down charge exactly the number of
// scalar multiplications they actually perform (e.g. n*k for a diagonal
// scaling), which is what the layered solver relies on to meet its
// operation-count bounds.
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "negf/errors.hpp"

namespace negf {

using cplx = std::complex<double>;

// Dense complex matrix, row-major storage.  The unit of all block arithmetic.
class CMatrix {
 public:
  CMatrix() : rows_(0), cols_(0) {}
  CMatrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, cplx(0.0, 0.0)) {
    if (rows < 0 || cols < 0)
      throw ContractViolation("CMatrix: negative dimension");
  }

  static CMatrix identity(int n) {
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = cplx(1.0, 0.0);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  cplx& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  const cplx& operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }

  bool all_finite() const;

  bool same_shape(const CMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  int rows_, cols_;
  std::vector<cplx> data_;
};

// Exact operation counter.  Mergeable: each worker keeps a private ledger and
// the partial counts are summed afterwards (addition is associative and
// commutative), which keeps concurrent energy points race-free by design.
struct FlopLedger {
  std::int64_t multiply_ops = 0;
  std::int64_t inverse_ops = 0;

  void merge(const FlopLedger& other) {
    multiply_ops += other.multiply_ops;
    inverse_ops += other.inverse_ops;
  }
  FlopLedger& operator+=(const FlopLedger& other) {
    merge(other);
    return *this;
  }
  std::int64_t total() const { return multiply_ops + inverse_ops; }
};

enum class AdjointMode { Transpose, ConjugateTranspose };

// result = a * b; charges exactly a.rows * a.cols * b.cols multiplications.
CMatrix matmul(const CMatrix& a, const CMatrix& b, FlopLedger& ledger);

// result = a^-1 via LU with partial pivoting; charges exactly n^3.
// Raises SingularBlock (with the pivot index) when the smallest pivot falls
// below 1e-13 * max|a| — the system matrix is regularized by contact
// broadening, so a singular block indicates a bad configuration.
CMatrix inverse(const CMatrix& a, FlopLedger& ledger);

// Transpose or conjugate transpose; never charged.
CMatrix adjoint(const CMatrix& a, AdjointMode mode);

// Elementwise complex conjugate; sign flips only, never charged.
CMatrix conjugated(const CMatrix& a);

// ---- structure-aware helpers ----------------------------------------------
// Each charges exactly the scalar multiplications it performs.

// alpha * a.  Charges rows*cols, except alpha == +1 (copy) or alpha == -1
// (sign flip), which are free.
CMatrix scaled(const CMatrix& a, cplx alpha, FlopLedger& ledger);

// diag(d) * a (left) or a * diag(d) (right).  Charges rows*cols.
CMatrix diag_scale_left(const std::vector<cplx>& d, const CMatrix& a,
                        FlopLedger& ledger);
CMatrix diag_scale_right(const CMatrix& a, const std::vector<cplx>& d,
                         FlopLedger& ledger);

// alpha * a * b for an (n x k) * (k x n) product known to be skew-Hermitian:
// computes the upper triangle including the diagonal and mirrors the rest.
// The result is exactly skew-Hermitian: the real rounding residue on the
// diagonal is projected away, since downstream recursions amplify any
// Hermitian component coherently.  alpha must be real (a complex scale would
// destroy skew-Hermiticity and the mirror with it); ContractViolation
// otherwise.  Charges k*n*(n+1)/2 for the dot products plus, when
// alpha != +-1, one extra multiplication per computed entry (n*(n+1)/2).
CMatrix skew_half_product(const CMatrix& a, const CMatrix& b, cplx alpha,
                          FlopLedger& ledger);

// dst += src / dst -= src; free (additions are not charged).
void add_inplace(CMatrix& dst, const CMatrix& src);
void sub_inplace(CMatrix& dst, const CMatrix& src);

// ---- norms and property checks ---------------------------------------------

double frobenius_norm(const CMatrix& a);

// ||x - ref||_F / ||ref||_F  (returns ||x||_F when ref is zero).
double rel_frobenius_error(const CMatrix& x, const CMatrix& ref);

// max |a(i,j) - a(j,i)| relative to ||a||_F (0 for empty/scalar blocks).
double transpose_asymmetry(const CMatrix& a);

// ||a + a^dagger||_F / ||a||_F — zero for an exactly skew-Hermitian matrix.
double skew_hermitian_defect(const CMatrix& a);

}  // namespace negf
