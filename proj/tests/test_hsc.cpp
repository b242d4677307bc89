// Hierarchical solver: closed-form identities on a two-leaf tree (with exact
// operation counts), a fully worked five-cluster fixture checked level by
// level against the traced snapshots, lean/full-mode agreement, equivalence
// with the layered solver on chain partitions, oracle comparisons on
// nested-dissection partitions of synthetic systems, and the validation
// paths for malformed inputs.
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "doctest.h"
#include "negf/block.hpp"
#include "negf/dense.hpp"
#include "negf/errors.hpp"
#include "negf/hsc.hpp"
#include "negf/oracle.hpp"
#include "negf/partition.hpp"
#include "negf/rgf.hpp"
#include "negf/sparse.hpp"
#include "negf/synthetic.hpp"
#include "test_support.hpp"

namespace nt = negf::test;
using negf::BlockSymmetry;
using negf::ClusterBlockMatrix;
using negf::CMatrix;
using negf::cplx;
using negf::FlopLedger;
using negf::HscFactorization;
using negf::HscGlessResult;
using negf::HscTrace;
using negf::SeparatorTree;
using negf::SparseCoo;

namespace {

std::vector<int> span(int begin, int count) {
  std::vector<int> r(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) r[static_cast<std::size_t>(i)] = begin + i;
  return r;
}

CMatrix mul(const CMatrix& a, const CMatrix& b) {
  return nt::naive_matmul(a, b);
}

CMatrix tr(const CMatrix& a) { return nt::naive_adjoint(a, false); }
CMatrix ct(const CMatrix& a) { return nt::naive_adjoint(a, true); }

CMatrix conj_of(const CMatrix& a) {
  CMatrix r(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) = std::conj(a(i, j));
  return r;
}

CMatrix plus(const CMatrix& a, const CMatrix& b) {
  CMatrix r = a;
  for (int i = 0; i < r.rows(); ++i)
    for (int j = 0; j < r.cols(); ++j) r(i, j) += b(i, j);
  return r;
}

CMatrix negated(const CMatrix& a) {
  CMatrix r = a;
  for (int i = 0; i < r.rows(); ++i)
    for (int j = 0; j < r.cols(); ++j) r(i, j) = -r(i, j);
  return r;
}

double max_abs(const CMatrix& a) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// Dense fixture helpers: read / overwrite / accumulate / clear one block of
// a full dense matrix addressed by global index ranges.
void setb(CMatrix& d, const std::vector<int>& ri, const std::vector<int>& rj,
          const CMatrix& b) {
  for (std::size_t r = 0; r < ri.size(); ++r)
    for (std::size_t c = 0; c < rj.size(); ++c)
      d(ri[r], rj[c]) = b(static_cast<int>(r), static_cast<int>(c));
}

void addb(CMatrix& d, const std::vector<int>& ri, const std::vector<int>& rj,
          const CMatrix& b) {
  for (std::size_t r = 0; r < ri.size(); ++r)
    for (std::size_t c = 0; c < rj.size(); ++c)
      d(ri[r], rj[c]) += b(static_cast<int>(r), static_cast<int>(c));
}

void zerob(CMatrix& d, const std::vector<int>& ri,
           const std::vector<int>& rj) {
  for (int r : ri)
    for (int c : rj) d(r, c) = cplx(0.0, 0.0);
}

CMatrix getb(const CMatrix& d, const std::vector<int>& ri,
             const std::vector<int>& rj) {
  return negf::submatrix(d, ri, rj);
}

std::shared_ptr<const SeparatorTree> two_leaf_tree(int nl, int nr, int ns) {
  std::vector<SeparatorTree::Cluster> cs(3);
  cs[0].dofs = span(0, nl);
  cs[0].parent = 2;
  cs[1].dofs = span(nl, nr);
  cs[1].parent = 2;
  cs[2].dofs = span(nl + nr, ns);
  cs[2].parent = -1;
  return std::make_shared<SeparatorTree>(
      SeparatorTree::build(std::move(cs), nl + nr + ns));
}

}  // namespace

// ---------------------------------------------------------------------------
// Two leaves under one separator: every output has a short closed form.
// ---------------------------------------------------------------------------

TEST_CASE("two-leaf tree reproduces the closed-form solution") {
  std::mt19937_64 rng(7);
  const int nl = 3, nr = 4, ns = 2;
  const CMatrix a_ll = nt::random_complex_symmetric(rng, nl);
  const CMatrix a_rr = nt::random_complex_symmetric(rng, nr);
  const CMatrix a_ss = nt::random_complex_symmetric(rng, ns);
  const CMatrix a_ls = nt::random_matrix(rng, nl, ns);
  const CMatrix a_rs = nt::random_matrix(rng, nr, ns);
  const CMatrix s_ll = nt::random_skew_hermitian(rng, nl);
  const CMatrix s_rr = nt::random_skew_hermitian(rng, nr);
  const CMatrix s_ss = nt::random_skew_hermitian(rng, ns);

  auto tree = two_leaf_tree(nl, nr, ns);
  ClusterBlockMatrix a(tree, BlockSymmetry::ComplexSymmetric);
  a.set(0, 0, a_ll);
  a.set(1, 1, a_rr);
  a.set(2, 2, a_ss);
  a.set(0, 2, a_ls);
  a.set(2, 0, tr(a_ls));
  a.set(1, 2, a_rs);
  a.set(2, 1, tr(a_rs));
  ClusterBlockMatrix sig(tree, BlockSymmetry::SkewHermitian);
  sig.set(0, 0, s_ll);
  sig.set(1, 1, s_rr);
  sig.set(2, 2, s_ss);

  // Independent closed forms (naive kernels only).
  const CMatrix inv_l = nt::naive_inverse(a_ll);
  const CMatrix inv_r = nt::naive_inverse(a_rr);
  const CMatrix psi_l = negated(mul(inv_l, a_ls));
  const CMatrix psi_r = negated(mul(inv_r, a_rs));
  const CMatrix ahat =
      plus(a_ss, plus(mul(tr(a_ls), psi_l), mul(tr(a_rs), psi_r)));
  const CMatrix g_ss = nt::naive_inverse(ahat);
  const CMatrix g_ls = mul(psi_l, g_ss);
  const CMatrix g_rs = mul(psi_r, g_ss);
  const CMatrix g_ll = plus(inv_l, mul(psi_l, tr(g_ls)));
  const CMatrix g_rr = plus(inv_r, mul(psi_r, tr(g_rs)));
  const CMatrix n_ss1 =
      plus(mul(s_ss, conj_of(g_ss)),
           plus(mul(tr(psi_l), mul(s_ll, conj_of(g_ls))),
                mul(tr(psi_r), mul(s_rr, conj_of(g_rs)))));
  const CMatrix gl_ss = mul(g_ss, n_ss1);
  const CMatrix gl_ls =
      plus(mul(inv_l, mul(s_ll, conj_of(g_ls))), mul(psi_l, gl_ss));
  const CMatrix gl_rs =
      plus(mul(inv_r, mul(s_rr, conj_of(g_rs))), mul(psi_r, gl_ss));
  const CMatrix gl_ll =
      plus(mul(inv_l, mul(s_ll, conj_of(g_ll))), negated(mul(psi_l, ct(gl_ls))));
  const CMatrix gl_rr =
      plus(mul(inv_r, mul(s_rr, conj_of(g_rr))), negated(mul(psi_r, ct(gl_rs))));

  FlopLedger fold_ledger;
  HscTrace trace;
  const HscFactorization fact = negf::hsc_fold(a, fold_ledger, &trace);
  FlopLedger run_ledger;
  const HscGlessResult res = negf::hsc_gless(fact, sig, run_ledger, &trace);

  const std::vector<int> rl = span(0, nl), rr = span(nl, nr),
                         rs = span(nl + nr, ns);
  const double tol = 1e-11;

  REQUIRE(trace.a_levels.size() == 2);
  CHECK(nt::max_abs_diff(getb(trace.a_levels[1], rs, rs), ahat) <= tol);
  CHECK(nt::max_abs_diff(getb(trace.a_levels[1], rl, rl), a_ll) == 0.0);
  CHECK(max_abs(getb(trace.a_levels[1], rl, rs)) == 0.0);
  CHECK(max_abs(getb(trace.a_levels[1], rs, rr)) == 0.0);

  REQUIRE(trace.g_levels.size() == 2);
  CHECK(nt::max_abs_diff(getb(trace.g_levels[1], rl, rl), inv_l) <= tol);
  CHECK(nt::max_abs_diff(getb(trace.g_levels[1], rs, rs), g_ss) <= tol);
  CHECK(max_abs(getb(trace.g_levels[1], rl, rs)) == 0.0);
  CHECK(nt::max_abs_diff(getb(trace.g_levels[0], rl, rs), g_ls) <= tol);
  CHECK(nt::max_abs_diff(getb(trace.g_levels[0], rs, rl), tr(g_ls)) <= tol);
  CHECK(nt::max_abs_diff(getb(trace.g_levels[0], rr, rs), g_rs) <= tol);
  CHECK(nt::max_abs_diff(getb(trace.g_levels[0], rl, rl), g_ll) <= tol);
  CHECK(nt::max_abs_diff(getb(trace.g_levels[0], rr, rr), g_rr) <= tol);

  REQUIRE(trace.n_levels.size() == 2);
  CHECK(nt::max_abs_diff(getb(trace.n_levels[1], rs, rs), n_ss1) <= tol);

  REQUIRE(trace.p_levels.size() == 2);
  CHECK(nt::max_abs_diff(getb(trace.p_levels[0], rl, rs), gl_ls) <= tol);
  CHECK(nt::max_abs_diff(getb(trace.p_levels[0], rs, rl), negated(ct(gl_ls))) <=
        tol);
  CHECK(nt::max_abs_diff(getb(trace.p_levels[0], rr, rs), gl_rs) <= tol);

  REQUIRE(res.gr_diag.size() == 3);
  CHECK(nt::max_abs_diff(res.gr_diag[0], g_ll) <= tol);
  CHECK(nt::max_abs_diff(res.gr_diag[1], g_rr) <= tol);
  CHECK(nt::max_abs_diff(res.gr_diag[2], g_ss) <= tol);
  CHECK(nt::max_abs_diff(res.gless_diag[0], gl_ll) <= tol);
  CHECK(nt::max_abs_diff(res.gless_diag[1], gl_rr) <= tol);
  CHECK(nt::max_abs_diff(res.gless_diag[2], gl_ss) <= tol);

  // The dense oracle settles the signs independently of the closed forms.
  const int n = nl + nr + ns;
  CMatrix ad(n, n), sd(n, n);
  setb(ad, rl, rl, a_ll);
  setb(ad, rr, rr, a_rr);
  setb(ad, rs, rs, a_ss);
  setb(ad, rl, rs, a_ls);
  setb(ad, rs, rl, tr(a_ls));
  setb(ad, rr, rs, a_rs);
  setb(ad, rs, rr, tr(a_rs));
  setb(sd, rl, rl, s_ll);
  setb(sd, rr, rr, s_rr);
  setb(sd, rs, rs, s_ss);
  const CMatrix gd = negf::dense_gr(ad);
  const CMatrix gld = negf::dense_gless(gd, sd);
  CHECK(nt::max_abs_diff(res.gr_diag[0], getb(gd, rl, rl)) <= 1e-10);
  CHECK(nt::max_abs_diff(res.gr_diag[2], getb(gd, rs, rs)) <= 1e-10);
  CHECK(nt::max_abs_diff(res.gless_diag[0], getb(gld, rl, rl)) <= 1e-10);
  CHECK(nt::max_abs_diff(res.gless_diag[1], getb(gld, rr, rr)) <= 1e-10);
  CHECK(nt::max_abs_diff(res.gless_diag[2], getb(gld, rs, rs)) <= 1e-10);
  for (const CMatrix& b : res.gless_diag)
    CHECK(negf::skew_hermitian_defect(b) <= 1e-12);
}

TEST_CASE("two-leaf tree: exact operation counts of all three phases") {
  std::mt19937_64 rng(8);
  const int nl = 3, nr = 4, ns = 2;
  auto tree = two_leaf_tree(nl, nr, ns);
  ClusterBlockMatrix a(tree, BlockSymmetry::ComplexSymmetric);
  const CMatrix a_ls = nt::random_matrix(rng, nl, ns);
  const CMatrix a_rs = nt::random_matrix(rng, nr, ns);
  a.set(0, 0, nt::random_complex_symmetric(rng, nl));
  a.set(1, 1, nt::random_complex_symmetric(rng, nr));
  a.set(2, 2, nt::random_complex_symmetric(rng, ns));
  a.set(0, 2, a_ls);
  a.set(2, 0, tr(a_ls));
  a.set(1, 2, a_rs);
  a.set(2, 1, tr(a_rs));
  ClusterBlockMatrix sig(tree, BlockSymmetry::SkewHermitian);
  sig.set(0, 0, nt::random_skew_hermitian(rng, nl));
  sig.set(1, 1, nt::random_skew_hermitian(rng, nr));
  sig.set(2, 2, nt::random_skew_hermitian(rng, ns));

  FlopLedger fold_ledger;
  const HscFactorization fact = negf::hsc_fold(a, fold_ledger);
  // Inversions: 3^3 + 4^3 + 2^3.  Multiplies: Psi rows 3*3*2 + 4*4*2, Schur
  // updates 2*3*2 + 2*4*2.
  CHECK(fold_ledger.inverse_ops == 99);
  CHECK(fold_ledger.multiply_ops == 78);

  FlopLedger gr_ledger;
  const std::vector<CMatrix> gr = negf::hsc_gr(fact, gr_ledger);
  REQUIRE(gr.size() == 3);
  // Rows 3*2*2 + 4*2*2, diagonal updates 3*2*3 + 4*2*4.
  CHECK(gr_ledger.multiply_ops == 78);
  CHECK(gr_ledger.inverse_ops == 0);

  FlopLedger gless_ledger;
  const HscGlessResult res = negf::hsc_gless(fact, sig, gless_ledger);
  // G pass (78) + N seeds (27+18+64+32+8) + N folds (12+16) + root P (8)
  // + leaf L (18+12+27+18) + leaf R (32+16+64+32).
  CHECK(gless_ledger.multiply_ops == 482);
  CHECK(gless_ledger.inverse_ops == 0);
  CHECK(nt::max_abs_diff(res.gr_diag[0], gr[0]) == 0.0);
  CHECK(nt::max_abs_diff(res.gr_diag[2], gr[2]) == 0.0);
}

// ---------------------------------------------------------------------------
// Five clusters, three levels: every traced intermediate is recomputed
// independently with naive kernels and compared snapshot by snapshot.
// ---------------------------------------------------------------------------

TEST_CASE("five-cluster fixture matches every traced level") {
  // Two leaves under a separator, a third leaf and that separator under the
  // root:  0,1 -> 2;  2,3 -> 4.
  const std::vector<int> sizes = {2, 3, 2, 2, 3};
  std::vector<std::vector<int>> r(5);
  int off = 0;
  for (int c = 0; c < 5; ++c) {
    r[static_cast<std::size_t>(c)] = span(off, sizes[static_cast<std::size_t>(c)]);
    off += sizes[static_cast<std::size_t>(c)];
  }
  const int n = off;  // 12

  std::vector<SeparatorTree::Cluster> cs(5);
  cs[0].dofs = r[0];
  cs[0].parent = 2;
  cs[1].dofs = r[1];
  cs[1].parent = 2;
  cs[2].dofs = r[2];
  cs[2].parent = 4;
  cs[3].dofs = r[3];
  cs[3].parent = 4;
  cs[4].dofs = r[4];
  cs[4].parent = -1;
  auto tree = std::make_shared<SeparatorTree>(
      SeparatorTree::build(std::move(cs), n));
  REQUIRE(tree->levels() == 3);

  std::mt19937_64 rng(12);
  CMatrix a0(n, n);
  for (int c = 0; c < 5; ++c)
    setb(a0, r[static_cast<std::size_t>(c)], r[static_cast<std::size_t>(c)],
         nt::random_complex_symmetric(rng, sizes[static_cast<std::size_t>(c)]));
  const std::vector<std::pair<int, int>> pairs = {{0, 2}, {0, 4}, {1, 2},
                                                  {1, 4}, {2, 4}, {3, 4}};
  for (const auto& pq : pairs) {
    const CMatrix b =
        nt::random_matrix(rng, sizes[static_cast<std::size_t>(pq.first)],
                          sizes[static_cast<std::size_t>(pq.second)]);
    setb(a0, r[static_cast<std::size_t>(pq.first)],
         r[static_cast<std::size_t>(pq.second)], b);
    setb(a0, r[static_cast<std::size_t>(pq.second)],
         r[static_cast<std::size_t>(pq.first)], tr(b));
  }
  CMatrix sd(n, n);
  std::vector<CMatrix> sig_blocks(5);
  for (int c = 0; c < 5; ++c) {
    sig_blocks[static_cast<std::size_t>(c)] = nt::random_skew_hermitian(
        rng, sizes[static_cast<std::size_t>(c)]);
    setb(sd, r[static_cast<std::size_t>(c)], r[static_cast<std::size_t>(c)],
         sig_blocks[static_cast<std::size_t>(c)]);
  }

  ClusterBlockMatrix a(tree, BlockSymmetry::ComplexSymmetric);
  for (int c = 0; c < 5; ++c)
    a.set(c, c, getb(a0, r[static_cast<std::size_t>(c)],
                     r[static_cast<std::size_t>(c)]));
  for (const auto& pq : pairs) {
    a.set(pq.first, pq.second,
          getb(a0, r[static_cast<std::size_t>(pq.first)],
               r[static_cast<std::size_t>(pq.second)]));
    a.set(pq.second, pq.first,
          getb(a0, r[static_cast<std::size_t>(pq.second)],
               r[static_cast<std::size_t>(pq.first)]));
  }
  ClusterBlockMatrix sig(tree, BlockSymmetry::SkewHermitian);
  for (int c = 0; c < 5; ++c)
    sig.set(c, c, sig_blocks[static_cast<std::size_t>(c)]);

  // ---- independent level-by-level reference -------------------------------
  // Fold level 1: eliminate the three leaves.
  const CMatrix inv0 = nt::naive_inverse(getb(a0, r[0], r[0]));
  const CMatrix inv1 = nt::naive_inverse(getb(a0, r[1], r[1]));
  const CMatrix inv3 = nt::naive_inverse(getb(a0, r[3], r[3]));
  const CMatrix psi02 = negated(mul(inv0, getb(a0, r[0], r[2])));
  const CMatrix psi04 = negated(mul(inv0, getb(a0, r[0], r[4])));
  const CMatrix psi12 = negated(mul(inv1, getb(a0, r[1], r[2])));
  const CMatrix psi14 = negated(mul(inv1, getb(a0, r[1], r[4])));
  const CMatrix psi34 = negated(mul(inv3, getb(a0, r[3], r[4])));

  CMatrix a1 = a0;
  addb(a1, r[2], r[2], mul(tr(psi02), getb(a0, r[0], r[2])));
  addb(a1, r[2], r[2], mul(tr(psi12), getb(a0, r[1], r[2])));
  const CMatrix u024 = mul(tr(psi02), getb(a0, r[0], r[4]));
  const CMatrix u124 = mul(tr(psi12), getb(a0, r[1], r[4]));
  addb(a1, r[2], r[4], u024);
  addb(a1, r[4], r[2], tr(u024));
  addb(a1, r[2], r[4], u124);
  addb(a1, r[4], r[2], tr(u124));
  addb(a1, r[4], r[4], mul(tr(psi04), getb(a0, r[0], r[4])));
  addb(a1, r[4], r[4], mul(tr(psi14), getb(a0, r[1], r[4])));
  addb(a1, r[4], r[4], mul(tr(psi34), getb(a0, r[3], r[4])));
  for (int leaf : {0, 1, 3})
    for (int anc : {2, 4}) {
      if (leaf == 3 && anc == 2) continue;
      zerob(a1, r[static_cast<std::size_t>(leaf)],
            r[static_cast<std::size_t>(anc)]);
      zerob(a1, r[static_cast<std::size_t>(anc)],
            r[static_cast<std::size_t>(leaf)]);
    }

  // Fold level 2: eliminate the separator.
  const CMatrix inv2 = nt::naive_inverse(getb(a1, r[2], r[2]));
  const CMatrix psi24 = negated(mul(inv2, getb(a1, r[2], r[4])));
  CMatrix a2 = a1;
  addb(a2, r[4], r[4], mul(tr(psi24), getb(a1, r[2], r[4])));
  zerob(a2, r[2], r[4]);
  zerob(a2, r[4], r[2]);
  const CMatrix inv4 = nt::naive_inverse(getb(a2, r[4], r[4]));

  // Extraction: block-diagonal start, separator row, then the leaf rows.
  CMatrix g2(n, n);
  setb(g2, r[0], r[0], inv0);
  setb(g2, r[1], r[1], inv1);
  setb(g2, r[2], r[2], inv2);
  setb(g2, r[3], r[3], inv3);
  setb(g2, r[4], r[4], inv4);

  CMatrix g1 = g2;
  const CMatrix g24 = mul(psi24, inv4);
  setb(g1, r[2], r[4], g24);
  setb(g1, r[4], r[2], tr(g24));
  setb(g1, r[2], r[2], plus(inv2, mul(psi24, tr(g24))));

  CMatrix g0 = g1;
  struct LeafRefs {
    int id;
    const CMatrix* psi_sep;  // null when the leaf only couples to the root
    const CMatrix* psi_root;
    const CMatrix* inv;
  };
  const std::vector<LeafRefs> leaves = {{0, &psi02, &psi04, &inv0},
                                        {1, &psi12, &psi14, &inv1},
                                        {3, nullptr, &psi34, &inv3}};
  for (const LeafRefs& lf : leaves) {
    const auto& ri = r[static_cast<std::size_t>(lf.id)];
    if (lf.psi_sep) {
      CMatrix row2 = plus(mul(*lf.psi_sep, getb(g1, r[2], r[2])),
                          mul(*lf.psi_root, getb(g1, r[4], r[2])));
      CMatrix row4 = plus(mul(*lf.psi_sep, getb(g1, r[2], r[4])),
                          mul(*lf.psi_root, getb(g1, r[4], r[4])));
      setb(g0, ri, r[2], row2);
      setb(g0, r[2], ri, tr(row2));
      setb(g0, ri, r[4], row4);
      setb(g0, r[4], ri, tr(row4));
      setb(g0, ri, ri,
           plus(*lf.inv, plus(mul(*lf.psi_sep, tr(row2)),
                              mul(*lf.psi_root, tr(row4)))));
    } else {
      CMatrix row4 = mul(*lf.psi_root, getb(g1, r[4], r[4]));
      setb(g0, ri, r[4], row4);
      setb(g0, r[4], ri, tr(row4));
      setb(g0, ri, ri, plus(*lf.inv, mul(*lf.psi_root, tr(row4))));
    }
  }

  // Lesser pass: N over G's stored pattern, two fold sweeps, the seeded P,
  // then the two extraction sweeps with the skew mirror rule.
  std::vector<std::pair<int, int>> gkeys;
  for (int c = 0; c < 5; ++c) gkeys.push_back({c, c});
  for (const auto& pq : pairs) {
    gkeys.push_back(pq);
    gkeys.push_back({pq.second, pq.first});
  }
  CMatrix n0(n, n);
  for (const auto& key : gkeys) {
    const auto& ri = r[static_cast<std::size_t>(key.first)];
    const auto& rj = r[static_cast<std::size_t>(key.second)];
    setb(n0, ri, rj,
         mul(sig_blocks[static_cast<std::size_t>(key.first)],
             conj_of(getb(g0, ri, rj))));
  }
  CMatrix n1 = n0;
  addb(n1, r[2], r[2], mul(tr(psi02), getb(n0, r[0], r[2])));
  addb(n1, r[2], r[4], mul(tr(psi02), getb(n0, r[0], r[4])));
  addb(n1, r[4], r[2], mul(tr(psi04), getb(n0, r[0], r[2])));
  addb(n1, r[4], r[4], mul(tr(psi04), getb(n0, r[0], r[4])));
  addb(n1, r[2], r[2], mul(tr(psi12), getb(n0, r[1], r[2])));
  addb(n1, r[2], r[4], mul(tr(psi12), getb(n0, r[1], r[4])));
  addb(n1, r[4], r[2], mul(tr(psi14), getb(n0, r[1], r[2])));
  addb(n1, r[4], r[4], mul(tr(psi14), getb(n0, r[1], r[4])));
  addb(n1, r[4], r[4], mul(tr(psi34), getb(n0, r[3], r[4])));
  CMatrix n2 = n1;
  addb(n2, r[4], r[4], mul(tr(psi24), getb(n1, r[2], r[4])));

  const std::vector<const CMatrix*> invd = {&inv0, &inv1, &inv2, &inv3, &inv4};
  CMatrix p2(n, n);
  for (const auto& key : gkeys) {
    const auto& ri = r[static_cast<std::size_t>(key.first)];
    const auto& rj = r[static_cast<std::size_t>(key.second)];
    setb(p2, ri, rj,
         mul(*invd[static_cast<std::size_t>(key.first)], getb(n2, ri, rj)));
  }
  CMatrix p1 = p2;
  {
    const CMatrix acc =
        plus(getb(p2, r[2], r[4]), mul(psi24, getb(p2, r[4], r[4])));
    setb(p1, r[2], r[4], acc);
    setb(p1, r[4], r[2], negated(ct(acc)));
    setb(p1, r[2], r[2],
         plus(getb(p2, r[2], r[2]), mul(psi24, getb(p1, r[4], r[2]))));
  }
  CMatrix p0 = p1;
  for (const LeafRefs& lf : leaves) {
    const auto& ri = r[static_cast<std::size_t>(lf.id)];
    if (lf.psi_sep) {
      const CMatrix acc2 =
          plus(getb(p1, ri, r[2]), plus(mul(*lf.psi_sep, getb(p1, r[2], r[2])),
                                        mul(*lf.psi_root, getb(p1, r[4], r[2]))));
      const CMatrix acc4 =
          plus(getb(p1, ri, r[4]), plus(mul(*lf.psi_sep, getb(p1, r[2], r[4])),
                                        mul(*lf.psi_root, getb(p1, r[4], r[4]))));
      setb(p0, ri, r[2], acc2);
      setb(p0, r[2], ri, negated(ct(acc2)));
      setb(p0, ri, r[4], acc4);
      setb(p0, r[4], ri, negated(ct(acc4)));
      setb(p0, ri, ri,
           plus(getb(p1, ri, ri), plus(mul(*lf.psi_sep, getb(p0, r[2], ri)),
                                       mul(*lf.psi_root, getb(p0, r[4], ri)))));
    } else {
      const CMatrix acc4 =
          plus(getb(p1, ri, r[4]), mul(*lf.psi_root, getb(p1, r[4], r[4])));
      setb(p0, ri, r[4], acc4);
      setb(p0, r[4], ri, negated(ct(acc4)));
      setb(p0, ri, ri,
           plus(getb(p1, ri, ri), mul(*lf.psi_root, getb(p0, r[4], ri))));
    }
  }

  // ---- run the solver with tracing and compare every snapshot -------------
  FlopLedger ledger;
  HscTrace trace;
  const HscFactorization fact = negf::hsc_fold(a, ledger, &trace);
  const HscGlessResult res = negf::hsc_gless(fact, sig, ledger, &trace);

  const double tol = 1e-11;
  REQUIRE(trace.a_levels.size() == 3);
  CHECK(nt::max_abs_diff(trace.a_levels[0], a0) == 0.0);
  CHECK(nt::max_abs_diff(trace.a_levels[1], a1) <= tol);
  CHECK(nt::max_abs_diff(trace.a_levels[2], a2) <= tol);
  REQUIRE(trace.g_levels.size() == 3);
  CHECK(nt::max_abs_diff(trace.g_levels[2], g2) <= tol);
  CHECK(nt::max_abs_diff(trace.g_levels[1], g1) <= tol);
  CHECK(nt::max_abs_diff(trace.g_levels[0], g0) <= tol);
  REQUIRE(trace.n_levels.size() == 3);
  CHECK(nt::max_abs_diff(trace.n_levels[0], n0) <= tol);
  CHECK(nt::max_abs_diff(trace.n_levels[1], n1) <= tol);
  CHECK(nt::max_abs_diff(trace.n_levels[2], n2) <= tol);
  REQUIRE(trace.p_levels.size() == 3);
  CHECK(nt::max_abs_diff(trace.p_levels[2], p2) <= tol);
  CHECK(nt::max_abs_diff(trace.p_levels[1], p1) <= tol);
  CHECK(nt::max_abs_diff(trace.p_levels[0], p0) <= tol);

  for (int c = 0; c < 5; ++c) {
    const auto& rc = r[static_cast<std::size_t>(c)];
    CHECK(nt::max_abs_diff(res.gr_diag[static_cast<std::size_t>(c)],
                           getb(g0, rc, rc)) <= tol);
    CHECK(nt::max_abs_diff(res.gless_diag[static_cast<std::size_t>(c)],
                           getb(p0, rc, rc)) <= tol);
  }

  // The dense oracle confirms the fixture itself.
  const CMatrix gd = negf::dense_gr(a0);
  const CMatrix gld = negf::dense_gless(gd, sd);
  for (const auto& key : gkeys) {
    const auto& ri = r[static_cast<std::size_t>(key.first)];
    const auto& rj = r[static_cast<std::size_t>(key.second)];
    CHECK(nt::max_abs_diff(getb(g0, ri, rj), getb(gd, ri, rj)) <= 1e-10);
    CHECK(nt::max_abs_diff(getb(p0, ri, rj), getb(gld, ri, rj)) <= 1e-10);
  }
}

TEST_CASE("lean and full modes agree block for block") {
  // Same five-cluster layout as the fixture test, fresh draws.
  const std::vector<int> sizes = {2, 3, 2, 2, 3};
  std::vector<std::vector<int>> r(5);
  int off = 0;
  for (int c = 0; c < 5; ++c) {
    r[static_cast<std::size_t>(c)] = span(off, sizes[static_cast<std::size_t>(c)]);
    off += sizes[static_cast<std::size_t>(c)];
  }
  std::vector<SeparatorTree::Cluster> cs(5);
  cs[0].dofs = r[0];
  cs[0].parent = 2;
  cs[1].dofs = r[1];
  cs[1].parent = 2;
  cs[2].dofs = r[2];
  cs[2].parent = 4;
  cs[3].dofs = r[3];
  cs[3].parent = 4;
  cs[4].dofs = r[4];
  cs[4].parent = -1;
  auto tree = std::make_shared<SeparatorTree>(
      SeparatorTree::build(std::move(cs), off));

  std::mt19937_64 rng(31);
  ClusterBlockMatrix a(tree, BlockSymmetry::ComplexSymmetric);
  for (int c = 0; c < 5; ++c)
    a.set(c, c, nt::random_complex_symmetric(
                    rng, sizes[static_cast<std::size_t>(c)]));
  for (const auto& pq : std::vector<std::pair<int, int>>{
           {0, 2}, {0, 4}, {1, 2}, {1, 4}, {2, 4}, {3, 4}}) {
    const CMatrix b =
        nt::random_matrix(rng, sizes[static_cast<std::size_t>(pq.first)],
                          sizes[static_cast<std::size_t>(pq.second)]);
    a.set(pq.first, pq.second, b);
    a.set(pq.second, pq.first, tr(b));
  }
  ClusterBlockMatrix sig(tree, BlockSymmetry::SkewHermitian);
  for (int c = 0; c < 5; ++c)
    sig.set(c, c, nt::random_skew_hermitian(
                      rng, sizes[static_cast<std::size_t>(c)]));

  FlopLedger lean_fold, full_fold;
  HscTrace trace;
  const HscFactorization lean_fact = negf::hsc_fold(a, lean_fold);
  const HscFactorization full_fact = negf::hsc_fold(a, full_fold, &trace);
  CHECK(lean_fold.multiply_ops == full_fold.multiply_ops);
  CHECK(lean_fold.inverse_ops == full_fold.inverse_ops);
  REQUIRE(lean_fact.psi.size() == full_fact.psi.size());
  for (std::size_t c = 0; c < lean_fact.psi.size(); ++c) {
    CHECK(nt::max_abs_diff(lean_fact.inv_diag[c], full_fact.inv_diag[c]) ==
          0.0);
    REQUIRE(lean_fact.psi[c].size() == full_fact.psi[c].size());
    for (std::size_t k = 0; k < lean_fact.psi[c].size(); ++k) {
      CHECK(lean_fact.psi[c][k].first == full_fact.psi[c][k].first);
      CHECK(nt::max_abs_diff(lean_fact.psi[c][k].second,
                             full_fact.psi[c][k].second) == 0.0);
    }
  }

  FlopLedger lean_gr, full_gr;
  const std::vector<CMatrix> gr_lean = negf::hsc_gr(lean_fact, lean_gr);
  const std::vector<CMatrix> gr_full = negf::hsc_gr(full_fact, full_gr, &trace);
  CHECK(lean_gr.multiply_ops == full_gr.multiply_ops);
  for (std::size_t c = 0; c < gr_lean.size(); ++c)
    CHECK(nt::max_abs_diff(gr_lean[c], gr_full[c]) == 0.0);

  FlopLedger lean_gl, full_gl;
  const HscGlessResult gl_lean = negf::hsc_gless(lean_fact, sig, lean_gl);
  const HscGlessResult gl_full =
      negf::hsc_gless(full_fact, sig, full_gl, &trace);
  for (std::size_t c = 0; c < gl_lean.gless_diag.size(); ++c) {
    CHECK(nt::max_abs_diff(gl_lean.gr_diag[c], gl_full.gr_diag[c]) == 0.0);
    CHECK(nt::max_abs_diff(gl_lean.gless_diag[c], gl_full.gless_diag[c]) ==
          0.0);
  }
  // The full replay also materializes mirror and lower-wedge blocks, so its
  // lesser pass must charge strictly more.
  CHECK(full_gl.multiply_ops > lean_gl.multiply_ops);
}

// ---------------------------------------------------------------------------
// Cross-solver and oracle comparisons.
// ---------------------------------------------------------------------------

TEST_CASE("chain partition reproduces the layered solver") {
  negf::SyntheticSpec spec;
  spec.nx = 5;
  spec.ny = 6;
  spec.seed = 11;
  spec.fuzz = true;
  const negf::SyntheticSystem sys = negf::make_synthetic_system(spec);
  const SparseCoo acoo = sys.system_matrix(0.7);

  FlopLedger rgf_ledger;
  negf::LayeredSystem lsys = negf::layered_from_coo(acoo, sys.layers);
  negf::attach_sigma_lesser(lsys, sys.sigma_lesser);
  const negf::RgfGrResult rgr = negf::rgf_gr(lsys, {}, rgf_ledger);
  const std::vector<CMatrix> rgl = negf::rgf_gless(lsys, rgr, rgf_ledger);

  auto tree = std::make_shared<SeparatorTree>(
      negf::rgf_chain_partition(sys.layers, acoo.n));
  const ClusterBlockMatrix a =
      negf::group_by_partition(acoo, tree, BlockSymmetry::ComplexSymmetric);
  const ClusterBlockMatrix sig = negf::group_by_partition(
      sys.sigma_lesser, tree, BlockSymmetry::SkewHermitian);
  FlopLedger hsc_ledger;
  const HscFactorization fact = negf::hsc_fold(a, hsc_ledger);
  const HscGlessResult res = negf::hsc_gless(fact, sig, hsc_ledger);

  REQUIRE(res.gr_diag.size() == sys.layers.size());
  for (std::size_t l = 0; l < sys.layers.size(); ++l) {
    CHECK(nt::max_abs_diff(res.gr_diag[l], rgr.gr_diag[l]) <= 1e-10);
    CHECK(nt::max_abs_diff(res.gless_diag[l], rgl[l]) <= 1e-10);
  }
}

TEST_CASE("nested dissection matches the dense oracle on synthetic systems") {
  struct Case {
    int nx, ny;
    std::uint64_t seed;
    bool fuzz;
  };
  const std::vector<Case> cases = {
      {4, 6, 21, true}, {5, 5, 22, true}, {6, 4, 23, true}, {5, 6, 24, false}};
  for (const Case& c : cases) {
    CAPTURE(c.seed);
    negf::SyntheticSpec spec;
    spec.nx = c.nx;
    spec.ny = c.ny;
    spec.seed = c.seed;
    spec.fuzz = c.fuzz;
    spec.coupling_t = 1.3;
    const negf::SyntheticSystem sys = negf::make_synthetic_system(spec);
    const SparseCoo acoo = sys.system_matrix(0.7);

    auto tree = std::make_shared<SeparatorTree>(negf::nested_dissection(
        sys.graph, {sys.layers.front(), sys.layers.back()}, 6, sys.coords));
    CHECK(tree->levels() >= 3);
    CHECK(negf::validate_partition(*tree, sys.graph).violations.empty());

    const ClusterBlockMatrix a =
        negf::group_by_partition(acoo, tree, BlockSymmetry::ComplexSymmetric);
    const ClusterBlockMatrix sig = negf::group_by_partition(
        sys.sigma_lesser, tree, BlockSymmetry::SkewHermitian);
    FlopLedger ledger;
    const HscFactorization fact = negf::hsc_fold(a, ledger);
    const HscGlessResult res = negf::hsc_gless(fact, sig, ledger);

    const CMatrix gd = negf::dense_gr(acoo);
    const CMatrix gld =
        negf::dense_gless(gd, negf::dense_from_coo(sys.sigma_lesser));
    for (int cl = 0; cl < tree->num_clusters(); ++cl) {
      const auto& dofs = tree->cluster(cl).dofs;
      CHECK(nt::max_abs_diff(res.gr_diag[static_cast<std::size_t>(cl)],
                             negf::submatrix(gd, dofs, dofs)) <= 1e-9);
      CHECK(nt::max_abs_diff(res.gless_diag[static_cast<std::size_t>(cl)],
                             negf::submatrix(gld, dofs, dofs)) <= 1e-9);
      CHECK(negf::skew_hermitian_defect(
                res.gless_diag[static_cast<std::size_t>(cl)]) <= 1e-11);
    }
  }
}

TEST_CASE("a leaf coupled only to its grandparent separator") {
  // Chain 0 -> 1 -> 2 where the leaf skips its parent: the solver has to
  // materialize the G and P row entries toward the parent purely from
  // mirrored ancestor blocks.
  std::mt19937_64 rng(17);
  std::vector<SeparatorTree::Cluster> cs(3);
  cs[0].dofs = {0, 1};
  cs[0].parent = 1;
  cs[1].dofs = {2, 3};
  cs[1].parent = 2;
  cs[2].dofs = {4, 5};
  cs[2].parent = -1;
  auto tree = std::make_shared<SeparatorTree>(
      SeparatorTree::build(std::move(cs), 6));

  const std::vector<int> r0 = {0, 1}, r1 = {2, 3}, r2 = {4, 5};
  const CMatrix a00 = nt::random_complex_symmetric(rng, 2);
  const CMatrix a11 = nt::random_complex_symmetric(rng, 2);
  const CMatrix a22 = nt::random_complex_symmetric(rng, 2);
  const CMatrix a02 = nt::random_matrix(rng, 2, 2);
  const CMatrix a12 = nt::random_matrix(rng, 2, 2);
  const CMatrix s00 = nt::random_skew_hermitian(rng, 2);
  const CMatrix s22 = nt::random_skew_hermitian(rng, 2);

  ClusterBlockMatrix a(tree, BlockSymmetry::ComplexSymmetric);
  a.set(0, 0, a00);
  a.set(1, 1, a11);
  a.set(2, 2, a22);
  a.set(0, 2, a02);
  a.set(2, 0, tr(a02));
  a.set(1, 2, a12);
  a.set(2, 1, tr(a12));
  ClusterBlockMatrix sig(tree, BlockSymmetry::SkewHermitian);
  sig.set(0, 0, s00);
  sig.set(2, 2, s22);

  FlopLedger lean_ledger, full_ledger;
  HscTrace trace;
  const HscFactorization fact = negf::hsc_fold(a, lean_ledger);
  const HscFactorization fact_full = negf::hsc_fold(a, full_ledger, &trace);
  // The leaf folds straight past its parent: exactly one Psi entry.
  REQUIRE(fact.psi[0].size() == 1);
  CHECK(fact.psi[0][0].first == 2);

  const HscGlessResult lean = negf::hsc_gless(fact, sig, lean_ledger);
  const HscGlessResult full =
      negf::hsc_gless(fact_full, sig, full_ledger, &trace);
  for (int c = 0; c < 3; ++c) {
    CHECK(nt::max_abs_diff(lean.gr_diag[static_cast<std::size_t>(c)],
                           full.gr_diag[static_cast<std::size_t>(c)]) == 0.0);
    CHECK(nt::max_abs_diff(lean.gless_diag[static_cast<std::size_t>(c)],
                           full.gless_diag[static_cast<std::size_t>(c)]) ==
          0.0);
  }

  CMatrix ad(6, 6), sd(6, 6);
  setb(ad, r0, r0, a00);
  setb(ad, r1, r1, a11);
  setb(ad, r2, r2, a22);
  setb(ad, r0, r2, a02);
  setb(ad, r2, r0, tr(a02));
  setb(ad, r1, r2, a12);
  setb(ad, r2, r1, tr(a12));
  setb(sd, r0, r0, s00);
  setb(sd, r2, r2, s22);
  const CMatrix gd = negf::dense_gr(ad);
  const CMatrix gld = negf::dense_gless(gd, sd);
  const std::vector<const std::vector<int>*> ranges = {&r0, &r1, &r2};
  for (int c = 0; c < 3; ++c) {
    CHECK(nt::max_abs_diff(
              lean.gr_diag[static_cast<std::size_t>(c)],
              getb(gd, *ranges[static_cast<std::size_t>(c)],
                   *ranges[static_cast<std::size_t>(c)])) <= 1e-11);
    CHECK(nt::max_abs_diff(
              lean.gless_diag[static_cast<std::size_t>(c)],
              getb(gld, *ranges[static_cast<std::size_t>(c)],
                   *ranges[static_cast<std::size_t>(c)])) <= 1e-11);
  }
}

// ---------------------------------------------------------------------------
// Validation and degenerate inputs.
// ---------------------------------------------------------------------------

namespace {

// A small valid system on the two-leaf tree, reused by the error tests.
struct TwoLeafSystem {
  std::shared_ptr<const SeparatorTree> tree;
  ClusterBlockMatrix a;
  CMatrix s00, s11, s22;
};

TwoLeafSystem make_two_leaf_system(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto tree = two_leaf_tree(2, 2, 2);
  ClusterBlockMatrix a(tree, BlockSymmetry::ComplexSymmetric);
  const CMatrix a02 = nt::random_matrix(rng, 2, 2);
  const CMatrix a12 = nt::random_matrix(rng, 2, 2);
  a.set(0, 0, nt::random_complex_symmetric(rng, 2));
  a.set(1, 1, nt::random_complex_symmetric(rng, 2));
  a.set(2, 2, nt::random_complex_symmetric(rng, 2));
  a.set(0, 2, a02);
  a.set(2, 0, tr(a02));
  a.set(1, 2, a12);
  a.set(2, 1, tr(a12));
  return {tree, std::move(a), nt::random_skew_hermitian(rng, 2),
          nt::random_skew_hermitian(rng, 2), nt::random_skew_hermitian(rng, 2)};
}

}  // namespace

TEST_CASE("sigma validation: partition identity, shape, and skewness") {
  TwoLeafSystem ts = make_two_leaf_system(41);
  FlopLedger ledger;
  const HscFactorization fact = negf::hsc_fold(ts.a, ledger);

  SUBCASE("a structurally identical fresh tree is accepted") {
    std::vector<SeparatorTree::Cluster> cs(3);
    cs[0].dofs = {0, 1};
    cs[0].parent = 2;
    cs[1].dofs = {2, 3};
    cs[1].parent = 2;
    cs[2].dofs = {4, 5};
    cs[2].parent = -1;
    auto twin = std::make_shared<SeparatorTree>(
        SeparatorTree::build(std::move(cs), 6));
    REQUIRE(twin.get() != ts.tree.get());
    ClusterBlockMatrix sig_twin(twin, BlockSymmetry::SkewHermitian);
    sig_twin.set(0, 0, ts.s00);
    sig_twin.set(2, 2, ts.s22);
    ClusterBlockMatrix sig_same(ts.tree, BlockSymmetry::SkewHermitian);
    sig_same.set(0, 0, ts.s00);
    sig_same.set(2, 2, ts.s22);
    FlopLedger l1, l2;
    const HscGlessResult via_twin = negf::hsc_gless(fact, sig_twin, l1);
    const HscGlessResult via_same = negf::hsc_gless(fact, sig_same, l2);
    for (int c = 0; c < 3; ++c)
      CHECK(nt::max_abs_diff(
                via_twin.gless_diag[static_cast<std::size_t>(c)],
                via_same.gless_diag[static_cast<std::size_t>(c)]) == 0.0);
  }

  SUBCASE("a different dof assignment is rejected") {
    std::vector<SeparatorTree::Cluster> cs(3);
    cs[0].dofs = {2, 3};  // leaves swapped relative to the factorization
    cs[0].parent = 2;
    cs[1].dofs = {0, 1};
    cs[1].parent = 2;
    cs[2].dofs = {4, 5};
    cs[2].parent = -1;
    auto other = std::make_shared<SeparatorTree>(
        SeparatorTree::build(std::move(cs), 6));
    ClusterBlockMatrix sig(other, BlockSymmetry::SkewHermitian);
    sig.set(0, 0, ts.s00);
    FlopLedger l;
    CHECK_THROWS_AS(negf::hsc_gless(fact, sig, l), negf::ContractViolation);
  }

  SUBCASE("an off-diagonal sigma block is rejected") {
    ClusterBlockMatrix sig(ts.tree, BlockSymmetry::SkewHermitian);
    sig.set(0, 0, ts.s00);
    sig.set(0, 2, CMatrix(2, 2));
    FlopLedger l;
    CHECK_THROWS_AS(negf::hsc_gless(fact, sig, l), negf::ContractViolation);
  }

  SUBCASE("a non-skew-Hermitian block is rejected") {
    std::mt19937_64 rng(5);
    ClusterBlockMatrix sig(ts.tree, BlockSymmetry::SkewHermitian);
    sig.set(1, 1, nt::random_complex_symmetric(rng, 2));
    FlopLedger l;
    CHECK_THROWS_AS(negf::hsc_gless(fact, sig, l),
                    negf::NonSkewHermitianInput);
  }
}

TEST_CASE("a missing diagonal block folds as zero and reports singularity") {
  std::mt19937_64 rng(43);
  auto tree = two_leaf_tree(2, 2, 2);
  ClusterBlockMatrix a(tree, BlockSymmetry::ComplexSymmetric);
  // No (0,0) block at all.
  a.set(1, 1, nt::random_complex_symmetric(rng, 2));
  a.set(2, 2, nt::random_complex_symmetric(rng, 2));
  const CMatrix a02 = nt::random_matrix(rng, 2, 2);
  a.set(0, 2, a02);
  a.set(2, 0, tr(a02));
  FlopLedger ledger;
  CHECK_THROWS_AS(negf::hsc_fold(a, ledger), negf::SingularBlock);
}

TEST_CASE("absent sigma yields zero lesser blocks and no extra charges") {
  TwoLeafSystem ts = make_two_leaf_system(44);
  FlopLedger fold_ledger;
  const HscFactorization fact = negf::hsc_fold(ts.a, fold_ledger);

  FlopLedger gr_ledger;
  const std::vector<CMatrix> gr = negf::hsc_gr(fact, gr_ledger);

  ClusterBlockMatrix sig(ts.tree, BlockSymmetry::SkewHermitian);
  FlopLedger gless_ledger;
  const HscGlessResult res = negf::hsc_gless(fact, sig, gless_ledger);
  CHECK(gless_ledger.multiply_ops == gr_ledger.multiply_ops);
  CHECK(gless_ledger.inverse_ops == gr_ledger.inverse_ops);
  for (int c = 0; c < 3; ++c) {
    CHECK(nt::max_abs_diff(res.gr_diag[static_cast<std::size_t>(c)],
                           gr[static_cast<std::size_t>(c)]) == 0.0);
    const CMatrix& z = res.gless_diag[static_cast<std::size_t>(c)];
    REQUIRE(z.rows() == 2);
    REQUIRE(z.cols() == 2);
    CHECK(max_abs(z) == 0.0);
  }
}
