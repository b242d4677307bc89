#include "negf/hsc.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

#include "negf/errors.hpp"

namespace negf {

namespace {

using Key = std::pair<int, int>;
using BlockMap = std::map<Key, CMatrix>;
// A sparse row over a cluster's ancestor set: (ancestor id, block), nearest
// ancestor (lowest level) first.
using Row = std::vector<std::pair<int, CMatrix>>;

int cluster_size(const SeparatorTree& t, int id) {
  return static_cast<int>(t.cluster(id).dofs.size());
}

const CMatrix* row_find(const Row& row, int j) {
  for (const auto& e : row)
    if (e.first == j) return &e.second;
  return nullptr;
}

// Finds or inserts the block (owner, j), keeping the row ordered by
// ascending ancestor level.
CMatrix& row_block_mut(Row& row, const SeparatorTree& t, int owner, int j) {
  const int lj = t.cluster(j).level;
  auto it = row.begin();
  for (; it != row.end(); ++it) {
    if (it->first == j) return it->second;
    if (t.cluster(it->first).level > lj) break;
  }
  it = row.insert(it, {j, CMatrix(cluster_size(t, owner),
                                  cluster_size(t, j))});
  return it->second;
}

const CMatrix* map_find(const BlockMap& m, int i, int j) {
  auto it = m.find({i, j});
  return it == m.end() ? nullptr : &it->second;
}

CMatrix& map_block_mut(BlockMap& m, const SeparatorTree& t, int i, int j) {
  auto it = m.find({i, j});
  if (it == m.end())
    it = m.emplace(Key{i, j}, CMatrix(cluster_size(t, i), cluster_size(t, j)))
             .first;
  return it->second;
}

CMatrix dense_snapshot(const SeparatorTree& t, const BlockMap& m) {
  CMatrix d(t.num_dofs(), t.num_dofs());
  for (const auto& kv : m) {
    const auto& di = t.cluster(kv.first.first).dofs;
    const auto& dj = t.cluster(kv.first.second).dofs;
    for (std::size_t r = 0; r < di.size(); ++r)
      for (std::size_t c = 0; c < dj.size(); ++c)
        d(di[r], dj[c]) = kv.second(static_cast<int>(r), static_cast<int>(c));
  }
  return d;
}

bool block_is_diagonal(const CMatrix& s) {
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j)
      if (i != j && s(i, j) != cplx(0.0, 0.0)) return false;
  return s.rows() == s.cols();
}

std::vector<cplx> diag_of(const CMatrix& s) {
  std::vector<cplx> d(static_cast<std::size_t>(s.rows()));
  for (int i = 0; i < s.rows(); ++i) d[static_cast<std::size_t>(i)] = s(i, i);
  return d;
}

// Per-cluster view of a validated block-diagonal Sigma^<.
struct SigmaView {
  const CMatrix* block = nullptr;  // null when the cluster carries no block
  bool diagonal = false;
  std::vector<cplx> diag;
};

std::vector<SigmaView> validate_sigma(const HscFactorization& fact,
                                      const ClusterBlockMatrix& sigma) {
  const SeparatorTree& t = *fact.tree;
  if (sigma.tree_ptr().get() != fact.tree.get()) {
    // Allow a structurally identical tree (same clusters, same dofs).
    const SeparatorTree& st = sigma.tree();
    if (st.num_clusters() != t.num_clusters() ||
        st.num_dofs() != t.num_dofs())
      throw ContractViolation("sigma_lesser lives on a different partition");
    for (int c = 0; c < t.num_clusters(); ++c)
      if (st.cluster(c).dofs != t.cluster(c).dofs ||
          st.cluster(c).parent != t.cluster(c).parent)
        throw ContractViolation("sigma_lesser lives on a different partition");
  }
  std::vector<SigmaView> view(static_cast<std::size_t>(t.num_clusters()));
  for (const auto& key : sigma.keys()) {
    if (key.first != key.second)
      throw ContractViolation(
          "sigma_lesser must be block diagonal on the cluster partition");
    const CMatrix& s = sigma.block(key.first, key.second);
    if (skew_hermitian_defect(s) > 1e-10)
      throw NonSkewHermitianInput("sigma_lesser block of cluster " +
                                  std::to_string(key.first) +
                                  " is not skew-Hermitian");
    SigmaView& v = view[static_cast<std::size_t>(key.first)];
    v.block = &s;
    v.diagonal = block_is_diagonal(s);
    if (v.diagonal) v.diag = diag_of(s);
  }
  return view;
}

// Sigma^<_ii * conj(g), exploiting a diagonal Sigma block when present.
CMatrix sigma_seed(const SigmaView& v, const CMatrix& g, FlopLedger& ledger) {
  if (v.diagonal) return diag_scale_left(v.diag, conjugated(g), ledger);
  return matmul(*v.block, conjugated(g), ledger);
}

// ---------------------------------------------------------------------------
// Lean engine: depth-first extraction, rows stored over ancestor columns
// only, mirrors recovered from symmetry, rows freed once a subtree finishes.
// ---------------------------------------------------------------------------
class LeanSolver {
 public:
  LeanSolver(const HscFactorization& fact, const std::vector<SigmaView>* sigma,
             FlopLedger& ledger)
      : f_(fact), t_(*fact.tree), sigma_(sigma), ledger_(ledger) {
    const std::size_t nc = static_cast<std::size_t>(t_.num_clusters());
    grow_.resize(nc);
    gdiag_.resize(nc);
    if (sigma_) {
      nrow_.resize(nc);
      ndiag_.resize(nc);
      prow_.resize(nc);
      pdiag_.resize(nc);
    }
  }

  void run() {
    gdiag_[static_cast<std::size_t>(t_.root())] =
        f_.inv_diag[static_cast<std::size_t>(t_.root())];
    dfs_g(t_.root());
    if (!sigma_) return;
    bool any_seed = false;
    for (const auto& v : *sigma_)
      if (v.block != nullptr) any_seed = true;
    if (any_seed) {
      n_fold();
      dfs_p(t_.root());
    } else {
      for (int c = 0; c < t_.num_clusters(); ++c)
        pdiag_[static_cast<std::size_t>(c)] =
            CMatrix(cluster_size(t_, c), cluster_size(t_, c));
    }
  }

  std::vector<CMatrix> take_gr() { return std::move(gdiag_); }
  std::vector<CMatrix> take_gless() { return std::move(pdiag_); }

 private:
  // G_{k,j} for two path-related clusters, by value semantics via the
  // accumulation below (symmetry: G_{j,k} = G_{k,j}^T).
  void accumulate_g(CMatrix& acc, const CMatrix& psi, int k, int j) {
    if (k == j) {
      add_inplace(acc, matmul(psi, gdiag_[static_cast<std::size_t>(j)],
                              ledger_));
      return;
    }
    if (t_.cluster(k).level < t_.cluster(j).level) {
      const CMatrix* b = row_find(grow_[static_cast<std::size_t>(k)], j);
      if (!b) throw ContractViolation("missing G row block");
      add_inplace(acc, matmul(psi, *b, ledger_));
    } else {
      const CMatrix* b = row_find(grow_[static_cast<std::size_t>(j)], k);
      if (!b) throw ContractViolation("missing G row block");
      add_inplace(acc, matmul(psi, adjoint(*b, AdjointMode::Transpose),
                              ledger_));
    }
  }

  // P_{k,j}: lower-wedge values come from the skew mirror of the stored row.
  void accumulate_p(CMatrix& acc, const CMatrix& psi, int k, int j) {
    if (k == j) {
      add_inplace(acc, matmul(psi, pdiag_[static_cast<std::size_t>(j)],
                              ledger_));
      return;
    }
    if (t_.cluster(k).level < t_.cluster(j).level) {
      const CMatrix* b = row_find(prow_[static_cast<std::size_t>(k)], j);
      if (!b) throw ContractViolation("missing P row block");
      add_inplace(acc, matmul(psi, *b, ledger_));
    } else {
      const CMatrix* b = row_find(prow_[static_cast<std::size_t>(j)], k);
      if (!b) throw ContractViolation("missing P row block");
      // P_{k,j} = -(P_{j,k})^dagger
      sub_inplace(acc,
                  matmul(psi, adjoint(*b, AdjointMode::ConjugateTranspose),
                         ledger_));
    }
  }

  void extract_g_row(int x) {
    const auto& anc = t_.ancestors(x);
    const auto& psis = f_.psi[static_cast<std::size_t>(x)];
    Row& row = grow_[static_cast<std::size_t>(x)];
    row.reserve(anc.size());
    for (int j : anc) {
      CMatrix acc(cluster_size(t_, x), cluster_size(t_, j));
      for (const auto& pk : psis) accumulate_g(acc, pk.second, pk.first, j);
      row.push_back({j, std::move(acc)});
    }
    CMatrix d = f_.inv_diag[static_cast<std::size_t>(x)];
    for (const auto& pk : psis) {
      const CMatrix* gxk = row_find(row, pk.first);
      add_inplace(d, matmul(pk.second, adjoint(*gxk, AdjointMode::Transpose),
                            ledger_));
    }
    gdiag_[static_cast<std::size_t>(x)] = std::move(d);
  }

  void seed_n(int x) {
    const SigmaView& v = (*sigma_)[static_cast<std::size_t>(x)];
    if (!v.block) return;
    ndiag_[static_cast<std::size_t>(x)] =
        sigma_seed(v, gdiag_[static_cast<std::size_t>(x)], ledger_);
    Row& out = nrow_[static_cast<std::size_t>(x)];
    for (const auto& e : grow_[static_cast<std::size_t>(x)])
      out.push_back({e.first, sigma_seed(v, e.second, ledger_)});
  }

  void dfs_g(int x) {
    if (x != t_.root()) extract_g_row(x);
    if (sigma_) seed_n(x);
    for (int c : t_.children(x)) dfs_g(c);
    Row().swap(grow_[static_cast<std::size_t>(x)]);
  }

  void n_fold() {
    for (int i : t_.fold_order()) {
      const Row& row = nrow_[static_cast<std::size_t>(i)];
      if (row.empty()) continue;
      for (const auto& jp : f_.psi[static_cast<std::size_t>(i)]) {
        const int j = jp.first;
        const CMatrix psi_t = adjoint(jp.second, AdjointMode::Transpose);
        const int lj = t_.cluster(j).level;
        for (const auto& ke : row) {
          const int k = ke.first;
          const int lk = t_.cluster(k).level;
          if (lk < lj) continue;  // lower fill: never read for diagonals
          CMatrix& dst =
              k == j ? ndiag_mut(j)
                     : row_block_mut(nrow_[static_cast<std::size_t>(j)], t_, j,
                                     k);
          add_inplace(dst, matmul(psi_t, ke.second, ledger_));
        }
      }
    }
  }

  CMatrix& ndiag_mut(int j) {
    CMatrix& d = ndiag_[static_cast<std::size_t>(j)];
    if (d.rows() != cluster_size(t_, j))
      d = CMatrix(cluster_size(t_, j), cluster_size(t_, j));
    return d;
  }

  void extract_p_row(int x) {
    const auto& anc = t_.ancestors(x);
    const auto& psis = f_.psi[static_cast<std::size_t>(x)];
    const CMatrix& inv = f_.inv_diag[static_cast<std::size_t>(x)];
    Row& nrow = nrow_[static_cast<std::size_t>(x)];
    Row& row = prow_[static_cast<std::size_t>(x)];
    row.reserve(anc.size());
    for (int j : anc) {
      const CMatrix* seed = row_find(nrow, j);
      CMatrix acc = seed ? matmul(inv, *seed, ledger_)
                         : CMatrix(cluster_size(t_, x), cluster_size(t_, j));
      for (const auto& pk : psis) accumulate_p(acc, pk.second, pk.first, j);
      row.push_back({j, std::move(acc)});
    }
    CMatrix& nd = ndiag_[static_cast<std::size_t>(x)];
    CMatrix d = nd.rows() == cluster_size(t_, x)
                    ? matmul(inv, nd, ledger_)
                    : CMatrix(cluster_size(t_, x), cluster_size(t_, x));
    for (const auto& pk : psis) {
      const CMatrix* pxk = row_find(row, pk.first);
      // P_{k,x} = -(P_{x,k})^dagger
      sub_inplace(d, matmul(pk.second,
                            adjoint(*pxk, AdjointMode::ConjugateTranspose),
                            ledger_));
    }
    pdiag_[static_cast<std::size_t>(x)] = std::move(d);
    Row().swap(nrow);
    nd = CMatrix();
  }

  void dfs_p(int x) {
    if (x != t_.root()) {
      extract_p_row(x);
    } else {
      const CMatrix& nd = ndiag_[static_cast<std::size_t>(x)];
      pdiag_[static_cast<std::size_t>(x)] =
          nd.rows() == cluster_size(t_, x)
              ? matmul(f_.inv_diag[static_cast<std::size_t>(x)], nd, ledger_)
              : CMatrix(cluster_size(t_, x), cluster_size(t_, x));
      Row().swap(nrow_[static_cast<std::size_t>(x)]);
      ndiag_[static_cast<std::size_t>(x)] = CMatrix();
    }
    for (int c : t_.children(x)) dfs_p(c);
    Row().swap(prow_[static_cast<std::size_t>(x)]);
  }

  const HscFactorization& f_;
  const SeparatorTree& t_;
  const std::vector<SigmaView>* sigma_;
  FlopLedger& ledger_;
  std::vector<Row> grow_, nrow_, prow_;
  std::vector<CMatrix> gdiag_, ndiag_, pdiag_;
};

// ---------------------------------------------------------------------------
// Full-pattern engine: literal level-by-level schedule with mirrors, lower
// fills and dense per-level snapshots.  Fixture-sized inputs only.
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> clusters_by_level(const SeparatorTree& t) {
  std::vector<std::vector<int>> by_level(
      static_cast<std::size_t>(t.levels()) + 1);
  for (int c = 0; c < t.num_clusters(); ++c)
    by_level[static_cast<std::size_t>(t.cluster(c).level)].push_back(c);
  return by_level;
}

void full_gr(const HscFactorization& fact, FlopLedger& ledger, HscTrace& trace,
             BlockMap& g) {
  const SeparatorTree& t = *fact.tree;
  const int num_levels = t.levels();
  for (int c = 0; c < t.num_clusters(); ++c)
    g.emplace(Key{c, c}, fact.inv_diag[static_cast<std::size_t>(c)]);
  trace.g_levels.assign(static_cast<std::size_t>(num_levels), CMatrix());
  trace.g_levels[static_cast<std::size_t>(num_levels) - 1] =
      dense_snapshot(t, g);
  const auto by_level = clusters_by_level(t);
  for (int l = num_levels - 1; l >= 1; --l) {
    for (int i : by_level[static_cast<std::size_t>(l)]) {
      const auto& psis = fact.psi[static_cast<std::size_t>(i)];
      for (int j : t.ancestors(i)) {
        CMatrix acc(cluster_size(t, i), cluster_size(t, j));
        for (const auto& pk : psis) {
          const CMatrix* gkj = map_find(g, pk.first, j);
          if (!gkj) throw ContractViolation("missing G block");
          add_inplace(acc, matmul(pk.second, *gkj, ledger));
        }
        g[{j, i}] = adjoint(acc, AdjointMode::Transpose);
        g[{i, j}] = std::move(acc);
      }
      CMatrix& d = map_block_mut(g, t, i, i);
      for (const auto& pk : psis) {
        const CMatrix* gki = map_find(g, pk.first, i);
        add_inplace(d, matmul(pk.second, *gki, ledger));
      }
    }
    trace.g_levels[static_cast<std::size_t>(l) - 1] = dense_snapshot(t, g);
  }
}

void full_gless(const HscFactorization& fact,
                const std::vector<SigmaView>& sigma, FlopLedger& ledger,
                HscTrace& trace, const BlockMap& g, BlockMap& p) {
  const SeparatorTree& t = *fact.tree;
  const int num_levels = t.levels();
  const auto by_level = clusters_by_level(t);

  // Step 1: N = Sigma^< (G^(0))^dagger, block by block over G's pattern.
  BlockMap n;
  for (const auto& kv : g) {
    const SigmaView& v = sigma[static_cast<std::size_t>(kv.first.first)];
    if (!v.block) continue;
    n.emplace(kv.first, sigma_seed(v, kv.second, ledger));
  }
  trace.n_levels.assign(static_cast<std::size_t>(num_levels), CMatrix());
  trace.n_levels[0] = dense_snapshot(t, n);

  // Step 2: fold N bottom-up (both wedges, literal schedule).
  for (int l = 1; l <= num_levels - 1; ++l) {
    for (int i : by_level[static_cast<std::size_t>(l)]) {
      for (const auto& jp : fact.psi[static_cast<std::size_t>(i)]) {
        const CMatrix psi_t = adjoint(jp.second, AdjointMode::Transpose);
        for (int k : t.ancestors(i)) {
          const CMatrix* nik = map_find(n, i, k);
          if (!nik) continue;
          add_inplace(map_block_mut(n, t, jp.first, k),
                      matmul(psi_t, *nik, ledger));
        }
      }
    }
    trace.n_levels[static_cast<std::size_t>(l)] = dense_snapshot(t, n);
  }

  // Step 3: P = G^(L-1) N^(L-1) — a block-diagonal left multiplication.
  for (const auto& kv : n)
    p.emplace(kv.first,
              matmul(fact.inv_diag[static_cast<std::size_t>(kv.first.first)],
                     kv.second, ledger));
  trace.p_levels.assign(static_cast<std::size_t>(num_levels), CMatrix());
  trace.p_levels[static_cast<std::size_t>(num_levels) - 1] =
      dense_snapshot(t, p);

  // Step 4: extract top-down with the skew mirror rule.
  for (int l = num_levels - 1; l >= 1; --l) {
    for (int i : by_level[static_cast<std::size_t>(l)]) {
      const auto& psis = fact.psi[static_cast<std::size_t>(i)];
      for (int j : t.ancestors(i)) {
        CMatrix acc = map_find(p, i, j)
                          ? *map_find(p, i, j)
                          : CMatrix(cluster_size(t, i), cluster_size(t, j));
        for (const auto& pk : psis) {
          const CMatrix* pkj = map_find(p, pk.first, j);
          if (!pkj) continue;
          add_inplace(acc, matmul(pk.second, *pkj, ledger));
        }
        p[{j, i}] = scaled(adjoint(acc, AdjointMode::ConjugateTranspose),
                           cplx(-1.0, 0.0), ledger);
        p[{i, j}] = std::move(acc);
      }
      CMatrix& d = map_block_mut(p, t, i, i);
      for (const auto& pk : psis) {
        const CMatrix* pki = map_find(p, pk.first, i);
        if (!pki) continue;
        add_inplace(d, matmul(pk.second, *pki, ledger));
      }
    }
    trace.p_levels[static_cast<std::size_t>(l) - 1] = dense_snapshot(t, p);
  }
}

}  // namespace

HscFactorization hsc_fold(ClusterBlockMatrix a, FlopLedger& ledger,
                          HscTrace* trace) {
  std::shared_ptr<const SeparatorTree> tree = a.tree_ptr();
  const SeparatorTree& t = *tree;
  const int nc = t.num_clusters();
  const bool full = trace != nullptr;

  HscFactorization fact;
  fact.tree = tree;
  fact.psi.resize(static_cast<std::size_t>(nc));
  fact.inv_diag.resize(static_cast<std::size_t>(nc));

  // Direct access to the block storage through the public interface.
  auto has = [&a](int i, int j) { return a.has(i, j); };

  if (trace) {
    trace->a_levels.clear();
    BlockMap snap;
    for (const auto& key : a.keys()) snap.emplace(key, a.block(key.first,
                                                               key.second));
    trace->a_levels.push_back(dense_snapshot(t, snap));
  }

  const auto order = t.fold_order();
  const int num_levels = t.levels();
  std::size_t idx = 0;
  for (int l = 1; l <= num_levels - 1; ++l) {
    while (idx < order.size() && t.cluster(order[idx]).level == l) {
      const int i = order[idx];
      ++idx;
      const CMatrix& adiag =
          has(i, i) ? a.block(i, i) : a.block_mut(i, i);  // zero when absent
      fact.inv_diag[static_cast<std::size_t>(i)] = inverse(adiag, ledger);
      const CMatrix& inv = fact.inv_diag[static_cast<std::size_t>(i)];

      // Collect the stored ancestor row (fill ancestors), nearest first.
      std::vector<int> js;
      std::vector<const CMatrix*> arow;
      for (int j : t.ancestors(i)) {
        if (has(i, j)) {
          js.push_back(j);
          arow.push_back(&a.block(i, j));
        }
      }
      auto& psi_row = fact.psi[static_cast<std::size_t>(i)];
      psi_row.reserve(js.size());
      for (std::size_t p = 0; p < js.size(); ++p)
        psi_row.push_back(
            {js[p],
             scaled(matmul(inv, *arow[p], ledger), cplx(-1.0, 0.0), ledger)});

      // Schur updates on ancestor pairs: one evaluation per unordered pair,
      // written to the (descendant, ancestor) wedge; the mirror is its
      // transpose (stored only in full-pattern mode).
      for (std::size_t p = 0; p < js.size(); ++p) {
        for (std::size_t q = p; q < js.size(); ++q) {
          CMatrix u = matmul(adjoint(psi_row[p].second,
                                     AdjointMode::Transpose),
                             *arow[q], ledger);
          if (full && js[p] != js[q])
            add_inplace(a.block_mut(js[q], js[p]),
                        adjoint(u, AdjointMode::Transpose));
          add_inplace(a.block_mut(js[p], js[q]), u);
        }
      }

      // Drop the folded row (kept as explicit zeros conceptually).
      for (int j : js) {
        a.erase(i, j);
        a.erase(j, i);
      }
      if (!full) a.erase(i, i);
    }
    if (trace) {
      BlockMap snap;
      for (const auto& key : a.keys())
        snap.emplace(key, a.block(key.first, key.second));
      trace->a_levels.push_back(dense_snapshot(t, snap));
    }
  }

  // Invert the fully folded root block.
  const int root = t.root();
  const CMatrix& rd =
      has(root, root) ? a.block(root, root) : a.block_mut(root, root);
  fact.inv_diag[static_cast<std::size_t>(root)] = inverse(rd, ledger);
  return fact;
}

std::vector<CMatrix> hsc_gr(const HscFactorization& fact, FlopLedger& ledger,
                            HscTrace* trace) {
  if (!trace) {
    LeanSolver solver(fact, nullptr, ledger);
    solver.run();
    return solver.take_gr();
  }
  BlockMap g;
  full_gr(fact, ledger, *trace, g);
  std::vector<CMatrix> out(
      static_cast<std::size_t>(fact.tree->num_clusters()));
  for (int c = 0; c < fact.tree->num_clusters(); ++c)
    out[static_cast<std::size_t>(c)] = *map_find(g, c, c);
  return out;
}

HscGlessResult hsc_gless(const HscFactorization& fact,
                         const ClusterBlockMatrix& sigma_lesser,
                         FlopLedger& ledger, HscTrace* trace) {
  const std::vector<SigmaView> sigma = validate_sigma(fact, sigma_lesser);
  HscGlessResult res;
  if (!trace) {
    LeanSolver solver(fact, &sigma, ledger);
    solver.run();
    res.gr_diag = solver.take_gr();
    res.gless_diag = solver.take_gless();
    return res;
  }
  const SeparatorTree& t = *fact.tree;
  BlockMap g, p;
  full_gr(fact, ledger, *trace, g);
  full_gless(fact, sigma, ledger, *trace, g, p);
  res.gr_diag.resize(static_cast<std::size_t>(t.num_clusters()));
  res.gless_diag.resize(static_cast<std::size_t>(t.num_clusters()));
  for (int c = 0; c < t.num_clusters(); ++c) {
    res.gr_diag[static_cast<std::size_t>(c)] = *map_find(g, c, c);
    const CMatrix* pd = map_find(p, c, c);
    res.gless_diag[static_cast<std::size_t>(c)] =
        pd ? *pd : CMatrix(cluster_size(t, c), cluster_size(t, c));
  }
  return res;
}

}  // namespace negf
