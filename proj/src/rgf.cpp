#include "negf/rgf.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "negf/errors.hpp"

namespace negf {

CMatrix LayerCoupling::materialize() const {
  switch (kind) {
    case CouplingKind::ScaledIdentity: {
      CMatrix b(rows, cols);
      for (int i = 0; i < rows; ++i) b(i, i) = alpha;
      return b;
    }
    case CouplingKind::Diagonal: {
      CMatrix b(rows, cols);
      for (int i = 0; i < rows; ++i) b(i, i) = diag[static_cast<size_t>(i)];
      return b;
    }
    case CouplingKind::Dense:
      return dense;
  }
  throw ContractViolation("unknown coupling kind");
}

namespace {

LayerCoupling classify_coupling(CMatrix b) {
  LayerCoupling c;
  c.rows = b.rows();
  c.cols = b.cols();
  bool diagonal = b.rows() == b.cols();
  if (diagonal) {
    for (int i = 0; i < b.rows() && diagonal; ++i)
      for (int j = 0; j < b.cols(); ++j)
        if (i != j && b(i, j) != cplx(0.0, 0.0)) {
          diagonal = false;
          break;
        }
  }
  if (diagonal) {
    bool scaled_identity = true;
    const cplx alpha = b.rows() > 0 ? b(0, 0) : cplx(0.0, 0.0);
    for (int i = 1; i < b.rows(); ++i)
      if (b(i, i) != alpha) {
        scaled_identity = false;
        break;
      }
    if (scaled_identity && alpha != cplx(0.0, 0.0)) {
      c.kind = CouplingKind::ScaledIdentity;
      c.alpha = alpha;
      return c;
    }
    c.kind = CouplingKind::Diagonal;
    c.diag.resize(static_cast<size_t>(b.rows()));
    for (int i = 0; i < b.rows(); ++i) c.diag[static_cast<size_t>(i)] = b(i, i);
    return c;
  }
  c.kind = CouplingKind::Dense;
  c.dense = std::move(b);
  return c;
}

}  // namespace

LayeredSystem layered_from_coo(const SparseCoo& a,
                               const std::vector<std::vector<int>>& layers) {
  if (layers.empty()) throw ContractViolation("layer map is empty");
  LayeredSystem sys;
  sys.n_dofs = a.n;
  sys.layers = layers;

  std::vector<int> layer_of(static_cast<size_t>(a.n), -1);
  std::vector<int> local_of(static_cast<size_t>(a.n), -1);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& dofs = sys.layers[l];
    std::sort(dofs.begin(), dofs.end());
    for (std::size_t k = 0; k < dofs.size(); ++k) {
      const int d = dofs[k];
      if (d < 0 || d >= a.n || layer_of[static_cast<size_t>(d)] != -1)
        throw ContractViolation("layer map is not a disjoint cover");
      layer_of[static_cast<size_t>(d)] = static_cast<int>(l);
      local_of[static_cast<size_t>(d)] = static_cast<int>(k);
    }
  }
  for (int d = 0; d < a.n; ++d)
    if (layer_of[static_cast<size_t>(d)] == -1)
      throw ContractViolation("layer map does not cover every dof");

  const int num_layers = static_cast<int>(layers.size());
  sys.diag.reserve(static_cast<size_t>(num_layers));
  for (int l = 0; l < num_layers; ++l) {
    const int nl = static_cast<int>(sys.layers[static_cast<size_t>(l)].size());
    sys.diag.emplace_back(nl, nl);
  }
  std::vector<CMatrix> upper, lower;
  for (int l = 0; l + 1 < num_layers; ++l) {
    const int nl = static_cast<int>(sys.layers[static_cast<size_t>(l)].size());
    const int nr =
        static_cast<int>(sys.layers[static_cast<size_t>(l) + 1].size());
    upper.emplace_back(nl, nr);
    lower.emplace_back(nr, nl);
  }

  std::vector<std::array<int, 4>> violations;
  for (const auto& e : a.entries) {
    const int lr = layer_of[static_cast<size_t>(e.row)];
    const int lc = layer_of[static_cast<size_t>(e.col)];
    const int ir = local_of[static_cast<size_t>(e.row)];
    const int ic = local_of[static_cast<size_t>(e.col)];
    if (lr == lc) {
      sys.diag[static_cast<size_t>(lr)](ir, ic) += e.val;
    } else if (lc == lr + 1) {
      upper[static_cast<size_t>(lr)](ir, ic) += e.val;
    } else if (lr == lc + 1) {
      lower[static_cast<size_t>(lc)](ir, ic) += e.val;
    } else {
      const int r = std::min(e.row, e.col);
      const int c = std::max(e.row, e.col);
      violations.push_back({r, c, layer_of[static_cast<size_t>(r)],
                            layer_of[static_cast<size_t>(c)]});
    }
  }
  if (!violations.empty()) {
    std::sort(violations.begin(), violations.end());
    violations.erase(std::unique(violations.begin(), violations.end()),
                     violations.end());
    throw PartitionViolation(
        std::to_string(violations.size()) +
            " entr(ies) couple non-adjacent layers",
        violations);
  }
  for (std::size_t l = 0; l < upper.size(); ++l) {
    const CMatrix lt = adjoint(lower[l], AdjointMode::Transpose);
    if (!lt.same_shape(upper[l]))
      throw ContractViolation("coupling block shape mismatch");
    for (int i = 0; i < lt.rows(); ++i)
      for (int j = 0; j < lt.cols(); ++j)
        if (lt(i, j) != upper[l](i, j))
          throw ContractViolation(
              "lower coupling " + std::to_string(l) +
              " is not the transpose of the upper coupling");
    sys.coupling.push_back(classify_coupling(std::move(upper[l])));
  }
  return sys;
}

void attach_sigma_lesser(LayeredSystem& sys, const SparseCoo& sigma_lesser) {
  if (sigma_lesser.n != sys.n_dofs)
    throw ContractViolation("sigma_lesser size does not match system");
  std::vector<int> layer_of(static_cast<size_t>(sys.n_dofs), -1);
  std::vector<int> local_of(static_cast<size_t>(sys.n_dofs), -1);
  for (std::size_t l = 0; l < sys.layers.size(); ++l) {
    const auto& dofs = sys.layers[l];
    for (std::size_t k = 0; k < dofs.size(); ++k) {
      layer_of[static_cast<size_t>(dofs[k])] = static_cast<int>(l);
      local_of[static_cast<size_t>(dofs[k])] = static_cast<int>(k);
    }
  }
  sys.sigma_lesser.assign(sys.diag.size(), CMatrix());
  for (const auto& e : sigma_lesser.entries) {
    const int lr = layer_of[static_cast<size_t>(e.row)];
    const int lc = layer_of[static_cast<size_t>(e.col)];
    if (lr != lc)
      throw ContractViolation(
          "sigma_lesser is not block diagonal on the layer map");
    CMatrix& blk = sys.sigma_lesser[static_cast<size_t>(lr)];
    if (blk.empty()) {
      const int nl =
          static_cast<int>(sys.layers[static_cast<size_t>(lr)].size());
      blk = CMatrix(nl, nl);
    }
    blk(local_of[static_cast<size_t>(e.row)],
        local_of[static_cast<size_t>(e.col)]) += e.val;
  }
}

RgfGrResult rgf_gr(const LayeredSystem& sys, const RgfGrOptions& opt,
                   FlopLedger& ledger) {
  const int num_layers = sys.num_layers();
  if (num_layers == 0) throw ContractViolation("system has no layers");

  RgfGrResult res;
  res.g.resize(static_cast<size_t>(num_layers));
  res.gr_diag.resize(static_cast<size_t>(num_layers));
  if (num_layers > 1) {
    res.xcoef.resize(static_cast<size_t>(num_layers) - 1);
    res.gb.resize(static_cast<size_t>(num_layers) - 1);
    if (opt.keep_offdiag)
      res.gr_lower.resize(static_cast<size_t>(num_layers) - 1);
  }

  // Forward sweep: left-connected resolvents g_i.
  for (int i = 0; i < num_layers; ++i) {
    CMatrix m = sys.diag[static_cast<size_t>(i)];
    if (i > 0) {
      const LayerCoupling& cp = sys.coupling[static_cast<size_t>(i) - 1];
      const CMatrix& gp = res.g[static_cast<size_t>(i) - 1];
      switch (cp.kind) {
        case CouplingKind::ScaledIdentity:
          // B^T g B = alpha^2 g
          sub_inplace(m, scaled(gp, cp.alpha * cp.alpha, ledger));
          break;
        case CouplingKind::Diagonal: {
          CMatrix t = diag_scale_left(cp.diag, gp, ledger);
          sub_inplace(m, diag_scale_right(t, cp.diag, ledger));
          break;
        }
        case CouplingKind::Dense: {
          // Cache g_{i-1} B_{i-1}; B^T g B = (gB)^T B since g is symmetric.
          CMatrix gb = matmul(gp, cp.dense, ledger);
          sub_inplace(
              m, matmul(adjoint(gb, AdjointMode::Transpose), cp.dense, ledger));
          res.gb[static_cast<size_t>(i) - 1] = std::move(gb);
          break;
        }
      }
    }
    res.g[static_cast<size_t>(i)] = inverse(m, ledger);
  }

  // Backward sweep: exact diagonal blocks.
  res.gr_diag[static_cast<size_t>(num_layers) - 1] =
      res.g[static_cast<size_t>(num_layers) - 1];
  for (int i = num_layers - 2; i >= 0; --i) {
    const LayerCoupling& cp = sys.coupling[static_cast<size_t>(i)];
    const CMatrix& gi = res.g[static_cast<size_t>(i)];
    const CMatrix& gd_next = res.gr_diag[static_cast<size_t>(i) + 1];
    CMatrix goff;  // G_{i+1,i} = -G_{i+1,i+1} B_i^T g_i
    switch (cp.kind) {
      case CouplingKind::ScaledIdentity: {
        goff = scaled(matmul(gd_next, gi, ledger), -cp.alpha, ledger);
        CMatrix corr = scaled(matmul(gi, goff, ledger), cp.alpha, ledger);
        res.gr_diag[static_cast<size_t>(i)] = gi;
        sub_inplace(res.gr_diag[static_cast<size_t>(i)], corr);
        res.xcoef[static_cast<size_t>(i)] = scaled(
            adjoint(goff, AdjointMode::Transpose), -cp.alpha, ledger);
        break;
      }
      case CouplingKind::Diagonal: {
        CMatrix btg = diag_scale_left(cp.diag, gi, ledger);
        goff = scaled(matmul(gd_next, btg, ledger), cplx(-1.0, 0.0), ledger);
        // g_i B_i = (B_i^T g_i)^T for symmetric g_i.
        res.gr_diag[static_cast<size_t>(i)] = gi;
        sub_inplace(res.gr_diag[static_cast<size_t>(i)],
                    matmul(adjoint(btg, AdjointMode::Transpose), goff, ledger));
        res.xcoef[static_cast<size_t>(i)] = diag_scale_right(
            scaled(adjoint(goff, AdjointMode::Transpose), cplx(-1.0, 0.0),
                   ledger),
            cp.diag, ledger);
        break;
      }
      case CouplingKind::Dense: {
        const CMatrix& gb = res.gb[static_cast<size_t>(i)];  // g_i B_i
        goff = scaled(
            matmul(gd_next, adjoint(gb, AdjointMode::Transpose), ledger),
            cplx(-1.0, 0.0), ledger);
        res.gr_diag[static_cast<size_t>(i)] = gi;
        sub_inplace(res.gr_diag[static_cast<size_t>(i)],
                    matmul(gb, goff, ledger));
        res.xcoef[static_cast<size_t>(i)] = matmul(
            scaled(adjoint(goff, AdjointMode::Transpose), cplx(-1.0, 0.0),
                   ledger),
            adjoint(cp.dense, AdjointMode::Transpose), ledger);
        break;
      }
    }
    if (opt.keep_offdiag)
      res.gr_lower[static_cast<size_t>(i)] = std::move(goff);
  }
  return res;
}

std::vector<CMatrix> rgf_gless(const LayeredSystem& sys,
                               const RgfGrResult& gr_result,
                               FlopLedger& ledger) {
  const int num_layers = sys.num_layers();
  if (static_cast<int>(gr_result.g.size()) != num_layers)
    throw ContractViolation("rgf_gless needs the gr sweep of the same system");
  if (sys.sigma_lesser.size() != static_cast<size_t>(num_layers))
    throw ContractViolation("sigma_lesser blocks missing (attach them first)");
  for (int i = 0; i < num_layers; ++i) {
    const CMatrix& s = sys.sigma_lesser[static_cast<size_t>(i)];
    if (s.empty()) continue;
    if (s.rows() != static_cast<int>(sys.layers[static_cast<size_t>(i)].size()))
      throw ContractViolation("sigma_lesser block size mismatch");
    if (skew_hermitian_defect(s) > 1e-10)
      throw NonSkewHermitianInput("sigma_lesser block " + std::to_string(i) +
                                  " is not skew-Hermitian");
  }

  // Forward sweep: left-connected g^<_i = g_i S_i g_i^dagger with
  // S_i = Sigma^<_ii + B_{i-1}^T g^<_{i-1} B_{i-1}^*.
  std::vector<CMatrix> gl(static_cast<size_t>(num_layers));
  for (int i = 0; i < num_layers; ++i) {
    const int ni = static_cast<int>(sys.layers[static_cast<size_t>(i)].size());
    CMatrix s = sys.sigma_lesser[static_cast<size_t>(i)].empty()
                    ? CMatrix(ni, ni)
                    : sys.sigma_lesser[static_cast<size_t>(i)];
    if (i > 0) {
      const LayerCoupling& cp = sys.coupling[static_cast<size_t>(i) - 1];
      const CMatrix& glp = gl[static_cast<size_t>(i) - 1];
      switch (cp.kind) {
        case CouplingKind::ScaledIdentity:
          // B^T g^< B^* = |alpha|^2 g^<
          add_inplace(s, scaled(glp, cp.alpha * std::conj(cp.alpha), ledger));
          break;
        case CouplingKind::Diagonal: {
          std::vector<cplx> dconj(cp.diag.size());
          for (std::size_t k = 0; k < cp.diag.size(); ++k)
            dconj[k] = std::conj(cp.diag[k]);
          CMatrix t = diag_scale_left(cp.diag, glp, ledger);
          add_inplace(s, diag_scale_right(t, dconj, ledger));
          break;
        }
        case CouplingKind::Dense: {
          CMatrix t = matmul(adjoint(cp.dense, AdjointMode::Transpose), glp,
                             ledger);
          add_inplace(s, matmul(t, conjugated(cp.dense), ledger));
          break;
        }
      }
    }
    const CMatrix& gi = gr_result.g[static_cast<size_t>(i)];
    CMatrix m = matmul(gi, s, ledger);
    gl[static_cast<size_t>(i)] = skew_half_product(
        m, adjoint(gi, AdjointMode::ConjugateTranspose), cplx(1.0, 0.0),
        ledger);
  }

  // Backward sweep:
  //   G^<_ii = g^<_i + W_i G^<_{i+1,i+1} W_i^dagger + X_i - X_i^dagger,
  //   W_i = g_i B_i,  X_i = xcoef_i g^<_i.
  std::vector<CMatrix> out(static_cast<size_t>(num_layers));
  out[static_cast<size_t>(num_layers) - 1] =
      std::move(gl[static_cast<size_t>(num_layers) - 1]);
  for (int i = num_layers - 2; i >= 0; --i) {
    const LayerCoupling& cp = sys.coupling[static_cast<size_t>(i)];
    const CMatrix& gi = gr_result.g[static_cast<size_t>(i)];
    const CMatrix& gl_next = out[static_cast<size_t>(i) + 1];
    CMatrix term;
    switch (cp.kind) {
      case CouplingKind::ScaledIdentity: {
        // W G^< W^dagger = |alpha|^2 g G^< g^dagger
        CMatrix m = matmul(gi, gl_next, ledger);
        term = skew_half_product(
            m, adjoint(gi, AdjointMode::ConjugateTranspose),
            cp.alpha * std::conj(cp.alpha), ledger);
        break;
      }
      case CouplingKind::Diagonal: {
        CMatrix w = diag_scale_right(gi, cp.diag, ledger);
        CMatrix m = matmul(w, gl_next, ledger);
        term = skew_half_product(
            m, adjoint(w, AdjointMode::ConjugateTranspose), cplx(1.0, 0.0),
            ledger);
        break;
      }
      case CouplingKind::Dense: {
        const CMatrix& w = gr_result.gb[static_cast<size_t>(i)];
        CMatrix m = matmul(w, gl_next, ledger);
        term = skew_half_product(
            m, adjoint(w, AdjointMode::ConjugateTranspose), cplx(1.0, 0.0),
            ledger);
        break;
      }
    }
    CMatrix x = matmul(gr_result.xcoef[static_cast<size_t>(i)],
                       gl[static_cast<size_t>(i)], ledger);
    CMatrix& gli = out[static_cast<size_t>(i)];
    gli = std::move(gl[static_cast<size_t>(i)]);
    add_inplace(gli, term);
    add_inplace(gli, x);
    sub_inplace(gli, adjoint(x, AdjointMode::ConjugateTranspose));
  }
  return out;
}

}  // namespace negf
