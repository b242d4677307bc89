#include "negf/block.hpp"

#include <algorithm>
#include <string>

#include "negf/errors.hpp"

namespace negf {

const CMatrix& ClusterBlockMatrix::block(int i, int j) const {
  auto it = blocks_.find({i, j});
  if (it == blocks_.end()) {
    throw ContractViolation("block (" + std::to_string(i) + "," +
                            std::to_string(j) + ") is not stored");
  }
  return it->second;
}

CMatrix& ClusterBlockMatrix::block_mut(int i, int j) {
  auto it = blocks_.find({i, j});
  if (it == blocks_.end()) {
    auto [r, c] = block_shape(i, j);
    it = blocks_.emplace(std::pair<int, int>{i, j}, CMatrix(r, c)).first;
  }
  return it->second;
}

void ClusterBlockMatrix::set(int i, int j, CMatrix m) {
  auto [r, c] = block_shape(i, j);
  if (m.rows() != r || m.cols() != c) {
    throw ContractViolation("block (" + std::to_string(i) + "," +
                            std::to_string(j) + ") has wrong shape");
  }
  blocks_.insert_or_assign({i, j}, std::move(m));
}

std::vector<std::pair<int, int>> ClusterBlockMatrix::keys() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(blocks_.size());
  for (const auto& kv : blocks_) out.push_back(kv.first);
  return out;
}

std::pair<int, int> ClusterBlockMatrix::block_shape(int i, int j) const {
  return {static_cast<int>(tree_->cluster(i).dofs.size()),
          static_cast<int>(tree_->cluster(j).dofs.size())};
}

ClusterBlockMatrix group_by_partition(const SparseCoo& a,
                                      std::shared_ptr<const SeparatorTree> tree,
                                      BlockSymmetry symmetry) {
  if (a.n != tree->num_dofs()) {
    throw ContractViolation("matrix size does not match partition dof count");
  }
  // First pass: collect entries that join non-ancestor-related clusters.
  std::vector<std::array<int, 4>> violations;
  for (const auto& e : a.entries) {
    const int ci = tree->dof_cluster(e.row);
    const int cj = tree->dof_cluster(e.col);
    if (ci == cj) continue;
    if (tree->is_ancestor(cj, ci) || tree->is_ancestor(ci, cj)) continue;
    if (e.row < e.col) violations.push_back({e.row, e.col, ci, cj});
  }
  if (!violations.empty()) {
    std::sort(violations.begin(), violations.end());
    violations.erase(std::unique(violations.begin(), violations.end()),
                     violations.end());
    throw PartitionViolation(
        std::to_string(violations.size()) +
            " matrix entr(ies) join clusters that are not ancestor-related",
        violations);
  }
  ClusterBlockMatrix m(tree, symmetry);
  for (const auto& e : a.entries) {
    const int ci = tree->dof_cluster(e.row);
    const int cj = tree->dof_cluster(e.col);
    const int li = tree->local_index(ci, e.row);
    const int lj = tree->local_index(cj, e.col);
    m.block_mut(ci, cj)(li, lj) += e.val;
  }
  return m;
}

SparseCoo scatter(const ClusterBlockMatrix& m) {
  SparseCoo a;
  a.n = m.tree().num_dofs();
  for (const auto& key : m.keys()) {
    const auto& di = m.tree().cluster(key.first).dofs;
    const auto& dj = m.tree().cluster(key.second).dofs;
    const CMatrix& b = m.block(key.first, key.second);
    for (int r = 0; r < b.rows(); ++r) {
      for (int c = 0; c < b.cols(); ++c) {
        if (b(r, c) != cplx(0.0, 0.0)) a.add(di[r], dj[c], b(r, c));
      }
    }
  }
  coo_normalize(a);
  return a;
}

namespace {

void check_contact_in_layer(const ContactBlock& cb,
                            const std::vector<int>& layer, const char* which) {
  if (cb.empty()) return;
  const int n = static_cast<int>(cb.dofs.size());
  if (cb.sigma.rows() != n || cb.sigma.cols() != n) {
    throw ConfigError(std::string(which) +
                      " contact self-energy block shape does not match its "
                      "dof list");
  }
  for (int d : cb.dofs) {
    if (!std::binary_search(layer.begin(), layer.end(), d)) {
      throw ConfigError(std::string(which) + " contact dof " +
                        std::to_string(d) +
                        " lies outside the corresponding boundary layer");
    }
  }
}

}  // namespace

SparseCoo assemble_system(const SparseCoo& h, const ContactBlock& sigma_r_left,
                          const ContactBlock& sigma_r_right,
                          const std::vector<cplx>& sigma_phonon, double energy,
                          const std::vector<std::vector<int>>& layers) {
  if (layers.empty()) throw ConfigError("layer map is empty");
  if (!sigma_phonon.empty() &&
      sigma_phonon.size() != static_cast<std::size_t>(h.n)) {
    throw ConfigError("phonon self-energy diagonal has wrong length");
  }
  std::vector<int> first = layers.front();
  std::vector<int> last = layers.back();
  std::sort(first.begin(), first.end());
  std::sort(last.begin(), last.end());
  check_contact_in_layer(sigma_r_left, first, "left");
  check_contact_in_layer(sigma_r_right, last, "right");

  SparseCoo a;
  a.n = h.n;
  for (int d = 0; d < h.n; ++d) {
    cplx v(energy, 0.0);
    if (!sigma_phonon.empty()) v -= sigma_phonon[d];
    a.add(d, d, v);
  }
  for (const auto& e : h.entries) a.add(e.row, e.col, -e.val);
  for (const ContactBlock* cb : {&sigma_r_left, &sigma_r_right}) {
    const int n = static_cast<int>(cb->dofs.size());
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (cb->sigma(r, c) != cplx(0.0, 0.0)) {
          a.add(cb->dofs[r], cb->dofs[c], -cb->sigma(r, c));
        }
      }
    }
  }
  coo_normalize(a);
  return a;
}

namespace {

std::vector<cplx> flatten_diag(const std::vector<std::vector<int>>& dof_sets,
                               const std::vector<CMatrix>& blocks, int n_dofs,
                               const char* what) {
  if (blocks.size() != dof_sets.size()) {
    throw ContractViolation(std::string(what) +
                            " block list does not match dof sets");
  }
  std::vector<cplx> out(static_cast<std::size_t>(n_dofs), cplx(0.0, 0.0));
  std::vector<bool> seen(static_cast<std::size_t>(n_dofs), false);
  for (std::size_t k = 0; k < dof_sets.size(); ++k) {
    const auto& dofs = dof_sets[k];
    const CMatrix& b = blocks[k];
    if (b.rows() != static_cast<int>(dofs.size()) || b.rows() != b.cols()) {
      throw ContractViolation(std::string(what) + " diagonal block " +
                              std::to_string(k) + " has wrong shape");
    }
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const int d = dofs[i];
      if (d < 0 || d >= n_dofs || seen[static_cast<std::size_t>(d)]) {
        throw ContractViolation(std::string(what) +
                                " dof sets are not a disjoint cover");
      }
      seen[static_cast<std::size_t>(d)] = true;
      out[static_cast<std::size_t>(d)] = b(static_cast<int>(i),
                                           static_cast<int>(i));
    }
  }
  for (bool s : seen) {
    if (!s) throw ContractViolation(std::string(what) +
                                    " dof sets do not cover every dof");
  }
  return out;
}

}  // namespace

std::vector<cplx> GreensDiagonal::gr_dof_diagonal() const {
  return flatten_diag(dof_sets, gr_diag, n_dofs, "gr");
}

std::vector<cplx> GreensDiagonal::gless_dof_diagonal() const {
  return flatten_diag(dof_sets, gless_diag, n_dofs, "gless");
}

}  // namespace negf
