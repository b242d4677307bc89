#include "negf/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "negf/errors.hpp"

namespace negf {

// ---------------------------------------------------------------------------
// SeparatorTree
// ---------------------------------------------------------------------------

SeparatorTree SeparatorTree::build(std::vector<Cluster> clusters, int n_dofs) {
  SeparatorTree t;
  t.n_dofs_ = n_dofs;
  t.clusters_ = std::move(clusters);
  const int nc = static_cast<int>(t.clusters_.size());
  if (nc == 0) throw ContractViolation("SeparatorTree: no clusters");

  t.children_.assign(nc, {});
  for (int i = 0; i < nc; ++i) {
    t.clusters_[i].id = i;
    std::sort(t.clusters_[i].dofs.begin(), t.clusters_[i].dofs.end());
    const int p = t.clusters_[i].parent;
    if (p == -1) {
      if (t.root_ != -1)
        throw ContractViolation("SeparatorTree: more than one root");
      t.root_ = i;
    } else if (p < 0 || p >= nc || p == i) {
      throw ContractViolation("SeparatorTree: bad parent link");
    } else {
      t.children_[p].push_back(i);
    }
  }
  if (t.root_ == -1) throw ContractViolation("SeparatorTree: no root");

  // Levels: leaves are 1, internal clusters one above their highest child.
  std::function<int(int)> level_of = [&](int id) -> int {
    Cluster& c = t.clusters_[id];
    if (c.level > 0) return c.level;
    int lv = 1;
    for (int ch : t.children_[id]) lv = std::max(lv, level_of(ch) + 1);
    c.level = lv;
    return lv;
  };
  t.levels_ = level_of(t.root_);
  for (int i = 0; i < nc; ++i)
    if (t.clusters_[i].level == 0)
      throw ContractViolation("SeparatorTree: cluster detached from root");

  // Ancestor chains, nearest first.
  t.ancestors_.assign(nc, {});
  std::function<void(int)> chain_of = [&](int id) {
    if (!t.ancestors_[id].empty() || id == t.root_) return;
    const int p = t.clusters_[id].parent;
    chain_of(p);
    t.ancestors_[id].push_back(p);
    t.ancestors_[id].insert(t.ancestors_[id].end(), t.ancestors_[p].begin(),
                            t.ancestors_[p].end());
  };
  for (int i = 0; i < nc; ++i) chain_of(i);

  // Dof ownership: the clusters partition 0..n-1.
  t.dof_cluster_.assign(n_dofs, -1);
  for (int i = 0; i < nc; ++i)
    for (int d : t.clusters_[i].dofs) {
      if (d < 0 || d >= n_dofs)
        throw ContractViolation("SeparatorTree: dof out of range");
      if (t.dof_cluster_[d] != -1)
        throw ContractViolation("SeparatorTree: dof in two clusters");
      t.dof_cluster_[d] = i;
    }
  for (int d = 0; d < n_dofs; ++d)
    if (t.dof_cluster_[d] == -1)
      throw ContractViolation("SeparatorTree: dof missing from all clusters");

  // Fold order: by level, then id.
  for (int i = 0; i < nc; ++i)
    if (i != t.root_) t.fold_order_.push_back(i);
  std::sort(t.fold_order_.begin(), t.fold_order_.end(), [&](int a, int b) {
    const int la = t.clusters_[a].level, lb = t.clusters_[b].level;
    return la != lb ? la < lb : a < b;
  });
  return t;
}

int SeparatorTree::local_index(int cluster_id, int dof) const {
  const auto& dofs = clusters_[cluster_id].dofs;
  const auto it = std::lower_bound(dofs.begin(), dofs.end(), dof);
  if (it == dofs.end() || *it != dof)
    throw ContractViolation("SeparatorTree: dof not in cluster");
  return static_cast<int>(it - dofs.begin());
}

bool SeparatorTree::is_ancestor(int anc, int node) const {
  const auto& chain = ancestors_[node];
  return std::find(chain.begin(), chain.end(), anc) != chain.end();
}

std::string SeparatorTree::to_json() const {
  nlohmann::ordered_json j;
  j["levels"] = levels_;
  j["num_dofs"] = n_dofs_;
  j["clusters"] = nlohmann::ordered_json::array();
  for (const auto& c : clusters_) {
    nlohmann::ordered_json jc;
    jc["id"] = c.id;
    jc["level"] = c.level;
    jc["parent"] = c.parent;
    jc["dofs"] = c.dofs;
    j["clusters"].push_back(jc);
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Nested dissection
// ---------------------------------------------------------------------------

namespace {

// Contracted vertex: an atomic group or a single dof.
struct SuperNode {
  std::vector<int> dofs;
  double x = 0.0, y = 0.0;
  int weight = 0;
};

struct NdContext {
  std::vector<SuperNode> nodes;
  std::vector<std::vector<int>> adj;  // neighbor supernodes
  int max_leaf = 64;
  std::vector<SeparatorTree::Cluster> clusters;

  int new_cluster(std::vector<int> node_ids) {
    SeparatorTree::Cluster c;
    for (int id : node_ids)
      c.dofs.insert(c.dofs.end(), nodes[id].dofs.begin(),
                    nodes[id].dofs.end());
    std::sort(c.dofs.begin(), c.dofs.end());
    clusters.push_back(std::move(c));
    return static_cast<int>(clusters.size()) - 1;
  }
};

int weight_of(const NdContext& ctx, const std::vector<int>& ids) {
  int w = 0;
  for (int id : ids) w += ctx.nodes[id].weight;
  return w;
}

// Recursively dissects `ids`; returns the cluster index of the subtree root.
int dissect(NdContext& ctx, std::vector<int> ids) {
  if (weight_of(ctx, ids) <= ctx.max_leaf || ids.size() <= 1)
    return ctx.new_cluster(std::move(ids));

  // Split at the weight median along the axis of larger coordinate extent.
  double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
  for (int id : ids) {
    minx = std::min(minx, ctx.nodes[id].x);
    maxx = std::max(maxx, ctx.nodes[id].x);
    miny = std::min(miny, ctx.nodes[id].y);
    maxy = std::max(maxy, ctx.nodes[id].y);
  }
  const bool use_x = (maxx - minx) >= (maxy - miny);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    const double ca = use_x ? ctx.nodes[a].x : ctx.nodes[a].y;
    const double cb = use_x ? ctx.nodes[b].x : ctx.nodes[b].y;
    return ca != cb ? ca < cb : a < b;  // lower id breaks coordinate ties
  });

  const int total = weight_of(ctx, ids);
  std::vector<int> h1, h2;
  int acc = 0;
  for (int id : ids) {
    if (2 * acc < total && h2.empty()) {
      h1.push_back(id);
      acc += ctx.nodes[id].weight;
    } else {
      h2.push_back(id);
    }
  }
  if (h2.empty()) {  // degenerate weights; keep both halves populated
    h2.push_back(h1.back());
    h1.pop_back();
  }

  // Boundary layer of the lighter side becomes the separator.
  std::vector<char> side(ctx.nodes.size(), 0);
  for (int id : h1) side[id] = 1;
  for (int id : h2) side[id] = 2;
  auto boundary = [&](const std::vector<int>& half, char other) {
    std::vector<int> b;
    for (int id : half)
      for (int nb : ctx.adj[id])
        if (side[nb] == other) {
          b.push_back(id);
          break;
        }
    return b;
  };
  std::vector<int> b1 = boundary(h1, 2);
  std::vector<int> b2 = boundary(h2, 1);
  const bool take_first = weight_of(ctx, b1) <= weight_of(ctx, b2);
  const std::vector<int>& sep = take_first ? b1 : b2;

  std::vector<char> in_sep(ctx.nodes.size(), 0);
  for (int id : sep) in_sep[id] = 1;
  auto strip = [&](const std::vector<int>& half) {
    std::vector<int> out;
    for (int id : half)
      if (!in_sep[id]) out.push_back(id);
    return out;
  };
  const std::vector<int> c1 = take_first ? strip(h1) : h1;
  const std::vector<int> c2 = take_first ? h2 : strip(h2);

  std::vector<int> child_roots;
  if (!c1.empty()) child_roots.push_back(dissect(ctx, c1));
  if (!c2.empty()) child_roots.push_back(dissect(ctx, c2));
  const int sep_cluster = ctx.new_cluster(sep);
  for (int ch : child_roots) ctx.clusters[ch].parent = sep_cluster;
  return sep_cluster;
}

// Breadth-first levelization from a pseudo-peripheral vertex: a 1-D
// coordinate surrogate for graphs supplied without geometry.
std::vector<std::array<double, 2>> bfs_coordinates(const Graph& g) {
  const auto adj = g.adjacency();
  std::vector<std::array<double, 2>> coords(g.n, {0.0, 0.0});
  std::vector<int> dist(g.n, -1);
  auto bfs = [&](int start) {
    std::fill(dist.begin(), dist.end(), -1);
    std::deque<int> q{start};
    dist[start] = 0;
    int far = start;
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      if (dist[u] > dist[far]) far = u;
      for (int v : adj[u])
        if (dist[v] == -1) {
          dist[v] = dist[u] + 1;
          q.push_back(v);
        }
    }
    return far;
  };
  std::vector<char> seen(g.n, 0);
  for (int s = 0; s < g.n; ++s) {
    if (seen[s]) continue;
    const int far = bfs(s);  // vertex far from an arbitrary start
    bfs(far);                // levelize from there
    for (int v = 0; v < g.n; ++v)
      if (dist[v] >= 0 && !seen[v]) {
        seen[v] = 1;
        coords[v] = {static_cast<double>(dist[v]), 0.0};
      }
  }
  return coords;
}

}  // namespace

SeparatorTree nested_dissection(
    const Graph& graph, const std::vector<std::vector<int>>& atomic_groups,
    int max_leaf, const std::vector<std::array<double, 2>>& coords) {
  if (max_leaf < 1) throw ConfigError("nested_dissection: max_leaf must be >= 1");
  if (!coords.empty() && static_cast<int>(coords.size()) != graph.n)
    throw ContractViolation("nested_dissection: coordinate count mismatch");
  const std::vector<std::array<double, 2>> xy =
      coords.empty() ? bfs_coordinates(graph) : coords;

  // Contract atomic groups into supernodes.
  std::vector<int> owner(graph.n, -1);
  NdContext ctx;
  ctx.max_leaf = max_leaf;
  for (const auto& group : atomic_groups) {
    if (group.empty()) continue;
    SuperNode node;
    for (int d : group) {
      if (d < 0 || d >= graph.n)
        throw ConfigError("nested_dissection: atomic group dof out of range");
      if (owner[d] != -1)
        throw ConfigError("nested_dissection: atomic groups overlap");
      owner[d] = static_cast<int>(ctx.nodes.size());
      node.dofs.push_back(d);
      node.x += xy[d][0];
      node.y += xy[d][1];
    }
    node.weight = static_cast<int>(node.dofs.size());
    node.x /= node.weight;
    node.y /= node.weight;
    std::sort(node.dofs.begin(), node.dofs.end());
    ctx.nodes.push_back(std::move(node));
  }
  for (int d = 0; d < graph.n; ++d) {
    if (owner[d] != -1) continue;
    owner[d] = static_cast<int>(ctx.nodes.size());
    ctx.nodes.push_back({{d}, xy[d][0], xy[d][1], 1});
  }

  ctx.adj.assign(ctx.nodes.size(), {});
  for (const auto& e : graph.edges) {
    const int a = owner[e[0]], b = owner[e[1]];
    if (a != b) {
      ctx.adj[a].push_back(b);
      ctx.adj[b].push_back(a);
    }
  }
  for (auto& list : ctx.adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  std::vector<int> all(ctx.nodes.size());
  std::iota(all.begin(), all.end(), 0);
  dissect(ctx, std::move(all));
  return SeparatorTree::build(std::move(ctx.clusters), graph.n);
}

SeparatorTree rgf_chain_partition(const std::vector<std::vector<int>>& layers,
                                  int n_dofs) {
  if (layers.empty()) throw ContractViolation("rgf_chain_partition: no layers");
  std::vector<SeparatorTree::Cluster> clusters(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    clusters[i].dofs = layers[i];
    clusters[i].parent =
        i + 1 < layers.size() ? static_cast<int>(i) + 1 : -1;
  }
  return SeparatorTree::build(std::move(clusters), n_dofs);
}

PartitionReport validate_partition(const SeparatorTree& tree,
                                   const Graph& graph) {
  PartitionReport report;
  report.levels = tree.levels();
  report.num_clusters = tree.num_clusters();
  if (graph.n != tree.num_dofs())
    throw ContractViolation("validate_partition: graph size mismatch");

  for (const auto& e : graph.edges) {
    const int cu = tree.dof_cluster(e[0]);
    const int cv = tree.dof_cluster(e[1]);
    if (cu == cv) continue;
    if (tree.is_ancestor(cu, cv) || tree.is_ancestor(cv, cu)) continue;
    report.violations.push_back({e[0], e[1], cu, cv});
  }
  for (int i = 0; i < tree.num_clusters(); ++i) {
    const int size = static_cast<int>(tree.cluster(i).dofs.size());
    if (tree.children(i).empty())
      report.leaf_sizes.push_back(size);
    else
      report.separator_sizes.push_back(size);
  }
  return report;
}

std::string PartitionReport::summary() const {
  auto stats = [](const std::vector<int>& v) {
    std::ostringstream os;
    if (v.empty()) {
      os << "none";
      return os.str();
    }
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const long long total = std::accumulate(v.begin(), v.end(), 0LL);
    os << "count " << v.size() << ", min " << *mn << ", max " << *mx
       << ", total " << total;
    return os.str();
  };
  std::ostringstream os;
  os << "rule-1 violations: " << violations.size() << '\n';
  for (const auto& v : violations)
    os << "  edge " << v[0] << " -- " << v[1] << " joins cluster " << v[2]
       << " and cluster " << v[3] << '\n';
  os << "levels: " << levels << '\n';
  os << "clusters: " << num_clusters << '\n';
  os << "leaf sizes: " << stats(leaf_sizes) << '\n';
  os << "separator sizes: " << stats(separator_sizes) << '\n';
  return os.str();
}

}  // namespace negf
