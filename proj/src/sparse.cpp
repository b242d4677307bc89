#include "negf/sparse.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <utility>

#include "negf/errors.hpp"

namespace negf {

void coo_normalize(SparseCoo& a) {
  for (const auto& e : a.entries)
    if (e.row < 0 || e.row >= a.n || e.col < 0 || e.col >= a.n)
      throw ContractViolation("coo_normalize: index out of range");
  std::sort(a.entries.begin(), a.entries.end(),
            [](const SparseCoo::Entry& x, const SparseCoo::Entry& y) {
              return x.row != y.row ? x.row < y.row : x.col < y.col;
            });
  std::vector<SparseCoo::Entry> out;
  out.reserve(a.entries.size());
  for (const auto& e : a.entries) {
    if (!out.empty() && out.back().row == e.row && out.back().col == e.col)
      out.back().val += e.val;
    else
      out.push_back(e);
  }
  a.entries = std::move(out);
}

bool coo_pattern_symmetric(const SparseCoo& a) {
  std::set<std::pair<int, int>> pattern;
  for (const auto& e : a.entries) pattern.insert({e.row, e.col});
  for (const auto& p : pattern)
    if (!pattern.count({p.second, p.first})) return false;
  return true;
}

void coo_dump(const SparseCoo& a, std::ostream& os) {
  SparseCoo canon = a;
  coo_normalize(canon);
  os << canon.n << ' ' << canon.n << ' ' << canon.entries.size() << '\n';
  for (const auto& e : canon.entries)
    os << e.row << ' ' << e.col << ' ' << e.val.real() << ' ' << e.val.imag()
       << '\n';
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e[0]].push_back(e[1]);
    adj[e[1]].push_back(e[0]);
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

Graph graph_of_pattern(const SparseCoo& a) {
  Graph g;
  g.n = a.n;
  std::set<std::pair<int, int>> seen;
  for (const auto& e : a.entries) {
    if (e.row == e.col) continue;
    const int u = std::min(e.row, e.col);
    const int v = std::max(e.row, e.col);
    if (seen.insert({u, v}).second) g.edges.push_back({u, v});
  }
  return g;
}

}  // namespace negf
