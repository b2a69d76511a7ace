#include "miaudit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace miaudit {

int MembershipMask::count() const {
  int c = 0;
  for (uint8_t b : bits) c += b;
  return c;
}

std::string MembershipMask::to_string() const {
  std::string s(bits.size(), '0');
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

namespace {

std::vector<std::vector<int>> build_neighbor_lists(int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> nbrs(static_cast<size_t>(n));
  for (const Edge& e : edges) {
    nbrs[static_cast<size_t>(e.first)].push_back(e.second);
    nbrs[static_cast<size_t>(e.second)].push_back(e.first);
  }
  for (auto& v : nbrs) std::sort(v.begin(), v.end());
  return nbrs;
}

}  // namespace

void Graph::finalize() {
  if (n < 0) throw std::invalid_argument("graph: negative node count");
  if (features.rows != n || features.cols != feature_dim)
    throw std::invalid_argument("graph: feature matrix shape mismatch");
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("graph: label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw std::invalid_argument("graph: label out of range");
  for (double x : features.data)
    if (!std::isfinite(x)) throw std::invalid_argument("graph: non-finite feature");

  std::set<Edge> canon;
  for (Edge e : edges) {
    if (e.first == e.second) continue;  // simple graph
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first < 0 || e.second >= n) throw std::invalid_argument("graph: edge endpoint out of range");
    canon.insert(e);
  }
  edges.assign(canon.begin(), canon.end());
  neighbors = build_neighbor_lists(n, edges);
}

MaskedAdjacency::MaskedAdjacency(int n, const MembershipMask& source, std::vector<Edge> retained)
    : n_(n), mask_(source), edges_(std::move(retained)) {
  nbrs_ = build_neighbor_lists(n, edges_);
}

MaskedAdjacency MaskedAdjacency::edgeless(int n) {
  return MaskedAdjacency(n, MembershipMask(n, 0), {});
}

MaskedAdjacency masked_adjacency(const Graph& g, const MembershipMask& m) {
  if (m.size() != g.n) throw std::invalid_argument("masked_adjacency: mask length mismatch");
  std::vector<Edge> kept;
  kept.reserve(g.edges.size());
  for (const Edge& e : g.edges)
    if (m.test(e.first) && m.test(e.second)) kept.push_back(e);
  return MaskedAdjacency(g.n, m, std::move(kept));
}

MaskedAdjacency drop_node(const MaskedAdjacency& a, int v) {
  if (v < 0 || v >= a.num_nodes()) throw std::invalid_argument("drop_node: node out of range");
  std::vector<Edge> kept;
  kept.reserve(a.edges().size());
  for (const Edge& e : a.edges())
    if (e.first != v && e.second != v) kept.push_back(e);
  return MaskedAdjacency(a.num_nodes(), a.source_mask().without(v), std::move(kept));
}

namespace {

std::vector<int> bfs_ball(const std::vector<std::vector<int>>& nbrs, int n, int v, int depth) {
  if (v < 0 || v >= n) throw std::invalid_argument("l_hop_neighborhood: node out of range");
  if (depth < 1) throw std::invalid_argument("l_hop_neighborhood: depth must be >= 1");
  std::vector<int> dist(static_cast<size_t>(n), -1);
  dist[static_cast<size_t>(v)] = 0;
  std::queue<int> q;
  q.push(v);
  std::vector<int> out;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (dist[static_cast<size_t>(u)] == depth) continue;
    for (int w : nbrs[static_cast<size_t>(u)]) {
      if (dist[static_cast<size_t>(w)] < 0) {
        dist[static_cast<size_t>(w)] = dist[static_cast<size_t>(u)] + 1;
        out.push_back(w);
        q.push(w);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> l_hop_neighborhood(const MaskedAdjacency& a, int v, int depth) {
  std::vector<std::vector<int>> nbrs(static_cast<size_t>(a.num_nodes()));
  for (int u = 0; u < a.num_nodes(); ++u) nbrs[static_cast<size_t>(u)] = a.neighbors(u);
  return bfs_ball(nbrs, a.num_nodes(), v, depth);
}

std::vector<int> l_hop_neighborhood(const Graph& g, int v, int depth) {
  return bfs_ball(g.neighbors, g.n, v, depth);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void save_graph(std::ostream& out, const Graph& g) {
  out << g.n << ' ' << g.feature_dim << ' ' << g.num_classes << '\n';
  for (int v = 0; v < g.n; ++v) {
    for (int j = 0; j < g.feature_dim; ++j) {
      if (j) out << ' ';
      out << format_double(g.features(v, j));
    }
    out << '\n';
  }
  for (int v = 0; v < g.n; ++v) {
    if (v) out << ' ';
    out << g.labels[static_cast<size_t>(v)];
  }
  out << '\n';
  for (const Edge& e : g.edges) out << e.first << ' ' << e.second << '\n';
}

void save_graph(const std::string& path, const Graph& g) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  save_graph(f, g);
  if (!f) throw std::runtime_error("write failed: " + path);
}

Graph load_graph(std::istream& in) {
  Graph g;
  if (!(in >> g.n >> g.feature_dim >> g.num_classes))
    throw std::runtime_error("graph file: bad header");
  g.features = Matrix(g.n, g.feature_dim);
  for (int v = 0; v < g.n; ++v)
    for (int j = 0; j < g.feature_dim; ++j)
      if (!(in >> g.features(v, j))) throw std::runtime_error("graph file: bad feature row");
  g.labels.resize(static_cast<size_t>(g.n));
  for (int v = 0; v < g.n; ++v)
    if (!(in >> g.labels[static_cast<size_t>(v)])) throw std::runtime_error("graph file: bad label line");
  int u, w;
  while (in >> u >> w) g.edges.emplace_back(u, w);
  g.finalize();
  return g;
}

Graph load_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return load_graph(f);
}

}  // namespace miaudit
