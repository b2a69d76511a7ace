#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "miaudit/linalg.hpp"

namespace miaudit {

using Edge = std::pair<int, int>;  // canonical form: first < second

/// One membership bit per node. The variant with a designated node's bit
/// forced to zero is produced by without().
struct MembershipMask {
  std::vector<uint8_t> bits;

  MembershipMask() = default;
  explicit MembershipMask(int n, uint8_t fill = 0) : bits(static_cast<size_t>(n), fill) {}

  int size() const { return static_cast<int>(bits.size()); }
  bool test(int v) const { return bits[static_cast<size_t>(v)] != 0; }
  void set(int v, bool on) { bits[static_cast<size_t>(v)] = on ? 1 : 0; }
  int count() const;

  MembershipMask without(int v) const {
    MembershipMask m = *this;
    m.set(v, false);
    return m;
  }
  MembershipMask with(int v) const {
    MembershipMask m = *this;
    m.set(v, true);
    return m;
  }
  bool operator==(const MembershipMask&) const = default;

  /// 0/1 string, bit 0 first; the debug dump format.
  std::string to_string() const;
};

// Undirected simple graph with node features and class labels. Edges are
// kept as a sorted list of canonical pairs; a dense adjacency is never
// materialized. Node indices are stable across all masked views so that
// membership bookkeeping lines up across models and mask samples.
struct Graph {
  int n = 0;
  int feature_dim = 0;
  int num_classes = 0;
  std::vector<Edge> edges;       // sorted, unique, u < w, no self-loops
  Matrix features;               // n x feature_dim
  std::vector<int> labels;       // values in [0, num_classes)
  std::vector<std::vector<int>> neighbors;  // full edge set, sorted per node

  /// Canonicalizes edges (symmetrize, dedupe, drop self-loops), builds
  /// neighbor lists, and checks all invariants. Call after filling fields.
  void finalize();

  bool edgeless() const { return edges.empty(); }
};

/// Adjacency restricted to node pairs whose mask bits are both set.
/// Immutable after construction; node indices are never renumbered.
class MaskedAdjacency {
 public:
  MaskedAdjacency() = default;
  MaskedAdjacency(int n, const MembershipMask& source, std::vector<Edge> retained);

  static MaskedAdjacency edgeless(int n);

  int num_nodes() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const MembershipMask& source_mask() const { return mask_; }
  const std::vector<int>& neighbors(int v) const { return nbrs_[static_cast<size_t>(v)]; }
  int degree(int v) const { return static_cast<int>(nbrs_[static_cast<size_t>(v)].size()); }

 private:
  int n_ = 0;
  MembershipMask mask_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> nbrs_;
};

/// Keeps exactly the edges whose endpoints both have mask bit 1.
MaskedAdjacency masked_adjacency(const Graph& g, const MembershipMask& m);

/// Removes every edge incident to v; the stored mask has bit v cleared, so
/// the result equals masked_adjacency(g, m.without(v)).
MaskedAdjacency drop_node(const MaskedAdjacency& a, int v);

/// Nodes at distance 1..depth from v (v excluded), measured in the given
/// edge set. Sorted ascending.
std::vector<int> l_hop_neighborhood(const MaskedAdjacency& a, int v, int depth);
std::vector<int> l_hop_neighborhood(const Graph& g, int v, int depth);

// Text format: header "n d c", then n feature lines of d decimals, one
// label line of n integers, then one "u w" line per edge. Decimals carry
// 17 significant digits so the round-trip is bit exact.
void save_graph(std::ostream& out, const Graph& g);
void save_graph(const std::string& path, const Graph& g);
Graph load_graph(std::istream& in);
Graph load_graph(const std::string& path);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double x);

}  // namespace miaudit
