#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "cavmatch/error.hpp"

namespace cavmatch {

using Vertex = int;
using EdgeId = int;
inline constexpr Vertex kNoVertex = -1;

struct Edge {
  Vertex u = 0;
  Vertex v = 0;
  double w = 0.0;
};

struct Incidence {
  Vertex neighbor;
  EdgeId edge;
};

/// Finite simple undirected graph with real edge weights.
///
/// Every undirected edge e = {u, v} owns two directed slots: 2e for u->v and
/// 2e+1 for v->u, where (u, v) is the orientation stored in edges()[e].
/// Message fields and other per-direction data are indexed by these slots.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  WeightedGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    if (n < 0) throw ValidationError("graph: negative vertex count");
    adjacency_.assign(static_cast<size_t>(n), {});
    lookup_.reserve(edges_.size() * 2);
    for (EdgeId e = 0; e < static_cast<EdgeId>(edges_.size()); ++e) {
      const Edge& ed = edges_[static_cast<size_t>(e)];
      if (ed.u < 0 || ed.v < 0 || ed.u >= n || ed.v >= n)
        throw ValidationError("graph: edge " + std::to_string(e) + " has an endpoint out of range");
      if (ed.u == ed.v)
        throw ValidationError("graph: self loop at vertex " + std::to_string(ed.u));
      if (!lookup_.emplace(key(ed.u, ed.v), e).second)
        throw ValidationError("graph: duplicate edge {" + std::to_string(ed.u) + "," +
                              std::to_string(ed.v) + "}");
      adjacency_[static_cast<size_t>(ed.u)].push_back({ed.v, e});
      adjacency_[static_cast<size_t>(ed.v)].push_back({ed.u, e});
    }
  }

  int num_vertices() const noexcept { return n_; }
  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[static_cast<size_t>(e)]; }
  std::span<const Incidence> neighbors(Vertex v) const {
    return adjacency_[static_cast<size_t>(v)];
  }
  int degree(Vertex v) const { return static_cast<int>(adjacency_[static_cast<size_t>(v)].size()); }

  std::optional<EdgeId> find_edge(Vertex u, Vertex v) const {
    if (u < 0 || v < 0 || u >= n_ || v >= n_ || u == v) return std::nullopt;
    auto it = lookup_.find(key(u, v));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  double weight(EdgeId e) const { return edges_[static_cast<size_t>(e)].w; }

  // Directed slot of the edge e traversed starting at `from`.
  int directed(EdgeId e, Vertex from) const {
    return 2 * e + (edges_[static_cast<size_t>(e)].u == from ? 0 : 1);
  }
  Vertex slot_source(int slot) const {
    const Edge& ed = edges_[static_cast<size_t>(slot / 2)];
    return slot % 2 == 0 ? ed.u : ed.v;
  }
  Vertex slot_target(int slot) const {
    const Edge& ed = edges_[static_cast<size_t>(slot / 2)];
    return slot % 2 == 0 ? ed.v : ed.u;
  }
  int num_slots() const noexcept { return 2 * num_edges(); }

  double mean_degree() const {
    return n_ == 0 ? 0.0 : 2.0 * static_cast<double>(edges_.size()) / n_;
  }

 private:
  std::uint64_t key(Vertex u, Vertex v) const {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(v);
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
  std::unordered_map<std::uint64_t, EdgeId> lookup_;
};

/// Connected-component labels; returns (label per vertex, component count).
inline std::pair<std::vector<int>, int> connected_components(const WeightedGraph& g) {
  const int n = g.num_vertices();
  std::vector<int> label(static_cast<size_t>(n), -1);
  std::vector<Vertex> stack;
  int count = 0;
  for (Vertex s = 0; s < n; ++s) {
    if (label[static_cast<size_t>(s)] >= 0) continue;
    label[static_cast<size_t>(s)] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      Vertex v = stack.back();
      stack.pop_back();
      for (const Incidence& inc : g.neighbors(v)) {
        if (label[static_cast<size_t>(inc.neighbor)] < 0) {
          label[static_cast<size_t>(inc.neighbor)] = count;
          stack.push_back(inc.neighbor);
        }
      }
    }
    ++count;
  }
  return {std::move(label), count};
}

inline bool is_forest(const WeightedGraph& g) {
  auto [label, count] = connected_components(g);
  return g.num_edges() == g.num_vertices() - count;
}

struct DirectedRoot {
  Vertex tail;  // o_-
  Vertex head;  // o_+
};

/// Finite weighted tree rooted at a vertex or at an oriented edge.
class RootedTree {
 public:
  using Root = std::variant<Vertex, DirectedRoot>;

  RootedTree() = default;

  RootedTree(WeightedGraph graph, Root root) : graph_(std::move(graph)), root_(root) {
    const int n = graph_.num_vertices();
    if (n == 0) throw ValidationError("tree: empty vertex set");
    if (graph_.num_edges() != n - 1 || connected_components(graph_).second != 1)
      throw CycleDetectedError("tree: graph is not a connected acyclic graph");
    if (const auto* v = std::get_if<Vertex>(&root_)) {
      if (*v < 0 || *v >= n) throw ValidationError("tree: root vertex out of range");
    } else {
      const auto& r = std::get<DirectedRoot>(root_);
      if (!graph_.find_edge(r.tail, r.head))
        throw ValidationError("tree: root edge is not an edge of the tree");
    }
  }

  const WeightedGraph& graph() const noexcept { return graph_; }
  const Root& root() const noexcept { return root_; }
  bool edge_rooted() const noexcept { return std::holds_alternative<DirectedRoot>(root_); }
  DirectedRoot root_edge() const { return std::get<DirectedRoot>(root_); }
  Vertex root_vertex() const { return std::get<Vertex>(root_); }
  int num_vertices() const noexcept { return graph_.num_vertices(); }

 private:
  WeightedGraph graph_;
  Root root_ = Vertex{0};
};

/// Set of edges of a graph, no two sharing an endpoint.
class Matching {
 public:
  Matching() = default;

  /// Builds and validates against `g`; throws InvalidMatchingError if any
  /// vertex is covered twice or an edge id is out of range.
  static Matching from_edges(const WeightedGraph& g, std::vector<EdgeId> edge_ids) {
    Matching m;
    m.partner_.assign(static_cast<size_t>(g.num_vertices()), kNoVertex);
    std::sort(edge_ids.begin(), edge_ids.end());
    edge_ids.erase(std::unique(edge_ids.begin(), edge_ids.end()), edge_ids.end());
    for (EdgeId e : edge_ids) {
      if (e < 0 || e >= g.num_edges())
        throw InvalidMatchingError("matching: edge id " + std::to_string(e) + " out of range");
      const Edge& ed = g.edge(e);
      if (m.partner_[static_cast<size_t>(ed.u)] != kNoVertex ||
          m.partner_[static_cast<size_t>(ed.v)] != kNoVertex)
        throw InvalidMatchingError("matching: vertex covered twice by edge " + std::to_string(e));
      m.partner_[static_cast<size_t>(ed.u)] = ed.v;
      m.partner_[static_cast<size_t>(ed.v)] = ed.u;
    }
    m.edges_ = std::move(edge_ids);
    return m;
  }

  static Matching empty(const WeightedGraph& g) { return from_edges(g, {}); }

  const std::vector<EdgeId>& edge_ids() const noexcept { return edges_; }
  Vertex partner(Vertex v) const { return partner_[static_cast<size_t>(v)]; }
  bool is_matched(Vertex v) const { return partner_[static_cast<size_t>(v)] != kNoVertex; }
  bool contains(EdgeId e) const { return std::binary_search(edges_.begin(), edges_.end(), e); }
  size_t size() const noexcept { return edges_.size(); }
  int num_vertices() const noexcept { return static_cast<int>(partner_.size()); }

  double total_weight(const WeightedGraph& g) const {
    double s = 0.0;
    for (EdgeId e : edges_) s += g.weight(e);
    return s;
  }

  bool operator==(const Matching& o) const { return edges_ == o.edges_; }

 private:
  std::vector<EdgeId> edges_;
  std::vector<Vertex> partner_;
};

struct MatchingStats {
  double total_weight = 0.0;
  double matched_edge_fraction = 0.0;
  double matched_vertex_fraction = 0.0;
  double perf_vertex = 0.0;
  double perf_edge = 0.0;
  double mean_degree = 0.0;
};

/// Performance seen from a uniform vertex and from a uniform directed edge.
/// Both averages are evaluated independently so that the proportionality
/// perf_vertex = mean_degree * perf_edge is a real check.
inline MatchingStats matching_stats(const WeightedGraph& g, const Matching& m) {
  if (m.num_vertices() != g.num_vertices())
    throw InvalidMatchingError("matching_stats: matching built for a different vertex count");
  // Re-validate: the matching may come from another graph of equal order.
  std::vector<int> cover(static_cast<size_t>(g.num_vertices()), 0);
  for (EdgeId e : m.edge_ids()) {
    if (e < 0 || e >= g.num_edges()) throw InvalidMatchingError("matching_stats: bad edge id");
    const Edge& ed = g.edge(e);
    if (++cover[static_cast<size_t>(ed.u)] > 1 || ++cover[static_cast<size_t>(ed.v)] > 1)
      throw InvalidMatchingError("matching_stats: vertex covered twice");
  }

  MatchingStats s;
  const int n = g.num_vertices();
  const int ne = g.num_edges();
  s.total_weight = m.total_weight(g);
  s.mean_degree = g.mean_degree();
  if (ne > 0) s.matched_edge_fraction = static_cast<double>(m.size()) / ne;
  if (n > 0) s.matched_vertex_fraction = 2.0 * static_cast<double>(m.size()) / n;

  double vertex_sum = 0.0;
  for (Vertex v = 0; v < n; ++v) {
    for (const Incidence& inc : g.neighbors(v)) {
      if (m.partner(v) == inc.neighbor) vertex_sum += g.weight(inc.edge);
    }
  }
  double slot_sum = 0.0;
  for (int slot = 0; slot < g.num_slots(); ++slot) {
    if (m.partner(g.slot_source(slot)) == g.slot_target(slot)) slot_sum += g.weight(slot / 2);
  }
  if (n > 0) s.perf_vertex = vertex_sum / n;
  if (ne > 0) s.perf_edge = slot_sum / (2.0 * ne);
  return s;
}

}  // namespace cavmatch
