#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "cavmatch/cavity.hpp"
#include "cavmatch/error.hpp"
#include "cavmatch/graph.hpp"

namespace cavmatch {

inline constexpr int kDefaultBruteForceEdges = 24;

/// Subgraph induced by a vertex set, with maps back to the parent graph.
struct Subgraph {
  WeightedGraph graph;
  std::vector<Vertex> vertex_origin;
  std::vector<EdgeId> edge_origin;
};

inline Subgraph induced_subgraph(const WeightedGraph& g, const std::vector<Vertex>& vertices) {
  std::vector<int> local(static_cast<size_t>(g.num_vertices()), -1);
  for (size_t k = 0; k < vertices.size(); ++k) local[static_cast<size_t>(vertices[k])] = static_cast<int>(k);
  std::vector<Edge> edges;
  std::vector<EdgeId> origin;
  for (const Vertex v : vertices) {
    for (const Incidence& inc : g.neighbors(v)) {
      const int a = local[static_cast<size_t>(v)];
      const int b = local[static_cast<size_t>(inc.neighbor)];
      if (b < 0 || a > b) continue;
      edges.push_back({a, b, g.weight(inc.edge)});
      origin.push_back(inc.edge);
    }
  }
  return {WeightedGraph(static_cast<int>(vertices.size()), std::move(edges)), vertices, std::move(origin)};
}

namespace detail {

class BranchAndBound {
 public:
  BranchAndBound(const WeightedGraph& g, std::vector<EdgeId> order)
      : g_(g), order_(std::move(order)), used_(static_cast<size_t>(g.num_vertices()), false) {}

  void run() { search(0, 0.0); }
  double best() const { return best_; }
  const std::vector<EdgeId>& best_edges() const { return best_edges_; }

 private:
  double bound(size_t from) const {
    double s = 0.0;
    for (size_t k = from; k < order_.size(); ++k) {
      const Edge& e = g_.edge(order_[k]);
      if (!used_[static_cast<size_t>(e.u)] && !used_[static_cast<size_t>(e.v)]) s += e.w;
    }
    return s;
  }

  void search(size_t k, double value) {
    if (value > best_) {
      best_ = value;
      best_edges_ = current_;
    }
    if (k == order_.size() || value + bound(k) <= best_) return;
    const EdgeId id = order_[k];
    const Edge& e = g_.edge(id);
    if (!used_[static_cast<size_t>(e.u)] && !used_[static_cast<size_t>(e.v)]) {
      used_[static_cast<size_t>(e.u)] = used_[static_cast<size_t>(e.v)] = true;
      current_.push_back(id);
      search(k + 1, value + e.w);
      current_.pop_back();
      used_[static_cast<size_t>(e.u)] = used_[static_cast<size_t>(e.v)] = false;
    }
    search(k + 1, value);
  }

  const WeightedGraph& g_;
  std::vector<EdgeId> order_;
  std::vector<bool> used_;
  std::vector<EdgeId> current_;
  std::vector<EdgeId> best_edges_;
  double best_ = 0.0;
};

}  // namespace detail

/// Exact maximum weight matching by branch and bound over edges in
/// descending weight order. Throws BudgetError if any connected component
/// has more than `max_component_edges` edges.
inline OptResult brute_force_opt(const WeightedGraph& g, int max_component_edges = kDefaultBruteForceEdges) {
  auto [label, count] = connected_components(g);
  std::vector<std::vector<EdgeId>> per(static_cast<size_t>(count));
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    if (g.weight(e) > 0.0) per[static_cast<size_t>(label[static_cast<size_t>(g.edge(e).u)])].push_back(e);
  }
  std::vector<int> comp_edges(static_cast<size_t>(count), 0);
  for (EdgeId e = 0; e < g.num_edges(); ++e) ++comp_edges[static_cast<size_t>(label[static_cast<size_t>(g.edge(e).u)])];
  for (int c = 0; c < count; ++c)
    if (comp_edges[static_cast<size_t>(c)] > max_component_edges)
      throw BudgetError("brute_force_opt: component with " + std::to_string(comp_edges[static_cast<size_t>(c)]) +
                        " edges exceeds the bound of " + std::to_string(max_component_edges));
  double value = 0.0;
  std::vector<EdgeId> chosen;
  for (auto& edges : per) {
    if (edges.empty()) continue;
    std::stable_sort(edges.begin(), edges.end(), [&](EdgeId a, EdgeId b) { return g.weight(a) > g.weight(b); });
    detail::BranchAndBound bb(g, edges);
    bb.run();
    value += bb.best();
    chosen.insert(chosen.end(), bb.best_edges().begin(), bb.best_edges().end());
  }
  return {value, Matching::from_edges(g, std::move(chosen))};
}

struct ComponentOptResult {
  double value = 0.0;
  Matching matching;
  double solved_fraction = 1.0;  // fraction of edges lying in solved components
  std::vector<bool> solved_vertex;
  std::vector<std::vector<Vertex>> excluded_components;
};

/// Exact optimum of a connected graph with few independent cycles: fix a
/// spanning tree, enumerate which non-tree edges are matched, and solve the
/// remaining forest by dynamic programming. Cost 2^rank forest solves.
inline OptResult cycle_rank_opt(const WeightedGraph& g, int max_rank) {
  const int n = g.num_vertices();
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<size_t>(v)] != v) v = parent[static_cast<size_t>(v)] = parent[static_cast<size_t>(parent[static_cast<size_t>(v)])];
    return v;
  };
  std::vector<EdgeId> extra;
  std::vector<bool> in_tree(static_cast<size_t>(g.num_edges()), false);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const int a = find(g.edge(e).u);
    const int b = find(g.edge(e).v);
    if (a == b) {
      extra.push_back(e);
    } else {
      parent[static_cast<size_t>(a)] = b;
      in_tree[static_cast<size_t>(e)] = true;
    }
  }
  if (static_cast<int>(extra.size()) > max_rank)
    throw BudgetError("cycle_rank_opt: cycle rank " + std::to_string(extra.size()) + " exceeds " +
                      std::to_string(max_rank));
  OptResult best{-1.0, {}};
  std::vector<bool> covered(static_cast<size_t>(n));
  for (std::uint64_t mask = 0; mask < (1ULL << extra.size()); ++mask) {
    std::fill(covered.begin(), covered.end(), false);
    std::vector<EdgeId> forced;
    bool ok = true;
    double forced_weight = 0.0;
    for (size_t k = 0; k < extra.size() && ok; ++k) {
      if (!(mask >> k & 1)) continue;
      const Edge& ed = g.edge(extra[k]);
      if (covered[static_cast<size_t>(ed.u)] || covered[static_cast<size_t>(ed.v)]) ok = false;
      covered[static_cast<size_t>(ed.u)] = covered[static_cast<size_t>(ed.v)] = true;
      forced.push_back(extra[k]);
      forced_weight += ed.w;
    }
    if (!ok) continue;
    std::vector<Edge> rest;
    std::vector<EdgeId> origin;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      const Edge& ed = g.edge(e);
      if (!in_tree[static_cast<size_t>(e)] || covered[static_cast<size_t>(ed.u)] || covered[static_cast<size_t>(ed.v)])
        continue;
      rest.push_back(ed);
      origin.push_back(e);
    }
    const WeightedGraph forest(n, std::move(rest));
    const OptResult r = forest_opt(forest);
    if (r.value + forced_weight > best.value) {
      for (EdgeId e : r.matching.edge_ids()) forced.push_back(origin[static_cast<size_t>(e)]);
      best = {r.value + forced_weight, Matching::from_edges(g, std::move(forced))};
    }
  }
  return best;
}

/// Exact optimum per connected component. Acyclic components go through the
/// tree dynamic program whatever their size; components with a cycle are
/// solved by branch and bound when they have at most `component_limit` edges.
/// Larger cyclic components are solved by cycle_rank_opt when their cycle
/// rank is at most `max_cycle_rank`, and excluded (and reported) otherwise.
inline ComponentOptResult exact_opt_by_components(const WeightedGraph& g, int component_limit,
                                                  int max_cycle_rank = 0) {
  auto [label, count] = connected_components(g);
  std::vector<std::vector<Vertex>> members(static_cast<size_t>(count));
  for (Vertex v = 0; v < g.num_vertices(); ++v) members[static_cast<size_t>(label[static_cast<size_t>(v)])].push_back(v);
  std::vector<int> comp_edges(static_cast<size_t>(count), 0);
  for (const Edge& e : g.edges()) ++comp_edges[static_cast<size_t>(label[static_cast<size_t>(e.u)])];

  ComponentOptResult out;
  out.solved_vertex.assign(static_cast<size_t>(g.num_vertices()), true);
  std::vector<Vertex> forest_vertices;
  std::vector<EdgeId> chosen;
  long long unsolved_edges = 0;
  for (int c = 0; c < count; ++c) {
    const auto& vs = members[static_cast<size_t>(c)];
    const int ne = comp_edges[static_cast<size_t>(c)];
    if (ne == static_cast<int>(vs.size()) - 1) {
      forest_vertices.insert(forest_vertices.end(), vs.begin(), vs.end());
      continue;
    }
    const int rank = ne - static_cast<int>(vs.size()) + 1;
    if (ne > component_limit && rank <= max_cycle_rank) {
      const Subgraph sub = induced_subgraph(g, vs);
      const OptResult r = cycle_rank_opt(sub.graph, max_cycle_rank);
      out.value += r.value;
      for (EdgeId e : r.matching.edge_ids()) chosen.push_back(sub.edge_origin[static_cast<size_t>(e)]);
      continue;
    }
    if (ne > component_limit) {
      unsolved_edges += ne;
      for (Vertex v : vs) out.solved_vertex[static_cast<size_t>(v)] = false;
      out.excluded_components.push_back(vs);
      continue;
    }
    const Subgraph sub = induced_subgraph(g, vs);
    const OptResult r = brute_force_opt(sub.graph, component_limit);
    out.value += r.value;
    for (EdgeId e : r.matching.edge_ids()) chosen.push_back(sub.edge_origin[static_cast<size_t>(e)]);
  }
  if (!forest_vertices.empty()) {
    std::sort(forest_vertices.begin(), forest_vertices.end());
    const Subgraph sub = induced_subgraph(g, forest_vertices);
    const OptResult r = forest_opt(sub.graph);
    out.value += r.value;
    for (EdgeId e : r.matching.edge_ids()) chosen.push_back(sub.edge_origin[static_cast<size_t>(e)]);
  }
  out.matching = Matching::from_edges(g, std::move(chosen));
  if (g.num_edges() > 0) out.solved_fraction = 1.0 - static_cast<double>(unsolved_edges) / g.num_edges();
  return out;
}

}  // namespace cavmatch
