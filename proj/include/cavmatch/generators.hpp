#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "cavmatch/graph.hpp"
#include "cavmatch/laws.hpp"
#include "cavmatch/random.hpp"

namespace cavmatch {

namespace detail {

inline std::uint64_t bounded(Rng& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

}  // namespace detail

/// G(n, c/n) with iid weights. Pairs are visited in lexicographic order with
/// geometric skipping, so the cost is linear in n + |E|.
inline WeightedGraph gen_erdos_renyi(int n, double c, const WeightLaw& weights,
                                     std::uint64_t seed) {
  if (n < 1) throw ValidationError("erdos_renyi.n: must be >= 1");
  if (!(c >= 0.0)) throw ValidationError("erdos_renyi.c: must be >= 0");
  Rng rng(seed);
  const double p = std::min(c / n, 1.0);
  std::vector<Edge> edges;
  if (p >= 1.0) {
    for (Vertex u = 0; u < n; ++u)
      for (Vertex v = u + 1; v < n; ++v) edges.push_back({u, v, 0.0});
  } else if (p > 0.0) {
    const double log_q = std::log1p(-p);
    // Batagelj-Brandes enumeration of the strict upper triangle.
    std::int64_t v = 1;
    std::int64_t w = -1;
    while (v < n) {
      const double r = uniform_open(rng);
      w += 1 + static_cast<std::int64_t>(std::floor(std::log(r) / log_q));
      while (w >= v && v < n) {
        w -= v;
        ++v;
      }
      if (v < n) edges.push_back({static_cast<Vertex>(w), static_cast<Vertex>(v), 0.0});
    }
  }
  for (Edge& e : edges) e.w = weights.sample(rng);
  return WeightedGraph(n, std::move(edges));
}

struct ConfigModelResult {
  WeightedGraph graph;
  std::vector<int> degrees;  // after the parity fix
  int pairs = 0;
  int removed_self_loops = 0;
  int removed_parallel = 0;
};

/// Configuration model: uniform pairing of half-edges, then projection to a
/// simple graph. Deleted loops and multi-edges are counted in the result.
inline ConfigModelResult gen_config_model(std::vector<int> degrees, const WeightLaw& weights,
                                          std::uint64_t seed) {
  if (degrees.empty()) throw ValidationError("config_model.degrees: empty");
  long long total = 0;
  for (int d : degrees) {
    if (d < 0) throw ValidationError("config_model.degrees: negative entry");
    total += d;
  }
  if (total % 2 != 0) {
    ++degrees.back();
    ++total;
  }
  std::vector<Vertex> half;
  half.reserve(static_cast<size_t>(total));
  for (Vertex v = 0; v < static_cast<Vertex>(degrees.size()); ++v)
    half.insert(half.end(), static_cast<size_t>(degrees[static_cast<size_t>(v)]), v);

  Rng rng(seed);
  for (size_t i = half.size(); i > 1; --i) {
    auto j = static_cast<size_t>(detail::bounded(rng, i));
    std::swap(half[i - 1], half[j]);
  }

  ConfigModelResult out;
  out.pairs = static_cast<int>(half.size() / 2);
  const int n = static_cast<int>(degrees.size());
  std::vector<Edge> edges;
  std::unordered_map<std::uint64_t, bool> seen;
  for (size_t k = 0; k + 1 < half.size(); k += 2) {
    Vertex a = half[k];
    Vertex b = half[k + 1];
    if (a == b) {
      ++out.removed_self_loops;
      continue;
    }
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    if (!seen.emplace(key, true).second) {
      ++out.removed_parallel;
      continue;
    }
    edges.push_back({a, b, 0.0});
  }
  for (Edge& e : edges) e.w = weights.sample(rng);
  out.graph = WeightedGraph(n, std::move(edges));
  out.degrees = std::move(degrees);
  return out;
}

/// Path 0-1-...-(n-1) with iid weights.
inline WeightedGraph gen_path(int n, const WeightLaw& weights, std::uint64_t seed) {
  if (n < 1) throw ValidationError("path.n: must be >= 1");
  Rng rng(seed);
  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(n - 1));
  for (Vertex v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1, weights.sample(rng)});
  return WeightedGraph(n, std::move(edges));
}

/// Random recursive tree on n vertices: vertex k attaches to a uniform
/// earlier vertex, then labels are shuffled.
inline WeightedGraph gen_random_tree(int n, const WeightLaw& weights, std::uint64_t seed) {
  if (n < 1) throw ValidationError("random_tree.n: must be >= 1");
  Rng rng(seed);
  std::vector<Vertex> label(static_cast<size_t>(n));
  for (Vertex v = 0; v < n; ++v) label[static_cast<size_t>(v)] = v;
  for (size_t i = label.size(); i > 1; --i) std::swap(label[i - 1], label[static_cast<size_t>(detail::bounded(rng, i))]);
  std::vector<Edge> edges;
  for (int k = 1; k < n; ++k) {
    const auto parent = static_cast<size_t>(detail::bounded(rng, static_cast<std::uint64_t>(k)));
    edges.push_back({label[parent], label[static_cast<size_t>(k)], weights.sample(rng)});
  }
  return WeightedGraph(n, std::move(edges));
}

/// Cycle 0-1-...-(n-1)-0 with iid weights.
inline WeightedGraph gen_cycle(int n, const WeightLaw& weights, std::uint64_t seed) {
  if (n < 3) throw ValidationError("cycle.n: must be >= 3");
  Rng rng(seed);
  std::vector<Edge> edges;
  for (Vertex v = 0; v < n; ++v) edges.push_back({v, (v + 1) % n, weights.sample(rng)});
  return WeightedGraph(n, std::move(edges));
}

enum class Rooting { kVertex, kEdge };

/// Unimodular Galton-Watson tree truncated at depth `depth`.
///
/// Edge rooting joins two independent offspring-law trees by the root edge
/// (o_-, o_+) = (0, 1); vertex rooting gives vertex 0 a pi-distributed number
/// of children. Every other vertex draws its children from the offspring law.
inline RootedTree sample_ubgw(int depth, const DegreeLaw& law, const WeightLaw& weights,
                              Rooting rooting, std::uint64_t seed,
                              int max_vertices = 50'000'000) {
  if (depth < 0) throw ValidationError("ubgw.depth: must be >= 0");
  Rng rng(seed);
  std::vector<Edge> edges;
  std::deque<std::pair<Vertex, int>> frontier;
  int n = 0;
  if (rooting == Rooting::kEdge) {
    n = 2;
    edges.push_back({0, 1, weights.sample(rng)});
    frontier.push_back({0, 0});
    frontier.push_back({1, 0});
  } else {
    n = 1;
    const int kids = depth > 0 ? law.sample_degree(rng) : 0;
    for (int k = 0; k < kids; ++k) {
      edges.push_back({0, n, weights.sample(rng)});
      frontier.push_back({n, 1});
      ++n;
    }
  }
  while (!frontier.empty()) {
    auto [v, d] = frontier.front();
    frontier.pop_front();
    if (d >= depth) continue;
    const int kids = law.sample_offspring(rng);
    for (int k = 0; k < kids; ++k) {
      if (n >= max_vertices) throw BudgetError("ubgw: vertex budget exceeded");
      edges.push_back({v, n, weights.sample(rng)});
      frontier.push_back({n, d + 1});
      ++n;
    }
  }
  WeightedGraph g(n, std::move(edges));
  if (rooting == Rooting::kEdge) return RootedTree(std::move(g), DirectedRoot{0, 1});
  return RootedTree(std::move(g), Vertex{0});
}

/// Depth-H ball of the tree of non-backtracking walks starting with the
/// oriented edge (i, j).
struct CoverTree {
  RootedTree tree;              // rooted at (0, 1) = copies of (i, j)
  std::vector<Vertex> origin;   // cover vertex -> vertex of the covered graph
  std::vector<int> depth;       // 0 for the two root endpoints
  std::vector<bool> truncated;  // depth-H vertex whose walk could continue
  std::vector<std::vector<double>> boundary;  // weights of the outward edges cut at a truncated vertex
};

inline std::optional<CoverTree> universal_cover(const WeightedGraph& g, Vertex i, Vertex j, int depth,
                                                int max_vertices) {
  if (depth < 0) throw ValidationError("universal_cover.depth: must be >= 0");
  const auto root = g.find_edge(i, j);
  if (!root) return std::nullopt;

  std::vector<Edge> edges{{0, 1, g.weight(*root)}};
  std::vector<Vertex> origin{i, j};
  std::vector<Vertex> parent_origin{j, i};
  std::vector<int> dep{0, 0};
  std::vector<bool> trunc(2, false);
  std::vector<std::vector<double>> boundary(2);
  for (size_t q = 0; q < origin.size(); ++q) {
    const Vertex v = origin[q];
    const Vertex back = parent_origin[q];
    const int d = dep[q];
    const bool has_children = g.degree(v) > 1;
    if (d >= depth) {
      trunc[q] = has_children;
      for (const Incidence& inc : g.neighbors(v))
        if (inc.neighbor != back) boundary[q].push_back(g.weight(inc.edge));
      continue;
    }
    for (const Incidence& inc : g.neighbors(v)) {
      if (inc.neighbor == back) continue;
      if (static_cast<int>(origin.size()) >= max_vertices)
        throw BudgetError("universal_cover: more than " + std::to_string(max_vertices) +
                          " vertices for root edge (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      const Vertex c = static_cast<Vertex>(origin.size());
      edges.push_back({static_cast<Vertex>(q), c, g.weight(inc.edge)});
      origin.push_back(inc.neighbor);
      parent_origin.push_back(v);
      dep.push_back(d + 1);
      trunc.push_back(false);
      boundary.emplace_back();
    }
  }
  const int n = static_cast<int>(origin.size());
  return CoverTree{RootedTree(WeightedGraph(n, std::move(edges)), DirectedRoot{0, 1}),
                   std::move(origin), std::move(dep), std::move(trunc), std::move(boundary)};
}

}  // namespace cavmatch
