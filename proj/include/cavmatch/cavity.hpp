#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cavmatch/error.hpp"
#include "cavmatch/graph.hpp"

namespace cavmatch {

/// Cavity message Z(u,v) for every directed edge, stored by directed slot
/// (see WeightedGraph::directed). `self_loop` holds Z^s(v,v) per vertex when
/// the field has been augmented with self loops.
struct MessageField {
  std::vector<double> z;
  std::optional<std::vector<double>> self_loop;

  static MessageField zeros(const WeightedGraph& g) {
    return MessageField{std::vector<double>(static_cast<size_t>(g.num_slots()), 0.0), std::nullopt};
  }

  double at(const WeightedGraph& g, Vertex u, Vertex v) const {
    const auto e = g.find_edge(u, v);
    if (!e) throw ValidationError("message field: no edge between the given vertices");
    return z[static_cast<size_t>(g.directed(*e, u))];
  }
};

namespace detail {

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

// Top-two statistics of w(v,u') - Z(v,u') over the neighbours u' of v.
struct TopTwo {
  double best = kMinusInf;
  double second = kMinusInf;
  Vertex arg = kNoVertex;

  void push(double value, Vertex who) {
    if (value > best) {
      second = best;
      best = value;
      arg = who;
    } else if (value > second) {
      second = value;
    }
  }
  double excluding(Vertex who) const { return who == arg ? second : best; }
};

inline TopTwo gains_at(const WeightedGraph& g, const std::vector<double>& z, Vertex v) {
  TopTwo t;
  for (const Incidence& inc : g.neighbors(v))
    t.push(g.weight(inc.edge) - z[static_cast<size_t>(g.directed(inc.edge, v))], inc.neighbor);
  return t;
}

// BFS order of every component plus the parent edge of each vertex.
struct ForestOrder {
  std::vector<Vertex> order;
  std::vector<Vertex> parent;
  std::vector<EdgeId> parent_edge;
};

inline ForestOrder forest_order(const WeightedGraph& g) {
  const int n = g.num_vertices();
  ForestOrder fo;
  fo.parent.assign(static_cast<size_t>(n), kNoVertex);
  fo.parent_edge.assign(static_cast<size_t>(n), -1);
  std::vector<bool> seen(static_cast<size_t>(n), false);
  fo.order.reserve(static_cast<size_t>(n));
  for (Vertex s = 0; s < n; ++s) {
    if (seen[static_cast<size_t>(s)]) continue;
    seen[static_cast<size_t>(s)] = true;
    size_t head = fo.order.size();
    fo.order.push_back(s);
    while (head < fo.order.size()) {
      const Vertex v = fo.order[head++];
      for (const Incidence& inc : g.neighbors(v)) {
        if (inc.edge == fo.parent_edge[static_cast<size_t>(v)]) continue;
        if (seen[static_cast<size_t>(inc.neighbor)])
          throw CycleDetectedError("cavity: input graph contains a cycle");
        seen[static_cast<size_t>(inc.neighbor)] = true;
        fo.parent[static_cast<size_t>(inc.neighbor)] = v;
        fo.parent_edge[static_cast<size_t>(inc.neighbor)] = inc.edge;
        fo.order.push_back(inc.neighbor);
      }
    }
  }
  return fo;
}

}  // namespace detail

/// Exact fixed point of Z(u,v) = max(0, max_{u' ~ v, u' != u} (w(v,u') - Z(v,u')))
/// on a forest, in O(n): leaves-up pass for messages pointing away from the
/// BFS roots, then a root-down pass using per-vertex top-two gains.
inline MessageField solve_messages_forest(const WeightedGraph& g) {
  const auto fo = detail::forest_order(g);
  MessageField f = MessageField::zeros(g);
  auto& z = f.z;

  // Upward: Z(parent -> v) depends only on v's subtree.
  for (auto it = fo.order.rbegin(); it != fo.order.rend(); ++it) {
    const Vertex v = *it;
    const EdgeId pe = fo.parent_edge[static_cast<size_t>(v)];
    if (pe < 0) continue;
    double best = 0.0;
    for (const Incidence& inc : g.neighbors(v)) {
      if (inc.edge == pe) continue;
      best = std::max(best, g.weight(inc.edge) - z[static_cast<size_t>(g.directed(inc.edge, v))]);
    }
    z[static_cast<size_t>(g.directed(pe, fo.parent[static_cast<size_t>(v)]))] = best;
  }
  // Downward: Z(child -> p) once every message out of p is known.
  for (const Vertex p : fo.order) {
    const detail::TopTwo top = detail::gains_at(g, z, p);
    for (const Incidence& inc : g.neighbors(p)) {
      if (inc.edge == fo.parent_edge[static_cast<size_t>(p)]) continue;
      z[static_cast<size_t>(g.directed(inc.edge, inc.neighbor))] =
          std::max(0.0, top.excluding(inc.neighbor));
    }
  }
  return f;
}

inline MessageField solve_messages_tree(const RootedTree& t) { return solve_messages_forest(t.graph()); }

/// Largest |Z(u,v) - update(Z)(u,v)| over all directed edges.
inline double recursion_residual(const WeightedGraph& g, const MessageField& f) {
  double res = 0.0;
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    const detail::TopTwo top = detail::gains_at(g, f.z, v);
    for (const Incidence& inc : g.neighbors(v)) {
      const double want = std::max(0.0, top.excluding(inc.neighbor));
      res = std::max(res, std::abs(want - f.z[static_cast<size_t>(g.directed(inc.edge, inc.neighbor))]));
    }
  }
  return res;
}

struct Decision {
  Matching matching;
  // Vertices where the vertex rule (partner = unique argmax of
  // w(u,v') - Z(u,v'), and that maximum > 0) disagrees with the edge rule.
  std::vector<Vertex> vertex_rule_violations;
};

/// Edge rule: {u,v} selected iff Z(u,v) + Z(v,u) < w(u,v), strictly.
inline Decision decide_matching(const WeightedGraph& g, const MessageField& f) {
  if (static_cast<int>(f.z.size()) != g.num_slots())
    throw ValidationError("decide_matching: field does not cover every directed edge");
  std::vector<EdgeId> chosen;
  std::vector<int> cover(static_cast<size_t>(g.num_vertices()), 0);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const double zuv = f.z[static_cast<size_t>(2 * e)];
    const double zvu = f.z[static_cast<size_t>(2 * e + 1)];
    if (zuv + zvu < g.weight(e)) {
      const Edge& ed = g.edge(e);
      if (++cover[static_cast<size_t>(ed.u)] > 1 || ++cover[static_cast<size_t>(ed.v)] > 1)
        throw InconsistentMessagesError("decide_matching: two selected edges share a vertex at edge " +
                                        std::to_string(e));
      chosen.push_back(e);
    }
  }
  Decision d{Matching::from_edges(g, std::move(chosen)), {}};
  for (Vertex u = 0; u < g.num_vertices(); ++u) {
    double best = detail::kMinusInf;
    int ties = 0;
    Vertex arg = kNoVertex;
    for (const Incidence& inc : g.neighbors(u)) {
      // Gain of u from v = w(u,v) - Z(u,v).
      const double gain = g.weight(inc.edge) - f.z[static_cast<size_t>(g.directed(inc.edge, u))];
      if (gain > best) {
        best = gain;
        arg = inc.neighbor;
        ties = 1;
      } else if (gain == best) {
        ++ties;
      }
    }
    const Vertex expected = (best > 0.0 && ties == 1) ? arg : kNoVertex;
    if (expected != d.matching.partner(u)) d.vertex_rule_violations.push_back(u);
  }
  return d;
}

inline Decision decide_matching(const RootedTree& t, const MessageField& f) {
  return decide_matching(t.graph(), f);
}

struct OptResult {
  double value = 0.0;
  Matching matching;
};

/// Maximum weight matching of a forest by dynamic programming (independent
/// of the message recursion).
inline OptResult forest_opt(const WeightedGraph& g) {
  const auto fo = detail::forest_order(g);
  const int n = g.num_vertices();
  std::vector<double> free_best(static_cast<size_t>(n), 0.0);  // v not matched to a child
  std::vector<double> best(static_cast<size_t>(n), 0.0);
  std::vector<Vertex> take(static_cast<size_t>(n), kNoVertex);  // child matched to v in `best`
  std::vector<EdgeId> take_edge(static_cast<size_t>(n), -1);
  for (auto it = fo.order.rbegin(); it != fo.order.rend(); ++it) {
    const Vertex v = *it;
    const EdgeId pe = fo.parent_edge[static_cast<size_t>(v)];
    double base = 0.0;
    for (const Incidence& inc : g.neighbors(v))
      if (inc.edge != pe) base += best[static_cast<size_t>(inc.neighbor)];
    free_best[static_cast<size_t>(v)] = base;
    double b = base;
    for (const Incidence& inc : g.neighbors(v)) {
      if (inc.edge == pe) continue;
      const auto c = static_cast<size_t>(inc.neighbor);
      const double cand = base - best[c] + free_best[c] + g.weight(inc.edge);
      if (cand > b) {
        b = cand;
        take[static_cast<size_t>(v)] = inc.neighbor;
        take_edge[static_cast<size_t>(v)] = inc.edge;
      }
    }
    best[static_cast<size_t>(v)] = b;
  }
  // Reconstruct top-down: `forced_free` marks vertices already matched to their parent.
  std::vector<bool> forced_free(static_cast<size_t>(n), false);
  std::vector<EdgeId> chosen;
  double value = 0.0;
  for (const Vertex v : fo.order) {
    if (fo.parent[static_cast<size_t>(v)] == kNoVertex) value += best[static_cast<size_t>(v)];
    if (forced_free[static_cast<size_t>(v)]) continue;
    const Vertex c = take[static_cast<size_t>(v)];
    if (c != kNoVertex) {
      chosen.push_back(take_edge[static_cast<size_t>(v)]);
      forced_free[static_cast<size_t>(c)] = true;
    }
  }
  return {value, Matching::from_edges(g, std::move(chosen))};
}

inline OptResult tree_opt(const RootedTree& t) { return forest_opt(t.graph()); }

/// Tree with self loops of weight w^s(v,v) = Z^s(v,v).
struct SelfLoopedTree {
  RootedTree base;
  std::vector<double> self_loop_weight;

  // Vertices whose loop is selected by the decision rule (Z+Z < w iff w < 0).
  std::vector<Vertex> looped_vertices() const {
    std::vector<Vertex> out;
    for (Vertex v = 0; v < static_cast<Vertex>(self_loop_weight.size()); ++v)
      if (self_loop_weight[static_cast<size_t>(v)] < 0.0) out.push_back(v);
    return out;
  }
};

/// Z^s(v,v) = max_{u' ~ v} (w(v,u') - Z(v,u')); -inf at an isolated vertex.
/// Loop messages on real edges coincide with Z because a loop contributes
/// w^s(v,v) - Z^s(v,v) = 0 to every max.
inline std::pair<SelfLoopedTree, MessageField> augment_self_loops(const RootedTree& t,
                                                                  const MessageField& f) {
  const WeightedGraph& g = t.graph();
  std::vector<double> loops(static_cast<size_t>(g.num_vertices()));
  for (Vertex v = 0; v < g.num_vertices(); ++v) loops[static_cast<size_t>(v)] = detail::gains_at(g, f.z, v).best;
  MessageField ext{f.z, loops};
  return {SelfLoopedTree{t, std::move(loops)}, std::move(ext)};
}

/// Residual of the recursion extended with loops: for every real directed
/// edge, Z(u,v) = max over u' ~ v, u' != u, including the loop at v; for
/// every loop, Z^s(v,v) = max over real neighbours.
inline double self_loop_residual(const SelfLoopedTree& st, const MessageField& f) {
  const WeightedGraph& g = st.base.graph();
  if (!f.self_loop) throw ValidationError("self_loop_residual: field has no loop values");
  const auto& zs = *f.self_loop;
  double res = 0.0;
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    const double loop_w = st.self_loop_weight[static_cast<size_t>(v)];
    detail::TopTwo top = detail::gains_at(g, f.z, v);
    const double loop_gain = std::isinf(loop_w) ? detail::kMinusInf : loop_w - zs[static_cast<size_t>(v)];
    if (!(std::isinf(top.best) && std::isinf(zs[static_cast<size_t>(v)])))
      res = std::max(res, std::abs(top.best - zs[static_cast<size_t>(v)]));
    for (const Incidence& inc : g.neighbors(v)) {
      const double want = std::max(loop_gain, top.excluding(inc.neighbor));
      res = std::max(res, std::abs(want - f.z[static_cast<size_t>(g.directed(inc.edge, inc.neighbor))]));
    }
  }
  return res;
}

struct BpResult {
  MessageField field;
  bool converged = false;
  double residual = 0.0;
  int sweeps = 0;
};

/// Synchronous sweeps z <- (1 - damping) * update(z) + damping * z until the
/// largest change is <= tol or `max_sweeps` is reached.
inline BpResult bp_iterate(const WeightedGraph& g, const std::optional<MessageField>& init, int max_sweeps,
                           double damping, double tol) {
  if (!(damping >= 0.0 && damping < 1.0)) throw ValidationError("bp_iterate.damping: must be in [0,1)");
  BpResult r;
  r.field = init ? *init : MessageField::zeros(g);
  r.field.self_loop.reset();
  if (static_cast<int>(r.field.z.size()) != g.num_slots())
    throw ValidationError("bp_iterate: init does not match the graph");
  std::vector<double> next(r.field.z.size());
  r.residual = std::numeric_limits<double>::infinity();
  if (g.num_slots() == 0) {
    r.converged = true;
    r.residual = 0.0;
    return r;
  }
  for (int s = 0; s < max_sweeps; ++s) {
    for (Vertex v = 0; v < g.num_vertices(); ++v) {
      const detail::TopTwo top = detail::gains_at(g, r.field.z, v);
      for (const Incidence& inc : g.neighbors(v)) {
        const auto slot = static_cast<size_t>(g.directed(inc.edge, inc.neighbor));
        next[slot] = std::max(0.0, top.excluding(inc.neighbor));
      }
    }
    double change = 0.0;
    for (size_t k = 0; k < next.size(); ++k) {
      const double blended = (1.0 - damping) * next[k] + damping * r.field.z[k];
      change = std::max(change, std::abs(blended - r.field.z[k]));
      r.field.z[k] = blended;
    }
    r.sweeps = s + 1;
    r.residual = change;
    if (change <= tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace cavmatch
