#pragma once

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cavmatch/error.hpp"
#include "cavmatch/generators.hpp"
#include "cavmatch/graph.hpp"
#include "cavmatch/parallel.hpp"
#include "cavmatch/random.hpp"
#include "cavmatch/rde.hpp"

namespace cavmatch {

/// Dense square matrix, row-major.
struct DenseMatrix {
  int n = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  explicit DenseMatrix(int dim, double fill = 0.0) : n(dim), a(static_cast<size_t>(dim) * static_cast<size_t>(dim), fill) {}

  static DenseMatrix identity(int dim) {
    DenseMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)]; }
  double operator()(int i, int j) const {
    return a[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
  }

  std::vector<double> row_sums() const {
    std::vector<double> s(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s[static_cast<size_t>(i)] += (*this)(i, j);
    return s;
  }
  std::vector<double> col_sums() const {
    std::vector<double> s(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s[static_cast<size_t>(j)] += (*this)(i, j);
    return s;
  }
  double total() const { return std::accumulate(a.begin(), a.end(), 0.0); }

  DenseMatrix transpose() const {
    DenseMatrix t(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
};

inline double l1_distance(const DenseMatrix& x, const DenseMatrix& y) {
  double d = 0.0;
  for (size_t k = 0; k < x.a.size(); ++k) d += std::abs(x.a[k] - y.a[k]);
  return d;
}

/// Sum of |row sum - 1| and |column sum - 1|.
inline double stochastic_deviation(const DenseMatrix& m) {
  double d = 0.0;
  for (double s : m.row_sums()) d += std::abs(s - 1.0);
  for (double s : m.col_sums()) d += std::abs(s - 1.0);
  return d;
}

inline bool is_symmetric(const DenseMatrix& m) {
  for (int i = 0; i < m.n; ++i)
    for (int j = i + 1; j < m.n; ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

inline double max_stochastic_error(const DenseMatrix& m) {
  double e = 0.0;
  for (double s : m.row_sums()) e = std::max(e, std::abs(s - 1.0));
  for (double s : m.col_sums()) e = std::max(e, std::abs(s - 1.0));
  return e;
}

// ---------------------------------------------------------------------------
// Edge scores

/// Monte-Carlo score P(Z(o-,o+) + Z(o+,o-) < w(o) <= x) on a cover tree:
/// each outward edge cut at depth H carries an iid message from the grid law,
/// combined with that edge's weight; every other message follows the
/// recursion inward. Without cut edges the score is deterministic (0 or 1).
inline double score_edge(const CoverTree& cover, const CdfGrid& zeta, double x, int replicates, std::uint64_t seed) {
  const WeightedGraph& t = cover.tree.graph();
  const double w_root = t.weight(0);
  if (!(w_root <= x) || w_root <= 0.0) return 0.0;
  const int n = t.num_vertices();
  const bool random = std::any_of(cover.truncated.begin(), cover.truncated.end(), [](bool b) { return b; });
  const int reps = random ? std::max(1, replicates) : 1;

  // best_child[v] = max(0, max over children c of w(v,c) - Z(v -> c)).
  std::vector<double> best_child(static_cast<size_t>(n), 0.0);
  CdfSampler draw(zeta);
  Rng rng(seed);
  long long hits = 0;
  for (int r = 0; r < reps; ++r) {
    for (int v = 0; v < n; ++v) {
      double z = 0.0;
      for (double w : cover.boundary[static_cast<size_t>(v)]) z = std::max(z, w - draw(rng));
      best_child[static_cast<size_t>(v)] = z;
    }
    for (int v = n - 1; v >= 2; --v) {
      const Edge& pe = t.edge(v - 1);  // edge that created v: {parent, v}
      auto& slot = best_child[static_cast<size_t>(pe.u)];
      slot = std::max(slot, pe.w - best_child[static_cast<size_t>(v)]);
    }
    // Z(o-, o+) summarises the side of o+, and vice versa.
    if (best_child[1] + best_child[0] < w_root) ++hits;
  }
  return static_cast<double>(hits) / reps;
}

struct DepthReduction {
  EdgeId edge;
  int depth_used;
};

/// Symmetric score matrix: one score per undirected edge, zero on non-edges,
/// diagonal completed to unit row sums (possibly negative).
struct ScoreMatrix {
  int n = 0;
  std::vector<double> edge_score;  // indexed by edge id
  std::vector<double> diagonal;
  int depth = 0;
  double cutoff = 0.0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<DepthReduction> reduced;

  double negative_diagonal_mean() const {
    double s = 0.0;
    for (double d : diagonal) s += std::max(0.0, -d);
    return n ? s / n : 0.0;
  }

  DenseMatrix to_dense(const WeightedGraph& g) const {
    DenseMatrix m(n);
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      const Edge& ed = g.edge(e);
      m(ed.u, ed.v) = m(ed.v, ed.u) = edge_score[static_cast<size_t>(e)];
    }
    for (int i = 0; i < n; ++i) m(i, i) = diagonal[static_cast<size_t>(i)];
    return m;
  }
};

inline std::uint64_t edge_seed(std::uint64_t seed, EdgeId e) { return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(e))); }

/// Scores every edge from its depth-H universal cover. An edge whose cover
/// exceeds `cover_budget` vertices is rescored with the largest depth that
/// fits, and recorded in `reduced`.
inline ScoreMatrix build_score_matrix(const WeightedGraph& g, const CdfGrid& zeta, int depth, double x, int replicates,
                                      std::uint64_t seed, int cover_budget, int threads = 1) {
  ScoreMatrix q;
  q.n = g.num_vertices();
  q.depth = depth;
  q.cutoff = x;
  q.replicates = replicates;
  q.seed = seed;
  q.edge_score.assign(static_cast<size_t>(g.num_edges()), 0.0);
  std::vector<int> used(static_cast<size_t>(g.num_edges()), depth);
  parallel_for(g.num_edges(), threads, [&](int e) {
    const Edge& ed = g.edge(e);
    for (int h = depth; h >= 0; --h) {
      try {
        const auto cover = universal_cover(g, ed.u, ed.v, h, cover_budget);
        q.edge_score[static_cast<size_t>(e)] = score_edge(*cover, zeta, x, replicates, edge_seed(seed, e));
        used[static_cast<size_t>(e)] = h;
        return;
      } catch (const BudgetError&) {
        if (h == 0) throw;
      }
    }
  });
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (used[static_cast<size_t>(e)] != depth) q.reduced.push_back({e, used[static_cast<size_t>(e)]});
  q.diagonal.assign(static_cast<size_t>(q.n), 1.0);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    q.diagonal[static_cast<size_t>(ed.u)] -= q.edge_score[static_cast<size_t>(e)];
    q.diagonal[static_cast<size_t>(ed.v)] -= q.edge_score[static_cast<size_t>(e)];
  }
  return q;
}

/// (1/n) sum_{i != j} q_ij w_ij.
inline double rounded_performance(const ScoreMatrix& q, const WeightedGraph& g) {
  if (q.n != g.num_vertices()) throw ValidationError("rounded_performance: dimension mismatch");
  if (q.n == 0) return 0.0;
  double s = 0.0;
  for (EdgeId e = 0; e < g.num_edges(); ++e) s += 2.0 * q.edge_score[static_cast<size_t>(e)] * g.weight(e);
  return s / q.n;
}

// ---------------------------------------------------------------------------
// Projection onto symmetric bistochastic matrices

struct LoadBalanceResult {
  DenseMatrix s;
  double moved_l1 = 0.0;  // ||s - m||_1
  double level = 0.0;     // common row/column sum before scaling
};

namespace detail {

// Moves mass inside lines so that every line sum of `sums` reaches `target`,
// preserving the sums in the other direction. at(line, k) addresses the
// entry of `line` at cross index k.
template <typename At>
void balance_lines(int n, std::vector<double>& sums, double target, At&& at) {
  std::vector<int> heavy, light;
  const double eps = 1e-15 * std::max(1.0, target);
  for (int i = 0; i < n; ++i) {
    if (sums[static_cast<size_t>(i)] > target + eps) heavy.push_back(i);
    else if (sums[static_cast<size_t>(i)] < target - eps) light.push_back(i);
  }
  size_t li = 0;
  std::vector<int> order(static_cast<size_t>(n));
  for (const int h : heavy) {
    // Largest entries of the heavy line first.
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return at(h, a) > at(h, b); });
    size_t pos = 0;
    while (sums[static_cast<size_t>(h)] > target + eps && li < light.size()) {
      while (pos < order.size() && at(h, order[pos]) <= 0.0) ++pos;
      if (pos == order.size()) break;
      const int k = order[pos];
      const int l = light[li];
      const double amount = std::min({sums[static_cast<size_t>(h)] - target, target - sums[static_cast<size_t>(l)], at(h, k)});
      at(h, k) -= amount;
      at(l, k) += amount;
      sums[static_cast<size_t>(h)] -= amount;
      sums[static_cast<size_t>(l)] += amount;
      if (sums[static_cast<size_t>(l)] >= target - eps) ++li;
    }
  }
}

}  // namespace detail

/// Equalises row sums at their mean L by moving mass along columns, then
/// column sums along rows, and divides by L. Entries stay nonnegative and the
/// L1 change before scaling is sum|L_i - L| + sum|C_j - L|.
inline LoadBalanceResult load_balance(const DenseMatrix& m) {
  const int n = m.n;
  for (double v : m.a)
    if (v < 0.0 || !std::isfinite(v)) throw ValidationError("load_balance: matrix has a negative or non-finite entry");
  auto rows = m.row_sums();
  auto cols = m.col_sums();
  for (int i = 0; i < n; ++i)
    if (rows[static_cast<size_t>(i)] <= 0.0 || cols[static_cast<size_t>(i)] <= 0.0)
      throw ValidationError("load_balance: row or column " + std::to_string(i) + " sums to zero");
  LoadBalanceResult out;
  out.s = m;
  if (n == 0) return out;
  const double level = m.total() / n;
  out.level = level;
  DenseMatrix& s = out.s;
  // Rows: move within column k from row h to row l.
  detail::balance_lines(n, rows, level, [&](int line, int k) -> double& { return s(line, k); });
  // Columns: move within row k from column h to column l.
  cols = s.col_sums();
  detail::balance_lines(n, cols, level, [&](int line, int k) -> double& { return s(k, line); });
  for (double& v : s.a) v /= level;
  out.moved_l1 = l1_distance(s, m);
  return out;
}

struct ProjectionResult {
  DenseMatrix s;
  double clipped_mass = 0.0;  // negative mass removed before balancing
  double moved_l1 = 0.0;      // load-balancing change on the clipped matrix
  double distance = 0.0;      // ||s - m||_1 against the unclipped input
};

/// Clip negatives, load-balance, then average with the transpose.
inline ProjectionResult project_sym_birkhoff(const DenseMatrix& m) {
  ProjectionResult out;
  DenseMatrix clipped = m;
  for (double& v : clipped.a) {
    if (v < 0.0) {
      out.clipped_mass += -v;
      v = 0.0;
    }
  }
  LoadBalanceResult lb = load_balance(clipped);
  out.moved_l1 = lb.moved_l1;
  out.s = DenseMatrix(m.n);
  for (int i = 0; i < m.n; ++i) {
    for (int j = i; j < m.n; ++j) {
      const double v = 0.5 * (lb.s(i, j) + lb.s(j, i));
      out.s(i, j) = v;
      out.s(j, i) = v;
    }
  }
  out.distance = l1_distance(out.s, m);
  return out;
}

/// Distance from m to the symmetric matrices: ||m - (m + m^T)/2||_1.
inline double distance_to_symmetric(const DenseMatrix& m) {
  double d = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) d += 0.5 * std::abs(m(i, j) - m(j, i));
  return d;
}

// ---------------------------------------------------------------------------
// Birkhoff-von Neumann decomposition

struct BvnTerm {
  double weight;
  std::vector<int> perm;  // row i -> column perm[i]
};

struct BvnDecomposition {
  int n = 0;
  std::vector<BvnTerm> terms;
  double residual_l1 = 0.0;

  double weight_sum() const {
    double s = 0.0;
    for (const auto& t : terms) s += t.weight;
    return s;
  }

  DenseMatrix reconstruct() const {
    DenseMatrix m(n);
    for (const auto& t : terms)
      for (int i = 0; i < n; ++i) m(i, t.perm[static_cast<size_t>(i)]) += t.weight;
    return m;
  }
};

namespace detail {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

// Perfect matching maintenance on the support {r_ij > threshold}.
class SupportMatcher {
 public:
  SupportMatcher(const DenseMatrix& r, double threshold) : r_(r), thr_(threshold), adj_(static_cast<size_t>(r.n)) {
    for (int i = 0; i < r.n; ++i)
      for (int j = 0; j < r.n; ++j)
        if (r(i, j) > thr_) adj_[static_cast<size_t>(i)].push_back(j);
    row_.assign(static_cast<size_t>(r.n), -1);
    col_.assign(static_cast<size_t>(r.n), -1);
  }

  void set_threshold(double t) {
    if (t < thr_) {
      for (int i = 0; i < r_.n; ++i) {
        adj_[static_cast<size_t>(i)].clear();
        for (int j = 0; j < r_.n; ++j)
          if (r_(i, j) > t) adj_[static_cast<size_t>(i)].push_back(j);
      }
    }
    thr_ = t;
  }

  void unmatch_row(int i) {
    const int j = row_[static_cast<size_t>(i)];
    if (j >= 0) col_[static_cast<size_t>(j)] = -1;
    row_[static_cast<size_t>(i)] = -1;
  }

  // Augments from every unmatched row; false if some row cannot be matched.
  bool complete() {
    for (int i = 0; i < r_.n; ++i)
      if (row_[static_cast<size_t>(i)] < 0 && !augment(i)) return false;
    return true;
  }

  const std::vector<int>& rows() const { return row_; }

 private:
  bool alive(int i, int j) const { return r_(i, j) > thr_; }

  // BFS over alternating paths from row `start`.
  bool augment(int start) {
    const int n = r_.n;
    std::vector<int> parent_col_of_row(static_cast<size_t>(n), -2);  // column through which a row was reached
    std::vector<int> parent_row_of_col(static_cast<size_t>(n), -1);
    std::deque<int> queue{start};
    parent_col_of_row[static_cast<size_t>(start)] = -1;
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      auto& list = adj_[static_cast<size_t>(i)];
      // Drop dead entries lazily.
      list.erase(std::remove_if(list.begin(), list.end(), [&](int j) { return !alive(i, j); }), list.end());
      for (const int j : list) {
        if (parent_row_of_col[static_cast<size_t>(j)] >= 0) continue;
        parent_row_of_col[static_cast<size_t>(j)] = i;
        const int owner = col_[static_cast<size_t>(j)];
        if (owner < 0) {
          // Flip the path ending at free column j.
          int col = j;
          int row = i;
          while (true) {
            const int prev = row_[static_cast<size_t>(row)];
            row_[static_cast<size_t>(row)] = col;
            col_[static_cast<size_t>(col)] = row;
            if (row == start) break;
            col = prev;
            row = parent_row_of_col[static_cast<size_t>(col)];
          }
          return true;
        }
        if (parent_col_of_row[static_cast<size_t>(owner)] == -2) {
          parent_col_of_row[static_cast<size_t>(owner)] = j;
          queue.push_back(owner);
        }
      }
    }
    return false;
  }

  const DenseMatrix& r_;
  double thr_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> row_;
  std::vector<int> col_;
};

}  // namespace detail

/// Greedy decomposition s ~ sum_k lambda_k P_k: find a perfect matching on
/// the support (entries > tol/n), subtract its minimum entry, repeat until
/// the remaining mass drops below tol or `max_terms` terms exist.
inline BvnDecomposition birkhoff_decompose(const DenseMatrix& s, double tol, int max_terms) {
  const int n = s.n;
  if (max_stochastic_error(s) > 1e-6) throw ValidationError("birkhoff_decompose: input is not bistochastic within 1e-6");
  for (double v : s.a)
    if (v < 0.0) throw ValidationError("birkhoff_decompose: negative entry");
  BvnDecomposition d;
  d.n = n;
  if (n == 0) return d;
  DenseMatrix r = s;
  double mass = r.total();
  detail::SupportMatcher matcher(r, tol / n);
  while (static_cast<int>(d.terms.size()) < max_terms) {
    // The running count loses absolute precision over many subtractions;
    // recount before stopping or giving up.
    if (mass < tol && (mass = r.total()) < tol) break;
    if (!matcher.complete()) {
      if ((mass = r.total()) < tol) break;
      matcher.set_threshold(0.0);
      if (!matcher.complete())
        throw DecompositionStalledError("birkhoff_decompose: no perfect matching on the support after " +
                                        std::to_string(d.terms.size()) + " terms (remaining mass " +
                                        detail::sci(mass) + ")");
    }
    const auto& perm = matcher.rows();
    double lambda = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) lambda = std::min(lambda, r(i, perm[static_cast<size_t>(i)]));
    d.terms.push_back({lambda, perm});
    std::vector<int> dead;
    for (int i = 0; i < n; ++i) {
      double& v = r(i, perm[static_cast<size_t>(i)]);
      v -= lambda;
      mass -= lambda;
      if (v <= 0.0) {
        mass -= v;
        v = 0.0;
      }
      if (v <= tol / n) dead.push_back(i);
    }
    for (int i : dead) matcher.unmatch_row(i);
  }
  d.residual_l1 = l1_distance(d.reconstruct(), s);
  return d;
}

/// Samples a term with probability proportional to its weight, uses P or P^T
/// with probability 1/2 each, and turns the permutation into a matching:
/// fixed points stay unmatched, 2-cycles {i,j} are matched when {i,j} is an
/// edge, and longer cycles are walked from their smallest vertex pairing
/// consecutive vertices (v0,v1), (v2,v3), ..., keeping only edges of g.
inline Matching extract_matching(const BvnDecomposition& d, const WeightedGraph& g, std::uint64_t seed) {
  if (d.n != g.num_vertices()) throw ValidationError("extract_matching: dimension mismatch");
  if (d.terms.empty()) return Matching::empty(g);
  Rng rng(seed);
  std::vector<double> cum(d.terms.size());
  double acc = 0.0;
  for (size_t k = 0; k < d.terms.size(); ++k) cum[k] = (acc += d.terms[k].weight);
  const double u = uniform01(rng) * acc;
  size_t pick = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
  pick = std::min(pick, d.terms.size() - 1);
  std::vector<int> perm = d.terms[pick].perm;
  if (uniform01(rng) < 0.5) {
    std::vector<int> inv(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) inv[static_cast<size_t>(perm[i])] = static_cast<int>(i);
    perm.swap(inv);
  }
  const int n = d.n;
  std::vector<bool> visited(static_cast<size_t>(n), false);
  std::vector<EdgeId> chosen;
  for (int start = 0; start < n; ++start) {
    if (visited[static_cast<size_t>(start)]) continue;
    // `start` is the smallest unvisited vertex, hence the minimum of its cycle.
    std::vector<int> cycle;
    for (int v = start; !visited[static_cast<size_t>(v)]; v = perm[static_cast<size_t>(v)]) {
      visited[static_cast<size_t>(v)] = true;
      cycle.push_back(v);
    }
    for (size_t k = 0; k + 1 < cycle.size(); k += 2) {
      if (auto e = g.find_edge(cycle[k], cycle[k + 1])) chosen.push_back(*e);
    }
  }
  return Matching::from_edges(g, std::move(chosen));
}

}  // namespace cavmatch
