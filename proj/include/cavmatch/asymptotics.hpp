#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cavmatch/graph.hpp"
#include "cavmatch/laws.hpp"
#include "cavmatch/oracle.hpp"
#include "cavmatch/rde.hpp"

namespace cavmatch {

enum class Method { kClosedForm, kQuadrature, kMonteCarlo, kEmpirical };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kClosedForm: return "closed-form";
    case Method::kQuadrature: return "quadrature";
    case Method::kMonteCarlo: return "monte-carlo";
    case Method::kEmpirical: return "empirical";
  }
  return "?";
}

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  Method method = Method::kClosedForm;
};

// Accumulates a sample mean and its standard error.
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  long long count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_of_mean() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  long long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Either representation of the stationary message law.
using ZetaLaw = std::variant<const CdfGrid*, const SamplePool*>;

namespace detail {

class ZetaSampler {
 public:
  explicit ZetaSampler(ZetaLaw z) : law_(z) {
    if (const auto* g = std::get_if<const CdfGrid*>(&law_)) grid_ = *g;
  }
  double operator()(Rng& rng) const {
    if (grid_) return CdfSampler(*grid_)(rng);
    const auto& s = std::get<const SamplePool*>(law_)->samples;
    return s[static_cast<size_t>(bounded(rng, s.size()))];
  }

 private:
  ZetaLaw law_;
  const CdfGrid* grid_ = nullptr;
};

// Law of Z + Z' for Z, Z' iid from the grid law: the continuous part of each
// cell is placed at its midpoint. Entry m is the mass at m * step / 2.
inline std::vector<double> pair_sum_masses(const CdfGrid& h) {
  const auto& v = h.values();
  const size_t g = v.size();
  std::vector<double> cell(g, 0.0);  // cell[j]: mass of (t_{j-1}, t_j], midpoint (2j-1) s/2
  for (size_t j = 1; j < g; ++j) cell[j] = v[j] - v[j - 1];
  const double atom = v[0];
  std::vector<double> out(4 * g + 2, 0.0);
  out[0] = atom * atom;
  for (size_t j = 1; j < g; ++j) out[2 * j - 1] += 2.0 * atom * cell[j];
  for (size_t i = 1; i < g; ++i) {
    if (cell[i] == 0.0) continue;
    const double ci = cell[i];
    for (size_t j = 1; j < g; ++j) out[2 * (i + j - 1)] += ci * cell[j];
  }
  return out;
}

}  // namespace detail

/// E[W 1(Z + Z' < W)] by Monte Carlo.
inline Estimate edge_perf_mc(ZetaLaw zeta, const WeightLaw& weights, long long replicates, std::uint64_t seed) {
  detail::ZetaSampler draw(zeta);
  Rng rng(seed);
  MeanAccumulator acc;
  for (long long r = 0; r < replicates; ++r) {
    const double s = draw(rng) + draw(rng);
    const double w = weights.sample(rng);
    acc.add(s < w ? w : 0.0);
  }
  return {acc.mean(), acc.stderr_of_mean(), Method::kMonteCarlo};
}

/// E[W 1(Z + Z' < W)] = E[T(Z + Z')] with T(s) = E[W 1(W > s)], integrated
/// against the discrete self-convolution of the grid law.
inline Estimate edge_perf_quadrature(const CdfGrid& h, const WeightLaw& weights) {
  const auto masses = detail::pair_sum_masses(h);
  const double half = 0.5 * h.step();
  double acc = 0.0;
  for (size_t m = 0; m < masses.size(); ++m)
    if (masses[m] != 0.0) acc += masses[m] * weights.tail_mean(half * static_cast<double>(m));
  return {acc, 0.0, Method::kQuadrature};
}

/// P(Z + Z' < W) by quadrature, the direct form of the matched-edge density.
inline Estimate edge_density_quadrature(const CdfGrid& h, const WeightLaw& weights) {
  const auto masses = detail::pair_sum_masses(h);
  const double half = 0.5 * h.step();
  double acc = 0.0;
  for (size_t m = 0; m < masses.size(); ++m)
    if (masses[m] != 0.0) acc += masses[m] * weights.survival(half * static_cast<double>(m));
  return {acc, 0.0, Method::kQuadrature};
}

inline Estimate edge_density_mc(ZetaLaw zeta, const WeightLaw& weights, long long replicates, std::uint64_t seed) {
  detail::ZetaSampler draw(zeta);
  Rng rng(seed);
  MeanAccumulator acc;
  for (long long r = 0; r < replicates; ++r) {
    const double s = draw(rng) + draw(rng);
    acc.add(s < weights.sample(rng) ? 1.0 : 0.0);
  }
  return {acc.mean(), acc.stderr_of_mean(), Method::kMonteCarlo};
}

/// (1 - phi(phi_hat^{-1}(h0))) / phi'(1).
inline double edge_density(const DegreeLaw& law, double h0) {
  return (1.0 - law.phi(inv_phi_hat(law, h0))) / law.mean();
}

/// 1 - phi(phi_hat^{-1}(h0)).
inline double vertex_density(const DegreeLaw& law, double h0) { return 1.0 - law.phi(inv_phi_hat(law, h0)); }

/// 1 - (phi_hat^{-1}(h0))^k: probability that a degree-k vertex is matched.
inline double degree_conditioned_match_prob(const DegreeLaw& law, double h0, int k) {
  if (k < 0) throw ValidationError("degree_conditioned_match_prob.k: must be >= 0");
  return 1.0 - std::pow(inv_phi_hat(law, h0), k);
}

/// Gap on one side of a matched edge {u,v}: none of the k children of v in
/// T_(u,v) is matched, given deg(v) = k+1. Evaluates the stated form
///   h(0)^k / (1 - x^k) * k * E[1(W >= Z) F_w(W - Z)^k],  x = phi_hat^{-1}(h(0)).
/// k = 0 is the vacuous event and returns 1. See gap_event_probability for the
/// normalization that matches event counts.
inline Estimate gap_probability(const CdfGrid& h, const WeightLaw& weights, const DegreeLaw& law, int k,
                                long long replicates, std::uint64_t seed) {
  if (k < 0) throw ValidationError("gap_probability.k: must be >= 0");
  if (k == 0) return {1.0, 0.0, Method::kClosedForm};
  const double h0 = h.atom_at_zero();
  const double x = inv_phi_hat(law, h0);
  const double denom = 1.0 - std::pow(x, k);
  if (!(denom > 0.0)) throw ValidationError("gap_probability: degree k has zero matching probability");
  const double prefactor = std::pow(h0, k) / denom * k;
  CdfSampler draw(h);
  Rng rng(seed);
  MeanAccumulator acc;
  for (long long r = 0; r < replicates; ++r) {
    const double gap = weights.sample(rng) - draw(rng);
    acc.add(gap >= 0.0 ? std::pow(weights.cdf(gap), k) : 0.0);
  }
  return {prefactor * acc.mean(), prefactor * acc.stderr_of_mean(), Method::kMonteCarlo};
}

/// Same event, normalized by P((u,v) matched | deg(v) = k+1) = (1 - x^{k+1}) / (k+1):
///   h(0)^k (k+1) / (1 - x^{k+1}) * E[1(W >= Z) F_w(W - Z)^k].
/// This is the conditional probability that direct event counting converges to;
/// gap_probability's prefactor uses (1 - x^k) / k instead and differs from it.
inline Estimate gap_event_probability(const CdfGrid& h, const WeightLaw& weights, const DegreeLaw& law, int k,
                                      long long replicates, std::uint64_t seed) {
  if (k < 0) throw ValidationError("gap_event_probability.k: must be >= 0");
  // Exactly 1 at k = 0; the sampled form only reaches it up to Monte-Carlo error.
  if (k == 0) return {1.0, 0.0, Method::kClosedForm};
  const double h0 = h.atom_at_zero();
  const double x = inv_phi_hat(law, h0);
  const double denom = 1.0 - std::pow(x, k + 1);
  if (!(denom > 0.0)) throw ValidationError("gap_event_probability: degree k+1 has zero matching probability");
  const double prefactor = std::pow(h0, k) * (k + 1) / denom;
  CdfSampler draw(h);
  Rng rng(seed);
  MeanAccumulator acc;
  for (long long r = 0; r < replicates; ++r) {
    const double gap = weights.sample(rng) - draw(rng);
    acc.add(gap >= 0.0 ? std::pow(weights.cdf(gap), k) : 0.0);
  }
  return {prefactor * acc.mean(), prefactor * acc.stderr_of_mean(), Method::kMonteCarlo};
}

struct AsymptoticReport {
  double h0 = 0.0;
  Estimate edge_perf;
  Estimate edge_perf_mc;
  Estimate edge_density;         // closed form from h0
  Estimate edge_density_direct;  // P(Z + Z' < W) by quadrature
  Estimate vertex_density;
  std::vector<double> degree_match_prob;  // index k
  std::vector<Estimate> gap;              // index k, stated prefactor
  std::vector<Estimate> gap_event;        // index k, exact conditional normalization
};

struct ReportOptions {
  int max_degree = 5;
  long long mc_replicates = 200'000;
  std::uint64_t seed = 1;
};

inline AsymptoticReport asymptotic_report(const DegreeLaw& law, const WeightLaw& weights, const CdfGrid& h,
                                          const ReportOptions& opt = {}) {
  AsymptoticReport r;
  r.h0 = h.atom_at_zero();
  r.edge_perf = edge_perf_quadrature(h, weights);
  r.edge_perf_mc = edge_perf_mc(&h, weights, opt.mc_replicates, opt.seed);
  r.edge_density = {edge_density(law, r.h0), 0.0, Method::kClosedForm};
  r.edge_density_direct = edge_density_quadrature(h, weights);
  r.vertex_density = {vertex_density(law, r.h0), 0.0, Method::kClosedForm};
  for (int k = 0; k <= opt.max_degree; ++k) r.degree_match_prob.push_back(degree_conditioned_match_prob(law, r.h0, k));
  const double x = inv_phi_hat(law, r.h0);
  for (int k = 0; k <= opt.max_degree; ++k) {
    if (k > 0 && 1.0 - std::pow(x, k) <= 0.0) {
      r.gap.push_back({std::nan(""), 0.0, Method::kMonteCarlo});
      continue;
    }
    r.gap.push_back(gap_probability(h, weights, law, k, opt.mc_replicates, opt.seed + 1000 + static_cast<std::uint64_t>(k)));
  }
  for (int k = 0; k <= opt.max_degree; ++k) {
    if (1.0 - std::pow(x, k + 1) <= 0.0) {
      r.gap_event.push_back({std::nan(""), 0.0, Method::kMonteCarlo});
      continue;
    }
    // Same seed as gap[k]: the two differ only by their prefactor.
    r.gap_event.push_back(
        gap_event_probability(h, weights, law, k, opt.mc_replicates, opt.seed + 1000 + static_cast<std::uint64_t>(k)));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Finite-graph counters used to compare simulations with the limits above.

struct DegreeMatchCounts {
  std::vector<long long> vertices;  // index k
  std::vector<long long> matched;
};

inline void count_degree_matches(const WeightedGraph& g, const Matching& m, const std::vector<bool>& include,
                                 int max_degree, DegreeMatchCounts& out) {
  out.vertices.resize(static_cast<size_t>(max_degree) + 1, 0);
  out.matched.resize(static_cast<size_t>(max_degree) + 1, 0);
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    if (!include.empty() && !include[static_cast<size_t>(v)]) continue;
    const int d = g.degree(v);
    if (d > max_degree) continue;
    ++out.vertices[static_cast<size_t>(d)];
    if (m.is_matched(v)) ++out.matched[static_cast<size_t>(d)];
  }
}

struct GapCounts {
  long long trials = 0;
  long long events = 0;
};

/// For every matched edge oriented (u, v) with deg(v) = k + 1: is every
/// neighbour of v other than u unmatched?
inline GapCounts count_gap_events(const WeightedGraph& g, const Matching& m, int k) {
  GapCounts c;
  for (EdgeId e : m.edge_ids()) {
    const Edge& ed = g.edge(e);
    for (const auto& [u, v] : {std::pair{ed.u, ed.v}, std::pair{ed.v, ed.u}}) {
      if (g.degree(v) != k + 1) continue;
      ++c.trials;
      bool gap = true;
      for (const Incidence& inc : g.neighbors(v))
        if (inc.neighbor != u && m.is_matched(inc.neighbor)) gap = false;
      if (gap) ++c.events;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Finite-graph experiments against the limit predictions.

enum class GeneratorKind { kPath, kErdosRenyi, kConfigModel };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kErdosRenyi;
  double c = 0.8;                  // Erdos-Renyi mean degree
  std::optional<DegreeLaw> degrees;  // configuration model degree law
  WeightLaw weights = WeightLaw::exponential(1.0);

  /// Degree law of the local limit.
  DegreeLaw limit_law() const {
    switch (kind) {
      case GeneratorKind::kPath: return DegreeLaw::regular(2);
      case GeneratorKind::kErdosRenyi: return DegreeLaw::poisson(c);
      case GeneratorKind::kConfigModel:
        if (!degrees) throw ValidationError("generator.degree_law: required for the configuration model");
        return *degrees;
    }
    throw ValidationError("generator.kind: unknown");
  }

  WeightedGraph generate(int n, std::uint64_t seed) const {
    switch (kind) {
      case GeneratorKind::kPath: return gen_path(n, weights, seed);
      case GeneratorKind::kErdosRenyi: return gen_erdos_renyi(n, c, weights, seed);
      case GeneratorKind::kConfigModel: {
        const DegreeLaw law = limit_law();
        Rng rng(splitmix64(seed));
        std::vector<int> deg(static_cast<size_t>(n));
        for (int& d : deg) d = law.sample_degree(rng);
        return gen_config_model(std::move(deg), weights, seed).graph;
      }
    }
    throw ValidationError("generator.kind: unknown");
  }
};

struct StatRow {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  double prediction = 0.0;

  double difference() const { return value - prediction; }
  double z_score() const { return stderr_ > 0.0 ? difference() / stderr_ : (difference() == 0.0 ? 0.0 : INFINITY); }
};

struct SizeRow {
  int n = 0;
  int replicates = 0;
  double solved_fraction = 1.0;  // minimum over replicates
  StatRow edge_density{"edge_density"};
  StatRow weight_per_edge{"edge_perf"};
  StatRow vertex_density{"vertex_density"};
  double identity_error = 0.0;  // worst relative error of perf_V = mean_degree * perf_E
};

struct GraphTable {
  double h0 = 0.0;
  std::vector<SizeRow> rows;
};

inline constexpr int kDefaultMaxCycleRank = 12;

/// Per size: replicate r uses seed + r. Exact optima come from
/// exact_opt_by_components; limit predictions from the grid law h.
inline GraphTable estimate_from_graphs(const GeneratorSpec& gen, const std::vector<int>& sizes, int replicates,
                                       std::uint64_t seed, const CdfGrid& h, int component_limit = 30,
                                       int threads = 1, int max_cycle_rank = kDefaultMaxCycleRank) {
  const DegreeLaw law = gen.limit_law();
  GraphTable table;
  table.h0 = h.atom_at_zero();
  const double pred_density = edge_density(law, table.h0);
  const double pred_vertex = vertex_density(law, table.h0);
  const double pred_perf = edge_perf_quadrature(h, gen.weights).value;
  for (const int n : sizes) {
    struct Sample {
      double density, perf, vertex, solved, identity;
    };
    std::vector<Sample> samples(static_cast<size_t>(std::max(0, replicates)));
    parallel_for(replicates, threads, [&](int r) {
      const WeightedGraph g = gen.generate(n, seed + static_cast<std::uint64_t>(r));
      const ComponentOptResult opt = exact_opt_by_components(g, component_limit, max_cycle_rank);
      const MatchingStats st = matching_stats(g, opt.matching);
      const double lhs = st.perf_vertex;
      const double rhs = st.mean_degree * st.perf_edge;
      const double scale = std::max(std::abs(lhs), std::abs(rhs));
      samples[static_cast<size_t>(r)] = {st.matched_edge_fraction, g.num_edges() ? st.total_weight / g.num_edges() : 0.0,
                                         st.matched_vertex_fraction, opt.solved_fraction,
                                         scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0};
    });
    SizeRow row;
    row.n = n;
    row.replicates = replicates;
    MeanAccumulator d, p, v;
    for (const Sample& s : samples) {
      d.add(s.density);
      p.add(s.perf);
      v.add(s.vertex);
      row.solved_fraction = std::min(row.solved_fraction, s.solved);
      row.identity_error = std::max(row.identity_error, s.identity);
    }
    row.edge_density = {"edge_density", d.mean(), d.stderr_of_mean(), pred_density};
    row.weight_per_edge = {"edge_perf", p.mean(), p.stderr_of_mean(), pred_perf};
    row.vertex_density = {"vertex_density", v.mean(), v.stderr_of_mean(), pred_vertex};
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace cavmatch
