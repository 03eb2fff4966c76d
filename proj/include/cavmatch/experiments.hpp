#pragma once

// Config-driven experiment runners behind the command-line tool. Each
// command validates its JSON config, writes its artifacts to an output
// directory and returns a table of report rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavmatch/asymptotics.hpp"
#include "cavmatch/cavity.hpp"
#include "cavmatch/error.hpp"
#include "cavmatch/generators.hpp"
#include "cavmatch/io.hpp"
#include "cavmatch/laws.hpp"
#include "cavmatch/oracle.hpp"
#include "cavmatch/rde.hpp"
#include "cavmatch/rounding.hpp"

namespace cavmatch::experiments {

using json = nlohmann::json;

inline constexpr const char* kSchema = "cavmatch/1";

// ---------------------------------------------------------------------------
// Config reading

/// One JSON object of the config. Every key read is remembered so that
/// finish() can reject the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ValidationError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ValidationError(field(key) + ": required");
    return convert<T>(key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return convert<T>(key);
  }

  Section child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ValidationError(field(key) + ": required");
    return Section((*j_)[key], field(key));
  }

  std::optional<Section> optional_child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return Section((*j_)[key], field(key));
  }

  void mark(const std::string& key) { used_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : j_->items())
      if (!used_.count(key)) throw ValidationError(field(key) + ": unknown key");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& raw() const { return *j_; }

 private:
  template <typename T>
  T convert(const std::string& key) const {
    const json& v = (*j_)[key];
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ValidationError(field(key) + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ValidationError(field(key) + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ValidationError(field(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ValidationError(field(key) + ": expected a string");
    }
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ValidationError(field(key) + ": wrong type");
    }
  }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

namespace detail {

inline int positive_int(Section& s, const std::string& key, int fallback, int minimum = 1) {
  const int v = s.get<int>(key, fallback);
  if (v < minimum) throw ValidationError(s.field(key) + ": must be >= " + std::to_string(minimum));
  return v;
}

inline double positive_double(Section& s, const std::string& key, double fallback) {
  const double v = s.get<double>(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(s.field(key) + ": must be a finite number > 0");
  return v;
}

}  // namespace detail

/// {"kind": "regular", "d": 3} | {"kind": "poisson", "c": 2} | {"kind": "pmf", "pmf": [...]}
inline DegreeLaw parse_degree_law(Section s) {
  const auto kind = s.require<std::string>("kind");
  DegreeLaw law = DegreeLaw::regular(1);
  if (kind == "regular") {
    const int d = s.require<int>("d");
    if (d < 0) throw ValidationError(s.field("d") + ": must be >= 0");
    law = DegreeLaw::regular(d);
  } else if (kind == "poisson") {
    const double c = s.require<double>("c");
    if (!(c > 0.0)) throw ValidationError(s.field("c") + ": must be > 0");
    law = DegreeLaw::poisson(c);
  } else if (kind == "pmf") {
    try {
      law = DegreeLaw::from_pmf(s.require<std::vector<double>>("pmf"));
    } catch (const ValidationError& e) {
      throw ValidationError(s.field("pmf") + ": " + e.what());
    }
  } else {
    throw ValidationError(s.field("kind") + ": unknown degree law \"" + kind + "\"");
  }
  s.finish();
  return law;
}

/// {"kind": "exponential", "rate": 1} | {"kind": "uniform", "a": 0, "b": 1}
/// | {"kind": "empirical", "samples": [...]}
inline WeightLaw parse_weight_law(Section s) {
  const auto kind = s.require<std::string>("kind");
  WeightLaw law = WeightLaw::exponential(1.0);
  try {
    if (kind == "exponential") {
      law = WeightLaw::exponential(detail::positive_double(s, "rate", 1.0));
    } else if (kind == "uniform") {
      law = WeightLaw::uniform(s.get<double>("a", 0.0), s.get<double>("b", 1.0));
    } else if (kind == "empirical") {
      law = WeightLaw::empirical(s.require<std::vector<double>>("samples"));
    } else {
      throw ValidationError(s.field("kind") + ": unknown weight law \"" + kind + "\"");
    }
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind(s.where(), 0) == 0) throw;
    throw ValidationError(s.where() + ": " + msg);
  }
  s.finish();
  return law;
}

inline WeightLaw weights_or_default(Section& s) {
  if (auto w = s.optional_child("weights")) return parse_weight_law(*w);
  return WeightLaw::exponential(1.0);
}

/// {"step": 1e-3, "t_max": null}
inline GridSpec parse_grid(Section& parent) {
  GridSpec g;
  if (auto s = parent.optional_child("grid")) {
    g.step = detail::positive_double(*s, "step", 1e-3);
    if (auto t = s->optional<double>("t_max")) {
      if (!(*t > g.step)) throw ValidationError(s->field("t_max") + ": must exceed grid.step");
      g.t_max = *t;
    }
    s->finish();
  }
  return g;
}

/// {"kind": "path"} | {"kind": "erdos_renyi", "c": 0.8}
/// | {"kind": "config_model", "degree_law": {...}}. Weights come from the
/// enclosing config.
inline GeneratorSpec parse_generator(Section& parent, const WeightLaw& weights) {
  GeneratorSpec gen;
  gen.weights = weights;
  auto s = parent.optional_child("generator");
  if (!s) return gen;
  const auto kind = s->require<std::string>("kind");
  if (kind == "path") {
    gen.kind = GeneratorKind::kPath;
  } else if (kind == "erdos_renyi") {
    gen.kind = GeneratorKind::kErdosRenyi;
    gen.c = s->require<double>("c");
    if (!(gen.c > 0.0)) throw ValidationError(s->field("c") + ": must be > 0");
  } else if (kind == "config_model") {
    gen.kind = GeneratorKind::kConfigModel;
    gen.degrees = parse_degree_law(s->child("degree_law"));
  } else {
    throw ValidationError(s->field("kind") + ": unknown generator \"" + kind + "\"");
  }
  s->finish();
  return gen;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string group;  // e.g. "n=1000"; empty for single-population reports
  std::string name;
  std::string unit;
  std::string method;
  double value = 0.0;
  double stderr_ = std::nan("");
  double prediction = std::nan("");

  double z() const {
    if (std::isnan(prediction)) return std::nan("");
    const double d = value - prediction;
    if (stderr_ > 0.0) return d / stderr_;
    return d == 0.0 ? 0.0 : std::nan("");
  }
};

inline std::string csv_number(double x) { return std::isfinite(x) ? io::format_double(x) : ""; }

inline json json_number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "group,name,unit,method,value,stderr,prediction,z\n";
  for (const ReportRow& r : rows)
    os << r.group << ',' << r.name << ',' << r.unit << ',' << r.method << ',' << csv_number(r.value) << ','
       << csv_number(r.stderr_) << ',' << csv_number(r.prediction) << ',' << csv_number(r.z()) << '\n';
}

inline json report_rows_json(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const ReportRow& r : rows)
    arr.push_back({{"group", r.group},
                   {"name", r.name},
                   {"unit", r.unit},
                   {"method", r.method},
                   {"value", json_number(r.value)},
                   {"stderr", json_number(r.stderr_)},
                   {"prediction", json_number(r.prediction)},
                   {"z", json_number(r.z())}});
  return arr;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config
  std::optional<int> threads;
  std::filesystem::path out = ".";
};

struct CommandResult {
  int exit_code = 0;  // 0, or 4 when a built-in check fails
  std::vector<ReportRow> rows;
  json summary = json::object();
};

namespace detail {

struct Common {
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Top-level keys shared by every command.
inline Common read_common(Section& s, const std::string& command, const RunOptions& opt) {
  const auto schema = s.require<std::string>("schema");
  if (schema != kSchema)
    throw ValidationError("schema: unsupported \"" + schema + "\", expected \"" + std::string(kSchema) + "\"");
  if (auto c = s.optional<std::string>("command"); c && *c != command)
    throw ValidationError("command: config is for \"" + *c + "\", not \"" + command + "\"");
  Common c;
  const auto seed = s.get<long long>("seed", 1);
  if (seed < 0) throw ValidationError("seed: must be >= 0");
  c.seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(seed);
  c.threads = opt.threads ? *opt.threads : positive_int(s, "threads", 1);
  if (c.threads < 1) throw ValidationError("threads: must be >= 1");
  return c;
}

inline void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw ValidationError("out: cannot create directory " + p.string() + ": " + ec.message());
}

inline std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw ValidationError("out: cannot write " + p.string());
  return os;
}

inline void write_reports(const std::filesystem::path& dir, const std::string& stem, const std::string& command,
                          const Common& common, const json& config, CommandResult& res) {
  {
    auto os = open_out(dir / (stem + ".csv"));
    write_report_csv(os, res.rows);
  }
  json doc = {{"schema", kSchema},
              {"command", command},
              {"seed", common.seed},
              {"threads", common.threads},
              {"exit_code", res.exit_code},
              {"config", config},
              {"summary", res.summary},
              {"rows", report_rows_json(res.rows)}};
  auto os = open_out(dir / (stem + ".json"));
  os << doc.dump(2) << '\n';
}

/// Stationary law for the given degree and weight laws: the closed form for
/// exponential weights, grid iteration otherwise.
inline CdfGrid limit_cdf(const DegreeLaw& law, const WeightLaw& w, const GridSpec& grid, double tol, int max_iter) {
  if (w.is_exponential()) return exp_fixed_point_K(law, 1.0 / w.mean(), 1e-13, grid).h;
  return iterate_h(law, w, grid, tol, max_iter).h;
}

inline const char* name_of(Method m) { return method_name(m); }

}  // namespace detail

// ---------------------------------------------------------------------------
// rde

/// Solves for the stationary message law three ways (grid iteration,
/// population dynamics, exponential closed form when it applies) and
/// reports the derived limit quantities.
inline CommandResult cmd_rde(const json& config, const RunOptions& opt) {
  Section s(config, "");
  const auto common = detail::read_common(s, "rde", opt);
  const DegreeLaw law = parse_degree_law(s.child("degree_law"));
  const WeightLaw weights = weights_or_default(s);
  const GridSpec grid = parse_grid(s);
  const double tol = detail::positive_double(s, "tol", 1e-10);
  const int max_iter = detail::positive_int(s, "max_iter", 10000);
  const int pool_size = detail::positive_int(s, "pool_size", 100000, 0);
  const int sweeps = detail::positive_int(s, "sweeps", 100, 0);
  const long long mc = s.get<long long>("mc_replicates", 200000);
  if (mc < 0) throw ValidationError("mc_replicates: must be >= 0");
  const int max_degree = detail::positive_int(s, "max_degree", 5, 0);
  const bool write_pool = s.get<bool>("write_pool", false);
  s.finish();
  if (pool_size != 0 && pool_size < 1000) throw ValidationError("pool_size: must be 0 or >= 1000");

  detail::ensure_dir(opt.out);
  CommandResult res;
  auto row = [&](std::string name, std::string unit, std::string method, double value, double se = std::nan(""),
                 double pred = std::nan("")) {
    res.rows.push_back({"", std::move(name), std::move(unit), std::move(method), value, se, pred});
  };

  const IterateResult it = iterate_h(law, weights, grid, tol, max_iter);
  const CdfGrid& h = it.h;
  {
    auto os = detail::open_out(opt.out / "h.csv");
    io::write_cdf_csv(os, h);
  }
  res.summary["grid"] = {{"step", h.step()},
                         {"t_max", h.t_max()},
                         {"points", h.size()},
                         {"iterations", it.iterations},
                         {"residual", it.residual},
                         {"warnings", it.warnings}};
  res.summary["degree_law"] = law.describe();
  res.summary["weights"] = weights.describe();

  std::optional<ExpFixedPoint> closed;
  if (weights.is_exponential()) {
    closed = exp_fixed_point_K(law, 1.0 / weights.mean(), 1e-13, grid);
    res.summary["K"] = closed->K;
    auto os = detail::open_out(opt.out / "h_closed_form.csv");
    io::write_cdf_csv(os, closed->h);
  }

  const double h0_ref = closed ? closed->h.atom_at_zero() : std::nan("");
  row("h0", "probability", "quadrature", h.atom_at_zero(), std::nan(""), h0_ref);
  if (closed) {
    row("h0", "probability", "closed-form", closed->h.atom_at_zero());
    row("sup_distance_grid_closed_form", "probability", "quadrature", h.sup_distance(closed->h));
  }
  std::optional<SamplePool> pool;
  if (pool_size > 0) {
    pool = population_dynamics(law, weights, pool_size, sweeps, common.seed, common.threads);
    const double a = pool->atom_at_zero();
    row("h0", "probability", "monte-carlo", a, std::sqrt(a * (1.0 - a) / pool_size), h.atom_at_zero());
    row("kolmogorov_pool_grid", "probability", "monte-carlo", pool->kolmogorov_distance(h));
    if (write_pool) {
      auto os = detail::open_out(opt.out / "pool.bin", true);
      io::write_pool_binary(os, *pool);
    }
  }

  ReportOptions ro;
  ro.max_degree = max_degree;
  ro.mc_replicates = std::max<long long>(mc, 2);
  ro.seed = common.seed;
  const AsymptoticReport rep = asymptotic_report(law, weights, h, ro);
  row("edge_perf", "weight/edge", detail::name_of(rep.edge_perf.method), rep.edge_perf.value);
  if (mc > 0)
    row("edge_perf", "weight/edge", detail::name_of(rep.edge_perf_mc.method), rep.edge_perf_mc.value,
        rep.edge_perf_mc.stderr_, rep.edge_perf.value);
  row("vertex_perf", "weight/vertex", detail::name_of(rep.edge_perf.method), law.mean() * rep.edge_perf.value);
  row("edge_density", "fraction", detail::name_of(rep.edge_density.method), rep.edge_density.value);
  row("edge_density", "fraction", detail::name_of(rep.edge_density_direct.method), rep.edge_density_direct.value,
      std::nan(""), rep.edge_density.value);
  row("vertex_density", "fraction", detail::name_of(rep.vertex_density.method), rep.vertex_density.value);
  for (int k = 0; k <= max_degree; ++k) {
    if (law.pmf(k) <= 0.0) continue;
    row("match_prob_deg" + std::to_string(k), "probability", "closed-form",
        rep.degree_match_prob[static_cast<size_t>(k)]);
  }
  if (mc > 0) {
    for (int k = 0; k <= max_degree; ++k) {
      if (law.pmf(k + 1) <= 0.0) continue;
      const Estimate& g = rep.gap[static_cast<size_t>(k)];
      const Estimate& ge = rep.gap_event[static_cast<size_t>(k)];
      row("gap_k" + std::to_string(k), "probability", detail::name_of(g.method), g.value, g.stderr_);
      row("gap_event_k" + std::to_string(k), "probability", detail::name_of(ge.method), ge.value, ge.stderr_);
    }
  }
  detail::write_reports(opt.out, "report", "rde", common, config, res);
  return res;
}

// ---------------------------------------------------------------------------
// simulate

/// Exact optima on random graphs of each size against the limit predictions.
inline CommandResult cmd_simulate(const json& config, const RunOptions& opt) {
  Section s(config, "");
  const auto common = detail::read_common(s, "simulate", opt);
  const WeightLaw weights = weights_or_default(s);
  const GeneratorSpec gen = parse_generator(s, weights);
  const auto sizes = s.get<std::vector<int>>("sizes", {1000, 10000});
  for (int n : sizes)
    if (n < 1) throw ValidationError("sizes: entries must be >= 1");
  const int replicates = detail::positive_int(s, "replicates", 20, 0);
  const int component_limit = detail::positive_int(s, "component_limit", 30);
  const int max_cycle_rank = detail::positive_int(s, "max_cycle_rank", kDefaultMaxCycleRank, 0);
  const GridSpec grid = parse_grid(s);
  const double tol = detail::positive_double(s, "tol", 1e-10);
  const int max_iter = detail::positive_int(s, "max_iter", 10000);
  s.finish();

  detail::ensure_dir(opt.out);
  CommandResult res;
  const DegreeLaw law = gen.limit_law();
  res.summary["limit_degree_law"] = law.describe();
  res.summary["weights"] = weights.describe();
  if (replicates > 0 && !sizes.empty()) {
    const CdfGrid h = detail::limit_cdf(law, weights, grid, tol, max_iter);
    res.summary["h0"] = h.atom_at_zero();
    const GraphTable table = estimate_from_graphs(gen, sizes, replicates, common.seed, h, component_limit,
                                                  common.threads, max_cycle_rank);
    json per_size = json::array();
    for (const SizeRow& r : table.rows) {
      const std::string group = "n=" + std::to_string(r.n);
      for (const StatRow* st : {&r.edge_density, &r.weight_per_edge, &r.vertex_density}) {
        const std::string unit = st->name == "edge_perf" ? "weight/edge" : "fraction";
        res.rows.push_back({group, st->name, unit, "empirical", st->value, st->stderr_, st->prediction});
      }
      res.rows.push_back({group, "solved_fraction", "fraction", "empirical", r.solved_fraction});
      res.rows.push_back({group, "perf_identity_error", "relative", "empirical", r.identity_error});
      per_size.push_back({{"n", r.n}, {"replicates", r.replicates}});
    }
    res.summary["sizes"] = per_size;
  }
  {
    auto os = detail::open_out(opt.out / "table.csv");
    write_report_csv(os, res.rows);
  }
  detail::write_reports(opt.out, "report", "simulate", common, config, res);
  return res;
}

// ---------------------------------------------------------------------------
// round

/// Score matrix, projection, decomposition and matching extraction on
/// generated graphs, with the diagnostics of each stage.
inline CommandResult cmd_round(const json& config, const RunOptions& opt) {
  Section s(config, "");
  const auto common = detail::read_common(s, "round", opt);
  const WeightLaw weights = weights_or_default(s);
  const GeneratorSpec gen = parse_generator(s, weights);
  const int n = detail::positive_int(s, "n", 2000);
  const int graphs = detail::positive_int(s, "graphs", 1, 0);
  const int depth = detail::positive_int(s, "depth", 3, 0);
  const auto cutoff_cfg = s.optional<double>("cutoff");
  const double cutoff_quantile = s.get<double>("cutoff_quantile", 0.99);
  if (!(cutoff_quantile > 0.0 && cutoff_quantile <= 1.0))
    throw ValidationError("cutoff_quantile: must be in (0,1]");
  const int replicates = detail::positive_int(s, "replicates", 200);
  const int cover_budget = detail::positive_int(s, "cover_budget", 100000, 2);
  const double bvn_tol = detail::positive_double(s, "bvn_tol", 1e-9);
  const int max_terms = detail::positive_int(s, "max_terms", 1000000);
  const int extractions = detail::positive_int(s, "extractions", 100, 0);
  const int component_limit = detail::positive_int(s, "component_limit", 30);
  const int max_cycle_rank = detail::positive_int(s, "max_cycle_rank", kDefaultMaxCycleRank, 0);
  const auto depths = s.get<std::vector<int>>("fidelity_depths", {});
  for (int d : depths)
    if (d < 0) throw ValidationError("fidelity_depths: entries must be >= 0");
  const bool write_matrices = s.get<bool>("write_matrices", false);
  const GridSpec grid = parse_grid(s);
  const double tol = detail::positive_double(s, "tol", 1e-10);
  const int max_iter = detail::positive_int(s, "max_iter", 10000);
  s.finish();

  detail::ensure_dir(opt.out);
  CommandResult res;
  const DegreeLaw law = gen.limit_law();
  const CdfGrid zeta = detail::limit_cdf(law, weights, grid, tol, max_iter);
  res.summary["h0"] = zeta.atom_at_zero();
  json per_graph = json::array();

  for (int gi = 0; gi < graphs; ++gi) {
    const std::uint64_t gseed = make_stream(common.seed, static_cast<std::uint64_t>(gi))();
    const WeightedGraph g = gen.generate(n, gseed);
    const std::string group = "graph=" + std::to_string(gi);
    auto row = [&](std::string name, std::string unit, std::string method, double value, double se = std::nan(""),
                   double pred = std::nan("")) {
      res.rows.push_back({group, std::move(name), std::move(unit), std::move(method), value, se, pred});
    };

    double x = std::numeric_limits<double>::infinity();
    if (cutoff_cfg) {
      x = *cutoff_cfg;
    } else if (g.num_edges() > 0) {
      std::vector<double> w;
      for (const Edge& e : g.edges()) w.push_back(e.w);
      std::sort(w.begin(), w.end());
      const auto idx = static_cast<size_t>(std::ceil(cutoff_quantile * static_cast<double>(w.size()))) - 1;
      x = w[std::min(idx, w.size() - 1)];
    }

    const ComponentOptResult exact = exact_opt_by_components(g, component_limit, max_cycle_rank);
    const MatchingStats exact_stats = matching_stats(g, exact.matching);
    const std::uint64_t qseed = make_stream(common.seed, 1000003ULL + static_cast<std::uint64_t>(gi))();
    const ScoreMatrix q = build_score_matrix(g, zeta, depth, x, replicates, qseed, cover_budget, common.threads);
    const double rounded = rounded_performance(q, g);
    row("exact_perf", "weight/vertex", "empirical", exact_stats.perf_vertex);
    row("exact_solved_fraction", "fraction", "empirical", exact.solved_fraction);
    row("rounded_perf", "weight/vertex", "monte-carlo", rounded);
    row("rounded_ratio", "ratio", "monte-carlo", exact_stats.perf_vertex > 0.0 ? rounded / exact_stats.perf_vertex : 1.0);
    row("negative_diagonal_mean", "probability", "monte-carlo", q.negative_diagonal_mean());
    row("depth_reductions", "count", "empirical", static_cast<double>(q.reduced.size()));
    for (int d : depths) {
      const ScoreMatrix qd = build_score_matrix(g, zeta, d, x, replicates, qseed, cover_budget, common.threads);
      const double rp = rounded_performance(qd, g);
      row("rounded_perf_H" + std::to_string(d), "weight/vertex", "monte-carlo", rp, std::nan(""),
          exact_stats.perf_vertex);
    }

    const DenseMatrix dense = q.to_dense(g);
    const ProjectionResult proj = project_sym_birkhoff(dense);
    row("clipped_mass", "l1", "empirical", proj.clipped_mass);
    row("balance_moved", "l1", "empirical", proj.moved_l1);
    row("projection_distance", "l1", "empirical", proj.distance);
    row("projection_symmetric", "bool", "empirical", is_symmetric(proj.s) ? 1.0 : 0.0);
    row("projection_max_stochastic_error", "absolute", "empirical", max_stochastic_error(proj.s));

    const BvnDecomposition bvn = birkhoff_decompose(proj.s, bvn_tol, max_terms);
    const DenseMatrix rec = bvn.reconstruct();
    row("bvn_terms", "count", "empirical", static_cast<double>(bvn.terms.size()));
    row("bvn_weight_sum", "probability", "empirical", bvn.weight_sum(), std::nan(""), 1.0);
    row("bvn_residual", "l1", "empirical", l1_distance(rec, proj.s));

    MeanAccumulator perf;
    int invalid = 0;
    json first = json::array();
    for (int k = 0; k < extractions; ++k) {
      try {
        const Matching m = extract_matching(bvn, g, make_stream(qseed, static_cast<std::uint64_t>(k) + 1)());
        perf.add(matching_stats(g, m).perf_vertex);
        if (k == 0) first = io::matching_to_json(g, m);
      } catch (const InvalidMatchingError&) {
        ++invalid;
      }
    }
    if (extractions > 0) {
      row("extracted_perf", "weight/vertex", "monte-carlo", perf.mean(), perf.stderr_of_mean(),
          exact_stats.perf_vertex);
      row("extracted_invalid", "count", "empirical", invalid);
      auto os = detail::open_out(opt.out / ("matching_" + std::to_string(gi) + ".json"));
      os << first.dump() << '\n';
    }
    if (invalid > 0) res.exit_code = 4;
    if (write_matrices) {
      {
        auto os = detail::open_out(opt.out / ("scores_" + std::to_string(gi) + ".csv"));
        io::write_score_matrix(os, q, g);
      }
      auto os = detail::open_out(opt.out / ("bvn_" + std::to_string(gi) + ".json"));
      os << io::bvn_to_json(bvn).dump() << '\n';
    }

    json reduced = json::array();
    for (const DepthReduction& r : q.reduced) reduced.push_back({{"edge", r.edge}, {"depth", r.depth_used}});
    per_graph.push_back({{"graph", gi},
                         {"n", g.num_vertices()},
                         {"edges", g.num_edges()},
                         {"cutoff", json_number(x)},
                         {"depth_reductions", reduced},
                         {"excluded_components", exact.excluded_components.size()}});
  }
  res.summary["graphs"] = per_graph;
  {
    auto os = detail::open_out(opt.out / "round.csv");
    write_report_csv(os, res.rows);
  }
  detail::write_reports(opt.out, "report", "round", common, config, res);
  return res;
}

// ---------------------------------------------------------------------------
// oracle

/// Cavity solutions against brute force: the decision rule on random trees,
/// message passing on even cycles and on small-component Erdos-Renyi graphs.
/// Tree mismatches and a low exact fraction for message passing are failures
/// (exit code 4); every failing tree is dumped as a graph file.
inline CommandResult cmd_oracle(const json& config, const RunOptions& opt) {
  Section s(config, "");
  const auto common = detail::read_common(s, "oracle", opt);
  const WeightLaw weights = weights_or_default(s);
  const int trees = detail::positive_int(s, "trees", 1000, 0);
  const int max_tree = detail::positive_int(s, "max_tree_size", 12);
  const int cycles = detail::positive_int(s, "cycles", 200, 0);
  const int max_cycle = detail::positive_int(s, "max_cycle_size", 12, 4);
  const int er_instances = detail::positive_int(s, "er_instances", 0, 0);
  const int er_n = detail::positive_int(s, "er_n", 100);
  const double er_c = detail::positive_double(s, "er_c", 0.8);
  const int er_max_component = detail::positive_int(s, "er_max_component_edges", 30);
  const int bp_max_sweeps = detail::positive_int(s, "bp_max_sweeps", 10000);
  const double bp_min_exact = s.get<double>("bp_min_exact_fraction", 0.95);
  if (!(bp_min_exact >= 0.0 && bp_min_exact <= 1.0)) throw ValidationError("bp_min_exact_fraction: must be in [0,1]");
  s.finish();

  detail::ensure_dir(opt.out);
  CommandResult res;
  constexpr double kTol = 1e-9;
  auto row = [&](std::string group, std::string name, std::string unit, double value, double pred = std::nan("")) {
    res.rows.push_back({std::move(group), std::move(name), std::move(unit), "empirical", value, std::nan(""), pred});
  };
  json dumped = json::array();
  auto dump = [&](const std::string& kind, int idx, const WeightedGraph& g) {
    const std::string file = "counterexample_" + kind + "_" + std::to_string(idx) + ".txt";
    auto os = detail::open_out(opt.out / file);
    io::write_graph(os, g);
    dumped.push_back(file);
  };

  // Trees: dynamic program and decision rule vs brute force.
  int tree_mismatch = 0;
  Rng size_rng = make_stream(common.seed, 0);
  for (int t = 0; t < trees; ++t) {
    const int n = 1 + static_cast<int>(cavmatch::detail::bounded(size_rng, static_cast<std::uint64_t>(max_tree)));
    const WeightedGraph g = gen_random_tree(n, weights, make_stream(common.seed, 1 + static_cast<std::uint64_t>(t))());
    const OptResult bf = brute_force_opt(g, std::max(g.num_edges(), 1));
    bool ok = true;
    try {
      const OptResult dp = forest_opt(g);
      const MessageField f = solve_messages_forest(g);
      const Decision d = decide_matching(g, f);
      ok = std::abs(dp.value - bf.value) <= kTol * std::max(1.0, bf.value) &&
           std::abs(d.matching.total_weight(g) - bf.value) <= kTol * std::max(1.0, bf.value);
    } catch (const InconsistentMessagesError&) {
      ok = false;
    }
    if (!ok) {
      ++tree_mismatch;
      dump("tree", t, g);
    }
  }
  if (trees > 0) {
    row("trees", "instances", "count", trees);
    row("trees", "mismatches", "count", tree_mismatch, 0.0);
  }

  // Message passing on graphs with cycles: converged and decoded to an optimum.
  auto bp_case = [&](const WeightedGraph& g, double opt_value, int& exact, int& nonconverged) {
    const BpResult bp = bp_iterate(g, std::nullopt, bp_max_sweeps, 0.0, 1e-12);
    if (!bp.converged) {
      ++nonconverged;
      return;
    }
    try {
      const Decision d = decide_matching(g, bp.field);
      if (std::abs(d.matching.total_weight(g) - opt_value) <= kTol * std::max(1.0, opt_value)) ++exact;
    } catch (const InconsistentMessagesError&) {
    }
  };
  bool bp_fail = false;
  if (cycles > 0) {
    int exact = 0;
    int nonconv = 0;
    Rng rng = make_stream(common.seed, 1ULL << 40);
    const int half_max = max_cycle / 2;
    for (int c = 0; c < cycles; ++c) {
      const int n = 2 * (2 + static_cast<int>(cavmatch::detail::bounded(rng, static_cast<std::uint64_t>(half_max - 1))));
      const WeightedGraph g = gen_cycle(n, weights, make_stream(common.seed, (1ULL << 40) + 1 + c)());
      bp_case(g, brute_force_opt(g, g.num_edges()).value, exact, nonconv);
    }
    const double frac = static_cast<double>(exact) / cycles;
    row("even_cycles", "instances", "count", cycles);
    row("even_cycles", "nonconverged", "count", nonconv);
    row("even_cycles", "exact_fraction", "fraction", frac, 1.0);
    if (frac < bp_min_exact) bp_fail = true;
  }
  if (er_instances > 0) {
    int exact = 0;
    int nonconv = 0;
    int kept = 0;
    int rejected = 0;
    for (std::uint64_t k = 0; kept < er_instances; ++k) {
      if (rejected > 1000 * er_instances)
        throw BudgetError("oracle: too few Erdos-Renyi instances with components <= " +
                          std::to_string(er_max_component) + " edges");
      const WeightedGraph g = gen_erdos_renyi(er_n, er_c, weights, make_stream(common.seed, (1ULL << 41) + k)());
      auto [label, count] = connected_components(g);
      std::vector<int> edges(static_cast<size_t>(count), 0);
      for (const Edge& e : g.edges()) ++edges[static_cast<size_t>(label[static_cast<size_t>(e.u)])];
      if (*std::max_element(edges.begin(), edges.end()) > er_max_component) {
        ++rejected;
        continue;
      }
      ++kept;
      bp_case(g, exact_opt_by_components(g, er_max_component).value, exact, nonconv);
    }
    const double frac = static_cast<double>(exact) / er_instances;
    row("erdos_renyi", "instances", "count", er_instances);
    row("erdos_renyi", "rejected", "count", rejected);
    row("erdos_renyi", "nonconverged", "count", nonconv);
    row("erdos_renyi", "exact_fraction", "fraction", frac, 1.0);
    if (frac < bp_min_exact) bp_fail = true;
  }
  res.summary["counterexamples"] = dumped;
  if (tree_mismatch > 0 || bp_fail) res.exit_code = 4;
  detail::write_reports(opt.out, "report", "oracle", common, config, res);
  return res;
}

// ---------------------------------------------------------------------------
// generate

/// Writes one generated graph in the edge-list format.
inline CommandResult cmd_generate(const json& config, const RunOptions& opt) {
  Section s(config, "");
  const auto common = detail::read_common(s, "generate", opt);
  const WeightLaw weights = weights_or_default(s);
  const GeneratorSpec gen = parse_generator(s, weights);
  const int n = detail::positive_int(s, "n", 1000);
  s.finish();
  detail::ensure_dir(opt.out);
  const WeightedGraph g = gen.generate(n, common.seed);
  auto os = detail::open_out(opt.out / "graph.txt");
  io::write_graph(os, g);
  CommandResult res;
  res.rows.push_back({"", "vertices", "count", "empirical", static_cast<double>(g.num_vertices())});
  res.rows.push_back({"", "edges", "count", "empirical", static_cast<double>(g.num_edges())});
  res.rows.push_back({"", "mean_degree", "edges/vertex", "empirical", g.mean_degree()});
  detail::write_reports(opt.out, "report", "generate", common, config, res);
  return res;
}

inline json load_config(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ValidationError("config: cannot open " + p.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + p.string() + ": " + e.what());
  }
}

inline CommandResult run_command(const std::string& command, const json& config, const RunOptions& opt) {
  if (command == "rde") return cmd_rde(config, opt);
  if (command == "simulate") return cmd_simulate(config, opt);
  if (command == "round") return cmd_round(config, opt);
  if (command == "oracle") return cmd_oracle(config, opt);
  if (command == "generate") return cmd_generate(config, opt);
  throw ValidationError("command: unknown \"" + command + "\"");
}

}  // namespace cavmatch::experiments
