#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavmatch/cavity.hpp"
#include "cavmatch/error.hpp"
#include "cavmatch/graph.hpp"
#include "cavmatch/rde.hpp"
#include "cavmatch/rounding.hpp"

namespace cavmatch::io {

using json = nlohmann::json;

// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Graph text format: header "n m", then m lines "u v w", 0-indexed.
inline void write_graph(std::ostream& os, const WeightedGraph& g) {
  os << g.num_vertices() << ' ' << g.num_edges() << '\n';
  for (const Edge& e : g.edges()) os << e.u << ' ' << e.v << ' ' << format_double(e.w) << '\n';
}

inline WeightedGraph read_graph(std::istream& is) {
  long long n = -1;
  long long m = -1;
  if (!(is >> n >> m) || n < 0 || m < 0) throw ValidationError("graph file: bad header, expected \"n m\"");
  if (n > std::numeric_limits<int>::max() || m > std::numeric_limits<int>::max())
    throw ValidationError("graph file: header counts too large");
  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(std::min<long long>(m, 1 << 20)));
  for (long long k = 0; k < m; ++k) {
    long long u = 0;
    long long v = 0;
    double w = 0.0;
    if (!(is >> u >> v >> w))
      throw ValidationError("graph file: edge line " + std::to_string(k + 1) + " is malformed");
    if (!std::isfinite(w)) throw ValidationError("graph file: edge line " + std::to_string(k + 1) + " has a non-finite weight");
    edges.push_back({static_cast<Vertex>(u), static_cast<Vertex>(v), w});
  }
  std::string extra;
  if (is >> extra) throw ValidationError("graph file: trailing data after " + std::to_string(m) + " edges");
  return WeightedGraph(static_cast<int>(n), std::move(edges));
}

inline json matching_to_json(const WeightedGraph& g, const Matching& m) {
  json arr = json::array();
  for (EdgeId e : m.edge_ids()) {
    const Edge& ed = g.edge(e);
    arr.push_back({std::min(ed.u, ed.v), std::max(ed.u, ed.v)});
  }
  return arr;
}

inline Matching matching_from_json(const WeightedGraph& g, const json& j) {
  if (!j.is_array()) throw ValidationError("matching json: expected an array of [u,v] pairs");
  std::vector<EdgeId> ids;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer())
      throw ValidationError("matching json: entry is not a [u,v] pair of integers");
    const auto e = g.find_edge(pair[0].get<int>(), pair[1].get<int>());
    if (!e) throw InvalidMatchingError("matching json: pair is not an edge of the graph");
    ids.push_back(*e);
  }
  return Matching::from_edges(g, std::move(ids));
}

// Message fields keyed "u->v"; self loops "v->v".
inline json messages_to_json(const WeightedGraph& g, const MessageField& f) {
  json out = json::object();
  for (int slot = 0; slot < g.num_slots(); ++slot)
    out[std::to_string(g.slot_source(slot)) + "->" + std::to_string(g.slot_target(slot))] = f.z[static_cast<size_t>(slot)];
  if (f.self_loop) {
    for (Vertex v = 0; v < g.num_vertices(); ++v) {
      const double z = (*f.self_loop)[static_cast<size_t>(v)];
      out[std::to_string(v) + "->" + std::to_string(v)] = std::isfinite(z) ? json(z) : json(nullptr);
    }
  }
  return out;
}

inline MessageField messages_from_json(const WeightedGraph& g, const json& j) {
  if (!j.is_object()) throw ValidationError("messages json: expected an object");
  auto vertex = [](const std::string& key, const std::string& part) {
    size_t used = 0;
    int x = -1;
    try {
      x = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) throw ValidationError("messages json: bad key \"" + key + "\"");
    return x;
  };
  MessageField f = MessageField::zeros(g);
  std::vector<bool> seen(f.z.size(), false);
  std::vector<double> loops(static_cast<size_t>(g.num_vertices()), -std::numeric_limits<double>::infinity());
  bool any_loop = false;
  for (const auto& [key, value] : j.items()) {
    const auto arrow = key.find("->");
    if (arrow == std::string::npos) throw ValidationError("messages json: bad key \"" + key + "\"");
    const int u = vertex(key, key.substr(0, arrow));
    const int v = vertex(key, key.substr(arrow + 2));
    if (!value.is_null() && !value.is_number())
      throw ValidationError("messages json: value of \"" + key + "\" is not a number");
    if (u == v) {
      if (u < 0 || u >= g.num_vertices()) throw ValidationError("messages json: loop vertex out of range");
      any_loop = true;
      if (!value.is_null()) loops[static_cast<size_t>(u)] = value.get<double>();
      continue;
    }
    const auto e = g.find_edge(u, v);
    if (!e) throw ValidationError("messages json: \"" + key + "\" is not a directed edge of the graph");
    if (value.is_null()) throw ValidationError("messages json: \"" + key + "\" is null");
    const auto slot = static_cast<size_t>(g.directed(*e, u));
    f.z[slot] = value.get<double>();
    seen[slot] = true;
  }
  for (bool s : seen)
    if (!s) throw ValidationError("messages json: field does not cover every directed edge");
  if (any_loop) f.self_loop = std::move(loops);
  return f;
}

inline void write_cdf_csv(std::ostream& os, const CdfGrid& h) {
  os << "t,h\n";
  for (size_t k = 0; k < h.size(); ++k) os << format_double(h.t(k)) << ',' << format_double(h.values()[k]) << '\n';
}

inline CdfGrid read_cdf_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,h", 0) != 0) throw ValidationError("cdf csv: missing \"t,h\" header");
  std::vector<double> ts;
  std::vector<double> hs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError("cdf csv: bad row \"" + line + "\"");
    try {
      size_t used_t = 0;
      size_t used_h = 0;
      const std::string a = line.substr(0, comma);
      const std::string b = line.substr(comma + 1);
      ts.push_back(std::stod(a, &used_t));
      hs.push_back(std::stod(b, &used_h));
      if (used_t != a.size() || used_h != b.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("cdf csv: bad row \"" + line + "\"");
    }
  }
  if (ts.size() < 2) throw ValidationError("cdf csv: need at least two rows");
  const double step = ts[1] - ts[0];
  if (ts[0] != 0.0 || !(step > 0.0)) throw ValidationError("cdf csv: grid must start at t=0 and increase");
  for (size_t k = 0; k < ts.size(); ++k)
    if (std::abs(ts[k] - step * static_cast<double>(k)) > 1e-9 * std::max(1.0, ts[k]))
      throw ValidationError("cdf csv: grid is not uniform at row " + std::to_string(k + 2));
  return CdfGrid(step, std::move(hs));
}

// Raw little-endian doubles preceded by a uint64 count.
inline void write_pool_binary(std::ostream& os, const SamplePool& pool) {
  const std::uint64_t n = pool.samples.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(pool.samples.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

inline SamplePool read_pool_binary(std::istream& is) {
  std::uint64_t n = 0;
  if (!is.read(reinterpret_cast<char*>(&n), sizeof n)) throw ValidationError("pool dump: truncated header");
  if (n > (std::uint64_t{1} << 32)) throw ValidationError("pool dump: implausible sample count " + std::to_string(n));
  SamplePool pool;
  pool.samples.resize(n);
  if (!is.read(reinterpret_cast<char*>(pool.samples.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw ValidationError("pool dump: truncated data");
  return pool;
}

inline constexpr int kDenseCsvLimit = 5000;

/// Dense CSV for n <= 5000, otherwise "i,j,q" triplets of nonzero entries.
inline void write_score_matrix(std::ostream& os, const ScoreMatrix& q, const WeightedGraph& g) {
  if (q.n <= kDenseCsvLimit) {
    const DenseMatrix m = q.to_dense(g);
    for (int i = 0; i < m.n; ++i) {
      for (int j = 0; j < m.n; ++j) os << (j ? "," : "") << format_double(m(i, j));
      os << '\n';
    }
    return;
  }
  os << "i,j,q\n";
  for (int i = 0; i < q.n; ++i) os << i << ',' << i << ',' << format_double(q.diagonal[static_cast<size_t>(i)]) << '\n';
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const double s = q.edge_score[static_cast<size_t>(e)];
    if (s == 0.0) continue;
    const Edge& ed = g.edge(e);
    os << ed.u << ',' << ed.v << ',' << format_double(s) << '\n' << ed.v << ',' << ed.u << ',' << format_double(s) << '\n';
  }
}

inline json bvn_to_json(const BvnDecomposition& d) {
  json terms = json::array();
  for (const auto& t : d.terms) terms.push_back({{"weight", t.weight}, {"perm", t.perm}});
  return {{"n", d.n}, {"residual_l1", d.residual_l1}, {"terms", terms}};
}

inline BvnDecomposition bvn_from_json(const json& j) {
  BvnDecomposition d;
  d.n = j.at("n").get<int>();
  d.residual_l1 = j.at("residual_l1").get<double>();
  for (const auto& t : j.at("terms")) {
    BvnTerm term{t.at("weight").get<double>(), t.at("perm").get<std::vector<int>>()};
    if (static_cast<int>(term.perm.size()) != d.n) throw ValidationError("bvn json: permutation of wrong length");
    d.terms.push_back(std::move(term));
  }
  return d;
}

}  // namespace cavmatch::io
