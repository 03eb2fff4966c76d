#include <gtest/gtest.h>

#include <cmath>

#include "cavmatch/asymptotics.hpp"
#include "cavmatch/cavity.hpp"
#include "cavmatch/generators.hpp"

using namespace cavmatch;

namespace {

const ExpFixedPoint& path_law() {
  static const ExpFixedPoint fp = exp_fixed_point_K(DegreeLaw::regular(2), 1.0);
  return fp;
}

}  // namespace

TEST(EdgePerf, PathCase) {
  const CdfGrid& h = path_law().h;
  const Estimate mc = edge_perf_mc(&h, WeightLaw::exponential(), 400000, 5);
  EXPECT_EQ(mc.method, Method::kMonteCarlo);
  EXPECT_NEAR(mc.value, 2.0 / 3.0, 3.0 * mc.stderr_);
  EXPECT_NEAR(edge_perf_quadrature(h, WeightLaw::exponential()).value, 2.0 / 3.0, 1e-3);
}

TEST(EdgePerf, IsolatedEdgesGiveMeanWeight) {
  const CdfGrid h = CdfGrid::constant(1e-3, 14.0, 1.0);
  EXPECT_NEAR(edge_perf_quadrature(h, WeightLaw::exponential()).value, 1.0, 1e-12);
  EXPECT_NEAR(edge_perf_mc(&h, WeightLaw::exponential(), 1000, 1).value,
              edge_perf_mc(&h, WeightLaw::exponential(), 1000, 1).value, 0.0);
}

TEST(EdgePerf, MonteCarloAgreesWithQuadrature) {
  const DegreeLaw law = DegreeLaw::poisson(2.0);
  const WeightLaw w = WeightLaw::uniform();
  const CdfGrid h = iterate_h(law, w, GridSpec{}, 1e-10, 5000).h;
  const Estimate mc = edge_perf_mc(&h, w, 400000, 8);
  EXPECT_NEAR(mc.value, edge_perf_quadrature(h, w).value, 3.0 * mc.stderr_);
  const SamplePool pool = population_dynamics(law, w, 100000, 40, 9);
  const Estimate mc_pool = edge_perf_mc(&pool, w, 400000, 10);
  EXPECT_NEAR(mc_pool.value, edge_perf_quadrature(h, w).value, 3.0 * mc_pool.stderr_ + 2e-3);
}

TEST(EdgePerf, StderrShrinksAtSquareRootRate) {
  const CdfGrid& h = path_law().h;
  const double a = edge_perf_mc(&h, WeightLaw::exponential(), 20000, 1).stderr_;
  const double b = edge_perf_mc(&h, WeightLaw::exponential(), 320000, 2).stderr_;
  EXPECT_NEAR(a / b, 4.0, 0.2);
}

TEST(Densities, PathCase) {
  const DegreeLaw d2 = DegreeLaw::regular(2);
  EXPECT_NEAR(edge_density(d2, 1.0 / 3.0), 4.0 / 9.0, 1e-12);
  EXPECT_NEAR(vertex_density(d2, 1.0 / 3.0), 8.0 / 9.0, 1e-12);
  // Direct form P(Z + Z' < W) = (E e^{-Z})^2.
  EXPECT_NEAR(edge_density_quadrature(path_law().h, WeightLaw::exponential()).value, 4.0 / 9.0, 1e-3);
  const Estimate mc = edge_density_mc(&path_law().h, WeightLaw::exponential(), 400000, 3);
  EXPECT_NEAR(mc.value, 4.0 / 9.0, 3.0 * mc.stderr_);
}

TEST(Densities, DegenerateLaws) {
  EXPECT_EQ(edge_density(DegreeLaw::regular(1), 1.0), 1.0);
  EXPECT_EQ(vertex_density(DegreeLaw::regular(1), 1.0), 1.0);
  EXPECT_NEAR(edge_density(DegreeLaw::regular(2), 1.0), 0.0, 1e-13);
  EXPECT_NEAR(vertex_density(DegreeLaw::regular(3), 1.0), 0.0, 1e-13);
}

TEST(Densities, VertexIsMeanDegreeTimesEdge) {
  for (const DegreeLaw& law :
       {DegreeLaw::regular(2), DegreeLaw::regular(3), DegreeLaw::poisson(0.8), DegreeLaw::poisson(2.5),
        DegreeLaw::from_pmf({0.2, 0.3, 0.1, 0.4})}) {
    for (double h0 : {0.05, 0.3, 0.6, 0.95}) {
      const double v = vertex_density(law, h0);
      EXPECT_NEAR(v, law.mean() * edge_density(law, h0), 1e-12 * std::max(1.0, v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(DegreeConditioned, Examples) {
  const DegreeLaw d2 = DegreeLaw::regular(2);
  EXPECT_EQ(degree_conditioned_match_prob(d2, 1.0 / 3.0, 0), 0.0);
  EXPECT_NEAR(degree_conditioned_match_prob(d2, 1.0 / 3.0, 2), 8.0 / 9.0, 1e-12);
  EXPECT_NEAR(degree_conditioned_match_prob(d2, 1.0 / 3.0, 2), vertex_density(d2, 1.0 / 3.0), 1e-12);
  EXPECT_THROW(degree_conditioned_match_prob(d2, 0.5, -1), ValidationError);
}

TEST(DegreeConditioned, SumRule) {
  const DegreeLaw law = DegreeLaw::poisson(1.5);
  const WeightLaw w = WeightLaw::exponential();
  const double h0 = iterate_h(law, w, GridSpec{}, 1e-12, 5000).h.atom_at_zero();
  double sum = 0.0;
  for (int k = 0; k <= law.max_degree(); ++k) sum += law.pmf(k) * degree_conditioned_match_prob(law, h0, k);
  EXPECT_NEAR(sum, vertex_density(law, h0), 1e-6);
}

TEST(DegreeConditioned, MatchesErdosRenyiSimulation) {
  const double c = 0.8;
  const DegreeLaw law = DegreeLaw::poisson(c);
  const WeightLaw w = WeightLaw::exponential();
  const double h0 = exp_fixed_point_K(law, 1.0).h.atom_at_zero();
  DegreeMatchCounts counts;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const WeightedGraph g = gen_erdos_renyi(10000, c, w, 100 + r);
    const ComponentOptResult opt = exact_opt_by_components(g, 30);
    count_degree_matches(g, opt.matching, opt.solved_vertex, 3, counts);
  }
  for (int k = 1; k <= 3; ++k) {
    const double p = degree_conditioned_match_prob(law, h0, k);
    const double nk = static_cast<double>(counts.vertices[static_cast<size_t>(k)]);
    const double freq = static_cast<double>(counts.matched[static_cast<size_t>(k)]) / nk;
    EXPECT_NEAR(freq, p, 3.0 * std::sqrt(p * (1.0 - p) / nk)) << "k=" << k;
  }
}

TEST(GapProbability, PathCase) {
  // (1/3)/(2/3) * E[1(W >= Z)(1 - e^{-(W - Z)})] = (1/2)(1/3).
  const Estimate g = gap_probability(path_law().h, WeightLaw::exponential(), DegreeLaw::regular(2), 1, 400000, 4);
  EXPECT_NEAR(g.value, 1.0 / 6.0, 3.0 * g.stderr_);
  EXPECT_EQ(gap_probability(path_law().h, WeightLaw::exponential(), DegreeLaw::regular(2), 0, 10, 4).value, 1.0);
  EXPECT_THROW(gap_probability(path_law().h, WeightLaw::exponential(), DegreeLaw::regular(2), -1, 10, 4),
               ValidationError);
}

TEST(GapProbability, SingleEdgeTree) {
  const CdfGrid h = CdfGrid::constant(1e-3, 14.0, 1.0);
  EXPECT_EQ(gap_probability(h, WeightLaw::exponential(), DegreeLaw::regular(1), 0, 10, 1).value, 1.0);
}

TEST(GapEventProbability, PathCaseIsOneQuarter) {
  // P(A and B) = h0 * E[...] = 1/9, P(B) = edge density 4/9.
  const Estimate g = gap_event_probability(path_law().h, WeightLaw::exponential(), DegreeLaw::regular(2), 1, 400000, 4);
  EXPECT_NEAR(g.value, 0.25, 3.0 * g.stderr_);
  const CdfGrid h = CdfGrid::constant(1e-3, 14.0, 1.0);
  EXPECT_EQ(gap_event_probability(h, WeightLaw::exponential(), DegreeLaw::regular(1), 0, 100, 1).value, 1.0);
}

TEST(GapEventProbability, LongPathEventCount) {
  const WeightedGraph g = gen_path(100000, WeightLaw::exponential(), 77);
  const Matching m = forest_opt(g).matching;
  const GapCounts c = count_gap_events(g, m, 1);
  const double freq = static_cast<double>(c.events) / static_cast<double>(c.trials);
  const double p = 0.25;
  EXPECT_NEAR(freq, p, 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(c.trials)));
}

TEST(GapEventProbability, MatchesErdosRenyiCounts) {
  const double c = 0.8;
  const DegreeLaw law = DegreeLaw::poisson(c);
  const WeightLaw w = WeightLaw::exponential();
  const CdfGrid h = exp_fixed_point_K(law, 1.0).h;
  std::vector<GapCounts> counts(3);
  for (std::uint64_t r = 0; r < 10; ++r) {
    const WeightedGraph g = gen_erdos_renyi(10000, c, w, 300 + r);
    const Matching m = exact_opt_by_components(g, 30).matching;
    for (int k = 1; k <= 2; ++k) {
      const GapCounts gc = count_gap_events(g, m, k);
      counts[static_cast<size_t>(k)].trials += gc.trials;
      counts[static_cast<size_t>(k)].events += gc.events;
    }
  }
  for (int k = 1; k <= 2; ++k) {
    const Estimate p = gap_event_probability(h, w, law, k, 400000, 50 + static_cast<std::uint64_t>(k));
    const auto& gc = counts[static_cast<size_t>(k)];
    const double nt = static_cast<double>(gc.trials);
    // Both orientations of a matched edge are counted: inflate for the pairing.
    const double se = std::sqrt(2.0 * p.value * (1.0 - p.value) / nt);
    EXPECT_NEAR(static_cast<double>(gc.events) / nt, p.value, 3.0 * (se + p.stderr_)) << "k=" << k;
  }
}

TEST(Report, PathCaseIsConsistent) {
  const AsymptoticReport r = asymptotic_report(DegreeLaw::regular(2), WeightLaw::exponential(), path_law().h);
  EXPECT_NEAR(r.h0, 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.edge_density.value, 4.0 / 9.0, 1e-9);
  EXPECT_NEAR(r.edge_density_direct.value, r.edge_density.value, 1e-3);
  EXPECT_NEAR(r.edge_perf.value, r.edge_perf_mc.value, 3.0 * r.edge_perf_mc.stderr_);
  EXPECT_NEAR(r.vertex_density.value, 8.0 / 9.0, 1e-9);
  ASSERT_EQ(r.degree_match_prob.size(), 6u);
  for (double p : r.degree_match_prob) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(EstimateFromGraphs, PathGraphs) {
  GeneratorSpec gen;
  gen.kind = GeneratorKind::kPath;
  const GraphTable t = estimate_from_graphs(gen, {200000}, 1, 3, path_law().h);
  ASSERT_EQ(t.rows.size(), 1u);
  const SizeRow& row = t.rows[0];
  EXPECT_NEAR(row.edge_density.value, 4.0 / 9.0, 0.01);
  EXPECT_NEAR(row.weight_per_edge.value, 2.0 / 3.0, 0.01);
  EXPECT_NEAR(row.vertex_density.value, 8.0 / 9.0, 0.01);
  EXPECT_EQ(row.solved_fraction, 1.0);
  EXPECT_LE(row.identity_error, 1e-12);
}

TEST(EstimateFromGraphs, DimerConfigurationModel) {
  GeneratorSpec gen;
  gen.kind = GeneratorKind::kConfigModel;
  gen.degrees = DegreeLaw::regular(1);
  const CdfGrid h = CdfGrid::constant(1e-3, 14.0, 1.0);
  const GraphTable t = estimate_from_graphs(gen, {1000}, 3, 1, h);
  EXPECT_EQ(t.rows[0].edge_density.value, 1.0);
  EXPECT_EQ(t.rows[0].vertex_density.value, 1.0);
  EXPECT_EQ(t.rows[0].edge_density.prediction, 1.0);
}

TEST(EstimateFromGraphs, ErdosRenyiSmall) {
  GeneratorSpec gen;
  gen.c = 0.8;
  const CdfGrid h = exp_fixed_point_K(DegreeLaw::poisson(0.8), 1.0).h;
  const GraphTable t = estimate_from_graphs(gen, {2000}, 10, 11, h);
  const SizeRow& row = t.rows[0];
  EXPECT_GE(row.solved_fraction, 0.99);
  for (const StatRow* s : {&row.edge_density, &row.weight_per_edge, &row.vertex_density})
    EXPECT_NEAR(s->value, s->prediction, 3.0 * s->stderr_ + 0.02) << s->name;
}
