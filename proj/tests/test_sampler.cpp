#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "bergm/sampler.hpp"
#include "oracles.hpp"

using namespace bergm;

namespace {

Model edges_gwesp(const Graph& g) { return validate(parse_formula("edges + gwesp(0.5, fixed = TRUE)"), g); }

// Empirical frequencies of network states over `draws` thinned draws. At
// theta = 0 every toggle is accepted and the edge-count parity alternates, so
// the thinning interval must be odd.
std::vector<double> frequencies(const Model& m, const Vector& theta, Graph g, const ExactTable& table,
                                std::uint64_t draws, std::uint64_t thin, Rng& rng) {
  ToggleSampler sampler(m);
  std::vector<double> counts(table.size(), 0.0);
  sampler.run(theta, g, 1000, rng);
  for (std::uint64_t k = 0; k < draws; ++k) {
    sampler.run(theta, g, thin, rng);
    counts[table.index_of(g)] += 1.0;
  }
  return counts;
}

double total_variation(const std::vector<double>& counts, const Vector& p) {
  double n = 0;
  for (double c : counts) n += c;
  double tv = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) tv += std::abs(counts[k] / n - p[static_cast<Eigen::Index>(k)]);
  return tv / 2;
}

}  // namespace

TEST(Enumerate, Sizes) {
  const Graph und(4, false);
  const ExactTable t = enumerate_exact(edges_gwesp(und), und);
  EXPECT_EQ(t.size(), 64U);
  EXPECT_NEAR(t.log_z(Vector::Zero(2)), std::log(64.0), 1e-12);

  const Graph dir(3, true);
  const Model md = validate(parse_formula("edges + mutual"), dir);
  EXPECT_EQ(enumerate_exact(md, dir).size(), 64U);

  const Graph big(8, false);
  EXPECT_THROW(enumerate_exact(edges_gwesp(big), big), Error);
}

TEST(Enumerate, RowsAreTheStatisticsOfEachNetwork) {
  const Graph base(5, false);
  const Model m = edges_gwesp(base);
  const ExactTable t = enumerate_exact(m, base);
  for (std::uint64_t k = 0; k < t.size(); k += 37) {
    const Graph g = t.graph(k);
    EXPECT_EQ(t.index_of(g), k);
    const auto want = oracle::statistics(m.spec(), g);
    EXPECT_NEAR(t.stats()(static_cast<Eigen::Index>(k), 0), want[0], 1e-12);
    EXPECT_NEAR(t.stats()(static_cast<Eigen::Index>(k), 1), want[1], 1e-9);
  }
}

TEST(Simulate, ZeroStepsReturnsStart) {
  Rng rng(1);
  const Graph g0 = oracle::random_graph(6, false, 0.3, rng);
  const Model m = edges_gwesp(g0);
  Vector theta(2);
  theta << 1.0, -1.0;
  EXPECT_TRUE(simulate(m, theta, g0, SamplerSettings{0}, rng).same_state(g0));
}

TEST(Simulate, RejectsBadTheta) {
  Rng rng(1);
  const Graph g0(4, false);
  const Model m = edges_gwesp(g0);
  Vector theta(2);
  theta << 1.0, std::nan("");
  EXPECT_THROW(simulate(m, theta, g0, SamplerSettings{10}, rng), Error);
  EXPECT_THROW(simulate(m, Vector::Zero(3), g0, SamplerSettings{10}, rng), Error);
}

TEST(Simulate, UniformAtThetaZero) {
  Rng rng(42);
  const Graph base(4, false);
  const Model m = edges_gwesp(base);
  const ExactTable table = enumerate_exact(m, base);
  const Vector theta = Vector::Zero(2);
  const auto counts = frequencies(m, theta, base, table, 1000000, 13, rng);
  const double expected = 1000000.0 / 64.0;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_GT(oracle::chi_square_tail(chi2, 63), 0.001) << "chi2=" << chi2;
  EXPECT_LT(total_variation(counts, table.probabilities(theta)), 0.02);
}

TEST(Simulate, BernoulliDensityForEdgesOnly) {
  Rng rng(8);
  Graph g(30, false);
  g.set_attribute("x", std::vector<std::string>(30, "a"));
  const Model m = validate(parse_formula("edges + nodematch('x')"), g);
  // nodematch is identical to edges here, so the total tie log-odds is the sum
  Vector theta(2);
  theta << -1.0, 0.3;
  const double p = 1.0 / (1.0 + std::exp(0.7));
  ToggleSampler s(m);
  s.run(theta, g, 20000, rng);
  double dens = 0;
  for (int k = 0; k < 200; ++k) {
    s.run(theta, g, 2000, rng);
    dens += g.density();
  }
  EXPECT_NEAR(dens / 200, p, 0.01);
}

TEST(Simulate, MatchesExactDistributionForGwesp) {
  Rng rng(99);
  const Graph base(4, false);
  const Model m = edges_gwesp(base);
  const ExactTable table = enumerate_exact(m, base);
  for (auto [a, b] : std::vector<std::pair<double, double>>{{-2.0, 0.5}, {1.5, -3.0}, {-3.0, 3.0}}) {
    Vector theta(2);
    theta << a, b;
    const auto counts = frequencies(m, theta, base, table, 1000000, 13, rng);
    EXPECT_LT(total_variation(counts, table.probabilities(theta)), 0.02) << a << "," << b;
  }
}

TEST(SimulateConstrained, ObservedPartNeverChanges) {
  Rng rng(5);
  Graph g = oracle::random_graph(8, true, 0.3, rng);
  g.apply_missing_mask(std::vector<Dyad>{{0, 1}, {2, 5}, {7, 3}});
  const Model m = validate(parse_formula("edges + mutual + gwesp(0.5, fixed = TRUE)"), g);
  Vector theta(3);
  theta << 0.5, 1.0, 0.2;
  const Graph after = simulate_constrained(m, theta, g, 5000, rng);
  for (const Dyad& d : g.all_dyads()) {
    if (g.observed(d)) {
      ASSERT_EQ(after.has_edge(d), g.has_edge(d));
    }
  }
  EXPECT_THROW(simulate_constrained(m, theta, Graph(4, true), 10, rng), Error);
}

TEST(SimulateConstrained, SingleDyadFullConditional) {
  Rng rng(17);
  Graph g = oracle::random_graph(10, false, 0.3, rng);
  g.set_attribute("x", std::vector<std::string>(10, "a"));
  g.apply_missing_mask(std::vector<Dyad>{{2, 7}});
  const Model m = validate(parse_formula("edges + nodematch('x', diff = TRUE)"), g);
  Vector theta(2);
  theta << 0.4, 0.0;
  double on = 0;
  const int reps = 40000;
  Graph cur = g;
  for (int k = 0; k < reps; ++k) {
    cur = simulate_constrained(m, theta, cur, 3, rng);
    on += cur.has_edge(2, 7);
  }
  EXPECT_NEAR(on / reps, 1.0 / (1.0 + std::exp(-0.4)), 0.01);
}

TEST(SimulateConstrained, MatchesConditionalEnumeration) {
  Rng rng(23);
  Graph g = oracle::random_graph(5, false, 0.5, rng);
  const std::vector<Dyad> miss{{0, 1}, {1, 3}, {2, 4}};
  g.apply_missing_mask(miss);
  const Model m = edges_gwesp(g);
  Vector theta(2);
  theta << -0.5, 0.8;
  // exact f(v | u, theta) over the 8 completions
  std::vector<double> logw(8);
  for (int code = 0; code < 8; ++code) {
    Graph c = g;
    for (int b = 0; b < 3; ++b) c.set_edge(miss[b].i, miss[b].j, (code >> b) & 1);
    const auto s = oracle::statistics(m.spec(), c);
    logw[code] = theta[0] * s[0] + theta[1] * s[1];
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double z = 0;
  for (double& w : logw) z += (w = std::exp(w - mx));
  std::vector<double> counts(8, 0);
  ToggleSampler s(m);
  Graph cur = g;
  const int draws = 200000;
  for (int k = 0; k < draws; ++k) {
    s.run_on(theta, cur, cur.missing_dyads(), 6, rng);
    int code = 0;
    for (int b = 0; b < 3; ++b) code |= cur.has_edge(miss[b]) << b;
    counts[code] += 1;
  }
  double tv = 0;
  for (int c = 0; c < 8; ++c) tv += std::abs(counts[c] / draws - logw[c] / z);
  EXPECT_LT(tv / 2, 0.01);
}
