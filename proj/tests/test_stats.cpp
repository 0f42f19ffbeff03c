#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "bergm/stats.hpp"
#include "oracles.hpp"

using namespace bergm;

namespace {

Graph with_attributes(Graph g, Rng& rng) {
  const int n = g.size();
  std::vector<std::string> cat;
  std::vector<double> num, grade;
  const char* lv[] = {"A", "B", "C"};
  for (int i = 0; i < n; ++i) {
    cat.push_back(lv[rng.below(3)]);
    num.push_back(static_cast<double>(rng.below(5)));
    grade.push_back(7.0 + static_cast<double>(rng.below(3)));
  }
  // make sure every level occurs
  cat[0] = "A";
  cat[1] = "B";
  cat[2] = "C";
  grade[0] = 7;
  grade[1] = 8;
  grade[2] = 9;
  g.set_attribute("cat", cat);
  g.set_attribute("num", num);
  g.set_attribute("grade", grade);
  return g;
}

const char* kUndirectedAll =
    "edges + nodematch('cat') + nodematch('cat', diff = TRUE) + nodematch('grade', levels = c(7, 9)) + "
    "nodefactor('cat') + nodefactor('grade', levels = c(8)) + absdiff('num') + degree(0:3) + "
    "gwesp(0.5, fixed = TRUE) + gwesp(0, fixed = TRUE) + gwesp(1.3, fixed = TRUE)";
const char* kDirectedAll =
    "edges + mutual + nodematch('cat', diff = TRUE, levels = c('A', 'C')) + nodematch('grade') + "
    "nodefactor('cat') + absdiff('num') + idegree(0:2) + odegree(c(0, 1, 4)) + "
    "gwesp(0.5, fixed = TRUE) + gwesp(0.1, fixed = TRUE)";

void expect_close(const Vector& got, const std::vector<double>& want, double rel) {
  ASSERT_EQ(static_cast<std::size_t>(got.size()), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    EXPECT_NEAR(got[static_cast<Eigen::Index>(k)], want[k], rel * std::max(1.0, std::abs(want[k]))) << "coord " << k;
  }
}

}  // namespace

TEST(SuffStats, EmptyGraphIsZero) {
  Graph g(6, false);
  g.set_attribute("x", std::vector<std::string>{"a", "b", "a", "b", "a", "b"});
  const Model m = validate(parse_formula("edges + nodematch('x') + gwesp(0.5, fixed = TRUE)"), g);
  EXPECT_TRUE(suff_stats(m, g).isZero());
}

TEST(SuffStats, TriangleGwespWeightIsOne) {
  const std::vector<std::pair<int, int>> tri{{0, 1}, {1, 2}, {0, 2}};
  const Graph g = Graph::from_edge_list(tri, 3, false);
  const Model m = validate(parse_formula("edges + gwesp(0.5, fixed = TRUE)"), g);
  const Vector s = suff_stats(m, g);
  EXPECT_DOUBLE_EQ(s[0], 3.0);
  EXPECT_NEAR(s[1], 3.0, 1e-12);
}

TEST(SuffStats, MatchesBruteForceRecount) {
  Rng rng(11);
  for (int rep = 0; rep < 60; ++rep) {
    const bool directed = rep % 2;
    const Graph g = with_attributes(oracle::random_graph(8, directed, 0.15 + 0.01 * rep, rng), rng);
    const ModelSpec spec = parse_formula(directed ? kDirectedAll : kUndirectedAll);
    const Model m = validate(spec, g);
    expect_close(suff_stats(m, g), oracle::statistics(spec, g), 1e-12);
  }
}

TEST(ChangeStats, EdgesAndMutual) {
  Rng rng(5);
  const Graph g = oracle::random_graph(7, true, 0.4, rng);
  const Model m = validate(parse_formula("edges + mutual"), g);
  for (const Dyad& d : g.all_dyads()) {
    const Vector c = change_stats(m, g, d);
    EXPECT_EQ(c[0], 1.0);
    EXPECT_EQ(c[1], g.has_edge(d.j, d.i) ? 1.0 : 0.0);
  }
}

// Every dyad of 200 random graphs: incremental change statistics equal the
// difference of two brute-force recounts.
TEST(ChangeStats, MatchFullRecomputeDifference) {
  Rng rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const bool directed = rep % 2;
    const int n = 3 + static_cast<int>(rng.below(10));
    const Graph g = with_attributes(oracle::random_graph(n, directed, rng.uniform() * 0.6, rng), rng);
    const ModelSpec spec = parse_formula(directed ? kDirectedAll : kUndirectedAll);
    const Model m = validate(spec, g);
    auto adj = oracle::adjacency(g);
    for (const Dyad& d : g.all_dyads()) {
      auto plus = adj, minus = adj;
      plus[d.i][d.j] = 1;
      minus[d.i][d.j] = 0;
      if (!directed) {
        plus[d.j][d.i] = 1;
        minus[d.j][d.i] = 0;
      }
      const auto sp = oracle::statistics(spec, plus, directed, g.attributes());
      const auto sm = oracle::statistics(spec, minus, directed, g.attributes());
      const Vector c = change_stats(m, g, d);
      for (int k = 0; k < m.dim(); ++k) {
        const double want = sp[k] - sm[k];
        const bool is_gwesp = m.names()[k].rfind("gwesp", 0) == 0;
        if (is_gwesp) {
          ASSERT_NEAR(c[k], want, 1e-9 * std::max(1.0, std::abs(sp[k]))) << m.names()[k];
        } else {
          ASSERT_EQ(c[k], want) << m.names()[k] << " n=" << n << " dyad " << d.i << "," << d.j;
        }
      }
    }
  }
}

TEST(ChangeStats, IncrementalPathReproducesEndpoint) {
  Rng rng(9);
  for (bool directed : {false, true}) {
    Graph g = with_attributes(oracle::random_graph(10, directed, 0.2, rng), rng);
    const Model m = validate(parse_formula(directed ? kDirectedAll : kUndirectedAll), g);
    Vector s = suff_stats(m, g);
    const auto dyads = g.all_dyads();
    for (int step = 0; step < 500; ++step) {
      const Dyad d = dyads[rng.below(dyads.size())];
      const double sign = g.has_edge(d) ? -1.0 : 1.0;
      s += sign * change_stats(m, g, d);
      g.toggle(d);
    }
    const Vector direct = suff_stats(m, g);
    EXPECT_LT((s - direct).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ChangeStats, DyadIndependentTermsIgnoreTheRestOfTheGraph) {
  Rng rng(4);
  Graph base = with_attributes(Graph(9, false), rng);
  const Model m = validate(parse_formula("edges + nodematch('cat') + nodefactor('grade') + absdiff('num')"), base);
  EXPECT_TRUE(m.dyad_independent());
  for (const Dyad& d : base.all_dyads()) {
    const Vector ref = change_stats(m, base, d);
    for (int rep = 0; rep < 5; ++rep) {
      Graph other = base;
      for (const Dyad& e : base.all_dyads())
        if (rng.bernoulli(0.5)) other.toggle(e);
      EXPECT_EQ(change_stats(m, other, d), ref);
    }
  }
}

TEST(GofStats, EmptyAndComplete) {
  const GofDistributions empty = gof_stats(Graph(5, false));
  EXPECT_EQ(empty.degree[0], 5);
  EXPECT_EQ(std::accumulate(empty.esp.begin(), empty.esp.end(), 0LL), 0);
  EXPECT_EQ(empty.unreachable, 10);
  EXPECT_EQ(std::accumulate(empty.geodesic.begin(), empty.geodesic.end(), 0LL), 0);

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) pairs.emplace_back(i, j);
  const GofDistributions full = gof_stats(Graph::from_edge_list(pairs, 4, false));
  EXPECT_EQ(full.degree[3], 4);
  EXPECT_EQ(full.esp[2], 6);
  EXPECT_EQ(full.geodesic[1], 6);
  EXPECT_EQ(full.unreachable, 0);
}

TEST(GofStats, MatchesFloydWarshallAndRecounts) {
  Rng rng(12);
  for (int rep = 0; rep < 40; ++rep) {
    const bool directed = rep % 2;
    const int n = 12;
    const Graph g = oracle::random_graph(n, directed, 0.05 + 0.01 * rep, rng);
    const auto a = oracle::adjacency(g);
    const int inf = 1 << 20;
    std::vector<std::vector<int>> dist(n, std::vector<int>(n, inf));
    for (int i = 0; i < n; ++i) {
      dist[i][i] = 0;
      for (int j = 0; j < n; ++j)
        if (a[i][j]) dist[i][j] = 1;
    }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
    std::vector<std::int64_t> hist(n, 0);
    std::int64_t unreachable = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j || (!directed && j < i)) continue;
        if (dist[i][j] >= inf) {
          ++unreachable;
        } else {
          ++hist[dist[i][j]];
        }
      }
    const GofDistributions got = gof_stats(g);
    EXPECT_EQ(got.geodesic, hist);
    EXPECT_EQ(got.unreachable, unreachable);

    // esp recount and the sum invariants
    std::vector<std::int64_t> esp(n - 1, 0);
    for (auto [i, j] : oracle::edge_pairs(a, directed)) ++esp[oracle::partners(a, i, j, directed)];
    EXPECT_EQ(got.esp, esp);
    const auto sum = [](const std::vector<std::int64_t>& v) { return std::accumulate(v.begin(), v.end(), 0LL); };
    EXPECT_EQ(sum(got.esp), static_cast<long long>(g.edge_count()));
    EXPECT_EQ(sum(got.geodesic) + got.unreachable, static_cast<long long>(g.dyad_count()));
    if (directed) {
      EXPECT_EQ(sum(got.in_degree), n);
      EXPECT_EQ(sum(got.out_degree), n);
      EXPECT_TRUE(got.degree.empty());
    } else {
      EXPECT_EQ(sum(got.degree), n);
      EXPECT_TRUE(got.in_degree.empty());
    }
  }
}
