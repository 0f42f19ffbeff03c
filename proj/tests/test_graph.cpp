#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bergm/graph.hpp"
#include "bergm/io.hpp"
#include "bergm/rng.hpp"
#include "oracles.hpp"

using namespace bergm;

namespace {

std::vector<std::pair<int, int>> complete_pairs(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return e;
}

std::string temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("bergm_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

}  // namespace

TEST(Graph, EmptyAndComplete) {
  const Graph empty = Graph::from_edge_list({}, 5, false);
  EXPECT_EQ(empty.edge_count(), 0U);
  EXPECT_DOUBLE_EQ(empty.density(), 0.0);

  const auto pairs = complete_pairs(4);
  const Graph full = Graph::from_edge_list(pairs, 4, false);
  EXPECT_EQ(full.edge_count(), 6U);
  EXPECT_DOUBLE_EQ(full.density(), 1.0);
  EXPECT_DOUBLE_EQ(Graph(10, false).density(), 0.0);
}

TEST(Graph, DensityCountsObservedDyadsOnly) {
  const std::vector<std::pair<int, int>> e{{0, 1}, {1, 2}, {2, 3}};
  Graph g = Graph::from_edge_list(e, 4, false);
  EXPECT_DOUBLE_EQ(g.density(), 0.5);
  // masking an edge and a non-edge: 2 observed edges over 4 observed dyads
  const std::vector<Dyad> miss{{0, 1}, {0, 3}};
  g.apply_missing_mask(miss);
  EXPECT_DOUBLE_EQ(g.density(), 0.5);
  const std::vector<Dyad> miss2{{0, 2}, {1, 3}};
  g.apply_missing_mask(miss2);
  EXPECT_DOUBLE_EQ(g.density(), 1.0);
  g.apply_missing_mask(std::vector<Dyad>{{1, 2}, {2, 3}});
  EXPECT_THROW(g.density(), Error);
}

TEST(Graph, EdgeListErrors) {
  const std::vector<std::pair<int, int>> loop{{1, 1}};
  EXPECT_THROW(Graph::from_edge_list(loop, 3, false), Error);
  const std::vector<std::pair<int, int>> out_of_range{{0, 3}};
  EXPECT_THROW(Graph::from_edge_list(out_of_range, 3, false), Error);
  const std::vector<std::pair<int, int>> dup{{0, 1}, {1, 0}};
  std::vector<std::string> warnings;
  const Graph g = Graph::from_edge_list(dup, 3, false, &warnings);
  EXPECT_EQ(g.edge_count(), 1U);
  EXPECT_EQ(warnings.size(), 1U);
  // directed: (0,1) and (1,0) are different ties
  EXPECT_EQ(Graph::from_edge_list(dup, 3, true).edge_count(), 2U);
}

TEST(Graph, Toggle) {
  const Graph empty(3, false);
  const Graph one = empty.toggled({0, 1});
  EXPECT_EQ(one.edge_count(), 1U);
  EXPECT_TRUE(one.has_edge(0, 1));
  EXPECT_TRUE(one.has_edge(1, 0));
  EXPECT_THROW(empty.toggled({2, 2}), Error);

  const auto pairs = complete_pairs(4);
  EXPECT_EQ(Graph::from_edge_list(pairs, 4, false).toggled({2, 3}).edge_count(), 5U);
}

TEST(Graph, ToggleIsAnInvolutionAndKeepsSymmetry) {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const bool directed = rep % 2;
    Graph g = oracle::random_graph(9, directed, 0.3, rng);
    const Graph before = g;
    const auto dyads = g.all_dyads();
    const Dyad d = dyads[rng.below(dyads.size())];
    EXPECT_TRUE(g.toggled(d).toggled(d).same_state(before));
    for (int k = 0; k < 30; ++k) g.toggle(dyads[rng.below(dyads.size())]);
    if (!directed) {
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) ASSERT_EQ(g.has_edge(i, j), g.has_edge(j, i));
    }
    // degrees and bit rows agree with a recount
    const auto a = oracle::adjacency(g);
    for (int i = 0; i < 9; ++i) {
      int out = 0, in = 0;
      for (int j = 0; j < 9; ++j) {
        out += a[i][j];
        in += a[j][i];
      }
      EXPECT_EQ(g.out_degree(i), out);
      EXPECT_EQ(g.in_degree(i), in);
    }
  }
}

TEST(Graph, EdgeListRoundTrip) {
  Rng rng(3);
  for (bool directed : {false, true}) {
    const Graph g = oracle::random_graph(12, directed, 0.25, rng);
    std::vector<std::pair<int, int>> pairs;
    for (const Dyad& d : g.edges()) pairs.emplace_back(d.i, d.j);
    const Graph back = Graph::from_edge_list(pairs, 12, directed);
    EXPECT_TRUE(back.same_state(g));
    EXPECT_EQ(back.edges(), g.edges());
  }
}

TEST(Graph, MissingMaskMirrorsForUndirected) {
  Graph g(36, false);
  std::vector<Dyad> miss;
  for (int v : {3, 10, 17, 30})
    for (int u = 0; u < 36; ++u)
      if (u != v) miss.push_back(g.dyad(v, u));
  g.apply_missing_mask(miss);
  // 4 nodes x 35 partners, minus the 6 pairs among the four counted twice
  EXPECT_EQ(g.missing_count(), 4U * 35U - 6U);
  for (const Dyad& d : g.missing_dyads()) {
    EXPECT_FALSE(g.observed(d.i, d.j));
    EXPECT_FALSE(g.observed(d.j, d.i));
  }
  EXPECT_TRUE(g.observed(0, 1));

  Graph unchanged(5, false);
  unchanged.apply_missing_mask(std::vector<Dyad>{});
  EXPECT_FALSE(unchanged.has_missing());
  EXPECT_THROW(unchanged.apply_missing_mask(std::vector<Dyad>{{1, 1}}), Error);
}

TEST(Graph, DirectedMaskMayBeAsymmetric) {
  Graph g(4, true);
  g.apply_missing_mask(std::vector<Dyad>{{0, 1}});
  EXPECT_FALSE(g.observed(0, 1));
  EXPECT_TRUE(g.observed(1, 0));
}

TEST(Graph, AttributeLengthChecked) {
  Graph g(3, false);
  EXPECT_THROW(g.set_attribute("x", std::vector<double>{1, 2}), Error);
  g.set_attribute("x", std::vector<std::string>{"a", "b", "a"});
  ASSERT_NE(g.attribute("x"), nullptr);
  EXPECT_EQ(g.attribute("y"), nullptr);
}

TEST(Io, LoadsLabelledNetworkWithAttributesAndMask) {
  const auto attrs = temp_file("attrs.csv", "name,Office,Seniority\nann,Boston,3\nbob,Hartford,1\ncat,Boston,2\ndan,Providence,5\n");
  const auto edges = temp_file("edges.txt", "from to\nann bob\nbob,cat\ndan ann\n");
  const auto miss = temp_file("miss.txt", "cat dan\n");
  io::NetworkFiles files;
  files.edges = edges;
  files.attributes = attrs;
  files.missing = miss;
  const Graph g = io::load_network(files);
  EXPECT_EQ(g.size(), 4);
  EXPECT_EQ(g.edge_count(), 3U);
  EXPECT_TRUE(g.has_edge(0, 3));
  EXPECT_FALSE(g.observed(2, 3));
  EXPECT_TRUE(std::holds_alternative<std::vector<std::string>>(*g.attribute("Office")));
  EXPECT_TRUE(std::holds_alternative<std::vector<double>>(*g.attribute("Seniority")));
  EXPECT_EQ(g.label(2), "cat");

  const auto out = (std::filesystem::temp_directory_path() / "bergm_test_out.csv").string();
  io::write_edge_list(g, out);
  io::NetworkFiles again;
  again.edges = out;
  again.attributes = attrs;
  EXPECT_EQ(io::load_network(again).edges(), g.edges());
}

TEST(Io, IntegerEdgeListAndErrors) {
  const auto edges = temp_file("int_edges.txt", "1 2\n2 3\n");
  io::NetworkFiles files;
  files.edges = edges;
  files.index_base = 1;
  files.n = 5;
  const Graph g = io::load_network(files);
  EXPECT_EQ(g.size(), 5);
  EXPECT_TRUE(g.has_edge(0, 1));
  files.edges = "/nonexistent/file";
  try {
    io::load_network(files);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
  files.edges = temp_file("bad_edges.txt", "1 2\n2 x\n");
  EXPECT_THROW(io::load_network(files), Error);
}
