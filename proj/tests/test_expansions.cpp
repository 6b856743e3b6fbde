#include "hypermp/expansions.hpp"

#include <gtest/gtest.h>

#include "support/test_support.hpp"

using namespace hypermp;

namespace {
Graph graph_of(int n, std::vector<std::pair<int, int>> edges) {
    Graph g;
    g.num_vertices = n;
    for (auto [u, v] : edges) g.add_edge(u, v);
    g.normalize();
    return g;
}
}  // namespace

TEST(CliqueExpansion, SizeThreeHyperedgeCollidesWithTriangle) {
    auto from_hyperedge = clique_expansion(Hypergraph::build(3, {{0, 1, 2}}));
    auto from_pairs = clique_expansion(Hypergraph::build(3, {{0, 1}, {0, 2}, {1, 2}}));
    EXPECT_EQ(from_hyperedge.edges, (std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}}));
    EXPECT_TRUE(graphs_equal(from_hyperedge, from_pairs));
}

TEST(CliqueExpansion, SizeTwoHyperedgeIsAnEdge) {
    auto g = clique_expansion(Hypergraph::build(2, {{0, 1}}));
    EXPECT_EQ(g.edges, (std::vector<std::pair<int, int>>{{0, 1}}));
}

TEST(CliqueExpansion, UnionOfPairs) {
    auto g = clique_expansion(Hypergraph::build(4, {{0, 1, 2}, {2, 3}}));
    EXPECT_EQ(g.edges, (std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}, {2, 3}}));
}

// size-k hyperedge contributes k(k-1)/2 distinct undirected edges
TEST(CliqueExpansion, PairCountForSingleHyperedge) {
    for (int k = 1; k <= 6; ++k) {
        std::vector<int> members(k);
        for (int i = 0; i < k; ++i) members[i] = i;
        auto g = clique_expansion(Hypergraph::build(k, {members}));
        EXPECT_EQ(static_cast<int>(g.edges.size()), k * (k - 1) / 2);
    }
}

TEST(CliqueExpansion, IdentityOnPairwiseHypergraphs) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(6));
        auto h = hypermp::testing::random_hypergraph(rng, n, 6, 2);
        std::vector<std::vector<int>> pair_edges;
        for (const auto& e : h.hyperedges())
            if (e.size() == 2) pair_edges.push_back(e);
        auto hp = Hypergraph::build(n, pair_edges);
        auto g = clique_expansion(hp);
        std::vector<std::pair<int, int>> expected;
        for (const auto& e : pair_edges) expected.emplace_back(e[0], e[1]);
        std::sort(expected.begin(), expected.end());
        expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
        EXPECT_EQ(g.edges, expected);
    }
}

TEST(StarExpansion, SizeThreeHyperedge) {
    auto g = star_expansion(Hypergraph::build(3, {{0, 1, 2}}));
    EXPECT_EQ(g.num_vertices, 4);
    EXPECT_EQ(g.edges, (std::vector<std::pair<int, int>>{{0, 3}, {1, 3}, {2, 3}}));
}

TEST(StarExpansion, DegenerateSingleton) {
    auto g = star_expansion(Hypergraph::build(1, {{0}}));
    EXPECT_EQ(g.num_vertices, 2);
    EXPECT_EQ(g.edges, (std::vector<std::pair<int, int>>{{0, 1}}));
}

TEST(StarExpansion, TwoHyperedges) {
    auto g = star_expansion(Hypergraph::build(4, {{0, 1, 2}, {2, 3}}));
    EXPECT_EQ(g.num_vertices, 6);
    EXPECT_EQ(g.edges,
              (std::vector<std::pair<int, int>>{{0, 4}, {1, 4}, {2, 4}, {2, 5}, {3, 5}}));
}

// bipartite between original ids (< |V|) and hyperedge ids (>= |V|)
TEST(StarExpansion, AlwaysBipartite) {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(8));
        auto h = hypermp::testing::random_hypergraph(rng, n, 1 + static_cast<int>(rng.below(8)));
        auto g = star_expansion(h);
        for (const auto& [u, v] : g.edges) {
            EXPECT_NE(u < h.num_vertices(), v < h.num_vertices())
                << "edge " << u << "-" << v << " stays inside one partition";
        }
        EXPECT_EQ(g.num_vertices, h.num_vertices() + h.num_hyperedges());
    }
}

TEST(LineConversion, SharedVertexMakesEdge) {
    auto g = line_conversion(Hypergraph::build(4, {{0, 1, 2}, {2, 3}}));
    EXPECT_EQ(g.num_vertices, 2);
    EXPECT_EQ(g.edges, (std::vector<std::pair<int, int>>{{0, 1}}));
}

TEST(LineConversion, DisjointHyperedgesHaveNoEdges) {
    auto g = line_conversion(Hypergraph::build(4, {{0, 1}, {2, 3}}));
    EXPECT_EQ(g.num_vertices, 2);
    EXPECT_TRUE(g.edges.empty());
}

// the collision that motivates processing hypergraphs directly: hyperedges of
// size 3 and size 5 both collapse to the one-vertex edgeless graph
TEST(LineConversion, SizeInformationIsLost) {
    auto small = line_conversion(Hypergraph::build(3, {{0, 1, 2}}));
    auto large = line_conversion(Hypergraph::build(5, {{0, 1, 2, 3, 4}}));
    EXPECT_EQ(small.num_vertices, 1);
    EXPECT_TRUE(small.edges.empty());
    EXPECT_TRUE(graphs_equal(small, large));
}

TEST(LineConversion, PairwiseDisjointProperty) {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        // build hyperedges over disjoint vertex blocks
        const int blocks = 2 + static_cast<int>(rng.below(4));
        std::vector<std::vector<int>> hyperedges;
        int base = 0;
        for (int b = 0; b < blocks; ++b) {
            const int size = 1 + static_cast<int>(rng.below(3));
            std::vector<int> members;
            for (int i = 0; i < size; ++i) members.push_back(base + i);
            base += size;
            hyperedges.push_back(members);
        }
        auto g = line_conversion(Hypergraph::build(base, hyperedges));
        EXPECT_TRUE(g.edges.empty());
    }
}

TEST(GraphsEqual, Examples) {
    EXPECT_TRUE(graphs_equal(clique_expansion(Hypergraph::build(3, {{0, 1, 2}})),
                             clique_expansion(Hypergraph::build(3, {{0, 1}, {0, 2}, {1, 2}}))));
    EXPECT_FALSE(graphs_equal(graph_of(3, {{0, 1}, {1, 2}}), graph_of(3, {{0, 1}, {1, 2}, {0, 2}})));
    EXPECT_TRUE(graphs_equal(graph_of(3, {}), graph_of(3, {})));
}

TEST(GraphsEqual, IgnoresLabels) {
    auto a = star_expansion(Hypergraph::build(2, {{0, 1}}));
    Graph b = a;
    b.vertex_labels.assign(b.num_vertices, 9);
    EXPECT_TRUE(graphs_equal(a, b));
}
