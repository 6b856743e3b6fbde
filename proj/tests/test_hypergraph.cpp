#include "hypermp/hypergraph.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "support/test_support.hpp"

using namespace hypermp;

TEST(HypergraphBuild, DirectConstruction) {
    auto h = Hypergraph::build(4, {{0, 1, 2}, {2, 3}});
    EXPECT_EQ(h.num_vertices(), 4);
    EXPECT_EQ(h.num_hyperedges(), 2);
    EXPECT_EQ(h.hyperedge(0), (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(h.hyperedge(1), (std::vector<int>{2, 3}));
    EXPECT_EQ(h.hyperedge_weights(), (std::vector<double>{1.0, 1.0}));
}

TEST(HypergraphBuild, OutOfRangeVertexId) {
    EXPECT_THROW(Hypergraph::build(3, {{0, 1, 5}}), StructuralError);
}

TEST(HypergraphBuild, EmptyHyperedge) {
    EXPECT_THROW(Hypergraph::build(2, {{}}), StructuralError);
}

TEST(HypergraphBuild, DuplicateMemberRejected) {
    EXPECT_THROW(Hypergraph::build(3, {{1, 1, 2}}), StructuralError);
}

TEST(HypergraphBuild, DuplicateHyperedgesPermitted) {
    auto h = Hypergraph::build(2, {{0, 1}, {0, 1}, {0}});
    EXPECT_EQ(h.num_hyperedges(), 3);
    EXPECT_EQ(h.vertex_degrees(), (std::vector<int>{3, 2}));
}

TEST(HypergraphBuild, RoundTripPreservesInput) {
    const std::vector<std::vector<int>> edges = {{0, 2}, {1}, {0, 1, 3}};
    auto h = Hypergraph::build(4, edges);
    EXPECT_EQ(h.hyperedges(), edges);
}

TEST(Incidence, MatchesMembership) {
    auto h = Hypergraph::build(4, {{0, 1, 2}, {2, 3}});
    SparseIncidence inc(h);
    const std::vector<std::pair<int, int>> expected = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {3, 1}};
    EXPECT_EQ(inc.entries(), expected);
    EXPECT_EQ(inc.rows(), 4);
    EXPECT_EQ(inc.cols(), 2);
}

TEST(Incidence, ZeroHyperedges) {
    auto h = Hypergraph::build(3, {});
    SparseIncidence inc(h);
    EXPECT_EQ(inc.cols(), 0);
    EXPECT_EQ(inc.nnz(), 0);
    EXPECT_TRUE(inc.entries().empty());
}

TEST(Incidence, SingleVertexSingleEdge) {
    auto h = Hypergraph::build(1, {{0}});
    SparseIncidence inc(h);
    EXPECT_EQ(inc.entries(), (std::vector<std::pair<int, int>>{{0, 0}}));
}

TEST(Incidence, PureFunction) {
    auto h = Hypergraph::build(5, {{0, 4}, {1, 2, 3}, {0, 1, 2, 3, 4}});
    SparseIncidence a(h), b(h);
    EXPECT_EQ(a.entries(), b.entries());
}

TEST(Incidence, ColumnSizesMatchHyperedgeSizes) {
    auto h = Hypergraph::build(5, {{0, 1, 2}, {3}, {2, 4}});
    SparseIncidence inc(h);
    for (int e = 0; e < h.num_hyperedges(); ++e)
        EXPECT_EQ(static_cast<int>(inc.members_of(e).size()), h.hyperedge_degrees()[e]);
}

TEST(Degrees, VertexDegreeExamples) {
    EXPECT_EQ(Hypergraph::build(4, {{0, 1, 2}, {2, 3}}).vertex_degrees(),
              (std::vector<int>{1, 1, 2, 1}));
    EXPECT_EQ(Hypergraph::build(3, {}).vertex_degrees(), (std::vector<int>{0, 0, 0}));
    EXPECT_EQ(Hypergraph::build(2, {{0, 1}, {0, 1}, {0}}).vertex_degrees(),
              (std::vector<int>{3, 2}));
}

TEST(Degrees, HyperedgeDegreeExamples) {
    EXPECT_EQ(Hypergraph::build(4, {{0, 1, 2}, {2, 3}}).hyperedge_degrees(),
              (std::vector<int>{3, 2}));
    EXPECT_EQ(Hypergraph::build(1, {{0}}).hyperedge_degrees(), (std::vector<int>{1}));
    EXPECT_EQ(Hypergraph::build(5, {{0, 1, 2, 3, 4}}).hyperedge_degrees(), (std::vector<int>{5}));
}

// handshake identity: sum of vertex degrees == sum of hyperedge degrees ==
// number of incidence entries
TEST(Degrees, HandshakeIdentityOnRandomHypergraphs) {
    Rng rng(20240817);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(12));
        const int m = static_cast<int>(rng.below(15));
        auto h = hypermp::testing::random_hypergraph(rng, n, m, 5);
        const auto dv = h.vertex_degrees();
        const auto de = h.hyperedge_degrees();
        const long sum_dv = std::accumulate(dv.begin(), dv.end(), 0L);
        const long sum_de = std::accumulate(de.begin(), de.end(), 0L);
        EXPECT_EQ(sum_dv, sum_de);
        EXPECT_EQ(sum_dv, SparseIncidence(h).nnz());
    }
}

TEST(HypergraphText, ParsesFormatWithComments) {
    std::istringstream in(
        "# a comment\n"
        "4 2   # header\n"
        "0 1 2\n"
        "\n"
        "2 3\n");
    auto h = read_hypergraph(in);
    EXPECT_EQ(h.num_vertices(), 4);
    ASSERT_EQ(h.num_hyperedges(), 2);
    EXPECT_EQ(h.hyperedge(1), (std::vector<int>{2, 3}));
}

TEST(HypergraphText, WriteReadRoundTrip) {
    auto h = Hypergraph::build(6, {{0, 5}, {1, 2, 3}, {4}});
    std::stringstream buf;
    write_hypergraph(buf, h);
    auto h2 = read_hypergraph(buf);
    EXPECT_EQ(h2.num_vertices(), h.num_vertices());
    EXPECT_EQ(h2.hyperedges(), h.hyperedges());
}

TEST(HypergraphText, ReportsLineNumbers) {
    std::istringstream bad(
        "3 2\n"
        "0 1\n"
        "0 7\n");
    try {
        read_hypergraph(bad);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line_number, 3);
    }
}

TEST(HypergraphText, RejectsMissingHyperedgeLines) {
    std::istringstream bad("2 2\n0 1\n");
    EXPECT_THROW(read_hypergraph(bad), ParseError);
}
