#pragma once

#include <utility>
#include <vector>

#include "hypermp/hypergraph.hpp"

namespace hypermp {

// Three ways of encoding a hypergraph in a simple graph. Each one is lossy;
// the collision tests in the suite make that executable.

/// Every hyperedge of size k becomes the k*(k-1)/2 unordered pairs of its
/// members. Cannot distinguish a size-k hyperedge from k pairwise relations.
inline Graph clique_expansion(const Hypergraph& h) {
    Graph g;
    g.num_vertices = h.num_vertices();
    for (const auto& members : h.hyperedges())
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j)
                g.add_edge(members[i], members[j]);
    g.normalize();
    return g;
}

/// Hyperedge e becomes a new vertex with id |V|+e, connected to each member.
/// The result is bipartite; labels mark the partition (0 = original vertex,
/// 1 = hyperedge vertex) but equality checks stay label-blind.
inline Graph star_expansion(const Hypergraph& h) {
    Graph g;
    g.num_vertices = h.num_vertices() + h.num_hyperedges();
    g.vertex_labels.assign(g.num_vertices, 0);
    for (int e = 0; e < h.num_hyperedges(); ++e) {
        const int hyperedge_vertex = h.num_vertices() + e;
        g.vertex_labels[hyperedge_vertex] = 1;
        for (int v : h.hyperedge(e)) g.add_edge(hyperedge_vertex, v);
    }
    g.normalize();
    return g;
}

/// One vertex per hyperedge; i and j are adjacent iff hyperedges i and j
/// share at least one member. Vertex data and hyperedge sizes are dropped.
inline Graph line_conversion(const Hypergraph& h) {
    Graph g;
    g.num_vertices = h.num_hyperedges();
    const SparseIncidence inc(h);
    for (int v = 0; v < h.num_vertices(); ++v) {
        auto incident = inc.hyperedges_of(v);
        for (std::size_t i = 0; i < incident.size(); ++i)
            for (std::size_t j = i + 1; j < incident.size(); ++j)
                g.add_edge(incident[i], incident[j]);
    }
    g.normalize();
    return g;
}

/// Label-blind structural equality: same vertex count, same unordered edges.
inline bool graphs_equal(const Graph& a, const Graph& b) {
    if (a.num_vertices != b.num_vertices) return false;
    auto ea = a.edges, eb = b.edges;
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    return ea == eb;
}

}  // namespace hypermp
