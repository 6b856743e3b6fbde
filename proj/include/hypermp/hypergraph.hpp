#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hypermp/common.hpp"

namespace hypermp {

/// Immutable hypergraph: a vertex count plus an ordered list of hyperedges,
/// each a set of vertex ids. Duplicate hyperedges (identical member sets) are
/// allowed; members of one hyperedge are stored sorted and must be unique.
class Hypergraph {
public:
    static Hypergraph build(int num_vertices, std::vector<std::vector<int>> hyperedges,
                            std::vector<double> weights = {}) {
        if (num_vertices < 0) throw StructuralError("num_vertices must be non-negative");
        for (std::size_t e = 0; e < hyperedges.size(); ++e) {
            auto& members = hyperedges[e];
            if (members.empty())
                throw StructuralError("hyperedge " + std::to_string(e) + " is empty");
            std::sort(members.begin(), members.end());
            for (std::size_t i = 0; i < members.size(); ++i) {
                if (members[i] < 0 || members[i] >= num_vertices)
                    throw StructuralError("hyperedge " + std::to_string(e) + ": vertex id " +
                                          std::to_string(members[i]) + " out of range [0, " +
                                          std::to_string(num_vertices) + ")");
                if (i > 0 && members[i] == members[i - 1])
                    throw StructuralError("hyperedge " + std::to_string(e) +
                                          ": duplicate vertex id " + std::to_string(members[i]));
            }
        }
        if (weights.empty()) {
            weights.assign(hyperedges.size(), 1.0);
        } else if (weights.size() != hyperedges.size()) {
            throw StructuralError("hyperedge_weights size does not match hyperedge count");
        }
        return Hypergraph(num_vertices, std::move(hyperedges), std::move(weights));
    }

    int num_vertices() const { return num_vertices_; }
    int num_hyperedges() const { return static_cast<int>(hyperedges_.size()); }

    const std::vector<std::vector<int>>& hyperedges() const { return hyperedges_; }
    const std::vector<int>& hyperedge(int e) const { return hyperedges_[e]; }
    const std::vector<double>& hyperedge_weights() const { return weights_; }

    std::vector<int> vertex_degrees() const {
        std::vector<int> deg(num_vertices_, 0);
        for (const auto& members : hyperedges_)
            for (int v : members) ++deg[v];
        return deg;
    }

    std::vector<int> hyperedge_degrees() const {
        std::vector<int> deg(hyperedges_.size());
        for (std::size_t e = 0; e < hyperedges_.size(); ++e)
            deg[e] = static_cast<int>(hyperedges_[e].size());
        return deg;
    }

private:
    Hypergraph(int n, std::vector<std::vector<int>> edges, std::vector<double> weights)
        : num_vertices_(n), hyperedges_(std::move(edges)), weights_(std::move(weights)) {}

    int num_vertices_ = 0;
    std::vector<std::vector<int>> hyperedges_;
    std::vector<double> weights_;
};

/// |V| x |E| 0/1 incidence pattern with both row-major (vertex -> incident
/// hyperedges) and column-major (hyperedge -> members) traversal. Entry order
/// is deterministic: ids ascending within each row and column.
class SparseIncidence {
public:
    SparseIncidence() = default;

    explicit SparseIncidence(const Hypergraph& h)
        : SparseIncidence(h.num_vertices(), h.num_hyperedges(), entries_of(h)) {}

    // entries: (vertex, hyperedge) pairs, duplicates not allowed
    SparseIncidence(int rows, int cols, std::vector<std::pair<int, int>> entries)
        : rows_(rows), cols_(cols) {
        std::sort(entries.begin(), entries.end());
        row_ptr_.assign(rows_ + 1, 0);
        col_ptr_.assign(cols_ + 1, 0);
        row_cols_.reserve(entries.size());
        for (const auto& [v, e] : entries) {
            ++row_ptr_[v + 1];
            ++col_ptr_[e + 1];
            row_cols_.push_back(e);
        }
        for (int v = 0; v < rows_; ++v) row_ptr_[v + 1] += row_ptr_[v];
        for (int e = 0; e < cols_; ++e) col_ptr_[e + 1] += col_ptr_[e];
        col_rows_.resize(entries.size());
        std::vector<int> fill(col_ptr_.begin(), col_ptr_.end() - 1);
        for (const auto& [v, e] : entries) col_rows_[fill[e]++] = v;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nnz() const { return static_cast<int>(row_cols_.size()); }

    /// Hyperedge ids incident to vertex v, ascending.
    std::span<const int> hyperedges_of(int v) const {
        return {row_cols_.data() + row_ptr_[v], row_cols_.data() + row_ptr_[v + 1]};
    }

    /// Member vertex ids of hyperedge e, ascending.
    std::span<const int> members_of(int e) const {
        return {col_rows_.data() + col_ptr_[e], col_rows_.data() + col_ptr_[e + 1]};
    }

    std::vector<std::pair<int, int>> entries() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(row_cols_.size());
        for (int v = 0; v < rows_; ++v)
            for (int e : hyperedges_of(v)) out.emplace_back(v, e);
        return out;
    }

    std::vector<int> row_counts() const {
        std::vector<int> c(rows_);
        for (int v = 0; v < rows_; ++v) c[v] = row_ptr_[v + 1] - row_ptr_[v];
        return c;
    }

    std::vector<int> column_counts() const {
        std::vector<int> c(cols_);
        for (int e = 0; e < cols_; ++e) c[e] = col_ptr_[e + 1] - col_ptr_[e];
        return c;
    }

private:
    static std::vector<std::pair<int, int>> entries_of(const Hypergraph& h) {
        std::vector<std::pair<int, int>> entries;
        for (int e = 0; e < h.num_hyperedges(); ++e)
            for (int v : h.hyperedge(e)) entries.emplace_back(v, e);
        return entries;
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_, row_cols_;  // vertex -> hyperedges
    std::vector<int> col_ptr_, col_rows_;  // hyperedge -> vertices
};

inline SparseIncidence incidence(const Hypergraph& h) { return SparseIncidence(h); }

/// Simple undirected graph (no self-loops, no parallel edges). Optional
/// per-vertex labels; equality checks ignore them.
struct Graph {
    int num_vertices = 0;
    std::vector<std::pair<int, int>> edges;  // normalized u < v, sorted, unique
    std::vector<int> vertex_labels;          // optional

    void add_edge(int u, int v) {
        if (u == v) return;
        if (u > v) std::swap(u, v);
        edges.emplace_back(u, v);
    }

    void normalize() {
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
};

// ---------------------------------------------------------------------------
// Text formats.
//
// Hypergraph file: first non-comment line "num_vertices num_hyperedges", then
// one line per hyperedge listing its vertex ids. '#' starts a comment.
// Graph edge list: "num_vertices" line, then one "u v" line per edge.
// ---------------------------------------------------------------------------

inline Hypergraph read_hypergraph(std::istream& in) {
    std::string line;
    long line_no = 0;
    auto next_content_line = [&](std::string& out) -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out = line;
            return true;
        }
        return false;
    };

    std::string header;
    if (!next_content_line(header)) throw ParseError("missing header line", line_no);
    std::istringstream hs(header);
    long long num_vertices = -1, num_hyperedges = -1;
    if (!(hs >> num_vertices >> num_hyperedges) || num_vertices < 0 || num_hyperedges < 0)
        throw ParseError("header must be 'num_vertices num_hyperedges'", line_no);
    std::string junk;
    if (hs >> junk) throw ParseError("trailing tokens after header", line_no);

    std::vector<std::vector<int>> hyperedges;
    hyperedges.reserve(num_hyperedges);
    for (long long e = 0; e < num_hyperedges; ++e) {
        std::string row;
        if (!next_content_line(row))
            throw ParseError("expected " + std::to_string(num_hyperedges) + " hyperedge lines, got " +
                                 std::to_string(e),
                             line_no);
        std::istringstream rs(row);
        std::vector<int> members;
        long long v;
        while (rs >> v) {
            if (v < 0 || v >= num_vertices)
                throw ParseError("vertex id " + std::to_string(v) + " out of range", line_no);
            members.push_back(static_cast<int>(v));
        }
        if (!rs.eof()) throw ParseError("non-integer token in hyperedge line", line_no);
        if (members.empty()) throw ParseError("empty hyperedge line", line_no);
        hyperedges.push_back(std::move(members));
    }
    try {
        return Hypergraph::build(static_cast<int>(num_vertices), std::move(hyperedges));
    } catch (const StructuralError& err) {
        throw ParseError(err.what(), line_no);
    }
}

inline void write_hypergraph(std::ostream& out, const Hypergraph& h) {
    out << h.num_vertices() << ' ' << h.num_hyperedges() << '\n';
    for (const auto& members : h.hyperedges()) {
        for (std::size_t i = 0; i < members.size(); ++i)
            out << members[i] << (i + 1 < members.size() ? ' ' : '\n');
    }
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
    out << g.num_vertices << '\n';
    for (const auto& [u, v] : g.edges) out << u << ' ' << v << '\n';
}

}  // namespace hypermp
