#pragma once

// Undirected labeled graphs stored as per-vertex adjacency bitmasks.
// Vertices are 0-based internally; all serialized forms are 1-based.

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace covsel {

using VertexSet = std::uint64_t;

inline int set_size(VertexSet s) { return std::popcount(s); }

inline bool contains(VertexSet s, int v) { return (s >> v) & 1u; }

inline VertexSet vertex_bit(int v) { return VertexSet{1} << v; }

// Members of `s` as an ascending index list.
inline std::vector<int> set_to_indices(VertexSet s) {
    std::vector<int> out;
    out.reserve(std::popcount(s));
    while (s) {
        out.push_back(std::countr_zero(s));
        s &= s - 1;
    }
    return out;
}

// Lexicographic order on the sorted vertex lists of two sets.
inline bool set_lex_less(VertexSet a, VertexSet b) {
    while (a && b) {
        int va = std::countr_zero(a);
        int vb = std::countr_zero(b);
        if (va != vb) return va < vb;
        a &= a - 1;
        b &= b - 1;
    }
    return a == 0 && b != 0;
}

class Graph {
public:
    static constexpr int kMaxVertices = 64;

    explicit Graph(int p) : p_(p), nedges_(0), adj_(static_cast<size_t>(p), 0) {
        if (p < 1 || p > kMaxVertices)
            throw std::invalid_argument("Graph: vertex count must be in [1, 64]");
    }

    static Graph complete(int p) {
        Graph g(p);
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) g.add_edge(i, j);
        return g;
    }

    // Chain 0-1-2-...-(p-1).
    static Graph chain(int p) {
        Graph g(p);
        for (int i = 0; i + 1 < p; ++i) g.add_edge(i, i + 1);
        return g;
    }

    static Graph cycle(int p) {
        Graph g = chain(p);
        if (p >= 3) g.add_edge(0, p - 1);
        return g;
    }

    int p() const { return p_; }
    int size() const { return nedges_; }
    int max_size() const { return p_ * (p_ - 1) / 2; }

    VertexSet adjacency(int v) const { return adj_[static_cast<size_t>(v)]; }

    VertexSet all_vertices() const {
        return p_ == 64 ? ~VertexSet{0} : (vertex_bit(p_) - 1);
    }

    bool has_edge(int i, int j) const { return contains(adj_[static_cast<size_t>(i)], j); }

    void add_edge(int i, int j) {
        check_pair(i, j);
        if (has_edge(i, j)) return;
        adj_[static_cast<size_t>(i)] |= vertex_bit(j);
        adj_[static_cast<size_t>(j)] |= vertex_bit(i);
        ++nedges_;
    }

    void remove_edge(int i, int j) {
        check_pair(i, j);
        if (!has_edge(i, j)) return;
        adj_[static_cast<size_t>(i)] &= ~vertex_bit(j);
        adj_[static_cast<size_t>(j)] &= ~vertex_bit(i);
        --nedges_;
    }

    void flip_edge(int i, int j) {
        if (has_edge(i, j))
            remove_edge(i, j);
        else
            add_edge(i, j);
    }

    // True iff every pair inside `s` is adjacent.
    bool is_complete_set(VertexSet s) const {
        for (VertexSet t = s; t;) {
            int v = std::countr_zero(t);
            t &= t - 1;
            if ((s & ~vertex_bit(v)) & ~adj_[static_cast<size_t>(v)]) return false;
        }
        return true;
    }

    // Index of pair (i, j), i < j, in the row-major strict upper triangle.
    int edge_index(int i, int j) const {
        check_pair(i, j);
        if (i > j) std::swap(i, j);
        return i * (2 * p_ - i - 1) / 2 + (j - i - 1);
    }

    static std::pair<int, int> edge_from_index(int p, int idx) {
        for (int i = 0; i < p - 1; ++i) {
            int row = p - 1 - i;
            if (idx < row) return {i, i + 1 + idx};
            idx -= row;
        }
        throw std::out_of_range("edge_from_index: index out of range");
    }

    // Strict upper triangle, row-major, as '0'/'1' characters.
    std::string to_bitstring() const {
        std::string s;
        s.reserve(static_cast<size_t>(max_size()));
        for (int i = 0; i < p_; ++i)
            for (int j = i + 1; j < p_; ++j) s.push_back(has_edge(i, j) ? '1' : '0');
        return s;
    }

    static Graph from_bitstring(int p, const std::string& bits) {
        Graph g(p);
        if (static_cast<int>(bits.size()) != g.max_size())
            throw std::invalid_argument("from_bitstring: wrong length");
        int idx = 0;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j, ++idx)
                if (bits[static_cast<size_t>(idx)] == '1') g.add_edge(i, j);
        return g;
    }

    // Edge indicators packed into a single word; requires r <= 64 (p <= 11).
    std::uint64_t edge_mask() const {
        if (max_size() > 64) throw std::logic_error("edge_mask: graph too large");
        std::uint64_t m = 0;
        for (int i = 0; i < p_; ++i)
            for (int j = i + 1; j < p_; ++j)
                if (has_edge(i, j)) m |= std::uint64_t{1} << edge_index(i, j);
        return m;
    }

    static Graph from_edge_mask(int p, std::uint64_t mask) {
        Graph g(p);
        int idx = 0;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j, ++idx)
                if ((mask >> idx) & 1u) g.add_edge(i, j);
        return g;
    }

    nlohmann::json to_json() const {
        nlohmann::json edges = nlohmann::json::array();
        for (int i = 0; i < p_; ++i)
            for (int j = i + 1; j < p_; ++j)
                if (has_edge(i, j)) edges.push_back({i + 1, j + 1});
        return nlohmann::json{{"p", p_}, {"edges", edges}};
    }

    static Graph from_json(const nlohmann::json& j) {
        Graph g(j.at("p").get<int>());
        for (const auto& e : j.at("edges")) {
            int a = e.at(0).get<int>();
            int b = e.at(1).get<int>();
            if (a < 1 || b < 1 || a > g.p() || b > g.p() || a == b)
                throw std::invalid_argument("Graph::from_json: bad edge");
            g.add_edge(a - 1, b - 1);
        }
        return g;
    }

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.p_ == b.p_ && a.adj_ == b.adj_;
    }

private:
    void check_pair(int i, int j) const {
        if (i < 0 || j < 0 || i >= p_ || j >= p_ || i == j)
            throw std::invalid_argument("Graph: bad vertex pair");
    }

    int p_;
    int nedges_;
    std::vector<VertexSet> adj_;
};

}  // namespace covsel
