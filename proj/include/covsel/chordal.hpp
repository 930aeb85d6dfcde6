#pragma once

// Decomposable (chordal) graph machinery: maximum cardinality search,
// perfect clique sequences, legal single-edge flips and the host-clique
// context needed by the normalizing-constant ratio.

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "covsel/graph.hpp"

namespace covsel {

// Maximum cardinality search (Tarjan & Yannakakis). Numbers vertices in
// selection order and reports chordality via the zero fill-in test; ties
// are broken by smallest label so the ordering is deterministic. Stack
// buffers only: this sits in the inner loop of every sampler and of the
// exhaustive enumerations.
inline bool mcs_is_chordal(const Graph& g, std::vector<int>* order_out = nullptr) {
    const int p = g.p();
    std::array<int, Graph::kMaxVertices> weight{};
    std::array<int, Graph::kMaxVertices> rank{};
    std::array<int, Graph::kMaxVertices> order{};
    VertexSet numbered = 0;

    for (int step = 0; step < p; ++step) {
        int best = -1;
        for (int v = 0; v < p; ++v) {
            if (contains(numbered, v)) continue;
            if (best < 0 || weight[static_cast<size_t>(v)] > weight[static_cast<size_t>(best)])
                best = v;
        }
        const VertexSet earlier = g.adjacency(best) & numbered;
        if (earlier) {
            // m = earlier neighbor numbered last; need earlier \ {m} within adj(m).
            int m = -1;
            for (VertexSet t = earlier; t;) {
                int v = std::countr_zero(t);
                t &= t - 1;
                if (m < 0 || rank[static_cast<size_t>(v)] > rank[static_cast<size_t>(m)]) m = v;
            }
            if ((earlier & ~vertex_bit(m)) & ~g.adjacency(m)) return false;
        }
        rank[static_cast<size_t>(best)] = step;
        numbered |= vertex_bit(best);
        order[static_cast<size_t>(step)] = best;
        for (VertexSet t = g.adjacency(best) & ~numbered; t;) {
            int v = std::countr_zero(t);
            t &= t - 1;
            ++weight[static_cast<size_t>(v)];
        }
    }
    if (order_out) order_out->assign(order.begin(), order.begin() + p);
    return true;
}

inline bool is_decomposable(const Graph& g) { return mcs_is_chordal(g); }

// Maximal cliques of a decomposable graph, sorted by vertex-list lex order.
inline std::vector<VertexSet> maximal_cliques(const Graph& g) {
    std::vector<int> order;
    if (!mcs_is_chordal(g, &order))
        throw std::invalid_argument("maximal_cliques: graph is not decomposable");

    // Candidate cliques {v} + earlier neighbors along the MCS order.
    std::vector<VertexSet> cand;
    cand.reserve(order.size());
    VertexSet numbered = 0;
    for (int v : order) {
        cand.push_back(vertex_bit(v) | (g.adjacency(v) & numbered));
        numbered |= vertex_bit(v);
    }
    std::vector<VertexSet> out;
    for (size_t i = 0; i < cand.size(); ++i) {
        bool maximal = true;
        for (size_t j = 0; j < cand.size(); ++j) {
            if (i == j) continue;
            const bool subset = (cand[i] & ~cand[j]) == 0;
            if (subset && (cand[i] != cand[j] || j < i)) {
                maximal = false;
                break;
            }
        }
        if (maximal) out.push_back(cand[i]);
    }
    std::sort(out.begin(), out.end(), set_lex_less);
    return out;
}

// Ordered cliques C_1..C_k with separators S_j = C_j intersect (C_1+...+C_{j-1}).
// separators[0] is always empty.
struct PerfectSequence {
    int p = 0;
    std::vector<VertexSet> cliques;
    std::vector<VertexSet> separators;
    std::vector<std::vector<int>> clique_idx;
    std::vector<std::vector<int>> sep_idx;

    size_t k() const { return cliques.size(); }
};

namespace detail {

inline PerfectSequence sequence_from_cliques(int p, std::vector<VertexSet> cliques,
                                             size_t start) {
    // Prim-style greedy on the clique intersection graph: repeatedly attach
    // the remaining clique with the largest overlap against any placed one.
    // For a decomposable graph this yields a junction-tree order, hence the
    // running intersection property. Ties break to the lex-smallest clique.
    const size_t k = cliques.size();
    std::vector<bool> placed(k, false);
    PerfectSequence seq;
    seq.p = p;
    seq.cliques.reserve(k);
    seq.separators.reserve(k);

    VertexSet history = 0;
    size_t current = start;
    for (size_t n = 0; n < k; ++n) {
        if (n > 0) {
            int best_w = -1;
            size_t best = 0;
            for (size_t c = 0; c < k; ++c) {
                if (placed[c]) continue;
                int w = 0;
                for (size_t d = 0; d < k; ++d)
                    if (placed[d]) w = std::max(w, set_size(cliques[c] & cliques[d]));
                if (w > best_w ||
                    (w == best_w && set_lex_less(cliques[c], cliques[best]))) {
                    best_w = w;
                    best = c;
                }
            }
            current = best;
        }
        placed[current] = true;
        seq.cliques.push_back(cliques[current]);
        seq.separators.push_back(cliques[current] & history);
        history |= cliques[current];
    }
    for (size_t j = 0; j < k; ++j) {
        seq.clique_idx.push_back(set_to_indices(seq.cliques[j]));
        seq.sep_idx.push_back(set_to_indices(seq.separators[j]));
    }
    return seq;
}

}  // namespace detail

inline PerfectSequence perfect_sequence(const Graph& g) {
    return detail::sequence_from_cliques(g.p(), maximal_cliques(g), 0);
}

// Builds the sequence exactly in the order given, with separators taken
// against the running history. No reordering, no validity check.
inline PerfectSequence sequence_as_ordered(int p, const std::vector<VertexSet>& cliques) {
    PerfectSequence seq;
    seq.p = p;
    VertexSet history = 0;
    for (const VertexSet c : cliques) {
        seq.cliques.push_back(c);
        seq.separators.push_back(c & history);
        history |= c;
    }
    for (size_t j = 0; j < seq.cliques.size(); ++j) {
        seq.clique_idx.push_back(set_to_indices(seq.cliques[j]));
        seq.sep_idx.push_back(set_to_indices(seq.separators[j]));
    }
    return seq;
}

// Alternative valid orderings (one per possible starting clique); used to
// check that clique/separator factorizations do not depend on the ordering.
inline std::vector<PerfectSequence> all_perfect_sequence_starts(const Graph& g) {
    auto cliques = maximal_cliques(g);
    std::vector<PerfectSequence> out;
    for (size_t s = 0; s < cliques.size(); ++s)
        out.push_back(detail::sequence_from_cliques(g.p(), cliques, s));
    return out;
}

// Full validity check for a clique/separator sequence. With
// `require_maximal` false the sets only need to be complete (used for
// sequences of complete sets arising from edge deletions).
inline bool is_perfect_sequence(const Graph& g, const PerfectSequence& seq,
                                bool require_maximal = true) {
    if (seq.p != g.p() || seq.cliques.empty()) return false;
    if (seq.separators.size() != seq.cliques.size()) return false;
    if (seq.separators[0] != 0) return false;

    VertexSet history = 0;
    int card_sum = 0;
    for (size_t j = 0; j < seq.cliques.size(); ++j) {
        const VertexSet c = seq.cliques[j];
        if (!c || !g.is_complete_set(c)) return false;
        if (require_maximal) {
            for (int v = 0; v < g.p(); ++v)
                if (!contains(c, v) && (c & ~g.adjacency(v)) == 0) return false;
        }
        if (seq.separators[j] != (c & history)) return false;
        if (j > 0) {
            bool housed = false;
            for (size_t m = 0; m < j && !housed; ++m)
                housed = (seq.separators[j] & ~seq.cliques[m]) == 0;
            if (!housed) return false;
        }
        card_sum += set_size(c) - set_size(seq.separators[j]);
        history |= c;
    }
    if (history != g.all_vertices()) return false;
    if (card_sum != g.p()) return false;

    // Every edge must live inside some listed set.
    for (int i = 0; i < g.p(); ++i)
        for (int j = i + 1; j < g.p(); ++j) {
            if (!g.has_edge(i, j)) continue;
            const VertexSet e = vertex_bit(i) | vertex_bit(j);
            bool covered = false;
            for (const VertexSet c : seq.cliques)
                if ((e & ~c) == 0) {
                    covered = true;
                    break;
                }
            if (!covered) return false;
        }
    return true;
}

// Deleting an existing edge keeps the graph decomposable iff the edge lies
// in exactly one clique (Frydenberg & Lauritzen 1989), i.e. iff the common
// neighborhood of its endpoints is complete.
inline bool deletion_is_legal(const Graph& g, int i, int j) {
    return g.is_complete_set(g.adjacency(i) & g.adjacency(j));
}

// True iff flipping e_ij leaves the class of decomposable graphs in both
// directions; `g` itself must be decomposable.
inline bool legal_flip(const Graph& g, int i, int j) {
    if (g.has_edge(i, j)) return deletion_is_legal(g, i, j);
    Graph h = g;
    h.add_edge(i, j);
    return is_decomposable(h);
}

// Host-clique bookkeeping for a single-edge deletion. The edge (i, j) must
// be present and deletable; roles are ordered so that C_q \ {j} can precede
// C_q \ {i} in the modified sequence (j outside the host separator).
struct FlipContext {
    int i = 0;
    int j = 0;
    size_t host_index = 0;
    VertexSet host = 0;       // C_q
    VertexSet sep = 0;        // C_q minus {i, j}

    VertexSet cq1() const { return host & ~vertex_bit(j); }
    VertexSet cq2() const { return host & ~vertex_bit(i); }
};

inline FlipContext flip_context(const Graph& g, const PerfectSequence& seq, int i,
                                int j) {
    if (!g.has_edge(i, j)) throw std::invalid_argument("flip_context: edge absent");
    const VertexSet common = g.adjacency(i) & g.adjacency(j);
    if (!g.is_complete_set(common))
        throw std::invalid_argument("flip_context: edge lies in more than one clique");

    FlipContext ctx;
    ctx.host = common | vertex_bit(i) | vertex_bit(j);
    ctx.sep = common;

    auto it = std::find(seq.cliques.begin(), seq.cliques.end(), ctx.host);
    if (it == seq.cliques.end())
        throw std::invalid_argument("flip_context: sequence does not match graph");
    ctx.host_index = static_cast<size_t>(it - seq.cliques.begin());

    // Keep the vertex that sits in the host separator in the first split.
    if (contains(seq.separators[ctx.host_index], j)) std::swap(i, j);
    ctx.i = i;
    ctx.j = j;
    return ctx;
}

// Visits every decomposable graph on p labeled vertices exactly once.
// Walks all 2^r edge patterns in Gray-code order so each step flips a
// single edge; p = 8 (2^28 graphs) only with `allow_slow`.
template <typename Fn>
inline void enumerate_decomposable(int p, Fn&& fn, bool allow_slow = false) {
    if (p < 1 || p > 8 || (p == 8 && !allow_slow))
        throw std::invalid_argument("enumerate_decomposable: p out of supported range");
    const int r = p * (p - 1) / 2;
    std::vector<std::pair<int, int>> pair_of;
    pair_of.reserve(static_cast<size_t>(r));
    for (int idx = 0; idx < r; ++idx) pair_of.push_back(Graph::edge_from_index(p, idx));

    Graph g(p);
    fn(g);  // empty graph is decomposable
    const std::uint64_t total = std::uint64_t{1} << r;
    for (std::uint64_t n = 1; n < total; ++n) {
        const auto [i, j] = pair_of[static_cast<size_t>(std::countr_zero(n))];
        g.flip_edge(i, j);
        if (is_decomposable(g)) fn(g);
    }
}

}  // namespace covsel
