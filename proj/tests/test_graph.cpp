#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "covsel/chordal.hpp"
#include "covsel/graph.hpp"

using namespace covsel;

namespace {

VertexSet vs(std::initializer_list<int> verts) {
    VertexSet s = 0;
    for (int v : verts) s |= vertex_bit(v);
    return s;
}

// Brute-force flip legality: flip the indicator and test both variants.
bool legal_flip_oracle(const Graph& g, int i, int j) {
    Graph h = g;
    h.flip_edge(i, j);
    return is_decomposable(g) && is_decomposable(h);
}

}  // namespace

TEST_CASE("edge indexing round-trips") {
    for (int p : {2, 3, 5, 11}) {
        Graph g(p);
        int idx = 0;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j, ++idx) {
                CHECK(g.edge_index(i, j) == idx);
                CHECK(Graph::edge_from_index(p, idx) == std::pair{i, j});
            }
    }
}

TEST_CASE("bitstring and json round-trips") {
    Graph g = Graph::chain(5);
    g.add_edge(0, 4);
    CHECK(Graph::from_bitstring(5, g.to_bitstring()) == g);
    CHECK(Graph::from_json(g.to_json()) == g);

    auto j = Graph::chain(3).to_json();
    CHECK(j["p"] == 3);
    CHECK(j["edges"] == nlohmann::json({{1, 2}, {2, 3}}));
}

TEST_CASE("decomposability basics") {
    CHECK(is_decomposable(Graph(4)));             // empty graph
    CHECK_FALSE(is_decomposable(Graph::cycle(4)));  // chordless 4-cycle
    CHECK(is_decomposable(Graph::complete(5)));
    CHECK(is_decomposable(Graph::chain(6)));
    CHECK_FALSE(is_decomposable(Graph::cycle(6)));

    Graph g = Graph::cycle(4);
    g.add_edge(0, 2);  // chord
    CHECK(is_decomposable(g));
}

TEST_CASE("perfect sequence of a chain") {
    auto seq = perfect_sequence(Graph::chain(4));
    REQUIRE(seq.k() == 3);
    CHECK(seq.cliques[0] == vs({0, 1}));
    CHECK(seq.cliques[1] == vs({1, 2}));
    CHECK(seq.cliques[2] == vs({2, 3}));
    CHECK(seq.separators[1] == vs({1}));
    CHECK(seq.separators[2] == vs({2}));
}

TEST_CASE("perfect sequence of complete and empty graphs") {
    auto seq_c = perfect_sequence(Graph::complete(3));
    REQUIRE(seq_c.k() == 1);
    CHECK(seq_c.cliques[0] == vs({0, 1, 2}));

    auto seq_e = perfect_sequence(Graph(3));
    REQUIRE(seq_e.k() == 3);
    for (size_t j = 0; j < 3; ++j) {
        CHECK(set_size(seq_e.cliques[j]) == 1);
        CHECK(seq_e.separators[j] == 0);
    }
}

TEST_CASE("perfect_sequence rejects nondecomposable input") {
    CHECK_THROWS_AS(perfect_sequence(Graph::cycle(4)), std::invalid_argument);
}

TEST_CASE("legal_flip examples") {
    CHECK(legal_flip(Graph::chain(3), 0, 2));        // close the triangle
    CHECK_FALSE(legal_flip(Graph::chain(4), 0, 3));  // would create a 4-cycle
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) CHECK(legal_flip(Graph::complete(4), i, j));
}

TEST_CASE("legal_flip matches brute force on all decomposable graphs, p <= 6") {
    for (int p = 2; p <= 6; ++p) {
        enumerate_decomposable(p, [&](const Graph& g) {
            for (int i = 0; i < p; ++i)
                for (int j = i + 1; j < p; ++j)
                    CHECK(legal_flip(g, i, j) == legal_flip_oracle(g, i, j));
        });
    }
}

TEST_CASE("flip_context examples") {
    {
        Graph tri = Graph::complete(3);
        auto ctx = flip_context(tri, perfect_sequence(tri), 0, 1);
        CHECK(ctx.host == vs({0, 1, 2}));
        CHECK(ctx.sep == vs({2}));
        CHECK(ctx.cq1() == (ctx.host & ~vertex_bit(ctx.j)));
        CHECK(set_size(ctx.cq1()) == 2);
        CHECK(set_size(ctx.cq2()) == 2);
    }
    {
        Graph e2 = Graph::complete(2);
        auto ctx = flip_context(e2, perfect_sequence(e2), 0, 1);
        CHECK(ctx.host == vs({0, 1}));
        CHECK(ctx.sep == 0);
    }
    {
        Graph k4 = Graph::complete(4);
        auto ctx = flip_context(k4, perfect_sequence(k4), 0, 1);
        CHECK(ctx.sep == vs({2, 3}));
    }
}

TEST_CASE("flip_context rejects edges in more than one clique") {
    // Two triangles sharing edge (0,1).
    Graph g(4);
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    g.add_edge(1, 2);
    g.add_edge(0, 3);
    g.add_edge(1, 3);
    REQUIRE(is_decomposable(g));
    auto seq = perfect_sequence(g);
    CHECK_THROWS_AS(flip_context(g, seq, 0, 1), std::invalid_argument);
}

TEST_CASE("sequence invariants hold on every decomposable graph, p <= 5") {
    for (int p = 2; p <= 5; ++p) {
        enumerate_decomposable(p, [&](const Graph& g) {
            auto seq = perfect_sequence(g);
            CHECK(is_perfect_sequence(g, seq));
            int card = 0;
            for (size_t j = 0; j < seq.k(); ++j)
                card += set_size(seq.cliques[j]) - set_size(seq.separators[j]);
            CHECK(card == p);
        });
    }
}

TEST_CASE("alternative orderings are all valid perfect sequences") {
    Graph g = Graph::chain(6);
    g.add_edge(1, 3);
    g.add_edge(3, 5);
    REQUIRE(is_decomposable(g));
    for (const auto& seq : all_perfect_sequence_starts(g)) CHECK(is_perfect_sequence(g, seq));
}

TEST_CASE("edge deletion splits the host clique into a valid sequence") {
    // For every legal deletion: replacing C_q by C_q\{j}, C_q\{i} yields a
    // perfect sequence of complete sets of the reduced graph whose members
    // contain all of its cliques.
    for (int p = 2; p <= 5; ++p) {
        enumerate_decomposable(p, [&](const Graph& g) {
            auto seq = perfect_sequence(g);
            for (int i = 0; i < p; ++i)
                for (int j = i + 1; j < p; ++j) {
                    if (!g.has_edge(i, j) || !deletion_is_legal(g, i, j)) continue;
                    auto ctx = flip_context(g, seq, i, j);

                    std::vector<VertexSet> sets;
                    for (size_t m = 0; m < seq.k(); ++m) {
                        if (m == ctx.host_index) {
                            sets.push_back(ctx.cq1());
                            sets.push_back(ctx.cq2());
                        } else {
                            sets.push_back(seq.cliques[m]);
                        }
                    }
                    Graph reduced = g;
                    reduced.remove_edge(i, j);
                    auto split = sequence_as_ordered(p, sets);
                    CHECK(is_perfect_sequence(reduced, split, /*require_maximal=*/false));
                    // Claimed separators: old S_q for the first split part,
                    // C_q \ {i,j} for the second.
                    CHECK(split.separators[ctx.host_index] == seq.separators[ctx.host_index]);
                    CHECK(split.separators[ctx.host_index + 1] == ctx.sep);
                    for (const VertexSet c : maximal_cliques(reduced)) {
                        bool housed = false;
                        for (const VertexSet s : sets)
                            if ((c & ~s) == 0) {
                                housed = true;
                                break;
                            }
                        CHECK(housed);
                    }
                }
        });
    }
}

TEST_CASE("enumeration counts for small p") {
    auto count = [](int p) {
        long n = 0;
        enumerate_decomposable(p, [&](const Graph&) { ++n; });
        return n;
    };
    CHECK(count(2) == 2);
    CHECK(count(3) == 8);
    CHECK(count(4) == 61);
    CHECK(count(5) == 822);
}

TEST_CASE("enumeration refuses out-of-range p") {
    CHECK_THROWS_AS(enumerate_decomposable(8, [](const Graph&) {}), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_decomposable(9, [](const Graph&) {}, true), std::invalid_argument);
}
