#pragma once

// Shared oracles for the sampler tests and the acceptance suite: exact
// graph posteriors by exhaustive enumeration, empirical frequencies, and
// total-variation distances. Everything here is test-only and independent
// of the sampler implementation paths it checks.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "covsel/chordal.hpp"
#include "covsel/hiw.hpp"
#include "covsel/priors.hpp"
#include "covsel/rng.hpp"
#include "covsel/sampler.hpp"

namespace covsel::testsupport {

inline Matrix gaussian_rows(Rng& rng, int n, const Matrix& sigma) {
    return sample_gaussian_rows(rng, n, sigma);
}

// Exact posterior over all decomposable graphs keyed by edge mask,
// computed from the marginal likelihood formula plus the prior.
inline std::map<std::uint64_t, double> exact_graph_posterior(int p, const DataSummary& data,
                                                             const HyperParams& hp,
                                                             const GraphPrior& prior) {
    std::map<std::uint64_t, double> log_post;
    enumerate_decomposable(p, [&](const Graph& g) {
        const auto seq = perfect_sequence(g);
        log_post[g.edge_mask()] =
            log_marginal_likelihood(seq, hp, data) + log_prior(g, prior);
    });
    double max_lp = -std::numeric_limits<double>::infinity();
    for (const auto& [mask, lp] : log_post) max_lp = std::max(max_lp, lp);
    double total = 0.0;
    for (auto& [mask, lp] : log_post) {
        lp = std::exp(lp - max_lp);
        total += lp;
    }
    for (auto& [mask, lp] : log_post) lp /= total;
    return log_post;
}

inline std::map<std::uint64_t, double> chain_graph_frequencies(
    int p, const std::vector<std::string>& samples) {
    std::map<std::uint64_t, double> freq;
    for (const auto& bits : samples) freq[Graph::from_bitstring(p, bits).edge_mask()] += 1.0;
    for (auto& [mask, f] : freq) f /= static_cast<double>(samples.size());
    return freq;
}

inline double tv_distance(const std::map<std::uint64_t, double>& a,
                          const std::map<std::uint64_t, double>& b) {
    double tv = 0.0;
    for (const auto& [mask, pa] : a) {
        auto it = b.find(mask);
        tv += std::abs(pa - (it == b.end() ? 0.0 : it->second));
    }
    for (const auto& [mask, pb] : b)
        if (!a.count(mask)) tv += pb;
    return tv / 2.0;
}

// Posterior edge-inclusion marginals from an exact graph posterior.
inline Matrix exact_edge_marginals(int p, const std::map<std::uint64_t, double>& post) {
    Matrix m = Matrix::Zero(p, p);
    for (const auto& [mask, prob] : post) {
        Graph g = Graph::from_edge_mask(p, mask);
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j)
                if (g.has_edge(i, j)) {
                    m(i, j) += prob;
                    m(j, i) += prob;
                }
    }
    m.diagonal().setOnes();
    return m;
}

// Exact mixture posterior mean of Omega: sum over graphs of
// p(g | y) E(Omega | y, g).
inline Matrix exact_mean_omega(int p, const DataSummary& data, const HyperParams& hp,
                               const std::map<std::uint64_t, double>& post) {
    Matrix m = Matrix::Zero(p, p);
    const PosteriorParams pp = posterior_params(hp, data);
    for (const auto& [mask, prob] : post) {
        Graph g = Graph::from_edge_mask(p, mask);
        m += prob * posterior_mean_omega(perfect_sequence(g), pp);
    }
    return m;
}

}  // namespace covsel::testsupport
