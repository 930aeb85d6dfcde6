#pragma once

// Reduced-conditional MCMC for covariance selection: single-edge
// Metropolis moves on the graph with Sigma and mu integrated out, random
// walks for the scale hyperparameters, chain summaries and diagnostics.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "covsel/chordal.hpp"
#include "covsel/graph.hpp"
#include "covsel/hiw.hpp"
#include "covsel/io.hpp"
#include "covsel/priors.hpp"
#include "covsel/rng.hpp"

namespace covsel {

struct McmcConfig {
    int burnin = 2000;        // sweeps; one sweep = r edge proposals (+ hyper moves)
    int iterations = 20000;   // post-burnin sweeps
    int thin = 10;            // record every thin-th sweep
    double sigma2_tau = 0.1;  // random-walk variance for log tau
    double sigma2_rho = 0.05;
    double delta = 5.0;
    HyperPriorSpec hyper;
    GraphPrior prior;
    bool update_hyper = true;   // false: tau, rho frozen at their initial values
    bool tau_jacobian = false;  // add log(tau_p/tau_c) to the tau acceptance
    double tau_init = -1.0;     // < 0: defaults to p
    double rho_init = 0.0;
    std::uint64_t seed = 0;
    std::optional<Graph> init_graph;
    bool store_draws = false;       // keep (Sigma, Omega, mu) draws per kept state
    int recheck_every = 10000;      // cache-vs-fresh log h audit interval, sweeps

    void validate() const {
        if (burnin < 0 || iterations < 0 || thin < 1)
            throw std::invalid_argument("McmcConfig: bad chain lengths");
        if (sigma2_tau <= 0.0 || sigma2_rho <= 0.0)
            throw std::invalid_argument("McmcConfig: proposal variances must be positive");
        if (delta <= 0.0) throw std::invalid_argument("McmcConfig: delta must be positive");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"burnin", burnin},
                              {"iterations", iterations},
                              {"thin", thin},
                              {"sigma2_tau", sigma2_tau},
                              {"sigma2_rho", sigma2_rho},
                              {"delta", delta},
                              {"phi_form", phi_form_name(hyper.form)},
                              {"tau_bound", hyper.tau_bound},
                              {"prior", prior.name()},
                              {"update_hyper", update_hyper},
                              {"tau_jacobian", tau_jacobian},
                              {"tau_init", tau_init},
                              {"rho_init", rho_init},
                              {"seed", seed},
                              {"store_draws", store_draws}};
    }
};

struct MoveStats {
    long proposed = 0;
    long accepted = 0;

    double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

struct EssResult {
    double value = 0.0;
    bool clamped = false;   // raw estimate exceeded the sample count
    bool constant = false;  // zero-variance series
};

// N / (1 + 2 sum rho_k) with Geyer's initial-positive-sequence truncation
// applied to consecutive pair sums, the first pair being 1 + rho_1. A
// negative-correlation series can push the raw value above N; it is then
// clamped and flagged.
inline EssResult ess(const std::vector<double>& series) {
    const size_t n = series.size();
    if (n < 10) throw std::invalid_argument("ess: need at least 10 points");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    auto gamma = [&](size_t lag) {
        double acc = 0.0;
        for (size_t t = lag; t < n; ++t)
            acc += (series[t] - mean) * (series[t - lag] - mean);
        return acc / static_cast<double>(n);
    };
    const double g0 = gamma(0);
    if (!(g0 > 1e-300)) return {static_cast<double>(n), false, true};

    double pair_acc = 0.0;
    for (size_t m = 0;; ++m) {
        const size_t l1 = 2 * m, l2 = 2 * m + 1;
        if (l2 >= n - 1) break;
        const double pair = (l1 == 0 ? 1.0 : gamma(l1) / g0) + gamma(l2) / g0;
        if (pair <= 0.0) break;
        pair_acc += pair;
    }
    const double tau_int = 2.0 * pair_acc - 1.0;
    const double raw = static_cast<double>(n) / tau_int;
    if (tau_int <= 0.0 || raw > static_cast<double>(n))
        return {static_cast<double>(n), true, false};
    return {raw, false, false};
}

inline EssResult ess(const std::vector<int>& series) {
    return ess(std::vector<double>(series.begin(), series.end()));
}

struct ChainOutput {
    int p = 0;
    int n = 0;
    long kept = 0;
    std::vector<std::string> graph_samples;  // thinned edge bitstrings
    std::vector<int> size_trace;
    std::vector<double> tau_trace;
    std::vector<double> rho_trace;
    MoveStats edge_moves, tau_moves, rho_moves;
    long null_moves = 0;     // proposals on pairs whose flip is illegal
    long guard_rejects = 0;  // Cholesky-failure auto-rejections
    Matrix edge_freq;        // posterior edge-inclusion frequencies, diag 1
    Matrix mean_omega;       // mixture estimate of E(Omega | y)
    std::vector<Matrix> sigma_draws, omega_draws;
    std::vector<Vector> mu_draws;
    EssResult ess_size{};
    std::string init_bitstring;  // state echo for iteration-free runs
    int init_size = 0;
    nlohmann::json config_echo;

    nlohmann::json to_json() const {
        nlohmann::json j{{"p", p},
                         {"n", n},
                         {"kept", kept},
                         {"graph_samples", graph_samples},
                         {"size_trace", size_trace},
                         {"tau_trace", tau_trace},
                         {"rho_trace", rho_trace},
                         {"acceptance",
                          {{"edge", edge_moves.rate()},
                           {"edge_proposed", edge_moves.proposed},
                           {"tau", tau_moves.rate()},
                           {"tau_proposed", tau_moves.proposed},
                           {"rho", rho_moves.rate()},
                           {"rho_proposed", rho_moves.proposed},
                           {"null_moves", null_moves},
                           {"guard_rejects", guard_rejects}}},
                         {"init", {{"bitstring", init_bitstring}, {"size", init_size}}},
                         {"config", config_echo}};
        if (kept > 0) {
            j["edge_inclusion"] = matrix_to_json(edge_freq);
            j["mean_omega"] = matrix_to_json(mean_omega);
            j["ess_size"] = {{"value", ess_size.value},
                             {"clamped", ess_size.clamped},
                             {"constant", ess_size.constant}};
        }
        if (!mu_draws.empty()) {
            nlohmann::json mus = nlohmann::json::array();
            for (const auto& mu : mu_draws) mus.push_back(vector_to_json(mu));
            j["mu_draws"] = std::move(mus);
        }
        return j;
    }
};

// J-hat from recorded bitstrings: fraction of kept samples containing each
// edge; diagonal fixed at one.
inline Matrix edge_inclusion_probs(int p, const std::vector<std::string>& samples) {
    if (samples.empty()) throw std::invalid_argument("edge_inclusion_probs: no samples");
    Matrix freq = Matrix::Zero(p, p);
    for (const auto& bits : samples) {
        int idx = 0;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j, ++idx)
                if (bits[static_cast<size_t>(idx)] == '1') {
                    freq(i, j) += 1.0;
                    freq(j, i) += 1.0;
                }
    }
    freq /= static_cast<double>(samples.size());
    freq.diagonal().setOnes();
    return freq;
}

inline Matrix edge_inclusion_probs(const ChainOutput& out) {
    return edge_inclusion_probs(out.p, out.graph_samples);
}

struct McmcState {
    Graph g;
    PerfectSequence seq;
    double tau = 1.0;
    double rho = 0.0;
    HyperParams hp;
    PosteriorParams pp;
    double log_h_prior = 0.0;  // cached log h(g, delta, Phi)
    double log_h_post = 0.0;   // cached log h(g, delta*, Phi*)
    Rng rng;

    McmcState() : g(1) {}
};

namespace detail {

inline void refresh_phi(McmcState& st, const McmcConfig& cfg, const DataSummary& data) {
    st.hp.delta = cfg.delta;
    st.hp.phi = build_phi(cfg.hyper.form, st.tau, st.rho, data.p(), &data);
    st.pp = posterior_params(st.hp, data);
    st.log_h_prior = log_hiw_norm_const(st.seq, st.hp.delta, st.hp.phi);
    st.log_h_post = log_hiw_norm_const(st.seq, st.pp.delta_star, st.pp.phi_star);
}

}  // namespace detail

inline McmcState init_mcmc_state(const DataSummary& data, const McmcConfig& cfg) {
    cfg.validate();
    McmcState st;
    st.g = cfg.init_graph ? *cfg.init_graph : Graph(data.p());
    if (st.g.p() != data.p())
        throw std::invalid_argument("init graph dimension does not match data");
    if (!is_decomposable(st.g))
        throw std::invalid_argument("init graph must be decomposable");
    st.seq = perfect_sequence(st.g);
    st.tau = cfg.tau_init > 0.0 ? cfg.tau_init : static_cast<double>(data.p());
    st.rho = cfg.rho_init;
    if (!cfg.hyper.tau_in_support(st.tau))
        throw std::invalid_argument("initial tau outside its prior support");
    if (cfg.hyper.form == PhiForm::equicorrelated &&
        !cfg.hyper.rho_in_support(st.rho, data.p()))
        throw std::invalid_argument("initial rho outside its prior support");
    st.rng.seed(cfg.seed);
    detail::refresh_phi(st, cfg, data);
    return st;
}

enum class EdgeStep { null_move, rejected, accepted, guard_reject };

// One single-edge Metropolis update. The pair is uniform over all r
// positions; an illegal flip is a null move (the proposal stays symmetric
// over pairs). The marginal-likelihood ratio comes from the host-clique
// Schur-complement form; the cached log h values are updated from the two
// halves of that ratio, never by full re-evaluation.
inline EdgeStep step_edge(McmcState& st, const DataSummary& data, const GraphPrior& prior) {
    const int p = st.g.p();
    const int a = runif_int(st.rng, 0, p - 1);
    int b = runif_int(st.rng, 0, p - 2);
    if (b >= a) ++b;
    const int i = std::min(a, b), j = std::max(a, b);

    const bool deleting = st.g.has_edge(i, j);
    if (deleting) {
        if (!deletion_is_legal(st.g, i, j)) return EdgeStep::null_move;
    } else {
        st.g.add_edge(i, j);
        const bool ok = is_decomposable(st.g);
        st.g.remove_edge(i, j);
        if (!ok) return EdgeStep::null_move;
    }

    // Host-clique separator in the edge-present graph; the common
    // neighborhood is unchanged by the flip itself.
    const auto sep = set_to_indices(st.g.adjacency(i) & st.g.adjacency(j));

    FlipRatioParts parts;
    try {
        parts = flip_ratio_parts(sep, i, j, st.hp, st.pp);
    } catch (const numeric_error&) {
        return EdgeStep::guard_reject;
    }
    const double delta_ml = deleting ? -parts.ratio() : parts.ratio();

    Graph proposal = st.g;
    proposal.flip_edge(i, j);
    const double delta_prior = log_prior_ratio(proposal, st.g, prior);

    const double log_alpha = delta_ml + delta_prior;
    if (std::isnan(log_alpha)) return EdgeStep::guard_reject;
    if (log_alpha < 0.0 && std::log(runif(st.rng)) >= log_alpha) return EdgeStep::rejected;

    st.g = std::move(proposal);
    st.seq = perfect_sequence(st.g);
    const double sign = deleting ? -1.0 : 1.0;
    st.log_h_prior += sign * parts.prior_half;
    st.log_h_post += sign * parts.post_half;
    return EdgeStep::accepted;
}

// Random-walk update of log tau holding the graph fixed. The acceptance
// uses the marginal-likelihood ratio at the proposed scale matrix and the
// flat tau prior on [0, bound]; with `tau_jacobian` the log-scale walk is
// corrected to be a random walk in tau itself.
inline bool step_tau(McmcState& st, const DataSummary& data, const McmcConfig& cfg) {
    const double tau_prop = std::exp(std::log(st.tau) + rnorm(st.rng, 0.0, std::sqrt(cfg.sigma2_tau)));
    if (!cfg.hyper.tau_in_support(tau_prop)) return false;

    Matrix phi_prop;
    double lh_prior_prop, lh_post_prop;
    try {
        phi_prop = build_phi(cfg.hyper.form, tau_prop, st.rho, data.p(), &data);
        lh_prior_prop = log_hiw_norm_const(st.seq, st.hp.delta, phi_prop);
        lh_post_prop = log_hiw_norm_const(st.seq, st.pp.delta_star,
                                          (phi_prop + data.s_y).eval());
    } catch (const numeric_error&) {
        return false;
    }
    double log_alpha = (lh_prior_prop - lh_post_prop) - (st.log_h_prior - st.log_h_post);
    if (cfg.tau_jacobian) log_alpha += std::log(tau_prop / st.tau);
    if (log_alpha < 0.0 && std::log(runif(st.rng)) >= log_alpha) return false;

    st.tau = tau_prop;
    st.hp.phi = std::move(phi_prop);
    st.pp.phi_star = st.hp.phi + data.s_y;
    st.log_h_prior = lh_prior_prop;
    st.log_h_post = lh_post_prop;
    return true;
}

inline bool step_rho(McmcState& st, const DataSummary& data, const McmcConfig& cfg) {
    const double rho_prop = st.rho + rnorm(st.rng, 0.0, std::sqrt(cfg.sigma2_rho));
    if (!cfg.hyper.rho_in_support(rho_prop, data.p())) return false;

    Matrix phi_prop;
    double lh_prior_prop, lh_post_prop;
    try {
        phi_prop = build_phi(cfg.hyper.form, st.tau, rho_prop, data.p(), &data);
        lh_prior_prop = log_hiw_norm_const(st.seq, st.hp.delta, phi_prop);
        lh_post_prop = log_hiw_norm_const(st.seq, st.pp.delta_star,
                                          (phi_prop + data.s_y).eval());
    } catch (const numeric_error&) {
        return false;
    }
    const double log_alpha =
        (lh_prior_prop - lh_post_prop) - (st.log_h_prior - st.log_h_post);
    if (log_alpha < 0.0 && std::log(runif(st.rng)) >= log_alpha) return false;

    st.rho = rho_prop;
    st.hp.phi = std::move(phi_prop);
    st.pp.phi_star = st.hp.phi + data.s_y;
    st.log_h_prior = lh_prior_prop;
    st.log_h_post = lh_post_prop;
    return true;
}

namespace detail {

inline void audit_caches(const McmcState& st, int sweep) {
    const double fresh_prior = log_hiw_norm_const(st.seq, st.hp.delta, st.hp.phi);
    const double fresh_post = log_hiw_norm_const(st.seq, st.pp.delta_star, st.pp.phi_star);
    const double drift = std::max(std::abs(fresh_prior - st.log_h_prior),
                                  std::abs(fresh_post - st.log_h_post));
    if (drift > 1e-6)
        throw std::logic_error("log h cache drift " + std::to_string(drift) +
                               " at sweep " + std::to_string(sweep));
}

}  // namespace detail

// Full run: per sweep, r edge proposals, then one tau move and (for the
// equicorrelated form) one rho move. Thinned states feed the edge
// frequencies and the mixture estimate of E(Omega|y). Identical seeds give
// identical output.
inline ChainOutput run_chain(const DataSummary& data, const McmcConfig& cfg) {
    McmcState st = init_mcmc_state(data, cfg);
    const int p = data.p();
    const int r = st.g.max_size();

    ChainOutput out;
    out.p = p;
    out.n = data.n;
    out.config_echo = cfg.to_json();
    out.init_bitstring = st.g.to_bitstring();
    out.init_size = st.g.size();

    Matrix omega_acc = Matrix::Zero(p, p);
    const int total = cfg.iterations > 0 ? cfg.burnin + cfg.iterations : 0;
    for (int sweep = 0; sweep < total; ++sweep) {
        for (int t = 0; t < r; ++t) {
            switch (step_edge(st, data, cfg.prior)) {
                case EdgeStep::null_move: ++out.null_moves; break;
                case EdgeStep::guard_reject:
                    ++out.guard_rejects;
                    ++out.edge_moves.proposed;
                    break;
                case EdgeStep::rejected: ++out.edge_moves.proposed; break;
                case EdgeStep::accepted:
                    ++out.edge_moves.proposed;
                    ++out.edge_moves.accepted;
                    break;
            }
        }
        if (cfg.update_hyper) {
            ++out.tau_moves.proposed;
            if (step_tau(st, data, cfg)) ++out.tau_moves.accepted;
            if (cfg.hyper.form == PhiForm::equicorrelated) {
                ++out.rho_moves.proposed;
                if (step_rho(st, data, cfg)) ++out.rho_moves.accepted;
            }
        }
        if (cfg.recheck_every > 0 && (sweep + 1) % cfg.recheck_every == 0)
            detail::audit_caches(st, sweep + 1);

        const int post = sweep - cfg.burnin;
        if (post < 0 || post % cfg.thin != 0) continue;

        ++out.kept;
        out.graph_samples.push_back(st.g.to_bitstring());
        out.size_trace.push_back(st.g.size());
        out.tau_trace.push_back(st.tau);
        out.rho_trace.push_back(st.rho);
        omega_acc += posterior_mean_omega(st.seq, st.pp);
        if (cfg.store_draws) {
            auto [sigma, omega] = sample_sigma_omega(st.seq, st.pp, st.rng);
            out.mu_draws.push_back(sample_mu(data.ybar, sigma, data.n, st.rng));
            out.sigma_draws.push_back(std::move(sigma));
            out.omega_draws.push_back(std::move(omega));
        }
    }
    if (total > 0) detail::audit_caches(st, total);

    if (out.kept > 0) {
        out.edge_freq = edge_inclusion_probs(p, out.graph_samples);
        out.mean_omega = omega_acc / static_cast<double>(out.kept);
        if (out.size_trace.size() >= 10) out.ess_size = ess(out.size_trace);
    }
    return out;
}

}  // namespace covsel
