#pragma once

// Counting decomposable graphs by size: analytic boundary values, the
// embedded exact table for p <= 8, exhaustive enumeration, and the
// sequential MCMC estimator with its uniformity check.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covsel/chordal.hpp"
#include "covsel/graph.hpp"
#include "covsel/linalg.hpp"
#include "covsel/rng.hpp"

namespace covsel {

enum class Provenance { analytic, table, enumerated, estimated };

inline std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::analytic: return "analytic";
        case Provenance::table: return "table";
        case Provenance::enumerated: return "enumerated";
        case Provenance::estimated: return "estimated";
    }
    throw std::logic_error("provenance_name");
}

inline Provenance provenance_from_name(const std::string& s) {
    if (s == "analytic") return Provenance::analytic;
    if (s == "table") return Provenance::table;
    if (s == "enumerated") return Provenance::enumerated;
    if (s == "estimated") return Provenance::estimated;
    throw std::invalid_argument("unknown provenance: " + s);
}

struct CountEntry {
    double log_count = std::numeric_limits<double>::quiet_NaN();
    Provenance prov = Provenance::analytic;
    double se = 0.0;        // binomial lower-bound SE of log A-hat (estimated only)
    double se_batch = 0.0;  // batch-means SE of log A-hat (estimated only)

    bool valid() const { return std::isfinite(log_count); }
};

// Per-size log-counts log A_{p,k}, k = 0..r, with provenance per entry.
struct CountTable {
    int p = 0;
    std::vector<CountEntry> entries;

    CountTable() = default;
    explicit CountTable(int p_) : p(p_), entries(static_cast<size_t>(r() + 1)) {}

    int r() const { return p * (p - 1) / 2; }

    double log_count(int k) const {
        if (k < 0 || k > r() || !entries[static_cast<size_t>(k)].valid())
            throw std::out_of_range("CountTable: no count for size " + std::to_string(k));
        return entries[static_cast<size_t>(k)].log_count;
    }

    bool complete() const {
        for (const auto& e : entries)
            if (!e.valid()) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json items = nlohmann::json::array();
        for (int k = 0; k <= r(); ++k) {
            const auto& e = entries[static_cast<size_t>(k)];
            if (!e.valid()) continue;
            nlohmann::json item{{"k", k},
                                {"log_count", e.log_count},
                                {"provenance", provenance_name(e.prov)}};
            item["se"] = e.se;
            if (e.prov == Provenance::estimated) item["se_batch"] = e.se_batch;
            items.push_back(item);
        }
        return nlohmann::json{{"p", p}, {"entries", items}};
    }

    static CountTable from_json(const nlohmann::json& j) {
        CountTable t(j.at("p").get<int>());
        for (const auto& item : j.at("entries")) {
            const int k = item.at("k").get<int>();
            if (k < 0 || k > t.r()) throw std::invalid_argument("CountTable: bad size index");
            auto& e = t.entries[static_cast<size_t>(k)];
            e.log_count = item.at("log_count").get<double>();
            e.prov = provenance_from_name(item.at("provenance").get<std::string>());
            e.se = item.value("se", 0.0);
            e.se_batch = item.value("se_batch", 0.0);
        }
        return t;
    }
};

// Exact binomial coefficient; arguments small enough that the running
// product stays within 64 bits for every use here (k <= 5 or n <= 28).
inline double choose_exact(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(n - k + i) / i;
    return static_cast<double>(c);
}

inline bool analytic_k_supported(int p, int k) {
    const int r = p * (p - 1) / 2;
    return k >= 0 && k <= r && (k <= 5 || k >= r - 2);
}

// Number of NONdecomposable graphs with k edges, for the analytically
// known sizes: zero for k <= 3 and k >= r-1; one chordless 4-cycle for
// k = 4 (and, by complement of the missing pair, k = r-2); a chordless
// 5-cycle or a 4-cycle plus a stray edge for k = 5.
inline double analytic_F(int p, int k) {
    const int r = p * (p - 1) / 2;
    if (k < 0 || k > r) throw std::invalid_argument("analytic_F: size out of range");
    if (k <= 3 || k >= r - 1) return 0.0;
    if (k == r - 2) return 3.0 * choose_exact(p, 4);
    if (k == 4) return 3.0 * choose_exact(p, 4);
    if (k == 5) return 12.0 * choose_exact(p, 5) + 3.0 * choose_exact(p, 4) * (r - 6);
    throw std::invalid_argument("analytic_F: size " + std::to_string(k) +
                                " has no analytic value");
}

inline double analytic_A(int p, int k) {
    const int r = p * (p - 1) / 2;
    return choose_exact(r, k) - analytic_F(p, k);
}

namespace detail {

inline const std::vector<double>& exact_column(int p) {
    // Verified against exhaustive enumeration (the one published value that
    // disagrees, size 6 at p = 7, is stored as enumerated: 40467).
    static const std::array<std::vector<double>, 7> cols = {{
        {1, 1},
        {1, 3, 3, 1},
        {1, 6, 15, 20, 12, 6, 1},
        {1, 10, 45, 120, 195, 180, 140, 90, 30, 10, 1},
        {1, 15, 105, 455, 1320, 2526, 3085, 3255, 3000, 2235, 1206, 615, 260, 60, 15, 1},
        {1,     21,    210,   1330,  5880,  18522, 40467, 60795,
         79170, 92785, 94521, 81417, 58485, 40110, 24255, 12222,
         4872,  1890,  595,   105,   21,    1},
        {1,       28,      378,     3276,    20265,   92988,   315574,  770064,
         1357818, 2078300, 2892176, 3621576, 4016439, 3916724, 3432660, 2855748,
         2185484, 1488984, 902944,  493220,  258468,  118504,  46046,   14868,
         4690,    1176,    168,     28,      1},
    }};
    if (p < 2 || p > 8) throw std::invalid_argument("exact_table: need 2 <= p <= 8");
    return cols[static_cast<size_t>(p - 2)];
}

}  // namespace detail

inline CountTable exact_table(int p) {
    const auto& col = detail::exact_column(p);
    CountTable t(p);
    for (int k = 0; k <= t.r(); ++k) {
        auto& e = t.entries[static_cast<size_t>(k)];
        e.log_count = std::log(col[static_cast<size_t>(k)]);
        e.prov = Provenance::table;
    }
    return t;
}

inline double exact_total(int p) {
    double tot = 0.0;
    for (double v : detail::exact_column(p)) tot += v;
    return tot;
}

inline CountTable brute_force_counts(int p, bool allow_slow = false) {
    if (p < 2) throw std::invalid_argument("brute_force_counts: need p >= 2");
    CountTable t(p);
    std::vector<double> by_size(static_cast<size_t>(t.r() + 1), 0.0);
    enumerate_decomposable(
        p, [&](const Graph& g) { by_size[static_cast<size_t>(g.size())] += 1.0; },
        allow_slow);
    for (int k = 0; k <= t.r(); ++k) {
        auto& e = t.entries[static_cast<size_t>(k)];
        e.log_count = std::log(by_size[static_cast<size_t>(k)]);
        e.prov = Provenance::enumerated;
    }
    return t;
}

struct CounterConfig {
    double alpha_tilde = 0.75;  // initial log-concavity ratio guess
    int burnin = 2000;          // raw sweeps of r edge updates
    int samples = 10000;        // recorded iterates, one every `thin` sweeps
    int thin = 20;              // sweeps between recorded iterates
    std::uint64_t seed = 1;
    bool refine = false;        // one re-estimation pass after the ascending run

    long raw_sweeps() const { return static_cast<long>(samples) * thin; }

    void validate() const {
        if (!(alpha_tilde > 0.5 && alpha_tilde < 1.0))
            throw std::invalid_argument("CounterConfig: alpha_tilde must be in (0.5, 1)");
        if (burnin < 0 || samples <= 0 || thin < 1)
            throw std::invalid_argument("CounterConfig: bad chain lengths");
    }
};

namespace detail {

// One sweep of r single-edge Metropolis updates against the size-weighted
// target: each graph of size s carries weight exp(log_w[s]). The pair is
// drawn uniformly over all r positions; a pair whose flip would leave the
// decomposable class (or exceed `max_size`, if >= 0) is a null update.
// Null updates keep the proposal symmetric over pairs -- resampling until
// a legal pair is found would tilt the invariant distribution by the
// number of legal flips available from each graph.
inline void counting_sweep(Graph& g, const std::vector<double>& log_w, int max_size,
                           Rng& rng, long* nulls = nullptr) {
    const int p = g.p();
    const int r = g.max_size();
    for (int t = 0; t < r; ++t) {
        const int a = runif_int(rng, 0, p - 1);
        int b = runif_int(rng, 0, p - 2);
        if (b >= a) ++b;
        const int i = std::min(a, b), j = std::max(a, b);

        bool legal;
        if (g.has_edge(i, j)) {
            legal = deletion_is_legal(g, i, j);
        } else if (max_size >= 0 && g.size() + 1 > max_size) {
            legal = false;
        } else {
            g.add_edge(i, j);
            legal = is_decomposable(g);
            g.remove_edge(i, j);
        }
        if (!legal) {
            if (nulls) ++*nulls;
            continue;
        }
        const int s_cur = g.size();
        const int s_prop = g.has_edge(i, j) ? s_cur - 1 : s_cur + 1;
        const double delta =
            log_w[static_cast<size_t>(s_prop)] - log_w[static_cast<size_t>(s_cur)];
        if (delta >= 0.0 || std::log(runif(rng)) < delta) g.flip_edge(i, j);
    }
}

struct SizeTally {
    std::vector<long> all;     // per-size counts over every post-burnin sweep
    std::vector<int> thinned;  // states of the `samples` recorded iterates

    explicit SizeTally(int r) : all(static_cast<size_t>(r + 1), 0) {}
};

inline SizeTally run_counting_chain(Graph& g, const std::vector<double>& log_w,
                                    int max_size, const CounterConfig& cfg, Rng& rng) {
    const int r = g.max_size();
    for (int b = 0; b < cfg.burnin; ++b) counting_sweep(g, log_w, max_size, rng);
    SizeTally tally(r);
    tally.thinned.reserve(static_cast<size_t>(cfg.samples));
    const long total = cfg.raw_sweeps();
    for (long s = 1; s <= total; ++s) {
        counting_sweep(g, log_w, max_size, rng);
        ++tally.all[static_cast<size_t>(g.size())];
        if (s % cfg.thin == 0) tally.thinned.push_back(g.size());
    }
    return tally;
}

// A-hat_{p,k} = 6 phi p-hat(size = k) / p-hat(size <= 5), with a binomial
// lower-bound SE and a batch-means SE, both on the log scale.
struct RatioEstimate {
    double log_value;
    double se_binomial;
    double se_batch;
};

inline RatioEstimate ratio_estimate(const SizeTally& tally, int k, double log_phi) {
    long n_k = 0, n_low = 0, total = 0;
    for (size_t s = 0; s < tally.all.size(); ++s) {
        total += tally.all[s];
        if (static_cast<int>(s) == k) n_k = tally.all[s];
        if (s <= 5) n_low += tally.all[s];
    }
    if (n_low == 0)
        throw numeric_error("estimate_counts: no mass observed at sizes <= 5 (size " +
                            std::to_string(k) + " chain did not converge)");
    if (n_k == 0)
        throw numeric_error("estimate_counts: no mass observed at size " + std::to_string(k));

    RatioEstimate est{};
    est.log_value = std::log(6.0) + log_phi + std::log(static_cast<double>(n_k)) -
                    std::log(static_cast<double>(n_low));

    const double j_eff = static_cast<double>(tally.thinned.size());
    const double p_k = static_cast<double>(n_k) / static_cast<double>(total);
    est.se_binomial = std::sqrt(std::max(p_k * (1.0 - p_k) / j_eff, 0.0)) / p_k;

    // Batch means of the log ratio over the thinned iterates.
    const size_t n_batches = 20;
    const size_t per_batch = tally.thinned.size() / n_batches;
    std::vector<double> log_ratios;
    if (per_batch >= 2) {
        for (size_t bi = 0; bi < n_batches; ++bi) {
            long ck = 0, clow = 0;
            for (size_t t = bi * per_batch; t < (bi + 1) * per_batch; ++t) {
                if (tally.thinned[t] == k) ++ck;
                if (tally.thinned[t] <= 5) ++clow;
            }
            if (ck > 0 && clow > 0)
                log_ratios.push_back(std::log(static_cast<double>(ck)) -
                                     std::log(static_cast<double>(clow)));
        }
    }
    if (log_ratios.size() >= 4) {
        double mean = 0.0;
        for (double v : log_ratios) mean += v;
        mean /= static_cast<double>(log_ratios.size());
        double var = 0.0;
        for (double v : log_ratios) var += (v - mean) * (v - mean);
        var /= static_cast<double>(log_ratios.size() - 1);
        est.se_batch = std::sqrt(var / static_cast<double>(log_ratios.size()));
    } else {
        est.se_batch = std::numeric_limits<double>::infinity();
    }
    return est;
}

}  // namespace detail

// Sequential estimation of A_{p,k} for k = 6..r-3 (ascending), each chain
// restricted to graphs of size <= k and weighted by the inverse counts
// known so far; sizes 0..5 are the exact anchors behind the constant 6.
inline CountTable estimate_counts(int p, const CounterConfig& cfg) {
    cfg.validate();
    if (p < 4) throw std::invalid_argument("estimate_counts: need p >= 4");
    CountTable table(p);
    const int r = table.r();
    for (int k = 0; k <= r; ++k) {
        if (!analytic_k_supported(p, k)) continue;
        auto& e = table.entries[static_cast<size_t>(k)];
        e.log_count = std::log(analytic_A(p, k));
        e.prov = Provenance::analytic;
    }
    if (r - 3 < 6) return table;  // analytic values already cover every size

    std::vector<double> log_w(static_cast<size_t>(r + 1), 0.0);
    for (int k = 0; k <= 5; ++k) log_w[static_cast<size_t>(k)] = -table.log_count(k);

    Rng rng(cfg.seed);
    Graph g(p);  // chains are warm-started from the previous k's final state
    for (int k = 6; k <= r - 3; ++k) {
        const double log_phi = std::log(cfg.alpha_tilde) + 2.0 * table.log_count(k - 1) -
                               table.log_count(k - 2);
        log_w[static_cast<size_t>(k)] = -log_phi;
        auto tally = detail::run_counting_chain(g, log_w, k, cfg, rng);
        const auto est = detail::ratio_estimate(tally, k, log_phi);
        auto& e = table.entries[static_cast<size_t>(k)];
        e.log_count = est.log_value;
        e.prov = Provenance::estimated;
        e.se = est.se_binomial;
        e.se_batch = est.se_batch;
        log_w[static_cast<size_t>(k)] = -est.log_value;
    }

    if (cfg.refine) {
        // One sweep over the final restricted space re-estimates every
        // interior size against the settled weights.
        auto tally = detail::run_counting_chain(g, log_w, r - 3, cfg, rng);
        for (int k = 6; k <= r - 3; ++k) {
            const double log_w_k = log_w[static_cast<size_t>(k)];
            try {
                const auto est = detail::ratio_estimate(tally, k, -log_w_k);
                auto& e = table.entries[static_cast<size_t>(k)];
                e.log_count = est.log_value;
                e.se = est.se_binomial;
                e.se_batch = est.se_batch;
            } catch (const numeric_error&) {
                // keep the ascending-pass estimate
            }
        }
        for (int k = 6; k <= r - 3; ++k)
            log_w[static_cast<size_t>(k)] = -table.log_count(k);
    }
    return table;
}

struct UniformityReport {
    int p = 0;
    long kept = 0;
    double target = 0.0;  // 1/(r+1)
    double band = 0.0;    // 3 sqrt(pi(1-pi)/J)
    std::vector<double> freq;
    std::vector<char> outside;

    int violations() const {
        int n = 0;
        for (char c : outside) n += c != 0;
        return n;
    }

    nlohmann::json to_json() const {
        nlohmann::json per_size = nlohmann::json::array();
        for (size_t k = 0; k < freq.size(); ++k)
            per_size.push_back({{"k", k},
                                {"freq", freq[k]},
                                {"outside_band", outside[k] != 0}});
        return nlohmann::json{{"p", p},        {"kept", kept},
                              {"target", target}, {"band", band},
                              {"violations", violations()}, {"sizes", per_size}};
    }
};

// Runs the unrestricted size-weighted chain with weights 1/A-hat over all
// sizes 0..r; if the table is accurate the size frequencies are uniform to
// within the binomial band.
inline UniformityReport verify_counts(const CountTable& table, const CounterConfig& cfg) {
    cfg.validate();
    if (!table.complete())
        throw std::invalid_argument("verify_counts: table is missing sizes");
    const int p = table.p;
    const int r = table.r();
    std::vector<double> log_w(static_cast<size_t>(r + 1));
    for (int k = 0; k <= r; ++k) log_w[static_cast<size_t>(k)] = -table.log_count(k);

    Rng rng(cfg.seed);
    Graph g(p);
    auto tally = detail::run_counting_chain(g, log_w, -1, cfg, rng);

    UniformityReport rep;
    rep.p = p;
    rep.kept = static_cast<long>(tally.thinned.size());
    rep.target = 1.0 / (r + 1);
    rep.band = 3.0 * std::sqrt(rep.target * (1.0 - rep.target) / static_cast<double>(rep.kept));
    rep.freq.assign(static_cast<size_t>(r + 1), 0.0);
    for (int s : tally.thinned) rep.freq[static_cast<size_t>(s)] += 1.0;
    for (double& f : rep.freq) f /= static_cast<double>(rep.kept);
    rep.outside.assign(static_cast<size_t>(r + 1), 0);
    for (int k = 0; k <= r; ++k)
        rep.outside[static_cast<size_t>(k)] =
            std::abs(rep.freq[static_cast<size_t>(k)] - rep.target) > rep.band ? 1 : 0;
    return rep;
}

}  // namespace covsel
