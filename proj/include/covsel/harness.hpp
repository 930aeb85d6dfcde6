#pragma once

// Experiment harness: the five test concentration structures, the L1
// covariance loss, the prior-comparison study (plot-ready long-form rows
// plus quartile summaries), and edge-probability threshold graphs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "covsel/graph.hpp"
#include "covsel/io.hpp"
#include "covsel/priors.hpp"
#include "covsel/rng.hpp"
#include "covsel/sampler.hpp"

namespace covsel {

enum class StructureKind { identity, tridiagonal, full, four_cycle, p_cycle };

inline std::string structure_name(StructureKind k) {
    switch (k) {
        case StructureKind::identity: return "identity";
        case StructureKind::tridiagonal: return "tridiagonal";
        case StructureKind::full: return "full";
        case StructureKind::four_cycle: return "four_cycle";
        case StructureKind::p_cycle: return "p_cycle";
    }
    throw std::logic_error("structure_name");
}

inline StructureKind structure_from_name(const std::string& s) {
    if (s == "identity") return StructureKind::identity;
    if (s == "tridiagonal") return StructureKind::tridiagonal;
    if (s == "full") return StructureKind::full;
    if (s == "four_cycle") return StructureKind::four_cycle;
    if (s == "p_cycle") return StructureKind::p_cycle;
    throw std::invalid_argument("unknown structure: " + s);
}

struct TrueModel {
    Matrix sigma;
    Matrix omega;
    Graph graph;
    double coupling = 0.0;  // off-diagonal value actually used
    bool reduced = false;   // coupling was shrunk to restore definiteness

    TrueModel() : graph(1) {}
};

// Builds (Sigma_T, Omega_T, graph) for the named pattern. Off-diagonal
// couplings start at 0.45 and are halved (with a flag) if definiteness
// ever fails; the full case is an equicorrelated Sigma with correlation
// 0.5, which keeps every marginal correlation above 0.3.
inline TrueModel make_structure(StructureKind kind, int p) {
    if (p < 3) throw std::invalid_argument("make_structure: need p >= 3");
    if (kind == StructureKind::four_cycle && p < 4)
        throw std::invalid_argument("make_structure: four_cycle needs p >= 4");

    TrueModel m;
    m.graph = Graph(p);
    if (kind == StructureKind::full) {
        double rho = 0.5;
        Matrix sigma;
        while (true) {
            sigma = Matrix::Constant(p, p, rho);
            sigma.diagonal().setOnes();
            if (is_positive_definite(sigma) && rho > 0.3) break;
            rho += 0.05;
            if (rho >= 1.0) throw numeric_error("make_structure: no valid correlation");
        }
        m.sigma = sigma;
        m.omega = inverse_pd(sigma);
        m.omega = ((m.omega + m.omega.transpose()) / 2.0).eval();
        m.graph = Graph::complete(p);
        m.coupling = rho;
        return m;
    }

    std::vector<std::pair<int, int>> edges;
    switch (kind) {
        case StructureKind::identity:
            break;
        case StructureKind::tridiagonal:
            for (int i = 0; i + 1 < p; ++i) edges.push_back({i, i + 1});
            break;
        case StructureKind::four_cycle:
            edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}};
            break;
        case StructureKind::p_cycle:
            for (int i = 0; i + 1 < p; ++i) edges.push_back({i, i + 1});
            edges.push_back({0, p - 1});
            break;
        case StructureKind::full:
            break;  // handled above
    }

    double coupling = edges.empty() ? 0.0 : 0.45;
    Matrix omega;
    while (true) {
        omega = Matrix::Identity(p, p);
        for (auto [i, j] : edges) {
            omega(i, j) = coupling;
            omega(j, i) = coupling;
        }
        if (is_positive_definite(omega)) break;
        coupling /= 2.0;
        m.reduced = true;
        if (coupling < 1e-6) throw numeric_error("make_structure: cannot reach definiteness");
    }
    m.omega = omega;
    m.sigma = inverse_pd(omega);
    m.sigma = ((m.sigma + m.sigma.transpose()) / 2.0).eval();
    for (auto [i, j] : edges) m.graph.add_edge(i, j);
    m.coupling = coupling;
    return m;
}

// trace(S Sigma_T^{-1}) - log det(S Sigma_T^{-1}) - p; nonnegative, zero
// only at S = Sigma_T.
inline double l1_loss(const Matrix& sigma_hat, const Matrix& sigma_true) {
    if (sigma_hat.rows() != sigma_true.rows())
        throw std::invalid_argument("l1_loss: dimension mismatch");
    const auto llt_true = llt_or_throw(sigma_true, "l1_loss: sigma_true not PD");
    const auto llt_hat = llt_or_throw(sigma_hat, "l1_loss: sigma_hat not PD");
    const auto n = sigma_hat.rows();
    const double tr = llt_true.solve(sigma_hat).trace();
    const double logdet = log_det_cholesky(llt_hat) - log_det_cholesky(llt_true);
    return tr - logdet - static_cast<double>(n);
}

// Bayes estimator of Sigma under the L1 loss: the inverse of the mixture
// estimate of E(Omega | y).
inline Matrix bayes_estimator(const Matrix& mean_omega) {
    Matrix inv = inverse_pd(mean_omega, "bayes_estimator: mean Omega not PD");
    return ((inv + inv.transpose()) / 2.0).eval();
}

inline Matrix bayes_estimator(const ChainOutput& out) {
    if (out.kept <= 0) throw std::invalid_argument("bayes_estimator: chain kept no samples");
    return bayes_estimator(out.mean_omega);
}

struct ExperimentSpec {
    std::vector<StructureKind> kinds = {StructureKind::identity, StructureKind::tridiagonal,
                                        StructureKind::full, StructureKind::four_cycle,
                                        StructureKind::p_cycle};
    int p = 8;
    std::vector<int> sample_sizes = {40, 100};
    int replications = 5;
    std::vector<PhiForm> phi_forms = {PhiForm::tau_identity};
    int burnin = 500;
    int iterations = 3000;
    int thin = 5;
    double delta = 5.0;
    double sigma2_tau = 0.1;
    double sigma2_rho = 0.05;
    std::uint64_t seed = 1;
    std::shared_ptr<const CountTable> counts;   // for the size-based arm
    std::optional<GraphPrior> arm_first;        // default: uniform
    std::optional<GraphPrior> arm_second;       // default: size_based(counts)
    int threads = 0;                            // 0: COVSEL_THREADS or hardware

    void validate() const {
        if (replications < 1) throw std::invalid_argument("ExperimentSpec: replications >= 1");
        if (kinds.empty() || sample_sizes.empty() || phi_forms.empty())
            throw std::invalid_argument("ExperimentSpec: empty design");
    }
};

struct CompareRow {
    std::string structure;
    int n = 0;
    std::string phi_form;
    int rep = 0;
    std::uint64_t data_seed = 0;
    double l1_first = 0.0;   // uniform-prior arm by default
    double l1_second = 0.0;  // size-prior arm by default
    double pct_increase = 0.0;  // 100 (L1_first - L1_second) / L1_second
    bool failed = false;
    std::string error;
};

struct CellSummary {
    std::string structure;
    int n = 0;
    std::string phi_form;
    int completed = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    std::vector<CellSummary> cells;

    std::string to_csv() const {
        std::ostringstream os;
        os << "structure,n,phi_form,rep,data_seed,l1_uniform,l1_size,pct_increase,failed,error\n";
        for (const auto& r : rows) {
            os << r.structure << ',' << r.n << ',' << r.phi_form << ',' << r.rep << ','
               << r.data_seed << ',' << r.l1_first << ',' << r.l1_second << ','
               << r.pct_increase << ',' << (r.failed ? 1 : 0) << ',' << r.error << '\n';
        }
        return os.str();
    }

    nlohmann::json summary_json() const {
        nlohmann::json cells_json = nlohmann::json::array();
        for (const auto& c : cells)
            cells_json.push_back({{"structure", c.structure},
                                  {"n", c.n},
                                  {"phi_form", c.phi_form},
                                  {"completed", c.completed},
                                  {"median_pct_increase", c.median},
                                  {"q1", c.q1},
                                  {"q3", c.q3}});
        return nlohmann::json{{"cells", cells_json}};
    }
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const auto hi = static_cast<size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline int resolve_threads(int requested, size_t tasks) {
    int n = requested;
    if (n <= 0) {
        if (const char* env = std::getenv("COVSEL_THREADS")) n = std::atoi(env);
    }
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
    return static_cast<int>(std::min<size_t>(static_cast<size_t>(n), tasks));
}

}  // namespace detail

// Per replication: one simulated dataset, one chain per prior arm on that
// same data, L1 losses of the two Bayes estimators, and the percentage
// increase of the first arm over the second. Replications run on a worker
// pool; seeds are derived per (cell, rep), so results do not depend on the
// thread count.
inline CompareReport compare_priors(const ExperimentSpec& spec) {
    spec.validate();
    GraphPrior first = spec.arm_first ? *spec.arm_first : GraphPrior::uniform();
    GraphPrior second;
    if (spec.arm_second) {
        second = *spec.arm_second;
    } else {
        if (!spec.counts || spec.counts->p != spec.p)
            throw std::invalid_argument("compare_priors: size-prior arm needs counts for p");
        second = GraphPrior::size_based(spec.counts);
    }

    struct Task {
        StructureKind kind;
        int n;
        PhiForm form;
        int rep;
        size_t cell;
    };
    std::vector<Task> tasks;
    size_t cell = 0;
    for (auto kind : spec.kinds)
        for (int n : spec.sample_sizes)
            for (auto form : spec.phi_forms) {
                for (int rep = 0; rep < spec.replications; ++rep)
                    tasks.push_back({kind, n, form, rep, cell});
                ++cell;
            }

    CompareReport report;
    report.rows.resize(tasks.size());

    auto run_task = [&](const Task& t, CompareRow& row) {
        row.structure = structure_name(t.kind);
        row.n = t.n;
        row.phi_form = phi_form_name(t.form);
        row.rep = t.rep;
        row.data_seed = mix_seed(spec.seed, t.cell, static_cast<std::uint64_t>(t.rep));
        try {
            TrueModel truth = make_structure(t.kind, spec.p);
            Rng data_rng(row.data_seed);
            DataSummary data =
                DataSummary::from_rows(sample_gaussian_rows(data_rng, t.n, truth.sigma));

            // Common random numbers across the two arms: identical priors
            // then produce identical chains, and the paired difference has
            // lower variance.
            const std::uint64_t chain_seed = mix_seed(row.data_seed, 0x9d2c5680);
            auto run_arm = [&](const GraphPrior& prior) {
                McmcConfig cfg;
                cfg.burnin = spec.burnin;
                cfg.iterations = spec.iterations;
                cfg.thin = spec.thin;
                cfg.delta = spec.delta;
                cfg.sigma2_tau = spec.sigma2_tau;
                cfg.sigma2_rho = spec.sigma2_rho;
                cfg.hyper.form = t.form;
                cfg.prior = prior;
                cfg.seed = chain_seed;
                auto out = run_chain(data, cfg);
                return l1_loss(bayes_estimator(out), truth.sigma);
            };
            row.l1_first = run_arm(first);
            row.l1_second = run_arm(second);
            row.pct_increase = 100.0 * (row.l1_first - row.l1_second) / row.l1_second;
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
    };

    const int n_threads = detail::resolve_threads(spec.threads, tasks.size());
    if (n_threads <= 1) {
        for (size_t t = 0; t < tasks.size(); ++t) run_task(tasks[t], report.rows[t]);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(n_threads));
        for (int w = 0; w < n_threads; ++w)
            workers.emplace_back([&] {
                for (size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1))
                    run_task(tasks[t], report.rows[t]);
            });
        for (auto& w : workers) w.join();
    }

    // Quartile summaries per cell, in design order.
    cell = 0;
    for (auto kind : spec.kinds)
        for (int n : spec.sample_sizes)
            for (auto form : spec.phi_forms) {
                std::vector<double> pct;
                for (const auto& row : report.rows)
                    if (!row.failed && row.structure == structure_name(kind) && row.n == n &&
                        row.phi_form == phi_form_name(form))
                        pct.push_back(row.pct_increase);
                std::sort(pct.begin(), pct.end());
                CellSummary s;
                s.structure = structure_name(kind);
                s.n = n;
                s.phi_form = phi_form_name(form);
                s.completed = static_cast<int>(pct.size());
                s.median = detail::quantile_sorted(pct, 0.5);
                s.q1 = detail::quantile_sorted(pct, 0.25);
                s.q3 = detail::quantile_sorted(pct, 0.75);
                report.cells.push_back(s);
                ++cell;
            }
    return report;
}

struct ThresholdResult {
    Graph graph;
    bool decomposable = false;

    ThresholdResult() : graph(1) {}
};

// Edge (i, j) is included iff J(i, j) >= t. The result need not be
// decomposable; the flag reports which.
inline ThresholdResult threshold_graph(const Matrix& edge_probs, double t) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("threshold_graph: t in (0,1)");
    if (edge_probs.rows() != edge_probs.cols())
        throw std::invalid_argument("threshold_graph: square matrix required");
    ThresholdResult res;
    res.graph = Graph(static_cast<int>(edge_probs.rows()));
    for (int i = 0; i < res.graph.p(); ++i)
        for (int j = i + 1; j < res.graph.p(); ++j)
            if (edge_probs(i, j) >= t) res.graph.add_edge(i, j);
    res.decomposable = is_decomposable(res.graph);
    return res;
}

}  // namespace covsel
