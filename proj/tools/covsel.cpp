// covsel: Bayesian covariance selection over decomposable graphs.
//
// Subcommands: fit, simulate, count, verify-counts, ess, threshold.
// Exit codes: 0 ok, 2 configuration error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covsel/counts.hpp"
#include "covsel/harness.hpp"
#include "covsel/io.hpp"
#include "covsel/priors.hpp"
#include "covsel/sampler.hpp"

namespace {

using namespace covsel;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

GraphPrior parse_prior(const std::string& spec, int p, const std::string& counts_path) {
    if (spec == "uniform") return GraphPrior::uniform();

    std::shared_ptr<const CountTable> counts;
    if (!counts_path.empty()) {
        auto t = CountTable::from_json(read_json_file(counts_path));
        if (t.p != p)
            throw CLI::ValidationError("--counts", "table is for p = " + std::to_string(t.p));
        counts = std::make_shared<const CountTable>(std::move(t));
    } else if (p >= 2 && p <= 8) {
        counts = std::make_shared<const CountTable>(exact_table(p));
    } else {
        throw CLI::ValidationError(
            "--prior", "size/beta priors need --counts for p > 8 (run `covsel count`)");
    }

    if (spec == "size") return GraphPrior::size_based(counts);
    if (spec.rfind("beta:", 0) == 0) {
        const auto body = spec.substr(5);
        const auto comma = body.find(',');
        if (comma == std::string::npos)
            throw CLI::ValidationError("--prior", "expected beta:a,b");
        return GraphPrior::beta_binomial(std::stod(body.substr(0, comma)),
                                         std::stod(body.substr(comma + 1)), counts);
    }
    throw CLI::ValidationError("--prior", "expected uniform | size | beta:a,b");
}

int cmd_fit(const std::string& data_path, const std::string& prior_spec,
            const std::string& phi_form, int burnin, int iters, int thin,
            double sigma2_tau, double sigma2_rho, double delta, std::uint64_t seed,
            bool tau_jacobian, bool store_draws, const std::string& counts_path,
            const std::string& out_path, const std::string& csv_prefix) {
    DataSummary data = DataSummary::from_rows(read_csv_matrix(data_path));

    McmcConfig cfg;
    cfg.burnin = burnin;
    cfg.iterations = iters;
    cfg.thin = thin;
    cfg.sigma2_tau = sigma2_tau;
    cfg.sigma2_rho = sigma2_rho;
    cfg.delta = delta;
    cfg.hyper.form = phi_form_from_name(phi_form);
    cfg.prior = parse_prior(prior_spec, data.p(), counts_path);
    cfg.seed = seed;
    cfg.tau_jacobian = tau_jacobian;
    cfg.store_draws = store_draws;

    auto out = run_chain(data, cfg);
    write_json_file(out_path, out.to_json());
    if (!csv_prefix.empty() && out.kept > 0) {
        std::ofstream mo(csv_prefix + "_mean_omega.csv");
        write_csv_matrix(mo, out.mean_omega);
        std::ofstream ji(csv_prefix + "_edge_inclusion.csv");
        write_csv_matrix(ji, out.edge_freq);
    }
    std::cout << "fit: p=" << out.p << " n=" << out.n << " kept=" << out.kept
              << " edge_accept=" << out.edge_moves.rate()
              << " tau_accept=" << out.tau_moves.rate()
              << " ess_size=" << out.ess_size.value << "\n"
              << "wrote " << out_path << "\n";
    return kExitOk;
}

int cmd_count(int p, double alpha, int burnin, int samples, int thin, std::uint64_t seed,
              bool refine, const std::string& out_path) {
    CounterConfig cfg;
    cfg.alpha_tilde = alpha;
    cfg.burnin = burnin;
    cfg.samples = samples;
    cfg.thin = thin;
    cfg.seed = seed;
    cfg.refine = refine;
    auto table = estimate_counts(p, cfg);
    write_json_file(out_path, table.to_json());
    int estimated = 0;
    for (const auto& e : table.entries) estimated += e.prov == Provenance::estimated;
    std::cout << "count: p=" << p << " sizes=" << table.entries.size()
              << " estimated=" << estimated << "\nwrote " << out_path << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& table_path, int burnin, int samples, int thin,
               std::uint64_t seed, const std::string& out_path) {
    auto table = CountTable::from_json(read_json_file(table_path));
    CounterConfig cfg;
    cfg.burnin = burnin;
    cfg.samples = samples;
    cfg.thin = thin;
    cfg.seed = seed;
    auto rep = verify_counts(table, cfg);
    std::cout << "verify-counts: p=" << rep.p << " kept=" << rep.kept
              << " target=" << rep.target << " band=" << rep.band << "\n";
    for (size_t k = 0; k < rep.freq.size(); ++k)
        std::cout << "  size " << k << ": freq=" << rep.freq[k]
                  << (rep.outside[k] ? "  OUTSIDE BAND" : "") << "\n";
    std::cout << "violations: " << rep.violations() << "\n";
    if (!out_path.empty()) {
        write_json_file(out_path, rep.to_json());
        std::cout << "wrote " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_simulate(const std::vector<std::string>& structures, int p,
                 const std::vector<int>& ns, int reps,
                 const std::vector<std::string>& phi_forms, int burnin, int iters, int thin,
                 std::uint64_t seed, int threads, const std::string& counts_path,
                 const std::string& out_prefix) {
    ExperimentSpec spec;
    spec.kinds.clear();
    for (const auto& s : structures) spec.kinds.push_back(structure_from_name(s));
    spec.p = p;
    spec.sample_sizes = ns;
    spec.replications = reps;
    spec.phi_forms.clear();
    for (const auto& f : phi_forms) spec.phi_forms.push_back(phi_form_from_name(f));
    spec.burnin = burnin;
    spec.iterations = iters;
    spec.thin = thin;
    spec.seed = seed;
    spec.threads = threads;
    if (!counts_path.empty()) {
        auto t = CountTable::from_json(read_json_file(counts_path));
        if (t.p != p)
            throw CLI::ValidationError("--counts", "table is for p = " + std::to_string(t.p));
        spec.counts = std::make_shared<const CountTable>(std::move(t));
    } else if (p <= 8) {
        spec.counts = std::make_shared<const CountTable>(exact_table(p));
    } else {
        throw CLI::ValidationError("--counts", "needed for p > 8 (run `covsel count`)");
    }

    auto report = compare_priors(spec);
    const std::string rows_path = out_prefix + "_rows.csv";
    const std::string summary_path = out_prefix + "_summary.json";
    std::ofstream rows(rows_path);
    if (!rows) throw std::invalid_argument("cannot open " + rows_path);
    rows << report.to_csv();
    write_json_file(summary_path, report.summary_json());

    long failed = 0;
    for (const auto& r : report.rows) failed += r.failed;
    std::cout << "simulate: " << report.rows.size() << " replication rows (" << failed
              << " failed)\n";
    for (const auto& c : report.cells)
        std::cout << "  " << c.structure << " n=" << c.n << " " << c.phi_form
                  << ": median pct increase (uniform vs size) = " << c.median << "  [q1 "
                  << c.q1 << ", q3 " << c.q3 << "]\n";
    std::cout << "wrote " << rows_path << " and " << summary_path << "\n";
    return kExitOk;
}

int cmd_ess(const std::string& data_path) {
    Matrix series = read_csv_matrix(data_path);
    if (series.cols() != 1)
        throw CLI::ValidationError("--data", "expected a single numeric column");
    std::vector<double> x(series.data(), series.data() + series.rows());
    auto r = ess(x);
    std::cout << "n=" << x.size() << " ess=" << r.value
              << (r.clamped ? " (clamped)" : "") << (r.constant ? " (constant series)" : "")
              << "\n";
    return kExitOk;
}

int cmd_threshold(const std::string& chain_path, double t, const std::string& out_path) {
    auto chain = read_json_file(chain_path);
    if (!chain.contains("edge_inclusion"))
        throw CLI::ValidationError("--chain", "file has no edge_inclusion matrix");
    Matrix j = matrix_from_json(chain.at("edge_inclusion"));
    auto res = threshold_graph(j, t);
    nlohmann::json out = res.graph.to_json();
    out["threshold"] = t;
    out["decomposable"] = res.decomposable;
    std::cout << "threshold " << t << ": " << res.graph.size() << " edges, "
              << (res.decomposable ? "decomposable" : "NOT decomposable") << "\n";
    for (int i = 0; i < res.graph.p(); ++i)
        for (int jv = i + 1; jv < res.graph.p(); ++jv)
            if (res.graph.has_edge(i, jv))
                std::cout << "  (" << i + 1 << ", " << jv + 1 << ")\n";
    if (!out_path.empty()) {
        write_json_file(out_path, out);
        std::cout << "wrote " << out_path << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian covariance selection for decomposable Gaussian graphical models"};
    app.require_subcommand(1);

    // fit
    std::string fit_data, fit_prior = "size", fit_phi = "equi", fit_counts,
                fit_out = "chain.json";
    int fit_burnin = 2000, fit_iters = 20000, fit_thin = 10;
    double fit_s2tau = 0.1, fit_s2rho = 0.05, fit_delta = 5.0;
    std::uint64_t fit_seed = 0;
    bool fit_jacobian = false, fit_draws = false;
    std::string fit_csv;
    auto* fit = app.add_subcommand("fit", "sample the graph posterior for a CSV dataset");
    fit->add_option("--data", fit_data, "CSV with n rows, p columns")->required();
    fit->add_option("--prior", fit_prior, "uniform | size | beta:a,b");
    fit->add_option("--phi-form", fit_phi, "tauI | equi | tauS");
    fit->add_option("--counts", fit_counts, "counts JSON (size/beta priors, p > 8)");
    fit->add_option("--burnin", fit_burnin, "burn-in sweeps");
    fit->add_option("--iters", fit_iters, "sampling sweeps");
    fit->add_option("--thin", fit_thin, "record every thin-th sweep");
    fit->add_option("--sigma2-tau", fit_s2tau, "random-walk variance for log tau");
    fit->add_option("--sigma2-rho", fit_s2rho, "random-walk variance for rho");
    fit->add_option("--delta", fit_delta, "degrees of freedom");
    fit->add_option("--seed", fit_seed, "RNG seed");
    fit->add_flag("--tau-jacobian", fit_jacobian, "add the log-scale Jacobian to tau moves");
    fit->add_flag("--store-draws", fit_draws, "record mu draws per kept state");
    fit->add_option("--out", fit_out, "output JSON path");
    fit->add_option("--csv-prefix", fit_csv,
                    "also write <prefix>_mean_omega.csv and <prefix>_edge_inclusion.csv");

    // count
    int cnt_p = 0, cnt_burnin = 2000, cnt_samples = 10000, cnt_thin = 20;
    double cnt_alpha = 0.75;
    std::uint64_t cnt_seed = 1;
    bool cnt_refine = false;
    std::string cnt_out = "counts.json";
    auto* cnt = app.add_subcommand("count", "estimate decomposable-graph counts by size");
    cnt->add_option("--p", cnt_p, "vertex count")->required()->check(CLI::Range(4, 64));
    cnt->add_option("--alpha", cnt_alpha, "initial ratio guess in (0.5, 1)");
    cnt->add_option("--burnin", cnt_burnin, "burn-in sweeps per size");
    cnt->add_option("--samples", cnt_samples, "recorded iterates per size");
    cnt->add_option("--thin", cnt_thin, "sweeps between recorded iterates");
    cnt->add_option("--seed", cnt_seed, "RNG seed");
    cnt->add_flag("--refine", cnt_refine, "one re-estimation pass after the ascending run");
    cnt->add_option("--out", cnt_out, "output JSON path");

    // verify-counts
    std::string ver_table, ver_out;
    int ver_burnin = 5000, ver_samples = 2000, ver_thin = 100;
    std::uint64_t ver_seed = 1;
    auto* ver = app.add_subcommand("verify-counts", "uniformity check of a count table");
    ver->add_option("--table", ver_table, "counts JSON")->required();
    ver->add_option("--burnin", ver_burnin, "burn-in sweeps");
    ver->add_option("--samples", ver_samples, "recorded iterates");
    ver->add_option("--thin", ver_thin, "spacing of retained iterates");
    ver->add_option("--seed", ver_seed, "RNG seed");
    ver->add_option("--out", ver_out, "optional report JSON path");

    // simulate
    std::vector<std::string> sim_structs = {"identity", "tridiagonal", "full", "four_cycle",
                                            "p_cycle"};
    std::vector<std::string> sim_phis = {"tauI"};
    std::vector<int> sim_ns = {40, 100};
    int sim_p = 8, sim_reps = 5, sim_burnin = 500, sim_iters = 3000, sim_thin = 5,
        sim_threads = 0;
    std::uint64_t sim_seed = 1;
    bool sim_full = false;
    std::string sim_counts, sim_out = "simulate";
    auto* sim = app.add_subcommand("simulate",
                                   "uniform-vs-size prior comparison on simulated data");
    sim->add_option("--structure", sim_structs,
                    "identity tridiagonal full four_cycle p_cycle");
    sim->add_option("--p", sim_p, "dimension");
    sim->add_option("--n", sim_ns, "sample sizes");
    sim->add_option("--reps", sim_reps, "replications per cell");
    sim->add_option("--phi-form", sim_phis, "tauI equi tauS");
    sim->add_option("--burnin", sim_burnin, "burn-in sweeps");
    sim->add_option("--iters", sim_iters, "sampling sweeps");
    sim->add_option("--thin", sim_thin, "thinning");
    sim->add_option("--seed", sim_seed, "base seed");
    sim->add_option("--threads", sim_threads, "worker threads (0: COVSEL_THREADS or cores)");
    sim->add_option("--counts", sim_counts, "counts JSON for the size prior (p > 8)");
    sim->add_option("--out", sim_out, "output prefix");
    sim->add_flag("--full-scale", sim_full,
                  "p=17, 2000 burn-in / 20000 sampling sweeps, 20 replications "
                  "(long run; needs --counts or data/counts_p17.json)");

    // ess
    std::string ess_data;
    auto* ess_cmd = app.add_subcommand("ess", "effective sample size of a numeric series");
    ess_cmd->add_option("--data", ess_data, "single-column CSV")->required();

    // threshold
    std::string thr_chain, thr_out;
    double thr_t = 0.7;
    auto* thr = app.add_subcommand("threshold", "edge-probability threshold graph");
    thr->add_option("--chain", thr_chain, "chain JSON from `fit`")->required();
    thr->add_option("--t", thr_t, "inclusion threshold in (0,1)");
    thr->add_option("--out", thr_out, "optional graph JSON path");

    try {
        app.parse(argc, argv);
        if (fit->parsed())
            return cmd_fit(fit_data, fit_prior, fit_phi, fit_burnin, fit_iters, fit_thin,
                           fit_s2tau, fit_s2rho, fit_delta, fit_seed, fit_jacobian,
                           fit_draws, fit_counts, fit_out, fit_csv);
        if (cnt->parsed())
            return cmd_count(cnt_p, cnt_alpha, cnt_burnin, cnt_samples, cnt_thin, cnt_seed,
                             cnt_refine, cnt_out);
        if (ver->parsed())
            return cmd_verify(ver_table, ver_burnin, ver_samples, ver_thin, ver_seed,
                              ver_out);
        if (sim->parsed()) {
            if (sim_full) {
                if (sim->count("--p") == 0) sim_p = 17;
                if (sim->count("--burnin") == 0) sim_burnin = 2000;
                if (sim->count("--iters") == 0) sim_iters = 20000;
                if (sim->count("--reps") == 0) sim_reps = 20;
                if (sim_counts.empty()) sim_counts = "data/counts_p17.json";
            }
            return cmd_simulate(sim_structs, sim_p, sim_ns, sim_reps, sim_phis, sim_burnin,
                                sim_iters, sim_thin, sim_seed, sim_threads, sim_counts,
                                sim_out);
        }
        if (ess_cmd->parsed()) return cmd_ess(ess_data);
        if (thr->parsed()) return cmd_threshold(thr_chain, thr_t, thr_out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const covsel::numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}
