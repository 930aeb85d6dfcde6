#pragma once

// Graph priors (uniform over decomposable graphs, size-based, and the
// beta-binomial size family) plus the hyperparameter priors and the three
// scale-matrix forms. All graph priors condition on decomposability; only
// ratios ever enter the samplers, so kind-constants are dropped where they
// cannot be evaluated (uniform) and kept where they are free (size forms).

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "covsel/counts.hpp"
#include "covsel/graph.hpp"
#include "covsel/hiw.hpp"
#include "covsel/linalg.hpp"

namespace covsel {

enum class PriorKind { uniform, size_based, beta_binomial };

struct GraphPrior {
    PriorKind kind = PriorKind::uniform;
    double a = 1.0;  // beta-binomial shape parameters
    double b = 1.0;
    std::shared_ptr<const CountTable> counts;  // required except for uniform

    static GraphPrior uniform() { return {}; }

    static GraphPrior size_based(std::shared_ptr<const CountTable> counts) {
        GraphPrior p;
        p.kind = PriorKind::size_based;
        p.counts = std::move(counts);
        return p;
    }

    static GraphPrior beta_binomial(double a, double b,
                                    std::shared_ptr<const CountTable> counts) {
        if (a <= 0.0 || b <= 0.0)
            throw std::invalid_argument("beta_binomial prior: a, b must be positive");
        GraphPrior p;
        p.kind = PriorKind::beta_binomial;
        p.a = a;
        p.b = b;
        p.counts = std::move(counts);
        return p;
    }

    std::string name() const {
        switch (kind) {
            case PriorKind::uniform: return "uniform";
            case PriorKind::size_based: return "size";
            case PriorKind::beta_binomial:
                return "beta:" + std::to_string(a) + "," + std::to_string(b);
        }
        throw std::logic_error("GraphPrior::name");
    }
};

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log p(g) up to a constant within the prior kind.
inline double log_prior(const Graph& g, const GraphPrior& prior) {
    const int r = g.max_size();
    const int k = g.size();
    switch (prior.kind) {
        case PriorKind::uniform:
            return 0.0;
        case PriorKind::size_based: {
            if (!prior.counts || prior.counts->p != g.p())
                throw std::invalid_argument("size prior: missing counts for p");
            return -std::log(r + 1.0) - prior.counts->log_count(k);
        }
        case PriorKind::beta_binomial: {
            if (!prior.counts || prior.counts->p != g.p())
                throw std::invalid_argument("beta prior: missing counts for p");
            return log_choose(r, k) + log_beta(prior.a + k, r - k + prior.b) -
                   log_beta(prior.a, prior.b) - prior.counts->log_count(k);
        }
    }
    throw std::logic_error("log_prior");
}

inline double log_prior_ratio(const Graph& g_new, const Graph& g_old,
                              const GraphPrior& prior) {
    if (prior.kind == PriorKind::uniform) return 0.0;
    return log_prior(g_new, prior) - log_prior(g_old, prior);
}

// Probability of each graph size, k = 0..r. The uniform kind needs counts
// (it weights sizes by A_{p,k}); the size-based kind is flat by definition.
inline std::vector<double> size_distribution(int p, const GraphPrior& prior) {
    const int r = p * (p - 1) / 2;
    std::vector<double> out(static_cast<size_t>(r + 1));
    switch (prior.kind) {
        case PriorKind::uniform: {
            if (!prior.counts || prior.counts->p != p)
                throw std::invalid_argument("size_distribution: uniform kind needs counts");
            double log_total = -std::numeric_limits<double>::infinity();
            for (int k = 0; k <= r; ++k) {
                const double lc = prior.counts->log_count(k);
                log_total = log_total > lc
                                ? log_total + std::log1p(std::exp(lc - log_total))
                                : lc + std::log1p(std::exp(log_total - lc));
            }
            for (int k = 0; k <= r; ++k)
                out[static_cast<size_t>(k)] = std::exp(prior.counts->log_count(k) - log_total);
            break;
        }
        case PriorKind::size_based:
            for (int k = 0; k <= r; ++k) out[static_cast<size_t>(k)] = 1.0 / (r + 1);
            break;
        case PriorKind::beta_binomial:
            for (int k = 0; k <= r; ++k)
                out[static_cast<size_t>(k)] =
                    std::exp(log_choose(r, k) + log_beta(prior.a + k, r - k + prior.b) -
                             log_beta(prior.a, prior.b));
            break;
    }
    return out;
}

// The three scale-matrix forms: tau * I, the equicorrelated
// tau((1-rho)I + rho J), and the scatter-proportional tau * S_y/(n-1).
enum class PhiForm { tau_identity, equicorrelated, tau_scatter };

inline std::string phi_form_name(PhiForm f) {
    switch (f) {
        case PhiForm::tau_identity: return "tauI";
        case PhiForm::equicorrelated: return "equi";
        case PhiForm::tau_scatter: return "tauS";
    }
    throw std::logic_error("phi_form_name");
}

inline PhiForm phi_form_from_name(const std::string& s) {
    if (s == "tauI") return PhiForm::tau_identity;
    if (s == "equi") return PhiForm::equicorrelated;
    if (s == "tauS") return PhiForm::tau_scatter;
    throw std::invalid_argument("unknown phi form: " + s);
}

struct HyperPriorSpec {
    PhiForm form = PhiForm::tau_identity;
    double tau_bound = 1e10;  // tau ~ Uniform[0, tau_bound]

    double rho_lower(int p) const { return -1.0 / (p - 1); }

    bool tau_in_support(double tau) const { return tau > 0.0 && tau <= tau_bound; }

    bool rho_in_support(double rho, int p) const {
        return rho > rho_lower(p) && rho < 1.0;
    }
};

inline Matrix build_phi(PhiForm form, double tau, double rho, int p,
                        const DataSummary* data = nullptr) {
    switch (form) {
        case PhiForm::tau_identity:
            return tau * Matrix::Identity(p, p);
        case PhiForm::equicorrelated: {
            Matrix phi = Matrix::Constant(p, p, tau * rho);
            phi.diagonal().setConstant(tau);
            return phi;
        }
        case PhiForm::tau_scatter: {
            if (!data) throw std::invalid_argument("build_phi: scatter form needs data");
            return tau * data->s_y / (data->n - 1.0);
        }
    }
    throw std::logic_error("build_phi");
}

}  // namespace covsel
