#pragma once

// Hyper-inverse-Wishart machinery for decomposable Gaussian models:
// normalizing constants, conjugate updates, marginal likelihoods, the
// single-edge-flip ratio of constants, posterior moments of the
// concentration matrix and posterior sampling of (Sigma, Omega, mu).
//
// Conventions. IW(m, nu, Psi) has density
//   |Psi/2|^{nu/2} / Gamma_m(nu/2) * |A|^{-(nu+m+1)/2} etr(-Psi A^{-1}/2),
// so E(A) = Psi/(nu - m - 1) and A^{-1} ~ Wishart(Psi^{-1}, nu). A clique C
// of a HIW(g, delta, Phi) variate has Sigma_CC ~ IW(|C|, delta+|C|-1,
// Phi_CC), hence E(Sigma_CC) = Phi_CC/(delta-2). Everything is kept in log
// space; ratios are differences.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "covsel/chordal.hpp"
#include "covsel/graph.hpp"
#include "covsel/linalg.hpp"
#include "covsel/rng.hpp"

namespace covsel {

struct DataSummary {
    int n = 0;
    Vector ybar;
    Matrix s_y;  // centered scatter matrix

    int p() const { return static_cast<int>(ybar.size()); }

    // Rows of `y` are observations.
    static DataSummary from_rows(const Matrix& y) {
        if (y.rows() < 2) throw std::invalid_argument("DataSummary: need n >= 2 rows");
        DataSummary d;
        d.n = static_cast<int>(y.rows());
        d.ybar = y.colwise().mean();
        Matrix centered = y.rowwise() - d.ybar.transpose();
        d.s_y = centered.transpose() * centered;
        d.s_y = ((d.s_y + d.s_y.transpose()) / 2.0).eval();
        return d;
    }
};

struct HyperParams {
    double delta = 5.0;
    Matrix phi;

    void validate() const {
        if (delta <= 0.0) throw std::invalid_argument("HyperParams: delta must be > 0");
        if (!is_positive_definite(phi))
            throw numeric_error("HyperParams: phi not positive definite");
    }
};

struct PosteriorParams {
    double delta_star = 0.0;
    Matrix phi_star;
};

inline PosteriorParams posterior_params(const HyperParams& hp, const DataSummary& data) {
    if (hp.phi.rows() != data.p())
        throw std::invalid_argument("posterior_params: dimension mismatch");
    return {hp.delta + data.n - 1, hp.phi + data.s_y};
}

// log Gamma_m(alpha) = (m(m-1)/4) log pi + sum_i log Gamma(alpha - (i-1)/2).
inline double log_multigamma(int m, double alpha) {
    if (m < 1) throw std::domain_error("log_multigamma: m must be >= 1");
    if (alpha <= (m - 1) / 2.0)
        throw std::domain_error("log_multigamma: alpha must exceed (m-1)/2");
    double out = m * (m - 1) / 4.0 * std::log(std::numbers::pi);
    for (int i = 1; i <= m; ++i) out += std::lgamma(alpha - (i - 1) / 2.0);
    return out;
}

namespace detail {

inline double log_h_term(const Matrix& phi, const std::vector<int>& idx, double delta) {
    const int m = static_cast<int>(idx.size());
    const double a = (delta + m - 1) / 2.0;
    const double logdet =
        log_det_pd(submatrix(phi, idx), "log_h: submatrix not positive definite");
    return a * (logdet - m * std::numbers::ln2) - log_multigamma(m, a);
}

}  // namespace detail

// Log normalizing constant of HIW(g, delta, phi): clique terms over
// separator terms, evaluated through Cholesky log-determinants of the
// phi submatrices. Invariant to the choice of perfect sequence.
inline double log_hiw_norm_const(const PerfectSequence& seq, double delta,
                                 const Matrix& phi) {
    double out = 0.0;
    for (size_t j = 0; j < seq.k(); ++j) {
        out += detail::log_h_term(phi, seq.clique_idx[j], delta);
        if (!seq.sep_idx[j].empty()) out -= detail::log_h_term(phi, seq.sep_idx[j], delta);
    }
    return out;
}

// log p(y | delta, Phi, g) with Sigma and mu integrated out:
// -((n-1)p/2) log(2 pi) + log h(g, delta, Phi) - log h(g, delta*, Phi*).
inline double log_marginal_likelihood(const PerfectSequence& seq, const HyperParams& hp,
                                      const DataSummary& data) {
    const PosteriorParams pp = posterior_params(hp, data);
    return -0.5 * (data.n - 1) * data.p() * std::log(2.0 * std::numbers::pi) +
           log_hiw_norm_const(seq, hp.delta, hp.phi) -
           log_hiw_norm_const(seq, pp.delta_star, pp.phi_star);
}

// log[h(g, delta, phi) / h(g', delta, phi)] where g' removes edge (i, j)
// and `sep` is the host clique minus {i, j}. The clique split reduces the
// ratio to 2x2 Schur complements of phi over `sep`, read off the Cholesky
// factor with i, j permuted to the lower-right corner.
inline double log_norm_ratio_delete(const std::vector<int>& sep, int i, int j,
                                    double delta, const Matrix& phi) {
    std::vector<int> idx = sep;
    idx.push_back(i);
    idx.push_back(j);
    const auto s = static_cast<Eigen::Index>(sep.size());
    const Matrix L = llt_or_throw(submatrix(phi, idx),
                                  "flip ratio: host-clique submatrix not positive definite")
                         .matrixL();
    const double l_aa = L(s, s);
    const double l_ba = L(s + 1, s);
    const double l_bb = L(s + 1, s + 1);

    const double log_det_dd = 2.0 * (std::log(l_aa) + std::log(l_bb));  // |phi_DD|S|
    const double log_ii = 2.0 * std::log(l_aa);                        // phi_ii|S
    const double log_jj = std::log(l_ba * l_ba + l_bb * l_bb);         // phi_jj|S

    const double a = (delta + static_cast<double>(s)) / 2.0;
    return (a + 0.5) * log_det_dd - a * (log_ii + log_jj) + std::lgamma(a) -
           std::lgamma(a + 0.5) - std::log(2.0 * std::sqrt(std::numbers::pi));
}

// Both halves of the flip ratio; `prior_half` and `post_half` are the
// deletion log-ratios of constants under (delta, Phi) and (delta*, Phi*).
struct FlipRatioParts {
    double prior_half = 0.0;
    double post_half = 0.0;
    double ratio() const { return prior_half - post_half; }
};

inline FlipRatioParts flip_ratio_parts(const std::vector<int>& sep, int i, int j,
                                       const HyperParams& hp, const PosteriorParams& pp) {
    return {log_norm_ratio_delete(sep, i, j, hp.delta, hp.phi),
            log_norm_ratio_delete(sep, i, j, pp.delta_star, pp.phi_star)};
}

// log[ h(g,d,Phi)/h(g',d,Phi) * h(g',d*,Phi*)/h(g,d*,Phi*) ] for g' = g
// minus the context edge. The marginal-likelihood ratio for the deletion
// is the negative of this.
inline double log_h_ratio_flip(const FlipContext& ctx, const HyperParams& hp,
                               const PosteriorParams& pp) {
    return flip_ratio_parts(set_to_indices(ctx.sep), ctx.i, ctx.j, hp, pp).ratio();
}

// E(Omega | y, delta, Phi, g): clique-wise Wishart means minus separator
// corrections. Entries off the clique blocks are never touched, so the
// zero pattern of non-edges is exact.
inline Matrix posterior_mean_omega(const PerfectSequence& seq, const PosteriorParams& pp) {
    const int p = seq.p;
    Matrix out = Matrix::Zero(p, p);
    auto accumulate = [&](const std::vector<int>& idx, double sign) {
        if (idx.empty()) return;
        const double w = pp.delta_star + static_cast<double>(idx.size()) - 1.0;
        Matrix inv = inverse_pd(submatrix(pp.phi_star, idx),
                                "posterior_mean_omega: singular submatrix");
        inv = ((inv + inv.transpose()) / 2.0).eval();
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = 0; b < idx.size(); ++b)
                out(idx[a], idx[b]) += sign * w *
                    inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    };
    for (size_t j = 0; j < seq.k(); ++j) {
        accumulate(seq.clique_idx[j], +1.0);
        accumulate(seq.sep_idx[j], -1.0);
    }
    return out;
}

// Lower-triangular Bartlett factor of Wishart(I, nu): squared diagonal
// entries are chi-square with decreasing degrees of freedom.
inline Matrix bartlett_lower(Rng& rng, int m, double nu) {
    Matrix a = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        a(i, i) = std::sqrt(rchisq(rng, nu - i));
        for (int j = 0; j < i; ++j) a(i, j) = rnorm(rng);
    }
    return a;
}

// Draw A ~ IW(m, nu, psi) by inverting a Wishart(psi^{-1}, nu) draw in
// factored form: A = (L A_b^{-T})(L A_b^{-T})' with psi = LL'.
inline Matrix riw(Rng& rng, double nu, const Matrix& psi) {
    const int m = static_cast<int>(psi.rows());
    if (nu <= m - 1) throw std::invalid_argument("riw: degrees of freedom too small");
    const Matrix L = llt_or_throw(psi, "riw: scale not positive definite").matrixL();
    const Matrix ab = bartlett_lower(rng, m, nu);
    const Matrix b =
        L * ab.triangularView<Eigen::Lower>().solve(Matrix::Identity(m, m)).transpose();
    return b * b.transpose();
}

// One draw Sigma ~ HIW(g, delta*, Phi*) together with Omega = Sigma^{-1}
// constructed to have exact zeros on non-edges. Cliques are sampled
// sequentially: the first block from its inverse-Wishart marginal, each
// later block from the conditional law given its separator block (the
// Schur remainder and regression coefficients are independent of the
// separator value), then Omega is completed clique-by-clique.
inline std::pair<Matrix, Matrix> sample_sigma_omega(const PerfectSequence& seq,
                                                    const PosteriorParams& pp, Rng& rng) {
    const int p = seq.p;
    const Matrix& psi = pp.phi_star;
    Matrix sig = Matrix::Zero(p, p);

    for (size_t c = 0; c < seq.k(); ++c) {
        const auto& cidx = seq.clique_idx[c];
        const auto& sidx = seq.sep_idx[c];
        const double nu = pp.delta_star + static_cast<double>(cidx.size()) - 1.0;

        if (sidx.empty()) {
            const Matrix block = riw(rng, nu, submatrix(psi, cidx));
            for (size_t a = 0; a < cidx.size(); ++a)
                for (size_t b = 0; b < cidx.size(); ++b)
                    sig(cidx[a], cidx[b]) =
                        block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            continue;
        }

        std::vector<int> ridx;
        for (int v : cidx)
            if (std::find(sidx.begin(), sidx.end(), v) == sidx.end()) ridx.push_back(v);
        const auto q = static_cast<Eigen::Index>(ridx.size());
        const auto s = static_cast<Eigen::Index>(sidx.size());

        const Matrix psi_ss = submatrix(psi, sidx);
        const Matrix psi_sr = submatrix(psi, sidx, ridx);
        const Matrix psi_rr = submatrix(psi, ridx);
        const auto llt_ss = llt_or_throw(psi_ss, "sample_sigma: separator block not PD");
        const Matrix ss_inv_sr = llt_ss.solve(psi_sr);
        const Matrix psi_rr_s = psi_rr - psi_sr.transpose() * ss_inv_sr;

        const Matrix u = riw(rng, nu, ((psi_rr_s + psi_rr_s.transpose()) / 2.0).eval());
        Matrix z(q, s);
        for (Eigen::Index a = 0; a < q; ++a)
            for (Eigen::Index b = 0; b < s; ++b) z(a, b) = rnorm(rng);
        const Matrix l_u = llt_or_throw(u, "sample_sigma: conditional block not PD").matrixL();
        const Matrix l_ss = llt_ss.matrixL();
        // Gamma ~ MN(Psi_RS Psi_SS^{-1}, U, Psi_SS^{-1})
        const Matrix gamma =
            ss_inv_sr.transpose() +
            l_ss.transpose()
                .triangularView<Eigen::Upper>()
                .solve((l_u * z).transpose())
                .transpose();

        Matrix v_real(s, s);
        for (Eigen::Index a = 0; a < s; ++a)
            for (Eigen::Index b = 0; b < s; ++b) v_real(a, b) = sig(sidx[a], sidx[b]);

        const Matrix sig_rs = gamma * v_real;
        const Matrix sig_rr = u + sig_rs * gamma.transpose();
        for (Eigen::Index a = 0; a < q; ++a) {
            for (Eigen::Index b = 0; b < s; ++b) {
                sig(ridx[a], sidx[b]) = sig_rs(a, b);
                sig(sidx[b], ridx[a]) = sig_rs(a, b);
            }
            for (Eigen::Index b = 0; b < q; ++b) sig(ridx[a], ridx[b]) = sig_rr(a, b);
        }
    }

    // Complete Omega from the clique/separator blocks (Lauritzen, eq. 5.23).
    Matrix omega = Matrix::Zero(p, p);
    for (size_t c = 0; c < seq.k(); ++c) {
        const auto& idx = seq.clique_idx[c];
        const Matrix inv = inverse_pd(submatrix(sig, idx), "sample_sigma: clique block not PD");
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = 0; b < idx.size(); ++b)
                omega(idx[a], idx[b]) +=
                    inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        const auto& sidx = seq.sep_idx[c];
        if (sidx.empty()) continue;
        const Matrix sinv =
            inverse_pd(submatrix(sig, sidx), "sample_sigma: separator block not PD");
        for (size_t a = 0; a < sidx.size(); ++a)
            for (size_t b = 0; b < sidx.size(); ++b)
                omega(sidx[a], sidx[b]) -=
                    sinv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    const Matrix sigma_full = inverse_pd(omega, "sample_sigma: completed Omega not PD");
    return {sigma_full, omega};
}

inline Matrix sample_sigma(const PerfectSequence& seq, const PosteriorParams& pp, Rng& rng) {
    return sample_sigma_omega(seq, pp, rng).first;
}

inline Matrix sample_omega(const PerfectSequence& seq, const PosteriorParams& pp, Rng& rng) {
    return sample_sigma_omega(seq, pp, rng).second;
}

// One draw from N(ybar, sigma/n).
inline Vector sample_mu(const Vector& ybar, const Matrix& sigma, int n, Rng& rng) {
    const Matrix L = llt_or_throw(sigma, "sample_mu: sigma not positive definite").matrixL();
    return ybar + L * rnorm_vector(rng, ybar.size()) / std::sqrt(static_cast<double>(n));
}

}  // namespace covsel
