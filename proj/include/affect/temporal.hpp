#pragma once

#include "affect/common.hpp"

#include <array>
#include <limits>
#include <vector>

namespace affect {

/// One temporal attention filter: N Gaussians with a shared width, spread
/// symmetrically around a center at a fixed stride. The three scalars are
/// unconstrained; the constrained values are
///   g = (T-1) * logistic(g_hat), delta = exp(d_hat), sigma = exp(s_hat),
/// which keeps the center inside the clip and stride/width positive under
/// plain gradient descent.
template <typename S>
struct FilterParams {
    S g_hat = 0;
    S d_hat = 0;
    S s_hat = 0;
    int n_gauss = 4;
};

template <typename S>
struct FilterBankParams {
    std::vector<FilterParams<S>> filters;

    int n_gauss() const { return filters.empty() ? 0 : filters[0].n_gauss; }
    int rows() const { return static_cast<int>(filters.size()) * n_gauss(); }
};

/// Initial bank: centers at mid-clip, strides spanning a nominal 10-frame clip
/// uniformly, unit widths.
template <typename S>
FilterBankParams<S> default_filter_bank(int f_bank = 3, int n_gauss = 4,
                                        int t_nominal = 10) {
    if (f_bank < 1 || n_gauss < 1) throw AffectError("filter bank needs F>=1, N>=1");
    FilterBankParams<S> bank;
    FilterParams<S> p;
    p.n_gauss = n_gauss;
    p.g_hat = 0;
    p.d_hat = n_gauss > 1 ? std::log(S(t_nominal - 1) / S(n_gauss - 1)) : S(0);
    p.s_hat = std::log(S(1));
    bank.filters.assign(f_bank, p);
    return bank;
}

template <typename S>
struct SamplingMatrix {
    MatX<S> matrix;  // N x T, rows nonnegative, each summing to 1
    S g = 0, delta = 0, sigma = 0;
};

template <typename S>
S logistic(S x) {
    return x >= 0 ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

/// Gaussian centers mu_n = g + (n - (N+1)/2) * delta for n = 1..N.
template <typename S>
VecX<S> filter_centers(S g, S delta, int n_gauss) {
    VecX<S> mu(n_gauss);
    for (int n = 1; n <= n_gauss; ++n)
        mu(n - 1) = g + (S(n) - S(n_gauss + 1) / S(2)) * delta;
    return mu;
}

/// Row-normalized Gaussian taps W[n,t] = exp(-(t-mu_n)^2 / (2 sigma^2)) / Z_n.
/// Rows are evaluated with the max exponent subtracted, so the normalizer
/// stays >= 1 and rows sum to 1 for arbitrarily extreme parameters; the
/// 1e-12 floor on the sum is a last-resort guard.
template <typename S>
SamplingMatrix<S> build_sampling_matrix(const FilterParams<S>& p, int T) {
    if (T < 1) throw AffectError("build_sampling_matrix: T must be >= 1");
    SamplingMatrix<S> sm;
    sm.g = S(T - 1) * logistic(p.g_hat);
    sm.delta = std::exp(p.d_hat);
    sm.sigma = std::exp(p.s_hat);
    const VecX<S> mu = filter_centers(sm.g, sm.delta, p.n_gauss);
    sm.matrix.resize(p.n_gauss, T);
    const S inv2s2 = S(1) / (S(2) * sm.sigma * sm.sigma);
    for (int n = 0; n < p.n_gauss; ++n) {
        S emax = -std::numeric_limits<S>::infinity();
        for (int t = 0; t < T; ++t) {
            const S d = S(t) - mu(n);
            const S e = -d * d * inv2s2;
            sm.matrix(n, t) = e;
            emax = std::max(emax, e);
        }
        S sum = 0;
        for (int t = 0; t < T; ++t) {
            sm.matrix(n, t) = std::exp(sm.matrix(n, t) - emax);
            sum += sm.matrix(n, t);
        }
        sum = std::max(sum, S(1e-12));
        for (int t = 0; t < T; ++t) sm.matrix(n, t) /= sum;
    }
    return sm;
}

/// Attended features: each filter contributes its N x D_f product, stacked in
/// filter order into an (F_bank * N) x D_f matrix. Output shape depends only
/// on the bank, never on T.
template <typename S>
MatX<S> apply_filter_bank(const MatX<S>& features, const FilterBankParams<S>& bank) {
    if (features.rows() < 1) throw AffectError("apply_filter_bank: empty features");
    const int T = static_cast<int>(features.rows());
    MatX<S> out(bank.rows(), features.cols());
    int row = 0;
    for (const auto& p : bank.filters) {
        out.middleRows(row, p.n_gauss).noalias() =
            build_sampling_matrix(p, T).matrix * features;
        row += p.n_gauss;
    }
    return out;
}

/// Analytic gradients of sum(upstream .* W) with respect to the unconstrained
/// parameters. Per row the normalized taps form a softmax over t of the
/// exponent E[n,t] = -(t-mu_n)^2/(2 sigma^2), so
///   dW[n,t]/dtheta = W[n,t] * (dE[n,t]/dtheta - sum_t' W[n,t'] dE[n,t']/dtheta).
template <typename S>
std::array<S, 3> filter_gradients(const FilterParams<S>& p, int T, const MatX<S>& upstream) {
    const SamplingMatrix<S> sm = build_sampling_matrix(p, T);
    if (upstream.rows() != p.n_gauss || upstream.cols() != T)
        throw AffectError("filter_gradients: upstream must be N x T");
    const VecX<S> mu = filter_centers(sm.g, sm.delta, p.n_gauss);
    const S sig2 = sm.sigma * sm.sigma;

    S dg = 0, dsigma = 0;
    VecX<S> dmu(p.n_gauss);
    for (int n = 0; n < p.n_gauss; ++n) {
        S inner_mu = 0, inner_sg = 0;
        for (int t = 0; t < T; ++t) {
            const S d = S(t) - mu(n);
            inner_mu += sm.matrix(n, t) * d / sig2;
            inner_sg += sm.matrix(n, t) * d * d / (sig2 * sm.sigma);
        }
        S acc_mu = 0, acc_sg = 0;
        for (int t = 0; t < T; ++t) {
            const S d = S(t) - mu(n);
            acc_mu += upstream(n, t) * sm.matrix(n, t) * (d / sig2 - inner_mu);
            acc_sg += upstream(n, t) * sm.matrix(n, t) * (d * d / (sig2 * sm.sigma) - inner_sg);
        }
        dmu(n) = acc_mu;
        dsigma += acc_sg;
    }
    for (int n = 1; n <= p.n_gauss; ++n) dg += dmu(n - 1);

    const S sig = logistic(p.g_hat);
    std::array<S, 3> grad{};
    grad[0] = dg * S(T - 1) * sig * (S(1) - sig);      // d/d g_hat
    S dd = 0;
    for (int n = 1; n <= p.n_gauss; ++n)
        dd += dmu(n - 1) * (S(n) - S(p.n_gauss + 1) / S(2));
    grad[1] = dd * sm.delta;                           // d/d d_hat
    grad[2] = dsigma * sm.sigma;                       // d/d s_hat
    return grad;
}

}  // namespace affect
