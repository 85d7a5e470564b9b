#pragma once

#include "affect/common.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace affect {

enum class CccMode {
    strict,  // eps = 0; a degenerate denominator is an error
    loss     // eps = 1e-8 guard so training never divides by zero
};

constexpr double kCccLossEps = 1e-8;

/// Concordance correlation coefficient
///   2 s_xy / (s_x^2 + s_y^2 + (mu_x - mu_y)^2)
/// with population (1/n) variance normalization.
template <typename S>
S ccc(std::span<const S> x, std::span<const S> y, CccMode mode = CccMode::strict) {
    if (x.size() != y.size()) throw AffectError("ccc: length mismatch");
    const size_t n = x.size();
    if (n < 2) throw AffectError("ccc: need at least 2 samples");
    S mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(static_cast<double>(x[i])) || !std::isfinite(static_cast<double>(y[i])))
            throw AffectError("ccc: non-finite input");
        mx += x[i];
        my += y[i];
    }
    mx /= S(n);
    my /= S(n);
    S sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const S dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    sxx /= S(n);
    syy /= S(n);
    sxy /= S(n);
    const S md = mx - my;
    S den = sxx + syy + md * md;
    if (mode == CccMode::strict) {
        if (den == S(0)) throw AffectError("ccc: degenerate denominator (both series constant and equal)");
    } else {
        den += S(kCccLossEps);
    }
    return S(2) * sxy / den;
}

/// 1 - (ccc_arousal + ccc_valence) / 2 over n x 2 (valence, arousal) columns,
/// with the loss-mode denominator guard.
template <typename S>
S ccc_loss(const MatX<S>& pred_va, const MatX<S>& true_va) {
    if (pred_va.rows() != true_va.rows() || pred_va.cols() != 2 || true_va.cols() != 2)
        throw AffectError("ccc_loss: inputs must be equal-length n x 2");
    if (pred_va.rows() < 2) throw AffectError("ccc_loss: need at least 2 rows");
    std::vector<S> pv(pred_va.rows()), tv(pred_va.rows()), pa(pred_va.rows()), ta(pred_va.rows());
    for (int i = 0; i < pred_va.rows(); ++i) {
        pv[i] = pred_va(i, 0);
        tv[i] = true_va(i, 0);
        pa[i] = pred_va(i, 1);
        ta[i] = true_va(i, 1);
    }
    const S rv = ccc<S>(pv, tv, CccMode::loss);
    const S ra = ccc<S>(pa, ta, CccMode::loss);
    return S(1) - (ra + rv) / S(2);
}

template <typename S>
S mse(std::span<const S> x, std::span<const S> y) {
    if (x.size() != y.size()) throw AffectError("mse: length mismatch");
    if (x.empty()) throw AffectError("mse: empty input");
    S acc = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const S d = x[i] - y[i];
        acc += d * d;
    }
    return acc / S(x.size());
}

struct ClipMetrics {
    std::string clip_id;
    double ccc_valence = 0, ccc_arousal = 0;
    double mse_valence = 0, mse_arousal = 0;
    int n_frames = 0;
};

/// Headline CCC/MSE over the concatenated test frames per dimension, plus a
/// per-clip breakdown (per-clip CCC uses the eps guard since short clips can
/// be constant).
struct MetricReport {
    double ccc_valence = 0, ccc_arousal = 0;
    double mse_valence = 0, mse_arousal = 0;
    double baseline_ccc_valence = 0, baseline_ccc_arousal = 0;
    int n_frames = 0;
    std::vector<ClipMetrics> per_clip;
};

MetricReport compute_report(const std::vector<std::string>& clip_ids,
                            const std::vector<MatX<double>>& pred_va,
                            const std::vector<MatX<double>>& true_va,
                            double baseline_valence, double baseline_arousal);

void save_report(const MetricReport& r, const std::filesystem::path& path);
MetricReport load_report(const std::filesystem::path& path);
std::string format_report_table(const MetricReport& r);

}  // namespace affect
