#pragma once

#include "affect/common.hpp"
#include "affect/image.hpp"

#include <vector>

namespace affect {

template <typename S>
struct FlowField {
    ArrXX<S> u, v;  // px/frame
    S residual = 0;  // final mean update magnitude
    int iterations_run = 0;
    std::vector<S> residual_trace;  // one entry per iteration
};

struct FlowConfig {
    double alpha = 1.0;
    int max_iters = 200;
    double eps = 1e-4;
    double max_mag = 5.0;  // px/frame full-scale for the encoding
};

namespace detail {

template <typename S>
ArrXX<S> shift_clamped(const ArrXX<S>& a, int dy, int dx) {
    const int h = static_cast<int>(a.rows()), w = static_cast<int>(a.cols());
    ArrXX<S> out(h, w);
    for (int y = 0; y < h; ++y) {
        const int sy = std::clamp(y + dy, 0, h - 1);
        for (int x = 0; x < w; ++x) out(y, x) = a(sy, std::clamp(x + dx, 0, w - 1));
    }
    return out;
}

}  // namespace detail

/// Dense Horn-Schunck flow from a to b. Gradients use averaged forward
/// differences over the frame pair; the update is the classical Jacobi
/// iteration with 4-neighbor averages and reflective boundaries, from a zero
/// initial field. Stops at max_iters or when the mean update magnitude drops
/// below eps.
template <typename S>
FlowField<S> horn_schunck(const ArrXX<S>& a, const ArrXX<S>& b, S alpha,
                          int max_iters = 200, S eps = S(1e-4)) {
    using detail::shift_clamped;
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw AffectError("horn_schunck: shape mismatch");
    if (!(alpha > 0)) throw AffectError("horn_schunck: alpha must be positive");
    if (!a.allFinite() || !b.allFinite()) throw AffectError("horn_schunck: non-finite input");

    const auto aE = shift_clamped(a, 0, 1), aS = shift_clamped(a, 1, 0), aSE = shift_clamped(a, 1, 1);
    const auto bE = shift_clamped(b, 0, 1), bS = shift_clamped(b, 1, 0), bSE = shift_clamped(b, 1, 1);
    const ArrXX<S> ix = S(0.25) * ((aE - a) + (aSE - aS) + (bE - b) + (bSE - bS));
    const ArrXX<S> iy = S(0.25) * ((aS - a) + (aSE - aE) + (bS - b) + (bSE - bE));
    const ArrXX<S> it = S(0.25) * ((b - a) + (bE - aE) + (bS - aS) + (bSE - aSE));
    const ArrXX<S> den = alpha * alpha + ix.square() + iy.square();

    FlowField<S> f;
    f.u = ArrXX<S>::Zero(a.rows(), a.cols());
    f.v = ArrXX<S>::Zero(a.rows(), a.cols());
    const S npix = static_cast<S>(a.size());

    for (int k = 0; k < max_iters; ++k) {
        ArrXX<S> ub = S(0.25) * (shift_clamped(f.u, 0, 1) + shift_clamped(f.u, 0, -1) +
                                 shift_clamped(f.u, 1, 0) + shift_clamped(f.u, -1, 0));
        ArrXX<S> vb = S(0.25) * (shift_clamped(f.v, 0, 1) + shift_clamped(f.v, 0, -1) +
                                 shift_clamped(f.v, 1, 0) + shift_clamped(f.v, -1, 0));
        ArrXX<S> t = (ix * ub + iy * vb + it) / den;
        ArrXX<S> un = ub - ix * t;
        ArrXX<S> vn = vb - iy * t;
        S update = (((un - f.u).square() + (vn - f.v).square()).sqrt()).sum() / npix;
        f.u.swap(un);
        f.v.swap(vn);
        f.residual = update;
        f.residual_trace.push_back(update);
        f.iterations_run = k + 1;
        if (update < eps) break;
    }
    return f;
}

/// 3-channel encoding of a flow field: u and v mapped to [0,1] around 0.5,
/// magnitude mapped to [0,1], all clamped, quantized to 8 bits.
template <typename S>
Image encode_flow(const FlowField<S>& f, S max_mag) {
    if (!(max_mag > 0)) throw AffectError("encode_flow: max_mag must be positive");
    const int h = static_cast<int>(f.u.rows()), w = static_cast<int>(f.u.cols());
    Image img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const S u = f.u(y, x), v = f.v(y, x);
            const S un = std::clamp<S>(u / (2 * max_mag) + S(0.5), S(0), S(1));
            const S vn = std::clamp<S>(v / (2 * max_mag) + S(0.5), S(0), S(1));
            const S mn = std::clamp<S>(std::sqrt(u * u + v * v) / max_mag, S(0), S(1));
            img.at(y, x, 0) = static_cast<uint8_t>(std::lround(un * 255));
            img.at(y, x, 1) = static_cast<uint8_t>(std::lround(vn * 255));
            img.at(y, x, 2) = static_cast<uint8_t>(std::lround(mn * 255));
        }
    return img;
}

/// Pairwise flow encodings over a chronological crop sequence, front-padded by
/// duplicating the first encoding so the output length equals the input's.
template <typename S = float>
std::vector<Image> flow_sequence(const std::vector<Image>& crops, const FlowConfig& cfg) {
    if (crops.size() < 2) throw AffectError("flow_sequence needs at least 2 crops");
    std::vector<ArrXX<S>> gray;
    gray.reserve(crops.size());
    for (const auto& c : crops) gray.push_back(to_intensity<S>(c));
    std::vector<Image> out(crops.size());
    for (size_t i = 1; i < crops.size(); ++i) {
        auto f = horn_schunck<S>(gray[i - 1], gray[i], static_cast<S>(cfg.alpha),
                                 cfg.max_iters, static_cast<S>(cfg.eps));
        out[i] = encode_flow<S>(f, static_cast<S>(cfg.max_mag));
    }
    out[0] = out[1];
    return out;
}

}  // namespace affect
