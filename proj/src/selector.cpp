#include "affect/selector.hpp"

#include "affect/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace affect {

int class_of(int valence, int arousal) {
    if (valence < kLabelMin || valence > kLabelMax || arousal < kLabelMin || arousal > kLabelMax)
        throw AffectError("class_of: levels must lie in [-10,10]");
    const double mag = std::hypot(static_cast<double>(valence), static_cast<double>(arousal));
    if (mag < 2.5) return 0;
    double angle = std::atan2(static_cast<double>(arousal), static_cast<double>(valence));
    if (angle < 0) angle += 2.0 * M_PI;
    int sector = static_cast<int>(std::floor(angle / (2.0 * M_PI) * 6.0));
    sector = std::min(sector, 5);  // angle == 2*pi wraps to the last sector
    return 1 + sector;
}

std::vector<int> select_top_k(const VecX<double>& marginal, int k) {
    const int f = static_cast<int>(marginal.size());
    if (f < 1 || k < 1) throw AffectError("select_top_k: empty input");
    std::vector<int> ranked(f);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](int a, int b) { return marginal(a) > marginal(b); });
    std::vector<int> picked;
    picked.reserve(k);
    for (int i = 0; i < k; ++i) picked.push_back(ranked[i % f]);
    std::sort(picked.begin(), picked.end());
    return picked;
}

Image render_heatmap(const Image& frame, const MatX<double>& weights,
                     std::array<int, 2> grid_shape) {
    const int gh = grid_shape[0], gw = grid_shape[1];
    if (weights.cols() != static_cast<Eigen::Index>(gh) * gw)
        throw AffectError("render_heatmap: weights do not match grid shape");

    // Max across heads, reshaped onto the grid.
    MatX<double> grid(gh, gw);
    for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x)
            grid(y, x) = weights.col(static_cast<Eigen::Index>(y) * gw + x).maxCoeff();

    // Bilinear upsample to frame size (grid cells centered on their patches).
    const int H = frame.height, W = frame.width;
    MatX<double> heat(H, W);
    for (int y = 0; y < H; ++y) {
        double fy = (y + 0.5) / H * gh - 0.5;
        int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, gh - 1);
        int y1 = std::min(y0 + 1, gh - 1);
        double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < W; ++x) {
            double fx = (x + 0.5) / W * gw - 0.5;
            int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, gw - 1);
            int x1 = std::min(x0 + 1, gw - 1);
            double wx = std::clamp(fx - x0, 0.0, 1.0);
            heat(y, x) = (1 - wy) * ((1 - wx) * grid(y0, x0) + wx * grid(y0, x1)) +
                         wy * ((1 - wx) * grid(y1, x0) + wx * grid(y1, x1));
        }
    }

    // Gaussian smoothing, sigma = 4 px, separable.
    const double sigma = 4.0;
    const int rad = 8;
    VecX<double> kernel(2 * rad + 1);
    for (int i = -rad; i <= rad; ++i) kernel(i + rad) = std::exp(-i * i / (2 * sigma * sigma));
    kernel /= kernel.sum();
    MatX<double> tmp = MatX<double>::Zero(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double acc = 0;
            for (int i = -rad; i <= rad; ++i)
                acc += kernel(i + rad) * heat(y, std::clamp(x + i, 0, W - 1));
            tmp(y, x) = acc;
        }
    for (int x = 0; x < W; ++x)
        for (int y = 0; y < H; ++y) {
            double acc = 0;
            for (int i = -rad; i <= rad; ++i)
                acc += kernel(i + rad) * tmp(std::clamp(y + i, 0, H - 1), x);
            heat(y, x) = acc;
        }

    const double hmax = heat.maxCoeff();
    if (hmax > 0) heat /= hmax;

    Image out = frame.channels == 3 ? frame : Image(W, H, 3);
    if (frame.channels == 1)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = frame.at(y, x, 0);
    const double alpha = 0.5;
    const double hot[3] = {255.0, 48.0, 32.0};
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double a = alpha * heat(y, x);
            for (int c = 0; c < 3; ++c) {
                double v = (1 - a) * out.at(y, x, c) + a * hot[c];
                out.at(y, x, c) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    return out;
}

}  // namespace affect
