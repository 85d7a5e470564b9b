#include "affect/plot.hpp"

#include <algorithm>
#include <cmath>

namespace affect {

namespace {

struct Rgb {
    uint8_t r, g, b;
};

void draw_line(Image& img, double x0, double y0, double x1, double y1, Rgb c) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
        const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx) {
                const int px = x + dx, py = y + dy;
                if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
                img.at(py, px, 0) = c.r;
                img.at(py, px, 1) = c.g;
                img.at(py, px, 2) = c.b;
            }
    }
}

}  // namespace

Image render_trace_plot(const std::vector<double>& truth, const std::vector<double>& pred,
                        int width, int height) {
    Image img(width, height, 3, 255);
    const int ml = 24, mr = 8, mt = 8, mb = 16;  // margins
    const double lo = -10.0, hi = 10.0;
    auto ymap = [&](double v) {
        const double t = (std::clamp(v, lo, hi) - lo) / (hi - lo);
        return mt + (1.0 - t) * (height - mt - mb);
    };
    const size_t n = std::max(truth.size(), pred.size());
    auto xmap = [&](size_t i) {
        return ml + (n <= 1 ? 0.0 : static_cast<double>(i) / (n - 1) * (width - ml - mr));
    };

    const Rgb axis{120, 120, 120}, zero{200, 200, 200}, blue{40, 70, 200}, red{210, 50, 40};
    draw_line(img, ml, ymap(lo), ml, ymap(hi), axis);
    draw_line(img, ml, ymap(lo), width - mr, ymap(lo), axis);
    draw_line(img, ml, ymap(0.0), width - mr, ymap(0.0), zero);
    for (int v = -10; v <= 10; v += 5) draw_line(img, ml - 3, ymap(v), ml, ymap(v), axis);

    for (size_t i = 1; i < truth.size(); ++i)
        draw_line(img, xmap(i - 1), ymap(truth[i - 1]), xmap(i), ymap(truth[i]), blue);
    for (size_t i = 1; i < pred.size(); ++i)
        draw_line(img, xmap(i - 1), ymap(pred[i - 1]), xmap(i), ymap(pred[i]), red);
    return img;
}

}  // namespace affect
