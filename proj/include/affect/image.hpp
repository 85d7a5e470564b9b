#pragma once

#include "affect/common.hpp"

#include <filesystem>
#include <vector>

namespace affect {

/// 8-bit interleaved image, row-major. channels is 1 (gray) or 3 (RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    uint8_t& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    uint8_t at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    bool empty() const { return data.empty(); }
    size_t size() const { return data.size(); }
};

Image load_png(const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

/// Bilinear resample of an arbitrary source rectangle (x0,y0)-(x1,y1), given
/// in continuous pixel coordinates of `src`, onto a w x h output.
Image crop_resize_bilinear(const Image& src, double x0, double y0, double x1, double y1,
                           int w, int h);

inline Image resize_bilinear(const Image& src, int w, int h) {
    return crop_resize_bilinear(src, 0.0, 0.0, src.width, src.height, w, h);
}

/// Rec.601 luminance.
Image to_grayscale(const Image& src);

/// Grayscale intensities scaled to [0, 1].
template <typename S>
ArrXX<S> to_intensity(const Image& img) {
    Image g = img.channels == 1 ? img : to_grayscale(img);
    ArrXX<S> out(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            out(y, x) = static_cast<S>(g.at(y, x, 0)) / S(255);
    return out;
}

}  // namespace affect
