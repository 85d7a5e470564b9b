#include "affect/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace affect {

const char* region_name(Region r) {
    switch (r) {
        case Region::face: return "face";
        case Region::eyes: return "eyes";
        case Region::mouth: return "mouth";
    }
    return "?";
}

std::array<double, 4> landmark_box(std::span<const Landmark> landmarks, double margin) {
    if (landmarks.empty()) throw AffectError("landmark_box: no landmarks");
    double x0 = landmarks[0].x, x1 = landmarks[0].x;
    double y0 = landmarks[0].y, y1 = landmarks[0].y;
    for (const auto& p : landmarks) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const double mx = margin * (x1 - x0);
    const double my = margin * (y1 - y0);
    return {x0 - mx, y0 - my, x1 + mx, y1 + my};
}

namespace {

std::array<double, 4> clamp_box(std::array<double, 4> box, int w, int h) {
    box[0] = std::clamp(box[0], 0.0, static_cast<double>(w));
    box[1] = std::clamp(box[1], 0.0, static_cast<double>(h));
    box[2] = std::clamp(box[2], 0.0, static_cast<double>(w));
    box[3] = std::clamp(box[3], 0.0, static_cast<double>(h));
    return box;
}

std::array<double, 4> enforce_min_side(std::array<double, 4> box, double min_side,
                                       int w, int h) {
    for (int ax = 0; ax < 2; ++ax) {
        double lo = box[ax], hi = box[ax + 2];
        double len = hi - lo;
        if (len < min_side) {
            double grow = (min_side - len) / 2.0;
            lo -= grow;
            hi += grow;
            double limit = ax == 0 ? w : h;
            if (lo < 0) { hi -= lo; lo = 0; }
            if (hi > limit) { lo -= hi - limit; hi = limit; }
            box[ax] = std::max(lo, 0.0);
            box[ax + 2] = std::min(hi, limit);
        }
    }
    return box;
}

RegionCrop make_crop(const Image& frame, Region region, std::array<double, 4> box) {
    if (box[2] - box[0] <= 0.0 || box[3] - box[1] <= 0.0)
        throw AffectError(std::string("degenerate ") + region_name(region) + " box");
    RegionCrop crop;
    crop.region = region;
    crop.source_box = box;
    crop.image = crop_resize_bilinear(frame, box[0], box[1], box[2], box[3],
                                      kCropSize, kCropSize);
    return crop;
}

Landmark clamp_landmark(const Landmark& p, int w, int h) {
    return {std::clamp(p.x, 0.0, static_cast<double>(w)),
            std::clamp(p.y, 0.0, static_cast<double>(h))};
}

}  // namespace

RegionCrop crop_face(const Image& frame, std::span<const Landmark> landmarks, double margin) {
    if (static_cast<int>(landmarks.size()) != kNumLandmarks)
        throw AffectError("crop_face expects 68 landmarks");
    std::vector<Landmark> clamped(landmarks.begin(), landmarks.end());
    for (auto& p : clamped) p = clamp_landmark(p, frame.width, frame.height);
    auto box = clamp_box(landmark_box(clamped, margin), frame.width, frame.height);
    return make_crop(frame, Region::face, box);
}

std::pair<RegionCrop, RegionCrop> extract_regions(const Image& frame,
                                                  std::span<const Landmark> landmarks) {
    if (static_cast<int>(landmarks.size()) != kNumLandmarks)
        throw AffectError("extract_regions expects 68 landmarks");
    std::vector<Landmark> clamped(landmarks.begin(), landmarks.end());
    for (auto& p : clamped) p = clamp_landmark(p, frame.width, frame.height);

    auto region_box = [&](int first, int count) {
        std::span<const Landmark> part(clamped.data() + first, count);
        auto box = clamp_box(landmark_box(part, 0.25), frame.width, frame.height);
        return enforce_min_side(box, 4.0, frame.width, frame.height);
    };
    RegionCrop eyes = make_crop(frame, Region::eyes, region_box(36, 12));
    RegionCrop mouth = make_crop(frame, Region::mouth, region_box(48, 20));
    return {std::move(eyes), std::move(mouth)};
}

namespace {

constexpr int kBins = 256;

/// Per-tile clipped-histogram CDF mapping: value -> [0,255].
struct TileMap {
    std::array<uint8_t, kBins> lut;
};

TileMap tile_mapping(const Image& gray, int x0, int y0, int x1, int y1, double clip_limit) {
    std::array<double, kBins> hist{};
    const int npix = (x1 - x0) * (y1 - y0);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) hist[gray.at(y, x, 0)] += 1.0;

    // Clip at clip_limit multiples of the uniform bin height and spread the
    // excess evenly over all bins.
    const double beta = clip_limit * npix / kBins;
    double excess = 0.0;
    for (auto& h : hist)
        if (h > beta) {
            excess += h - beta;
            h = beta;
        }
    const double bonus = excess / kBins;
    for (auto& h : hist) h += bonus;

    TileMap map;
    double cdf = 0.0;
    for (int v = 0; v < kBins; ++v) {
        cdf += hist[v];
        map.lut[v] = static_cast<uint8_t>(std::clamp(std::lround(cdf * 255.0 / npix), 0l, 255l));
    }
    return map;
}

Image clahe_gray(const Image& gray, const ClaheConfig& cfg) {
    const int H = gray.height, W = gray.width;
    const int R = cfg.tile_rows, C = cfg.tile_cols;

    std::vector<TileMap> tiles(static_cast<size_t>(R) * C);
    std::vector<int> xs(C + 1), ys(R + 1);
    for (int c = 0; c <= C; ++c) xs[c] = c * W / C;
    for (int r = 0; r <= R; ++r) ys[r] = r * H / R;
    std::vector<double> cxs(C), cys(R);
    for (int c = 0; c < C; ++c) cxs[c] = 0.5 * (xs[c] + xs[c + 1]);
    for (int r = 0; r < R; ++r) cys[r] = 0.5 * (ys[r] + ys[r + 1]);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
            tiles[r * C + c] = tile_mapping(gray, xs[c], ys[r], xs[c + 1], ys[r + 1],
                                            cfg.clip_limit);

    Image out(W, H, 1);
    for (int y = 0; y < H; ++y) {
        // Interpolation cell along rows.
        int r1 = 0;
        while (r1 < R && cys[r1] < y + 0.5) ++r1;
        int r0 = std::max(r1 - 1, 0);
        r1 = std::min(r1, R - 1);
        double wy = r1 == r0 ? 0.0 : (y + 0.5 - cys[r0]) / (cys[r1] - cys[r0]);
        for (int x = 0; x < W; ++x) {
            int c1 = 0;
            while (c1 < C && cxs[c1] < x + 0.5) ++c1;
            int c0 = std::max(c1 - 1, 0);
            c1 = std::min(c1, C - 1);
            double wx = c1 == c0 ? 0.0 : (x + 0.5 - cxs[c0]) / (cxs[c1] - cxs[c0]);
            const uint8_t v = gray.at(y, x, 0);
            double m00 = tiles[r0 * C + c0].lut[v], m01 = tiles[r0 * C + c1].lut[v];
            double m10 = tiles[r1 * C + c0].lut[v], m11 = tiles[r1 * C + c1].lut[v];
            double m = (1 - wy) * ((1 - wx) * m00 + wx * m01) + wy * ((1 - wx) * m10 + wx * m11);
            out.at(y, x, 0) = static_cast<uint8_t>(std::clamp(std::lround(m), 0l, 255l));
        }
    }
    return out;
}

}  // namespace

Image clahe(const Image& image, const ClaheConfig& cfg) {
    if (image.empty()) throw AffectError("clahe: empty image");
    if (cfg.clip_limit < 1.0) throw AffectError("clahe: clip_limit must be >= 1");
    if (cfg.tile_rows < 1 || cfg.tile_cols < 1) throw AffectError("clahe: bad tile grid");
    if (cfg.tile_cols > image.width || cfg.tile_rows > image.height)
        throw AffectError("clahe: tile grid larger than image");

    if (image.channels == 1) return clahe_gray(image, cfg);

    // YCbCr (BT.601 full range): equalize Y, keep chroma.
    const int n = image.width * image.height;
    Image y_plane(image.width, image.height, 1);
    std::vector<double> cb(n), cr(n);
    for (int i = 0; i < n; ++i) {
        double r = image.data[3 * i], g = image.data[3 * i + 1], b = image.data[3 * i + 2];
        double y = 0.299 * r + 0.587 * g + 0.114 * b;
        cb[i] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
        cr[i] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
        y_plane.data[i] = static_cast<uint8_t>(std::clamp(std::lround(y), 0l, 255l));
    }
    Image eq = clahe_gray(y_plane, cfg);
    Image out(image.width, image.height, 3);
    for (int i = 0; i < n; ++i) {
        double y = eq.data[i], pb = cb[i] - 128.0, pr = cr[i] - 128.0;
        double r = y + 1.402 * pr;
        double g = y - 0.344136 * pb - 0.714136 * pr;
        double b = y + 1.772 * pb;
        out.data[3 * i] = static_cast<uint8_t>(std::clamp(std::lround(r), 0l, 255l));
        out.data[3 * i + 1] = static_cast<uint8_t>(std::clamp(std::lround(g), 0l, 255l));
        out.data[3 * i + 2] = static_cast<uint8_t>(std::clamp(std::lround(b), 0l, 255l));
    }
    return out;
}

}  // namespace affect
