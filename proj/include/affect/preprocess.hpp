#pragma once

#include "affect/dataset.hpp"
#include "affect/image.hpp"

#include <array>
#include <span>

namespace affect {

constexpr int kCropSize = 96;

struct ClaheConfig {
    double clip_limit = 2.0;  // multiples of the uniform bin height
    int tile_rows = 8;
    int tile_cols = 8;
};

enum class Region { face, eyes, mouth };

const char* region_name(Region r);

struct RegionCrop {
    Region region;
    Image image;                      // 96 x 96 x 3
    std::array<double, 4> source_box;  // (x0, y0, x1, y1) in raw-frame pixels
};

/// Axis-aligned bounding box of all 68 landmarks expanded by `margin` of its
/// width/height on each side, clamped to the frame, resized to 96x96.
/// Landmarks up to 2 px out of bounds are clamped first.
RegionCrop crop_face(const Image& frame, std::span<const Landmark> landmarks,
                     double margin = 0.2);

/// Contrast-limited adaptive histogram equalization. Color images are
/// equalized on the luma channel of a YCbCr decomposition.
Image clahe(const Image& image, const ClaheConfig& cfg);

/// Eye region: landmarks 36-47; mouth region: landmarks 48-67; each with a 25%
/// margin, a 4 px minimum box side, resized to 96x96.
std::pair<RegionCrop, RegionCrop> extract_regions(const Image& frame,
                                                  std::span<const Landmark> landmarks);

/// Box arithmetic shared by the crops, exposed for verification: expand the
/// landmark bounding box by margin per side (no clamping).
std::array<double, 4> landmark_box(std::span<const Landmark> landmarks, double margin);

}  // namespace affect
