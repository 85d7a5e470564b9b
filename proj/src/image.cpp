#include "affect/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>

namespace affect {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw AffectError("cannot open image: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw AffectError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw AffectError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw AffectError("failed to decode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int ch = png_get_channels(png, info);
    Image img(static_cast<int>(w), static_cast<int>(h), ch);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.data.data() + static_cast<size_t>(y) * w * ch;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
    if (img.empty()) throw AffectError("refusing to save empty image");
    if (img.channels != 1 && img.channels != 3)
        throw AffectError("save_png supports 1- or 3-channel images");

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw AffectError("cannot write image: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw AffectError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw AffectError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw AffectError("failed to encode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() +
                                        static_cast<size_t>(y) * img.width * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image crop_resize_bilinear(const Image& src, double x0, double y0, double x1, double y1,
                           int w, int h) {
    if (src.empty()) throw AffectError("crop_resize_bilinear: empty source");
    if (x1 <= x0 || y1 <= y0) throw AffectError("crop_resize_bilinear: empty source rect");
    Image out(w, h, src.channels);
    const double sx = (x1 - x0) / w;
    const double sy = (y1 - y0) / h;
    for (int oy = 0; oy < h; ++oy) {
        double fy = y0 + (oy + 0.5) * sy - 0.5;
        int iy = static_cast<int>(std::floor(fy));
        double wy = fy - iy;
        int iy0 = std::clamp(iy, 0, src.height - 1);
        int iy1 = std::clamp(iy + 1, 0, src.height - 1);
        for (int ox = 0; ox < w; ++ox) {
            double fx = x0 + (ox + 0.5) * sx - 0.5;
            int ix = static_cast<int>(std::floor(fx));
            double wx = fx - ix;
            int ix0 = std::clamp(ix, 0, src.width - 1);
            int ix1 = std::clamp(ix + 1, 0, src.width - 1);
            for (int c = 0; c < src.channels; ++c) {
                double v = (1 - wy) * ((1 - wx) * src.at(iy0, ix0, c) + wx * src.at(iy0, ix1, c)) +
                           wy * ((1 - wx) * src.at(iy1, ix0, c) + wx * src.at(iy1, ix1, c));
                out.at(oy, ox, c) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

Image to_grayscale(const Image& src) {
    if (src.channels == 1) return src;
    Image out(src.width, src.height, 1);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double v = 0.299 * src.at(y, x, 0) + 0.587 * src.at(y, x, 1) + 0.114 * src.at(y, x, 2);
            out.at(y, x, 0) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
        }
    return out;
}

}  // namespace affect
