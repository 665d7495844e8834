#pragma once

#include <png.h>

#include <csetjmp>
#include <cctype>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mospick/core/errors.hpp"
#include "mospick/core/image.hpp"

namespace mospick {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

// libpng is C; errors come back through its setjmp buffer rather than by
// unwinding C++ exceptions through libpng frames.
inline void png_fail(png_structp png, png_const_charp msg) {
    auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
    if (slot) *slot = msg ? msg : "unknown error";
    png_longjmp(png, 1);
}

inline void png_warn(png_structp, png_const_charp) {}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const RasterImage& img) {
    auto file = detail::open_file(path, "wb");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_fail,
                                              detail::png_warn);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};
    if (!info) throw IoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(png))) throw IoError("png write: " + err);

    png_init_io(png, file.get());
    // Fixed compression settings keep output bytes reproducible.
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8,
                 img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y) {
        png_write_row(png, const_cast<png_bytep>(img.row(y)));
    }
    png_write_end(png, nullptr);
}

// Reads 8-bit gray, gray+alpha, RGB, RGBA or palette PNGs. Alpha is dropped,
// gray stays single-channel, everything else becomes RGB.
inline RasterImage read_png(const std::filesystem::path& path) {
    auto file = detail::open_file(path, "rb");
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_fail,
                                             detail::png_warn);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};
    if (!info) throw IoError("png_create_info_struct failed");

    RasterImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) throw IoError("png read: " + err);

    png_init_io(png, file.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) throw IoError("unsupported PNG channel layout");
    img = RasterImage(w, h, channels);
    rows.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = img.row(y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    return img;
}

// Binary PGM (P5); each pixel holds the category value 0-3.
inline void write_pgm(const std::filesystem::path& path, const LabelMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
    for (std::size_t i = 0; i < mask.size(); ++i) out.put(static_cast<char>(mask[i]));
    if (!out) throw IoError("write failed: " + path.string());
}

inline LabelMask read_pgm_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    auto next_token = [&in]() {
        std::string tok;
        while (in) {
            int c = in.peek();
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        in >> tok;
        return tok;
    };
    if (next_token() != "P5") throw IoError("not a binary PGM: " + path.string());
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval > 255) throw IoError("16-bit PGM not supported");
    in.get();
    LabelMask mask(w, h);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const int v = in.get();
        if (v == EOF) throw IoError("truncated PGM: " + path.string());
        if (v > 3) throw IoError("PGM value outside category range 0-3");
        mask[i] = static_cast<Category>(v);
    }
    return mask;
}

}  // namespace mospick
