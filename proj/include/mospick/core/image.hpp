#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"

namespace mospick {

// Row-major single-plane grid. Used directly for binary masks, label masks
// and integer label images; RasterImage adds interleaved channels on top.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked_dim(width)) * checked_dim(height), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    Rect bounds() const { return {0, 0, width_, height_}; }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Grid& o) const { return width_ == o.width_ && height_ == o.height_; }
    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static int checked_dim(int d) {
        if (d < 0) throw ShapeError("negative image dimension");
        return d;
    }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Values are 0 (background) or 1 (foreground).
using BinaryMask = Grid<std::uint8_t>;

enum class Category : std::uint8_t { background = 0, proboscis = 1, head = 2, body = 3 };
inline constexpr int kCategoryCount = 4;

inline constexpr int category_index(Category c) { return static_cast<int>(c); }

inline const char* category_name(Category c) {
    switch (c) {
        case Category::background: return "background";
        case Category::proboscis: return "proboscis";
        case Category::head: return "head";
        case Category::body: return "body";
    }
    return "?";
}

using LabelMask = Grid<Category>;

// 8-bit image with 1 or 3 interleaved channels.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int channels, std::uint8_t fill = 0)
        : width_(width), height_(height), channels_(channels) {
        if (width < 0 || height < 0) throw ShapeError("negative image dimension");
        if (channels != 1 && channels != 3) throw ShapeError("image must have 1 or 3 channels");
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    Rect bounds() const { return {0, 0, width_, height_}; }

    std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
    std::uint8_t* pixel(int x, int y) { return data_.data() + index(x, y, 0); }
    const std::uint8_t* pixel(int x, int y) const { return data_.data() + index(x, y, 0); }
    std::uint8_t* row(int y) { return pixel(0, y); }
    const std::uint8_t* row(int y) const { return pixel(0, y); }

    std::vector<std::uint8_t>& data() { return data_; }
    const std::vector<std::uint8_t>& data() const { return data_; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x)) * channels_ +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<std::uint8_t> data_;
};

inline RasterImage crop(const RasterImage& img, const Rect& r) {
    if (r.empty() || !img.bounds().contains(r)) throw ParameterError("crop rectangle outside frame");
    RasterImage out(r.width, r.height, img.channels());
    const std::size_t row_bytes = static_cast<std::size_t>(r.width) * img.channels();
    for (int y = 0; y < r.height; ++y) {
        std::copy_n(img.pixel(r.x, r.y + y), row_bytes, out.row(y));
    }
    return out;
}

template <typename T>
Grid<T> crop(const Grid<T>& g, const Rect& r) {
    if (r.empty() || !g.bounds().contains(r)) throw ParameterError("crop rectangle outside grid");
    Grid<T> out(r.width, r.height);
    for (int y = 0; y < r.height; ++y) std::copy_n(g.row(r.y + y) + r.x, r.width, out.row(y));
    return out;
}

// 0/1 mask to a 0/255 single-channel image.
inline RasterImage mask_to_image(const BinaryMask& m) {
    RasterImage out(m.width(), m.height(), 1);
    for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = m[i] ? 255 : 0;
    return out;
}

inline BinaryMask image_to_mask(const RasterImage& img, std::uint8_t threshold) {
    if (img.channels() != 1) throw ShapeError("binarization needs a single-channel image");
    BinaryMask out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.data()[i] > threshold ? 1 : 0;
    return out;
}

inline BinaryMask category_mask(const LabelMask& m, Category c) {
    BinaryMask out(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] == c ? 1 : 0;
    return out;
}

inline long long count_nonzero(const BinaryMask& m) {
    return std::count_if(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v != 0; });
}

}  // namespace mospick
