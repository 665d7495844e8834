#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "mospick/core/errors.hpp"
#include "mospick/core/image.hpp"
#include "mospick/core/rng.hpp"
#include "mospick/scene/specimen.hpp"

namespace mospick::segment {

struct AugmentParams {
    Range rotation{-std::numbers::pi, std::numbers::pi};
    bool reflect_x = true;  // mirror across the vertical axis with probability 1/2
    bool reflect_y = true;
    double translation_px = 100.0;
    Range scale{0.75, 1.25};

    static AugmentParams identity() { return {{0.0, 0.0}, false, false, 0.0, {1.0, 1.0}}; }

    void validate() const {
        if (!(rotation.min <= rotation.max) || !(scale.min <= scale.max)) throw ParameterError("empty augmentation range");
        if (!(scale.min > 0.0)) throw ParameterError("scale must be positive");
        if (!(translation_px >= 0.0)) throw ParameterError("translation must be non-negative");
    }
};

// p' = c + R(angle) * scale * F * (p - c) + t, c the image centre, F the
// optional reflections.
struct AugmentTransform {
    double angle = 0.0;
    bool reflect_x = false;
    bool reflect_y = false;
    Vec2 translation{};
    double scale = 1.0;
};

inline AugmentTransform sample_transform(const AugmentParams& p, std::uint64_t seed) {
    p.validate();
    Rng rng(seed);
    AugmentTransform t;
    t.angle = rng.uniform(p.rotation.min, p.rotation.max);
    const bool rx = rng.bernoulli(0.5), ry = rng.bernoulli(0.5);
    t.reflect_x = p.reflect_x && rx;
    t.reflect_y = p.reflect_y && ry;
    t.translation = {rng.uniform(-p.translation_px, p.translation_px), rng.uniform(-p.translation_px, p.translation_px)};
    t.scale = rng.uniform(p.scale.min, p.scale.max);
    return t;
}

inline Vec2 apply_to_point(const AugmentTransform& t, Vec2 p, int width, int height) {
    const Vec2 c{(width - 1) * 0.5, (height - 1) * 0.5};
    Vec2 d = p - c;
    if (t.reflect_x) d.x = -d.x;
    if (t.reflect_y) d.y = -d.y;
    return c + rotated(d * t.scale, t.angle) + t.translation;
}

inline Vec2 invert_point(const AugmentTransform& t, Vec2 q, int width, int height) {
    const Vec2 c{(width - 1) * 0.5, (height - 1) * 0.5};
    Vec2 d = rotated(q - c - t.translation, -t.angle) / t.scale;
    if (t.reflect_x) d.x = -d.x;
    if (t.reflect_y) d.y = -d.y;
    return c + d;
}

// Nearest neighbour for the mask, bilinear for the image; samples from
// outside the source frame become background (0).
inline std::pair<RasterImage, LabelMask> apply_transform(const RasterImage& img, const LabelMask& mask,
                                                         const AugmentTransform& t) {
    if (img.width() != mask.width() || img.height() != mask.height()) throw ShapeError("image and mask differ in shape");
    const int w = img.width(), h = img.height(), ch = img.channels();
    RasterImage out_img(w, h, ch, 0);
    LabelMask out_mask(w, h, Category::background);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec2 s = invert_point(t, {double(x), double(y)}, w, h);
            const long nx = std::lround(s.x), ny = std::lround(s.y);
            if (nx >= 0 && ny >= 0 && nx < w && ny < h) out_mask.at(x, y) = mask.at(int(nx), int(ny));
            const double fx = std::floor(s.x), fy = std::floor(s.y);
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const double ax = s.x - fx, ay = s.y - fy;
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int j = 0; j < 2; ++j)
                    for (int i = 0; i < 2; ++i) {
                        const double wt = (i ? ax : 1.0 - ax) * (j ? ay : 1.0 - ay);
                        if (wt == 0.0) continue;
                        const int sx = x0 + i, sy = y0 + j;
                        if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
                        acc += wt * img.at(sx, sy, c);
                    }
                out_img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
            }
        }
    return {std::move(out_img), std::move(out_mask)};
}

inline std::pair<RasterImage, LabelMask> augment(const RasterImage& img, const LabelMask& mask,
                                                 const AugmentParams& params, std::uint64_t seed) {
    return apply_transform(img, mask, sample_transform(params, seed));
}

}  // namespace mospick::segment
