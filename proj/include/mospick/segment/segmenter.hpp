#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include "mospick/core/errors.hpp"
#include "mospick/core/image.hpp"
#include "mospick/core/rng.hpp"
#include "mospick/vision/core.hpp"

namespace mospick::segment {

// Anatomical segmentation of an onboard frame.
class Segmenter {
public:
    virtual ~Segmenter() = default;
    virtual LabelMask segment(const RasterImage& image) const = 0;
};

struct LabelNoise {
    double flip_probability = 0.0;  // per pixel, to a uniformly chosen other category
    int boundary_erosion_px = 0;    // foreground regions shrink by this much first
    friend bool operator==(const LabelNoise&, const LabelNoise&) = default;
};

inline LabelMask corrupt_labels(const LabelMask& truth, const LabelNoise& noise, std::uint64_t seed) {
    if (!(noise.flip_probability >= 0.0 && noise.flip_probability <= 1.0))
        throw ParameterError("flip probability must lie in [0, 1]");
    if (noise.boundary_erosion_px < 0) throw ParameterError("boundary erosion must be non-negative");
    LabelMask out = truth;
    if (noise.boundary_erosion_px > 0) {
        const int k = 2 * noise.boundary_erosion_px + 1;
        for (Category c : {Category::proboscis, Category::head, Category::body}) {
            const BinaryMask m = category_mask(truth, c);
            const BinaryMask kept = vision::morph_erode(m, {k, k});
            for (std::size_t i = 0; i < out.size(); ++i)
                if (m[i] && !kept[i]) out[i] = Category::background;
        }
    }
    const double p = noise.flip_probability;
    if (p <= 0.0) return out;
    Rng rng(seed);
    auto flip = [&](std::size_t i) {
        const auto shift = 1 + rng.below(kCategoryCount - 1);
        out[i] = static_cast<Category>((static_cast<std::uint64_t>(out[i]) + shift) % kCategoryCount);
    };
    if (p >= 1.0) {
        for (std::size_t i = 0; i < out.size(); ++i) flip(i);
        return out;
    }
    // Geometric gaps between flipped pixels.
    const double log_q = std::log1p(-p);
    std::size_t i = 0;
    while (true) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        const double gap = std::floor(std::log(u) / log_q);
        if (gap >= static_cast<double>(out.size() - i)) break;
        i += static_cast<std::size_t>(gap);
        flip(i);
        ++i;
        if (i >= out.size()) break;
    }
    return out;
}

// Reference segmenter: the renderer's ground truth, optionally corrupted to
// emulate an imperfect network.
class OracleSegmenter final : public Segmenter {
public:
    OracleSegmenter(LabelMask truth, LabelNoise noise = {}, std::uint64_t seed = 0)
        : truth_(std::move(truth)), noise_(noise), seed_(seed) {}

    LabelMask segment(const RasterImage& image) const override {
        if (image.width() != truth_.width() || image.height() != truth_.height())
            throw ShapeError("frame resolution does not match the segmenter");
        return corrupt_labels(truth_, noise_, seed_);
    }

private:
    LabelMask truth_;
    LabelNoise noise_;
    std::uint64_t seed_;
};

}  // namespace mospick::segment
