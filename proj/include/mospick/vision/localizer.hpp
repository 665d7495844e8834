#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"
#include "mospick/core/image.hpp"
#include "mospick/scene/layout.hpp"
#include "mospick/vision/core.hpp"

namespace mospick::vision {

struct DetectionResult {
    bool present = false;
    Rect bbox{};
    Vec2 centroid{};
    std::vector<ComponentStats> components;  // uncropped frame coordinates, largest first
};

// Intermediate images of the ten pipeline stages, in order.
struct LocalizerTrace {
    std::vector<std::pair<std::string, RasterImage>> stages;
};

// Square around the cup plus a 1 mm margin, clipped to the frame. Excludes
// the cartridge and blades.
inline Rect default_overhead_crop(const WorkcellLayout& layout) {
    const auto cam = OverheadCamera::from_layout(layout);
    const double half = layout.cup_radius + 1.0;
    Box px;
    for (Vec2 d : {Vec2{-half, -half}, Vec2{half, -half}, Vec2{-half, half}, Vec2{half, half}})
        px.include(cam.world_to_pixel(layout.cup_center + d));
    const Rect r{static_cast<int>(std::floor(px.lo.x)), static_cast<int>(std::floor(px.lo.y)),
                 static_cast<int>(std::ceil(px.hi.x) - std::floor(px.lo.x)),
                 static_cast<int>(std::ceil(px.hi.y) - std::floor(px.lo.y))};
    return intersect(r, {0, 0, layout.overhead_resolution.width, layout.overhead_resolution.height});
}

inline DetectionResult locate_mosquito(const RasterImage& frame, const PipelineParams& params, const Rect& crop_rect,
                                       LocalizerTrace* trace = nullptr) {
    params.validate();
    if (frame.channels() != 3) throw ShapeError("overhead frame must be RGB");
    if (crop_rect.empty() || !frame.bounds().contains(crop_rect))
        throw ParameterError("crop rectangle outside the frame");
    auto record = [trace](const char* name, const RasterImage& img) {
        if (trace) trace->stages.emplace_back(name, img);
    };

    DetectionResult result;
    // Gamma is a per-sample map, so correcting only the crop is equivalent.
    RasterImage cropped = crop(frame, crop_rect);
    if (trace) record("gamma", gamma_correct(frame, params.gamma));
    cropped = gamma_correct(cropped, params.gamma);
    record("crop", cropped);
    const RasterImage sat = rgb_to_hsv_saturation(cropped);
    record("saturation", sat);
    const RasterImage blurred = gaussian_blur(sat, params.blur_sigma, params.blur_kernel);
    record("blur", blurred);

    OtsuResult otsu;
    try {
        otsu = otsu_threshold(blurred);
    } catch (const DegenerateHistogramError&) {
        return result;
    }
    record("otsu", mask_to_image(otsu.mask));
    const BinaryMask opened = morph_open(otsu.mask, params.open_kernel);
    record("open", mask_to_image(opened));
    const BinaryMask smooth =
        image_to_mask(gaussian_blur(mask_to_image(opened), params.blur_sigma, params.blur_kernel), 127);
    record("mask_blur", mask_to_image(smooth));
    const BinaryMask eroded = morph_erode(smooth, params.erode_kernel);
    record("erode", mask_to_image(eroded));

    auto comps = connected_components(eroded, params.area_threshold, &blurred);
    if (trace) {
        BinaryMask kept(eroded.width(), eroded.height());
        const auto cl = label_components(eroded);
        for (const auto& c : comps)
            for (std::size_t i = 0; i < kept.size(); ++i)
                if (cl.labels[i] == c.label) kept[i] = 1;
        record("components", mask_to_image(kept));
    }
    for (auto& c : comps) {
        c.bbox.x += crop_rect.x;
        c.bbox.y += crop_rect.y;
        c.centroid += Vec2{static_cast<double>(crop_rect.x), static_cast<double>(crop_rect.y)};
    }
    result.components = std::move(comps);
    if (!result.components.empty()) {
        result.present = true;
        result.bbox = result.components.front().bbox;
        result.centroid = result.components.front().centroid;
    }
    if (trace) {
        RasterImage annotated = frame;
        for (const auto& c : result.components) {
            const Rect& b = c.bbox;
            for (int x = b.x; x < b.right(); ++x)
                for (int y : {b.y, b.bottom() - 1}) annotated.at(x, y, 0) = 255, annotated.at(x, y, 1) = 0, annotated.at(x, y, 2) = 0;
            for (int y = b.y; y < b.bottom(); ++y)
                for (int x : {b.x, b.right() - 1}) annotated.at(x, y, 0) = 255, annotated.at(x, y, 1) = 0, annotated.at(x, y, 2) = 0;
        }
        record("detection", annotated);
    }
    return result;
}

}  // namespace mospick::vision
