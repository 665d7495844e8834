#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"
#include "mospick/core/image.hpp"
#include "mospick/vision/core.hpp"

namespace mospick::segment {

struct SegmentationResult {
    LabelMask mask;  // largest region per category
    std::optional<Vec2> proboscis_centroid;
    std::optional<Vec2> grasp_point;
    std::optional<Vec2> proboscis_axis;  // unit principal direction
    std::optional<Vec2> proboscis_head_edge_centroid;
    std::optional<Vec2> dissection_point;
};

namespace detail {

inline Rect foreground_bounds(const LabelMask& m) {
    int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < m.height(); ++y) {
        const Category* row = m.row(y);
        for (int x = 0; x < m.width(); ++x)
            if (row[x] != Category::background) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

inline std::optional<Vec2> mask_centroid(const BinaryMask& m) {
    double sx = 0, sy = 0;
    long long n = 0;
    for (int y = 0; y < m.height(); ++y) {
        const std::uint8_t* row = m.row(y);
        for (int x = 0; x < m.width(); ++x)
            if (row[x]) {
                sx += x;
                sy += y;
                ++n;
            }
    }
    if (n == 0) return std::nullopt;
    return Vec2{sx / n, sy / n};
}

inline Vec2 nearest_set_pixel(const BinaryMask& m, Vec2 p) {
    Vec2 best = p;
    double bd = std::numeric_limits<double>::infinity();
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                const double d = distance(p, {double(x), double(y)});
                if (d < bd) {
                    bd = d;
                    best = {double(x), double(y)};
                }
            }
    return best;
}

inline Vec2 principal_axis(const BinaryMask& m, Vec2 c) {
    double sxx = 0, syy = 0, sxy = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                const double dx = x - c.x, dy = y - c.y;
                sxx += dx * dx;
                syy += dy * dy;
                sxy += dx * dy;
            }
    const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    return unit_from_angle(angle);
}

}  // namespace detail

// Keeps the largest 8-connected region of every category, then derives the
// grasp point, the proboscis/head junction and the head/body dissection
// point from the regions and from dilate(A) & dilate(B) edges. Missing
// regions leave the corresponding fields empty.
inline SegmentationResult analyze_segmentation(const LabelMask& mask, vision::KernelSize dilation = {5, 5}) {
    SegmentationResult r;
    r.mask = LabelMask(mask.width(), mask.height(), Category::background);
    const Rect fg = detail::foreground_bounds(mask);
    if (fg.empty()) return r;
    const int margin = std::max(dilation.width, dilation.height) + 2;
    const Rect roi = intersect({fg.x - margin, fg.y - margin, fg.width + 2 * margin, fg.height + 2 * margin},
                               mask.bounds());
    const LabelMask local = crop(mask, roi);
    const Vec2 origin{double(roi.x), double(roi.y)};

    std::array<BinaryMask, kCategoryCount> kept;
    for (Category c : {Category::proboscis, Category::head, Category::body}) {
        const auto cl = vision::label_components(category_mask(local, c));
        auto stats = vision::component_stats(cl);
        BinaryMask keep(local.width(), local.height());
        if (!stats.empty()) {
            // first largest in raster order
            const auto best = std::max_element(stats.begin(), stats.end(),
                                               [](const auto& a, const auto& b) { return a.area < b.area; });
            keep = vision::select_label(cl, best->label);
        }
        for (int y = 0; y < local.height(); ++y)
            for (int x = 0; x < local.width(); ++x)
                if (keep.at(x, y)) r.mask.at(x + roi.x, y + roi.y) = c;
        kept[static_cast<std::size_t>(category_index(c))] = std::move(keep);
    }

    const BinaryMask& prob = kept[1];
    const BinaryMask& head = kept[2];
    const BinaryMask& body = kept[3];
    if (auto c = detail::mask_centroid(prob)) {
        r.proboscis_centroid = *c + origin;
        const int cx = static_cast<int>(std::lround(c->x)), cy = static_cast<int>(std::lround(c->y));
        const bool inside = prob.bounds().contains(cx, cy) && prob.at(cx, cy);
        r.grasp_point = (inside ? *c : detail::nearest_set_pixel(prob, *c)) + origin;
        r.proboscis_axis = detail::principal_axis(prob, *c);
    }
    const BinaryMask head_d = vision::morph_dilate(head, dilation);
    if (auto e = detail::mask_centroid(vision::mask_and(vision::morph_dilate(prob, dilation), head_d)))
        r.proboscis_head_edge_centroid = *e + origin;
    if (auto e = detail::mask_centroid(vision::mask_and(head_d, vision::morph_dilate(body, dilation))))
        r.dissection_point = *e + origin;
    return r;
}

inline SegmentationResult postprocess(const LabelMask& mask, vision::KernelSize dilation = {5, 5}) {
    SegmentationResult r = analyze_segmentation(mask, dilation);
    if (!r.grasp_point) throw NoGraspError("no proboscis region in the segmentation");
    if (!r.dissection_point) throw NoDissectionPointError("head and body regions are not adjacent");
    return r;
}

}  // namespace mospick::segment
