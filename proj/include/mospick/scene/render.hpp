#pragma once

// Synthetic overhead and onboard frames. Shapes are rasterized by testing the
// world position of each pixel centre inside the shape's pixel bounding box.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <utility>

#include "mospick/core/geometry.hpp"
#include "mospick/core/image.hpp"
#include "mospick/core/rng.hpp"
#include "mospick/robot/state.hpp"
#include "mospick/scene/layout.hpp"
#include "mospick/scene/scene.hpp"

namespace mospick {

using Rgb = std::array<std::uint8_t, 3>;

namespace palette {
inline constexpr Rgb table{94, 94, 94};
inline constexpr Rgb mesh_thread{216, 216, 216};
inline constexpr Rgb mesh_hole{162, 162, 162};
inline constexpr Rgb cup_rim{122, 122, 122};
inline constexpr Rgb acrylic{186, 186, 186};
inline constexpr Rgb slot{108, 108, 108};
inline constexpr Rgb blade{154, 154, 154};
inline constexpr Rgb notch_gap{44, 44, 44};
inline constexpr Rgb proboscis{62, 46, 36};
inline constexpr Rgb head{72, 53, 40};
inline constexpr Rgb neck{98, 72, 52};
inline constexpr Rgb thorax{90, 65, 45};
inline constexpr Rgb abdomen{96, 70, 48};
inline constexpr Rgb leg{150, 140, 130};
inline constexpr Rgb wing{200, 200, 200};
inline constexpr Rgb tool{40, 70, 200};
}  // namespace palette

// ---------------------------------------------------------------------------
// Shapes in world mm

struct CapsuleShape {
    Vec2 a, b;
    double radius;
    Box bounds() const {
        Box bx;
        bx.include(a);
        bx.include(b);
        return bx.inflated(radius);
    }
    bool contains(Vec2 p) const { return distance_to_segment(p, a, b) <= radius; }
};

struct EllipseShape {
    Vec2 a, b;
    double width;
    Box bounds() const {
        Box bx;
        bx.include(a);
        bx.include(b);
        return bx.inflated(0.5 * width);
    }
    bool contains(Vec2 p) const {
        const double len = distance(a, b);
        if (len <= 0.0) return false;
        const Vec2 u = (b - a) / len;
        const Vec2 d = p - (a + b) * 0.5;
        const double s = dot(d, u) / (0.5 * len);
        const double t = cross(u, d) / (0.5 * width);
        return s * s + t * t <= 1.0;
    }
};

struct BandShape {  // oriented rectangle along a -> b
    Vec2 a, b;
    double width;
    Box bounds() const {
        Box bx;
        bx.include(a);
        bx.include(b);
        return bx.inflated(0.5 * width);
    }
    bool contains(Vec2 p) const {
        const double len = distance(a, b);
        if (len <= 0.0) return false;
        const Vec2 u = (b - a) / len;
        const Vec2 d = p - a;
        const double s = dot(d, u);
        return s >= 0.0 && s <= len && std::abs(cross(u, d)) <= 0.5 * width;
    }
};

struct DiscShape {
    Vec2 c;
    double radius;
    Box bounds() const { return Box{c, c}.inflated(radius); }
    bool contains(Vec2 p) const { return distance(p, c) <= radius; }
};

struct TriangleShape {
    Vec2 p0, p1, p2;
    Box bounds() const {
        Box bx;
        bx.include(p0);
        bx.include(p1);
        bx.include(p2);
        return bx;
    }
    bool contains(Vec2 p) const {
        const double d0 = cross(p1 - p0, p - p0);
        const double d1 = cross(p2 - p1, p - p1);
        const double d2 = cross(p0 - p2, p - p2);
        const bool neg = d0 < 0 || d1 < 0 || d2 < 0;
        const bool pos = d0 > 0 || d1 > 0 || d2 > 0;
        return !(neg && pos);
    }
};

// Part of the body outline between arc lengths s0 and s1.
struct OutlineShape {
    std::array<Vec2, kChainSize - kJunction> points;
    BodyProfile profile;
    double s0, s1;

    OutlineShape(const MosquitoSpecimen& m, double from, double to)
        : profile(m), s0(from), s1(to) {
        std::copy_n(m.chain.begin() + kJunction, points.size(), points.begin());
    }
    Box bounds() const {
        Box bx;
        for (const auto& p : points) bx.include(p);
        return bx.inflated(0.5 * std::max({profile.head_width, profile.thorax_width, profile.abdomen_width}));
    }
    bool contains(Vec2 p) const {
        const auto proj = project_onto_polyline(points, p);
        const double s = proj.arc_length;
        if (s < s0 || s >= s1) return false;
        return proj.distance <= 0.5 * profile.width(s);
    }
};

// ---------------------------------------------------------------------------
// Pixel <-> world mappers

struct OverheadMapper {
    OverheadCamera cam;
    Vec2 to_world(int x, int y) const { return cam.pixel_to_world({static_cast<double>(x), static_cast<double>(y)}); }
    Vec2 to_pixel(Vec2 w) const { return cam.world_to_pixel(w); }
};

struct OnboardMapper {
    OnboardCamera cam;
    Vec2 to_world(int x, int y) const { return cam.pixel_to_world({static_cast<double>(x), static_cast<double>(y)}); }
    Vec2 to_pixel(Vec2 w) const { return cam.world_to_pixel(w); }
};

template <typename Mapper>
Rect pixel_bounds(const Mapper& m, const Box& world, int width, int height) {
    Box px;
    for (Vec2 c : {world.lo, world.hi, Vec2{world.lo.x, world.hi.y}, Vec2{world.hi.x, world.lo.y}})
        px.include(m.to_pixel(c));
    const int x0 = std::max(0, static_cast<int>(std::floor(px.lo.x)) - 2);
    const int y0 = std::max(0, static_cast<int>(std::floor(px.lo.y)) - 2);
    const int x1 = std::min(width, static_cast<int>(std::ceil(px.hi.x)) + 3);
    const int y1 = std::min(height, static_cast<int>(std::ceil(px.hi.y)) + 3);
    if (x1 <= x0 || y1 <= y0) return {};
    return {x0, y0, x1 - x0, y1 - y0};
}

template <typename Shape, typename Mapper, typename Fn>
void rasterize(const Shape& shape, const Mapper& m, int width, int height, Fn&& fn) {
    const Rect r = pixel_bounds(m, shape.bounds(), width, height);
    for (int y = r.y; y < r.bottom(); ++y)
        for (int x = r.x; x < r.right(); ++x)
            if (shape.contains(m.to_world(x, y))) fn(x, y);
}

// ---------------------------------------------------------------------------
// Static workcell appearance

// Fixed-pattern sensor noise. The workcell itself is neutral grey, so its
// noise is luminance only; coloured objects also get chroma noise.
inline Rgb jitter(Rgb c, std::uint64_t seed, int x, int y, int amplitude = 5, bool chroma_noise = true) {
    const std::uint64_t h = hash_coords(seed, x, y);
    const int lum = static_cast<int>(h % static_cast<std::uint64_t>(2 * amplitude + 1)) - amplitude;
    Rgb out{};
    for (int ch = 0; ch < 3; ++ch) {
        const int chroma = chroma_noise ? static_cast<int>((h >> (16 + 8 * ch)) % 5) - 2 : 0;
        out[static_cast<std::size_t>(ch)] =
            static_cast<std::uint8_t>(std::clamp(c[static_cast<std::size_t>(ch)] + lum + chroma, 0, 255));
    }
    return out;
}

inline Rgb workcell_color(const WorkcellLayout& l, Vec2 w) {
    const double r = distance(w, l.cup_center);
    if (r <= l.cup_radius) {
        auto thread = [&](double v) {
            const double f = v / l.mesh_pitch - std::floor(v / l.mesh_pitch);
            return std::min(f, 1.0 - f) * l.mesh_pitch < 0.06;
        };
        return thread(w.x) || thread(w.y) ? palette::mesh_thread : palette::mesh_hole;
    }
    if (r <= l.cup_radius + 0.6) return palette::cup_rim;
    const double dy = std::abs(w.y - l.slot_axis_y());
    const double bf = l.blade_front_x();
    if (w.x >= bf && w.x <= bf + 2.0 * l.blade_thickness && dy <= 5.0)
        return dy <= 0.5 * l.notch_width ? palette::notch_gap : palette::blade;
    if (w.x >= l.cup_center.x + l.cup_radius + 0.6 && w.x < bf && dy <= 6.0) {
        if (w.x >= l.slot_start_x() && dy <= 0.5 * l.slot_width) return palette::slot;
        return palette::acrylic;
    }
    return palette::table;
}

inline void put(RasterImage& img, int x, int y, Rgb c) {
    std::uint8_t* p = img.pixel(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
}

inline void blend(RasterImage& img, int x, int y, Rgb c, double alpha) {
    std::uint8_t* p = img.pixel(x, y);
    for (int ch = 0; ch < 3; ++ch)
        p[ch] = static_cast<std::uint8_t>(std::lround((1.0 - alpha) * p[ch] + alpha * c[static_cast<std::size_t>(ch)]));
}

inline RasterImage render_overhead_background(const WorkcellLayout& layout, std::uint64_t seed) {
    const auto cam = OverheadCamera::from_layout(layout);
    const int w = layout.overhead_resolution.width, h = layout.overhead_resolution.height;
    RasterImage img(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            put(img, x, y, jitter(workcell_color(layout, cam.pixel_to_world({double(x), double(y)})), seed, x, y, 5, false));
    return img;
}

namespace detail {

struct BackgroundCache {
    std::mutex mutex;
    std::map<std::pair<std::string, std::uint64_t>, std::shared_ptr<const RasterImage>> entries;
};

inline BackgroundCache& background_cache() {
    static BackgroundCache cache;
    return cache;
}

inline std::string layout_key(const WorkcellLayout& l) {
    std::string key;
    auto add = [&key](double v) { key.append(reinterpret_cast<const char*>(&v), sizeof v); };
    for (double v : {l.cup_radius, l.cup_center_to_blades, l.mesh_pitch, l.slot_width, l.slot_length,
                     l.slot_depth, l.blade_thickness, l.notch_width, l.notch_depth, l.overhead_scale_um,
                     l.cup_center.x, l.cup_center.y, l.overhead_cup_pixel.x, l.overhead_cup_pixel.y,
                     l.overhead_distortion, double(l.overhead_resolution.width),
                     double(l.overhead_resolution.height)})
        add(v);
    return key;
}

}  // namespace detail

// Rendering the static background is the expensive part of an overhead frame,
// so it is memoised per (layout, seed).
inline std::shared_ptr<const RasterImage> cached_overhead_background(const WorkcellLayout& layout,
                                                                     std::uint64_t seed) {
    auto& cache = detail::background_cache();
    const auto key = std::make_pair(detail::layout_key(layout), seed);
    {
        std::lock_guard lock(cache.mutex);
        auto it = cache.entries.find(key);
        if (it != cache.entries.end()) return it->second;
    }
    auto img = std::make_shared<const RasterImage>(render_overhead_background(layout, seed));
    std::lock_guard lock(cache.mutex);
    if (cache.entries.size() >= 4) cache.entries.clear();
    return cache.entries.emplace(key, img).first->second;
}

// ---------------------------------------------------------------------------
// Specimen drawing

struct LegStroke {
    std::array<Vec2, 3> points;
};

// Three legs per side from the thorax; the side the specimen lies on has its
// legs folded closer to the body.
inline std::array<LegStroke, 6> leg_strokes(const MosquitoSpecimen& m) {
    std::array<LegStroke, 6> legs{};
    const Vec2 a = m.chain[kNeckRear], b = m.chain[kThoraxRear];
    const Vec2 axis = normalized(a - b);
    const Vec2 side{-axis.y, axis.x};
    const double fold = m.lying_side == LyingSide::left ? 1.0 : -1.0;
    const double reach[3] = {2.4, 2.8, 3.4};
    const double sweep[3] = {0.9, 0.1, -0.8};
    int n = 0;
    for (int sgn : {1, -1}) {
        const double ext = (sgn * fold > 0) ? 1.0 : 0.6;
        for (int i = 0; i < 3; ++i) {
            const Vec2 root = b + (a - b) * (0.3 + 0.2 * i) + side * (sgn * 0.3 * m.thorax_width);
            const Vec2 knee_dir = normalized(side * static_cast<double>(sgn) + axis * sweep[i]);
            const Vec2 knee = root + knee_dir * (0.45 * reach[i] * ext);
            const Vec2 foot = knee + normalized(knee_dir + axis * (sweep[i] - 0.6)) * (0.55 * reach[i] * ext);
            legs[static_cast<std::size_t>(n++)] = {{root, knee, foot}};
        }
    }
    return legs;
}

inline EllipseShape wing_shape(const MosquitoSpecimen& m) {
    const Vec2 a = m.chain[kNeckRear], tail = m.chain[kChainSize - 1];
    const Vec2 axis = normalized(a - tail);
    const Vec2 side{-axis.y, axis.x};
    const double sgn = m.lying_side == LyingSide::left ? 1.0 : -1.0;
    const Vec2 start = m.chain[kThoraxRear] + axis * 0.3 * m.link_length(6) + side * (0.25 * sgn);
    return {start, start - axis * (0.85 * m.body_length) + side * (0.35 * sgn), 0.8};
}

// Calls paint(shape, colour, label) in back-to-front order. Label Background
// marks strokes excluded from the ground truth (legs, wings).
template <typename Paint>
void for_each_specimen_shape(const MosquitoSpecimen& m, Paint&& paint) {
    paint(wing_shape(m), palette::wing, Category::background);
    for (const auto& leg : leg_strokes(m))
        for (int i = 0; i < 2; ++i) paint(CapsuleShape{leg.points[i], leg.points[i + 1], 0.02}, palette::leg, Category::background);
    for (int i = 0; i < kProboscisLinks; ++i) {
        paint(BandShape{m.chain[i], m.chain[i + 1], m.proboscis_diameter}, palette::proboscis, Category::proboscis);
        if (i > 0) paint(DiscShape{m.chain[i], 0.5 * m.proboscis_diameter}, palette::proboscis, Category::proboscis);
    }
    const BodyProfile prof(m);
    const double end = prof.length() + 1.0;
    paint(OutlineShape(m, prof.thorax_end(), end), palette::abdomen, Category::body);
    paint(OutlineShape(m, prof.head + prof.neck, prof.thorax_end()), palette::thorax, Category::body);
    paint(OutlineShape(m, prof.neck_mid(), prof.head + prof.neck), palette::neck, Category::body);
    paint(OutlineShape(m, prof.head, prof.neck_mid()), palette::neck, Category::head);
    paint(OutlineShape(m, -1.0, prof.head), palette::head, Category::head);
}

inline std::array<TriangleShape, 3> tool_shapes(Vec2 tip) {
    // jaw wedge with its apex at the tooltip, shaft running towards -y
    return {TriangleShape{tip, tip + Vec2{-0.5, -1.2}, tip + Vec2{0.5, -1.2}},
            TriangleShape{tip + Vec2{-0.5, -1.2}, tip + Vec2{0.5, -1.2}, tip + Vec2{0.5, -8.0}},
            TriangleShape{tip + Vec2{-0.5, -1.2}, tip + Vec2{0.5, -8.0}, tip + Vec2{-0.5, -8.0}}};
}

template <typename Mapper>
void draw_scene_objects(const Scene& scene, const Mapper& m, RasterImage& img, LabelMask* labels,
                        std::optional<Vec2> tool, std::uint64_t noise_seed) {
    const int w = img.width(), h = img.height();
    for (const auto& d : scene.debris)
        rasterize(DiscShape{d.center, d.radius}, m, w, h,
                  [&](int x, int y) { put(img, x, y, jitter(d.color, noise_seed ^ 0xD5ull, x, y, 3)); });
    if (scene.specimen) {
        for_each_specimen_shape(*scene.specimen, [&](const auto& shape, Rgb color, Category cat) {
            const bool is_wing = color == palette::wing;
            rasterize(shape, m, w, h, [&](int x, int y) {
                if (is_wing) {
                    blend(img, x, y, color, 0.35);
                    return;
                }
                put(img, x, y, jitter(color, noise_seed ^ 0x5Bull, x, y, 3));
                if (labels && cat != Category::background) labels->at(x, y) = cat;
            });
        });
    }
    if (tool)
        for (const auto& t : tool_shapes(*tool))
            rasterize(t, m, w, h, [&](int x, int y) { put(img, x, y, jitter(palette::tool, noise_seed ^ 0x7Cull, x, y, 3)); });
}

// ---------------------------------------------------------------------------
// Public renderers

inline RasterImage render_overhead(const Scene& scene) {
    RasterImage img = *cached_overhead_background(scene.layout, scene.background_seed);
    const OverheadMapper m{OverheadCamera::from_layout(scene.layout)};
    draw_scene_objects(scene, m, img, nullptr, scene.overhead_tool, scene.background_seed);
    return img;
}

// Ground-truth categories as seen by the overhead camera.
inline LabelMask render_overhead_labels(const Scene& scene) {
    const auto& res = scene.layout.overhead_resolution;
    LabelMask labels(res.width, res.height, Category::background);
    if (!scene.specimen) return labels;
    const OverheadMapper m{OverheadCamera::from_layout(scene.layout)};
    for_each_specimen_shape(*scene.specimen, [&](const auto& shape, Rgb, Category cat) {
        if (cat == Category::background) return;
        rasterize(shape, m, res.width, res.height, [&](int x, int y) { labels.at(x, y) = cat; });
    });
    return labels;
}

inline LabelMask render_onboard_labels(const Scene& scene, Vec2 tooltip) {
    const auto& res = scene.layout.onboard_resolution;
    LabelMask labels(res.width, res.height, Category::background);
    if (!scene.specimen) return labels;
    const OnboardMapper m{OnboardCamera::at_tooltip(scene.layout, tooltip)};
    for_each_specimen_shape(*scene.specimen, [&](const auto& shape, Rgb, Category cat) {
        if (cat == Category::background) return;
        rasterize(shape, m, res.width, res.height, [&](int x, int y) { labels.at(x, y) = cat; });
    });
    return labels;
}

struct OnboardFrame {
    RasterImage image;
    LabelMask labels;
};

inline OnboardFrame render_onboard(const Scene& scene, Vec2 tooltip) {
    const auto& res = scene.layout.onboard_resolution;
    const OnboardMapper m{OnboardCamera::at_tooltip(scene.layout, tooltip)};
    OnboardFrame f{RasterImage(res.width, res.height, 3), LabelMask(res.width, res.height, Category::background)};
    const std::uint64_t seed = scene.background_seed ^ 0x0B0A4Dull;
    for (int y = 0; y < res.height; ++y)
        for (int x = 0; x < res.width; ++x)
            put(f.image, x, y, jitter(workcell_color(scene.layout, m.to_world(x, y)), seed, x, y, 5, false));
    draw_scene_objects(scene, m, f.image, &f.labels, tooltip, seed);
    return f;
}

inline OnboardFrame render_onboard(const Scene& scene, const RobotState& robot) {
    return render_onboard(scene, robot.tooltip().xy());
}

// Calibration target seen by the onboard camera: dark lines with a Gaussian
// cross-section on a white card, pinned to the world.
inline RasterImage render_onboard_grid(const WorkcellLayout& layout, Vec2 tooltip, double pitch_mm = 5.0,
                                       std::uint64_t seed = 1) {
    const auto& res = layout.onboard_resolution;
    const OnboardMapper m{OnboardCamera::at_tooltip(layout, tooltip)};
    RasterImage img(res.width, res.height, 1);
    const double sigma = 0.06;
    auto line = [&](double v) {
        const double f = v / pitch_mm - std::floor(v / pitch_mm + 0.5);
        const double d = f * pitch_mm;
        return std::exp(-d * d / (2.0 * sigma * sigma));
    };
    for (int y = 0; y < res.height; ++y)
        for (int x = 0; x < res.width; ++x) {
            const Vec2 w = m.to_world(x, y);
            const double ink = std::max(line(w.x), line(w.y));
            const int noise = static_cast<int>(hash_coords(seed, x, y) % 5) - 2;
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(static_cast<int>(std::lround(235.0 - 200.0 * ink)) + noise, 0, 255));
        }
    return img;
}

}  // namespace mospick
