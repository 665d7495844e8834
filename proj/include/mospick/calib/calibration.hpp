#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mospick/calib/bernstein.hpp"
#include "mospick/core/errors.hpp"
#include "mospick/core/image.hpp"
#include "mospick/robot/motion.hpp"
#include "mospick/scene/render.hpp"
#include "mospick/vision/core.hpp"

namespace mospick::calib {

// Otsu on HSV saturation, largest component, lowest pixel (max y, then
// smallest x).
inline Vec2 detect_tooltip(const RasterImage& img) {
    const RasterImage sat = img.channels() == 3 ? vision::rgb_to_hsv_saturation(img) : img;
    vision::OtsuResult otsu;
    try {
        otsu = vision::otsu_threshold(sat);
    } catch (const DegenerateHistogramError&) {
        throw DetectionError("no tool in the image (flat saturation histogram)");
    }
    const auto cl = vision::label_components(otsu.mask);
    const auto stats = vision::component_stats(cl);
    if (stats.empty()) throw DetectionError("no foreground component");
    const auto best = std::max_element(stats.begin(), stats.end(), [](const auto& a, const auto& b) { return a.area < b.area; });
    const Rect& bb = best->bbox;
    for (int y = bb.bottom() - 1; y >= bb.y; --y)
        for (int x = bb.x; x < bb.right(); ++x)
            if (cl.labels.at(x, y) == best->label) return {double(x), double(y)};
    throw DetectionError("empty component");
}

struct GridSpec {
    double x0 = 20.0, x1 = 50.0;  // mm, robot frame
    double y0 = 38.0, y1 = 62.0;
    int nx = 7, ny = 7;
    double z = 25.0;

    std::vector<Vec3> points() const {
        if (nx < 2 || ny < 2) throw ParameterError("calibration grid needs at least 2 points per axis");
        std::vector<Vec3> out;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                out.push_back({x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1), z});
        return out;
    }
};

// Tooltip pixel for a robot pose, or nothing when detection fails.
using TooltipDetector = std::function<std::optional<Vec2>(const Scene&, Vec3 tooltip, int index)>;

// Projects the true tooltip through the camera model.
inline TooltipDetector exact_detector() {
    return [](const Scene& s, Vec3 tip, int) -> std::optional<Vec2> {
        return OverheadCamera::from_layout(s.layout).world_to_pixel(tip.xy());
    };
}

// Renders the tool into the overhead frame and runs detect_tooltip.
inline TooltipDetector image_detector() {
    return [](const Scene& s, Vec3 tip, int) -> std::optional<Vec2> {
        Scene shot = s;
        shot.overhead_tool = tip.xy();
        try {
            return detect_tooltip(render_overhead(shot));
        } catch (const DetectionError&) {
            return std::nullopt;
        }
    };
}

// Wraps a detector so the listed grid indices fail, as if occluded.
inline TooltipDetector occluding(TooltipDetector inner, std::vector<int> blocked) {
    return [inner = std::move(inner), blocked = std::move(blocked)](const Scene& s, Vec3 tip, int i) -> std::optional<Vec2> {
        if (std::find(blocked.begin(), blocked.end(), i) != blocked.end()) return std::nullopt;
        return inner(s, tip, i);
    };
}

struct AcquisitionFailure {
    int index = 0;
    Vec3 commanded{};
};

struct Acquisition {
    std::vector<CalibrationPair> pairs;
    std::vector<AcquisitionFailure> failures;
};

inline Acquisition acquire_grid(Robot& robot, const Scene& scene, const GridSpec& grid, const TooltipDetector& detect) {
    const auto pts = grid.points();
    for (const auto& p : pts)
        if (!within_travel(p)) throw MotionError("calibration grid leaves the axis travel");
    Acquisition acq;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        robot.move(pts[i]);
        const auto& enc = robot.state().encoders;
        if (auto px = detect(scene, robot.state().tooltip(), static_cast<int>(i)))
            acq.pairs.push_back({*px, {static_cast<double>(enc.x), static_cast<double>(enc.y)}});
        else
            acq.failures.push_back({static_cast<int>(i), pts[i]});
    }
    if (acq.failures.size() * 5 > pts.size())
        throw AcquisitionError(std::to_string(acq.failures.size()) + " of " + std::to_string(pts.size()) +
                               " grid points failed tooltip detection");
    return acq;
}

// ---------------------------------------------------------------------------
// Robot-mounted camera

// The tooltip is fixed in the onboard image; its pixel comes from the camera
// mount rather than from a measurement.
inline Vec2 onboard_tooltip_pixel(const WorkcellLayout& l) {
    const Vec2 any{0.0, 0.0};
    return OnboardCamera::at_tooltip(l, any).world_to_pixel(any);
}

enum class Axis : std::uint8_t { x, y };

struct ShiftParams {
    int search_radius_px = 200;
    int row_step = 2;          // subsampling across the shift axis
    double min_peak = 0.5;     // NCC confidence floor
};

struct ShiftEstimate {
    double shift_px = 0.0;  // content displacement from before to after
    double peak = 0.0;
};

namespace detail {

inline std::vector<float> luminance(const RasterImage& img) {
    std::vector<float> out(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            float v = 0.f;
            for (int c = 0; c < img.channels(); ++c) v += img.at(x, y, c);
            out[static_cast<std::size_t>(y) * img.width() + x] = v / img.channels();
        }
    return out;
}

}  // namespace detail

// Normalized cross-correlation over integer shifts along one axis with a
// parabolic fit around the peak.
inline ShiftEstimate measure_shift(const RasterImage& before, const RasterImage& after, Axis axis,
                                   const ShiftParams& p = {}) {
    if (before.width() != after.width() || before.height() != after.height() || before.channels() != after.channels())
        throw ShapeError("calibration images differ in shape");
    const bool ax = axis == Axis::x;
    const int len = ax ? before.width() : before.height();
    const int across = ax ? before.height() : before.width();
    const int r = p.search_radius_px;
    if (r < 1 || len <= 2 * r + 8) throw ParameterError("search radius too large for the image");
    const auto a = detail::luminance(before), b = detail::luminance(after);
    const int w = before.width();
    auto at = [&](const std::vector<float>& img, int along, int perp) {
        return ax ? img[static_cast<std::size_t>(perp) * w + along] : img[static_cast<std::size_t>(along) * w + perp];
    };
    const int lo = r, hi = len - r;  // reference window along the axis
    const int step = std::max(1, p.row_step);
    std::vector<double> score(static_cast<std::size_t>(2 * r + 1));
    for (int d = -r; d <= r; ++d) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        long long n = 0;
        for (int q = 0; q < across; q += step)
            for (int t = lo; t < hi; ++t) {
                const double va = at(a, t, q), vb = at(b, t + d, q);
                sa += va;
                sb += vb;
                saa += va * va;
                sbb += vb * vb;
                sab += va * vb;
                ++n;
            }
        const double cov = sab - sa * sb / n;
        const double den = std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
        score[static_cast<std::size_t>(d + r)] = den > 0 ? cov / den : 0.0;
    }
    std::size_t k = 0;
    for (std::size_t i = 1; i < score.size(); ++i)
        if (score[i] > score[k]) k = i;
    ShiftEstimate e{static_cast<double>(k) - r, score[k]};
    if (e.peak < p.min_peak) throw CalibrationError("correlation peak below the confidence floor");
    if (k > 0 && k + 1 < score.size()) {
        const double l = score[k - 1], c = score[k], rr = score[k + 1];
        const double den = l - 2.0 * c + rr;
        if (den < 0.0) e.shift_px += 0.5 * (l - rr) / den;
    }
    return e;
}

struct AxisScale {
    Axis axis = Axis::x;
    double counts_per_px = 0.0;  // commanded counts per pixel of content shift
    double shift_px = 0.0;
    double peak = 0.0;
};

inline AxisScale calibrate_onboard_scale(const RasterImage& before, const RasterImage& after, Axis axis,
                                         double commanded_counts, const ShiftParams& p = {}) {
    if (commanded_counts == 0.0) throw CalibrationError("zero commanded displacement");
    const auto s = measure_shift(before, after, axis, p);
    if (std::abs(s.shift_px) < 0.5) throw CalibrationError("zero measured displacement");
    return {axis, commanded_counts / s.shift_px, s.shift_px, s.peak};
}

struct OnboardScale {
    double counts_per_px_x = 0.0;
    double counts_per_px_y = 0.0;
    double pitch_mm = 5.0;

    friend bool operator==(const OnboardScale&, const OnboardScale&) = default;

    void validate() const {
        for (double v : {counts_per_px_x, counts_per_px_y})
            if (!std::isfinite(v) || v == 0.0) throw CalibrationError("onboard scale must be finite and nonzero");
    }

    // Robot displacement (counts) from the tooltip to an image feature that
    // sits `delta_px` away from the tooltip pixel.
    Vec2 feature_offset_counts(Vec2 delta_px) const {
        return {-delta_px.x * counts_per_px_x, -delta_px.y * counts_per_px_y};
    }
};

inline void to_json(json& j, const OnboardScale& s) {
    j = {{"counts_per_px_x", s.counts_per_px_x}, {"counts_per_px_y", s.counts_per_px_y}, {"pitch_mm", s.pitch_mm}};
}
inline void from_json(const json& j, OnboardScale& s) {
    ObjectReader(j, "onboard_scale")
        .field("counts_per_px_x", s.counts_per_px_x)
        .field("counts_per_px_y", s.counts_per_px_y)
        .field("pitch_mm", s.pitch_mm)
        .finish();
    s.validate();
}

// Moves the robot by `move_mm` along each axis over the grid target and
// measures the pixel motion.
inline OnboardScale calibrate_onboard(Robot& robot, const WorkcellLayout& layout, Vec3 start, double move_mm = 1.0,
                                      double pitch_mm = 5.0, const ShiftParams& p = {}) {
    OnboardScale out;
    out.pitch_mm = pitch_mm;
    for (Axis axis : {Axis::x, Axis::y}) {
        robot.move(start);
        const auto e0 = robot.state().encoders;
        const RasterImage before = render_onboard_grid(layout, robot.state().tooltip().xy(), pitch_mm);
        const Vec3 to = axis == Axis::x ? Vec3{start.x + move_mm, start.y, start.z} : Vec3{start.x, start.y + move_mm, start.z};
        robot.move(to);
        const auto e1 = robot.state().encoders;
        const RasterImage after = render_onboard_grid(layout, robot.state().tooltip().xy(), pitch_mm);
        const double counts = static_cast<double>(axis == Axis::x ? e1.x - e0.x : e1.y - e0.y);
        const auto s = calibrate_onboard_scale(before, after, axis, counts, p);
        (axis == Axis::x ? out.counts_per_px_x : out.counts_per_px_y) = s.counts_per_px;
    }
    out.validate();
    return out;
}

}  // namespace mospick::calib
