#pragma once

// Fixed workcell geometry and the two camera models. World coordinates are
// the robot frame in mm: x points from the cup towards the blades, z is
// height.

#include <cmath>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"

namespace mospick {

struct Resolution {
    int width = 0;
    int height = 0;
    friend constexpr bool operator==(Resolution, Resolution) = default;
};

struct WorkcellLayout {
    double cup_radius = 10.0;
    double cup_center_to_blades = 23.0;
    double mesh_pitch = 0.75;
    double slot_width = 1.25;
    double slot_length = 3.0;
    double slot_depth = 1.5;
    double blade_thickness = 0.05;
    double notch_width = 0.5;
    double notch_depth = 1.0;
    Resolution overhead_resolution{2560, 1922};
    Resolution onboard_resolution{1600, 1200};
    double overhead_scale_um = 15.0;
    double onboard_scale_um = 12.0;

    Vec2 cup_center{30.0, 50.0};
    double surface_z = 20.0;
    Vec2 overhead_cup_pixel{900.0, 961.0};
    double overhead_distortion = 2e-9;  // radial, px^-2
    Vec2 onboard_view_offset{-3.5, 0.0};  // view center relative to the tooltip

    friend bool operator==(const WorkcellLayout&, const WorkcellLayout&) = default;

    void validate() const {
        const double lengths[] = {cup_radius,      cup_center_to_blades, mesh_pitch,
                                  slot_width,      slot_length,          slot_depth,
                                  blade_thickness, notch_width,          notch_depth,
                                  overhead_scale_um, onboard_scale_um};
        for (double v : lengths)
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("layout lengths must be positive");
        if (!(notch_width < slot_width)) throw ConfigError("notch must be narrower than the slot");
        if (!(blade_thickness < notch_width)) throw ConfigError("blade must be thinner than the notch");
        if (overhead_resolution.width <= 0 || overhead_resolution.height <= 0 ||
            onboard_resolution.width <= 0 || onboard_resolution.height <= 0)
            throw ConfigError("camera resolutions must be positive");
        if (!std::isfinite(overhead_distortion)) throw ConfigError("distortion must be finite");
    }

    double blade_front_x() const { return cup_center.x + cup_center_to_blades; }
    // Mid-plane of the two-blade stack; the neck must straddle it.
    double cut_plane_x() const { return blade_front_x() + blade_thickness; }
    double slot_axis_y() const { return cup_center.y; }
    double slot_start_x() const { return blade_front_x() - slot_length; }
    // Longitudinal tolerance of the neck centre about the cut plane.
    double neck_window(double neck_length) const { return 0.5 * (neck_length - 2.0 * blade_thickness); }
};

// Top-down pinhole approximated as a scaled orthographic view with radial
// distortion about the image centre.
struct OverheadCamera {
    Resolution resolution;
    double scale_mm = 0.015;
    Vec2 anchor_world{};
    Vec2 anchor_pixel{};
    double kappa = 0.0;

    static OverheadCamera from_layout(const WorkcellLayout& l) {
        return {l.overhead_resolution, l.overhead_scale_um * 1e-3, l.cup_center, l.overhead_cup_pixel,
                l.overhead_distortion};
    }

    Vec2 center() const { return {(resolution.width - 1) * 0.5, (resolution.height - 1) * 0.5}; }

    Vec2 ideal_pixel(Vec2 w) const { return anchor_pixel + (w - anchor_world) / scale_mm; }
    Vec2 ideal_to_world(Vec2 p) const { return anchor_world + (p - anchor_pixel) * scale_mm; }

    Vec2 distort(Vec2 p) const {
        const Vec2 d = p - center();
        return center() + d * (1.0 + kappa * dot(d, d));
    }
    Vec2 undistort(Vec2 p) const {
        const Vec2 c = center();
        const Vec2 pd = p - c;
        const double rd = norm(pd);
        if (rd == 0.0 || kappa == 0.0) return p;
        // Newton on r + kappa r^3 = rd
        double r = rd;
        for (int i = 0; i < 30; ++i) {
            const double step = (r + kappa * r * r * r - rd) / (1.0 + 3.0 * kappa * r * r);
            r -= step;
            if (std::abs(step) < 1e-12 * rd) break;
        }
        return c + pd * (r / rd);
    }

    Vec2 world_to_pixel(Vec2 w) const { return distort(ideal_pixel(w)); }
    Vec2 pixel_to_world(Vec2 p) const { return ideal_to_world(undistort(p)); }
};

// Robot-mounted camera looking straight down; image axes follow world x/y.
struct OnboardCamera {
    Resolution resolution;
    double scale_mm = 0.012;
    Vec2 view_center{};

    static OnboardCamera at_tooltip(const WorkcellLayout& l, Vec2 tooltip) {
        return {l.onboard_resolution, l.onboard_scale_um * 1e-3, tooltip + l.onboard_view_offset};
    }

    Vec2 half_extent_px() const { return {resolution.width * 0.5 - 0.5, resolution.height * 0.5 - 0.5}; }
    Vec2 world_to_pixel(Vec2 w) const { return half_extent_px() + (w - view_center) / scale_mm; }
    Vec2 pixel_to_world(Vec2 p) const { return view_center + (p - half_extent_px()) * scale_mm; }
};

}  // namespace mospick
