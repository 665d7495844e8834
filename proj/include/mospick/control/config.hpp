#pragma once

#include <string>

#include "mospick/core/errors.hpp"
#include "mospick/core/json_fields.hpp"
#include "mospick/segment/segmenter.hpp"

namespace mospick::control {

struct ControllerConfig {
    double approach_standoff = 5.0;
    double focus_descent = 3.0;
    double pregrasp_hover = 2.0;
    double drag_lift = 0.8;
    double drag_stop = 1.5;       // tooltip distance short of the blade front
    double align_length = 6.0;    // straight run along the slot axis before the stop
    double place_raise = 1.3;
    double place_descent = 3.0;
    double junction_to_neck = 0.65;  // nominal head length plus half the neck
    double blade_clearance = -1.0;   // negative: derived from the layout
    Vec3 home{37.0, 50.0, 30.0};
    double capture_radius = 0.15;
    int edge_dilation = 5;
    bool pipelined_vision = true;
    double overhead_vision_s = 0.1;
    double onboard_vision_s = 0.08;  // per onboard frame

    friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;

    double clearance(double blade_thickness) const {
        return blade_clearance >= 0.0 ? blade_clearance : drag_stop + blade_thickness + junction_to_neck;
    }

    void validate() const {
        for (double v : {approach_standoff, focus_descent, pregrasp_hover, drag_lift, drag_stop, align_length, place_raise,
                         place_descent, junction_to_neck, capture_radius})
            if (!(v > 0.0)) throw ConfigError("controller distances must be positive");
        if (!(place_descent > place_raise)) throw ConfigError("place descent must exceed the place raise");
        if (edge_dilation < 1) throw ConfigError("edge dilation must be at least 1 px");
        if (!(overhead_vision_s >= 0.0) || !(onboard_vision_s >= 0.0)) throw ConfigError("vision times must be non-negative");
    }
};

struct NoiseProfile {
    std::string name = "default";
    double vision_sigma_mm = 0.0;     // along the proboscis for the grasp, along the groove for the junction
    bool foreshortening = false;
    double p_residual = 0.0;
    segment::LabelNoise label_noise{};
    double landmark_sigma_mm = 0.0;   // blade and slot referencing bias

    friend bool operator==(const NoiseProfile&, const NoiseProfile&) = default;

    void validate() const {
        if (!(vision_sigma_mm >= 0.0) || !(landmark_sigma_mm >= 0.0)) throw ConfigError("noise sigmas must be non-negative");
        if (!(p_residual >= 0.0 && p_residual <= 1.0)) throw ConfigError("p_residual must lie in [0, 1]");
        if (!(label_noise.flip_probability >= 0.0 && label_noise.flip_probability <= 1.0) ||
            label_noise.boundary_erosion_px < 0)
            throw ConfigError("invalid label noise");
    }
};

inline void to_json(json& j, const ControllerConfig& c) {
    j = {{"approach_standoff", c.approach_standoff},
         {"focus_descent", c.focus_descent},
         {"pregrasp_hover", c.pregrasp_hover},
         {"drag_lift", c.drag_lift},
         {"drag_stop", c.drag_stop},
         {"align_length", c.align_length},
         {"place_raise", c.place_raise},
         {"place_descent", c.place_descent},
         {"junction_to_neck", c.junction_to_neck},
         {"blade_clearance", c.blade_clearance},
         {"home", c.home},
         {"capture_radius", c.capture_radius},
         {"edge_dilation", c.edge_dilation},
         {"pipelined_vision", c.pipelined_vision},
         {"overhead_vision_s", c.overhead_vision_s},
         {"onboard_vision_s", c.onboard_vision_s}};
}

inline void from_json(const json& j, ControllerConfig& c) {
    ObjectReader(j, "controller")
        .field("approach_standoff", c.approach_standoff)
        .field("focus_descent", c.focus_descent)
        .field("pregrasp_hover", c.pregrasp_hover)
        .field("drag_lift", c.drag_lift)
        .field("drag_stop", c.drag_stop)
        .field("align_length", c.align_length)
        .field("place_raise", c.place_raise)
        .field("place_descent", c.place_descent)
        .field("junction_to_neck", c.junction_to_neck)
        .field("blade_clearance", c.blade_clearance)
        .field("home", c.home)
        .field("capture_radius", c.capture_radius)
        .field("edge_dilation", c.edge_dilation)
        .field("pipelined_vision", c.pipelined_vision)
        .field("overhead_vision_s", c.overhead_vision_s)
        .field("onboard_vision_s", c.onboard_vision_s)
        .finish();
    c.validate();
}

inline void to_json(json& j, const NoiseProfile& n) {
    j = {{"name", n.name},
         {"vision_sigma_mm", n.vision_sigma_mm},
         {"foreshortening", n.foreshortening},
         {"p_residual", n.p_residual},
         {"label_flip_probability", n.label_noise.flip_probability},
         {"label_boundary_erosion_px", n.label_noise.boundary_erosion_px},
         {"landmark_sigma_mm", n.landmark_sigma_mm}};
}

inline void from_json(const json& j, NoiseProfile& n) {
    ObjectReader(j, "noise")
        .field("name", n.name)
        .field("vision_sigma_mm", n.vision_sigma_mm)
        .field("foreshortening", n.foreshortening)
        .field("p_residual", n.p_residual)
        .field("label_flip_probability", n.label_noise.flip_probability)
        .field("label_boundary_erosion_px", n.label_noise.boundary_erosion_px)
        .field("landmark_sigma_mm", n.landmark_sigma_mm)
        .finish();
    n.validate();
}

}  // namespace mospick::control
