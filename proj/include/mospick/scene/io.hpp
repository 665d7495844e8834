#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "mospick/core/errors.hpp"
#include "mospick/core/json_fields.hpp"
#include "mospick/scene/layout.hpp"
#include "mospick/scene/scene.hpp"
#include "mospick/scene/specimen.hpp"

namespace mospick {

inline constexpr const char* kSceneSchema = "mospick.scene/1";

inline void to_json(json& j, const Resolution& r) { j = json::array({r.width, r.height}); }
inline void from_json(const json& j, Resolution& r) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("expected [width, height]");
    r = {j[0].get<int>(), j[1].get<int>()};
}

inline void to_json(json& j, const Range& r) { j = json::array({r.min, r.max}); }
inline void from_json(const json& j, Range& r) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("expected [min, max]");
    r = {j[0].get<double>(), j[1].get<double>()};
}

inline void to_json(json& j, const WorkcellLayout& l) {
    j = json{{"cup_radius", l.cup_radius},
             {"cup_center_to_blades", l.cup_center_to_blades},
             {"mesh_pitch", l.mesh_pitch},
             {"slot_width", l.slot_width},
             {"slot_length", l.slot_length},
             {"slot_depth", l.slot_depth},
             {"blade_thickness", l.blade_thickness},
             {"notch_width", l.notch_width},
             {"notch_depth", l.notch_depth},
             {"overhead_resolution", l.overhead_resolution},
             {"onboard_resolution", l.onboard_resolution},
             {"overhead_scale_um", l.overhead_scale_um},
             {"onboard_scale_um", l.onboard_scale_um},
             {"cup_center", l.cup_center},
             {"surface_z", l.surface_z},
             {"overhead_cup_pixel", l.overhead_cup_pixel},
             {"overhead_distortion", l.overhead_distortion},
             {"onboard_view_offset", l.onboard_view_offset}};
}

inline void from_json(const json& j, WorkcellLayout& l) {
    ObjectReader r(j, "layout");
    r.field("cup_radius", l.cup_radius)
        .field("cup_center_to_blades", l.cup_center_to_blades)
        .field("mesh_pitch", l.mesh_pitch)
        .field("slot_width", l.slot_width)
        .field("slot_length", l.slot_length)
        .field("slot_depth", l.slot_depth)
        .field("blade_thickness", l.blade_thickness)
        .field("notch_width", l.notch_width)
        .field("notch_depth", l.notch_depth)
        .field("overhead_resolution", l.overhead_resolution)
        .field("onboard_resolution", l.onboard_resolution)
        .field("overhead_scale_um", l.overhead_scale_um)
        .field("onboard_scale_um", l.onboard_scale_um)
        .field("cup_center", l.cup_center)
        .field("surface_z", l.surface_z)
        .field("overhead_cup_pixel", l.overhead_cup_pixel)
        .field("overhead_distortion", l.overhead_distortion)
        .field("onboard_view_offset", l.onboard_view_offset);
    r.finish();
    l.validate();
}

inline void to_json(json& j, const SpecimenVariability& v) {
    j = json{{"proboscis_length", v.proboscis_length},
             {"head_length", v.head_length},
             {"body_length", v.body_length},
             {"heading_half_angle_deg", v.heading_half_angle_deg},
             {"position_radius", v.position_radius},
             {"proboscis_curvature", v.proboscis_curvature},
             {"body_curvature", v.body_curvature},
             {"random_lying_side", v.random_lying_side}};
}

inline void from_json(const json& j, SpecimenVariability& v) {
    ObjectReader r(j, "variability");
    r.field("proboscis_length", v.proboscis_length)
        .field("head_length", v.head_length)
        .field("body_length", v.body_length)
        .field("heading_half_angle_deg", v.heading_half_angle_deg)
        .field("position_radius", v.position_radius)
        .field("proboscis_curvature", v.proboscis_curvature)
        .field("body_curvature", v.body_curvature)
        .field("random_lying_side", v.random_lying_side);
    r.finish();
    v.validate();
}

inline void to_json(json& j, const MosquitoSpecimen& m) {
    json chain = json::array(), lift = json::array();
    for (const auto& p : m.chain) chain.push_back(p);
    for (double z : m.lift) lift.push_back(z);
    j = json{{"id", m.id},
             {"proboscis_length", m.proboscis_length},
             {"proboscis_diameter", m.proboscis_diameter},
             {"neck_length", m.neck_length},
             {"neck_width", m.neck_width},
             {"head_length", m.head_length},
             {"head_width", m.head_width},
             {"body_length", m.body_length},
             {"thorax_width", m.thorax_width},
             {"abdomen_width", m.abdomen_width},
             {"lying_side", m.lying_side == LyingSide::left ? "left" : "right"},
             {"position", m.position},
             {"heading", m.heading},
             {"proboscis_curvature", m.proboscis_curvature},
             {"body_curvature", m.body_curvature},
             {"chain", chain},
             {"lift", lift}};
}

inline void from_json(const json& j, MosquitoSpecimen& m) {
    ObjectReader r(j, "specimen");
    std::string side = "left";
    std::vector<Vec2> chain;
    std::vector<double> lift;
    r.field("id", m.id)
        .field("proboscis_length", m.proboscis_length)
        .field("proboscis_diameter", m.proboscis_diameter)
        .field("neck_length", m.neck_length)
        .field("neck_width", m.neck_width)
        .field("head_length", m.head_length)
        .field("head_width", m.head_width)
        .field("body_length", m.body_length)
        .field("thorax_width", m.thorax_width)
        .field("abdomen_width", m.abdomen_width)
        .field("lying_side", side)
        .field("position", m.position)
        .field("heading", m.heading)
        .field("proboscis_curvature", m.proboscis_curvature)
        .field("body_curvature", m.body_curvature)
        .field("chain", chain)
        .field("lift", lift);
    r.finish();
    if (side != "left" && side != "right") throw ConfigError("specimen.lying_side must be left or right");
    m.lying_side = side == "left" ? LyingSide::left : LyingSide::right;
    if (chain.empty()) {
        build_chain(m);
        return;
    }
    if (chain.size() != kChainSize) throw ConfigError("specimen.chain must have 10 points");
    std::copy(chain.begin(), chain.end(), m.chain.begin());
    if (!lift.empty()) {
        if (lift.size() != kChainSize) throw ConfigError("specimen.lift must have 10 values");
        std::copy(lift.begin(), lift.end(), m.lift.begin());
    }
}

inline void to_json(json& j, const Debris& d) {
    j = json{{"center", d.center}, {"radius", d.radius}, {"color", d.color}};
}
inline void from_json(const json& j, Debris& d) {
    ObjectReader r(j, "debris");
    r.field("center", d.center).field("radius", d.radius).field("color", d.color);
    r.finish();
}

inline json scene_to_json(const Scene& s) {
    json j{{"schema", kSceneSchema},
           {"layout", s.layout},
           {"specimen", s.specimen ? json(*s.specimen) : json(nullptr)},
           {"debris", s.debris},
           {"overhead_tool", s.overhead_tool ? json(*s.overhead_tool) : json(nullptr)},
           {"background_seed", s.background_seed},
           {"flipped", s.flipped},
           {"head_removed", s.head_removed}};
    return j;
}

inline Scene scene_from_json(const json& j) {
    Scene s;
    ObjectReader r(j, "scene");
    std::string schema;
    json specimen = nullptr, tool = nullptr;
    r.field("schema", schema)
        .field("layout", s.layout)
        .field("specimen", specimen)
        .field("debris", s.debris)
        .field("overhead_tool", tool)
        .field("background_seed", s.background_seed)
        .field("flipped", s.flipped)
        .field("head_removed", s.head_removed);
    r.finish();
    if (schema != kSceneSchema) throw ConfigError("scene: unsupported schema '" + schema + "'");
    if (!specimen.is_null()) s.specimen = specimen.get<MosquitoSpecimen>();
    if (!tool.is_null()) s.overhead_tool = tool.get<Vec2>();
    return s;
}

inline void save_scene(const std::filesystem::path& path, const Scene& s) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << scene_to_json(s).dump(2) << '\n';
}

inline Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return scene_from_json(j);
}

}  // namespace mospick
