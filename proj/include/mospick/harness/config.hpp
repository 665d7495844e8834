#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mospick/control/controller.hpp"
#include "mospick/core/json_fields.hpp"
#include "mospick/robot/motion.hpp"
#include "mospick/scene/io.hpp"
#include "mospick/vision/core.hpp"

namespace mospick {

namespace vision {

inline void to_json(json& j, const KernelSize& k) { j = json::array({k.width, k.height}); }
inline void from_json(const json& j, KernelSize& k) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("kernel size must be [width, height]");
    k = {j[0].get<int>(), j[1].get<int>()};
}

inline void to_json(json& j, const PipelineParams& p) {
    j = {{"gamma", p.gamma},
         {"blur_sigma", p.blur_sigma},
         {"blur_kernel", p.blur_kernel},
         {"erode_kernel", p.erode_kernel},
         {"open_kernel", p.open_kernel},
         {"area_threshold", p.area_threshold}};
}

inline void from_json(const json& j, PipelineParams& p) {
    ObjectReader(j, "pipeline")
        .field("gamma", p.gamma)
        .field("blur_sigma", p.blur_sigma)
        .field("blur_kernel", p.blur_kernel)
        .field("erode_kernel", p.erode_kernel)
        .field("open_kernel", p.open_kernel)
        .field("area_threshold", p.area_threshold)
        .finish();
    try {
        p.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("pipeline: ") + e.what());
    }
}

}  // namespace vision

namespace harness {

inline constexpr const char* kConfigSchema = "mospick.config/1";
inline constexpr const char* kOutEnv = "MOSPICK_OUT";

struct HarnessConfig {
    std::string name = "default";
    WorkcellLayout layout;
    vision::PipelineParams pipeline = [] {
        vision::PipelineParams p;
        p.area_threshold = 0.0002;  // the mosquito covers ~0.1% of the cup crop
        return p;
    }();
    control::ControllerConfig controller;
    MotionProfile motion;
    control::NoiseProfile noise;
    SpecimenVariability variability;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string notes;
};

inline void to_json(json& j, const HarnessConfig& c) {
    j = {{"schema", kConfigSchema},
         {"name", c.name},
         {"layout", c.layout},
         {"pipeline", c.pipeline},
         {"controller", c.controller},
         {"motion", c.motion},
         {"noise", c.noise},
         {"variability", c.variability},
         {"output_dir", c.output_dir},
         {"seed", c.seed},
         {"threads", c.threads},
         {"notes", c.notes}};
}

inline void from_json(const json& j, HarnessConfig& c) {
    if (!j.is_object()) throw ConfigError("config: expected an object");
    const auto it = j.find("schema");
    if (it == j.end() || *it != kConfigSchema)
        throw ConfigError(std::string("config: schema must be \"") + kConfigSchema + "\"");
    std::string schema;
    ObjectReader(j, "config")
        .field("schema", schema)
        .field("name", c.name)
        .field("layout", c.layout)
        .field("pipeline", c.pipeline)
        .field("controller", c.controller)
        .field("motion", c.motion)
        .field("noise", c.noise)
        .field("variability", c.variability)
        .field("output_dir", c.output_dir)
        .field("seed", c.seed)
        .field("threads", c.threads)
        .field("notes", c.notes)
        .finish();
    if (c.threads == 0) throw ConfigError("config.threads must be >= 1");
}

inline HarnessConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return j.get<HarnessConfig>();
}

inline std::string dump_config(const HarnessConfig& c) { return json(c).dump(2) + "\n"; }

inline std::filesystem::path config_dir() {
    if (const char* env = std::getenv("MOSPICK_CONFIG_DIR"); env && *env) return env;
#ifdef MOSPICK_SOURCE_DIR
    if (!std::filesystem::is_directory("configs")) return std::filesystem::path(MOSPICK_SOURCE_DIR) / "configs";
#endif
    return "configs";
}

// A bare name ("default", "calibrated") resolves inside the config directory;
// anything else is a path.
inline std::filesystem::path resolve_config(const std::string& ref) {
    const std::filesystem::path p(ref);
    if (p.has_extension() || p.has_parent_path()) return p;
    return config_dir() / (ref + ".json");
}

inline HarnessConfig load_config(const std::string& ref) {
    const auto path = resolve_config(ref);
    std::ifstream in(path);
    if (!in) {
        if (ref == "default") return HarnessConfig{};
        throw ConfigError("cannot read config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::filesystem::path output_dir(const HarnessConfig& c) {
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return c.output_dir;
}

inline control::TrialContext make_context(const HarnessConfig& c) {
    control::TrialContext ctx;
    ctx.layout = c.layout;
    ctx.pipeline = c.pipeline;
    ctx.cfg = c.controller;
    ctx.noise = c.noise;
    ctx.motion = c.motion;
    ctx.variability = c.variability;
    ctx.calib = control::calibrate_workcell(c.layout, c.motion, c.controller.home);
    return ctx;
}

}  // namespace harness
}  // namespace mospick
