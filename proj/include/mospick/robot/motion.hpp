#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mospick/core/errors.hpp"
#include "mospick/core/json_fields.hpp"
#include "mospick/robot/state.hpp"
#include "mospick/scene/scene.hpp"

namespace mospick {

inline constexpr double kAxisTravelMm = 100.0;

struct MotionProfile {
    double nominal_speed = 12.5;  // mm/s
    double slow_speed = 2.5;      // mm/s
    double settle_s = 0.165;      // per segment
    double resolution_um = 10.0;

    friend bool operator==(const MotionProfile&, const MotionProfile&) = default;

    double resolution_mm() const { return resolution_um * 1e-3; }

    void validate() const {
        if (!(nominal_speed > 0.0) || !(slow_speed > 0.0)) throw ConfigError("speeds must be positive");
        if (!(settle_s >= 0.0)) throw ConfigError("settle overhead must be non-negative");
        if (!(resolution_um > 0.0)) throw ConfigError("encoder resolution must be positive");
    }
};

inline void to_json(json& j, const MotionProfile& p) {
    j = {{"nominal_speed", p.nominal_speed},
         {"slow_speed", p.slow_speed},
         {"settle_s", p.settle_s},
         {"resolution_um", p.resolution_um}};
}
inline void from_json(const json& j, MotionProfile& p) {
    ObjectReader(j, "motion")
        .field("nominal_speed", p.nominal_speed)
        .field("slow_speed", p.slow_speed)
        .field("settle_s", p.settle_s)
        .field("resolution_um", p.resolution_um)
        .finish();
    p.validate();
}

inline bool within_travel(Vec3 p) {
    for (double v : {p.x, p.y, p.z})
        if (!(v >= 0.0 && v <= kAxisTravelMm)) return false;
    return true;
}

struct MoveResult {
    RobotState state;
    double elapsed = 0.0;
};

// Axes move simultaneously at `speed`; the slowest axis sets the time.
inline MoveResult move_to(const RobotState& state, Vec3 target, double speed, const MotionProfile& profile) {
    if (!(speed > 0.0)) throw MotionError("speed must be positive");
    if (!within_travel(target)) throw MotionError("target outside axis travel");
    const double res = state.resolution_mm;
    MoveResult r{state, 0.0};
    r.state.encoders.x = std::llround(target.x / res);
    r.state.encoders.y = std::llround(target.y / res);
    r.state.encoders.z = std::llround(target.z / res);
    const auto& a = state.encoders;
    const auto& b = r.state.encoders;
    const auto dmax = std::max({std::llabs(b.x - a.x), std::llabs(b.y - a.y), std::llabs(b.z - a.z)});
    r.elapsed = static_cast<double>(dmax) * res / speed + profile.settle_s;
    return r;
}

// Closes the jaws; a proboscis within `capture_radius` of the tooltip is
// grasped at its nearest point.
inline RobotState grip_close(const RobotState& state, const Scene& scene, double capture_radius = 0.15) {
    if (state.gripper != GripperState::open) throw MotionError("gripper already closed");
    RobotState out = state;
    out.gripper = GripperState::closed;
    out.grasp.reset();
    if (!scene.specimen || scene.head_removed) return out;
    const auto& m = *scene.specimen;
    const Vec3 tip = state.tooltip();
    const auto g = locate_on_proboscis(m, tip.xy());
    const double lift = m.lift[g.link] + g.t * (m.lift[g.link + 1] - m.lift[g.link]);
    const double dz = tip.z - (scene.layout.surface_z + lift);
    if (std::hypot(g.distance, dz) <= capture_radius) out.grasp = GraspInfo{m.id, g.s, 0.0};
    return out;
}

inline RobotState grip_open(const RobotState& state) {
    RobotState out = state;
    out.gripper = GripperState::open;
    out.grasp.reset();
    return out;
}

// ---------------------------------------------------------------------------
// Blades and the notch

enum class CutOutcome : std::uint8_t { head_removed, cut_on_head, cut_on_body, no_contact, flipped };

inline const char* outcome_name(CutOutcome o) {
    switch (o) {
        case CutOutcome::head_removed: return "head_removed";
        case CutOutcome::cut_on_head: return "cut_on_head";
        case CutOutcome::cut_on_body: return "cut_on_body";
        case CutOutcome::no_contact: return "no_contact";
        case CutOutcome::flipped: return "flipped";
    }
    return "?";
}

namespace detail {

// Arc length from the junction along the body polyline where it first
// crosses x = plane, if it does.
inline std::optional<double> body_crossing(const MosquitoSpecimen& m, double plane) {
    const auto line = body_polyline(m);
    double walked = 0.0;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const Vec2 a = line[i], b = line[i + 1];
        const double len = distance(a, b);
        if ((a.x - plane) * (b.x - plane) <= 0.0 && a.x != b.x) {
            const double t = (plane - a.x) / (b.x - a.x);
            return walked + t * len;
        }
        walked += len;
    }
    return std::nullopt;
}

// Position along the body (from the junction) to rest-profile coordinate.
inline double profile_coordinate(const MosquitoSpecimen& m, double arc) {
    const double total = polyline_length(body_polyline(m));
    return total > 0.0 ? arc * BodyProfile(m).length() / total : 0.0;
}

}  // namespace detail

// Signed distance of the neck centre in front of the cut plane (along the
// slot axis) and lateral offset from the notch centre.
struct NeckAlignment {
    double longitudinal = 0.0;
    double lateral = 0.0;
};

inline NeckAlignment neck_alignment(const WorkcellLayout& l, const MosquitoSpecimen& m) {
    const Vec2 n = m.neck_center();
    return {n.x - l.cut_plane_x(), n.y - l.slot_axis_y()};
}

// True when head or body, where it lies over the blade stack, is too wide to
// drop into the notch, or the neck itself misses the notch.
inline bool geometric_flip(const WorkcellLayout& l, const MosquitoSpecimen& m) {
    const double half_notch = 0.5 * l.notch_width;
    if (std::abs(neck_alignment(l, m).lateral) > half_notch) return true;
    const BodyProfile prof(m);
    const auto line = body_polyline(m);
    const double total = polyline_length(line);
    if (total <= 0.0) return false;
    const double x0 = l.blade_front_x(), x1 = l.blade_front_x() + 2.0 * l.blade_thickness;
    const double n0 = prof.head, n1 = prof.head + prof.neck;
    constexpr int kSamples = 2000;
    for (int i = 0; i <= kSamples; ++i) {
        const double u = total * i / kSamples;
        const Vec2 p = point_at_arc_length(line, u);
        if (p.x < x0 || p.x > x1) continue;
        const double s = u * prof.length() / total;
        if (s >= n0 && s <= n1) continue;
        if (std::abs(p.y - l.slot_axis_y()) + 0.5 * prof.width(s) > half_notch) return true;
    }
    return false;
}

struct LowerResult {
    RobotState state;
    Scene scene;
    bool placed = false;
    bool flipped = false;
    bool residual_flip = false;
    double elapsed = 0.0;
};

// Slow descent by `depth`; the held specimen moves rigidly with the tooltip.
inline LowerResult lower_into_notch(const RobotState& state, const Scene& scene, double depth,
                                    const MotionProfile& profile, double p_residual, std::uint64_t seed) {
    if (!state.grasp || !scene.specimen) throw MotionError("lowering requires a grasped specimen");
    if (!(p_residual >= 0.0 && p_residual <= 1.0)) throw ParameterError("residual flip probability must lie in [0, 1]");
    const Vec3 from = state.tooltip();
    const auto mv = move_to(state, {from.x, from.y, from.z - depth}, profile.slow_speed, profile);
    LowerResult r{mv.state, scene, false, false, false, mv.elapsed};
    const Vec3 to = mv.state.tooltip();
    r.scene = translated(scene, {to.x - from.x, to.y - from.y, 0.0});
    Rng rng(seed);
    r.residual_flip = rng.bernoulli(p_residual);
    r.flipped = geometric_flip(scene.layout, *r.scene.specimen) || r.residual_flip;
    r.scene.flipped = r.flipped;
    r.placed = !r.flipped;
    return r;
}

inline CutOutcome actuate_blades(const Scene& scene) {
    if (!scene.specimen || scene.head_removed) return CutOutcome::no_contact;
    if (scene.flipped) return CutOutcome::flipped;
    const auto& l = scene.layout;
    const auto& m = *scene.specimen;
    if (std::abs(neck_alignment(l, m).lateral) > 0.5 * l.notch_width) return CutOutcome::no_contact;
    const auto arc = detail::body_crossing(m, l.cut_plane_x());
    if (!arc) return CutOutcome::no_contact;
    const BodyProfile prof(m);
    const double s = detail::profile_coordinate(m, *arc);
    const double window = l.neck_window(m.neck_length);
    const double err = s - prof.neck_mid();
    if (std::abs(err) <= window + 1e-12) return CutOutcome::head_removed;
    return err < 0.0 ? CutOutcome::cut_on_head : CutOutcome::cut_on_body;
}

// ---------------------------------------------------------------------------
// Serialized robot with a command log

struct TelemetryEntry {
    double t = 0.0;
    std::string command;
    Vec3 target{};
    double elapsed = 0.0;
    EncoderPosition encoders;
};

inline void to_json(json& j, const TelemetryEntry& e) {
    j = {{"t", e.t},
         {"command", e.command},
         {"target", e.target},
         {"elapsed", e.elapsed},
         {"encoders", {e.encoders.x, e.encoders.y, e.encoders.z, e.encoders.r}}};
}

class Robot {
public:
    explicit Robot(RobotState s = {}, MotionProfile p = {}) : state_(s), profile_(p) {
        profile_.validate();
        state_.resolution_mm = profile_.resolution_mm();
    }

    const RobotState& state() const { return state_; }
    RobotState& state() { return state_; }
    const MotionProfile& profile() const { return profile_; }
    double clock() const { return clock_; }
    const std::vector<TelemetryEntry>& log() const { return log_; }

    double move(Vec3 target, bool slow = false) {
        const auto r = move_to(state_, target, slow ? profile_.slow_speed : profile_.nominal_speed, profile_);
        state_ = r.state;
        record(slow ? "move_slow" : "move", target, r.elapsed);
        return r.elapsed;
    }

    void close(const Scene& scene, double capture_radius = 0.15) {
        state_ = grip_close(state_, scene, capture_radius);
        record("grip_close", state_.tooltip(), 0.0);
    }

    void open() {
        state_ = grip_open(state_);
        record("grip_open", state_.tooltip(), 0.0);
    }

    void record(std::string command, Vec3 target, double elapsed) {
        clock_ += elapsed;
        log_.push_back({clock_, std::move(command), target, elapsed, state_.encoders});
    }

    void write_log(std::ostream& os) const {
        for (const auto& e : log_) os << json(e).dump() << '\n';
    }

private:
    RobotState state_;
    MotionProfile profile_;
    double clock_ = 0.0;
    std::vector<TelemetryEntry> log_;
};

}  // namespace mospick
