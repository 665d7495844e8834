#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include "mospick/core/geometry.hpp"

namespace mospick {

enum class GripperState : std::uint8_t { open, closed };

struct EncoderPosition {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t z = 0;
    std::int64_t r = 0;  // rotary axis, parked
    friend constexpr bool operator==(EncoderPosition, EncoderPosition) = default;
};

struct GraspInfo {
    std::uint64_t specimen_id = 0;
    double s = 0.0;          // arc-length fraction along the proboscis, tip = 0
    double offset_mm = 0.0;  // tooltip to junction along the groove axis, once measured
    friend bool operator==(const GraspInfo&, const GraspInfo&) = default;
};

struct RobotState {
    EncoderPosition encoders;
    GripperState gripper = GripperState::open;
    std::optional<GraspInfo> grasp;
    double resolution_mm = 0.01;

    friend bool operator==(const RobotState&, const RobotState&) = default;

    Vec3 tooltip() const {
        return {static_cast<double>(encoders.x) * resolution_mm, static_cast<double>(encoders.y) * resolution_mm,
                static_cast<double>(encoders.z) * resolution_mm};
    }

    static RobotState at(Vec3 world, double resolution_mm = 0.01) {
        RobotState s;
        s.resolution_mm = resolution_mm;
        s.encoders = {std::llround(world.x / resolution_mm), std::llround(world.y / resolution_mm),
                      std::llround(world.z / resolution_mm), 0};
        return s;
    }
};

}  // namespace mospick
