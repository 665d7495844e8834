#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"
#include "mospick/core/rng.hpp"
#include "mospick/scene/layout.hpp"

namespace mospick {

enum class LyingSide : std::uint8_t { left, right };

struct Range {
    double min = 0.0;
    double max = 0.0;
    friend constexpr bool operator==(Range, Range) = default;
};

struct SpecimenVariability {
    Range proboscis_length{1.8, 2.2};
    Range head_length{0.45, 0.55};
    Range body_length{2.8, 3.4};
    double heading_half_angle_deg = 45.0;
    double position_radius = 5.0;
    Range proboscis_curvature{-0.15, 0.15};  // rad/mm
    Range body_curvature{-0.1, 0.1};         // rad/mm
    bool random_lying_side = true;

    friend bool operator==(const SpecimenVariability&, const SpecimenVariability&) = default;

    // Degenerate ranges: every sample is the nominal specimen at the cup centre.
    static SpecimenVariability none() {
        SpecimenVariability v;
        v.proboscis_length = {2.0, 2.0};
        v.head_length = {0.5, 0.5};
        v.body_length = {3.1, 3.1};
        v.heading_half_angle_deg = 0.0;
        v.position_radius = 0.0;
        v.proboscis_curvature = {0.0, 0.0};
        v.body_curvature = {0.0, 0.0};
        v.random_lying_side = false;
        return v;
    }

    void validate() const {
        for (Range r : {proboscis_length, head_length, body_length, proboscis_curvature, body_curvature})
            if (!(r.min <= r.max)) throw ConfigError("variability range has min > max");
        if (!(proboscis_length.min > 0.0) || !(head_length.min > 0.0) || !(body_length.min > 0.0))
            throw ConfigError("specimen lengths must be positive");
        if (!(heading_half_angle_deg >= 0.0 && heading_half_angle_deg <= 90.0))
            throw ConfigError("heading half-angle must lie in [0, 90] degrees");
        if (!(position_radius >= 0.0)) throw ConfigError("position radius must be non-negative");
    }
};

// Chain indices, proboscis tip first.
inline constexpr int kChainSize = 10;
inline constexpr int kJunction = 4;      // proboscis / head
inline constexpr int kNeckFront = 5;     // head / neck
inline constexpr int kNeckRear = 6;      // neck / thorax
inline constexpr int kThoraxRear = 7;
inline constexpr int kProboscisLinks = 4;

struct MosquitoSpecimen {
    std::uint64_t id = 0;
    double proboscis_length = 2.0;
    double proboscis_diameter = 0.1;
    double neck_length = 0.3;
    double neck_width = 0.2;
    double head_length = 0.5;
    double head_width = 0.6;
    double body_length = 3.1;
    double thorax_width = 1.0;
    double abdomen_width = 0.75;
    LyingSide lying_side = LyingSide::left;
    Vec2 position{};      // body silhouette centroid at staging
    double heading = 0.0; // direction the proboscis points, rad from +x
    double proboscis_curvature = 0.0;
    double body_curvature = 0.0;
    std::array<Vec2, kChainSize> chain{};
    std::array<double, kChainSize> lift{};  // height above the mesh, mm

    friend bool operator==(const MosquitoSpecimen&, const MosquitoSpecimen&) = default;

    // Rest length of link i (chain[i] -> chain[i+1]).
    double link_length(int i) const {
        if (i < kProboscisLinks) return proboscis_length / kProboscisLinks;
        switch (i) {
            case 4: return head_length;
            case 5: return neck_length;
            case 6: return 0.4 * body_length;
            default: return 0.3 * body_length;
        }
    }
    double link_width(int i) const {
        if (i < kProboscisLinks) return proboscis_diameter;
        switch (i) {
            case 4: return head_width;
            case 5: return neck_width;
            case 6: return thorax_width;
            default: return abdomen_width;
        }
    }

    std::span<const Vec2> proboscis() const { return {chain.data(), kProboscisLinks + 1}; }
    Vec2 junction() const { return chain[kJunction]; }
    Vec2 neck_center() const { return (chain[kNeckFront] + chain[kNeckRear]) * 0.5; }
    double neck_heading() const { return angle_of(chain[kNeckFront] - chain[kNeckRear]); }
};

// Outline of head, neck, thorax and abdomen as a width profile along the
// chain from the junction (s = 0) to the abdomen tip. The abdomen overlaps the
// rear of the thorax so the body has no pinch there.
struct BodyProfile {
    double head, neck, body;
    double head_width, neck_width, thorax_width, abdomen_width;

    explicit BodyProfile(const MosquitoSpecimen& m)
        : head(m.head_length), neck(m.neck_length), body(m.body_length), head_width(m.head_width),
          neck_width(m.neck_width), thorax_width(m.thorax_width), abdomen_width(m.abdomen_width) {}

    double length() const { return head + neck + body; }
    double neck_mid() const { return head + 0.5 * neck; }
    double thorax_end() const { return head + neck + 0.4 * body; }

    double width(double s) const {
        auto ellipse = [](double s, double a, double b, double w) {
            if (s <= a || s >= b) return 0.0;
            const double u = 2.0 * (s - a) / (b - a) - 1.0;
            return w * std::sqrt(1.0 - u * u);
        };
        const double n0 = head, n1 = head + neck;
        double w = ellipse(s, 0.0, head, head_width);
        if (s >= n0 && s <= n1) w = std::max(w, neck_width);
        w = std::max(w, ellipse(s, n1, n1 + 0.4 * body, thorax_width));
        w = std::max(w, ellipse(s, n1 + 0.15 * body, n1 + body, abdomen_width));
        return w;
    }
};

inline std::span<const Vec2> body_polyline(const MosquitoSpecimen& m) {
    return {m.chain.data() + kJunction, kChainSize - kJunction};
}

// Centroid of head, neck, thorax and abdomen: the region the overhead
// pipeline keeps once the thin proboscis and legs are removed.
inline Vec2 body_centroid(const MosquitoSpecimen& s) {
    const BodyProfile prof(s);
    const auto line = body_polyline(s);
    const double total = polyline_length(line);
    const double scale = total / prof.length();
    constexpr int n = 4000;
    Vec2 acc{};
    double area = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) / n * total;
        const double w = prof.width(u / scale);
        acc += point_at_arc_length(line, u) * w;
        area += w;
    }
    return acc / area;
}

inline Vec2 proboscis_centroid(const MosquitoSpecimen& s) {
    Vec2 acc{};
    double total = 0.0;
    for (int i = 0; i < kProboscisLinks; ++i) {
        const double len = distance(s.chain[i], s.chain[i + 1]);
        acc += (s.chain[i] + s.chain[i + 1]) * (0.5 * len);
        total += len;
    }
    return total > 0.0 ? acc / total : s.chain[0];
}

// Lays out the chain from the neck outwards with constant curvature along the
// proboscis and along the body, then places the body centroid at `position`.
inline void build_chain(MosquitoSpecimen& s) {
    std::array<Vec2, kChainSize> c{};
    const Vec2 fwd = unit_from_angle(s.heading);
    c[kNeckFront] = fwd * (0.5 * s.neck_length);
    c[kNeckRear] = fwd * (-0.5 * s.neck_length);
    c[kJunction] = c[kNeckFront] + fwd * s.head_length;

    const double lp = s.link_length(0);
    for (int k = 0; k < kProboscisLinks; ++k) {
        // link from chain[3-k+1] towards the tip, bending with arc length
        const double mid = (k + 0.5) * lp;
        const Vec2 d = unit_from_angle(s.heading + s.proboscis_curvature * mid);
        c[kJunction - 1 - k] = c[kJunction - k] + d * lp;
    }
    double walked = 0.0;
    for (int i = kNeckRear; i < kChainSize - 1; ++i) {
        const double len = s.link_length(i);
        const Vec2 d = unit_from_angle(s.heading + s.body_curvature * (walked + 0.5 * len));
        c[i + 1] = c[i] - d * len;
        walked += len;
    }
    s.chain = c;
    s.lift.fill(0.0);
    const Vec2 shift = s.position - body_centroid(s);
    for (auto& p : s.chain) p += shift;
}

inline MosquitoSpecimen sample_specimen(std::uint64_t seed, const WorkcellLayout& layout,
                                        const SpecimenVariability& var) {
    var.validate();
    if (var.position_radius > layout.cup_radius)
        throw ConfigError("position radius exceeds the cup radius");
    Rng rng(seed);
    MosquitoSpecimen s;
    s.id = seed;
    s.proboscis_length = rng.uniform(var.proboscis_length.min, var.proboscis_length.max);
    s.head_length = rng.uniform(var.head_length.min, var.head_length.max);
    s.body_length = rng.uniform(var.body_length.min, var.body_length.max);
    const double half = var.heading_half_angle_deg * std::numbers::pi / 180.0;
    s.heading = rng.uniform(-half, half);
    const double r = var.position_radius * std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.position = layout.cup_center + unit_from_angle(phi) * r;
    s.proboscis_curvature = rng.uniform(var.proboscis_curvature.min, var.proboscis_curvature.max);
    s.body_curvature = rng.uniform(var.body_curvature.min, var.body_curvature.max);
    const bool right = rng.bernoulli(0.5);
    s.lying_side = var.random_lying_side && right ? LyingSide::right : LyingSide::left;
    build_chain(s);
    return s;
}

}  // namespace mospick
