#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"
#include "mospick/scene/layout.hpp"
#include "mospick/scene/specimen.hpp"

namespace mospick {

// Small dark particle on the mesh, used for distractor fixtures.
struct Debris {
    Vec2 center{};
    double radius = 0.1;
    std::array<std::uint8_t, 3> color{80, 58, 40};
    friend bool operator==(const Debris&, const Debris&) = default;
};

struct Scene {
    WorkcellLayout layout;
    std::optional<MosquitoSpecimen> specimen;
    std::vector<Debris> debris;
    std::optional<Vec2> overhead_tool;  // tooltip drawn in the overhead frame
    std::uint64_t background_seed = 1;
    bool flipped = false;
    bool head_removed = false;

    friend bool operator==(const Scene&, const Scene&) = default;
};

inline Scene make_scene(const WorkcellLayout& layout, std::uint64_t specimen_seed,
                        const SpecimenVariability& var, std::uint64_t background_seed = 1) {
    Scene s;
    s.layout = layout;
    s.background_seed = background_seed;
    s.specimen = sample_specimen(specimen_seed, layout, var);
    return s;
}

inline Scene empty_scene(const WorkcellLayout& layout, std::uint64_t background_seed = 1) {
    Scene s;
    s.layout = layout;
    s.background_seed = background_seed;
    return s;
}

// Moves the whole specimen rigidly; dz changes the lift of every point.
inline Scene translated(const Scene& scene, Vec3 delta) {
    Scene out = scene;
    if (!out.specimen) return out;
    for (auto& p : out.specimen->chain) p += delta.xy();
    for (auto& z : out.specimen->lift) z += delta.z;
    return out;
}

struct DragOptions {
    bool foreshortening = false;
    double max_step = 0.02;  // mm of grasp-point travel per chain update
};

struct GraspLocation {
    int link = 0;     // proboscis link index
    double t = 0.0;   // fraction along the link
    double s = 0.0;   // arc-length fraction along the whole proboscis
    double distance = 0.0;
    Vec2 point{};
};

inline GraspLocation locate_on_proboscis(const MosquitoSpecimen& m, Vec2 p) {
    const auto proj = project_onto_polyline(m.proboscis(), p);
    GraspLocation g;
    g.link = static_cast<int>(proj.segment);
    g.t = proj.t;
    const double total = polyline_length(m.proboscis());
    g.s = total > 0.0 ? proj.arc_length / total : 0.0;
    g.distance = proj.distance;
    g.point = proj.point;
    return g;
}

// Pulls the specimen by a point on its proboscis along `path`, a list of
// grasp-point positions (x, y, lift above the mesh). The part behind the
// grasp follows the leader with fixed link lengths; the part in front rides
// rigidly on the first trailing link. With foreshortening on, the exposed
// proboscis between grasp and head is a straight incline down to the mesh and
// its horizontal extent shrinks accordingly.
inline Scene apply_drag(const Scene& scene, Vec2 grasp_point, std::span<const Vec3> path,
                        const DragOptions& opt = {}) {
    if (!scene.specimen) throw ContractViolation("drag requires a specimen");
    if (!(opt.max_step > 0.0)) throw ParameterError("drag step must be positive");
    const MosquitoSpecimen& m0 = *scene.specimen;
    const GraspLocation g = locate_on_proboscis(m0, grasp_point);
    if (g.distance > 0.5 * m0.proboscis_diameter + 1e-9)
        throw ContractViolation("grasp point is not on the proboscis");
    if (path.empty()) return scene;

    Scene out = scene;
    MosquitoSpecimen& m = *out.specimen;
    const int k = g.link;

    // Rest lengths of the trailing links, starting at the grasp point.
    std::vector<double> rest;
    rest.push_back((1.0 - g.t) * m.link_length(k));
    for (int i = k + 1; i < kChainSize - 1; ++i) rest.push_back(m.link_length(i));
    const int exposed_links = kProboscisLinks - k;  // links from grasp to junction
    double exposed = 0.0;
    for (int i = 0; i < exposed_links; ++i) exposed += rest[static_cast<std::size_t>(i)];

    // Front part as offsets from the grasp point.
    std::vector<Vec2> front;
    for (int i = 0; i <= k; ++i) front.push_back(m.chain[i] - g.point);

    Vec3 cur{g.point.x, g.point.y, m.lift[k] + g.t * (m.lift[k + 1] - m.lift[k])};
    Vec2 trail_dir = normalized(g.point - m.chain[k + 1]);
    if (norm(g.point - m.chain[k + 1]) < 1e-12) trail_dir = normalized(m.chain[k] - m.chain[k + 1]);

    auto update = [&](Vec3 gp) {
        double cosine = 1.0;
        if (opt.foreshortening && exposed > 0.0) {
            const double slope = std::clamp(gp.z / exposed, 0.0, 0.999);
            cosine = std::sqrt(1.0 - slope * slope);
        }
        Vec2 prev = gp.xy();
        Vec2 prev_dir = trail_dir;
        double arc = 0.0;
        for (int j = 0; j < static_cast<int>(rest.size()); ++j) {
            const int idx = k + 1 + j;
            const bool proboscis_link = j < exposed_links;
            const double h = rest[static_cast<std::size_t>(j)] * (proboscis_link ? cosine : 1.0);
            Vec2 d = prev - m.chain[idx];
            const double n = norm(d);
            d = n > 1e-12 ? d / n : prev_dir;
            m.chain[idx] = prev - d * h;
            if (j == 0) {
                // Rotate the front part with the first trailing link.
                const double turn = wrap_angle(angle_of(d) - angle_of(trail_dir));
                for (auto& f : front) f = rotated(f, turn);
                trail_dir = d;
            }
            arc += rest[static_cast<std::size_t>(j)];
            if (proboscis_link)
                m.lift[idx] = opt.foreshortening ? std::max(0.0, gp.z * (1.0 - arc / exposed)) : 0.0;
            prev = m.chain[idx];
            prev_dir = d;
        }
        for (int i = 0; i <= k; ++i) {
            m.chain[i] = gp.xy() + front[static_cast<std::size_t>(i)];
            m.lift[i] = gp.z;
        }
    };

    for (const Vec3& target : path) {
        const Vec3 delta{target.x - cur.x, target.y - cur.y, target.z - cur.z};
        const double len = norm(delta);
        const int steps = std::max(1, static_cast<int>(std::ceil(len / opt.max_step)));
        for (int s = 1; s <= steps; ++s) {
            const double f = static_cast<double>(s) / steps;
            update({cur.x + delta.x * f, cur.y + delta.y * f, cur.z + delta.z * f});
        }
        cur = target;
    }
    return out;
}

// Horizontal distance from the grasp point to the proboscis/head junction
// measured along the proboscis polyline.
inline double exposed_proboscis_length(const MosquitoSpecimen& m, Vec2 grasp_point) {
    const auto g = locate_on_proboscis(m, grasp_point);
    double len = (1.0 - g.t) * m.link_length(g.link);
    for (int i = g.link + 1; i < kProboscisLinks; ++i) len += m.link_length(i);
    return len;
}

}  // namespace mospick
