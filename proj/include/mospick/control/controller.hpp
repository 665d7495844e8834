#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <atomic>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "mospick/calib/calibration.hpp"
#include "mospick/control/config.hpp"
#include "mospick/robot/motion.hpp"
#include "mospick/scene/render.hpp"
#include "mospick/scene/scene.hpp"
#include "mospick/segment/postprocess.hpp"
#include "mospick/report/throughput.hpp"
#include "mospick/segment/segmenter.hpp"
#include "mospick/vision/localizer.hpp"

namespace mospick::control {

enum class Phase : std::uint8_t { overhead_vision, approach, grasp, drag, onboard_vision, place, retreat };
inline constexpr int kPhaseCount = 7;
inline constexpr std::array<const char*, kPhaseCount> kPhaseNames{"overhead_vision", "approach", "grasp", "drag",
                                                                  "onboard_vision", "place", "retreat"};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::array<double, kPhaseCount> phase_s{};
    bool grasp_success = false;
    bool placement_success = false;
    std::string outcome;  // cut outcome or abort reason
    double true_offset = std::numeric_limits<double>::quiet_NaN();
    double estimated_offset = std::numeric_limits<double>::quiet_NaN();
    double neck_error = std::numeric_limits<double>::quiet_NaN();    // along the slot, + towards the body
    double neck_lateral = std::numeric_limits<double>::quiet_NaN();
    double drag_distance = 0.0;
    bool flipped = false;
    bool residual_flip = false;

    double& phase(Phase p) { return phase_s[static_cast<std::size_t>(p)]; }
    double phase(Phase p) const { return phase_s[static_cast<std::size_t>(p)]; }
    double cycle_s() const {
        double t = 0.0;
        for (double v : phase_s) t += v;
        return t;
    }
    double vision_s() const { return phase(Phase::overhead_vision) + phase(Phase::onboard_vision); }
    double movement_s() const { return cycle_s() - vision_s(); }
};

// What the controller knows about the workcell after calibration.
struct CalibrationState {
    calib::CalibrationMap overhead;
    calib::OnboardScale onboard;
    Vec2 onboard_tooltip_px{};
    double resolution_mm = 0.01;
};

inline CalibrationState calibrate_workcell(const WorkcellLayout& layout, const MotionProfile& motion, Vec3 home,
                                           const calib::GridSpec& grid = {},
                                           const calib::TooltipDetector& detect = calib::image_detector()) {
    Robot robot(RobotState::at(home, motion.resolution_mm()), motion);
    CalibrationState c;
    c.resolution_mm = motion.resolution_mm();
    const auto acq = calib::acquire_grid(robot, empty_scene(layout), grid, detect);
    c.overhead = calib::fit_bernstein_map(acq.pairs);
    c.onboard = calib::calibrate_onboard(robot, layout, {layout.cup_center.x, layout.cup_center.y, home.z});
    c.onboard_tooltip_px = calib::onboard_tooltip_pixel(layout);
    return c;
}

struct TrialContext {
    WorkcellLayout layout;
    vision::PipelineParams pipeline;
    ControllerConfig cfg;
    NoiseProfile noise;
    MotionProfile motion;
    SpecimenVariability variability;
    CalibrationState calib;
};

struct TrialFrames {
    std::optional<RasterImage> overhead;
    std::optional<vision::DetectionResult> detection;
    std::vector<OnboardFrame> onboard;
    std::vector<segment::SegmentationResult> segmentations;
};

// Mutable state of one trial: robot, scene and the running record.
struct TrialSession {
    const TrialContext& ctx;
    Robot robot;
    Scene scene;
    TrialRecord rec;
    Rng rng;
    double blade_front_belief = 0.0;
    double slot_axis_belief = 0.0;
    TrialFrames* frames = nullptr;

    TrialSession(const TrialContext& c, Scene s, std::uint64_t seed, TrialFrames* f = nullptr)
        : ctx(c), robot(RobotState::at(c.cfg.home, c.motion.resolution_mm()), c.motion), scene(std::move(s)),
          rng(derive_seed(seed, 1)), frames(f) {
        rec.seed = seed;
        // every draw is taken whatever the sigmas, so noise sweeps share random numbers
        blade_front_belief = c.layout.blade_front_x() + rng.normal(0.0, c.noise.landmark_sigma_mm);
        slot_axis_belief = c.layout.slot_axis_y() + rng.normal(0.0, c.noise.landmark_sigma_mm);
    }

    double move(Phase p, Vec3 target, bool slow = false) {
        const double t = robot.move(target, slow);
        rec.phase(p) += t;
        return t;
    }

    Vec2 onboard_to_world(Vec2 px) const {
        const Vec2 counts = ctx.calib.onboard.feature_offset_counts(px - ctx.calib.onboard_tooltip_px);
        return robot.state().tooltip().xy() + counts * ctx.calib.resolution_mm;
    }

    segment::SegmentationResult onboard_frame(std::uint64_t stream) {
        rec.phase(Phase::onboard_vision) += ctx.cfg.onboard_vision_s;
        const Vec2 tip = robot.state().tooltip().xy();
        LabelMask truth;
        RasterImage image;
        if (frames) {
            auto f = render_onboard(scene, tip);
            truth = f.labels;
            image = f.image;
            frames->onboard.push_back(std::move(f));
        } else {
            truth = render_onboard_labels(scene, tip);
            image = RasterImage(truth.width(), truth.height(), 1);
        }
        const segment::OracleSegmenter seg(std::move(truth), ctx.noise.label_noise, derive_seed(rec.seed, stream));
        auto r = segment::analyze_segmentation(seg.segment(image), {ctx.cfg.edge_dilation, ctx.cfg.edge_dilation});
        if (frames) frames->segmentations.push_back(r);
        return r;
    }

    void abort(std::string reason) {
        rec.outcome = std::move(reason);
        if (robot.state().gripper == GripperState::closed) robot.open();
        const Vec3 home = ctx.cfg.home;
        if (robot.state().tooltip().z < home.z) move(Phase::retreat, {robot.state().tooltip().x, robot.state().tooltip().y, home.z});
        move(Phase::retreat, home);
    }
};

// Overhead locate, approach, onboard segmentation, descend and close.
inline bool run_pick(TrialSession& s) {
    const auto& ctx = s.ctx;
    const auto& cfg = ctx.cfg;
    const double surface = ctx.layout.surface_z;
    s.rec.phase(Phase::overhead_vision) = cfg.pipelined_vision ? 0.0 : cfg.overhead_vision_s;

    const RasterImage overhead = render_overhead(s.scene);
    const auto det = vision::locate_mosquito(overhead, ctx.pipeline, vision::default_overhead_crop(ctx.layout));
    if (s.frames) {
        s.frames->overhead = overhead;
        s.frames->detection = det;
    }
    const double grasp_noise = s.rng.normal(0.0, ctx.noise.vision_sigma_mm);
    if (!det.present) {
        s.abort("no_mosquito");
        return false;
    }
    const auto mapped = calib::map_camera_to_robot(ctx.calib.overhead, det.centroid);
    const Vec2 centroid = mapped.encoder * ctx.calib.resolution_mm;

    s.move(Phase::approach, {centroid.x + cfg.approach_standoff, centroid.y, surface + cfg.pregrasp_hover + cfg.focus_descent});
    s.move(Phase::approach, {centroid.x + cfg.approach_standoff, centroid.y, surface + cfg.pregrasp_hover});

    const auto seg = s.onboard_frame(2);
    if (!seg.grasp_point) {
        s.abort("no_proboscis");
        return false;
    }
    Vec2 grasp = s.onboard_to_world(*seg.grasp_point);
    if (seg.proboscis_axis) grasp += *seg.proboscis_axis * grasp_noise;

    s.move(Phase::grasp, {grasp.x, grasp.y, surface + cfg.pregrasp_hover});
    s.move(Phase::grasp, {grasp.x, grasp.y, surface});
    s.robot.close(s.scene, cfg.capture_radius);
    s.rec.grasp_success = s.robot.state().grasp.has_value();
    if (!s.rec.grasp_success) {
        s.abort("grasp_failed");
        return false;
    }
    // the jaws pull the proboscis onto the tooltip
    const Vec2 tip = s.robot.state().tooltip().xy();
    const auto g = locate_on_proboscis(*s.scene.specimen, tip);
    s.scene = translated(s.scene, {tip.x - g.point.x, tip.y - g.point.y, 0.0});
    return true;
}

// Lift, run into line with the slot and stop short of the blades.
inline void run_drag(TrialSession& s) {
    const auto& cfg = s.ctx.cfg;
    const double surface = s.ctx.layout.surface_z;
    const Vec2 start = s.robot.state().tooltip().xy();
    const double z = surface + cfg.drag_lift;
    const double stop_x = s.blade_front_belief - cfg.drag_stop;
    const Vec3 waypoints[] = {{start.x, start.y, z},
                              {stop_x - cfg.align_length, s.slot_axis_belief, z},
                              {stop_x, s.slot_axis_belief, z}};
    std::vector<Vec3> path;
    for (const Vec3& w : waypoints) {
        s.move(Phase::drag, w);
        const Vec3 at = s.robot.state().tooltip();
        path.push_back({at.x, at.y, at.z - surface});
    }
    s.rec.drag_distance = distance(start, path[1].xy()) + distance(path[1].xy(), path[2].xy());
    s.scene = apply_drag(s.scene, start, path, {.foreshortening = s.ctx.noise.foreshortening});
}

// Groove-axis distance from the tooltip back to the proboscis/head junction
// seen in the onboard frame. The lift is not corrected for: the camera sees
// the horizontal projection of the sloping proboscis.
inline std::optional<double> estimate_offset(const segment::SegmentationResult& seg, const CalibrationState& calib,
                                             Vec2 tooltip, double noise_mm = 0.0) {
    if (!seg.proboscis_head_edge_centroid) return std::nullopt;
    const Vec2 counts = calib.onboard.feature_offset_counts(*seg.proboscis_head_edge_centroid - calib.onboard_tooltip_px);
    const Vec2 junction = tooltip + counts * calib.resolution_mm;
    return tooltip.x - junction.x + noise_mm;
}

// Raise, advance by clearance plus offset, lower into the notch, cut.
inline void run_place(TrialSession& s, double offset) {
    const auto& ctx = s.ctx;
    const auto& cfg = ctx.cfg;
    auto carry = [&](Vec3 target, bool slow) {
        const Vec3 from = s.robot.state().tooltip();
        s.move(Phase::place, target, slow);
        const Vec3 to = s.robot.state().tooltip();
        s.scene = translated(s.scene, {to.x - from.x, to.y - from.y, to.z - from.z});
    };
    const Vec3 p = s.robot.state().tooltip();
    carry({p.x, p.y, p.z + cfg.place_raise}, false);
    carry({p.x + cfg.clearance(ctx.layout.blade_thickness) + offset, p.y, p.z + cfg.place_raise}, false);

    const auto low = lower_into_notch(s.robot.state(), s.scene, cfg.place_descent, ctx.motion, ctx.noise.p_residual,
                                      derive_seed(s.rec.seed, 4));
    s.robot.state() = low.state;
    s.robot.record("move_slow", low.state.tooltip(), low.elapsed);
    s.rec.phase(Phase::place) += low.elapsed;
    // lifts above the mesh lose meaning once the specimen leaves it
    s.scene = low.scene;
    s.rec.flipped = low.flipped;
    s.rec.residual_flip = low.residual_flip;
    const auto align = neck_alignment(ctx.layout, *s.scene.specimen);
    s.rec.neck_error = align.longitudinal;
    s.rec.neck_lateral = align.lateral;

    const CutOutcome cut = actuate_blades(s.scene);
    s.robot.record("blades", s.robot.state().tooltip(), 0.0);
    s.rec.outcome = outcome_name(cut);
    s.rec.placement_success = cut == CutOutcome::head_removed;
    if (s.rec.placement_success) s.scene.head_removed = true;

    // retreat with the head, release it over the disposal point (cleaning jet: no cost)
    const Vec3 q = s.robot.state().tooltip();
    s.move(Phase::retreat, cfg.home);
    (void)q;
    s.robot.open();
}

inline TrialRecord run_trial_on(const TrialContext& ctx, Scene scene, std::uint64_t seed, TrialFrames* frames = nullptr,
                                Robot* robot_out = nullptr, Scene* scene_out = nullptr) {
    TrialSession s(ctx, std::move(scene), seed, frames);
    try {
        if (run_pick(s)) {
            run_drag(s);
            const auto seg = s.onboard_frame(3);
            const double junction_noise = s.rng.normal(0.0, ctx.noise.vision_sigma_mm);
            const auto& m = *s.scene.specimen;
            const Vec2 tip = s.robot.state().tooltip().xy();
            s.rec.true_offset = tip.x - m.junction().x;
            const auto offset = estimate_offset(seg, ctx.calib, tip, junction_noise);
            if (!offset) {
                s.abort("no_junction");
            } else {
                s.rec.estimated_offset = *offset;
                if (s.robot.state().grasp) s.robot.state().grasp->offset_mm = *offset;
                run_place(s, *offset);
            }
        }
    } catch (const MotionError&) {
        s.rec.outcome = "motion_error";
        s.robot.state() = RobotState::at(ctx.cfg.home, ctx.motion.resolution_mm());
    }
    if (robot_out) *robot_out = s.robot;
    if (scene_out) *scene_out = s.scene;
    return s.rec;
}

inline TrialRecord run_trial(const TrialContext& ctx, std::uint64_t seed, TrialFrames* frames = nullptr) {
    return run_trial_on(ctx, make_scene(ctx.layout, seed, ctx.variability), seed, frames);
}

struct BatchSummary {
    std::size_t n = 0;
    std::size_t grasped = 0;
    std::size_t placed = 0;
    std::size_t flipped = 0;
    std::size_t residual_flips = 0;
    std::map<std::string, std::size_t> outcomes;
    report::ThroughputSummary throughput;

    double grasp_rate() const { return n ? static_cast<double>(grasped) / static_cast<double>(n) : 0.0; }
    double placement_rate() const { return n ? static_cast<double>(placed) / static_cast<double>(n) : 0.0; }
};

struct BatchResult {
    std::vector<TrialRecord> trials;
    BatchSummary summary;
};

inline BatchSummary summarize(const std::vector<TrialRecord>& trials) {
    if (trials.empty()) throw ParameterError("summarize: no trials");
    BatchSummary s;
    s.n = trials.size();
    std::vector<double> cycles;
    double movement = 0.0, vision = 0.0;
    for (const auto& t : trials) {
        s.grasped += t.grasp_success;
        s.placed += t.placement_success;
        s.flipped += t.flipped;
        s.residual_flips += t.residual_flip;
        ++s.outcomes[t.outcome];
        cycles.push_back(t.cycle_s());
        movement += t.movement_s();
        vision += t.vision_s();
    }
    s.throughput = report::throughput_from_cycles(cycles);
    s.throughput.movement_mean_s = movement / static_cast<double>(s.n);
    s.throughput.vision_mean_s = vision / static_cast<double>(s.n);
    return s;
}

inline std::uint64_t trial_seed(std::uint64_t master, std::size_t k) { return derive_seed(master, 0x7472, k); }

// Trial k depends only on (master, k); records come back in index order.
inline BatchResult run_batch(const TrialContext& ctx, std::size_t n, std::uint64_t master_seed, unsigned threads = 1) {
    if (n == 0) throw ParameterError("run_batch: n must be >= 1");
    BatchResult out;
    out.trials.resize(n);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < n;) out.trials[k] = run_trial(ctx, trial_seed(master_seed, k));
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    out.summary = summarize(out.trials);
    return out;
}

}  // namespace mospick::control
