#include <gtest/gtest.h>

#include <cmath>

#include "mospick/control/controller.hpp"

using namespace mospick;
using namespace mospick::control;

namespace {

const TrialContext& base_context() {
    static const TrialContext ctx = [] {
        TrialContext c;
        c.pipeline.area_threshold = 0.0002;
        c.calib = calibrate_workcell(c.layout, c.motion, c.cfg.home);
        return c;
    }();
    return ctx;
}

TrialContext with_noise(NoiseProfile n) {
    TrialContext c = base_context();
    c.noise = n;
    return c;
}

void expect_parked(const Robot& r, const TrialContext& ctx) {
    EXPECT_EQ(r.state().gripper, GripperState::open);
    EXPECT_FALSE(r.state().grasp.has_value());
    const Vec3 t = r.state().tooltip();
    EXPECT_NEAR(t.x, ctx.cfg.home.x, 0.006);
    EXPECT_NEAR(t.y, ctx.cfg.home.y, 0.006);
    EXPECT_NEAR(t.z, ctx.cfg.home.z, 0.006);
}

// Junction pixel offset that moves the world junction by dx along the slot.
Vec2 junction_shift_px(const CalibrationState& c, double dx) {
    return {-dx / (c.onboard.counts_per_px_x * c.resolution_mm), 0.0};
}

}  // namespace

TEST(Trial, ZeroNoiseRemovesHead) {
    const auto& ctx = base_context();
    for (std::uint64_t seed : {3u, 17u, 40u}) {
        Robot robot;
        const auto r = run_trial_on(ctx, make_scene(ctx.layout, seed, ctx.variability), seed, nullptr, &robot);
        EXPECT_TRUE(r.grasp_success);
        EXPECT_TRUE(r.placement_success);
        EXPECT_EQ(r.outcome, "head_removed");
        EXPECT_LT(std::abs(r.true_offset - r.estimated_offset), 0.01);
        EXPECT_LE(std::abs(r.neck_error), 0.1);
        EXPECT_FALSE(r.flipped);
        expect_parked(robot, ctx);
    }
}

TEST(Trial, PhasesAddUp) {
    const auto r = run_trial(base_context(), 5);
    double sum = 0.0;
    for (double t : r.phase_s) {
        EXPECT_GE(t, 0.0);
        sum += t;
    }
    EXPECT_DOUBLE_EQ(r.cycle_s(), sum);
    EXPECT_NEAR(r.vision_s(), 0.16, 1e-12);
    EXPECT_NEAR(r.movement_s() + r.vision_s(), r.cycle_s(), 1e-12);
    EXPECT_EQ(r.phase(Phase::overhead_vision), 0.0);
}

TEST(Trial, SerialVisionCountsOverhead) {
    TrialContext ctx = base_context();
    ctx.cfg.pipelined_vision = false;
    const auto serial = run_trial(ctx, 5);
    const auto piped = run_trial(base_context(), 5);
    EXPECT_NEAR(serial.cycle_s() - piped.cycle_s(), ctx.cfg.overhead_vision_s, 1e-12);
}

TEST(Trial, EmptyCupAborts) {
    const auto& ctx = base_context();
    Robot robot;
    const auto r = run_trial_on(ctx, empty_scene(ctx.layout), 1, nullptr, &robot);
    EXPECT_EQ(r.outcome, "no_mosquito");
    EXPECT_FALSE(r.grasp_success);
    EXPECT_FALSE(r.placement_success);
    expect_parked(robot, ctx);
}

TEST(Trial, ErodedProboscisAborts) {
    NoiseProfile n;
    n.label_noise.boundary_erosion_px = 12;
    const auto ctx = with_noise(n);
    Robot robot;
    const auto r = run_trial_on(ctx, make_scene(ctx.layout, 2, ctx.variability), 2, nullptr, &robot);
    EXPECT_EQ(r.outcome, "no_proboscis");
    expect_parked(robot, ctx);
}

TEST(Trial, MissedGraspAbortsOpen) {
    TrialContext ctx = base_context();
    ctx.cfg.capture_radius = 1e-4;
    ctx.noise.vision_sigma_mm = 0.3;
    int misses = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Robot robot;
        const auto r = run_trial_on(ctx, make_scene(ctx.layout, seed, ctx.variability), seed, nullptr, &robot);
        if (r.outcome != "grasp_failed") continue;
        ++misses;
        EXPECT_FALSE(r.placement_success);
        expect_parked(robot, ctx);
    }
    EXPECT_GT(misses, 0);
}

TEST(Pick, CentroidNoiseToleratedAlongProboscis) {
    NoiseProfile n;
    n.vision_sigma_mm = 0.2;
    const auto ctx = with_noise(n);
    int grasped = 0;
    const int trials = 120;
    for (int k = 0; k < trials; ++k) {
        const std::uint64_t seed = trial_seed(77, k);
        TrialSession s(ctx, make_scene(ctx.layout, seed, ctx.variability), seed);
        grasped += run_pick(s);
    }
    EXPECT_GE(grasped, trials - 1);
}

TEST(Offset, ForeshorteningFollowsProjection) {
    NoiseProfile flat;
    NoiseProfile slope;
    slope.foreshortening = true;
    const auto a = with_noise(flat);
    const auto b = with_noise(slope);
    for (std::uint64_t seed : {4u, 9u, 21u}) {
        const auto level = run_trial(a, seed);
        const auto tilted = run_trial(b, seed);
        const double lift = a.cfg.drag_lift;
        const double expect = std::sqrt(level.estimated_offset * level.estimated_offset - lift * lift);
        EXPECT_NEAR(tilted.estimated_offset, expect, 0.02) << seed;
        EXPECT_LT(std::abs(tilted.estimated_offset - tilted.true_offset), 0.01);
    }
}

TEST(Offset, ProjectionExamples) {
    auto apparent = [](double exposed, double lift) { return std::sqrt(exposed * exposed - lift * lift); };
    EXPECT_NEAR(apparent(1.28, 0.8), 1.0, 0.002);
    EXPECT_NEAR(apparent(1.0, 0.8) - 1.0, -0.4, 1e-12);
}

TEST(Offset, LinearInJunctionShift) {
    const auto& c = base_context().calib;
    segment::SegmentationResult seg;
    seg.proboscis_head_edge_centroid = Vec2{700.0, 610.0};
    const Vec2 tip{45.0, 50.0};
    const double base = *estimate_offset(seg, c, tip);
    seg.proboscis_head_edge_centroid = *seg.proboscis_head_edge_centroid + junction_shift_px(c, -0.3);
    EXPECT_NEAR(*estimate_offset(seg, c, tip) - base, 0.3, 1e-9);
    EXPECT_NEAR(*estimate_offset(seg, c, tip, 0.05) - base, 0.35, 1e-9);
}

TEST(Offset, MissingJunction) {
    segment::SegmentationResult seg;
    EXPECT_FALSE(estimate_offset(seg, base_context().calib, {45, 50}).has_value());
}

TEST(Place, InjectedOffsetErrorFails) {
    const auto& ctx = base_context();
    for (double err : {-0.3, 0.3}) {
        const std::uint64_t seed = 11;
        TrialSession s(ctx, make_scene(ctx.layout, seed, ctx.variability), seed);
        ASSERT_TRUE(run_pick(s));
        run_drag(s);
        const auto seg = s.onboard_frame(3);
        const auto est = estimate_offset(seg, ctx.calib, s.robot.state().tooltip().xy());
        ASSERT_TRUE(est.has_value());
        run_place(s, *est + err);
        EXPECT_FALSE(s.rec.placement_success) << err;
        EXPECT_NE(s.rec.outcome, "head_removed");
        EXPECT_GT(std::abs(s.rec.neck_error), 0.1);
    }
}

TEST(Batch, ZeroNoiseAllPlaced) {
    const auto b = run_batch(base_context(), 12, 1);
    EXPECT_EQ(b.summary.grasped, 12u);
    EXPECT_EQ(b.summary.placed, 12u);
    EXPECT_EQ(b.summary.outcomes.at("head_removed"), 12u);
    EXPECT_NEAR(b.summary.throughput.mdph, 3600.0 / b.summary.throughput.mean_cycle_s, 1e-9);
}

TEST(Batch, SeedIsolationAndThreads) {
    NoiseProfile n;
    n.vision_sigma_mm = 0.05;
    n.foreshortening = true;
    n.p_residual = 0.1;
    const auto ctx = with_noise(n);
    const auto small = run_batch(ctx, 4, 9);
    const auto large = run_batch(ctx, 8, 9, 3);
    for (std::size_t k = 0; k < small.trials.size(); ++k) {
        const auto& a = small.trials[k];
        const auto& b = large.trials[k];
        EXPECT_EQ(a.seed, b.seed);
        EXPECT_EQ(a.outcome, b.outcome);
        EXPECT_EQ(a.phase_s, b.phase_s);
        EXPECT_EQ(a.estimated_offset, b.estimated_offset);
        EXPECT_EQ(a.residual_flip, b.residual_flip);
    }
}

TEST(Batch, RejectsEmpty) { EXPECT_THROW(run_batch(base_context(), 0, 1), ParameterError); }
