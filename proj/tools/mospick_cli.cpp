#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mospick/calib/calibration.hpp"
#include "mospick/control/controller.hpp"
#include "mospick/harness/config.hpp"
#include "mospick/report/io.hpp"
#include "mospick/scene/io.hpp"
#include "mospick/segment/metrics.hpp"

namespace fs = std::filesystem;
using namespace mospick;
using nlohmann::json;

namespace {

struct Common {
    std::string config = "default";
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

struct Env {
    harness::HarnessConfig cfg;
    fs::path out;
    std::uint64_t seed;
    unsigned threads;
};

Env setup(const Common& c) {
    Env e;
    e.cfg = harness::load_config(c.config);
    e.out = c.out.empty() ? harness::output_dir(e.cfg) : fs::path(c.out);
    e.seed = c.seed.value_or(e.cfg.seed);
    e.threads = c.threads.value_or(e.cfg.threads);
    fs::create_directories(e.out);
    return e;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

json calibration_json(const control::CalibrationState& c) {
    return {{"schema", "mospick.workcell-calibration/1"},
            {"overhead", c.overhead},
            {"onboard", c.onboard},
            {"onboard_tooltip_px", c.onboard_tooltip_px},
            {"resolution_mm", c.resolution_mm}};
}

calib::CalibrationMap read_overhead_map(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot read calibration " + p.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("calibration: ") + e.what());
    }
    if (j.contains("overhead")) return j.at("overhead").get<calib::CalibrationMap>();
    return j.get<calib::CalibrationMap>();
}

Vec2 parse_pixel(const std::string& s) {
    double x = 0, y = 0;
    char comma = 0;
    std::istringstream in(s);
    if (!(in >> x >> comma >> y) || comma != ',') throw ConfigError("pixel must look like X,Y: " + s);
    return {x, y};
}

// --- subcommands -----------------------------------------------------------

int cmd_locate(const Common& c, bool empty, bool trace, bool images) {
    auto e = setup(c);
    const Scene scene = empty ? empty_scene(e.cfg.layout) : make_scene(e.cfg.layout, e.seed, e.cfg.variability);
    const RasterImage frame = render_overhead(scene);
    const Rect crop_rect = vision::default_overhead_crop(e.cfg.layout);
    vision::LocalizerTrace tr;
    const auto det = vision::locate_mosquito(frame, e.cfg.pipeline, crop_rect, trace ? &tr : nullptr);
    json out = {{"seed", e.seed}, {"present", det.present}, {"components", det.components.size()}};
    if (det.present) {
        out["centroid_px"] = {std::stod(report::fmt(det.centroid.x, 3)), std::stod(report::fmt(det.centroid.y, 3))};
        out["bbox"] = {det.bbox.x, det.bbox.y, det.bbox.width, det.bbox.height};
        const auto cam = OverheadCamera::from_layout(e.cfg.layout);
        const Vec2 w = cam.pixel_to_world(det.centroid);
        out["centroid_world_mm"] = {std::stod(report::fmt(w.x, 4)), std::stod(report::fmt(w.y, 4))};
    }
    if (scene.specimen) {
        const LabelMask labels = render_overhead_labels(scene);
        double sx = 0, sy = 0, cnt = 0;
        for (int y = 0; y < labels.height(); ++y)
            for (int x = 0; x < labels.width(); ++x)
                if (labels.at(x, y) != Category::background) sx += x, sy += y, cnt += 1;
        if (cnt > 0) out["true_centroid_px"] = {std::stod(report::fmt(sx / cnt, 3)), std::stod(report::fmt(sy / cnt, 3))};
    }
    write_json(e.out / "locate.json", out);
    if (images) {
        control::TrialFrames f;
        f.overhead = frame;
        f.detection = det;
        report::write_gallery(e.out, "locate", f, crop_rect);
    }
    if (trace) {
        fs::create_directories(e.out / "trace");
        int i = 0;
        for (const auto& [name, img] : tr.stages) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%02d_", i++);
            write_png(e.out / "trace" / (buf + name + ".png"), img);
        }
    }
    std::cout << out.dump() << '\n';
    return 0;
}

int cmd_segment_eval(const Common& c, int n) {
    auto e = setup(c);
    const auto& L = e.cfg.layout;
    const segment::ClassWeights w{};
    segment::ConfusionMatrix total{};
    std::vector<LabelMask> truths;
    auto csv = open_out(e.out / "segment_eval.csv");
    csv << "frame,seed,pixel_accuracy,iou_background,iou_proboscis,iou_head,iou_body,weighted_iou,dissection_error_um\n";
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        const std::uint64_t seed = derive_seed(e.seed, 0x5e6, k);
        const Scene scene = make_scene(L, seed, e.cfg.variability);
        const Vec2 tip = scene.specimen->neck_center() - L.onboard_view_offset;
        const LabelMask truth = render_onboard_labels(scene, tip);
        const segment::OracleSegmenter seg(truth, e.cfg.noise.label_noise, derive_seed(seed, 2));
        const LabelMask pred = seg.segment(RasterImage(truth.width(), truth.height(), 1));
        const auto cm = segment::confusion_matrix(pred, truth);
        for (int a = 0; a < kCategoryCount; ++a)
            for (int b = 0; b < kCategoryCount; ++b) total[a][b] += cm[a][b];
        const auto iou = segment::per_category_iou(cm);
        double err_um = std::numeric_limits<double>::quiet_NaN();
        const auto r = segment::analyze_segmentation(pred, {e.cfg.controller.edge_dilation, e.cfg.controller.edge_dilation});
        if (r.dissection_point) {
            const auto cam = OnboardCamera::at_tooltip(L, tip);
            err_um = 1000.0 * distance(cam.pixel_to_world(*r.dissection_point), scene.specimen->neck_center());
            worst = std::max(worst, err_um);
        }
        csv << k << ',' << seed << ',' << report::fmt(segment::pixel_accuracy(cm)) << ',' << report::fmt(iou[0]) << ','
            << report::fmt(iou[1]) << ',' << report::fmt(iou[2]) << ',' << report::fmt(iou[3]) << ','
            << report::fmt(segment::weighted_iou(cm, w)) << ',' << report::fmt(err_um, 2) << '\n';
    }
    json cmj = json::array();
    for (const auto& row : total) cmj.push_back(row);
    const auto iou = segment::per_category_iou(total);
    const json summary = {{"frames", n},
                          {"pixel_accuracy", std::stod(report::fmt(segment::pixel_accuracy(total)))},
                          {"per_category_iou", {std::stod(report::fmt(iou[0])), std::stod(report::fmt(iou[1])),
                                                std::stod(report::fmt(iou[2])), std::stod(report::fmt(iou[3]))}},
                          {"weighted_iou", std::stod(report::fmt(segment::weighted_iou(total, w)))},
                          {"confusion_truth_by_pred", cmj},
                          {"max_dissection_error_um", std::stod(report::fmt(worst, 2))}};
    write_json(e.out / "segment_eval.json", summary);
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_calibrate(const Common& c) {
    auto e = setup(c);
    const auto state = control::calibrate_workcell(e.cfg.layout, e.cfg.motion, e.cfg.controller.home);
    write_json(e.out / "calibration.json", calibration_json(state));
    std::cout << "overhead residual max " << report::fmt(state.overhead.residual_max, 3) << " counts, rms "
              << report::fmt(state.overhead.residual_rms, 3) << "; onboard counts/px "
              << report::fmt(state.onboard.counts_per_px_x, 4) << ", " << report::fmt(state.onboard.counts_per_px_y, 4)
              << '\n';
    return 0;
}

int cmd_apply_map(const Common& c, const std::string& calibration, const std::vector<std::string>& pixels) {
    auto e = setup(c);
    const fs::path src = calibration.empty() ? e.out / "calibration.json" : fs::path(calibration);
    const auto map = read_overhead_map(src);
    auto csv = open_out(e.out / "apply_map.csv");
    csv << "pixel_x,pixel_y,encoder_x,encoder_y,extrapolated\n";
    for (const auto& s : pixels) {
        const Vec2 px = parse_pixel(s);
        const auto m = calib::map_camera_to_robot(map, px);
        csv << report::fmt(px.x, 3) << ',' << report::fmt(px.y, 3) << ',' << report::fmt(m.encoder.x, 3) << ','
            << report::fmt(m.encoder.y, 3) << ',' << int(m.extrapolated) << '\n';
        std::cout << s << " -> " << report::fmt(m.encoder.x, 3) << ", " << report::fmt(m.encoder.y, 3) << " counts";
        if (m.extrapolated) std::cout << "  [" << m.warning << "]";
        std::cout << '\n';
    }
    return 0;
}

int cmd_trial(const Common& c, bool frames) {
    auto e = setup(c);
    const auto ctx = harness::make_context(e.cfg);
    control::TrialFrames f;
    Robot robot;
    Scene end_scene;
    const auto rec = control::run_trial_on(ctx, make_scene(ctx.layout, e.seed, ctx.variability), e.seed,
                                           frames ? &f : nullptr, &robot, &end_scene);
    {
        auto csv = open_out(e.out / "trial.csv");
        report::write_trials_csv(csv, {rec});
    }
    {
        auto log = open_out(e.out / "telemetry.jsonl");
        robot.write_log(log);
    }
    save_scene(e.out / "trial_end_scene.json", end_scene);
    if (frames) {
        report::write_gallery(e.out / "frames", "trial", f, vision::default_overhead_crop(ctx.layout));
        for (std::size_t i = 0; i < f.onboard.size(); ++i)
            write_pgm(e.out / "frames" / ("trial_onboard" + std::to_string(i + 1) + "_labels.pgm"), f.onboard[i].labels);
    }
    std::cout << "seed " << rec.seed << ": " << rec.outcome << ", cycle " << report::fmt(rec.cycle_s(), 3) << " s\n";
    return 0;
}

control::BatchResult batch_to_disk(const Env& e, const control::TrialContext& ctx, std::size_t n) {
    auto b = control::run_batch(ctx, n, e.seed, e.threads);
    {
        auto csv = open_out(e.out / "trials.csv");
        report::write_trials_csv(csv, b.trials);
    }
    write_json(e.out / "summary.json", report::summary_json(b.summary));
    return b;
}

int cmd_batch(const Common& c, std::size_t n) {
    auto e = setup(c);
    const auto ctx = harness::make_context(e.cfg);
    const auto b = batch_to_disk(e, ctx, n);
    const auto& s = b.summary;
    std::cout << "config " << e.cfg.name << ", " << s.n << " trials: grasp " << s.grasped << '/' << s.n
              << ", placement " << s.placed << '/' << s.n << ", mean cycle "
              << report::fmt(s.throughput.mean_cycle_s, 3) << " s, " << report::fmt(s.throughput.mdph, 1) << " +/- "
              << report::fmt(s.throughput.mdph_sd, 1) << " Mdph\n";
    return 0;
}

int cmd_report(const Common& c, bool table_only, const std::string& trials, std::size_t n, bool gallery) {
    auto e = setup(c);
    {
        auto t = open_out(e.out / "table1.csv");
        report::write_table1_csv(t);
    }
    std::cout << "table1: mean of published rates " << report::fmt(report::table_mean_rate(), 2) << " Mdph\n";
    if (table_only) return 0;

    std::vector<double> cycles;
    std::optional<control::TrialContext> ctx;
    if (!trials.empty()) {
        std::ifstream in(trials);
        if (!in) throw ConfigError("cannot read " + trials);
        cycles = report::read_cycle_times(in);
    } else {
        ctx = harness::make_context(e.cfg);
        for (const auto& t : batch_to_disk(e, *ctx, n).trials) cycles.push_back(t.cycle_s());
    }
    const auto s = report::throughput_from_cycles(cycles);
    write_json(e.out / "throughput.json",
               {{"measured", report::throughput_json(s)}, {"projected", report::throughput_json(report::project_optimized(s))}});
    {
        auto b = open_out(e.out / "boxes.csv");
        report::write_box_csv(b, report::comparison_boxes(cycles));
    }
    if (gallery) {
        if (!ctx) ctx = harness::make_context(e.cfg);
        for (std::uint64_t k = 0; k < 3; ++k) {
            control::TrialFrames f;
            const auto seed = control::trial_seed(e.seed, k);
            control::run_trial(*ctx, seed, &f);
            report::write_gallery(e.out / "gallery", "trial" + std::to_string(k), f,
                                  vision::default_overhead_crop(ctx->layout));
        }
    }
    std::cout << "simulated " << report::fmt(s.mdph, 1) << " Mdph, projected "
              << report::fmt(report::project_optimized(s).mdph, 1) << " Mdph\n";
    return 0;
}

int cmd_calibrate_noise(const Common& c, std::size_t n, std::vector<double> sigmas, std::vector<double> residuals,
                        double target) {
    auto e = setup(c);
    auto ctx = harness::make_context(e.cfg);
    auto csv = open_out(e.out / "noise_sweep.csv");
    csv << "vision_sigma_mm,p_residual,foreshortening,trials,grasp_rate,placement_rate\n";
    double best_gap = 1e9;
    control::NoiseProfile best;
    for (double sigma : sigmas)
        for (double p : residuals) {
            ctx.noise = e.cfg.noise;
            ctx.noise.foreshortening = true;
            ctx.noise.vision_sigma_mm = sigma;
            ctx.noise.p_residual = p;
            const auto b = control::run_batch(ctx, n, e.seed, e.threads);
            const double rate = b.summary.placement_rate();
            csv << report::fmt(sigma, 4) << ',' << report::fmt(p, 4) << ",1," << n << ','
                << report::fmt(b.summary.grasp_rate(), 4) << ',' << report::fmt(rate, 4) << '\n';
            csv.flush();
            std::cout << "sigma " << sigma << " p_residual " << p << ": placement " << report::fmt(rate, 4) << '\n';
            if (std::abs(rate - target) < best_gap - 1e-12) {
                best_gap = std::abs(rate - target);
                best = ctx.noise;
            }
        }
    harness::HarnessConfig out = e.cfg;
    out.name = "calibrated";
    out.noise = best;
    out.noise.name = "calibrated";
    std::ostringstream notes;
    notes << "noise chosen by calibrate-noise: " << n << " trials per grid point, seed " << e.seed
          << ", placement target " << target << ", nearest grid point";
    out.notes = notes.str();
    open_out(e.out / "calibrated.json") << harness::dump_config(out);
    std::cout << "chosen sigma " << best.vision_sigma_mm << " p_residual " << best.p_residual << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mosquito pick-and-place workcell simulator"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "config name (default, calibrated) or path to a JSON config");
        sub->add_option("--out", common.out, "output directory (overrides MOSPICK_OUT and the config)");
        sub->add_option("--seed", common.seed, "master seed (overrides the config)");
        sub->add_option("--threads", common.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    };

    bool empty = false, trace = false, images = false;
    auto* locate = app.add_subcommand("locate", "overhead localization of one staged scene");
    add_common(locate);
    locate->add_flag("--empty", empty, "stage an empty cup");
    locate->add_flag("--trace", trace, "dump every pipeline stage as PNG");
    locate->add_flag("--images", images, "write the annotated overhead crop");

    int frames_n = 100;
    auto* seg_eval = app.add_subcommand("segment-eval", "segmentation metrics and dissection-point error over seeded frames");
    add_common(seg_eval);
    seg_eval->add_option("--n", frames_n, "number of frames")->check(CLI::PositiveNumber);

    auto* calibrate = app.add_subcommand("calibrate", "grid calibration of the overhead map and onboard scale");
    add_common(calibrate);

    std::string calib_file;
    std::vector<std::string> pixels;
    auto* apply = app.add_subcommand("apply-map", "map overhead pixels to encoder counts");
    add_common(apply);
    apply->add_option("--calibration", calib_file, "calibration JSON (default: <out>/calibration.json)");
    apply->add_option("--pixel", pixels, "pixel as X,Y (repeatable)")->required();

    bool dump_frames = true;
    auto* trial = app.add_subcommand("trial", "one pick-and-place trial with frame dumps");
    add_common(trial);
    trial->add_flag("--frames,!--no-frames", dump_frames, "write annotated frames (default on)");

    std::size_t batch_n = 50;
    auto* batch = app.add_subcommand("batch", "seeded batch of trials");
    add_common(batch);
    batch->add_option("--n", batch_n, "number of trials")->check(CLI::PositiveNumber);

    bool table_only = false, gallery = false;
    std::string trials_csv;
    std::size_t report_n = 50;
    auto* rep = app.add_subcommand("report", "throughput tables, comparison boxes and frame gallery");
    add_common(rep);
    rep->add_flag("--table1", table_only, "only the operator table");
    rep->add_option("--trials", trials_csv, "use an existing trials.csv instead of running a batch");
    rep->add_option("--n", report_n, "batch size when no trials file is given")->check(CLI::PositiveNumber);
    rep->add_flag("--gallery", gallery, "write annotated frames of three trials");

    std::size_t noise_n = 500;
    std::vector<double> sigmas{0.04, 0.05, 0.06};
    std::vector<double> residuals{0.0, 0.02, 0.04};
    double target = 0.90;
    auto* cal_noise = app.add_subcommand("calibrate-noise", "sweep the noise grid and write calibrated.json");
    add_common(cal_noise);
    cal_noise->add_option("--n", noise_n, "trials per grid point")->check(CLI::PositiveNumber);
    cal_noise->add_option("--sigmas", sigmas, "vision sigma grid (mm)");
    cal_noise->add_option("--p-residual", residuals, "residual flip grid");
    cal_noise->add_option("--target", target, "placement rate to match")->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*locate) return cmd_locate(common, empty, trace, images);
        if (*seg_eval) return cmd_segment_eval(common, frames_n);
        if (*calibrate) return cmd_calibrate(common);
        if (*apply) return cmd_apply_map(common, calib_file, pixels);
        if (*trial) return cmd_trial(common, dump_frames);
        if (*batch) return cmd_batch(common, batch_n);
        if (*rep) return cmd_report(common, table_only, trials_csv, report_n, gallery);
        if (*cal_noise) return cmd_calibrate_noise(common, noise_n, sigmas, residuals, target);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
