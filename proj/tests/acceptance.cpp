// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mospick/calib/bernstein.hpp"
#include "mospick/control/controller.hpp"
#include "mospick/harness/config.hpp"
#include "mospick/report/throughput.hpp"
#include "mospick/segment/metrics.hpp"
#include "mospick/segment/postprocess.hpp"
#include "mospick/vision/core.hpp"
#include "mospick/vision/localizer.hpp"

using namespace mospick;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string f(double v, int d = 3) {
    char b[64];
    std::snprintf(b, sizeof b, "%.*f", d, v);
    return b;
}

std::string sci(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.2e", v);
    return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// --- 1, 2, 3, 7b ---------------------------------------------------------

struct Batches {
    control::BatchResult calibrated;
    control::BatchResult zero;
    double calibrated_wall_s = 0.0;
};

Batches run_batches() {
    const auto cal_cfg = harness::load_config("calibrated");
    const auto zero_cfg = harness::load_config("default");
    Batches b;
    const auto t0 = std::chrono::steady_clock::now();
    const auto cal_ctx = harness::make_context(cal_cfg);
    b.calibrated = control::run_batch(cal_ctx, 500, cal_cfg.seed, worker_count());
    b.calibrated_wall_s = seconds_since(t0);
    auto zero_ctx = cal_ctx;
    zero_ctx.noise = zero_cfg.noise;
    zero_ctx.cfg = zero_cfg.controller;
    b.zero = control::run_batch(zero_ctx, 50, zero_cfg.seed, worker_count());
    return b;
}

void criterion_1(const Batches& b) {
    const auto& c = b.calibrated.summary;
    const auto& z = b.zero.summary;
    const bool ok = c.grasp_rate() >= 0.995 && c.placement_rate() >= 0.85 && c.placement_rate() <= 0.95 &&
                    z.grasped == 50 && z.placed == 50 && b.calibrated_wall_s < 120.0;
    verdict(1, ok,
            "calibrated 500: grasp " + f(100 * c.grasp_rate(), 1) + "%, placement " + f(100 * c.placement_rate(), 1) +
                "%, " + f(b.calibrated_wall_s, 1) + " s; zero noise: grasp " + std::to_string(z.grasped) +
                "/50, placement " + std::to_string(z.placed) + "/50");
}

void criterion_2_3(const Batches& b) {
    const auto& t = b.calibrated.summary.throughput;
    const bool ok2 = t.movement_mean_s >= 6.8 && t.movement_mean_s <= 7.8 && t.mean_cycle_s >= 7.0 &&
                     t.mean_cycle_s <= 8.0 && t.mdph >= 450 && t.mdph <= 515 && t.mdph_sd <= 20.0;
    verdict(2, ok2,
            "movement " + f(t.movement_mean_s) + " s, vision " + f(t.vision_mean_s) + " s, cycle " +
                f(t.mean_cycle_s) + " s (sd " + f(t.sd_cycle_s) + "), " + f(t.mdph, 1) + " +/- " + f(t.mdph_sd, 1) +
                " Mdph");
    const auto p = report::project_optimized(t, 2.5);
    verdict(3, p.mdph >= 680 && p.mdph <= 740, "projected " + f(p.mdph, 1) + " Mdph at 2.5 s savings");
}

// --- 4 -------------------------------------------------------------------

void criterion_4() {
    double worst = 0.0;
    for (const auto& r : report::kTableI)
        worst = std::max(worst, std::abs(report::manual_rate(r.align_min, r.extract_min) - r.published_rate) /
                                    r.published_rate);
    const double mean = report::table_mean_rate();
    verdict(4, worst < 0.03 && mean == 470.25,
            "max relative deviation " + f(100 * worst, 2) + "%, mean of published rates " + f(mean, 2));
}

// --- 5 -------------------------------------------------------------------

int exhaustive_otsu(const RasterImage& img) {
    int best = -1;
    double best_var = -1.0;
    for (int t = 0; t < 256; ++t) {
        double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (auto v : img.data()) (v <= t ? (n0 += 1, s0 += v) : (n1 += 1, s1 += v));
        if (n0 == 0 || n1 == 0) continue;
        const double var = n0 * n1 * std::pow(s0 / n0 - s1 / n1, 2);
        // relative tolerance for ties between thresholds with identical partitions
        if (var > best_var * (1 + 1e-12)) {
            best_var = var;
            best = t;
        }
    }
    return best;
}

void criterion_5() {
    int agree = 0, total = 0;
    for (std::uint64_t k = 0; total < 1000; ++k) {
        Rng rng(derive_seed(5, 0, k));
        RasterImage img(16, 16, 1);
        for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
        ++total;
        agree += vision::otsu_threshold(img).threshold == exhaustive_otsu(img);
    }
    verdict(5, agree == total, std::to_string(agree) + "/" + std::to_string(total) + " images agree");
}

// --- 6 -------------------------------------------------------------------

void criterion_6() {
    double worst_rel = 0.0;
    const int maps = 200;
    for (int s = 0; s < maps; ++s) {
        Rng rng(derive_seed(6, 0, s));
        const int deg = 1 + static_cast<int>(rng.below(4));  // 1..4
        const double scale = 1000.0;
        std::vector<double> ax((deg + 1) * (deg + 1)), ay(ax.size());
        for (auto& v : ax) v = rng.uniform(-scale, scale);
        for (auto& v : ay) v = rng.uniform(-scale, scale);
        const double x0 = rng.uniform(0, 500), y0 = rng.uniform(0, 500);
        const double w = rng.uniform(300, 2000), h = rng.uniform(300, 1500);
        auto truth = [&](Vec2 p) {
            const double u = (p.x - x0) / w, v = (p.y - y0) / h;
            double x = 0, y = 0;
            for (int i = 0; i <= deg; ++i)
                for (int j = 0; j <= deg; ++j) {
                    const double m = std::pow(u, i) * std::pow(v, j);
                    x += ax[i * (deg + 1) + j] * m;
                    y += ay[i * (deg + 1) + j] * m;
                }
            return Vec2{x, y};
        };
        std::vector<calib::CalibrationPair> pairs;
        for (int j = 0; j < 7; ++j)
            for (int i = 0; i < 7; ++i) {
                const Vec2 p{x0 + w * i / 6.0, y0 + h * j / 6.0};
                pairs.push_back({p, truth(p)});
            }
        const auto m = calib::fit_bernstein_map(pairs);
        double coeff_scale = 0.0;
        for (double c : m.coeff_x) coeff_scale = std::max(coeff_scale, std::abs(c));
        for (double c : m.coeff_y) coeff_scale = std::max(coeff_scale, std::abs(c));
        for (int j = 0; j < 25; ++j)
            for (int i = 0; i < 25; ++i) {
                const Vec2 q{x0 + w * i / 24.0, y0 + h * j / 24.0};
                worst_rel = std::max(worst_rel, distance(calib::map_camera_to_robot(m, q).encoder, truth(q)) / coeff_scale);
            }
    }
    const bool ok_a = worst_rel < 1e-6;

    const OverheadCamera cam{{2560, 1922}, 0.015, {30, 50}, {1280, 961}, 1e-7};
    std::vector<calib::CalibrationPair> pairs;
    for (int j = 0; j < 7; ++j)
        for (int i = 0; i < 7; ++i) {
            const Vec2 w = Vec2{30, 50} + Vec2{-10 + 20.0 * i / 6, -10 + 20.0 * j / 6};
            pairs.push_back({cam.world_to_pixel(w), w * 100.0});
        }
    const auto m = calib::fit_bernstein_map(pairs);
    double worst = 0.0;
    for (int j = 0; j < 50; ++j)
        for (int i = 0; i < 50; ++i) {
            const Vec2 q{m.domain.x0 + m.domain.width() * i / 49, m.domain.y0 + m.domain.height() * j / 49};
            worst = std::max(worst, distance(calib::map_camera_to_robot(m, q).encoder, cam.pixel_to_world(q) * 100.0));
        }
    verdict(6, ok_a && worst < 1.0,
            "(a) " + std::to_string(maps) + " maps, max residual / coefficient scale " + sci(worst_rel) +
                "; (b) dense 50x50 max residual " + f(worst, 3) + " counts");
}

// --- 7 -------------------------------------------------------------------

void criterion_7(const Batches& b) {
    const WorkcellLayout L{};
    double worst_um = 0.0;
    int found = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Scene scene = make_scene(L, derive_seed(7, 0, s), SpecimenVariability{});
        const Vec2 tip = scene.specimen->neck_center() - L.onboard_view_offset;
        const auto r = segment::analyze_segmentation(render_onboard_labels(scene, tip));
        if (!r.dissection_point) continue;
        ++found;
        const auto cam = OnboardCamera::at_tooltip(L, tip);
        worst_um = std::max(worst_um, 1000.0 * distance(cam.pixel_to_world(*r.dissection_point), scene.specimen->neck_center()));
    }
    double worst_neck = 0.0;
    bool all_within = true;
    for (const auto& t : b.zero.trials) {
        const double e = std::isnan(t.neck_error) ? 1e9 : std::abs(t.neck_error);
        worst_neck = std::max(worst_neck, e);
        all_within = all_within && e <= 0.1;
    }
    verdict(7, found == 100 && worst_um < 50.0 && all_within,
            "dissection point max error " + f(worst_um, 1) + " um over " + std::to_string(found) +
                " frames; zero-noise neck error max " + f(1000 * worst_neck, 1) + " um over " +
                std::to_string(b.zero.trials.size()) + " trials");
}

// --- 8 -------------------------------------------------------------------

LabelMask rows(std::initializer_list<std::initializer_list<int>> r) {
    LabelMask m(4, 4);
    int y = 0;
    for (auto& row : r) {
        int x = 0;
        for (int v : row) m.at(x++, y) = static_cast<Category>(v);
        ++y;
    }
    return m;
}

struct HandCase {
    LabelMask truth, pred;
    double accuracy;
    segment::CategoryValues iou;
    segment::ConfusionMatrix cm;
};

void criterion_8() {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<HandCase> cases;
    // quadrants, four mistakes
    cases.push_back({rows({{0, 0, 1, 1}, {0, 0, 1, 1}, {2, 2, 3, 3}, {2, 2, 3, 3}}),
                     rows({{0, 0, 1, 0}, {0, 0, 1, 1}, {2, 3, 3, 3}, {1, 2, 3, 2}}),
                     12.0 / 16.0,
                     {4.0 / 5.0, 3.0 / 5.0, 2.0 / 5.0, 3.0 / 5.0},
                     {{{4, 0, 0, 0}, {1, 3, 0, 0}, {0, 1, 2, 1}, {0, 0, 1, 3}}}});
    // perfect
    cases.push_back({rows({{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}}),
                     rows({{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}}),
                     1.0,
                     {1.0, 1.0, 1.0, 1.0},
                     {{{4, 0, 0, 0}, {0, 4, 0, 0}, {0, 0, 4, 0}, {0, 0, 0, 4}}}});
    // head absent in both: IoU undefined, w-IoU renormalized over the rest
    cases.push_back({rows({{0, 0, 0, 0}, {0, 1, 1, 0}, {0, 3, 3, 3}, {3, 3, 3, 3}}),
                     rows({{0, 0, 0, 1}, {0, 1, 0, 0}, {0, 3, 3, 3}, {0, 3, 3, 3}}),
                     13.0 / 16.0,
                     {6.0 / 9.0, 1.0 / 3.0, nan, 6.0 / 7.0},
                     {{{6, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 0, 0}, {1, 0, 0, 6}}}});
    const segment::ClassWeights w{{0.1, 0.2, 0.3, 0.4}};
    bool ok = true;
    for (const auto& c : cases) {
        const auto cm = segment::confusion_matrix(c.pred, c.truth);
        ok = ok && cm == c.cm;
        ok = ok && segment::pixel_accuracy(c.pred, c.truth) == c.accuracy;
        const auto iou = segment::per_category_iou(c.pred, c.truth);
        double num = 0, den = 0;
        for (int k = 0; k < 4; ++k) {
            if (std::isnan(c.iou[k])) {
                ok = ok && std::isnan(iou[k]);
                continue;
            }
            ok = ok && iou[k] == c.iou[k];
            num += w.weight[k] * c.iou[k];
            den += w.weight[k];
        }
        ok = ok && segment::weighted_iou(c.pred, c.truth, w) == num / den;
    }
    segment::ProbabilityMap uniform(4, 4);
    const double ce = segment::weighted_cross_entropy(uniform, cases[0].truth, segment::ClassWeights{{1, 1, 1, 1}});
    const double err = std::abs(ce - std::log(4.0));
    verdict(8, ok && err < 1e-9, "3 hand-built pairs exact: " + std::string(ok ? "yes" : "no") +
                                     "; uniform cross entropy - ln 4 = " + sci(err));
}

// --- 9 -------------------------------------------------------------------

BinaryMask random_mask(Rng& rng, int w, int h) {
    const double p = rng.uniform(0.2, 0.8);
    BinaryMask m(w, h);
    for (auto& v : m.data()) v = rng.bernoulli(p) ? 1 : 0;
    return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

void criterion_9() {
    const int n = 200;
    int idem = 0, anti = 0, mono = 0, equi = 0;
    for (int s = 0; s < n; ++s) {
        Rng rng(derive_seed(9, 1, s));
        const int w = 8 + static_cast<int>(rng.below(60)), h = 8 + static_cast<int>(rng.below(60));
        const auto m = random_mask(rng, w, h);
        const vision::KernelSize k{1 + static_cast<int>(rng.below(9)), 1 + static_cast<int>(rng.below(9))};
        const auto o = vision::morph_open(m, k);
        idem += vision::morph_open(o, k) == o;
        anti += subset(vision::morph_erode(m, k), m);
        double a = rng.uniform(0, 0.05), b = rng.uniform(0, 0.05);
        if (a > b) std::swap(a, b);
        const auto ca = vision::connected_components(m, a);
        const auto cb = vision::connected_components(m, b);
        bool nested = cb.size() <= ca.size();
        for (const auto& c : cb)
            nested = nested && std::any_of(ca.begin(), ca.end(), [&](const auto& d) { return d.label == c.label; });
        mono += nested;
    }

    const WorkcellLayout L{};
    const auto cam = OverheadCamera::from_layout(L);
    vision::PipelineParams p;
    p.area_threshold = 0.0002;
    const Rect crop = vision::default_overhead_crop(L);
    const double mm_per_px = L.overhead_scale_um * 1e-3;
    const Scene base = make_scene(L, 0, SpecimenVariability::none());
    const Vec2 c0 = vision::locate_mosquito(render_overhead(base), p, crop).centroid;
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
        Rng rng(derive_seed(9, 2, s));
        const Vec2 d{double(int(rng.below(161)) - 80), double(int(rng.below(161)) - 80)};
        const Scene moved = translated(base, {d.x * mm_per_px, d.y * mm_per_px, 0.0});
        const Vec2 p0 = base.specimen->position;
        const Vec2 expect = cam.world_to_pixel(p0 + d * mm_per_px) - cam.world_to_pixel(p0);
        const auto r = vision::locate_mosquito(render_overhead(moved), p, crop);
        if (!r.present) continue;
        const Vec2 got = r.centroid - c0;
        const double e = std::max(std::abs(got.x - expect.x), std::abs(got.y - expect.y));
        worst = std::max(worst, e);
        equi += e <= 1.0;
    }
    const bool ok = idem == n && anti == n && mono == n && equi == n;
    verdict(9, ok,
            "opening idempotent " + std::to_string(idem) + "/" + std::to_string(n) + ", erosion anti-extensive " +
                std::to_string(anti) + "/" + std::to_string(n) + ", threshold monotone " + std::to_string(mono) + "/" +
                std::to_string(n) + ", translation within 1 px " + std::to_string(equi) + "/" + std::to_string(n) +
                " (max " + f(worst, 3) + " px)");
}

// --- 10 ------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool run_cli(const std::string& args) {
    const std::string cmd = std::string(MOSPICK_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

void criterion_10() {
    const fs::path root = fs::temp_directory_path() / "mospick_acceptance";
    fs::remove_all(root);
    struct Run {
        std::string args;
        std::vector<std::string> files;
    };
    const std::vector<Run> runs{
        {"batch --n 20 --seed 7 --config calibrated", {"trials.csv", "summary.json"}},
        {"batch --n 12 --seed 3 --config calibrated --threads 3", {"trials.csv"}},
        {"segment-eval --n 6 --seed 2 --config calibrated", {"segment_eval.csv", "segment_eval.json"}},
        {"report --n 8 --seed 5 --config calibrated", {"table1.csv", "boxes.csv", "trials.csv"}},
        {"apply-map --seed 1 --pixel 900,961 --pixel 1200,700", {"apply_map.csv"}},
    };
    int identical = 0, compared = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const fs::path a = root / ("r" + std::to_string(i) + "a"), b = root / ("r" + std::to_string(i) + "b");
        if (runs[i].args.starts_with("apply-map")) {
            run_cli("calibrate --out " + a.string());
            run_cli("calibrate --out " + b.string());
        }
        const bool ran = run_cli(runs[i].args + " --out " + a.string()) && run_cli(runs[i].args + " --out " + b.string());
        for (const auto& file : runs[i].files) {
            ++compared;
            const std::string x = slurp(a / file);
            identical += ran && !x.empty() && x == slurp(b / file);
        }
    }
    verdict(10, identical == compared,
            std::to_string(identical) + "/" + std::to_string(compared) + " output files byte-identical across repeats");
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto safely = [](int id, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            verdict(id, false, std::string("exception: ") + e.what());
        }
    };
    std::optional<Batches> b;
    try {
        b = run_batches();
    } catch (const std::exception& e) {
        for (int id : {1, 2, 3, 7}) verdict(id, false, std::string("batch failed: ") + e.what());
    }
    if (b) {
        safely(1, [&] { criterion_1(*b); });
        safely(2, [&] { criterion_2_3(*b); });
    }
    safely(4, criterion_4);
    safely(5, criterion_5);
    safely(6, criterion_6);
    if (b) safely(7, [&] { criterion_7(*b); });
    safely(8, criterion_8);
    safely(9, criterion_9);
    safely(10, criterion_10);
    std::printf("%d criteria failed, %.1f s\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
