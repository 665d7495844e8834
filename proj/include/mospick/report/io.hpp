#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mospick/control/controller.hpp"
#include "mospick/core/image_io.hpp"
#include "mospick/report/throughput.hpp"

namespace mospick::report {

// Fixed formatting so repeated runs give byte-identical files.
inline std::string fmt(double v, int digits = 6) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s = buf;
    if (s == "-0." + std::string(static_cast<std::size_t>(digits), '0')) s.erase(0, 1);
    return s;
}

inline constexpr const char* kTrialHeader =
    "trial,seed,grasp_success,placement_success,outcome,true_offset_mm,estimated_offset_mm,neck_error_mm,"
    "neck_lateral_mm,flipped,residual_flip,drag_mm,overhead_vision_s,approach_s,grasp_s,drag_s,onboard_vision_s,"
    "place_s,retreat_s,movement_s,vision_s,cycle_s";

inline void write_trials_csv(std::ostream& out, const std::vector<control::TrialRecord>& trials) {
    out << kTrialHeader << '\n';
    for (std::size_t k = 0; k < trials.size(); ++k) {
        const auto& t = trials[k];
        out << k << ',' << t.seed << ',' << int(t.grasp_success) << ',' << int(t.placement_success) << ','
            << t.outcome << ',' << fmt(t.true_offset) << ',' << fmt(t.estimated_offset) << ',' << fmt(t.neck_error)
            << ',' << fmt(t.neck_lateral) << ',' << int(t.flipped) << ',' << int(t.residual_flip) << ','
            << fmt(t.drag_distance);
        for (double p : t.phase_s) out << ',' << fmt(p);
        out << ',' << fmt(t.movement_s()) << ',' << fmt(t.vision_s()) << ',' << fmt(t.cycle_s()) << '\n';
    }
}

// Cycle-time column of a trials CSV.
inline std::vector<double> read_cycle_times(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTrialHeader) throw IoError("trials CSV: unexpected header");
    std::vector<double> cycles;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        cycles.push_back(std::stod(line.substr(comma + 1)));
    }
    if (cycles.empty()) throw IoError("trials CSV: no rows");
    return cycles;
}

inline nlohmann::json throughput_json(const ThroughputSummary& s) {
    return {{"samples", s.samples},
            {"mean_cycle_s", std::stod(fmt(s.mean_cycle_s))},
            {"sd_cycle_s", std::stod(fmt(s.sd_cycle_s))},
            {"movement_mean_s", std::stod(fmt(s.movement_mean_s))},
            {"vision_mean_s", std::stod(fmt(s.vision_mean_s))},
            {"mdph", std::stod(fmt(s.mdph, 3))},
            {"mdph_sd", std::stod(fmt(s.mdph_sd, 3))}};
}

inline nlohmann::json summary_json(const control::BatchSummary& s) {
    nlohmann::json outcomes = nlohmann::json::object();
    for (const auto& [k, v] : s.outcomes) outcomes[k] = v;
    return {{"trials", s.n},
            {"grasped", s.grasped},
            {"placed", s.placed},
            {"grasp_rate", std::stod(fmt(s.grasp_rate()))},
            {"placement_rate", std::stod(fmt(s.placement_rate()))},
            {"flipped", s.flipped},
            {"residual_flips", s.residual_flips},
            {"outcomes", outcomes},
            {"throughput", throughput_json(s.throughput)},
            {"projected", throughput_json(project_optimized(s.throughput))}};
}

inline constexpr const char* kBoxHeader = "method,n,min,q1,median,q3,max,mean";

inline void write_box_csv(std::ostream& out, const std::vector<BoxStats>& boxes) {
    out << kBoxHeader << '\n';
    for (const auto& b : boxes)
        out << b.method << ',' << b.n << ',' << fmt(b.min, 3) << ',' << fmt(b.q1, 3) << ',' << fmt(b.median, 3) << ','
            << fmt(b.q3, 3) << ',' << fmt(b.max, 3) << ',' << fmt(b.mean, 3) << '\n';
}

inline void write_table1_csv(std::ostream& out) {
    out << "operator,align_min,extract_min,total_min,published_rate,recomputed_rate,rel_diff\n";
    for (const auto& r : kTableI) {
        const double rate = manual_rate(r.align_min, r.extract_min);
        out << r.op << ',' << fmt(r.align_min, 1) << ',' << fmt(r.extract_min, 1) << ','
            << fmt(r.align_min + r.extract_min, 1) << ',' << fmt(r.published_rate, 0) << ',' << fmt(rate, 2) << ','
            << fmt((rate - r.published_rate) / r.published_rate, 4) << '\n';
    }
    out << "mean,,,,," << fmt(table_mean_rate(), 2) << ",\n";
}

// Rates per method for the comparison boxes. Simulated cycles give one
// rate per trial (3600 / cycle).
inline std::vector<BoxStats> comparison_boxes(const std::vector<double>& cycles, double savings_s = 2.5) {
    std::vector<double> table;
    for (const auto& r : kTableI) table.push_back(r.published_rate);
    std::vector<double> sim, proj;
    for (double c : cycles) {
        sim.push_back(3600.0 / c);
        if (c > savings_s) proj.push_back(3600.0 / (c - savings_s));
    }
    std::vector<BoxStats> out;
    out.push_back(box_stats("manual_reference", manual_reference_rates()));
    out.push_back(box_stats("fixture_table", table));
    out.push_back(box_stats("pick_and_place_sim", sim));
    if (!proj.empty()) out.push_back(box_stats("projected_sim", proj));
    return out;
}

// --- gallery ---------------------------------------------------------------

inline void mark(RasterImage& img, Vec2 p, std::array<std::uint8_t, 3> c, int arm = 12, int thick = 1) {
    const int cx = static_cast<int>(std::lround(p.x));
    const int cy = static_cast<int>(std::lround(p.y));
    auto set = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
        for (int ch = 0; ch < std::min(3, img.channels()); ++ch) img.at(x, y, ch) = c[static_cast<std::size_t>(ch)];
    };
    for (int d = -arm; d <= arm; ++d)
        for (int t = -thick; t <= thick; ++t) {
            set(cx + d, cy + t);
            set(cx + t, cy + d);
        }
}

inline void outline(RasterImage& img, const Rect& r, std::array<std::uint8_t, 3> c) {
    for (int x = r.x; x < r.right(); ++x) {
        mark(img, {double(x), double(r.y)}, c, 0, 1);
        mark(img, {double(x), double(r.bottom() - 1)}, c, 0, 1);
    }
    for (int y = r.y; y < r.bottom(); ++y) {
        mark(img, {double(r.x), double(y)}, c, 0, 1);
        mark(img, {double(r.right() - 1), double(y)}, c, 0, 1);
    }
}

inline RasterImage overlay_labels(const RasterImage& img, const LabelMask& labels, double alpha = 0.45) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 4> colors{
        {{0, 0, 0}, {230, 60, 40}, {40, 200, 60}, {50, 110, 230}}};
    RasterImage out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const int cat = category_index(labels.at(x, y));
            for (int ch = 0; ch < 3; ++ch) {
                const double base = img.at(x, y, img.channels() == 1 ? 0 : ch);
                const double v = cat == 0 ? base : (1 - alpha) * base + alpha * colors[cat][ch];
                out.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    return out;
}

// Annotated frames of one trial: overhead crop with the detection and each
// onboard frame with labels, grasp point and junction marked.
inline std::vector<std::filesystem::path> write_gallery(const std::filesystem::path& dir, const std::string& stem,
                                                        const control::TrialFrames& f, const Rect& crop_rect) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    if (f.overhead) {
        RasterImage view = crop(*f.overhead, crop_rect);
        if (f.detection && f.detection->present) {
            Rect b = f.detection->bbox;
            b.x -= crop_rect.x;
            b.y -= crop_rect.y;
            outline(view, b, {255, 220, 0});
            mark(view, f.detection->centroid - Vec2{double(crop_rect.x), double(crop_rect.y)}, {255, 0, 0}, 25, 2);
        }
        written.push_back(dir / (stem + "_overhead.png"));
        write_png(written.back(), view);
    }
    for (std::size_t i = 0; i < f.onboard.size(); ++i) {
        const auto& seg = i < f.segmentations.size() ? &f.segmentations[i] : nullptr;
        RasterImage view = overlay_labels(f.onboard[i].image, seg ? seg->mask : f.onboard[i].labels);
        if (seg) {
            if (seg->grasp_point) mark(view, *seg->grasp_point, {255, 255, 0}, 15, 1);
            if (seg->proboscis_head_edge_centroid) mark(view, *seg->proboscis_head_edge_centroid, {0, 255, 255}, 15, 1);
            if (seg->dissection_point) mark(view, *seg->dissection_point, {255, 0, 255}, 15, 1);
        }
        written.push_back(dir / (stem + "_onboard" + std::to_string(i + 1) + ".png"));
        write_png(written.back(), view);
    }
    return written;
}

}  // namespace mospick::report
