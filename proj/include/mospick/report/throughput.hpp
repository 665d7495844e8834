#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mospick/core/errors.hpp"

namespace mospick::report {

struct ThroughputSummary {
    std::size_t samples = 0;
    double mean_cycle_s = 0.0;
    double sd_cycle_s = 0.0;
    double movement_mean_s = 0.0;
    double vision_mean_s = 0.0;
    double mdph = 0.0;
    double mdph_sd = 0.0;
};

inline double manual_rate(double align_min, double extract_min, double batch = 20.0) {
    if (!(align_min > 0.0) || !(extract_min > 0.0) || !(batch > 0.0))
        throw ParameterError("manual_rate: times and batch must be positive");
    return batch / (align_min + extract_min) * 60.0;
}

// Population sd; Mdph sd by first-order propagation through 3600/c.
inline ThroughputSummary throughput_from_cycles(std::span<const double> cycles) {
    if (cycles.empty()) throw ParameterError("throughput_from_cycles: no samples");
    ThroughputSummary s;
    s.samples = cycles.size();
    const double n = static_cast<double>(cycles.size());
    s.mean_cycle_s = std::accumulate(cycles.begin(), cycles.end(), 0.0) / n;
    double ss = 0.0;
    for (double c : cycles) {
        if (!(c > 0.0)) throw ParameterError("throughput_from_cycles: cycle times must be positive");
        ss += (c - s.mean_cycle_s) * (c - s.mean_cycle_s);
    }
    s.sd_cycle_s = std::sqrt(ss / n);
    s.mdph = 3600.0 / s.mean_cycle_s;
    s.mdph_sd = 3600.0 / (s.mean_cycle_s * s.mean_cycle_s) * s.sd_cycle_s;
    s.movement_mean_s = s.mean_cycle_s;
    return s;
}

inline ThroughputSummary project_optimized(const ThroughputSummary& s, double savings_s = 2.5) {
    if (savings_s < 0.0) throw ParameterError("project_optimized: negative savings");
    if (savings_s >= s.mean_cycle_s) throw ParameterError("project_optimized: savings exceed the mean cycle");
    ThroughputSummary p = s;
    p.mean_cycle_s = s.mean_cycle_s - savings_s;
    p.movement_mean_s = std::max(0.0, s.movement_mean_s - savings_s);
    p.mdph = 3600.0 / p.mean_cycle_s;
    p.mdph_sd = 3600.0 / (p.mean_cycle_s * p.mean_cycle_s) * p.sd_cycle_s;
    return p;
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw ParameterError("percentile: no samples");
    if (q < 0.0 || q > 1.0) throw ParameterError("percentile: q outside [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct BoxStats {
    std::string method;
    std::size_t n = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

inline BoxStats box_stats(std::string method, std::span<const double> values) {
    if (values.empty()) throw ParameterError("box_stats: no samples");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    BoxStats b;
    b.method = std::move(method);
    b.n = v.size();
    b.min = v.front();
    b.max = v.back();
    b.q1 = percentile(v, 0.25);
    b.median = percentile(v, 0.5);
    b.q3 = percentile(v, 0.75);
    b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return b;
}

struct OperatorRow {
    int op;
    double align_min;
    double extract_min;
    double published_rate;
};

// 3MDF trial of eight untrained operators, 20 mosquitoes each.
inline constexpr std::array<OperatorRow, 8> kTableI{{
    {1, 2.4, 0.7, 393},
    {2, 2.5, 0.8, 364},
    {3, 2.3, 0.5, 429},
    {4, 2.5, 1.1, 338},
    {5, 1.5, 1.2, 444},
    {6, 1.3, 0.7, 600},
    {7, 1.1, 1.1, 545},
    {8, 1.2, 0.7, 649},
}};

inline double table_mean_rate() {
    double s = 0.0;
    for (const auto& r : kTableI) s += r.published_rate;
    return s / static_cast<double>(kTableI.size());
}

// Traditional manual dissection, transcribed from the published box plot
// (trained operators, 260 to 430 Mdph, median near 290). Reference only, not simulated.
inline const std::vector<double>& manual_reference_rates() {
    static const std::vector<double> v{260, 268, 275, 282, 286, 290, 290, 294, 300, 312, 330, 360, 395, 430};
    return v;
}

}  // namespace mospick::report
