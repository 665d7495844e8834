#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mospick/core/errors.hpp"
#include "mospick/core/image.hpp"

namespace mospick::segment {

// counts[truth][pred]
using ConfusionMatrix = std::array<std::array<long long, kCategoryCount>, kCategoryCount>;
using CategoryValues = std::array<double, kCategoryCount>;

struct ClassWeights {
    CategoryValues weight{0.25, 0.25, 0.25, 0.25};
    friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

inline void require_same_shape(const LabelMask& a, const LabelMask& b) {
    if (!a.same_shape(b)) throw ShapeError("label masks differ in shape");
}

inline ConfusionMatrix confusion_matrix(const LabelMask& pred, const LabelMask& truth) {
    require_same_shape(pred, truth);
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < pred.size(); ++i)
        ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    return m;
}

// Each row divided by its total; empty rows stay zero.
inline std::array<CategoryValues, kCategoryCount> row_normalized(const ConfusionMatrix& m) {
    std::array<CategoryValues, kCategoryCount> out{};
    for (std::size_t t = 0; t < kCategoryCount; ++t) {
        long long total = 0;
        for (auto v : m[t]) total += v;
        if (total == 0) continue;
        for (std::size_t p = 0; p < kCategoryCount; ++p) out[t][p] = static_cast<double>(m[t][p]) / total;
    }
    return out;
}

inline double pixel_accuracy(const ConfusionMatrix& m) {
    long long correct = 0, total = 0;
    for (std::size_t t = 0; t < kCategoryCount; ++t)
        for (std::size_t p = 0; p < kCategoryCount; ++p) {
            total += m[t][p];
            if (t == p) correct += m[t][p];
        }
    if (total == 0) throw ShapeError("empty masks");
    return static_cast<double>(correct) / total;
}

inline double pixel_accuracy(const LabelMask& pred, const LabelMask& truth) {
    return pixel_accuracy(confusion_matrix(pred, truth));
}

// IoU per category; NaN where the category is absent from both masks.
inline CategoryValues per_category_iou(const ConfusionMatrix& m) {
    CategoryValues iou{};
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        long long row = 0, col = 0;
        for (std::size_t k = 0; k < kCategoryCount; ++k) {
            row += m[c][k];
            col += m[k][c];
        }
        const long long inter = m[c][c];
        const long long uni = row + col - inter;
        iou[c] = uni == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(inter) / uni;
    }
    return iou;
}

inline CategoryValues per_category_iou(const LabelMask& pred, const LabelMask& truth) {
    return per_category_iou(confusion_matrix(pred, truth));
}

// Sum of weight * IoU with the weights renormalised over categories present
// in either mask.
inline double weighted_iou(const ConfusionMatrix& m, const ClassWeights& w) {
    const auto iou = per_category_iou(m);
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        if (std::isnan(iou[c])) continue;
        num += w.weight[c] * iou[c];
        den += w.weight[c];
    }
    if (den <= 0.0) throw ParameterError("no weighted category present");
    return num / den;
}

inline double weighted_iou(const LabelMask& pred, const LabelMask& truth, const ClassWeights& w) {
    return weighted_iou(confusion_matrix(pred, truth), w);
}

// Inverse pixel area per category over a label set, normalised to sum 1.
inline ClassWeights compute_class_weights(std::span<const LabelMask> labels) {
    std::array<long long, kCategoryCount> area{};
    for (const auto& m : labels)
        for (std::size_t i = 0; i < m.size(); ++i) ++area[static_cast<std::size_t>(m[i])];
    ClassWeights w;
    double sum = 0.0;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        if (area[c] == 0)
            throw ParameterError(std::string("category '") + category_name(static_cast<Category>(c)) +
                                 "' has no pixels in the label set");
        w.weight[c] = 1.0 / static_cast<double>(area[c]);
        sum += w.weight[c];
    }
    for (auto& v : w.weight) v /= sum;
    return w;
}

// Per-pixel category distribution, pixel-major.
struct ProbabilityMap {
    int width = 0;
    int height = 0;
    std::vector<CategoryValues> p;

    ProbabilityMap(int w, int h, CategoryValues fill = {0.25, 0.25, 0.25, 0.25})
        : width(w), height(h), p(static_cast<std::size_t>(w) * h, fill) {}
    CategoryValues& at(int x, int y) { return p[static_cast<std::size_t>(y) * width + x]; }
    const CategoryValues& at(int x, int y) const { return p[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr double kCrossEntropyEpsilon = 1e-12;

// -mean over pixels of weight(truth) * ln p(truth); probabilities below
// 1e-12 are clamped.
inline double weighted_cross_entropy(const ProbabilityMap& probs, const LabelMask& truth, const ClassWeights& w) {
    if (probs.width != truth.width() || probs.height != truth.height()) throw ShapeError("probability map shape");
    if (truth.size() == 0) throw ShapeError("empty masks");
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& d = probs.p[i];
        double s = 0.0;
        for (double v : d) {
            if (v < 0.0 || !std::isfinite(v)) throw ParameterError("probabilities must be finite and non-negative");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6) throw ParameterError("per-pixel probabilities must sum to 1");
        const auto t = static_cast<std::size_t>(truth[i]);
        total += w.weight[t] * std::log(std::max(d[t], kCrossEntropyEpsilon));
    }
    return -total / static_cast<double>(truth.size());
}

}  // namespace mospick::segment
