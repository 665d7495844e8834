#pragma once

// Deterministic image operations shared by the overhead localizer, the
// onboard post-processing and tooltip detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"
#include "mospick/core/image.hpp"

namespace mospick::vision {

struct KernelSize {
    int width = 1;
    int height = 1;
    friend constexpr bool operator==(KernelSize, KernelSize) = default;
};

// Blur kernels must be odd. Morphology kernels may be even: the anchor then
// sits at floor(k/2), as in the usual 30x30 erosion.
struct PipelineParams {
    double gamma = 0.5;
    double blur_sigma = 15.0;
    KernelSize blur_kernel{15, 15};
    KernelSize erode_kernel{30, 30};
    KernelSize open_kernel{5, 5};
    double area_threshold = 0.05;

    void validate() const {
        if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
        if (!(blur_sigma > 0.0)) throw ParameterError("blur sigma must be > 0");
        if (blur_kernel.width <= 0 || blur_kernel.height <= 0 || blur_kernel.width % 2 == 0 ||
            blur_kernel.height % 2 == 0)
            throw ParameterError("blur kernel must be odd-sized and positive");
        if (erode_kernel.width <= 0 || erode_kernel.height <= 0 || open_kernel.width <= 0 ||
            open_kernel.height <= 0)
            throw ParameterError("morphology kernels must be positive");
        if (!(area_threshold > 0.0 && area_threshold < 1.0))
            throw ParameterError("area threshold must lie in (0, 1)");
    }
};

struct ComponentStats {
    int label = 0;
    long long area = 0;
    Rect bbox{};
    Vec2 centroid{};  // weighted, pixel-index coordinates
};

// ---------------------------------------------------------------------------
// Point operations

inline RasterImage gamma_correct(const RasterImage& img, double gamma) {
    if (!(gamma > 0.0)) throw ParameterError("gamma must be > 0");
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
        lut[static_cast<std::size_t>(v)] =
            static_cast<std::uint8_t>(std::lround(255.0 * std::pow(v / 255.0, gamma)));
    }
    RasterImage out = img;
    for (auto& s : out.data()) s = lut[s];
    return out;
}

// Hexcone saturation: S = 255 * (max - min) / max, rounded half up.
inline RasterImage rgb_to_hsv_saturation(const RasterImage& img) {
    if (img.channels() != 3) throw ShapeError("saturation needs a 3-channel image");
    RasterImage out(img.width(), img.height(), 1);
    const std::uint8_t* src = img.data().data();
    std::uint8_t* dst = out.data().data();
    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    for (std::size_t i = 0; i < n; ++i, src += 3) {
        const int mx = std::max({src[0], src[1], src[2]});
        const int mn = std::min({src[0], src[1], src[2]});
        dst[i] = mx == 0 ? 0 : static_cast<std::uint8_t>((510 * (mx - mn) + mx) / (2 * mx));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur

inline std::vector<double> gaussian_kernel(int size, double sigma) {
    if (size <= 0 || size % 2 == 0) throw ParameterError("kernel size must be odd and positive");
    if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
    std::vector<double> k(static_cast<std::size_t>(size));
    const int r = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - r;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (auto& w : k) w /= sum;
    return k;
}

// Reflect-101 border: ... c b | a b c ... | b a ...
inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

inline RasterImage gaussian_blur(const RasterImage& img, double sigma, KernelSize kernel) {
    const auto kx = gaussian_kernel(kernel.width, sigma);
    const auto ky = gaussian_kernel(kernel.height, sigma);
    const int w = img.width();
    const int h = img.height();
    const int c = img.channels();
    RasterImage out(w, h, c);
    if (w == 0 || h == 0) return out;

    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    const std::size_t row_len = static_cast<std::size_t>(w) * c;

    // Horizontal pass into float rows.
    std::vector<float> tmp(row_len * h);
    std::vector<float> padded(static_cast<std::size_t>(w + 2 * rx) * c);
    std::vector<float> kxf(kx.begin(), kx.end());
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = img.row(y);
        for (int px = -rx; px < w + rx; ++px) {
            const int sx = reflect101(px, w);
            for (int ch = 0; ch < c; ++ch)
                padded[static_cast<std::size_t>(px + rx) * c + ch] = src[sx * c + ch];
        }
        float* dst = tmp.data() + row_len * y;
        std::fill(dst, dst + row_len, 0.0f);
        for (int t = 0; t < kernel.width; ++t) {
            const float wt = kxf[static_cast<std::size_t>(t)];
            const float* p = padded.data() + static_cast<std::size_t>(t) * c;
            for (std::size_t i = 0; i < row_len; ++i) dst[i] += wt * p[i];
        }
    }

    // Vertical pass.
    std::vector<float> acc(row_len);
    for (int y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (int t = 0; t < kernel.height; ++t) {
            const float wt = static_cast<float>(ky[static_cast<std::size_t>(t)]);
            const float* p = tmp.data() + row_len * reflect101(y + t - ry, h);
            for (std::size_t i = 0; i < row_len; ++i) acc[i] += wt * p[i];
        }
        std::uint8_t* dst = out.row(y);
        for (std::size_t i = 0; i < row_len; ++i) {
            const float v = std::clamp(acc[i], 0.0f, 255.0f);
            dst[i] = static_cast<std::uint8_t>(v + 0.5f);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Otsu

struct OtsuResult {
    int threshold = 0;  // mask = sample > threshold
    BinaryMask mask;
};

using Histogram = std::array<long long, 256>;

inline Histogram histogram(const RasterImage& img) {
    if (img.channels() != 1) throw ShapeError("histogram needs a single-channel image");
    Histogram hist{};
    for (auto v : img.data()) ++hist[v];
    return hist;
}

namespace detail {

// Compares a/b against c/d for unsigned 128-bit numerators and denominators
// below 2^63 without overflow. Returns -1, 0 or 1.
inline int compare_fractions(unsigned __int128 a, unsigned __int128 b, unsigned __int128 c,
                             unsigned __int128 d) {
    const unsigned __int128 qa = a / b, qc = c / d;
    if (qa != qc) return qa < qc ? -1 : 1;
    const unsigned __int128 ra = a % b, rc = c % d;
    const unsigned __int128 lhs = ra * d, rhs = rc * b;
    if (lhs == rhs) return 0;
    return lhs < rhs ? -1 : 1;
}

}  // namespace detail

// Between-class variance for threshold t is proportional to
// (N*S0 - n0*S)^2 / (n0*n1); it is compared exactly in integers so that ties
// resolve to the smallest threshold without floating-point noise.
inline int otsu_threshold_value(const Histogram& hist) {
    long long total = 0;
    long long sum = 0;
    for (int v = 0; v < 256; ++v) {
        total += hist[static_cast<std::size_t>(v)];
        sum += static_cast<long long>(v) * hist[static_cast<std::size_t>(v)];
    }
    int best = -1;
    unsigned __int128 best_num = 0, best_den = 1;
    long long n0 = 0, s0 = 0;
    for (int t = 0; t < 255; ++t) {
        n0 += hist[static_cast<std::size_t>(t)];
        s0 += static_cast<long long>(t) * hist[static_cast<std::size_t>(t)];
        const long long n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const __int128 diff = static_cast<__int128>(total) * s0 - static_cast<__int128>(n0) * sum;
        const unsigned __int128 mag = static_cast<unsigned __int128>(diff < 0 ? -diff : diff);
        const unsigned __int128 num = mag * mag;
        const unsigned __int128 den = static_cast<unsigned __int128>(n0) * n1;
        if (best < 0 || detail::compare_fractions(num, den, best_num, best_den) > 0) {
            best = t;
            best_num = num;
            best_den = den;
        }
    }
    if (best < 0) throw DegenerateHistogramError("histogram has a single occupied bin");
    return best;
}

inline OtsuResult otsu_threshold(const RasterImage& img) {
    OtsuResult r;
    r.threshold = otsu_threshold_value(histogram(img));
    r.mask = image_to_mask(img, static_cast<std::uint8_t>(r.threshold));
    return r;
}

// ---------------------------------------------------------------------------
// Binary morphology with rectangular structuring elements. Pixels outside the
// mask count as background.

namespace detail {

// One-dimensional pass. For erosion the window is [i - a, i - a + k - 1]; for
// dilation it is the reflected window [i - (k - 1 - a), i + a].
inline void morph_line(const std::uint8_t* src, std::ptrdiff_t stride, int n, int k, bool erode,
                       std::uint8_t* dst, std::ptrdiff_t dst_stride, std::vector<int>& prefix) {
    prefix.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i)
        prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + (src[i * stride] ? 1 : 0);
    const int a = k / 2;
    for (int i = 0; i < n; ++i) {
        int lo, hi;  // inclusive
        if (erode) {
            lo = i - a;
            hi = i - a + k - 1;
            if (lo < 0 || hi >= n) {
                dst[i * dst_stride] = 0;
                continue;
            }
        } else {
            lo = std::max(0, i - (k - 1 - a));
            hi = std::min(n - 1, i + a);
        }
        const int count = prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)];
        dst[i * dst_stride] = erode ? (count == k ? 1 : 0) : (count > 0 ? 1 : 0);
    }
}

inline BinaryMask morph(const BinaryMask& m, KernelSize k, bool erode) {
    if (k.width <= 0 || k.height <= 0) throw ParameterError("structuring element must be positive");
    const int w = m.width(), h = m.height();
    BinaryMask rows(w, h), out(w, h);
    std::vector<int> prefix;
    for (int y = 0; y < h; ++y) morph_line(m.row(y), 1, w, k.width, erode, rows.row(y), 1, prefix);
    for (int x = 0; x < w; ++x)
        morph_line(rows.data().data() + x, w, h, k.height, erode, out.data().data() + x, w, prefix);
    return out;
}

}  // namespace detail

inline BinaryMask morph_erode(const BinaryMask& m, KernelSize k) { return detail::morph(m, k, true); }
inline BinaryMask morph_dilate(const BinaryMask& m, KernelSize k) { return detail::morph(m, k, false); }
inline BinaryMask morph_open(const BinaryMask& m, KernelSize k) { return morph_dilate(morph_erode(m, k), k); }
inline BinaryMask morph_close(const BinaryMask& m, KernelSize k) { return morph_erode(morph_dilate(m, k), k); }

inline BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw ShapeError("mask shapes differ");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Connected components, 8-connectivity

struct ComponentLabels {
    Grid<std::int32_t> labels;  // 0 = background, 1..count in raster order of first pixel
    int count = 0;
};

inline ComponentLabels label_components(const BinaryMask& mask) {
    const int w = mask.width(), h = mask.height();
    ComponentLabels out{Grid<std::int32_t>(w, h, 0), 0};
    std::vector<std::int32_t> parent{0};
    auto find = [&parent](std::int32_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    auto unite = [&](std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[static_cast<std::size_t>(b)] = a;
        else parent[static_cast<std::size_t>(a)] = b;
    };

    auto& lab = out.labels;
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* mrow = mask.row(y);
        std::int32_t* lrow = lab.row(y);
        const std::int32_t* prev = y > 0 ? lab.row(y - 1) : nullptr;
        for (int x = 0; x < w; ++x) {
            if (!mrow[x]) continue;
            std::int32_t cur = 0;
            auto take = [&](std::int32_t l) {
                if (l == 0) return;
                if (cur == 0) cur = l;
                else unite(cur, l);
            };
            if (x > 0) take(lrow[x - 1]);
            if (prev) {
                if (x > 0) take(prev[x - 1]);
                take(prev[x]);
                if (x + 1 < w) take(prev[x + 1]);
            }
            if (cur == 0) {
                cur = static_cast<std::int32_t>(parent.size());
                parent.push_back(cur);
            }
            lrow[x] = cur;
        }
    }

    // Resolve equivalences and renumber by first appearance.
    std::vector<std::int32_t> remap(parent.size(), 0);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < lab.size(); ++i) {
        if (lab[i] == 0) continue;
        const std::int32_t root = find(lab[i]);
        auto& r = remap[static_cast<std::size_t>(root)];
        if (r == 0) r = ++next;
        lab[i] = r;
    }
    out.count = next;
    return out;
}

// Per-label statistics. When `weights` is given (single channel, same shape)
// the centroid is intensity-weighted; a component whose weights sum to zero
// falls back to the uniform centroid.
inline std::vector<ComponentStats> component_stats(const ComponentLabels& cl,
                                                   const RasterImage* weights = nullptr) {
    const auto& lab = cl.labels;
    if (weights && (weights->channels() != 1 || weights->width() != lab.width() ||
                    weights->height() != lab.height()))
        throw ShapeError("weight image must match the mask");
    struct Acc {
        long long area = 0;
        int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
        double sx = 0, sy = 0, sw = 0, ux = 0, uy = 0;
    };
    std::vector<Acc> acc(static_cast<std::size_t>(cl.count) + 1);
    for (int y = 0; y < lab.height(); ++y) {
        const std::int32_t* row = lab.row(y);
        const std::uint8_t* wrow = weights ? weights->row(y) : nullptr;
        for (int x = 0; x < lab.width(); ++x) {
            if (!row[x]) continue;
            Acc& a = acc[static_cast<std::size_t>(row[x])];
            if (a.area == 0) {
                a.x0 = a.x1 = x;
                a.y0 = a.y1 = y;
            } else {
                a.x0 = std::min(a.x0, x);
                a.x1 = std::max(a.x1, x);
                a.y1 = y;
            }
            ++a.area;
            a.ux += x;
            a.uy += y;
            const double wt = wrow ? wrow[x] : 1.0;
            a.sx += wt * x;
            a.sy += wt * y;
            a.sw += wt;
        }
    }
    std::vector<ComponentStats> out;
    out.reserve(static_cast<std::size_t>(cl.count));
    for (int l = 1; l <= cl.count; ++l) {
        const Acc& a = acc[static_cast<std::size_t>(l)];
        ComponentStats s;
        s.label = l;
        s.area = a.area;
        s.bbox = {a.x0, a.y0, a.x1 - a.x0 + 1, a.y1 - a.y0 + 1};
        s.centroid = a.sw > 0.0 ? Vec2{a.sx / a.sw, a.sy / a.sw}
                                : Vec2{a.ux / static_cast<double>(a.area), a.uy / static_cast<double>(a.area)};
        out.push_back(s);
    }
    return out;
}

// Components of at least min_area_fraction * (w * h) pixels, largest first
// (ties keep raster order).
inline std::vector<ComponentStats> connected_components(const BinaryMask& mask, double min_area_fraction,
                                                        const RasterImage* weights = nullptr) {
    if (!(min_area_fraction >= 0.0 && min_area_fraction < 1.0))
        throw ParameterError("area fraction must lie in [0, 1)");
    const auto cl = label_components(mask);
    auto stats = component_stats(cl, weights);
    const double min_area = min_area_fraction * static_cast<double>(mask.width()) * mask.height();
    std::erase_if(stats, [min_area](const ComponentStats& s) { return static_cast<double>(s.area) < min_area; });
    std::stable_sort(stats.begin(), stats.end(),
                     [](const ComponentStats& a, const ComponentStats& b) { return a.area > b.area; });
    return stats;
}

// Keeps only the pixels of one label.
inline BinaryMask select_label(const ComponentLabels& cl, int label) {
    BinaryMask out(cl.labels.width(), cl.labels.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cl.labels[i] == label ? 1 : 0;
    return out;
}

}  // namespace mospick::vision
