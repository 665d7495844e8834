#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mospick/core/rng.hpp"
#include "mospick/vision/core.hpp"

using namespace mospick;
using namespace mospick::vision;

namespace {

RasterImage gray(int w, int h, std::uint8_t v = 0) { return RasterImage(w, h, 1, v); }

// Exhaustive between-class-variance maximizer scanning the raw pixels for
// every candidate threshold. Variance is n0*n1*(mu0-mu1)^2 ~ (n1*S0 - n0*S1)^2 / (n0*n1).
int brute_force_otsu(const RasterImage& img) {
    int best = -1;
    unsigned __int128 bn = 0, bd = 1;
    for (int t = 0; t < 256; ++t) {
        long long n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (auto v : img.data()) {
            if (v <= t) { ++n0; s0 += v; } else { ++n1; s1 += v; }
        }
        if (n0 == 0 || n1 == 0) continue;
        const __int128 d = static_cast<__int128>(n1) * s0 - static_cast<__int128>(n0) * s1;
        const unsigned __int128 num = static_cast<unsigned __int128>(d < 0 ? -d : d) *
                                      static_cast<unsigned __int128>(d < 0 ? -d : d);
        const unsigned __int128 den = static_cast<unsigned __int128>(n0) * n1;
        if (best < 0 || num * bd > bn * den) {
            best = t;
            bn = num;
            bd = den;
        }
    }
    return best;
}

BinaryMask square_mask(int w, int h, int x0, int y0, int side) {
    BinaryMask m(w, h);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) m.at(x, y) = 1;
    return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

BinaryMask random_mask(std::uint64_t seed, int w, int h, double p) {
    Rng rng(seed);
    BinaryMask m(w, h);
    for (auto& v : m.data()) v = rng.bernoulli(p) ? 1 : 0;
    return m;
}

}  // namespace

TEST(Gamma, IdentityAtOne) {
    Rng rng(3);
    RasterImage img(7, 5, 3);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
    EXPECT_EQ(gamma_correct(img, 1.0), img);
}

TEST(Gamma, FixedPointsAndDirectValue) {
    RasterImage img = gray(3, 1);
    img.at(0, 0) = 0;
    img.at(1, 0) = 255;
    img.at(2, 0) = 64;
    for (double g : {0.3, 0.5, 2.0, 4.0}) {
        auto out = gamma_correct(img, g);
        EXPECT_EQ(out.at(0, 0), 0);
        EXPECT_EQ(out.at(1, 0), 255);
    }
    EXPECT_EQ(gamma_correct(img, 2.0).at(2, 0), 16);
}

TEST(Gamma, RejectsNonPositive) {
    EXPECT_THROW(gamma_correct(gray(2, 2), 0.0), ParameterError);
    EXPECT_THROW(gamma_correct(gray(2, 2), -1.0), ParameterError);
}

TEST(Saturation, KnownPixels) {
    RasterImage img(3, 1, 3);
    auto set = [&](int x, int r, int g, int b) {
        img.at(x, 0, 0) = static_cast<std::uint8_t>(r);
        img.at(x, 0, 1) = static_cast<std::uint8_t>(g);
        img.at(x, 0, 2) = static_cast<std::uint8_t>(b);
    };
    set(0, 120, 120, 120);
    set(1, 255, 0, 0);
    set(2, 200, 100, 50);
    auto s = rgb_to_hsv_saturation(img);
    EXPECT_EQ(s.channels(), 1);
    EXPECT_EQ(s.at(0, 0), 0);
    EXPECT_EQ(s.at(1, 0), 255);
    EXPECT_EQ(s.at(2, 0), 191);
}

TEST(Saturation, MatchesFloatingFormula) {
    Rng rng(11);
    RasterImage img(64, 64, 3);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
    auto s = rgb_to_hsv_saturation(img);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const int r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
            const int mx = std::max({r, g, b}), mn = std::min({r, g, b});
            const int expect = mx == 0 ? 0 : static_cast<int>(std::floor(255.0 * (mx - mn) / mx + 0.5));
            ASSERT_EQ(s.at(x, y), expect);
        }
}

TEST(Saturation, RejectsSingleChannel) { EXPECT_THROW(rgb_to_hsv_saturation(gray(2, 2)), ShapeError); }

TEST(Blur, ConstantImageUnchanged) {
    for (int v : {0, 1, 77, 254, 255}) {
        auto img = gray(31, 17, static_cast<std::uint8_t>(v));
        EXPECT_EQ(gaussian_blur(img, 15.0, {15, 15}), img);
    }
}

TEST(Blur, KernelWeightsSumToOne) {
    for (int k : {1, 3, 15, 31}) {
        auto w = gaussian_kernel(k, 15.0);
        double sum = 0;
        for (double v : w) sum += v;
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Blur, ImpulseIsSymmetricWithPeakAtCenter) {
    auto img = gray(21, 21);
    img.at(10, 10) = 255;
    auto out = gaussian_blur(img, 1.5, {7, 7});
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx) {
            EXPECT_EQ(out.at(10 + dx, 10 + dy), out.at(10 - dx, 10 - dy));
            EXPECT_EQ(out.at(10 + dx, 10 + dy), out.at(10 + dy, 10 + dx));
            EXPECT_LE(out.at(10 + dx, 10 + dy), out.at(10, 10));
        }
}

TEST(Blur, MatchesDirectConvolution) {
    auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
    std::vector<std::pair<int, int>> impulses{{2, 2}, {0, 0}, {4, 1}};
    for (auto [ix, iy] : impulses) {
        auto img = gray(5, 5);
        img.at(ix, iy) = 255;
        const double g[3] = {std::exp(-0.5), 1.0, std::exp(-0.5)};
        const double s = g[0] + g[1] + g[2];
        auto out = gaussian_blur(img, 1.0, {3, 3});
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                double acc = 0;
                for (int j = -1; j <= 1; ++j)
                    for (int i = -1; i <= 1; ++i)
                        acc += g[i + 1] * g[j + 1] / (s * s) * img.at(reflect(x + i, 5), reflect(y + j, 5));
                EXPECT_EQ(out.at(x, y), static_cast<int>(std::lround(acc))) << x << "," << y;
            }
    }
}

TEST(Blur, RejectsEvenKernelAndBadSigma) {
    EXPECT_THROW(gaussian_blur(gray(5, 5), 1.0, {4, 3}), ParameterError);
    EXPECT_THROW(gaussian_blur(gray(5, 5), 1.0, {3, 2}), ParameterError);
    EXPECT_THROW(gaussian_blur(gray(5, 5), 0.0, {3, 3}), ParameterError);
}

TEST(Blur, ThreeChannelMatchesPerChannel) {
    Rng rng(5);
    RasterImage img(23, 19, 3);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
    auto out = gaussian_blur(img, 2.0, {5, 5});
    for (int c = 0; c < 3; ++c) {
        auto plane = gray(23, 19);
        for (int y = 0; y < 19; ++y)
            for (int x = 0; x < 23; ++x) plane.at(x, y) = img.at(x, y, c);
        auto pb = gaussian_blur(plane, 2.0, {5, 5});
        for (int y = 0; y < 19; ++y)
            for (int x = 0; x < 23; ++x) ASSERT_EQ(out.at(x, y, c), pb.at(x, y));
    }
}

TEST(Otsu, TwoModes) {
    auto img = gray(16, 16);
    for (std::size_t i = 0; i < img.size() / 2; ++i) img.data()[i] = 255;
    auto r = otsu_threshold(img);
    EXPECT_GE(r.threshold, 0);
    EXPECT_LT(r.threshold, 255);
    EXPECT_EQ(r.threshold, brute_force_otsu(img));
    EXPECT_EQ(count_nonzero(r.mask), 128);
}

TEST(Otsu, ConstantImageIsDegenerate) {
    EXPECT_THROW(otsu_threshold(gray(8, 8, 40)), DegenerateHistogramError);
    EXPECT_THROW(otsu_threshold(gray(8, 8, 255)), DegenerateHistogramError);
}

TEST(Otsu, MatchesExhaustiveSearchOnRandomImages) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(derive_seed(99, 0, seed));
        auto img = gray(16, 16);
        // Mix uniform images with few-level images that create exact ties.
        const int levels = seed % 3 == 0 ? 3 : 256;
        for (auto& v : img.data())
            v = static_cast<std::uint8_t>(levels == 256 ? rng.below(256) : rng.below(3) * 100);
        if (levels != 256 && std::all_of(img.data().begin(), img.data().end(),
                                         [&](auto v) { return v == img.data()[0]; }))
            continue;
        ASSERT_EQ(otsu_threshold(img).threshold, brute_force_otsu(img)) << "seed " << seed;
    }
}

TEST(Otsu, MaskIsStrictlyAboveThreshold) {
    Rng rng(4);
    auto img = gray(32, 32);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
    auto r = otsu_threshold(img);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(r.mask[i], img.data()[i] > r.threshold ? 1 : 0);
}

TEST(Morphology, ErodeSquareBySetArithmetic) {
    auto m = square_mask(100, 100, 20, 30, 40);
    auto e = morph_erode(m, {30, 30});
    EXPECT_EQ(count_nonzero(e), 121);
    auto comps = connected_components(e, 0.0);
    ASSERT_EQ(comps.size(), 1u);
    EXPECT_EQ(comps[0].bbox.width, 11);
    EXPECT_EQ(comps[0].bbox.height, 11);
}

TEST(Morphology, OddErosionIsCentered) {
    auto m = square_mask(50, 50, 10, 10, 20);
    auto e = morph_erode(m, {5, 5});
    auto c = connected_components(e, 0.0);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].bbox, (Rect{12, 12, 16, 16}));
}

TEST(Morphology, BorderCountsAsBackground) {
    BinaryMask full(10, 10, 1);
    auto e = morph_erode(full, {3, 3});
    EXPECT_EQ(count_nonzero(e), 64);
    EXPECT_EQ(e.at(0, 0), 0);
    EXPECT_EQ(e.at(1, 1), 1);
}

TEST(Morphology, AlgebraicProperties) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto x = random_mask(seed, 37, 29, 0.55);
        auto y = x;
        auto extra = random_mask(seed + 1000, 37, 29, 0.3);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] | extra[i];
        for (KernelSize k : {KernelSize{3, 3}, KernelSize{5, 5}, KernelSize{4, 6}, KernelSize{30, 30}}) {
            auto o = morph_open(x, k);
            EXPECT_EQ(morph_open(o, k), o);
            EXPECT_TRUE(subset(morph_erode(x, k), x));
            EXPECT_TRUE(subset(o, x));
            EXPECT_TRUE(subset(x, morph_dilate(x, k)));
            EXPECT_TRUE(subset(morph_erode(x, k), morph_erode(y, k)));
            EXPECT_TRUE(subset(morph_open(x, k), morph_open(y, k)));
        }
    }
}

TEST(Morphology, MatchesNaiveDefinition) {
    auto x = random_mask(8, 20, 15, 0.7);
    for (KernelSize k : {KernelSize{3, 3}, KernelSize{4, 2}, KernelSize{1, 5}}) {
        const int ax = k.width / 2, ay = k.height / 2;
        auto e = morph_erode(x, k);
        auto d = morph_dilate(x, k);
        for (int py = 0; py < 15; ++py)
            for (int px = 0; px < 20; ++px) {
                bool all = true, any = false;
                for (int by = -ay; by < k.height - ay; ++by)
                    for (int bx = -ax; bx < k.width - ax; ++bx) {
                        const int ex = px + bx, ey = py + by;
                        const bool in = ex >= 0 && ey >= 0 && ex < 20 && ey < 15 && x.at(ex, ey);
                        all = all && in;
                        const int dx = px - bx, dy = py - by;
                        any = any || (dx >= 0 && dy >= 0 && dx < 20 && dy < 15 && x.at(dx, dy));
                    }
                ASSERT_EQ(e.at(px, py), all ? 1 : 0);
                ASSERT_EQ(d.at(px, py), any ? 1 : 0);
            }
    }
}

TEST(Components, EmptyMask) { EXPECT_TRUE(connected_components(BinaryMask(30, 30), 0.0).empty()); }

TEST(Components, AreaThreshold) {
    auto m = square_mask(100, 100, 42, 17, 10);
    EXPECT_TRUE(connected_components(m, 0.05).empty());
    auto c = connected_components(m, 0.005);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].area, 100);
    EXPECT_EQ(c[0].bbox, (Rect{42, 17, 10, 10}));
    EXPECT_DOUBLE_EQ(c[0].centroid.x, 46.5);
    EXPECT_DOUBLE_EQ(c[0].centroid.y, 21.5);
}

TEST(Components, TwoBlobsOnlyLargerPasses) {
    BinaryMask m(100, 100);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 10; ++x) m.at(x, y) = 1;  // 300 px = 3%
    for (int y = 50; y < 80; ++y)
        for (int x = 40; x < 60; ++x) m.at(x, y) = 1;  // 600 px = 6%
    auto c = connected_components(m, 0.05);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].area, 600);
    EXPECT_EQ(c[0].bbox, (Rect{40, 50, 20, 30}));
}

TEST(Components, DiagonalPixelsAreConnected) {
    BinaryMask m(5, 5);
    m.at(0, 0) = m.at(1, 1) = m.at(2, 2) = m.at(4, 0) = m.at(3, 1) = 1;
    auto cl = label_components(m);
    EXPECT_EQ(cl.count, 1);
}

TEST(Components, SortedDescendingAndMonotoneInThreshold) {
    auto m = random_mask(21, 60, 60, 0.35);
    auto all = connected_components(m, 0.0);
    for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GE(all[i - 1].area, all[i].area);
    std::size_t prev = all.size();
    for (double f : {0.0001, 0.001, 0.005, 0.01, 0.05, 0.2}) {
        auto c = connected_components(m, f);
        EXPECT_LE(c.size(), prev);
        prev = c.size();
    }
}

TEST(Components, WeightedCentroid) {
    BinaryMask m(10, 3);
    m.at(2, 1) = m.at(3, 1) = 1;
    auto w = gray(10, 3);
    w.at(2, 1) = 10;
    w.at(3, 1) = 30;
    auto c = connected_components(m, 0.0, &w);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_DOUBLE_EQ(c[0].centroid.x, 2.75);
    EXPECT_DOUBLE_EQ(c[0].centroid.y, 1.0);
    auto zero = gray(10, 3);
    EXPECT_DOUBLE_EQ(connected_components(m, 0.0, &zero)[0].centroid.x, 2.5);
}

TEST(Components, CentroidInsideBoundingBox) {
    auto m = random_mask(77, 50, 40, 0.4);
    Rng rng(1);
    auto w = gray(50, 40);
    for (auto& v : w.data()) v = static_cast<std::uint8_t>(rng.below(256));
    for (const auto& c : connected_components(m, 0.0, &w)) {
        EXPECT_GT(c.area, 0);
        EXPECT_GE(c.centroid.x, c.bbox.x);
        EXPECT_LE(c.centroid.x, c.bbox.x + c.bbox.width - 1);
        EXPECT_GE(c.centroid.y, c.bbox.y);
        EXPECT_LE(c.centroid.y, c.bbox.y + c.bbox.height - 1);
    }
}

TEST(Params, Validation) {
    PipelineParams p;
    EXPECT_NO_THROW(p.validate());
    p.area_threshold = 1.0;
    EXPECT_THROW(p.validate(), ParameterError);
    p = {};
    p.blur_kernel = {14, 15};
    EXPECT_THROW(p.validate(), ParameterError);
    p = {};
    p.gamma = 0;
    EXPECT_THROW(p.validate(), ParameterError);
}
