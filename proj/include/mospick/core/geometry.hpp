#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace mospick {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
    friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec2 xy() const { return {x, y}; }
    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr bool operator==(Vec3, Vec3) = default;
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline double norm(Vec3 a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

inline Vec2 normalized(Vec2 a) {
    const double n = norm(a);
    return n > 0.0 ? a / n : Vec2{};
}

inline Vec2 rotated(Vec2 a, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * a.x - s * a.y, s * a.x + c * a.y};
}

inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline double angle_of(Vec2 a) { return std::atan2(a.y, a.x); }

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0.0) a += two_pi;
    return a - std::numbers::pi;
}

// Integer pixel rectangle, half-open: [x, x+width) x [y, y+height).
struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    constexpr bool empty() const { return width <= 0 || height <= 0; }
    constexpr long long area() const { return static_cast<long long>(width) * height; }
    constexpr int right() const { return x + width; }
    constexpr int bottom() const { return y + height; }
    constexpr bool contains(int px, int py) const {
        return px >= x && py >= y && px < x + width && py < y + height;
    }
    constexpr bool contains(const Rect& r) const {
        return r.x >= x && r.y >= y && r.right() <= right() && r.bottom() <= bottom();
    }
    friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

inline Rect intersect(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return {};
    return {x0, y0, x1 - x0, y1 - y0};
}

// Continuous axis-aligned box in world or pixel units.
struct Box {
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y; }
    void include(Vec2 p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    Box inflated(double m) const { return {{lo.x - m, lo.y - m}, {hi.x + m, hi.y + m}}; }
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
};

inline double polyline_length(std::span<const Vec2> pts) {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
    return len;
}

struct PolylineProjection {
    std::size_t segment = 0;  // index of the segment start point
    double t = 0.0;           // parameter within the segment, [0, 1]
    double arc_length = 0.0;  // from the first point to the projection
    double distance = std::numeric_limits<double>::infinity();
    Vec2 point{};
};

inline PolylineProjection project_point_on_segment(Vec2 a, Vec2 b, Vec2 p) {
    PolylineProjection r;
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    r.t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    r.point = a + ab * r.t;
    r.distance = distance(p, r.point);
    r.arc_length = r.t * std::sqrt(len2);
    return r;
}

// Nearest point on a polyline. Ties go to the earliest segment.
inline PolylineProjection project_onto_polyline(std::span<const Vec2> pts, Vec2 p) {
    PolylineProjection best;
    if (pts.empty()) return best;
    if (pts.size() == 1) {
        best.point = pts[0];
        best.distance = distance(p, pts[0]);
        best.t = 0.0;
        return best;
    }
    double walked = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        PolylineProjection r = project_point_on_segment(pts[i], pts[i + 1], p);
        if (r.distance < best.distance) {
            best = r;
            best.segment = i;
            best.arc_length += walked;
        }
        walked += distance(pts[i], pts[i + 1]);
    }
    return best;
}

inline Vec2 point_at_arc_length(std::span<const Vec2> pts, double s) {
    if (pts.empty()) return {};
    if (s <= 0.0) return pts.front();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double seg = distance(pts[i], pts[i + 1]);
        if (s <= seg) return seg > 0.0 ? pts[i] + (pts[i + 1] - pts[i]) * (s / seg) : pts[i];
        s -= seg;
    }
    return pts.back();
}

inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
    return project_point_on_segment(a, b, p).distance;
}

}  // namespace mospick
