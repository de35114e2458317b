#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "afm/errors.hpp"

namespace afm {

/// 2D vector with double components. Also used for sub-pixel point positions.
struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(const Vec2& r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    friend constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }
    constexpr bool operator==(const Vec2& r) const = default;

    constexpr double dot(const Vec2& r) const { return x * r.x + y * r.y; }
    constexpr double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm_sq()); }

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

/// A position in the continuous image plane (pixel units, x = column, y = row).
using Point2 = Vec2;

/// An integer lattice pixel. x in [0, W), y in [0, H).
struct PixelCoord {
    int x{0};
    int y{0};

    constexpr auto operator<=>(const PixelCoord&) const = default;
};

/// Lattice pixels sit at integer coordinates; pixel (x, y) is the point (x, y).
struct LatticeDims {
    int width{0};
    int height{0};

    constexpr bool operator==(const LatticeDims&) const = default;

    constexpr bool contains(const PixelCoord& p) const {
        return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
    }
    constexpr std::int64_t pixel_count() const {
        return static_cast<std::int64_t>(width) * height;
    }
    constexpr int min_side() const { return width < height ? width : height; }
    double diagonal() const {
        return std::sqrt(static_cast<double>(width) * width +
                         static_cast<double>(height) * height);
    }
};

/// Nearest lattice pixel of a continuous position: floor(v + 0.5) per component.
inline PixelCoord discretize(const Point2& v) {
    return {static_cast<int>(std::floor(v.x + 0.5)),
            static_cast<int>(std::floor(v.y + 0.5))};
}

/// Directed segment between two distinct sub-pixel endpoints.
struct LineSegment {
    Point2 start;
    Point2 end;

    constexpr Vec2 delta() const { return end - start; }
    constexpr double length_sq() const { return delta().norm_sq(); }
    double length() const { return delta().norm(); }
    constexpr Point2 midpoint() const {
        return {(start.x + end.x) * 0.5, (start.y + end.y) * 0.5};
    }
};

/// A set of line segments over a lattice. Segment indices are stable.
struct LineSegmentMap {
    LatticeDims dims;
    std::vector<LineSegment> segments;
};

/// Checks dims, coordinate range [0,W]x[0,H], finiteness and non-degeneracy.
/// Error messages name the offending segment index.
inline void validate_segment_map(const LineSegmentMap& map) {
    if (map.dims.width < 1 || map.dims.height < 1)
        throw ValidationError("lattice dimensions must be at least 1x1");
    for (std::size_t i = 0; i < map.segments.size(); ++i) {
        const LineSegment& s = map.segments[i];
        if (!s.start.finite() || !s.end.finite())
            throw ValidationError("non-finite coordinate at segment index " + std::to_string(i));
        auto in_range = [&](const Point2& p) {
            return p.x >= 0.0 && p.x <= map.dims.width &&
                   p.y >= 0.0 && p.y <= map.dims.height;
        };
        if (!in_range(s.start) || !in_range(s.end))
            throw ValidationError("coordinate out of range at segment index " + std::to_string(i));
        if (s.start == s.end)
            throw ValidationError("zero-length segment at index " + std::to_string(i));
    }
}

/// Rescales a map: coordinates multiply by `factor`, dims round up so no
/// coordinate can exceed the new lattice.
inline LineSegmentMap scaled(const LineSegmentMap& map, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw ValidationError("scale factor must be positive and finite");
    LineSegmentMap out;
    out.dims.width = static_cast<int>(std::ceil(map.dims.width * factor - 1e-9));
    out.dims.height = static_cast<int>(std::ceil(map.dims.height * factor - 1e-9));
    out.segments.reserve(map.segments.size());
    for (const LineSegment& s : map.segments)
        out.segments.push_back({s.start * factor, s.end * factor});
    return out;
}

/// An undirected line direction, always reduced modulo pi into [0, pi).
class Direction {
public:
    Direction() = default;
    explicit Direction(double radians) : theta_(reduce(radians)) {}

    double radians() const { return theta_; }

    static double reduce(double radians) {
        double t = std::fmod(radians, std::numbers::pi);
        if (t < 0.0) t += std::numbers::pi;
        if (t >= std::numbers::pi) t = 0.0; // fmod/rounding can land exactly on pi
        return t;
    }

private:
    double theta_{0.0};
};

/// Result of projecting a point onto a segment: clamped parameter, foot point
/// and squared distance.
struct ProjectionResult {
    double t{0.0};
    Point2 foot;
    double sq_dist{0.0};
};

/// Projects p onto the segment, clamping the parameter to [0, 1] so the foot
/// is the closest point of the segment itself. Distances are squared.
inline ProjectionResult project_onto_segment(const Point2& p, const LineSegment& l) {
    const Vec2 d = l.delta();
    const double dd = d.norm_sq();
    if (dd == 0.0)
        throw ValidationError("degenerate segment: start equals end");
    double t = (p - l.start).dot(d) / dd;
    t = std::clamp(t, 0.0, 1.0);
    const Point2 foot = l.start + t * d;
    return {t, foot, (foot - p).norm_sq()};
}

/// Vector from p to its closest point on the segment (zero when p lies on it).
inline Vec2 attraction_vector(const Point2& p, const LineSegment& l) {
    return project_onto_segment(p, l).foot - p;
}

/// Angle of an attraction vector in (-pi, pi]; the normal direction of the
/// segment the vector terminates on (when the foot is interior).
inline double normal_angle(const Vec2& a) {
    if (a.x == 0.0 && a.y == 0.0)
        throw ValidationError("normal undefined for zero attraction");
    double r = std::atan2(a.y, a.x);
    if (r <= -std::numbers::pi) r = std::numbers::pi;
    return r;
}

/// Distance between undirected directions: min(|d|, pi - |d|), in [0, pi/2].
inline double angular_distance(const Direction& d1, const Direction& d2) {
    const double diff = std::abs(d1.radians() - d2.radians());
    return std::min(diff, std::numbers::pi - diff);
}

/// Doubled-angle circular mean of directions, optionally weighted.
/// 0.5 * atan2(sum w sin 2t, sum w cos 2t), reduced to [0, pi).
inline Direction circular_mean(std::span<const Direction> dirs,
                               std::span<const double> weights = {}) {
    if (dirs.empty())
        throw ValidationError("mean of empty direction set");
    if (!weights.empty() && weights.size() != dirs.size())
        throw ValidationError("weights length must match directions");
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w < 0.0)
            throw ValidationError("negative weight");
        const double t2 = 2.0 * dirs[i].radians();
        sx += w * std::cos(t2);
        sy += w * std::sin(t2);
    }
    if (sx * sx + sy * sy < 1e-24)
        throw ValidationError("mean direction undefined");
    return Direction(0.5 * std::atan2(sy, sx));
}

} // namespace afm
