#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "afm/geometry.hpp"

namespace afm {

/// Value domain of an attraction field map. Transitions run
/// Raw <-> SizeNormalized <-> Stretched only; operations check the tag.
enum class AfmState : std::uint8_t {
    Raw = 0,            // pixel units
    SizeNormalized = 1, // components divided by W resp. H
    Stretched = 2,      // log-domain values of the normalized components
};

inline const char* to_string(AfmState s) {
    switch (s) {
        case AfmState::Raw: return "raw";
        case AfmState::SizeNormalized: return "size-normalized";
        case AfmState::Stretched: return "stretched";
    }
    return "?";
}

/// Dense H x W grid of 2-vectors, row-major.
struct AttractionFieldMap {
    LatticeDims dims;
    std::vector<Vec2> vectors;
    AfmState state{AfmState::Raw};

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * dims.width + x;
    }
    const Vec2& at(int x, int y) const { return vectors[index(x, y)]; }
    Vec2& at(int x, int y) { return vectors[index(x, y)]; }
};

/// Dense H x W grid of segment indices, row-major.
struct RegionPartitionMap {
    LatticeDims dims;
    std::vector<std::uint32_t> labels;

    std::uint32_t at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * dims.width + x];
    }
};

inline void require_state(const AttractionFieldMap& afm, AfmState expected,
                          const char* op) {
    if (afm.state != expected)
        throw StateError(std::string(op) + " requires a " + to_string(expected) +
                         " field, got " + to_string(afm.state));
}

namespace detail {

/// Index of the closest segment and its projection; ties go to the lowest index.
inline std::pair<std::uint32_t, ProjectionResult>
nearest_segment(const Point2& p, const std::vector<LineSegment>& segments) {
    std::uint32_t best = 0;
    ProjectionResult best_proj = project_onto_segment(p, segments[0]);
    for (std::uint32_t i = 1; i < segments.size(); ++i) {
        ProjectionResult proj = project_onto_segment(p, segments[i]);
        if (proj.sq_dist < best_proj.sq_dist) {
            best = i;
            best_proj = proj;
        }
    }
    return {best, best_proj};
}

} // namespace detail

/// Labels every lattice pixel with the index of its nearest segment
/// (squared point-to-segment distance, ties to the lowest index).
inline RegionPartitionMap region_partition(const LineSegmentMap& lsm) {
    if (lsm.segments.empty())
        throw ValidationError("partition undefined for empty map");
    RegionPartitionMap out;
    out.dims = lsm.dims;
    out.labels.resize(static_cast<std::size_t>(lsm.dims.pixel_count()));
    std::size_t idx = 0;
    for (int y = 0; y < lsm.dims.height; ++y)
        for (int x = 0; x < lsm.dims.width; ++x)
            out.labels[idx++] =
                detail::nearest_segment({double(x), double(y)}, lsm.segments).first;
    return out;
}

/// Encodes a segment map into its attraction field: each pixel stores the
/// vector to the closest point of its nearest segment.
inline AttractionFieldMap encode_afm(const LineSegmentMap& lsm) {
    if (lsm.segments.empty())
        throw ValidationError("encoding undefined for empty map");
    AttractionFieldMap out;
    out.dims = lsm.dims;
    out.state = AfmState::Raw;
    out.vectors.resize(static_cast<std::size_t>(lsm.dims.pixel_count()));
    std::size_t idx = 0;
    for (int y = 0; y < lsm.dims.height; ++y)
        for (int x = 0; x < lsm.dims.width; ++x) {
            const Point2 p{double(x), double(y)};
            out.vectors[idx++] = detail::nearest_segment(p, lsm.segments).second.foot - p;
        }
    return out;
}

/// Divides x-components by W and y-components by H, making values
/// dimensionless and independent of the lattice size.
inline AttractionFieldMap size_normalize(AttractionFieldMap afm) {
    require_state(afm, AfmState::Raw, "size_normalize");
    const double w = afm.dims.width;
    const double h = afm.dims.height;
    for (Vec2& a : afm.vectors) {
        a.x /= w;
        a.y /= h;
    }
    afm.state = AfmState::SizeNormalized;
    return afm;
}

/// Exact inverse of size_normalize.
inline AttractionFieldMap size_denormalize(AttractionFieldMap afm) {
    require_state(afm, AfmState::SizeNormalized, "size_denormalize");
    const double w = afm.dims.width;
    const double h = afm.dims.height;
    for (Vec2& a : afm.vectors) {
        a.x *= w;
        a.y *= h;
    }
    afm.state = AfmState::Raw;
    return afm;
}

/// Offset keeping the stretch logarithm finite at zero.
inline constexpr double kStretchEpsilon = 1e-6;

/// z -> -sign(z) * log(|z| + eps), with sign(0) = 0. Requires |z| <= 1 - eps;
/// beyond that the transform is no longer invertible.
inline double stretch_value(double z) {
    if (z == 0.0) return 0.0;
    if (std::abs(z) > 1.0 - kStretchEpsilon)
        throw ValidationError("stretch domain exceeded: |z| > 1 - eps");
    const double s = z > 0.0 ? 1.0 : -1.0;
    return -s * std::log(std::abs(z) + kStretchEpsilon);
}

/// z' -> sign(z') * exp(-|z'|), with sign(0) = 0 so zero survives unchanged.
inline double unstretch_value(double z) {
    if (z == 0.0) return 0.0;
    const double s = z > 0.0 ? 1.0 : -1.0;
    return s * std::exp(-std::abs(z));
}

/// Componentwise value stretching of a size-normalized field into the
/// log domain used for regression targets.
inline AttractionFieldMap stretch(AttractionFieldMap afm) {
    require_state(afm, AfmState::SizeNormalized, "stretch");
    for (Vec2& a : afm.vectors) {
        a.x = stretch_value(a.x);
        a.y = stretch_value(a.y);
    }
    afm.state = AfmState::Stretched;
    return afm;
}

/// Componentwise inverse of stretch.
inline AttractionFieldMap unstretch(AttractionFieldMap afm) {
    require_state(afm, AfmState::Stretched, "unstretch");
    for (Vec2& a : afm.vectors) {
        a.x = unstretch_value(a.x);
        a.y = unstretch_value(a.y);
    }
    afm.state = AfmState::SizeNormalized;
    return afm;
}

/// Applies whatever inverse transforms the state tag requires to bring the
/// field back to raw pixel units.
inline AttractionFieldMap to_raw(AttractionFieldMap afm) {
    if (afm.state == AfmState::Stretched) afm = unstretch(std::move(afm));
    if (afm.state == AfmState::SizeNormalized) afm = size_denormalize(std::move(afm));
    return afm;
}

} // namespace afm
