#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afm/geometry.hpp"

namespace afm {

/// Deterministic 64-bit generator (splitmix64) with platform-independent
/// uniform draws, so generated corpora are byte-stable everywhere.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() %
                                     static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::uint64_t state_;
};

/// Parameters of the synthetic corpus generator.
struct SynthConfig {
    std::uint64_t seed{0};
    int scene_count{1};
    LatticeDims dims{320, 320};
    int segments_min{2};
    int segments_max{30};
    double min_length_fraction{0.05}; // of the lattice diagonal
    double min_separation{3.0};       // between segment midpoints, pixels
};

inline void validate_config(const SynthConfig& cfg) {
    if (cfg.scene_count < 1)
        throw ConfigError("scene_count must be positive");
    if (cfg.dims.width < 1 || cfg.dims.height < 1)
        throw ConfigError("scene dims must be at least 1x1");
    if (cfg.segments_min < 1 || cfg.segments_max < cfg.segments_min)
        throw ConfigError("segment count range must satisfy 1 <= lo <= hi");
    if (!(cfg.min_length_fraction > 0.0 && cfg.min_length_fraction < 1.0))
        throw ConfigError("min_length_fraction must lie in (0, 1)");
    if (cfg.min_separation < 0.0)
        throw ConfigError("min_separation must be non-negative");
}

/// Draws seeded random scenes: per scene a uniform segment count in
/// [lo, hi], endpoints uniform over the pixel hull, resampled until the
/// segment is long enough and its midpoint keeps min_separation from the
/// midpoints already placed. A cap of 1000 resamples per segment turns an
/// unsatisfiable configuration into an error.
inline std::vector<LineSegmentMap> generate_scenes(const SynthConfig& cfg) {
    validate_config(cfg);
    DeterministicRng rng(cfg.seed);
    const double min_length = cfg.min_length_fraction * cfg.dims.diagonal();
    const double min_length_sq = min_length * min_length;
    const double min_sep_sq = cfg.min_separation * cfg.min_separation;
    const double x_max = cfg.dims.width - 1;
    const double y_max = cfg.dims.height - 1;

    std::vector<LineSegmentMap> scenes;
    scenes.reserve(static_cast<std::size_t>(cfg.scene_count));
    for (int s = 0; s < cfg.scene_count; ++s) {
        LineSegmentMap map;
        map.dims = cfg.dims;
        const int count = rng.uniform_int(cfg.segments_min, cfg.segments_max);
        std::vector<Point2> midpoints;
        for (int i = 0; i < count; ++i) {
            bool placed = false;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                const LineSegment candidate{{rng.uniform(0.0, x_max), rng.uniform(0.0, y_max)},
                                            {rng.uniform(0.0, x_max), rng.uniform(0.0, y_max)}};
                if (candidate.length_sq() < min_length_sq)
                    continue;
                const Point2 mid = candidate.midpoint();
                bool clear = true;
                for (const Point2& m : midpoints)
                    if ((mid - m).norm_sq() < min_sep_sq) {
                        clear = false;
                        break;
                    }
                if (!clear)
                    continue;
                map.segments.push_back(candidate);
                midpoints.push_back(mid);
                placed = true;
                break;
            }
            if (!placed)
                throw ConfigError("scene generation exceeded the resample cap; "
                                  "constraints are unsatisfiable for scene " +
                                  std::to_string(s));
        }
        scenes.push_back(std::move(map));
    }
    return scenes;
}

} // namespace afm
