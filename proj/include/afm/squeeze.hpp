#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "afm/field.hpp"
#include "afm/geometry.hpp"

namespace afm {

/// One lattice pixel together with its attraction vector (raw pixel units).
struct PixelAttraction {
    PixelCoord pixel;
    Vec2 attraction;
};

/// Tuning of the squeeze transform. Defaults: 10 degree angular tolerance,
/// 3x3 growth window, aspect ratio below 0.2, inlier radius 0.02 * min(H, W).
struct SqueezeConfig {
    double tau{std::numbers::pi / 18.0};
    int window{3};
    double aspect_ratio_max{0.2};
    int min_support{2};
    bool remove_outliers{true};
    double outlier_gamma_fraction{0.02};
    bool deterministic_order{true};
    std::uint64_t seed{0};
};

inline void validate_config(const SqueezeConfig& cfg) {
    if (!(cfg.tau > 0.0 && cfg.tau < std::numbers::pi / 2.0))
        throw ConfigError("tau must lie in (0, pi/2)");
    if (cfg.window < 1 || cfg.window % 2 == 0)
        throw ConfigError("window must be an odd integer >= 1");
    if (!(cfg.aspect_ratio_max > 0.0 && cfg.aspect_ratio_max <= 1.0))
        throw ConfigError("aspect_ratio_max must lie in (0, 1]");
    if (cfg.min_support < 1)
        throw ConfigError("min_support must be positive");
    if (cfg.remove_outliers && !(cfg.outlier_gamma_fraction > 0.0))
        throw ConfigError("outlier_gamma_fraction must be positive");
}

/// Every pixel of a raw field with its vector, row-major.
inline std::vector<PixelAttraction> collect_vectors(const AttractionFieldMap& afm) {
    require_state(afm, AfmState::Raw, "collect_vectors");
    std::vector<PixelAttraction> out;
    out.reserve(afm.vectors.size());
    for (int y = 0; y < afm.dims.height; ++y)
        for (int x = 0; x < afm.dims.width; ++x)
            out.push_back({{x, y}, afm.at(x, y)});
    return out;
}

/// Keeps only vectors with norm <= gamma, gamma = gamma_fraction * min(H, W).
/// Large vectors come from pixels far from every segment and carry the least
/// reliable geometry.
inline std::vector<PixelAttraction> remove_outliers(const AttractionFieldMap& afm,
                                                    double gamma_fraction) {
    require_state(afm, AfmState::Raw, "remove_outliers");
    if (!(gamma_fraction > 0.0))
        throw ConfigError("outlier gamma fraction must be positive");
    const double gamma = gamma_fraction * afm.dims.min_side();
    const double gamma_sq = gamma * gamma;
    std::vector<PixelAttraction> out;
    for (int y = 0; y < afm.dims.height; ++y)
        for (int x = 0; x < afm.dims.width; ++x) {
            const Vec2& a = afm.at(x, y);
            if (a.norm_sq() <= gamma_sq)
                out.push_back({{x, y}, a});
        }
    return out;
}

/// An attraction vector rearranged to the lattice cell of its projection foot.
struct ProposalEntry {
    PixelCoord source;  // pixel the vector originates from
    Vec2 attraction;    // raw attraction vector
    Point2 foot;        // source + attraction, the real-valued projection
    Direction tangent;  // normal angle rotated by pi/2, in [0, pi)
};

/// Sparse grouping of proposal entries by the discretized foot cell.
/// Entry ids preserve source row-major order.
class LineProposalMap {
public:
    LineProposalMap() = default;
    LineProposalMap(LatticeDims dims) : dims_(dims), cells_(dims.pixel_count()) {}

    const LatticeDims& dims() const { return dims_; }
    std::size_t entry_count() const { return entries_.size(); }
    const ProposalEntry& entry(std::uint32_t id) const { return entries_[id]; }
    const std::vector<ProposalEntry>& entries() const { return entries_; }

    const std::vector<std::uint32_t>& cell(const PixelCoord& q) const {
        return cells_[static_cast<std::size_t>(q.y) * dims_.width + q.x];
    }

    void insert(const ProposalEntry& e, const PixelCoord& q) {
        const std::uint32_t id = static_cast<std::uint32_t>(entries_.size());
        entries_.push_back(e);
        cells_[static_cast<std::size_t>(q.y) * dims_.width + q.x].push_back(id);
    }

private:
    LatticeDims dims_;
    std::vector<ProposalEntry> entries_;
    std::vector<std::vector<std::uint32_t>> cells_;
};

/// Groups vectors by the nearest lattice pixel of their feet. Entries whose
/// foot rounds outside the lattice are dropped; exact zero vectors carry no
/// direction and are skipped.
inline LineProposalMap build_proposal_map(std::span<const PixelAttraction> vectors,
                                          const LatticeDims& dims) {
    LineProposalMap map(dims);
    for (const PixelAttraction& pa : vectors) {
        if (pa.attraction.x == 0.0 && pa.attraction.y == 0.0)
            continue;
        const Point2 source{double(pa.pixel.x), double(pa.pixel.y)};
        const Point2 foot = source + pa.attraction;
        const PixelCoord q = discretize(foot);
        if (!dims.contains(q))
            continue;
        const Direction tangent(normal_angle(pa.attraction) + std::numbers::pi / 2.0);
        map.insert({pa.pixel, pa.attraction, foot, tangent}, q);
    }
    return map;
}

/// Output of one region growth: support feet in absorption order, the final
/// mean direction and the ids of absorbed entries.
struct GrownRegion {
    std::vector<Point2> feet;
    Direction mean_direction;
    std::vector<std::uint32_t> absorbed;
};

/// Greedy angular region growing seeded at the cell of `seed`. Starts from the
/// available entry of that cell closest in direction to the seed tangent
/// (fails if none is within tau), then expands breadth-first: each window
/// neighborhood of an occupied support cell is scanned and every available
/// entry within tau of the running mean direction is absorbed. Marks absorbed
/// ids unavailable.
inline std::optional<GrownRegion> grow_region(const LineProposalMap& proposal,
                                              const ProposalEntry& seed,
                                              std::vector<std::uint8_t>& available,
                                              const SqueezeConfig& cfg) {
    const PixelCoord q0 = discretize(seed.foot);
    if (!proposal.dims().contains(q0))
        return std::nullopt;

    // Initialization: best-aligned available candidate in the seed cell.
    std::uint32_t init_id = 0;
    double init_dist = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::uint32_t id : proposal.cell(q0)) {
        if (!available[id]) continue;
        const double d = angular_distance(seed.tangent, proposal.entry(id).tangent);
        if (d < init_dist) {
            init_dist = d;
            init_id = id;
            found = true;
        }
    }
    if (!found || init_dist >= cfg.tau)
        return std::nullopt;

    GrownRegion region;
    double sum_cos = 0.0;
    double sum_sin = 0.0;
    Direction mean = proposal.entry(init_id).tangent;
    auto absorb = [&](std::uint32_t id) {
        const ProposalEntry& e = proposal.entry(id);
        available[id] = 0;
        region.feet.push_back(e.foot);
        region.absorbed.push_back(id);
        const double t2 = 2.0 * e.tangent.radians();
        sum_cos += std::cos(t2);
        sum_sin += std::sin(t2);
        if (sum_cos * sum_cos + sum_sin * sum_sin > 1e-24)
            mean = Direction(0.5 * std::atan2(sum_sin, sum_cos));
    };
    absorb(init_id);

    const int half = cfg.window / 2;
    const LatticeDims& dims = proposal.dims();
    auto key = [&](const PixelCoord& c) {
        return static_cast<std::int64_t>(c.y) * dims.width + c.x;
    };
    std::vector<PixelCoord> queue{q0};
    std::unordered_set<std::int64_t> enqueued{key(q0)};
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const PixelCoord base = queue[head];
        for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx) {
                const PixelCoord cell{base.x + dx, base.y + dy};
                if (!dims.contains(cell)) continue;
                for (std::uint32_t id : proposal.cell(cell)) {
                    if (!available[id]) continue;
                    if (angular_distance(mean, proposal.entry(id).tangent) >= cfg.tau)
                        continue;
                    absorb(id);
                    if (enqueued.insert(key(cell)).second)
                        queue.push_back(cell);
                }
            }
    }
    region.mean_direction = mean;
    return region;
}

/// Oriented bounding rectangle of a support set along its principal axis.
struct FittedRectangle {
    Point2 endpoint_a;
    Point2 endpoint_b;
    double width{0.0};
    std::size_t support_size{0};

    double length() const { return (endpoint_b - endpoint_a).norm(); }
    double aspect_ratio() const { return width / length(); }
};

/// Principal-axis rectangle fit: axis from the dominant eigenvector of the
/// support covariance, endpoints at the extreme axis projections through the
/// centroid, width the extent of the perpendicular coordinates. Rejects
/// supports that are too small or fully coincident.
inline std::optional<FittedRectangle> fit_rectangle(std::span<const Point2> support,
                                                    int min_support = 2) {
    if (support.size() < static_cast<std::size_t>(min_support) || support.size() < 2)
        return std::nullopt;
    Vec2 centroid{0.0, 0.0};
    for (const Point2& p : support) centroid = centroid + p;
    centroid = centroid * (1.0 / static_cast<double>(support.size()));
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const Point2& p : support) {
        const Vec2 d = p - centroid;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const Vec2 axis{std::cos(angle), std::sin(angle)};
    const Vec2 normal{-axis.y, axis.x};
    double s_min = std::numeric_limits<double>::infinity();
    double s_max = -s_min;
    double t_min = s_min;
    double t_max = -s_min;
    for (const Point2& p : support) {
        const Vec2 d = p - centroid;
        const double s = d.dot(axis);
        const double t = d.dot(normal);
        s_min = std::min(s_min, s);
        s_max = std::max(s_max, s);
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
    }
    // Treat supports clustered within a thousandth of a pixel as coincident;
    // rounding noise (e.g. float32 storage) spreads repeated endpoint feet by
    // far less than this, and no genuine support is that small.
    if (s_max - s_min < 1e-3)
        return std::nullopt;
    FittedRectangle rect;
    rect.endpoint_a = centroid + s_min * axis;
    rect.endpoint_b = centroid + s_max * axis;
    rect.width = t_max - t_min;
    rect.support_size = support.size();
    return rect;
}

/// A recovered segment with its thinness score (the fitted aspect ratio;
/// lower means more confident).
struct ScoredSegment {
    LineSegment segment;
    double score{0.0};
};

struct SqueezeResult {
    LatticeDims dims;
    std::vector<ScoredSegment> segments;

    LineSegmentMap to_segment_map() const {
        LineSegmentMap map;
        map.dims = dims;
        map.segments.reserve(segments.size());
        for (const ScoredSegment& s : segments) map.segments.push_back(s.segment);
        return map;
    }
};

namespace detail {

// Deterministic Fisher-Yates driven by splitmix64, independent of the
// standard library's distribution implementations.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline void shuffle_ids(std::vector<std::uint32_t>& ids, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(splitmix64(state) % i);
        std::swap(ids[i - 1], ids[j]);
    }
}

} // namespace detail

/// Contracts a raw attraction field back into line segments: optional inlier
/// filtering, proposal-map construction, seed iteration with region growing,
/// rectangle fitting and thinness scoring.
///
/// Regions are grown with a fixed internal acceptance (aspect < 1); rejected
/// regions release their entries, and an entry that has been released twice is
/// permanently retired. The configured aspect_ratio_max then selects the final
/// output from the scored regions, so tightening the threshold always yields a
/// subset of the looser result.
inline SqueezeResult squeeze(const AttractionFieldMap& afm, const SqueezeConfig& cfg) {
    require_state(afm, AfmState::Raw, "squeeze");
    validate_config(cfg);

    const std::vector<PixelAttraction> retained =
        cfg.remove_outliers ? remove_outliers(afm, cfg.outlier_gamma_fraction)
                            : collect_vectors(afm);
    const LineProposalMap proposal = build_proposal_map(retained, afm.dims);

    const std::size_t n = proposal.entry_count();
    std::vector<std::uint8_t> available(n, 1);
    std::vector<std::uint8_t> fail_count(n, 0);

    std::vector<std::uint32_t> seed_order(n);
    for (std::uint32_t i = 0; i < n; ++i) seed_order[i] = i;
    if (!cfg.deterministic_order)
        detail::shuffle_ids(seed_order, cfg.seed);

    SqueezeResult result;
    result.dims = afm.dims;

    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (std::uint32_t id : seed_order) {
            if (!available[id]) continue;
            progressed = true;
            auto region = grow_region(proposal, proposal.entry(id), available, cfg);
            if (!region) {
                available[id] = 0; // unreachable for an available in-map seed
                continue;
            }
            bool accepted = false;
            if (region->feet.size() >= static_cast<std::size_t>(cfg.min_support)) {
                if (auto rect = fit_rectangle(region->feet, cfg.min_support)) {
                    const double aspect = rect->aspect_ratio();
                    if (aspect < 1.0) {
                        result.segments.push_back(
                            {{rect->endpoint_a, rect->endpoint_b}, aspect});
                        accepted = true;
                    }
                }
            }
            if (!accepted) {
                // Release the support; an entry failing twice stays retired.
                for (std::uint32_t rid : region->absorbed)
                    if (++fail_count[rid] < 2) available[rid] = 1;
            }
        }
    }

    // Apply the configured thinness threshold to the scored regions.
    if (cfg.aspect_ratio_max < 1.0) {
        std::vector<ScoredSegment> kept;
        kept.reserve(result.segments.size());
        for (const ScoredSegment& s : result.segments)
            if (s.score < cfg.aspect_ratio_max) kept.push_back(s);
        result.segments = std::move(kept);
    }
    return result;
}

} // namespace afm
