#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "afm/field.hpp"
#include "afm/geometry.hpp"
#include "afm/squeeze.hpp"

namespace afm {

/// Sorted, duplicate-free set of lattice pixels.
using PixelSet = std::vector<PixelCoord>;

/// Digitizes segments into lattice pixels: unit arc-length samples from start
/// to end inclusive, each rounded to the nearest pixel and clamped to the
/// lattice, pooled across segments without duplicates.
inline PixelSet rasterize_segments(const LineSegmentMap& lsm) {
    PixelSet pixels;
    for (const LineSegment& seg : lsm.segments) {
        const double len = seg.length();
        const Vec2 d = seg.delta();
        const int steps = static_cast<int>(std::ceil(len));
        for (int k = 0; k <= steps; ++k) {
            const double arc = std::min(static_cast<double>(k), len);
            PixelCoord px = discretize(seg.start + d * (arc / len));
            px.x = std::clamp(px.x, 0, lsm.dims.width - 1);
            px.y = std::clamp(px.y, 0, lsm.dims.height - 1);
            pixels.push_back(px);
        }
    }
    std::sort(pixels.begin(), pixels.end());
    pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
    return pixels;
}

enum class MatchMode {
    OneToOne,        // greedy pairing in ascending distance order
    AnyWithinRadius, // permissive: any pixel with a counterpart in range counts
};

struct MatchCounts {
    std::size_t matched_pred{0};
    std::size_t matched_gt{0};
};

/// Matches predicted pixels to ground-truth pixels within a radius of 1% of
/// the image diagonal. One-to-one mode pairs greedily in ascending distance
/// order (ties by pixel order), so each pixel is claimed at most once.
inline MatchCounts match_pixels(const PixelSet& pred, const PixelSet& gt,
                                const LatticeDims& dims,
                                MatchMode mode = MatchMode::OneToOne) {
    const double radius = 0.01 * dims.diagonal();
    const double radius_sq = radius * radius;
    if (pred.empty() || gt.empty())
        return {0, 0};

    // Bucket ground-truth pixels so only nearby cells are scanned.
    const int cell = std::max(1, static_cast<int>(std::ceil(radius)));
    const int bw = dims.width / cell + 2;
    const int bh = dims.height / cell + 2;
    std::vector<std::vector<std::uint32_t>> buckets(
        static_cast<std::size_t>(bw) * bh);
    auto bucket_of = [&](const PixelCoord& p) {
        return static_cast<std::size_t>(p.y / cell) * bw + p.x / cell;
    };
    for (std::uint32_t gi = 0; gi < gt.size(); ++gi)
        buckets[bucket_of(gt[gi])].push_back(gi);

    struct Pair {
        std::int64_t dist_sq;
        std::uint32_t pred_idx;
        std::uint32_t gt_idx;
        bool operator<(const Pair& r) const {
            if (dist_sq != r.dist_sq) return dist_sq < r.dist_sq;
            if (pred_idx != r.pred_idx) return pred_idx < r.pred_idx;
            return gt_idx < r.gt_idx;
        }
    };
    std::vector<Pair> candidates;
    for (std::uint32_t pi = 0; pi < pred.size(); ++pi) {
        const PixelCoord& p = pred[pi];
        const int bx = p.x / cell;
        const int by = p.y / cell;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = bx + dx;
                const int ny = by + dy;
                if (nx < 0 || ny < 0 || nx >= bw || ny >= bh) continue;
                for (std::uint32_t gi : buckets[static_cast<std::size_t>(ny) * bw + nx]) {
                    const std::int64_t ddx = p.x - gt[gi].x;
                    const std::int64_t ddy = p.y - gt[gi].y;
                    const std::int64_t d2 = ddx * ddx + ddy * ddy;
                    if (static_cast<double>(d2) <= radius_sq)
                        candidates.push_back({d2, pi, gi});
                }
            }
    }

    if (mode == MatchMode::AnyWithinRadius) {
        std::vector<std::uint8_t> pred_hit(pred.size(), 0), gt_hit(gt.size(), 0);
        for (const Pair& c : candidates) {
            pred_hit[c.pred_idx] = 1;
            gt_hit[c.gt_idx] = 1;
        }
        MatchCounts counts;
        for (auto h : pred_hit) counts.matched_pred += h;
        for (auto h : gt_hit) counts.matched_gt += h;
        return counts;
    }

    std::sort(candidates.begin(), candidates.end());
    std::vector<std::uint8_t> pred_used(pred.size(), 0), gt_used(gt.size(), 0);
    MatchCounts counts;
    for (const Pair& c : candidates) {
        if (pred_used[c.pred_idx] || gt_used[c.gt_idx]) continue;
        pred_used[c.pred_idx] = 1;
        gt_used[c.gt_idx] = 1;
        ++counts.matched_pred;
        ++counts.matched_gt;
    }
    return counts;
}

/// One precision/recall measurement; threshold is NaN when not applicable.
struct PRPoint {
    double threshold{std::numeric_limits<double>::quiet_NaN()};
    double precision{0.0};
    double recall{0.0};
    double f_measure{0.0};
};

inline double f_measure(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

namespace detail {

inline PRPoint pr_from_counts(std::size_t matched_pred, std::size_t pred_total,
                              std::size_t matched_gt, std::size_t gt_total) {
    PRPoint pt;
    pt.precision = pred_total > 0 ? double(matched_pred) / double(pred_total) : 0.0;
    pt.recall = gt_total > 0 ? double(matched_gt) / double(gt_total) : 0.0;
    pt.f_measure = f_measure(pt.precision, pt.recall);
    return pt;
}

} // namespace detail

/// Pixel-level precision and recall of a predicted map against ground truth.
/// Empty prediction or ground truth scores zero on the affected rate.
inline PRPoint precision_recall(const LineSegmentMap& pred_lsm,
                                const LineSegmentMap& gt_lsm,
                                MatchMode mode = MatchMode::OneToOne) {
    if (!(pred_lsm.dims == gt_lsm.dims))
        throw ValidationError("precision_recall requires matching lattice dims");
    const PixelSet pred = rasterize_segments(pred_lsm);
    const PixelSet gt = rasterize_segments(gt_lsm);
    const MatchCounts m = match_pixels(pred, gt, gt_lsm.dims, mode);
    return detail::pr_from_counts(m.matched_pred, pred.size(), m.matched_gt, gt.size());
}

struct PRCurve {
    std::vector<PRPoint> points; // thresholds strictly increasing
};

/// Sweeps the thinness threshold over (0, 1] in 50 steps of 0.02. The field is
/// squeezed once with the threshold wide open; each recovered segment keeps
/// its aspect-ratio score and the sweep filters the scored set per threshold.
inline PRCurve pr_sweep(const AttractionFieldMap& afm, const LineSegmentMap& gt,
                        SqueezeConfig cfg) {
    cfg.aspect_ratio_max = 1.0;
    const SqueezeResult scored = squeeze(afm, cfg);
    const PixelSet gt_pixels = rasterize_segments(gt);

    PRCurve curve;
    for (int k = 1; k <= 50; ++k) {
        const double threshold = k / 50.0;
        LineSegmentMap pred;
        pred.dims = afm.dims;
        for (const ScoredSegment& s : scored.segments)
            if (s.score < threshold) pred.segments.push_back(s.segment);
        const PixelSet pred_pixels = rasterize_segments(pred);
        const MatchCounts m = match_pixels(pred_pixels, gt_pixels, gt.dims);
        PRPoint pt = detail::pr_from_counts(m.matched_pred, pred_pixels.size(),
                                            m.matched_gt, gt_pixels.size());
        pt.threshold = threshold;
        curve.points.push_back(pt);
    }
    return curve;
}

/// Round-trip fidelity per scale: encode and squeeze each rescaled map, then
/// pool matched and total pixel counts over the corpus (micro-average).
struct DualityReport {
    struct Row {
        double scale;
        double precision;
        double recall;
    };
    std::vector<Row> scales;
};

inline DualityReport verify_duality(std::span<const LineSegmentMap> corpus,
                                    std::span<const double> scales,
                                    const SqueezeConfig& cfg) {
    if (corpus.empty())
        throw ValidationError("duality verification needs a non-empty corpus");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0))
            throw ValidationError("scales must be positive");
        if (i > 0 && !(scales[i] > scales[i - 1]))
            throw ValidationError("scales must be strictly increasing");
    }
    DualityReport report;
    for (double s : scales) {
        std::size_t matched_pred = 0, pred_total = 0;
        std::size_t matched_gt = 0, gt_total = 0;
        for (const LineSegmentMap& map : corpus) {
            const LineSegmentMap gt = scaled(map, s);
            const SqueezeResult rec = squeeze(encode_afm(gt), cfg);
            const PixelSet pred_pixels = rasterize_segments(rec.to_segment_map());
            const PixelSet gt_pixels = rasterize_segments(gt);
            const MatchCounts m = match_pixels(pred_pixels, gt_pixels, gt.dims);
            matched_pred += m.matched_pred;
            pred_total += pred_pixels.size();
            matched_gt += m.matched_gt;
            gt_total += gt_pixels.size();
        }
        const PRPoint pt =
            detail::pr_from_counts(matched_pred, pred_total, matched_gt, gt_total);
        report.scales.push_back({s, pt.precision, pt.recall});
    }
    return report;
}

/// Summed componentwise absolute difference between two equally shaped,
/// equally tagged fields.
inline double afm_l1(const AttractionFieldMap& a, const AttractionFieldMap& b) {
    if (!(a.dims == b.dims))
        throw ValidationError("afm_l1 requires matching dims");
    if (a.state != b.state)
        throw StateError("afm_l1 requires matching states");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.vectors.size(); ++i)
        sum += std::abs(a.vectors[i].x - b.vectors[i].x) +
               std::abs(a.vectors[i].y - b.vectors[i].y);
    return sum;
}

struct MagnitudeHistogram {
    std::vector<double> bin_edges;   // len(counts) + 1, strictly increasing
    std::vector<std::uint64_t> counts;
};

/// Accumulates vector magnitudes divided by min(H, W) across raw fields, then
/// bins them uniformly over [0, max observed].
class MagnitudeAccumulator {
public:
    void add(const AttractionFieldMap& afm) {
        require_state(afm, AfmState::Raw, "magnitude statistics");
        const double inv = 1.0 / afm.dims.min_side();
        for (const Vec2& a : afm.vectors)
            values_.push_back(a.norm() * inv);
    }

    std::size_t sample_count() const { return values_.size(); }

    MagnitudeHistogram histogram(int bins) const {
        if (bins < 1)
            throw ConfigError("histogram needs at least one bin");
        if (values_.empty())
            throw ValidationError("histogram of an empty stream");
        double max_val = 0.0;
        for (double v : values_) max_val = std::max(max_val, v);
        const double span = max_val > 0.0 ? max_val : 1.0;
        MagnitudeHistogram h;
        h.counts.assign(static_cast<std::size_t>(bins), 0);
        for (int i = 0; i <= bins; ++i)
            h.bin_edges.push_back(span * i / bins);
        for (double v : values_) {
            int idx = static_cast<int>(v / span * bins);
            idx = std::clamp(idx, 0, bins - 1);
            ++h.counts[static_cast<std::size_t>(idx)];
        }
        return h;
    }

private:
    std::vector<double> values_;
};

// --- CSV emission -----------------------------------------------------------
// All CSV uses '.' decimals, a header line and newline-terminated rows.

namespace detail {

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

inline void write_csv(std::ostream& os, const PRCurve& curve) {
    os << "threshold,precision,recall,f\n";
    for (const PRPoint& p : curve.points)
        os << detail::format_real(p.threshold) << ',' << detail::format_real(p.precision)
           << ',' << detail::format_real(p.recall) << ',' << detail::format_real(p.f_measure)
           << '\n';
}

inline void write_csv(std::ostream& os, const PRPoint& point) {
    os << "precision,recall,f\n";
    os << detail::format_real(point.precision) << ',' << detail::format_real(point.recall)
       << ',' << detail::format_real(point.f_measure) << '\n';
}

inline void write_csv(std::ostream& os, const DualityReport& report) {
    os << "scale,precision,recall\n";
    for (const DualityReport::Row& r : report.scales)
        os << detail::format_real(r.scale) << ',' << detail::format_real(r.precision)
           << ',' << detail::format_real(r.recall) << '\n';
}

inline void write_csv(std::ostream& os, const MagnitudeHistogram& hist) {
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        os << detail::format_real(hist.bin_edges[i]) << ','
           << detail::format_real(hist.bin_edges[i + 1]) << ',' << hist.counts[i] << '\n';
}

} // namespace afm
