#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bevradar/errors.hpp"
#include "bevradar/geometry.hpp"
#include "bevradar/priors.hpp"
#include "bevradar/radar_points.hpp"

namespace bevradar {

/// Matching hyperparameters. alpha scales the radar box around its 1 m
/// reference edge; beta is the IOU acceptance threshold. Shrinking beta or
/// growing alpha admits more radar points per object.
struct MatchConfig {
    double alpha = 1.0;
    double beta = 0.1;
    double radar_box_edge = 1.0;  // meters
};

inline void validate_match_config(const MatchConfig& cfg) {
    if (!(cfg.alpha > 0.0)) throw ConfigError("match alpha must be > 0");
    if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw ConfigError("match beta must lie in [0, 1]");
    if (!(cfg.radar_box_edge > 0.0)) throw ConfigError("match radar_box_edge must be > 0");
}

struct MatchPair {
    std::size_t point_index = 0;
    std::size_t label_index = 0;
    double score = 0.0;   // IOU of the clipped radar box vs. the label footprint
    BevBox radar_box;     // the clipped radar box

    friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

/// Result of matching one bundle against the effective labels. Each point
/// appears in at most one pair and every pair's score is >= beta.
struct Association {
    GridSpec grid;
    std::vector<MatchPair> pairs;  // sorted by point_index
    std::vector<std::size_t> unmatched_points;
    std::vector<std::vector<std::size_t>> label_points;  // per-label point indices
    std::size_t degenerate_clips = 0;
};

/// Rasterized label occupancy: for every grid cell, the index of the label
/// whose footprint covers it, or -1. Labels must be pairwise disjoint, so a
/// cell belongs to at most one label.
struct LabelGrid {
    GridSpec grid;
    std::vector<std::int32_t> label_of_cell;

    std::int32_t at(int row, int col) const {
        return label_of_cell[static_cast<std::size_t>(row) * grid.cells_per_side + col];
    }
};

inline LabelGrid build_label_grid(const std::vector<PriorBox>& labels,
                                  const GridSpec& g) {
    LabelGrid lg{g, std::vector<std::int32_t>(
                        static_cast<std::size_t>(g.cells_per_side) * g.cells_per_side, -1)};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for_each_covered_cell(footprint(labels[i]), g, [&](int r, int c) {
            auto& slot =
                lg.label_of_cell[static_cast<std::size_t>(r) * g.cells_per_side + c];
            if (slot != -1) {
                throw std::invalid_argument(
                    "label footprints are not pairwise disjoint");
            }
            slot = static_cast<std::int32_t>(i);
        });
    }
    return lg;
}

/// Stage 1: project every point into the label grid and record the points
/// that land in a label's cell region. Returns (point index, label index)
/// pairs in point order; points outside every region are excluded.
inline std::vector<std::pair<std::size_t, std::size_t>> stage1_candidates(
    const SweepBundle& bundle, const std::vector<PriorBox>& labels,
    const GridSpec& g) {
    const LabelGrid lg = build_label_grid(labels, g);
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < bundle.points.size(); ++i) {
        const CellIndex cell = world_to_cell(bundle.points[i].position.xy(), g);
        const std::int32_t label = lg.at(cell.row, cell.col);
        if (label >= 0) {
            candidates.emplace_back(i, static_cast<std::size_t>(label));
        }
    }
    return candidates;
}

/// The square radar box of each point: edge alpha * radar_box_edge, centered
/// on the point's BEV projection.
inline std::vector<BevBox> make_radar_boxes(std::span<const RadarPoint> points,
                                            const MatchConfig& cfg) {
    const double edge = cfg.alpha * cfg.radar_box_edge;
    std::vector<BevBox> boxes;
    boxes.reserve(points.size());
    for (const RadarPoint& p : points) {
        boxes.push_back(BevBox::centered(p.position.xy(), edge, edge));
    }
    return boxes;
}

struct ResolveResult {
    std::vector<BevBox> boxes;
    std::size_t degenerate_clips = 0;
};

/// Overlap resolution by the midline rule: every overlapping pair is clipped
/// along the dominant overlap axis (largest center separation, ties -> x) at
/// the midline between the two generating points. Pairs are visited in
/// center-lexicographic order so the result is independent of input order.
/// Coincident generators cannot be separated by a midline; the later point's
/// box collapses to zero area and is counted as a degenerate clip.
inline ResolveResult resolve_overlaps(std::vector<BevBox> boxes,
                                      std::span<const Vec2> centers) {
    if (boxes.size() != centers.size()) {
        throw std::invalid_argument("resolve_overlaps: box/center count mismatch");
    }
    std::vector<std::size_t> order(boxes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (centers[a].x != centers[b].x) return centers[a].x < centers[b].x;
        if (centers[a].y != centers[b].y) return centers[a].y < centers[b].y;
        return a < b;
    });

    ResolveResult result{std::move(boxes), 0};
    auto overlaps = [&](const BevBox& a, const BevBox& b) {
        return std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x) > 0.0 &&
               std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y) > 0.0;
    };
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const std::size_t i = order[a];
            const std::size_t j = order[b];
            BevBox& bi = result.boxes[i];
            BevBox& bj = result.boxes[j];
            if (!overlaps(bi, bj)) continue;
            const double dx = centers[j].x - centers[i].x;  // >= 0 in sorted order
            const double dy = centers[j].y - centers[i].y;
            if (dx == 0.0 && dy == 0.0) {
                const std::size_t later = std::max(i, j);
                result.boxes[later] = {centers[later].x, centers[later].y,
                                       centers[later].x, centers[later].y};
                ++result.degenerate_clips;
                continue;
            }
            if (dx >= std::abs(dy)) {
                const double mid = 0.5 * (centers[i].x + centers[j].x);
                bi.max_x = std::min(bi.max_x, mid);
                bj.min_x = std::max(bj.min_x, mid);
            } else if (dy > 0.0) {
                const double mid = 0.5 * (centers[i].y + centers[j].y);
                bi.max_y = std::min(bi.max_y, mid);
                bj.min_y = std::max(bj.min_y, mid);
            } else {
                const double mid = 0.5 * (centers[i].y + centers[j].y);
                bj.max_y = std::min(bj.max_y, mid);
                bi.min_y = std::max(bi.min_y, mid);
            }
        }
    }
    return result;
}

/// Stage 2: accept a candidate iff the IOU of its clipped radar box against
/// the label footprint reaches beta. Labels are disjoint, so each point keeps
/// at most its single stage-1 label.
inline Association stage2_match(
    const std::vector<std::pair<std::size_t, std::size_t>>& candidates,
    const std::vector<BevBox>& radar_boxes, const std::vector<PriorBox>& labels,
    const MatchConfig& cfg, std::size_t total_points, const GridSpec& g) {
    if (candidates.size() != radar_boxes.size()) {
        throw std::invalid_argument("stage2_match: candidate/box count mismatch");
    }
    Association assoc;
    assoc.grid = g;
    assoc.label_points.resize(labels.size());
    std::vector<bool> matched(total_points, false);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto [point_idx, label_idx] = candidates[k];
        const double score = iou(radar_boxes[k], footprint(labels[label_idx]));
        if (score >= cfg.beta) {
            assoc.pairs.push_back({point_idx, label_idx, score, radar_boxes[k]});
            assoc.label_points[label_idx].push_back(point_idx);
            matched[point_idx] = true;
        }
    }
    std::sort(assoc.pairs.begin(), assoc.pairs.end(),
              [](const MatchPair& a, const MatchPair& b) {
                  return a.point_index < b.point_index;
              });
    for (std::size_t i = 0; i < total_points; ++i) {
        if (!matched[i]) assoc.unmatched_points.push_back(i);
    }
    return assoc;
}

/// Match a bundle against labels that are already policy-filtered and
/// deduplicated (e.g. via effective_label_indices).
inline Association associate_labels(const SweepBundle& bundle,
                                    const std::vector<PriorBox>& labels,
                                    const MatchConfig& cfg, const GridSpec& g) {
    validate_match_config(cfg);
    validate_grid(g);
    const auto candidates = stage1_candidates(bundle, labels, g);
    std::vector<RadarPoint> cand_points;
    std::vector<Vec2> cand_centers;
    cand_points.reserve(candidates.size());
    for (const auto& [point_idx, label_idx] : candidates) {
        cand_points.push_back(bundle.points[point_idx]);
        cand_centers.push_back(bundle.points[point_idx].position.xy());
    }
    const auto boxes = make_radar_boxes(cand_points, cfg);
    ResolveResult resolved = resolve_overlaps(boxes, cand_centers);
    Association assoc = stage2_match(candidates, resolved.boxes, labels, cfg,
                                     bundle.points.size(), g);
    assoc.degenerate_clips = resolved.degenerate_clips;
    return assoc;
}

/// The full radar association pipeline: class policy, label dedup, stage-1
/// grid matching, radar box generation, midline overlap resolution, stage-2
/// IOU matching. Pure and deterministic. Label indices in the result refer to
/// the effective label list (effective_label_indices(priors, policy)).
inline Association associate(const SweepBundle& bundle,
                             const std::vector<PriorBox>& priors,
                             const ClassPolicy& policy, const MatchConfig& cfg,
                             const GridSpec& g) {
    std::vector<PriorBox> labels;
    for (std::size_t idx : effective_label_indices(priors, policy)) {
        labels.push_back(priors[idx]);
    }
    return associate_labels(bundle, labels, cfg, g);
}

}  // namespace bevradar
