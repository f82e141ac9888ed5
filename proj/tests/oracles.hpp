#pragma once

// Brute-force reference implementations used only by tests. They mirror the
// library contracts through separate code paths: IOU is counted on a
// centimeter raster, pose composition goes through explicit 4x4 matrices,
// label coverage scans every grid cell, and the reference association
// pipeline enumerates all point-label pairs naively. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "bevradar/association.hpp"
#include "bevradar/geometry.hpp"
#include "bevradar/priors.hpp"
#include "bevradar/radar_points.hpp"

namespace oracle {

/// Deterministic test RNG: standard mt19937_64 engine with hand-rolled
/// distributions so sequences are identical on every platform.
class TestRng {
  public:
    explicit TestRng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }
    int uniform_int(int n) {  // [0, n)
        return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
    }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }

  private:
    std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// IOU by pixel counting.

inline double pixel_iou(const bevradar::BevBox& a, const bevradar::BevBox& b,
                        double px = 0.01) {
    const double lo_x = std::min(a.min_x, b.min_x);
    const double hi_x = std::max(a.max_x, b.max_x);
    const double lo_y = std::min(a.min_y, b.min_y);
    const double hi_y = std::max(a.max_y, b.max_y);
    const int nx = static_cast<int>(std::ceil((hi_x - lo_x) / px)) + 1;
    const int ny = static_cast<int>(std::ceil((hi_y - lo_y) / px)) + 1;
    std::int64_t in_a = 0, in_b = 0, in_both = 0;
    for (int i = 0; i < nx; ++i) {
        const double x = lo_x + (i + 0.5) * px;
        for (int j = 0; j < ny; ++j) {
            const double y = lo_y + (j + 0.5) * px;
            const bool pa = x >= a.min_x && x <= a.max_x && y >= a.min_y && y <= a.max_y;
            const bool pb = x >= b.min_x && x <= b.max_x && y >= b.min_y && y <= b.max_y;
            in_a += pa;
            in_b += pb;
            in_both += pa && pb;
        }
    }
    const std::int64_t uni = in_a + in_b - in_both;
    return uni > 0 ? static_cast<double>(in_both) / static_cast<double>(uni) : 0.0;
}

// ---------------------------------------------------------------------------
// Pose composition through explicit homogeneous matrices.

struct Mat4 {
    double m[4][4] = {};
};

inline Mat4 pose_matrix(const bevradar::EgoPose& p) {
    const auto& q = p.rotation;
    Mat4 t;
    t.m[0][0] = 1 - 2 * (q.y * q.y + q.z * q.z);
    t.m[0][1] = 2 * (q.x * q.y - q.w * q.z);
    t.m[0][2] = 2 * (q.x * q.z + q.w * q.y);
    t.m[1][0] = 2 * (q.x * q.y + q.w * q.z);
    t.m[1][1] = 1 - 2 * (q.x * q.x + q.z * q.z);
    t.m[1][2] = 2 * (q.y * q.z - q.w * q.x);
    t.m[2][0] = 2 * (q.x * q.z - q.w * q.y);
    t.m[2][1] = 2 * (q.y * q.z + q.w * q.x);
    t.m[2][2] = 1 - 2 * (q.x * q.x + q.y * q.y);
    t.m[0][3] = p.translation.x;
    t.m[1][3] = p.translation.y;
    t.m[2][3] = p.translation.z;
    t.m[3][3] = 1.0;
    return t;
}

inline Mat4 rigid_inverse(const Mat4& t) {
    Mat4 inv;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) inv.m[i][j] = t.m[j][i];
    }
    for (int i = 0; i < 3; ++i) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j) s += t.m[j][i] * t.m[j][3];
        inv.m[i][3] = -s;
    }
    inv.m[3][3] = 1.0;
    return inv;
}

inline Mat4 mat_mul(const Mat4& a, const Mat4& b) {
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += a.m[i][k] * b.m[k][j];
            r.m[i][j] = s;
        }
    }
    return r;
}

inline bevradar::Vec3 transform_via_matrix(bevradar::Vec3 p,
                                           const bevradar::EgoPose& from,
                                           const bevradar::EgoPose& to) {
    const Mat4 m = mat_mul(rigid_inverse(pose_matrix(to)), pose_matrix(from));
    return {m.m[0][0] * p.x + m.m[0][1] * p.y + m.m[0][2] * p.z + m.m[0][3],
            m.m[1][0] * p.x + m.m[1][1] * p.y + m.m[1][2] * p.z + m.m[1][3],
            m.m[2][0] * p.x + m.m[2][1] * p.y + m.m[2][2] * p.z + m.m[2][3]};
}

// ---------------------------------------------------------------------------
// Reference association pipeline.

inline double ref_iou(const bevradar::BevBox& a, const bevradar::BevBox& b) {
    const double ix = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x);
    const double iy = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = (a.max_x - a.min_x) * (a.max_y - a.min_y) +
                       (b.max_x - b.min_x) * (b.max_y - b.min_y) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// AABB of a rotated rectangle via corner enumeration. Corner offsets are
/// accumulated before adding the center so results match closed-form AABBs
/// bit for bit.
inline bevradar::BevBox ref_footprint(const bevradar::PriorBox& p) {
    const double hl = 0.5 * p.length;
    const double hw = 0.5 * p.width;
    const double c = std::cos(p.yaw);
    const double s = std::sin(p.yaw);
    double off_x[4], off_y[4];
    int k = 0;
    for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) {
            off_x[k] = c * (sx * hl) - s * (sy * hw);
            off_y[k] = s * (sx * hl) + c * (sy * hw);
            ++k;
        }
    }
    const double dx = std::max({off_x[0], off_x[1], off_x[2], off_x[3]});
    const double dy = std::max({off_y[0], off_y[1], off_y[2], off_y[3]});
    const double nx = std::min({off_x[0], off_x[1], off_x[2], off_x[3]});
    const double ny = std::min({off_y[0], off_y[1], off_y[2], off_y[3]});
    return {p.center.x + nx, p.center.y + ny, p.center.x + dx, p.center.y + dy};
}

inline std::pair<int, int> ref_cell(double x, double y, const bevradar::GridSpec& g) {
    const double s = g.cell_size();
    auto q = [&](double coord) {
        int idx = static_cast<int>(std::floor((coord + g.half_range) / s));
        return std::clamp(idx, 0, g.cells_per_side - 1);
    };
    return {q(x), q(y)};
}

/// Every cell of the grid whose center falls in [min, max) of the box,
/// found by scanning the full grid.
inline std::vector<std::pair<int, int>> ref_covered_cells(const bevradar::BevBox& box,
                                                          const bevradar::GridSpec& g) {
    std::vector<std::pair<int, int>> cells;
    const double s = g.cell_size();
    for (int r = 0; r < g.cells_per_side; ++r) {
        const double cx = -g.half_range + (r + 0.5) * s;
        for (int c = 0; c < g.cells_per_side; ++c) {
            const double cy = -g.half_range + (c + 0.5) * s;
            if (cx >= box.min_x && cx < box.max_x && cy >= box.min_y && cy < box.max_y) {
                cells.emplace_back(r, c);
            }
        }
    }
    return cells;
}

inline std::vector<std::size_t> ref_effective_labels(
    const std::vector<bevradar::PriorBox>& priors, const bevradar::ClassPolicy& policy) {
    std::vector<std::size_t> enabled;
    for (std::size_t i = 0; i < priors.size(); ++i) {
        if (policy.enabled(priors[i].class_id)) enabled.push_back(i);
    }
    std::stable_sort(enabled.begin(), enabled.end(), [&](std::size_t a, std::size_t b) {
        return priors[a].score > priors[b].score;
    });
    std::vector<std::size_t> kept;
    for (std::size_t idx : enabled) {
        bool disjoint = true;
        for (std::size_t k : kept) {
            if (ref_iou(ref_footprint(priors[idx]), ref_footprint(priors[k])) != 0.0) {
                disjoint = false;
                break;
            }
        }
        if (disjoint) kept.push_back(idx);
    }
    return kept;
}

inline bevradar::Association reference_associate(const bevradar::SweepBundle& bundle,
                                                 const std::vector<bevradar::PriorBox>& priors,
                                                 const bevradar::ClassPolicy& policy,
                                                 const bevradar::MatchConfig& cfg,
                                                 const bevradar::GridSpec& g) {
    std::vector<bevradar::PriorBox> labels;
    for (std::size_t idx : ref_effective_labels(priors, policy)) {
        labels.push_back(priors[idx]);
    }

    // Stage 1 over every point-label pair, coverage by full grid scan.
    std::vector<std::vector<std::pair<int, int>>> regions;
    regions.reserve(labels.size());
    for (const auto& label : labels) {
        regions.push_back(ref_covered_cells(ref_footprint(label), g));
    }
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < bundle.points.size(); ++i) {
        const auto cell = ref_cell(bundle.points[i].position.x,
                                   bundle.points[i].position.y, g);
        for (std::size_t l = 0; l < labels.size(); ++l) {
            if (std::find(regions[l].begin(), regions[l].end(), cell) !=
                regions[l].end()) {
                candidates.emplace_back(i, l);
                break;  // labels are disjoint, first hit is the only hit
            }
        }
    }

    // Radar boxes.
    std::vector<bevradar::BevBox> boxes;
    std::vector<bevradar::Vec2> centers;
    const double edge = cfg.alpha * cfg.radar_box_edge;
    for (const auto& [pi, li] : candidates) {
        const bevradar::Vec2 c = bundle.points[pi].position.xy();
        boxes.push_back({c.x - 0.5 * edge, c.y - 0.5 * edge, c.x + 0.5 * edge,
                         c.y + 0.5 * edge});
        centers.push_back(c);
    }

    // Midline overlap resolution in center-lexicographic order.
    std::vector<std::size_t> order(boxes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (centers[a].x != centers[b].x) return centers[a].x < centers[b].x;
        if (centers[a].y != centers[b].y) return centers[a].y < centers[b].y;
        return a < b;
    });
    std::size_t degenerate = 0;
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            bevradar::BevBox& bi = boxes[order[a]];
            bevradar::BevBox& bj = boxes[order[b]];
            const bevradar::Vec2 ci = centers[order[a]];
            const bevradar::Vec2 cj = centers[order[b]];
            const double ix = std::min(bi.max_x, bj.max_x) - std::max(bi.min_x, bj.min_x);
            const double iy = std::min(bi.max_y, bj.max_y) - std::max(bi.min_y, bj.min_y);
            if (!(ix > 0.0 && iy > 0.0)) continue;
            const double dx = cj.x - ci.x;
            const double dy = cj.y - ci.y;
            if (dx == 0.0 && dy == 0.0) {
                const std::size_t later = std::max(order[a], order[b]);
                boxes[later] = {centers[later].x, centers[later].y, centers[later].x,
                                centers[later].y};
                ++degenerate;
            } else if (dx >= std::abs(dy)) {
                const double mid = 0.5 * (ci.x + cj.x);
                bi.max_x = std::min(bi.max_x, mid);
                bj.min_x = std::max(bj.min_x, mid);
            } else if (dy > 0.0) {
                const double mid = 0.5 * (ci.y + cj.y);
                bi.max_y = std::min(bi.max_y, mid);
                bj.min_y = std::max(bj.min_y, mid);
            } else {
                const double mid = 0.5 * (ci.y + cj.y);
                bj.max_y = std::min(bj.max_y, mid);
                bi.min_y = std::max(bi.min_y, mid);
            }
        }
    }

    // Stage 2.
    bevradar::Association assoc;
    assoc.grid = g;
    assoc.degenerate_clips = degenerate;
    assoc.label_points.resize(labels.size());
    std::vector<bool> matched(bundle.points.size(), false);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto [pi, li] = candidates[k];
        const double score = ref_iou(boxes[k], ref_footprint(labels[li]));
        if (score >= cfg.beta) {
            assoc.pairs.push_back({pi, li, score, boxes[k]});
            assoc.label_points[li].push_back(pi);
            matched[pi] = true;
        }
    }
    std::sort(assoc.pairs.begin(), assoc.pairs.end(),
              [](const bevradar::MatchPair& a, const bevradar::MatchPair& b) {
                  return a.point_index < b.point_index;
              });
    for (std::size_t i = 0; i < bundle.points.size(); ++i) {
        if (!matched[i]) assoc.unmatched_points.push_back(i);
    }
    return assoc;
}

}  // namespace oracle
