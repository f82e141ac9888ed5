#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "bevradar/errors.hpp"

namespace bevradar {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;

    double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    Vec2 xy() const { return {x, y}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Unit quaternion, scalar-first.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Quat&, const Quat&) = default;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat conjugate() const { return {w, -x, -y, -z}; }

    Vec3 rotate(Vec3 v) const {
        // v' = v + 2 w (q x v) + 2 q x (q x v)
        const Vec3 q{x, y, z};
        const Vec3 t = cross(q, v);
        const Vec3 u = cross(q, Vec3{2.0 * t.x, 2.0 * t.y, 2.0 * t.z});
        return {v.x + 2.0 * w * t.x + u.x, v.y + 2.0 * w * t.y + u.y,
                v.z + 2.0 * w * t.z + u.z};
    }

    static Quat from_yaw(double yaw) {
        return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
    }
};

/// Rigid pose of the ego vehicle: maps ego-frame coordinates to the global frame.
struct EgoPose {
    Vec3 translation;
    Quat rotation;
    std::int64_t timestamp_us = 0;

    friend bool operator==(const EgoPose&, const EgoPose&) = default;
};

inline constexpr double kPoseQuatNormTolerance = 1e-9;

inline void validate_pose(const EgoPose& pose) {
    if (std::abs(pose.rotation.norm() - 1.0) > kPoseQuatNormTolerance) {
        throw Error("pose rotation quaternion is not unit length");
    }
}

/// Square BEV grid centered on the ego vehicle. Row indexes +x, column indexes +y.
struct GridSpec {
    double half_range = 51.2;
    int cells_per_side = 256;

    double cell_size() const { return 2.0 * half_range / cells_per_side; }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline void validate_grid(const GridSpec& g) {
    if (!(g.half_range > 0.0)) throw ConfigError("grid half_range must be > 0");
    if (g.cells_per_side <= 0) throw ConfigError("grid cells_per_side must be > 0");
}

struct CellIndex {
    int row = 0;
    int col = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Axis-aligned box in BEV metric coordinates. Zero-area boxes are legal.
struct BevBox {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    friend bool operator==(const BevBox&, const BevBox&) = default;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }

    bool valid() const { return min_x <= max_x && min_y <= max_y; }

    /// Closed containment test.
    bool contains(Vec2 p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }

    static BevBox centered(Vec2 c, double extent_x, double extent_y) {
        return {c.x - 0.5 * extent_x, c.y - 0.5 * extent_y,
                c.x + 0.5 * extent_x, c.y + 0.5 * extent_y};
    }
};

/// Quantize a planar point to its grid cell. The mapping is
/// floor((coord + half_range) / cell_size); boundary points fall to the
/// higher-index cell. Throws OutOfRange outside the open effective range.
inline CellIndex world_to_cell(Vec2 p, const GridSpec& g) {
    if (!(std::abs(p.x) < g.half_range) || !(std::abs(p.y) < g.half_range)) {
        throw OutOfRange("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                         ") outside effective range " + std::to_string(g.half_range));
    }
    const double s = g.cell_size();
    auto quantize = [&](double coord) {
        int idx = static_cast<int>(std::floor((coord + g.half_range) / s));
        // The precondition holds, so any spill is a rounding artifact of at
        // most one cell; clamp back into the grid.
        return std::clamp(idx, 0, g.cells_per_side - 1);
    };
    return {quantize(p.x), quantize(p.y)};
}

/// Inverse of world_to_cell up to quantization: the metric center of a cell.
inline Vec2 cell_to_world(CellIndex c, const GridSpec& g) {
    const double s = g.cell_size();
    return {-g.half_range + (c.row + 0.5) * s, -g.half_range + (c.col + 0.5) * s};
}

/// Intersection-over-union of two valid boxes. Total: returns 0 for disjoint
/// boxes and whenever the union has zero area.
inline double iou(const BevBox& a, const BevBox& b) {
    const double ix = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x);
    const double iy = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Re-express a point given in `from` ego coordinates in `to` ego coordinates.
inline Vec3 transform_point(Vec3 p, const EgoPose& from, const EgoPose& to) {
    const Vec3 global = from.rotation.rotate(p) + from.translation;
    return to.rotation.conjugate().rotate(global - to.translation);
}

/// Rotate a planar vector from the `from` frame into the `to` frame.
/// Vectors are direction quantities: no translation is applied.
inline Vec2 rotate_planar(Vec2 v, const EgoPose& from, const EgoPose& to) {
    const Vec3 global = from.rotation.rotate({v.x, v.y, 0.0});
    return to.rotation.conjugate().rotate(global).xy();
}

/// Visit every grid cell whose center lies inside `box` under the half-open
/// rule (min <= center < max on both axes). Disjoint boxes therefore cover
/// disjoint cell sets even when they share a boundary.
template <typename Fn>
void for_each_covered_cell(const BevBox& box, const GridSpec& g, Fn&& fn) {
    const double s = g.cell_size();
    const int n = g.cells_per_side;
    auto coarse = [&](double coord) {
        return static_cast<int>(std::floor((coord + g.half_range) / s));
    };
    const int r_lo = std::max(0, coarse(box.min_x) - 1);
    const int r_hi = std::min(n - 1, coarse(box.max_x) + 1);
    const int c_lo = std::max(0, coarse(box.min_y) - 1);
    const int c_hi = std::min(n - 1, coarse(box.max_y) + 1);
    for (int r = r_lo; r <= r_hi; ++r) {
        const double cx = -g.half_range + (r + 0.5) * s;
        if (!(cx >= box.min_x && cx < box.max_x)) continue;
        for (int c = c_lo; c <= c_hi; ++c) {
            const double cy = -g.half_range + (c + 0.5) * s;
            if (!(cy >= box.min_y && cy < box.max_y)) continue;
            fn(r, c);
        }
    }
}

}  // namespace bevradar
