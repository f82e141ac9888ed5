#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bevradar/errors.hpp"
#include "bevradar/geometry.hpp"

namespace bevradar {

/// Velocities at or above this magnitude are rejected at parse time.
inline constexpr double kMaxSpeedMps = 150.0;

/// One radar return, position in ego coordinates of its own sweep.
struct RadarPoint {
    Vec3 position;
    Vec2 v_raw;        // sensor-reported planar velocity
    Vec2 v_comp;       // ego-motion-compensated planar velocity
    double rcs = 0.0;  // dBsm, carried through unused
    std::int64_t timestamp_us = 0;
    int sweep_offset = 0;  // 0 = current frame, 1/2 = previous frames

    friend bool operator==(const RadarPoint&, const RadarPoint&) = default;
};

/// One raw sweep together with the ego pose it was captured at.
struct SweepFrame {
    std::vector<RadarPoint> points;
    EgoPose pose;
    std::string frame_id;
};

/// The accumulated input of one fusion frame: current sweep plus up to two
/// previous sweeps, all expressed in the current ego frame and depth-gated.
struct SweepBundle {
    std::vector<RadarPoint> points;
    std::string frame_id;
    EgoPose ego_pose;
};

struct TimedPose {
    std::string frame_id;
    EgoPose pose;
};

// Radar sweep JSONL: one object per line, keys
//   x, y, z         position, meters
//   vx, vy          raw planar velocity, m/s
//   vx_comp, vy_comp  compensated planar velocity, m/s
//   rcs             dBsm
//   t               timestamp, integer microseconds
// UTF-8, LF line endings. Blank lines are ignored.

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* key,
                             std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw ParseError(std::string("missing or non-numeric field '") + key + "'",
                         line_no);
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) {
        throw ParseError(std::string("non-finite value in field '") + key + "'", line_no);
    }
    return v;
}

inline std::int64_t require_integer(const nlohmann::json& obj, const char* key,
                                    std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) {
        throw ParseError(std::string("field '") + key + "' must be an integer", line_no);
    }
    return it->get<std::int64_t>();
}

inline nlohmann::json parse_line_object(std::string_view line, std::size_t line_no) {
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        throw ParseError("malformed JSON record", line_no);
    }
    return obj;
}

template <typename Fn>
void for_each_jsonl_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        const std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                           : eol - pos);
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            fn(line, line_no);
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
}

}  // namespace detail

/// Parse a radar sweep from JSONL text. Rejects non-finite numbers and any
/// velocity with magnitude >= 150 m/s.
inline std::vector<RadarPoint> parse_sweep(std::string_view text) {
    std::vector<RadarPoint> points;
    detail::for_each_jsonl_line(text, [&](std::string_view line, std::size_t line_no) {
        const nlohmann::json obj = detail::parse_line_object(line, line_no);
        RadarPoint p;
        p.position = {detail::require_number(obj, "x", line_no),
                      detail::require_number(obj, "y", line_no),
                      detail::require_number(obj, "z", line_no)};
        p.v_raw = {detail::require_number(obj, "vx", line_no),
                   detail::require_number(obj, "vy", line_no)};
        p.v_comp = {detail::require_number(obj, "vx_comp", line_no),
                    detail::require_number(obj, "vy_comp", line_no)};
        p.rcs = detail::require_number(obj, "rcs", line_no);
        p.timestamp_us = detail::require_integer(obj, "t", line_no);
        if (p.v_raw.norm() >= kMaxSpeedMps || p.v_comp.norm() >= kMaxSpeedMps) {
            throw VelocityOutOfRange("velocity magnitude >= 150 m/s", line_no);
        }
        points.push_back(p);
    });
    return points;
}

/// Inverse of parse_sweep. Doubles are emitted in shortest round-trip form,
/// so parse(serialize(points)) reproduces the points bit for bit.
inline std::string serialize_sweep(const std::vector<RadarPoint>& points) {
    std::string out;
    for (const RadarPoint& p : points) {
        nlohmann::json obj{{"x", p.position.x},     {"y", p.position.y},
                           {"z", p.position.z},     {"vx", p.v_raw.x},
                           {"vy", p.v_raw.y},       {"vx_comp", p.v_comp.x},
                           {"vy_comp", p.v_comp.y}, {"rcs", p.rcs},
                           {"t", p.timestamp_us}};
        out += obj.dump();
        out += '\n';
    }
    return out;
}

// Pose JSONL: keys frame_id (string), tx, ty, tz, qw, qx, qy, qz, t.
inline std::vector<TimedPose> parse_poses(std::string_view text) {
    std::vector<TimedPose> poses;
    detail::for_each_jsonl_line(text, [&](std::string_view line, std::size_t line_no) {
        const nlohmann::json obj = detail::parse_line_object(line, line_no);
        auto id = obj.find("frame_id");
        if (id == obj.end() || !id->is_string()) {
            throw ParseError("missing or non-string field 'frame_id'", line_no);
        }
        TimedPose tp;
        tp.frame_id = id->get<std::string>();
        tp.pose.translation = {detail::require_number(obj, "tx", line_no),
                               detail::require_number(obj, "ty", line_no),
                               detail::require_number(obj, "tz", line_no)};
        tp.pose.rotation = {detail::require_number(obj, "qw", line_no),
                            detail::require_number(obj, "qx", line_no),
                            detail::require_number(obj, "qy", line_no),
                            detail::require_number(obj, "qz", line_no)};
        tp.pose.timestamp_us = detail::require_integer(obj, "t", line_no);
        if (std::abs(tp.pose.rotation.norm() - 1.0) > kPoseQuatNormTolerance) {
            throw ParseError("pose quaternion is not unit length", line_no);
        }
        poses.push_back(std::move(tp));
    });
    return poses;
}

inline std::string serialize_poses(const std::vector<TimedPose>& poses) {
    std::string out;
    for (const TimedPose& tp : poses) {
        nlohmann::json obj{{"frame_id", tp.frame_id},
                           {"tx", tp.pose.translation.x},
                           {"ty", tp.pose.translation.y},
                           {"tz", tp.pose.translation.z},
                           {"qw", tp.pose.rotation.w},
                           {"qx", tp.pose.rotation.x},
                           {"qy", tp.pose.rotation.y},
                           {"qz", tp.pose.rotation.z},
                           {"t", tp.pose.timestamp_us}};
        out += obj.dump();
        out += '\n';
    }
    return out;
}

/// Keep exactly the points inside the grid's effective range, order preserved.
inline std::vector<RadarPoint> gate_by_depth(const std::vector<RadarPoint>& points,
                                             const GridSpec& g) {
    std::vector<RadarPoint> kept;
    kept.reserve(points.size());
    for (const RadarPoint& p : points) {
        if (std::abs(p.position.x) < g.half_range &&
            std::abs(p.position.y) < g.half_range) {
            kept.push_back(p);
        }
    }
    return kept;
}

/// Accumulate the current sweep and up to two previous sweeps into the
/// current ego frame. Previous positions are rigidly transformed; velocities
/// are rotated only (they are vectors, not positions). Gating runs after the
/// transform. Missing previous frames degrade to fewer sweeps.
inline SweepBundle accumulate_sweeps(const SweepFrame& current,
                                     const std::optional<SweepFrame>& prev1,
                                     const std::optional<SweepFrame>& prev2,
                                     const GridSpec& g) {
    validate_pose(current.pose);
    if (prev1) validate_pose(prev1->pose);
    if (prev2) validate_pose(prev2->pose);
    if (prev1 && !(prev1->pose.timestamp_us < current.pose.timestamp_us)) {
        throw PoseOrderError("prev1 pose must precede current pose");
    }
    if (prev2 && prev1 && !(prev2->pose.timestamp_us < prev1->pose.timestamp_us)) {
        throw PoseOrderError("prev2 pose must precede prev1 pose");
    }
    if (prev2 && !(prev2->pose.timestamp_us < current.pose.timestamp_us)) {
        throw PoseOrderError("prev2 pose must precede current pose");
    }

    SweepBundle bundle;
    bundle.frame_id = current.frame_id;
    bundle.ego_pose = current.pose;

    auto append = [&](const SweepFrame& frame, int offset) {
        for (RadarPoint p : frame.points) {
            if (offset != 0) {
                p.position = transform_point(p.position, frame.pose, current.pose);
                p.v_raw = rotate_planar(p.v_raw, frame.pose, current.pose);
                p.v_comp = rotate_planar(p.v_comp, frame.pose, current.pose);
            }
            p.sweep_offset = offset;
            if (std::abs(p.position.x) < g.half_range &&
                std::abs(p.position.y) < g.half_range) {
                bundle.points.push_back(p);
            }
        }
    };
    append(current, 0);
    if (prev1) append(*prev1, 1);
    if (prev2) append(*prev2, 2);
    return bundle;
}

}  // namespace bevradar
