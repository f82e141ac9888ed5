#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bevradar/errors.hpp"
#include "bevradar/geometry.hpp"
#include "bevradar/radar_points.hpp"

namespace bevradar {

enum class ObjectClass : int {
    kCar = 0,
    kTruck,
    kBus,
    kTrailer,
    kConstructionVehicle,
    kPedestrian,
    kMotorcycle,
    kBicycle,
    kTrafficCone,
    kBarrier,
};

inline constexpr int kNumClasses = 10;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "car",        "truck",   "bus",     "trailer",      "construction_vehicle",
    "pedestrian", "motorcycle", "bicycle", "traffic_cone", "barrier"};

inline std::string_view class_name(ObjectClass c) {
    return kClassNames[static_cast<int>(c)];
}

inline std::optional<ObjectClass> class_from_name(std::string_view name) {
    for (int i = 0; i < kNumClasses; ++i) {
        if (kClassNames[i] == name) return static_cast<ObjectClass>(i);
    }
    return std::nullopt;
}

/// Camera-derived object position prior: footprint center, size, heading and
/// detection score. Lengths are along the heading, widths across it.
struct PriorBox {
    ObjectClass class_id = ObjectClass::kCar;
    Vec2 center;
    double width = 0.0;
    double length = 0.0;
    double yaw = 0.0;
    double score = 0.0;
    std::optional<Vec2> velocity_prior;

    friend bool operator==(const PriorBox&, const PriorBox&) = default;
};

/// Smallest axis-aligned box enclosing the prior's rotated footprint.
/// All matching runs on these axis-aligned footprints.
inline BevBox footprint(const PriorBox& p) {
    const double hl = 0.5 * p.length;
    const double hw = 0.5 * p.width;
    const double c = std::abs(std::cos(p.yaw));
    const double s = std::abs(std::sin(p.yaw));
    const double dx = c * hl + s * hw;
    const double dy = s * hl + c * hw;
    return {p.center.x - dx, p.center.y - dy, p.center.x + dx, p.center.y + dy};
}

/// Per-class switch for radar fusion. Pedestrians and traffic cones are
/// excluded by default: their radar returns are too unreliable to help.
struct ClassPolicy {
    std::array<bool, kNumClasses> fusion_enabled{};

    bool enabled(ObjectClass c) const { return fusion_enabled[static_cast<int>(c)]; }

    static ClassPolicy defaults() {
        ClassPolicy p;
        p.fusion_enabled.fill(true);
        p.fusion_enabled[static_cast<int>(ObjectClass::kPedestrian)] = false;
        p.fusion_enabled[static_cast<int>(ObjectClass::kTrafficCone)] = false;
        return p;
    }
    static ClassPolicy all_enabled() {
        ClassPolicy p;
        p.fusion_enabled.fill(true);
        return p;
    }
    static ClassPolicy none_enabled() { return ClassPolicy{}; }
};

// Priors JSONL: keys class (string), cx, cy, w, l, yaw, score,
// optional vx, vy (the main head's velocity regression).
inline std::vector<PriorBox> load_priors(std::string_view text) {
    std::vector<PriorBox> priors;
    detail::for_each_jsonl_line(text, [&](std::string_view line, std::size_t line_no) {
        const nlohmann::json obj = detail::parse_line_object(line, line_no);
        auto cls = obj.find("class");
        if (cls == obj.end() || !cls->is_string()) {
            throw ParseError("missing or non-string field 'class'", line_no);
        }
        const auto id = class_from_name(cls->get<std::string>());
        if (!id) {
            throw UnknownClass("unknown class '" + cls->get<std::string>() + "' (line " +
                               std::to_string(line_no) + ")");
        }
        PriorBox p;
        p.class_id = *id;
        p.center = {detail::require_number(obj, "cx", line_no),
                    detail::require_number(obj, "cy", line_no)};
        p.width = detail::require_number(obj, "w", line_no);
        p.length = detail::require_number(obj, "l", line_no);
        p.yaw = detail::require_number(obj, "yaw", line_no);
        p.score = detail::require_number(obj, "score", line_no);
        if (!(p.width > 0.0) || !(p.length > 0.0)) {
            throw ParseError("prior box size must be positive", line_no);
        }
        if (!(p.score >= 0.0 && p.score <= 1.0)) {
            throw ParseError("prior score must lie in [0, 1]", line_no);
        }
        if (obj.contains("vx") || obj.contains("vy")) {
            p.velocity_prior = Vec2{detail::require_number(obj, "vx", line_no),
                                    detail::require_number(obj, "vy", line_no)};
        }
        priors.push_back(p);
    });
    return priors;
}

inline std::string serialize_priors(const std::vector<PriorBox>& priors) {
    std::string out;
    for (const PriorBox& p : priors) {
        nlohmann::json obj{{"class", std::string(class_name(p.class_id))},
                           {"cx", p.center.x},
                           {"cy", p.center.y},
                           {"w", p.width},
                           {"l", p.length},
                           {"yaw", p.yaw},
                           {"score", p.score}};
        if (p.velocity_prior) {
            obj["vx"] = p.velocity_prior->x;
            obj["vy"] = p.velocity_prior->y;
        }
        out += obj.dump();
        out += '\n';
    }
    return out;
}

/// Keep exactly the priors whose class has fusion enabled.
inline std::vector<PriorBox> apply_class_policy(const std::vector<PriorBox>& priors,
                                                const ClassPolicy& policy) {
    std::vector<PriorBox> kept;
    kept.reserve(priors.size());
    for (const PriorBox& p : priors) {
        if (policy.enabled(p.class_id)) kept.push_back(p);
    }
    return kept;
}

namespace detail {

/// Greedy score-descending selection of pairwise non-overlapping footprints.
/// Returns indices into `priors` in kept order. Ties in score keep input order.
inline std::vector<std::size_t> greedy_disjoint_indices(
    const std::vector<PriorBox>& priors) {
    std::vector<std::size_t> order(priors.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return priors[a].score > priors[b].score;
    });
    std::vector<std::size_t> kept;
    std::vector<BevBox> kept_boxes;
    for (std::size_t idx : order) {
        const BevBox box = footprint(priors[idx]);
        bool disjoint = true;
        for (const BevBox& k : kept_boxes) {
            if (iou(box, k) != 0.0) {
                disjoint = false;
                break;
            }
        }
        if (disjoint) {
            kept.push_back(idx);
            kept_boxes.push_back(box);
        }
    }
    return kept;
}

}  // namespace detail

/// Reduce priors to the non-overlapping effective label boxes: greedy by
/// descending score, a prior survives only if its footprint has IOU exactly 0
/// with every already-kept footprint. Output is sorted by descending score.
inline std::vector<PriorBox> dedup_priors(const std::vector<PriorBox>& priors) {
    std::vector<PriorBox> kept;
    for (std::size_t idx : detail::greedy_disjoint_indices(priors)) {
        kept.push_back(priors[idx]);
    }
    return kept;
}

/// Indices (into the input list) of the priors that survive the class policy
/// followed by dedup_priors, in effective-label order.
inline std::vector<std::size_t> effective_label_indices(
    const std::vector<PriorBox>& priors, const ClassPolicy& policy) {
    std::vector<std::size_t> enabled;
    std::vector<PriorBox> filtered;
    for (std::size_t i = 0; i < priors.size(); ++i) {
        if (policy.enabled(priors[i].class_id)) {
            enabled.push_back(i);
            filtered.push_back(priors[i]);
        }
    }
    std::vector<std::size_t> result;
    for (std::size_t k : detail::greedy_disjoint_indices(filtered)) {
        result.push_back(enabled[k]);
    }
    return result;
}

}  // namespace bevradar
