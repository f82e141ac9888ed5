#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bevradar/association.hpp"
#include "bevradar/errors.hpp"
#include "bevradar/geometry.hpp"
#include "bevradar/priors.hpp"
#include "bevradar/radar_points.hpp"

namespace bevradar {

/// Deterministic scene RNG. The mt19937_64 sequence is fixed by the standard
/// and the distributions are hand-rolled, so a seed produces the same scene
/// on every platform and toolchain.
class SceneRng {
  public:
    explicit SceneRng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;  // [0,1)
        return lo + u * (hi - lo);
    }

    int uniform_int(int n) {  // [0, n)
        return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
    }

    bool chance(double p) { return uniform(0.0, 1.0) < p; }

    double gaussian(double sigma) {
        if (sigma == 0.0) return 0.0;
        // Box-Muller; the sine branch is discarded to stay stateless.
        double u1 = 0.0;
        do {
            u1 = uniform(0.0, 1.0);
        } while (u1 <= 0.0);
        const double u2 = uniform(0.0, 1.0);
        return sigma * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

  private:
    std::mt19937_64 eng_;
};

struct ClassSizeRange {
    double min_width = 0.0;
    double max_width = 0.0;
    double min_length = 0.0;
    double max_length = 0.0;
};

inline ClassSizeRange class_size_range(ObjectClass c) {
    switch (c) {
        case ObjectClass::kCar: return {1.8, 2.1, 4.2, 5.0};
        case ObjectClass::kTruck: return {2.2, 2.5, 5.5, 6.5};
        case ObjectClass::kBus: return {2.8, 3.0, 10.0, 12.0};
        case ObjectClass::kTrailer: return {2.5, 2.9, 8.0, 12.0};
        case ObjectClass::kConstructionVehicle: return {2.5, 3.0, 5.0, 7.0};
        case ObjectClass::kPedestrian: return {0.5, 0.8, 0.5, 0.8};
        case ObjectClass::kMotorcycle: return {0.7, 0.9, 2.0, 2.2};
        case ObjectClass::kBicycle: return {0.5, 0.7, 1.5, 1.8};
        case ObjectClass::kTrafficCone: return {0.3, 0.4, 0.3, 0.4};
        case ObjectClass::kBarrier: return {0.4, 0.6, 2.0, 3.0};
    }
    return {1.0, 1.0, 1.0, 1.0};
}

/// Parameters of one synthetic BEV scene. Defaults describe a clean scene:
/// noise-free radar, disjoint car/truck labels with generous margins, and
/// object points far enough apart that unit radar boxes never collide.
struct SceneSpec {
    std::uint64_t rng_seed = 0;
    int n_objects = 10;
    int points_per_object = 3;
    int clutter_points = 50;
    double position_noise_sigma = 0.0;        // meters, radar point jitter
    double radar_velocity_noise_sigma = 0.0;  // m/s per component
    double prior_velocity_noise_sigma = 0.0;  // m/s per component
    double footprint_margin = 1.2;            // min gap between label footprints
    double interior_margin = 0.6;             // points stay this far inside
    double min_point_separation = 1.2;        // pairwise, object points
    double max_object_speed = 15.0;           // m/s per component
    int n_sweeps = 1;                         // 1..3
    double ego_speed = 0.0;                   // m/s along +x, multi-sweep only
    double sweep_dt = 0.1;                    // seconds between sweeps
    bool structured_clutter = false;          // cluster clutter near objects
    std::vector<ObjectClass> classes = {ObjectClass::kCar, ObjectClass::kTruck};
    std::optional<ClassSizeRange> size_override;  // replaces per-class sizes
    GridSpec grid;
};

inline void validate_scene_spec(const SceneSpec& spec) {
    auto require = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(std::string(field) + " " + what);
    };
    require(spec.n_objects >= 0, "scene.n_objects", "must be >= 0");
    require(spec.points_per_object >= 0, "scene.points_per_object", "must be >= 0");
    require(spec.clutter_points >= 0, "scene.clutter_points", "must be >= 0");
    require(spec.position_noise_sigma >= 0.0, "scene.position_noise_sigma",
            "must be >= 0");
    require(spec.radar_velocity_noise_sigma >= 0.0, "scene.radar_velocity_noise_sigma",
            "must be >= 0");
    require(spec.prior_velocity_noise_sigma >= 0.0, "scene.prior_velocity_noise_sigma",
            "must be >= 0");
    require(spec.footprint_margin >= 0.0, "scene.footprint_margin", "must be >= 0");
    require(spec.interior_margin >= 0.0, "scene.interior_margin", "must be >= 0");
    require(spec.min_point_separation >= 0.0, "scene.min_point_separation",
            "must be >= 0");
    require(spec.max_object_speed >= 0.0, "scene.max_object_speed", "must be >= 0");
    require(spec.n_sweeps >= 1 && spec.n_sweeps <= 3, "scene.n_sweeps",
            "must lie in [1, 3]");
    require(spec.sweep_dt > 0.0, "scene.sweep_dt", "must be > 0");
    require(!spec.classes.empty(), "scene.classes", "must not be empty");
    if (spec.size_override) {
        require(spec.size_override->min_width > 0.0 &&
                    spec.size_override->max_width >= spec.size_override->min_width &&
                    spec.size_override->min_length > 0.0 &&
                    spec.size_override->max_length >= spec.size_override->min_length,
                "scene.size_override", "must be positive ordered ranges");
    }
    validate_grid(spec.grid);
}

/// Ground truth of a generated scene, aligned with the accumulated bundle.
struct SceneTruth {
    std::string frame_id;
    std::uint64_t seed = 0;
    std::vector<int> point_object;          // per bundle point; -1 = clutter
    std::vector<Vec2> object_velocity;      // per object, the true velocity
    std::vector<std::size_t> object_prior;  // object -> index into priors
    std::vector<Vec2> prior_velocity;       // per prior, the (noisy) velocity prior
};

struct Scene {
    SweepBundle bundle;
    std::vector<PriorBox> priors;
    SceneTruth truth;
    std::vector<SweepFrame> frames;  // [0] = current, then older
    std::vector<TimedPose> poses;    // oldest first, ascending timestamps
};

namespace detail {

/// Largest of the per-axis separations; positive iff the boxes are disjoint.
inline double box_gap(const BevBox& a, const BevBox& b) {
    const double sep_x = std::max(a.min_x - b.max_x, b.min_x - a.max_x);
    const double sep_y = std::max(a.min_y - b.max_y, b.min_y - a.max_y);
    return std::max(sep_x, sep_y);
}

inline bool inside_expanded(Vec2 p, const BevBox& box, double margin) {
    return p.x >= box.min_x - margin && p.x <= box.max_x + margin &&
           p.y >= box.min_y - margin && p.y <= box.max_y + margin;
}

}  // namespace detail

inline constexpr int kMaxPlacementRejections = 10000;

/// Generate a synthetic scene with known per-point ground truth. Object
/// footprints are placed by rejection sampling so they stay pairwise disjoint
/// with the requested margin; object points sample the footprint interiors;
/// clutter is uniform over the grid but kept clear of every label region, so
/// a correct pipeline can never match it.
inline Scene generate_scene(const SceneSpec& spec) {
    validate_scene_spec(spec);
    SceneRng rng(spec.rng_seed);
    const double hr = spec.grid.half_range;
    const double edge_clearance = 3.0;
    int rejections = 0;
    auto reject = [&] {
        if (++rejections > kMaxPlacementRejections) {
            throw GenerationFailure(
                "scene placement failed after " + std::to_string(kMaxPlacementRejections) +
                " rejections; constraints are too tight for the grid");
        }
    };

    Scene scene;
    scene.truth.seed = spec.rng_seed;
    scene.truth.frame_id = "scene-" + std::to_string(spec.rng_seed);

    // Objects: class, size, pose, velocity.
    struct SceneObject {
        ObjectClass cls;
        Vec2 center;
        double width, length, yaw;
        BevBox fp;
        Vec2 velocity;
    };
    std::vector<SceneObject> objects;
    while (static_cast<int>(objects.size()) < spec.n_objects) {
        SceneObject obj;
        obj.cls = spec.classes[rng.uniform_int(static_cast<int>(spec.classes.size()))];
        const ClassSizeRange sz =
            spec.size_override ? *spec.size_override : class_size_range(obj.cls);
        obj.width = rng.uniform(sz.min_width, sz.max_width);
        obj.length = rng.uniform(sz.min_length, sz.max_length);
        obj.yaw = rng.uniform(-3.141592653589793, 3.141592653589793);
        const double reach = 0.5 * std::hypot(obj.width, obj.length);
        const double lim = hr - edge_clearance - reach;
        if (lim <= 0.0) {
            reject();
            continue;
        }
        obj.center = {rng.uniform(-lim, lim), rng.uniform(-lim, lim)};
        PriorBox proto;
        proto.center = obj.center;
        proto.width = obj.width;
        proto.length = obj.length;
        proto.yaw = obj.yaw;
        obj.fp = footprint(proto);
        // The interior must be able to host points with the requested margin.
        if (obj.fp.width() <= 2.0 * spec.interior_margin ||
            obj.fp.height() <= 2.0 * spec.interior_margin) {
            reject();
            continue;
        }
        bool ok = true;
        for (const auto& other : objects) {
            if (detail::box_gap(obj.fp, other.fp) < spec.footprint_margin) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            reject();
            continue;
        }
        obj.velocity = {rng.uniform(-spec.max_object_speed, spec.max_object_speed),
                        rng.uniform(-spec.max_object_speed, spec.max_object_speed)};
        objects.push_back(obj);
    }

    // Priors mirror the objects one-to-one, with noisy velocity regressions.
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const SceneObject& obj = objects[i];
        PriorBox prior;
        prior.class_id = obj.cls;
        prior.center = obj.center;
        prior.width = obj.width;
        prior.length = obj.length;
        prior.yaw = obj.yaw;
        prior.score = rng.uniform(0.5, 1.0);
        const Vec2 noisy{obj.velocity.x + rng.gaussian(spec.prior_velocity_noise_sigma),
                         obj.velocity.y + rng.gaussian(spec.prior_velocity_noise_sigma)};
        prior.velocity_prior = noisy;
        scene.priors.push_back(prior);
        scene.truth.object_prior.push_back(i);
        scene.truth.object_velocity.push_back(obj.velocity);
        scene.truth.prior_velocity.push_back(noisy);
    }

    // Ego trajectory: the current ego frame is the world frame; previous
    // poses trail behind along +x.
    const std::int64_t t0 = 1000000;
    const std::int64_t dt_us = static_cast<std::int64_t>(spec.sweep_dt * 1e6);
    std::vector<EgoPose> sweep_pose(spec.n_sweeps);
    for (int k = 0; k < spec.n_sweeps; ++k) {
        sweep_pose[k] = {{-spec.ego_speed * spec.sweep_dt * k, 0.0, 0.0},
                         {1.0, 0.0, 0.0, 0.0},
                         t0 - dt_us * k};
    }

    // World-frame points for every sweep, with per-point truth.
    struct WorldPoint {
        RadarPoint point;  // position in world frame for now
        int object;        // -1 = clutter
    };
    std::vector<std::vector<WorldPoint>> sweep_points(spec.n_sweeps);
    std::vector<Vec2> placed_object_points;

    for (int k = 0; k < spec.n_sweeps; ++k) {
        for (std::size_t i = 0; i < objects.size(); ++i) {
            const SceneObject& obj = objects[i];
            const BevBox inner{obj.fp.min_x + spec.interior_margin,
                               obj.fp.min_y + spec.interior_margin,
                               obj.fp.max_x - spec.interior_margin,
                               obj.fp.max_y - spec.interior_margin};
            for (int p = 0; p < spec.points_per_object; ++p) {
                Vec2 base;
                while (true) {
                    base = {rng.uniform(inner.min_x, inner.max_x),
                            rng.uniform(inner.min_y, inner.max_y)};
                    bool separated = true;
                    for (const Vec2& other : placed_object_points) {
                        if ((base - other).norm() < spec.min_point_separation) {
                            separated = false;
                            break;
                        }
                    }
                    if (separated) break;
                    reject();
                }
                placed_object_points.push_back(base);
                WorldPoint wp;
                wp.object = static_cast<int>(i);
                wp.point.position = {base.x + rng.gaussian(spec.position_noise_sigma),
                                     base.y + rng.gaussian(spec.position_noise_sigma),
                                     rng.uniform(0.0, 2.0)};
                wp.point.v_comp = {
                    obj.velocity.x + rng.gaussian(spec.radar_velocity_noise_sigma),
                    obj.velocity.y + rng.gaussian(spec.radar_velocity_noise_sigma)};
                wp.point.v_raw = {wp.point.v_comp.x + rng.uniform(-2.0, 2.0),
                                  wp.point.v_comp.y + rng.uniform(-2.0, 2.0)};
                wp.point.rcs = rng.uniform(0.0, 20.0);
                wp.point.timestamp_us = sweep_pose[k].timestamp_us;
                sweep_points[k].push_back(wp);
            }
        }
        const double clutter_exclusion = spec.grid.cell_size() + 0.1;
        for (int c = 0; c < spec.clutter_points; ++c) {
            Vec2 pos;
            while (true) {
                if (spec.structured_clutter && !objects.empty() && rng.chance(0.6)) {
                    const SceneObject& obj =
                        objects[rng.uniform_int(static_cast<int>(objects.size()))];
                    pos = {rng.uniform(obj.fp.min_x - 4.0, obj.fp.max_x + 4.0),
                           rng.uniform(obj.fp.min_y - 4.0, obj.fp.max_y + 4.0)};
                } else {
                    pos = {rng.uniform(-(hr - 0.5), hr - 0.5),
                           rng.uniform(-(hr - 0.5), hr - 0.5)};
                }
                if (std::abs(pos.x) >= hr - 0.5 || std::abs(pos.y) >= hr - 0.5) {
                    reject();
                    continue;
                }
                bool clear = true;
                for (const auto& obj : objects) {
                    if (detail::inside_expanded(pos, obj.fp, clutter_exclusion)) {
                        clear = false;
                        break;
                    }
                }
                if (clear) break;
                reject();
            }
            WorldPoint wp;
            wp.object = -1;
            wp.point.position = {pos.x, pos.y, rng.uniform(0.0, 2.0)};
            wp.point.v_comp = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
            wp.point.v_raw = {wp.point.v_comp.x + rng.uniform(-2.0, 2.0),
                              wp.point.v_comp.y + rng.uniform(-2.0, 2.0)};
            wp.point.rcs = rng.uniform(0.0, 20.0);
            wp.point.timestamp_us = sweep_pose[k].timestamp_us;
            sweep_points[k].push_back(wp);
        }
    }

    // Express every sweep in its own ego frame and assemble the frames.
    const EgoPose world_frame{{0, 0, 0}, {1, 0, 0, 0}, t0};
    scene.frames.resize(spec.n_sweeps);
    for (int k = 0; k < spec.n_sweeps; ++k) {
        SweepFrame& frame = scene.frames[k];
        frame.pose = sweep_pose[k];
        frame.frame_id = k == 0 ? scene.truth.frame_id
                                : scene.truth.frame_id + "-prev" + std::to_string(k);
        for (const WorldPoint& wp : sweep_points[k]) {
            RadarPoint p = wp.point;
            p.position = transform_point(p.position, world_frame, sweep_pose[k]);
            p.v_comp = rotate_planar(p.v_comp, world_frame, sweep_pose[k]);
            p.v_raw = rotate_planar(p.v_raw, world_frame, sweep_pose[k]);
            frame.points.push_back(p);
        }
    }
    for (int k = spec.n_sweeps - 1; k >= 0; --k) {
        scene.poses.push_back({scene.frames[k].frame_id, scene.frames[k].pose});
    }

    scene.bundle = accumulate_sweeps(
        scene.frames[0],
        spec.n_sweeps > 1 ? std::optional<SweepFrame>(scene.frames[1]) : std::nullopt,
        spec.n_sweeps > 2 ? std::optional<SweepFrame>(scene.frames[2]) : std::nullopt,
        spec.grid);

    // Truth entries follow the bundle's accumulation order: current sweep
    // first, then older sweeps, each gated after the transform back into the
    // current frame.
    for (int k = 0; k < spec.n_sweeps; ++k) {
        for (std::size_t i = 0; i < sweep_points[k].size(); ++i) {
            const Vec3 in_current = transform_point(scene.frames[k].points[i].position,
                                                    sweep_pose[k], sweep_pose[0]);
            if (std::abs(in_current.x) < hr && std::abs(in_current.y) < hr) {
                scene.truth.point_object.push_back(sweep_points[k][i].object);
            }
        }
    }
    if (scene.truth.point_object.size() != scene.bundle.points.size()) {
        throw Error("internal: truth bookkeeping diverged from the bundle");
    }
    return scene;
}

/// Point-level quality of an association against scene truth.
struct FilterMetrics {
    double precision = 1.0;
    double recall = 1.0;
    double clutter_rejection_rate = 1.0;
    double velocity_mae_fused = 0.0;
    double velocity_mae_prior = 0.0;
    std::size_t matched_pairs = 0;
    std::size_t matched_objects = 0;
    bool no_matches = false;
    bool no_object_points = false;
    bool no_clutter = false;
};

/// A matched pair in original-prior index space, carrying everything the
/// scorer needs. Both the in-process harness and the report-driven eval path
/// reduce to this form.
struct ScoredPair {
    std::size_t point_index = 0;
    std::size_t prior_index = 0;
    double iou = 0.0;
    Vec2 v_comp;
    int sweep_offset = 0;
};

inline FilterMetrics score_pairs(std::span<const ScoredPair> pairs,
                                 std::size_t total_points, const SceneTruth& truth) {
    if (truth.point_object.size() != total_points) {
        throw std::invalid_argument("truth does not describe this point set");
    }
    FilterMetrics m;
    m.matched_pairs = pairs.size();
    m.no_matches = pairs.empty();

    std::size_t matched_true = 0;
    std::size_t matched_correct = 0;
    for (const ScoredPair& p : pairs) {
        const int obj = truth.point_object.at(p.point_index);
        if (obj >= 0) {
            ++matched_true;
            if (truth.object_prior.at(obj) == p.prior_index) ++matched_correct;
        }
    }
    std::size_t object_points = 0;
    for (int obj : truth.point_object) object_points += obj >= 0;
    const std::size_t clutter_points = total_points - object_points;
    const std::size_t matched_clutter = pairs.size() - matched_true;

    m.no_object_points = object_points == 0;
    m.no_clutter = clutter_points == 0;
    m.precision = pairs.empty()
                      ? 1.0
                      : static_cast<double>(matched_true) / static_cast<double>(pairs.size());
    m.recall = object_points == 0 ? 1.0
                                  : static_cast<double>(matched_correct) /
                                        static_cast<double>(object_points);
    m.clutter_rejection_rate =
        clutter_points == 0 ? 1.0
                            : 1.0 - static_cast<double>(matched_clutter) /
                                        static_cast<double>(clutter_points);

    // Fused velocity per object: the best pair feeding that object's prior,
    // best meaning highest IOU, then the most recent sweep, then the lowest
    // point index. This mirrors the rasterizer's conflict policy.
    std::map<std::size_t, std::size_t> prior_to_object;
    for (std::size_t obj = 0; obj < truth.object_prior.size(); ++obj) {
        prior_to_object[truth.object_prior[obj]] = obj;
    }
    std::map<std::size_t, const ScoredPair*> best;  // object -> pair
    for (const ScoredPair& p : pairs) {
        auto it = prior_to_object.find(p.prior_index);
        if (it == prior_to_object.end()) continue;
        const std::size_t obj = it->second;
        auto [slot, inserted] = best.try_emplace(obj, &p);
        if (!inserted) {
            const ScoredPair* cur = slot->second;
            const bool better = p.iou > cur->iou ||
                                (p.iou == cur->iou &&
                                 (p.sweep_offset < cur->sweep_offset ||
                                  (p.sweep_offset == cur->sweep_offset &&
                                   p.point_index < cur->point_index)));
            if (better) slot->second = &p;
        }
    }
    double fused_sum = 0.0;
    double prior_sum = 0.0;
    for (const auto& [obj, pair] : best) {
        const Vec2 tv = truth.object_velocity.at(obj);
        fused_sum += 0.5 * (std::abs(pair->v_comp.x - tv.x) + std::abs(pair->v_comp.y - tv.y));
        const Vec2 pv = truth.prior_velocity.at(truth.object_prior.at(obj));
        prior_sum += 0.5 * (std::abs(pv.x - tv.x) + std::abs(pv.y - tv.y));
    }
    m.matched_objects = best.size();
    if (!best.empty()) {
        m.velocity_mae_fused = fused_sum / static_cast<double>(best.size());
        m.velocity_mae_prior = prior_sum / static_cast<double>(best.size());
    }
    return m;
}

/// Score an association computed in effective-label space.
/// `label_prior_index` maps each label back to its source prior.
inline FilterMetrics score(const Association& assoc,
                           std::span<const std::size_t> label_prior_index,
                           const SweepBundle& bundle, const SceneTruth& truth) {
    std::vector<ScoredPair> pairs;
    pairs.reserve(assoc.pairs.size());
    for (const MatchPair& p : assoc.pairs) {
        pairs.push_back({p.point_index, label_prior_index[p.label_index], p.score,
                         bundle.points[p.point_index].v_comp,
                         bundle.points[p.point_index].sweep_offset});
    }
    return score_pairs(pairs, bundle.points.size(), truth);
}

struct SweepRow {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    double beta = 0.0;
    FilterMetrics metrics;
};

/// Run the pipeline over an (alpha, beta) grid. Every cell sees the same
/// scenes: seeds base, base+1, ... base+n_seeds-1. Rows come out alpha-major,
/// then beta, then seed.
inline std::vector<SweepRow> sweep_hyperparams(std::span<const double> alphas,
                                               std::span<const double> betas,
                                               const SceneSpec& base, int n_seeds,
                                               const ClassPolicy& policy =
                                                   ClassPolicy::defaults()) {
    if (alphas.empty() || betas.empty() || n_seeds <= 0) {
        throw ConfigError("hyperparameter sweep needs alphas, betas and seeds");
    }
    std::vector<Scene> scenes;
    std::vector<std::vector<std::size_t>> label_maps;
    for (int s = 0; s < n_seeds; ++s) {
        SceneSpec spec = base;
        spec.rng_seed = base.rng_seed + static_cast<std::uint64_t>(s);
        scenes.push_back(generate_scene(spec));
        label_maps.push_back(effective_label_indices(scenes.back().priors, policy));
    }
    std::vector<SweepRow> rows;
    for (double alpha : alphas) {
        for (double beta : betas) {
            MatchConfig cfg;
            cfg.alpha = alpha;
            cfg.beta = beta;
            for (int s = 0; s < n_seeds; ++s) {
                const Scene& scene = scenes[s];
                std::vector<PriorBox> labels;
                for (std::size_t idx : label_maps[s]) labels.push_back(scene.priors[idx]);
                const Association assoc =
                    associate_labels(scene.bundle, labels, cfg, base.grid);
                rows.push_back({scene.truth.seed, alpha, beta,
                                score(assoc, label_maps[s], scene.bundle, scene.truth)});
            }
        }
    }
    return rows;
}

}  // namespace bevradar
