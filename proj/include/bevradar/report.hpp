#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "bevradar/association.hpp"
#include "bevradar/errors.hpp"
#include "bevradar/geometry.hpp"
#include "bevradar/priors.hpp"
#include "bevradar/radar_points.hpp"
#include "bevradar/synth.hpp"

namespace bevradar {

/// One matched pair as recorded in the association report. `label_index`
/// addresses the effective label list, `prior_index` the original priors file.
struct ReportPair {
    std::size_t point_index = 0;
    std::size_t label_index = 0;
    std::size_t prior_index = 0;
    double iou = 0.0;
    BevBox box;
    Vec2 v_comp;
    int sweep_offset = 0;
};

/// The JSON association report emitted next to every feature map: the matched
/// pairs, the effective labels, the configuration that produced them, and the
/// warning counters.
struct ReportData {
    std::string frame_id;
    GridSpec grid;
    MatchConfig match;
    int sweeps = 0;
    std::size_t total_points = 0;
    std::size_t total_priors = 0;
    std::size_t policy_excluded_priors = 0;
    std::size_t dedup_removed_priors = 0;
    std::vector<std::string> excluded_classes;
    std::vector<std::size_t> label_prior_index;  // effective label -> prior
    std::vector<ReportPair> pairs;
    std::size_t unmatched_count = 0;
    std::size_t degenerate_clips = 0;
};

inline ReportData make_report(const std::string& frame_id, const Association& assoc,
                              const SweepBundle& bundle,
                              const std::vector<PriorBox>& priors,
                              const std::vector<std::size_t>& label_prior_index,
                              const MatchConfig& match, const GridSpec& grid,
                              int sweeps, const ClassPolicy& policy) {
    ReportData r;
    r.frame_id = frame_id;
    r.grid = grid;
    r.match = match;
    r.sweeps = sweeps;
    r.total_points = bundle.points.size();
    r.total_priors = priors.size();
    std::size_t policy_kept = 0;
    for (const PriorBox& p : priors) policy_kept += policy.enabled(p.class_id);
    r.policy_excluded_priors = priors.size() - policy_kept;
    r.dedup_removed_priors = policy_kept - label_prior_index.size();
    for (int c = 0; c < kNumClasses; ++c) {
        if (!policy.fusion_enabled[c]) {
            r.excluded_classes.emplace_back(kClassNames[c]);
        }
    }
    r.label_prior_index = label_prior_index;
    for (const MatchPair& p : assoc.pairs) {
        const RadarPoint& pt = bundle.points[p.point_index];
        r.pairs.push_back({p.point_index, p.label_index,
                           label_prior_index[p.label_index], p.score, p.radar_box,
                           pt.v_comp, pt.sweep_offset});
    }
    r.unmatched_count = assoc.unmatched_points.size();
    r.degenerate_clips = assoc.degenerate_clips;
    return r;
}

inline std::string report_to_json(const ReportData& r) {
    nlohmann::json j;
    j["frame_id"] = r.frame_id;
    j["grid"] = {{"half_range", r.grid.half_range},
                 {"cells_per_side", r.grid.cells_per_side}};
    j["match"] = {{"alpha", r.match.alpha},
                  {"beta", r.match.beta},
                  {"radar_box_edge", r.match.radar_box_edge}};
    j["sweeps"] = r.sweeps;
    j["total_points"] = r.total_points;
    j["total_priors"] = r.total_priors;
    j["policy_excluded_priors"] = r.policy_excluded_priors;
    j["dedup_removed_priors"] = r.dedup_removed_priors;
    j["excluded_classes"] = r.excluded_classes;
    j["labels"] = nlohmann::json::array();
    for (std::size_t idx : r.label_prior_index) {
        j["labels"].push_back({{"prior_index", idx}});
    }
    j["pairs"] = nlohmann::json::array();
    for (const ReportPair& p : r.pairs) {
        j["pairs"].push_back(
            {{"point_index", p.point_index},
             {"label_index", p.label_index},
             {"prior_index", p.prior_index},
             {"iou", p.iou},
             {"box", {p.box.min_x, p.box.min_y, p.box.max_x, p.box.max_y}},
             {"v_comp", {p.v_comp.x, p.v_comp.y}},
             {"sweep_offset", p.sweep_offset}});
    }
    j["unmatched_count"] = r.unmatched_count;
    j["degenerate_clips"] = r.degenerate_clips;
    return j.dump(2) + "\n";
}

inline ReportData report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("association report is not valid JSON");
    }
    try {
        ReportData r;
        r.frame_id = j.at("frame_id").get<std::string>();
        r.grid.half_range = j.at("grid").at("half_range").get<double>();
        r.grid.cells_per_side = j.at("grid").at("cells_per_side").get<int>();
        r.match.alpha = j.at("match").at("alpha").get<double>();
        r.match.beta = j.at("match").at("beta").get<double>();
        r.match.radar_box_edge = j.at("match").at("radar_box_edge").get<double>();
        r.sweeps = j.at("sweeps").get<int>();
        r.total_points = j.at("total_points").get<std::size_t>();
        r.total_priors = j.at("total_priors").get<std::size_t>();
        r.policy_excluded_priors = j.at("policy_excluded_priors").get<std::size_t>();
        r.dedup_removed_priors = j.at("dedup_removed_priors").get<std::size_t>();
        r.excluded_classes = j.at("excluded_classes").get<std::vector<std::string>>();
        for (const auto& l : j.at("labels")) {
            r.label_prior_index.push_back(l.at("prior_index").get<std::size_t>());
        }
        for (const auto& p : j.at("pairs")) {
            ReportPair pair;
            pair.point_index = p.at("point_index").get<std::size_t>();
            pair.label_index = p.at("label_index").get<std::size_t>();
            pair.prior_index = p.at("prior_index").get<std::size_t>();
            pair.iou = p.at("iou").get<double>();
            const auto& b = p.at("box");
            pair.box = {b.at(0).get<double>(), b.at(1).get<double>(),
                        b.at(2).get<double>(), b.at(3).get<double>()};
            const auto& v = p.at("v_comp");
            pair.v_comp = {v.at(0).get<double>(), v.at(1).get<double>()};
            pair.sweep_offset = p.at("sweep_offset").get<int>();
            r.pairs.push_back(pair);
        }
        r.unmatched_count = j.at("unmatched_count").get<std::size_t>();
        r.degenerate_clips = j.at("degenerate_clips").get<std::size_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("association report: ") + e.what());
    }
}

// Scene truth JSON, written by the simulator and consumed by eval.

inline std::string truth_to_json(const SceneTruth& t) {
    nlohmann::json j;
    j["frame_id"] = t.frame_id;
    j["seed"] = t.seed;
    j["point_object"] = t.point_object;
    j["object_velocity"] = nlohmann::json::array();
    for (const Vec2& v : t.object_velocity) j["object_velocity"].push_back({v.x, v.y});
    j["object_prior"] = t.object_prior;
    j["prior_velocity"] = nlohmann::json::array();
    for (const Vec2& v : t.prior_velocity) j["prior_velocity"].push_back({v.x, v.y});
    return j.dump(2) + "\n";
}

inline SceneTruth truth_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("truth file is not valid JSON");
    }
    try {
        SceneTruth t;
        t.frame_id = j.at("frame_id").get<std::string>();
        t.seed = j.at("seed").get<std::uint64_t>();
        t.point_object = j.at("point_object").get<std::vector<int>>();
        for (const auto& v : j.at("object_velocity")) {
            t.object_velocity.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        }
        t.object_prior = j.at("object_prior").get<std::vector<std::size_t>>();
        for (const auto& v : j.at("prior_velocity")) {
            t.prior_velocity.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("truth file: ") + e.what());
    }
}

/// Metrics CSV: header plus one row per run.
inline std::string metrics_csv_header() {
    return "seed,alpha,beta,precision,recall,clutter_rejection_rate,"
           "velocity_mae_fused,velocity_mae_prior\n";
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace detail

inline std::string metrics_csv_row(std::uint64_t seed, double alpha, double beta,
                                   const FilterMetrics& m) {
    std::string row = std::to_string(seed);
    for (double v : {alpha, beta, m.precision, m.recall, m.clutter_rejection_rate,
                     m.velocity_mae_fused, m.velocity_mae_prior}) {
        row += ',';
        row += detail::format_double(v);
    }
    row += '\n';
    return row;
}

inline std::string metrics_csv(const std::vector<SweepRow>& rows) {
    std::string out = metrics_csv_header();
    for (const SweepRow& r : rows) {
        out += metrics_csv_row(r.seed, r.alpha, r.beta, r.metrics);
    }
    return out;
}

}  // namespace bevradar
