#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bevradar/association.hpp"
#include "bevradar/errors.hpp"
#include "bevradar/geometry.hpp"
#include "bevradar/priors.hpp"
#include "bevradar/synth.hpp"

namespace bevradar {

/// Everything a fuse run needs. Defaults are the production constants:
/// 51.2 m effective depth, 256x256 grid, 1 m radar box edge, three sweeps,
/// pedestrians and traffic cones excluded.
struct RunConfig {
    GridSpec grid;
    MatchConfig match;
    ClassPolicy policy = ClassPolicy::defaults();
    int sweeps = 3;
    std::vector<std::string> radar_paths;
    std::string priors_path;
    std::string poses_path;
    std::string out_path;
    std::string report_path;
};

inline void validate_run_config(const RunConfig& cfg) {
    validate_grid(cfg.grid);
    validate_match_config(cfg.match);
    if (cfg.sweeps < 1 || cfg.sweeps > 3) {
        throw ConfigError("sweeps must lie in [1, 3]");
    }
}

// Flat key-value config format: one `key = value` per line, `#` starts a
// comment. Keys are dotted (grid.half_range, match.alpha, policy.car,
// io.radar, ...). CLI flags override file values.

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::pair<std::string, std::string>> parse_kv_lines(
    std::string_view text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (!line.empty()) {
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  " is not of the form key = value");
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty()) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  " has an empty key");
            }
            entries.emplace_back(key, value);
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return entries;
}

inline double parse_double_value(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("value of '" + key + "' is not a number: '" + value + "'");
    }
    return out;
}

inline long long parse_int_value(const std::string& key, const std::string& value) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("value of '" + key + "' is not an integer: '" + value + "'");
    }
    return out;
}

inline bool parse_bool_value(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("value of '" + key + "' is not a boolean: '" + value + "'");
}

inline std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const std::size_t comma = value.find(',', pos);
        const std::string_view item = trim(value.substr(
            pos, comma == std::string_view::npos ? value.size() - pos : comma - pos));
        if (!item.empty()) items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return items;
}

}  // namespace detail

inline void apply_run_config_entry(RunConfig& cfg, const std::string& key,
                                   const std::string& value) {
    if (key == "grid.half_range") {
        cfg.grid.half_range = detail::parse_double_value(key, value);
    } else if (key == "grid.cells_per_side") {
        cfg.grid.cells_per_side = static_cast<int>(detail::parse_int_value(key, value));
    } else if (key == "match.alpha") {
        cfg.match.alpha = detail::parse_double_value(key, value);
    } else if (key == "match.beta") {
        cfg.match.beta = detail::parse_double_value(key, value);
    } else if (key == "match.radar_box_edge") {
        cfg.match.radar_box_edge = detail::parse_double_value(key, value);
    } else if (key == "sweeps") {
        cfg.sweeps = static_cast<int>(detail::parse_int_value(key, value));
    } else if (key.starts_with("policy.")) {
        const auto cls = class_from_name(key.substr(7));
        if (!cls) throw ConfigError("unknown class in config key '" + key + "'");
        cfg.policy.fusion_enabled[static_cast<int>(*cls)] =
            detail::parse_bool_value(key, value);
    } else if (key == "io.radar") {
        cfg.radar_paths = detail::split_list(value);
    } else if (key == "io.priors") {
        cfg.priors_path = value;
    } else if (key == "io.poses") {
        cfg.poses_path = value;
    } else if (key == "io.out") {
        cfg.out_path = value;
    } else if (key == "io.report") {
        cfg.report_path = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

inline RunConfig load_run_config(std::string_view text) {
    RunConfig cfg;
    for (const auto& [key, value] : detail::parse_kv_lines(text)) {
        apply_run_config_entry(cfg, key, value);
    }
    validate_run_config(cfg);
    return cfg;
}

/// Scene spec files reuse the key-value syntax with scene.* and grid.* keys.
inline SceneSpec load_scene_spec(std::string_view text) {
    SceneSpec spec;
    for (const auto& [key, value] : detail::parse_kv_lines(text)) {
        if (key == "scene.seed") {
            spec.rng_seed = static_cast<std::uint64_t>(detail::parse_int_value(key, value));
        } else if (key == "scene.n_objects") {
            spec.n_objects = static_cast<int>(detail::parse_int_value(key, value));
        } else if (key == "scene.points_per_object") {
            spec.points_per_object = static_cast<int>(detail::parse_int_value(key, value));
        } else if (key == "scene.clutter_points") {
            spec.clutter_points = static_cast<int>(detail::parse_int_value(key, value));
        } else if (key == "scene.position_noise_sigma") {
            spec.position_noise_sigma = detail::parse_double_value(key, value);
        } else if (key == "scene.radar_velocity_noise_sigma") {
            spec.radar_velocity_noise_sigma = detail::parse_double_value(key, value);
        } else if (key == "scene.prior_velocity_noise_sigma") {
            spec.prior_velocity_noise_sigma = detail::parse_double_value(key, value);
        } else if (key == "scene.footprint_margin") {
            spec.footprint_margin = detail::parse_double_value(key, value);
        } else if (key == "scene.interior_margin") {
            spec.interior_margin = detail::parse_double_value(key, value);
        } else if (key == "scene.min_point_separation") {
            spec.min_point_separation = detail::parse_double_value(key, value);
        } else if (key == "scene.max_object_speed") {
            spec.max_object_speed = detail::parse_double_value(key, value);
        } else if (key == "scene.n_sweeps") {
            spec.n_sweeps = static_cast<int>(detail::parse_int_value(key, value));
        } else if (key == "scene.ego_speed") {
            spec.ego_speed = detail::parse_double_value(key, value);
        } else if (key == "scene.sweep_dt") {
            spec.sweep_dt = detail::parse_double_value(key, value);
        } else if (key == "scene.structured_clutter") {
            spec.structured_clutter = detail::parse_bool_value(key, value);
        } else if (key == "scene.classes") {
            spec.classes.clear();
            for (const std::string& name : detail::split_list(value)) {
                const auto cls = class_from_name(name);
                if (!cls) throw ConfigError("unknown class '" + name + "' in scene.classes");
                spec.classes.push_back(*cls);
            }
        } else if (key == "scene.size_override") {
            const auto parts = detail::split_list(value);
            if (parts.size() != 4) {
                throw ConfigError(
                    "scene.size_override needs min_w,max_w,min_l,max_l");
            }
            spec.size_override = ClassSizeRange{
                detail::parse_double_value(key, parts[0]),
                detail::parse_double_value(key, parts[1]),
                detail::parse_double_value(key, parts[2]),
                detail::parse_double_value(key, parts[3])};
        } else if (key == "grid.half_range") {
            spec.grid.half_range = detail::parse_double_value(key, value);
        } else if (key == "grid.cells_per_side") {
            spec.grid.cells_per_side = static_cast<int>(detail::parse_int_value(key, value));
        } else {
            throw ConfigError("unknown scene spec key '" + key + "'");
        }
    }
    validate_scene_spec(spec);
    return spec;
}

}  // namespace bevradar
