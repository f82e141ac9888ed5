#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevradar/association.hpp"
#include "bevradar/errors.hpp"
#include "bevradar/geometry.hpp"
#include "bevradar/radar_points.hpp"

namespace bevradar {

inline constexpr std::array<std::string_view, 5> kRadarChannelNames = {
    "x", "y", "vx", "vy", "occupancy"};

enum RadarChannel : int { kChX = 0, kChY, kChVx, kChVy, kChOccupancy };

/// The radar BEV feature map: five channel planes over the grid. Occupancy is
/// 1 exactly on cells written by a matched box; everywhere else all channels
/// are 0, so a consumer can tell "velocity zero" from "no radar evidence".
struct RadarFeatureMap {
    GridSpec grid;
    std::vector<float> data;  // channel-major planes, row-major cells

    static RadarFeatureMap zeros(const GridSpec& g) {
        validate_grid(g);
        RadarFeatureMap m;
        m.grid = g;
        m.data.assign(kRadarChannelNames.size() * static_cast<std::size_t>(g.cells_per_side) *
                          g.cells_per_side,
                      0.0f);
        return m;
    }

    std::size_t cells() const {
        return static_cast<std::size_t>(grid.cells_per_side) * grid.cells_per_side;
    }
    std::size_t channels() const { return kRadarChannelNames.size(); }

    float& at(int channel, int row, int col) {
        return data[channel * cells() + static_cast<std::size_t>(row) * grid.cells_per_side + col];
    }
    float at(int channel, int row, int col) const {
        return data[channel * cells() + static_cast<std::size_t>(row) * grid.cells_per_side + col];
    }

    friend bool operator==(const RadarFeatureMap&, const RadarFeatureMap&) = default;
};

/// Fill every cell covered by each matched pair's clipped radar box with the
/// generating point's absolute coordinates, compensated velocity and an
/// occupancy mark. Clipped boxes are pairwise disjoint, so no cell is claimed
/// twice; should a contested cell ever arise, the pair with the higher IOU
/// (then the more recent sweep, then the lower point index) wins.
inline RadarFeatureMap rasterize(const Association& assoc, const SweepBundle& bundle,
                                 const GridSpec& g) {
    if (assoc.grid != g) {
        throw GridMismatch("association was computed on a different grid");
    }
    RadarFeatureMap map = RadarFeatureMap::zeros(g);
    std::vector<const MatchPair*> order;
    order.reserve(assoc.pairs.size());
    for (const MatchPair& pair : assoc.pairs) {
        if (pair.point_index >= bundle.points.size()) {
            throw std::invalid_argument("association refers to a point outside the bundle");
        }
        order.push_back(&pair);
    }
    std::sort(order.begin(), order.end(), [&](const MatchPair* a, const MatchPair* b) {
        if (a->score != b->score) return a->score > b->score;
        const int sa = bundle.points[a->point_index].sweep_offset;
        const int sb = bundle.points[b->point_index].sweep_offset;
        if (sa != sb) return sa < sb;
        return a->point_index < b->point_index;
    });
    for (const MatchPair* pair : order) {
        const RadarPoint& p = bundle.points[pair->point_index];
        for_each_covered_cell(pair->radar_box, g, [&](int r, int c) {
            if (map.at(kChOccupancy, r, c) != 0.0f) return;  // first writer wins
            map.at(kChX, r, c) = static_cast<float>(p.position.x);
            map.at(kChY, r, c) = static_cast<float>(p.position.y);
            map.at(kChVx, r, c) = static_cast<float>(p.v_comp.x);
            map.at(kChVy, r, c) = static_cast<float>(p.v_comp.y);
            map.at(kChOccupancy, r, c) = 1.0f;
        });
    }
    return map;
}

/// Layout contract for concatenating the radar planes onto a camera BEV
/// feature: camera planes first, radar planes appended, grids identical.
struct FusedFeatureDescriptor {
    int camera_channels = 0;
    int radar_channels = static_cast<int>(kRadarChannelNames.size());
    GridSpec grid;

    int total_channels() const { return camera_channels + radar_channels; }

    friend bool operator==(const FusedFeatureDescriptor&,
                           const FusedFeatureDescriptor&) = default;
};

inline FusedFeatureDescriptor concat_descriptor(int camera_channels,
                                                const GridSpec& camera_grid,
                                                const RadarFeatureMap& radar) {
    if (camera_channels <= 0) {
        throw ConfigError("camera channel count must be positive");
    }
    if (camera_grid != radar.grid) {
        throw GridMismatch("camera and radar grids differ");
    }
    return {camera_channels, static_cast<int>(radar.channels()), radar.grid};
}

// Binary feature-map format, little-endian throughout:
//   magic   "BEVR"
//   u16     version (currently 1)
//   u32     cells_per_side
//   f64     half_range
//   u16     channel_count
//   per channel: u16 name length, name bytes (UTF-8)
//   payload: channel_count * cells^2 f32 planes, channel-major, row-major

inline constexpr char kFeatureMapMagic[4] = {'B', 'E', 'V', 'R'};
inline constexpr std::uint16_t kFeatureMapVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_integral_v<T>);
    std::make_unsigned_t<T> u = static_cast<std::make_unsigned_t<T>>(value);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>(u & 0xff);
        u >>= 8;
    }
    out.write(bytes, sizeof(T));
}

inline void write_le_f64(std::ostream& out, double value) {
    write_le(out, std::bit_cast<std::uint64_t>(value));
}

template <typename T>
T read_le(std::istream& in) {
    static_assert(std::is_integral_v<T>);
    char bytes[sizeof(T)];
    if (!in.read(bytes, sizeof(T))) {
        throw TruncatedFile("feature-map file ended inside a field");
    }
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        u = static_cast<std::make_unsigned_t<T>>(u << 8) |
            static_cast<unsigned char>(bytes[i]);
    }
    return static_cast<T>(u);
}

inline double read_le_f64(std::istream& in) {
    return std::bit_cast<double>(read_le<std::uint64_t>(in));
}

}  // namespace detail

inline void write_feature_map(const RadarFeatureMap& map, std::ostream& out) {
    out.write(kFeatureMapMagic, 4);
    detail::write_le(out, kFeatureMapVersion);
    detail::write_le(out, static_cast<std::uint32_t>(map.grid.cells_per_side));
    detail::write_le_f64(out, map.grid.half_range);
    detail::write_le(out, static_cast<std::uint16_t>(map.channels()));
    for (std::string_view name : kRadarChannelNames) {
        detail::write_le(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    std::vector<char> payload(map.data.size() * 4);
    for (std::size_t i = 0; i < map.data.size(); ++i) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(map.data[i]);
        payload[4 * i + 0] = static_cast<char>(u & 0xff);
        payload[4 * i + 1] = static_cast<char>((u >> 8) & 0xff);
        payload[4 * i + 2] = static_cast<char>((u >> 16) & 0xff);
        payload[4 * i + 3] = static_cast<char>((u >> 24) & 0xff);
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error("failed writing feature map");
}

inline RadarFeatureMap read_feature_map(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4)) throw TruncatedFile("feature-map file shorter than its magic");
    if (std::memcmp(magic, kFeatureMapMagic, 4) != 0) {
        throw FormatError("bad feature-map magic");
    }
    const auto version = detail::read_le<std::uint16_t>(in);
    if (version != kFeatureMapVersion) {
        throw FormatError("unsupported feature-map version " + std::to_string(version));
    }
    GridSpec g;
    g.cells_per_side = static_cast<int>(detail::read_le<std::uint32_t>(in));
    g.half_range = detail::read_le_f64(in);
    validate_grid(g);
    const auto channel_count = detail::read_le<std::uint16_t>(in);
    if (channel_count != kRadarChannelNames.size()) {
        throw FormatError("unexpected channel count " + std::to_string(channel_count));
    }
    for (std::string_view expected : kRadarChannelNames) {
        const auto len = detail::read_le<std::uint16_t>(in);
        std::string name(len, '\0');
        if (len && !in.read(name.data(), len)) {
            throw TruncatedFile("feature-map file ended inside the channel table");
        }
        if (name != expected) {
            throw FormatError("unexpected channel name '" + name + "'");
        }
    }
    RadarFeatureMap map = RadarFeatureMap::zeros(g);
    std::vector<char> payload(map.data.size() * 4);
    if (!in.read(payload.data(), static_cast<std::streamsize>(payload.size()))) {
        throw TruncatedFile("feature-map payload shorter than the header declares");
    }
    for (std::size_t i = 0; i < map.data.size(); ++i) {
        const std::uint32_t u =
            static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + 0])) |
            static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + 1])) << 8 |
            static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + 2])) << 16 |
            static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + 3])) << 24;
        map.data[i] = std::bit_cast<float>(u);
    }
    return map;
}

}  // namespace bevradar
