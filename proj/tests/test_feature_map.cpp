#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <sstream>

#include "bevradar/association.hpp"
#include "bevradar/feature_map.hpp"
#include "oracles.hpp"

using namespace bevradar;

namespace {

PriorBox label_box(double cx, double cy, double w, double l, double score) {
    PriorBox p;
    p.class_id = ObjectClass::kCar;
    p.center = {cx, cy};
    p.width = w;
    p.length = l;
    p.score = score;
    return p;
}

RadarPoint point_at(double x, double y, Vec2 v = {0, 0}) {
    RadarPoint p;
    p.position = {x, y, 0};
    p.v_comp = v;
    return p;
}

RadarFeatureMap random_map(oracle::TestRng& rng, const GridSpec& g) {
    RadarFeatureMap m = RadarFeatureMap::zeros(g);
    for (int i = 0; i < 200; ++i) {
        const int r = rng.uniform_int(g.cells_per_side);
        const int c = rng.uniform_int(g.cells_per_side);
        m.at(kChX, r, c) = static_cast<float>(rng.uniform(-50, 50));
        m.at(kChY, r, c) = static_cast<float>(rng.uniform(-50, 50));
        m.at(kChVx, r, c) = static_cast<float>(rng.uniform(-30, 30));
        m.at(kChVy, r, c) = static_cast<float>(rng.uniform(-30, 30));
        m.at(kChOccupancy, r, c) = 1.0f;
    }
    return m;
}

}  // namespace

TEST_CASE("rasterize fills exactly the cells covered by the matched box",
          "[feature_map]") {
    const GridSpec g;
    const std::vector<PriorBox> labels = {label_box(10, -4, 2, 4, 0.9)};
    SweepBundle bundle;
    bundle.points.push_back(point_at(10.0, -4.0, {1.2, 0.1}));
    MatchConfig cfg;
    cfg.beta = 0.05;

    const Association assoc = associate_labels(bundle, labels, cfg, g);
    REQUIRE(assoc.pairs.size() == 1);
    const RadarFeatureMap map = rasterize(assoc, bundle, g);

    // Radar box [9.5,10.5] x [-4.5,-3.5] on the 0.4 m default grid covers
    // rows {152,153} x cols {117,118}: centers 9.8/10.2 and -4.2/-3.8.
    const std::set<std::pair<int, int>> expected = {
        {152, 117}, {152, 118}, {153, 117}, {153, 118}};
    int occupied = 0;
    for (int r = 0; r < g.cells_per_side; ++r) {
        for (int c = 0; c < g.cells_per_side; ++c) {
            if (map.at(kChOccupancy, r, c) != 0.0f) {
                ++occupied;
                REQUIRE(expected.count({r, c}) == 1);
                CHECK(map.at(kChX, r, c) == 10.0f);
                CHECK(map.at(kChY, r, c) == -4.0f);
                CHECK(map.at(kChVx, r, c) == 1.2f);
                CHECK(map.at(kChVy, r, c) == 0.1f);
            } else {
                for (int ch = 0; ch < 5; ++ch) REQUIRE(map.at(ch, r, c) == 0.0f);
            }
        }
    }
    CHECK(occupied == 4);
}

TEST_CASE("rasterize of an empty association is all zeros", "[feature_map]") {
    const GridSpec g{10.0, 32};
    Association assoc;
    assoc.grid = g;
    SweepBundle bundle;
    const RadarFeatureMap map = rasterize(assoc, bundle, g);
    CHECK(std::all_of(map.data.begin(), map.data.end(),
                      [](float v) { return v == 0.0f; }));
}

TEST_CASE("rasterize rejects a mismatched grid", "[feature_map]") {
    Association assoc;
    assoc.grid = GridSpec{51.2, 256};
    SweepBundle bundle;
    CHECK_THROWS_AS(rasterize(assoc, bundle, GridSpec{51.2, 128}), GridMismatch);
}

TEST_CASE("occupancy counts covered cells exactly once", "[feature_map]") {
    oracle::TestRng rng(24);
    const GridSpec g;
    MatchConfig cfg;
    cfg.beta = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double cx = rng.uniform(-30, 30);
        const double cy = rng.uniform(-30, 30);
        const std::vector<PriorBox> labels = {label_box(cx, cy, 3, 8, 0.9)};
        SweepBundle bundle;
        const int n = 1 + rng.uniform_int(8);
        for (int i = 0; i < n; ++i) {
            bundle.points.push_back(point_at(cx + rng.uniform(-1.2, 1.2),
                                             cy + rng.uniform(-3.5, 3.5),
                                             {rng.uniform(-5, 5), rng.uniform(-5, 5)}));
        }
        cfg.alpha = rng.uniform(0.5, 2.0);
        const Association assoc = associate_labels(bundle, labels, cfg, g);
        const RadarFeatureMap map = rasterize(assoc, bundle, g);

        std::size_t expected = 0;
        for (const auto& pair : assoc.pairs) {
            expected += oracle::ref_covered_cells(pair.radar_box, g).size();
        }
        std::size_t occupied = 0;
        for (int r = 0; r < g.cells_per_side; ++r) {
            for (int c = 0; c < g.cells_per_side; ++c) {
                occupied += map.at(kChOccupancy, r, c) != 0.0f;
            }
        }
        REQUIRE(occupied == expected);
    }
}

TEST_CASE("rasterize is invariant under pair order", "[feature_map]") {
    oracle::TestRng rng(25);
    const GridSpec g;
    const std::vector<PriorBox> labels = {label_box(0, 0, 3, 8, 0.9)};
    SweepBundle bundle;
    for (int i = 0; i < 6; ++i) {
        bundle.points.push_back(point_at(rng.uniform(-1, 1), rng.uniform(-3, 3),
                                         {rng.uniform(-5, 5), rng.uniform(-5, 5)}));
    }
    MatchConfig cfg;
    cfg.beta = 0.0;
    Association assoc = associate_labels(bundle, labels, cfg, g);
    const RadarFeatureMap base = rasterize(assoc, bundle, g);
    std::mt19937_64 shuffler(3);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(assoc.pairs.begin(), assoc.pairs.end(), shuffler);
        REQUIRE(rasterize(assoc, bundle, g) == base);
    }
}

TEST_CASE("concat descriptor appends the radar planes", "[feature_map]") {
    const GridSpec g;
    const RadarFeatureMap map = RadarFeatureMap::zeros(g);
    CHECK(concat_descriptor(128, g, map).total_channels() == 133);
    CHECK(concat_descriptor(80, g, map).total_channels() == 85);
    CHECK(concat_descriptor(128, g, map).radar_channels == 5);
    CHECK_THROWS_AS(concat_descriptor(128, GridSpec{51.2, 128}, map), GridMismatch);
    CHECK_THROWS_AS(concat_descriptor(0, g, map), ConfigError);
}

TEST_CASE("feature map serialization round trips bit-exactly", "[feature_map]") {
    oracle::TestRng rng(26);
    for (const GridSpec& g : {GridSpec{51.2, 256}, GridSpec{10.0, 32}}) {
        for (int i = 0; i < 5; ++i) {
            const RadarFeatureMap map = random_map(rng, g);
            std::stringstream buf;
            write_feature_map(map, buf);
            const RadarFeatureMap back = read_feature_map(buf);
            REQUIRE(back == map);
        }
    }
}

TEST_CASE("feature map reader rejects malformed files", "[feature_map]") {
    const GridSpec g{10.0, 16};
    const RadarFeatureMap map = RadarFeatureMap::zeros(g);
    std::stringstream buf;
    write_feature_map(map, buf);
    const std::string good = buf.str();

    {
        std::string bad = good;
        bad[0] = 'X';
        std::stringstream in(bad);
        CHECK_THROWS_AS(read_feature_map(in), FormatError);
    }
    {
        std::string bad = good;
        bad[4] = 9;  // version
        std::stringstream in(bad);
        CHECK_THROWS_AS(read_feature_map(in), FormatError);
    }
    {
        std::stringstream in(good.substr(0, good.size() / 2));
        CHECK_THROWS_AS(read_feature_map(in), TruncatedFile);
    }
    {
        std::stringstream in(good.substr(0, 2));
        CHECK_THROWS_AS(read_feature_map(in), TruncatedFile);
    }
}
