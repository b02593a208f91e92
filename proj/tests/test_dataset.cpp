#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "soil/common.hpp"
#include "soil/dataset.hpp"

using namespace soil;
using namespace soil::data;

namespace {

geom::Polygon square(double x0, double y0, double x1, double y1, geom::SoilClass cls) {
    geom::Polygon p;
    p.soiling_class = cls;
    p.vertices = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    return p;
}

FrameRecord record_with(const std::string& id, Category cat, Camera cam = Camera::Front) {
    FrameRecord rec;
    rec.frame_id = id;
    rec.camera = cam;
    rec.width = 64;
    rec.height = 64;
    rec.image_path = "images/" + id + ".ppm";
    SoilingClassVector v = vector_of(cat);
    if (v.opaque) rec.polygons.push_back(square(2, 2, 20, 20, geom::SoilClass::Opaque));
    if (v.transparent) rec.polygons.push_back(square(30, 30, 50, 50, geom::SoilClass::Transparent));
    return rec;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("category mapping is the four-way split") {
    CHECK(category_of({0, 0}) == Category::Clean);
    CHECK(category_of({0, 1}) == Category::Transparent);
    CHECK(category_of({1, 0}) == Category::Opaque);
    CHECK(category_of({1, 1}) == Category::Both);
    for (int c = 0; c < 4; ++c) {
        CHECK(category_of(vector_of(Category(c))) == Category(c));
    }
}

TEST_CASE("image_level_label presence semantics") {
    CHECK(image_level_label(record_with("a", Category::Clean)) == SoilingClassVector{0, 0});
    CHECK(image_level_label(record_with("b", Category::Both)) == SoilingClassVector{1, 1});

    // presence, not count
    FrameRecord two_opaque = record_with("c", Category::Opaque);
    two_opaque.polygons.push_back(square(30, 2, 50, 20, geom::SoilClass::Opaque));
    CHECK(image_level_label(two_opaque) == SoilingClassVector{1, 0});

    // min_area_frac filters small polygons
    FrameRecord tiny = record_with("d", Category::Clean);
    tiny.polygons.push_back(square(1, 1, 3, 3, geom::SoilClass::Opaque));  // 4 px^2 of 4096
    CHECK(image_level_label(tiny, 0.0) == SoilingClassVector{1, 0});
    CHECK(image_level_label(tiny, 0.01) == SoilingClassVector{0, 0});
}

TEST_CASE("subsample_frames keeps every stride-th frame") {
    std::vector<std::string> ids;
    for (int i = 0; i < 25; ++i) ids.push_back("f" + std::to_string(i));

    auto kept = subsample_frames(ids, 10);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0] == "f0");
    CHECK(kept[1] == "f10");
    CHECK(kept[2] == "f20");

    CHECK(subsample_frames(ids, 1) == ids);
    CHECK(subsample_frames({}, 10).empty());
    CHECK_THROWS_AS(subsample_frames(ids, 0), ConfigError);
}

TEST_CASE("largest remainder apportionment") {
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
    CHECK(apportion_largest_remainder(10, ratios) == std::array<int, 3>{6, 2, 2});
    CHECK(apportion_largest_remainder(5, ratios) == std::array<int, 3>{3, 1, 1});
    CHECK(apportion_largest_remainder(0, ratios) == std::array<int, 3>{0, 0, 0});
    // 7 -> floors (4,1,1), remainder goes to the earlier tied split
    CHECK(apportion_largest_remainder(7, ratios) == std::array<int, 3>{4, 2, 1});

    auto sizes = apportion_largest_remainder(501, ratios);
    CHECK(sizes[0] + sizes[1] + sizes[2] == 501);

    CHECK_THROWS_AS(apportion_largest_remainder(10, {0.5, 0.2, 0.2}), ConfigError);
}

TEST_CASE("stratified_split") {
    std::array<double, 3> ratios{0.6, 0.2, 0.2};

    SUBCASE("ten clean records split 6/2/2") {
        DatasetManifest m;
        for (int i = 0; i < 10; ++i) m.records.push_back(record_with("f" + std::to_string(i), Category::Clean));
        auto assign = stratified_split(m, ratios, 1);
        std::array<int, 3> counts{};
        for (auto& [_, s] : assign) counts[size_t(s)]++;
        CHECK(counts == std::array<int, 3>{6, 2, 2});
    }

    SUBCASE("two strata of five each split 3/1/1") {
        DatasetManifest m;
        for (int i = 0; i < 5; ++i) m.records.push_back(record_with("c" + std::to_string(i), Category::Clean));
        for (int i = 0; i < 5; ++i) m.records.push_back(record_with("o" + std::to_string(i), Category::Opaque));
        auto assign = stratified_split(m, ratios, 9);
        std::array<std::array<int, 3>, 2> counts{};
        for (auto& [id, s] : assign) counts[id[0] == 'c' ? 0 : 1][size_t(s)]++;
        CHECK(counts[0] == std::array<int, 3>{3, 1, 1});
        CHECK(counts[1] == std::array<int, 3>{3, 1, 1});
    }

    SUBCASE("deterministic per seed, different across seeds") {
        DatasetManifest m;
        for (int i = 0; i < 40; ++i) {
            m.records.push_back(record_with("f" + std::to_string(i), Category(i % 4)));
        }
        auto a1 = stratified_split(m, ratios, 42);
        auto a2 = stratified_split(m, ratios, 42);
        CHECK(a1 == a2);
        auto b = stratified_split(m, ratios, 43);
        CHECK(a1 != b);
    }

    SUBCASE("partition: every record assigned exactly once") {
        DatasetManifest m;
        for (int i = 0; i < 23; ++i) {
            m.records.push_back(record_with("f" + std::to_string(i), Category(i % 3)));
        }
        auto assign = stratified_split(m, ratios, 3);
        CHECK(assign.size() == m.records.size());
        for (const auto& rec : m.records) CHECK(assign.count(rec.frame_id) == 1);
    }

    SUBCASE("stratification bound |count/total - ratio| < 1/total") {
        DatasetManifest m;
        std::array<int, 4> quotas{37, 23, 11, 7};
        int idx = 0;
        for (int c = 0; c < 4; ++c) {
            for (int k = 0; k < quotas[size_t(c)]; ++k) {
                m.records.push_back(record_with("f" + std::to_string(idx++), Category(c)));
            }
        }
        m.split_assignment = stratified_split(m, ratios, 11);
        for (int s = 0; s < 3; ++s) {
            auto stats = category_stats(m, Split(s));
            for (int c = 0; c < 4; ++c) {
                double frac = double(stats[size_t(c)]) / quotas[size_t(c)];
                CHECK(std::abs(frac - ratios[size_t(s)]) < 1.0 / quotas[size_t(c)]);
            }
        }
    }

    SUBCASE("augmented records always land in train") {
        DatasetManifest m;
        for (int i = 0; i < 8; ++i) m.records.push_back(record_with("f" + std::to_string(i), Category::Clean));
        FrameRecord aug = record_with("aug0", Category::Clean);
        aug.augmented = true;
        aug.augmented_label = {1, 0};
        m.records.push_back(aug);
        for (uint64_t seed = 0; seed < 20; ++seed) {
            auto assign = stratified_split(m, ratios, seed);
            CHECK(assign.at("aug0") == Split::Train);
        }
    }

    SUBCASE("empty manifest rejected") {
        DatasetManifest m;
        CHECK_THROWS_AS(stratified_split(m, ratios, 1), DataError);
    }
}

TEST_CASE("category_stats") {
    DatasetManifest m;
    std::array<int, 4> quotas{4, 3, 2, 1};
    int idx = 0;
    for (int c = 0; c < 4; ++c) {
        for (int k = 0; k < quotas[size_t(c)]; ++k) {
            m.records.push_back(record_with("f" + std::to_string(idx), Category(c)));
            m.split_assignment["f" + std::to_string(idx)] = Split::Train;
            ++idx;
        }
    }

    auto stats = category_stats(m, Split::Train);
    CHECK(stats == std::array<int64_t, 4>{4, 3, 2, 1});
    CHECK(stats[0] + stats[1] + stats[2] + stats[3] == int64_t(m.records.size()));

    // empty split -> all zeros
    auto val_stats = category_stats(m, Split::Val);
    CHECK(val_stats == std::array<int64_t, 4>{0, 0, 0, 0});

    CHECK_THROWS_AS(split_from_string("validation"), ConfigError);
    CHECK(split_from_string("val") == Split::Val);
}

TEST_CASE("manifest round trip") {
    DatasetManifest m;
    m.records.push_back(record_with("f0", Category::Clean, Camera::Front));
    m.records.push_back(record_with("f1", Category::Both, Camera::Left));
    FrameRecord aug = record_with("f2", Category::Clean, Camera::Rear);
    aug.augmented = true;
    aug.augmented_label = {1, 0};
    m.records.push_back(aug);
    m.split_assignment["f0"] = Split::Train;
    m.split_assignment["f1"] = Split::Test;

    std::string path = temp_path("soil_manifest_rt.jsonl");
    save_manifest(m, path);
    DatasetManifest loaded = load_manifest(path);

    REQUIRE(loaded.records.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        const auto& a = m.records[i];
        const auto& b = loaded.records[i];
        CHECK(a.frame_id == b.frame_id);
        CHECK(a.camera == b.camera);
        CHECK(a.width == b.width);
        CHECK(a.height == b.height);
        CHECK(a.image_path == b.image_path);
        REQUIRE(a.polygons.size() == b.polygons.size());
        for (size_t k = 0; k < a.polygons.size(); ++k) {
            CHECK(a.polygons[k].soiling_class == b.polygons[k].soiling_class);
            REQUIRE(a.polygons[k].vertices.size() == b.polygons[k].vertices.size());
            for (size_t v = 0; v < a.polygons[k].vertices.size(); ++v) {
                CHECK(a.polygons[k].vertices[v].x == b.polygons[k].vertices[v].x);
                CHECK(a.polygons[k].vertices[v].y == b.polygons[k].vertices[v].y);
            }
        }
        CHECK(a.augmented == b.augmented);
        CHECK(a.augmented_label == b.augmented_label);
    }
    CHECK(loaded.split_assignment == m.split_assignment);
    std::remove(path.c_str());
}

TEST_CASE("manifest rejects malformed input") {
    std::string path = temp_path("soil_manifest_bad.jsonl");

    auto write_and_expect_error = [&](const std::string& line, const std::string& needle) {
        std::ofstream out(path);
        out << line << "\n";
        out.close();
        try {
            load_manifest(path);
            FAIL_CHECK("expected DataError for: " << line);
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    // two-vertex polygon
    write_and_expect_error(
        R"({"frame_id":"x1","camera":"front","width":64,"height":64,"image":"a.ppm",)"
        R"("polygons":[{"class":"opaque","points":[[0,0],[1,1]]}]})",
        "x1");

    // unknown camera token
    write_and_expect_error(
        R"({"frame_id":"x2","camera":"top","width":64,"height":64,"image":"a.ppm","polygons":[]})",
        "camera");

    // unknown field (strict mode)
    write_and_expect_error(
        R"({"frame_id":"x3","camera":"front","width":64,"height":64,"image":"a.ppm",)"
        R"("polygons":[],"extra":1})",
        "unknown field");

    // malformed line reports the line number
    write_and_expect_error("{not json", "line 1");

    // duplicate frame_id
    {
        std::ofstream out(path);
        std::string rec =
            R"({"frame_id":"dup","camera":"front","width":64,"height":64,"image":"a.ppm","polygons":[]})";
        out << rec << "\n" << rec << "\n";
        out.close();
        try {
            load_manifest(path);
            FAIL_CHECK("expected duplicate frame_id error");
        } catch (const DataError& e) {
            std::string msg = e.what();
            CHECK(msg.find("duplicate") != std::string::npos);
            CHECK(msg.find("line 2") != std::string::npos);
        }
    }
    std::remove(path.c_str());
}
