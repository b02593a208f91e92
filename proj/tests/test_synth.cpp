#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "soil/common.hpp"
#include "soil/dataset.hpp"
#include "soil/geometry.hpp"
#include "soil/rng.hpp"
#include "soil/synth.hpp"

using namespace soil;
using namespace soil::synth;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

// Bytes of every regular file under a directory, in sorted path order.
std::vector<std::pair<std::string, std::string>> dir_contents(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        entries.emplace_back(fs::relative(e.path(), dir).string(), std::move(bytes));
    }
    std::sort(entries.begin(), entries.end());
    return entries;
}

}  // namespace

TEST_CASE("clean scene generation is deterministic") {
    io::Image a = generate_clean_scene(123, 64, 40);
    io::Image b = generate_clean_scene(123, 64, 40);
    CHECK(a == b);

    // different seeds differ in at least one pixel
    int differing_pairs = 0;
    for (uint64_t s = 0; s < 100; ++s) {
        io::Image x = generate_clean_scene(s, 24, 24);
        io::Image y = generate_clean_scene(s + 1000, 24, 24);
        if (!(x == y)) ++differing_pairs;
    }
    CHECK(differing_pairs == 100);

    io::Image tiny = generate_clean_scene(7, 16, 16);
    CHECK(tiny.width == 16);
    CHECK(tiny.height == 16);
    CHECK_THROWS_AS(generate_clean_scene(7, 8, 8), ConfigError);
}

TEST_CASE("camera styles change the palette") {
    io::Image front = generate_clean_scene(5, 32, 32, 0);
    io::Image left = generate_clean_scene(5, 32, 32, 2);
    CHECK_FALSE(front == left);
}

TEST_CASE("opaque soiling") {
    io::Image img = generate_clean_scene(9, 64, 48);

    SUBCASE("zero blobs leaves the image unchanged") {
        BlobParams none{0, 0, 0.2, 0.3};
        auto [out, polys] = apply_opaque_soiling(img, 4, none);
        CHECK(out == img);
        CHECK(polys.empty());
    }

    SUBCASE("pixels outside polygons unchanged, inside input-independent") {
        BlobParams params{2, 3, 0.15, 0.3};
        auto [out, polys] = apply_opaque_soiling(img, 4, params);
        REQUIRE(!polys.empty());
        for (const auto& poly : polys) {
            CHECK_FALSE(geom::polygon_validation_error(poly, img.width, img.height).has_value());
            CHECK(poly.soiling_class == geom::SoilClass::Opaque);
        }

        io::Image other = generate_clean_scene(1234, 64, 48);
        auto [out2, polys2] = apply_opaque_soiling(other, 4, params);
        REQUIRE(polys2.size() == polys.size());

        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                bool inside = geom::point_in_region({x + 0.5, y + 0.5}, polys);
                for (int c = 0; c < 3; ++c) {
                    if (inside) {
                        // painted value does not depend on the input image
                        CHECK(out.at(x, y, c) == out2.at(x, y, c));
                    } else {
                        CHECK(out.at(x, y, c) == img.at(x, y, c));
                    }
                }
            }
        }
    }
}

TEST_CASE("transparent soiling") {
    SUBCASE("constant-color input is a fixed point") {
        io::Image flat(32, 32);
        for (size_t i = 0; i < flat.data.size(); i += 3) {
            flat.data[i] = 180;
            flat.data[i + 1] = 40;
            flat.data[i + 2] = 90;
        }
        BlobParams params{1, 2, 0.2, 0.4};
        auto [out, polys] = apply_transparent_soiling(flat, 11, params, 3);
        CHECK(out == flat);
        CHECK(!polys.empty());
    }

    SUBCASE("textured input changes inside the region") {
        io::Image img = generate_clean_scene(21, 64, 48);
        BlobParams params{1, 1, 0.25, 0.4};
        auto [out, polys] = apply_transparent_soiling(img, 13, params, 3);
        REQUIRE(polys.size() == 1);

        int64_t delta_sum = 0, inside_px = 0;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                bool inside = geom::point_in_region({x + 0.5, y + 0.5}, polys);
                for (int c = 0; c < 3; ++c) {
                    int d = std::abs(int(out.at(x, y, c)) - int(img.at(x, y, c)));
                    if (inside) {
                        delta_sum += d;
                        ++inside_px;
                    } else {
                        CHECK(d == 0);
                    }
                }
            }
        }
        REQUIRE(inside_px > 0);
        CHECK(delta_sum > 0);
    }

    SUBCASE("blurred content still correlates with the original") {
        io::Image img = generate_clean_scene(33, 64, 48);
        BlobParams params{1, 1, 0.3, 0.4};
        auto [out, polys] = apply_transparent_soiling(img, 17, params, 4);

        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        int64_t n = 0;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                if (!geom::point_in_region({x + 0.5, y + 0.5}, polys)) continue;
                for (int c = 0; c < 3; ++c) {
                    double a = img.at(x, y, c), b = out.at(x, y, c);
                    sx += a; sy += b; sxx += a * a; syy += b * b; sxy += a * b;
                    ++n;
                }
            }
        }
        REQUIRE(n > 100);
        double cov = sxy / n - (sx / n) * (sy / n);
        double var_a = sxx / n - (sx / n) * (sx / n);
        double var_b = syy / n - (sy / n) * (sy / n);
        double corr = cov / std::sqrt(var_a * var_b);
        CHECK(corr > 0.5);
    }

    SUBCASE("blur radius 0 rejected") {
        io::Image img(16, 16);
        BlobParams params{1, 1, 0.2, 0.3};
        CHECK_THROWS_AS(apply_transparent_soiling(img, 1, params, 0), ConfigError);
        SynthConfig cfg;
        cfg.blur_radius = 0;
        cfg.n_frames = 0;
        cfg.category_quotas = {0, 0, 0, 0};
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("build_synthetic_dataset") {
    SynthConfig cfg;
    cfg.seed = 99;
    cfg.width = 64;
    cfg.height = 48;
    cfg.n_frames = 5;
    cfg.category_quotas = {2, 1, 1, 1};

    SUBCASE("category stats match the quotas") {
        fs::path dir = temp_dir("soil_synth_quota");
        data::DatasetManifest m = build_synthetic_dataset(cfg, dir.string());
        auto stats = data::category_stats_all(m);
        CHECK(stats[0] == 2);
        CHECK(stats[1] == 1);
        CHECK(stats[2] == 1);
        CHECK(stats[3] == 1);
        CHECK(fs::exists(dir / "manifest.jsonl"));
        CHECK(fs::exists(dir / "boxes.csv"));

        // manifest reload agrees with the in-memory result
        data::DatasetManifest loaded = data::load_manifest((dir / "manifest.jsonl").string());
        CHECK(loaded.records.size() == m.records.size());
        fs::remove_all(dir);
    }

    SUBCASE("same config twice gives a byte-identical tree") {
        fs::path d1 = temp_dir("soil_synth_rep1");
        fs::path d2 = temp_dir("soil_synth_rep2");
        build_synthetic_dataset(cfg, d1.string());
        build_synthetic_dataset(cfg, d2.string());
        CHECK(dir_contents(d1) == dir_contents(d2));
        fs::remove_all(d1);
        fs::remove_all(d2);
    }

    SUBCASE("zero frames -> empty manifest, no images") {
        SynthConfig empty = cfg;
        empty.n_frames = 0;
        empty.category_quotas = {0, 0, 0, 0};
        fs::path dir = temp_dir("soil_synth_empty");
        data::DatasetManifest m = build_synthetic_dataset(empty, dir.string());
        CHECK(m.records.empty());
        CHECK(fs::is_empty(dir / "images"));
        fs::remove_all(dir);
    }

    SUBCASE("quota mismatch rejected") {
        SynthConfig bad = cfg;
        bad.n_frames = 7;
        CHECK_THROWS_AS(build_synthetic_dataset(bad, temp_dir("soil_synth_bad").string()),
                        ConfigError);
    }
}

TEST_CASE("ground truth faithfulness: coverage marks exactly the painted tiles") {
    // With samples_per_side == tile_size the coverage samples coincide with
    // pixel centers, so tile coverage > 0 iff the tile holds a painted pixel.
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.width = 64;
    cfg.height = 48;
    cfg.n_frames = 6;
    cfg.category_quotas = {0, 2, 2, 2};
    fs::path dir = temp_dir("soil_synth_faithful");
    data::DatasetManifest m = build_synthetic_dataset(cfg, dir.string());

    const int tile = 8;
    geom::TileSpec spec{cfg.width, cfg.height, tile};
    for (const auto& rec : m.records) {
        io::Image clean = generate_clean_scene(0, cfg.width, cfg.height);  // unused pixels
        io::Image img = io::load_ppm((dir / rec.image_path).string());
        (void)clean;
        geom::CoverageGrid cov = geom::rasterize_to_grid(rec.polygons, spec, tile);
        for (int cls = 0; cls < 2; ++cls) {
            std::vector<geom::Polygon> class_polys;
            for (const auto& p : rec.polygons) {
                if (p.soiling_class == geom::SoilClass(cls)) class_polys.push_back(p);
            }
            for (int ty = 0; ty < spec.grid_h(); ++ty) {
                for (int tx = 0; tx < spec.grid_w(); ++tx) {
                    bool painted = false;
                    for (int y = ty * tile; y < std::min((ty + 1) * tile, cfg.height) && !painted; ++y) {
                        for (int x = tx * tile; x < std::min((tx + 1) * tile, cfg.width) && !painted; ++x) {
                            painted = geom::point_in_region({x + 0.5, y + 0.5}, class_polys);
                        }
                    }
                    bool covered = cov.at(ty, tx, geom::SoilClass(cls)) > 0.0;
                    CHECK(covered == painted);
                }
            }
        }
        CHECK(img.width == cfg.width);
    }
    fs::remove_all(dir);
}

TEST_CASE("image-level label equals OR over tiles at tau->0+") {
    SynthConfig cfg;
    cfg.seed = 15;
    cfg.width = 64;
    cfg.height = 48;
    cfg.n_frames = 8;
    cfg.category_quotas = {2, 2, 2, 2};
    fs::path dir = temp_dir("soil_synth_consistency");
    data::DatasetManifest m = build_synthetic_dataset(cfg, dir.string());

    geom::TileSpec spec{cfg.width, cfg.height, 8};
    for (const auto& rec : m.records) {
        data::SoilingClassVector label = data::image_level_label(rec);
        geom::TileGrid grid = geom::threshold_grid(geom::rasterize_to_grid(rec.polygons, spec), 0.0);
        data::SoilingClassVector from_tiles;
        for (int ty = 0; ty < grid.gh; ++ty) {
            for (int tx = 0; tx < grid.gw; ++tx) {
                from_tiles.opaque |= grid.at(ty, tx, geom::SoilClass::Opaque);
                from_tiles.transparent |= grid.at(ty, tx, geom::SoilClass::Transparent);
            }
        }
        CHECK(label == from_tiles);
    }
    fs::remove_all(dir);
}

TEST_CASE("ppm round trip is lossless") {
    io::Image img = generate_clean_scene(3, 40, 30);
    std::string path = (fs::temp_directory_path() / "soil_rt.ppm").string();
    io::save_ppm(img, path);
    io::Image loaded = io::load_ppm(path);
    CHECK(loaded == img);
    fs::remove(path);

    io::Mask mask(13, 9);
    for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = uint8_t(i % 3);
    std::string mpath = (fs::temp_directory_path() / "soil_rt.pgm").string();
    io::save_pgm(mask, mpath);
    CHECK(io::load_pgm(mpath) == mask);
    fs::remove(mpath);
}
