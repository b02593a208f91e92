#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "soil/common.hpp"
#include "soil/geometry.hpp"
#include "soil/rng.hpp"

using namespace soil;
using namespace soil::geom;

namespace {

Polygon make_square(double x0, double y0, double x1, double y1,
                    SoilClass cls = SoilClass::Opaque) {
    Polygon p;
    p.soiling_class = cls;
    p.vertices = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    return p;
}

// Seeded star-shaped polygon, always simple. Mirrors the generator used by
// the synthetic dataset but kept local so geometry tests stand alone.
Polygon random_simple_polygon(Rng& rng, double width, double height,
                              SoilClass cls = SoilClass::Opaque) {
    double rx = rng.uniform(0.08, 0.35) * width / 2.0;
    double ry = rng.uniform(0.08, 0.35) * height / 2.0;
    double cx = rng.uniform(rx + 1, width - rx - 1);
    double cy = rng.uniform(ry + 1, height - ry - 1);
    int nv = rng.uniform_int(6, 14);
    Polygon poly;
    poly.soiling_class = cls;
    for (int i = 0; i < nv; ++i) {
        double theta = 2.0 * std::numbers::pi * (i + 0.4 * rng.next_double()) / nv;
        double f = rng.uniform(0.6, 1.0);
        poly.vertices.push_back({cx + rx * f * std::cos(theta), cy + ry * f * std::sin(theta)});
    }
    return poly;
}

}  // namespace

TEST_CASE("point_in_region basics") {
    Polygon square = make_square(0, 0, 1, 1);
    CHECK(point_in_region({0.5, 0.5}, {square}));
    CHECK_FALSE(point_in_region({2.0, 2.0}, {square}));

    // Overlapping same-class polygons form a union, not an XOR.
    Polygon a = make_square(0, 0, 1, 1);
    Polygon b = make_square(0.25, 0.25, 0.75, 0.75);
    Point2D p{0.5, 0.5};
    bool brute = point_in_polygon(p, a) || point_in_polygon(p, b);
    CHECK(point_in_region(p, {a, b}));
    CHECK(point_in_region(p, {a, b}) == brute);
}

TEST_CASE("tile_coverage full, empty, half") {
    TileRect tile{0, 0, 8, 8};

    Polygon big = make_square(-0, -0, 8, 8);  // covers the whole tile
    CHECK(tile_coverage({big}, tile, 16) == doctest::Approx(1.0));

    CHECK(tile_coverage({}, tile, 16) == 0.0);
    Polygon far_away = make_square(20, 20, 30, 30);
    CHECK(tile_coverage({far_away}, tile, 16) == 0.0);

    // Left half of the tile; oracle at 256 samples/side.
    Polygon half = make_square(0, 0, 4, 8);
    double got = tile_coverage({half}, tile, 16);
    double oracle = tile_coverage({half}, tile, 256);
    CHECK(std::abs(got - 0.5) <= 1.0 / 16.0);
    CHECK(std::abs(got - oracle) <= 0.02);
}

TEST_CASE("rasterize_to_grid basics") {
    TileSpec spec{64, 64, 16};

    SUBCASE("empty polygon list -> all zero") {
        CoverageGrid grid = rasterize_to_grid({}, spec);
        for (double v : grid.data) CHECK(v == 0.0);
    }

    SUBCASE("full-image opaque polygon -> opaque 1.0, transparent 0.0") {
        Polygon full = make_square(0, 0, 64, 64, SoilClass::Opaque);
        CoverageGrid grid = rasterize_to_grid({full}, spec);
        for (int ty = 0; ty < grid.gh; ++ty) {
            for (int tx = 0; tx < grid.gw; ++tx) {
                CHECK(grid.at(ty, tx, SoilClass::Opaque) == 1.0);
                CHECK(grid.at(ty, tx, SoilClass::Transparent) == 0.0);
            }
        }
    }
}

TEST_CASE("non-divisible dims clip the edge tiles") {
    TileSpec spec{1280, 800, 64};
    CHECK(spec.grid_w() == 20);
    CHECK(spec.grid_h() == 13);

    // Bottom-row tiles are 64x32; coverage relative to the clipped extent,
    // so a full-image polygon still gives 1.0 there.
    Polygon full = make_square(0, 0, 1280, 800, SoilClass::Opaque);
    CoverageGrid grid = rasterize_to_grid({full}, spec, 8);
    for (int tx = 0; tx < spec.grid_w(); ++tx) {
        CHECK(grid.at(12, tx, SoilClass::Opaque) == 1.0);
    }
}

TEST_CASE("threshold_grid boundary rules") {
    CoverageGrid cov(1, 3);
    cov.at(0, 0, SoilClass::Opaque) = 0.0;
    cov.at(0, 1, SoilClass::Opaque) = 0.5;
    cov.at(0, 2, SoilClass::Opaque) = 0.25;  // exactly tau

    TileGrid grid = threshold_grid(cov, 0.25);
    CHECK(grid.at(0, 0, SoilClass::Opaque) == 0);
    CHECK(grid.at(0, 1, SoilClass::Opaque) == 1);  // 0.5 > 0.25
    CHECK(grid.at(0, 2, SoilClass::Opaque) == 0);  // strict inequality

    CHECK_THROWS_AS(threshold_grid(cov, 1.0), ConfigError);
    CHECK_THROWS_AS(threshold_grid(cov, -0.1), ConfigError);
}

TEST_CASE("a tile may carry both classes") {
    TileSpec spec{32, 32, 32};
    Polygon op = make_square(0, 0, 32, 32, SoilClass::Opaque);
    Polygon tr = make_square(4, 4, 28, 28, SoilClass::Transparent);
    TileGrid grid = threshold_grid(rasterize_to_grid({op, tr}, spec), 0.25);
    CHECK(grid.at(0, 0, SoilClass::Opaque) == 1);
    CHECK(grid.at(0, 0, SoilClass::Transparent) == 1);
}

TEST_CASE("polygon validation") {
    Polygon two_pts;
    two_pts.vertices = {{0, 0}, {1, 1}};
    CHECK(polygon_validation_error(two_pts, 10, 10).has_value());
    CHECK_THROWS_AS(validate_polygon(two_pts, 10, 10), DataError);

    Polygon out_of_bounds = make_square(2, 2, 12, 8);
    CHECK(polygon_validation_error(out_of_bounds, 10, 10).has_value());

    Polygon bowtie;
    bowtie.vertices = {{0, 0}, {4, 4}, {4, 0}, {0, 4}};
    auto err = polygon_validation_error(bowtie, 10, 10);
    REQUIRE(err.has_value());
    CHECK(err->find("self-intersection") != std::string::npos);

    Polygon ok = make_square(1, 1, 4, 4);
    CHECK_FALSE(polygon_validation_error(ok, 10, 10).has_value());

    Polygon nan_vertex = make_square(0, 0, 4, 4);
    nan_vertex.vertices[1].x = std::nan("");
    CHECK(polygon_validation_error(nan_vertex, 10, 10).has_value());
}

TEST_CASE("coverage monotonicity and union bound") {
    Rng rng(2024);
    TileSpec spec{96, 64, 16};
    for (int trial = 0; trial < 25; ++trial) {
        Polygon a = random_simple_polygon(rng, 96, 64);
        Polygon b = random_simple_polygon(rng, 96, 64);
        CoverageGrid only_a = rasterize_to_grid({a}, spec);
        CoverageGrid only_b = rasterize_to_grid({b}, spec);
        CoverageGrid both = rasterize_to_grid({a, b}, spec);
        for (int ty = 0; ty < spec.grid_h(); ++ty) {
            for (int tx = 0; tx < spec.grid_w(); ++tx) {
                double ca = only_a.at(ty, tx, SoilClass::Opaque);
                double cb = only_b.at(ty, tx, SoilClass::Opaque);
                double cu = both.at(ty, tx, SoilClass::Opaque);
                CHECK(cu >= ca);  // adding a polygon never decreases coverage
                CHECK(cu >= cb);
                CHECK(cu >= std::max(ca, cb));
                CHECK(cu <= 1.0);
            }
        }
    }
}

TEST_CASE("sampling resolution convergence 16 vs 128") {
    Rng rng(77);
    TileSpec spec{128, 80, 16};
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Polygon poly = random_simple_polygon(rng, 128, 80);
        CoverageGrid coarse = rasterize_to_grid({poly}, spec, 16);
        CoverageGrid fine = rasterize_to_grid({poly}, spec, 128);
        for (size_t i = 0; i < coarse.data.size(); ++i) {
            CHECK(std::abs(coarse.data[i] - fine.data[i]) <= 0.02);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("threshold monotone in coverage, anti-monotone in tau") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        double cov = rng.next_double();
        double tau_lo = rng.uniform(0.0, 0.5);
        double tau_hi = rng.uniform(tau_lo, 0.99);
        CoverageGrid g(1, 1);
        g.at(0, 0, SoilClass::Opaque) = cov;
        int with_lo = threshold_grid(g, tau_lo).at(0, 0, SoilClass::Opaque);
        int with_hi = threshold_grid(g, tau_hi).at(0, 0, SoilClass::Opaque);
        CHECK(with_lo >= with_hi);  // raising tau can only clear labels
    }
}

TEST_CASE("1x1 grid with tau->0+ matches presence semantics") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        Polygon poly = random_simple_polygon(rng, 64, 64);
        TileSpec whole_image{64, 64, 64};
        TileGrid grid = threshold_grid(rasterize_to_grid({poly}, whole_image), 0.0);
        // any simple polygon of this size covers at least one sample point
        CHECK(grid.at(0, 0, SoilClass::Opaque) == 1);
        CHECK(grid.at(0, 0, SoilClass::Transparent) == 0);
    }
}
