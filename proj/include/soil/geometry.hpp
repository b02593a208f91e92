#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace soil::geom {

enum class SoilClass { Opaque = 0, Transparent = 1 };

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

// Annotation primitive: an ordered simple polygon carrying exactly one
// soiling class.
struct Polygon {
    std::vector<Point2D> vertices;
    SoilClass soiling_class = SoilClass::Opaque;
};

// Fixed tiling of an image. Edge tiles at the right/bottom are clipped to
// the image rectangle, so grid dimensions round up.
struct TileSpec {
    int image_width = 0;
    int image_height = 0;
    int tile_size = 1;

    int grid_w() const { return (image_width + tile_size - 1) / tile_size; }
    int grid_h() const { return (image_height + tile_size - 1) / tile_size; }
};

struct TileRect {
    double x0, y0, x1, y1;
};

// Per-class coverage fractions, grid_h x grid_w x 2 (class-major last).
struct CoverageGrid {
    int gh = 0;
    int gw = 0;
    std::vector<double> data;

    CoverageGrid() = default;
    CoverageGrid(int gh_, int gw_) : gh(gh_), gw(gw_), data(size_t(gh_) * gw_ * 2, 0.0) {}

    double at(int ty, int tx, SoilClass c) const {
        return data[(size_t(ty) * gw + tx) * 2 + int(c)];
    }
    double& at(int ty, int tx, SoilClass c) {
        return data[(size_t(ty) * gw + tx) * 2 + int(c)];
    }
};

// Binary per-tile labels, same layout as CoverageGrid. A tile may carry
// both classes at once.
struct TileGrid {
    int gh = 0;
    int gw = 0;
    std::vector<uint8_t> bits;

    TileGrid() = default;
    TileGrid(int gh_, int gw_) : gh(gh_), gw(gw_), bits(size_t(gh_) * gw_ * 2, 0) {}

    uint8_t at(int ty, int tx, SoilClass c) const {
        return bits[(size_t(ty) * gw + tx) * 2 + int(c)];
    }
    uint8_t& at(int ty, int tx, SoilClass c) {
        return bits[(size_t(ty) * gw + tx) * 2 + int(c)];
    }
    bool operator==(const TileGrid&) const = default;
};

// Returns a description of the first violated invariant, or nullopt if the
// polygon is a valid annotation: >= 3 vertices, finite coordinates inside
// [0,w]x[0,h], simple (no self-intersection).
std::optional<std::string> polygon_validation_error(const Polygon& poly, int image_width,
                                                    int image_height);

// Throws DataError on invalid input.
void validate_polygon(const Polygon& poly, int image_width, int image_height);

// Even-odd rule for a single polygon.
bool point_in_polygon(Point2D p, const Polygon& poly);

// Union of same-class polygons: inside iff inside any of them.
bool point_in_region(Point2D p, const std::vector<Polygon>& polygons);

// Fraction of the rectangle covered by the union of the given polygons,
// estimated on a samples_per_side^2 grid of sub-cell centers.
double tile_coverage(const std::vector<Polygon>& polygons, const TileRect& tile,
                     int samples_per_side);

// Per-tile, per-class coverage for one frame's polygons. Right/bottom edge
// tiles use their clipped extent.
CoverageGrid rasterize_to_grid(const std::vector<Polygon>& frame_polygons, const TileSpec& spec,
                               int samples_per_side = 16);

// label = 1 iff coverage > tau (strict).
TileGrid threshold_grid(const CoverageGrid& cov, double tau);

}  // namespace soil::geom
