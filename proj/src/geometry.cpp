#include "soil/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "soil/common.hpp"

namespace soil::geom {

namespace {

double cross(Point2D o, Point2D a, Point2D b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Point2D a, Point2D b, Point2D p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Proper or improper intersection of segments ab and cd.
bool segments_intersect(Point2D a, Point2D b, Point2D c, Point2D d) {
    double d1 = cross(c, d, a);
    double d2 = cross(c, d, b);
    double d3 = cross(a, b, c);
    double d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    if (d1 == 0 && on_segment(c, d, a)) return true;
    if (d2 == 0 && on_segment(c, d, b)) return true;
    if (d3 == 0 && on_segment(a, b, c)) return true;
    if (d4 == 0 && on_segment(a, b, d)) return true;
    return false;
}

}  // namespace

std::optional<std::string> polygon_validation_error(const Polygon& poly, int image_width,
                                                    int image_height) {
    const auto& v = poly.vertices;
    if (v.size() < 3) {
        return "polygon has " + std::to_string(v.size()) + " vertices, need at least 3";
    }
    for (size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].x) || !std::isfinite(v[i].y)) {
            return "vertex " + std::to_string(i) + " is not finite";
        }
        if (v[i].x < 0 || v[i].x > image_width || v[i].y < 0 || v[i].y > image_height) {
            return "vertex " + std::to_string(i) + " (" + std::to_string(v[i].x) + "," +
                   std::to_string(v[i].y) + ") outside image bounds " +
                   std::to_string(image_width) + "x" + std::to_string(image_height);
        }
    }
    size_t n = v.size();
    for (size_t i = 0; i < n; ++i) {
        Point2D a = v[i];
        Point2D b = v[(i + 1) % n];
        if (a.x == b.x && a.y == b.y) {
            return "degenerate zero-length edge at vertex " + std::to_string(i);
        }
        for (size_t j = i + 1; j < n; ++j) {
            // adjacent edges share an endpoint by construction
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            Point2D c = v[j];
            Point2D d = v[(j + 1) % n];
            if (segments_intersect(a, b, c, d)) {
                return "self-intersection between edges " + std::to_string(i) + " and " +
                       std::to_string(j);
            }
        }
    }
    return std::nullopt;
}

void validate_polygon(const Polygon& poly, int image_width, int image_height) {
    if (auto err = polygon_validation_error(poly, image_width, image_height)) {
        throw DataError("invalid polygon: " + *err);
    }
}

bool point_in_polygon(Point2D p, const Polygon& poly) {
    const auto& v = poly.vertices;
    bool inside = false;
    size_t n = v.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2D& a = v[i];
        const Point2D& b = v[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_at) inside = !inside;
        }
    }
    return inside;
}

bool point_in_region(Point2D p, const std::vector<Polygon>& polygons) {
    for (const auto& poly : polygons) {
        if (point_in_polygon(p, poly)) return true;
    }
    return false;
}

double tile_coverage(const std::vector<Polygon>& polygons, const TileRect& tile,
                     int samples_per_side) {
    if (polygons.empty()) return 0.0;
    const int s = samples_per_side;
    const double dx = (tile.x1 - tile.x0) / s;
    const double dy = (tile.y1 - tile.y0) / s;
    int64_t hits = 0;
    for (int iy = 0; iy < s; ++iy) {
        double py = tile.y0 + (iy + 0.5) * dy;
        for (int ix = 0; ix < s; ++ix) {
            double px = tile.x0 + (ix + 0.5) * dx;
            if (point_in_region({px, py}, polygons)) ++hits;
        }
    }
    return double(hits) / (double(s) * s);
}

namespace {

struct BBox {
    double x0, y0, x1, y1;
    bool intersects(const TileRect& t) const {
        return x0 < t.x1 && t.x0 < x1 && y0 < t.y1 && t.y0 < y1;
    }
};

BBox bbox_of(const Polygon& poly) {
    BBox b{poly.vertices[0].x, poly.vertices[0].y, poly.vertices[0].x, poly.vertices[0].y};
    for (const auto& p : poly.vertices) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

}  // namespace

CoverageGrid rasterize_to_grid(const std::vector<Polygon>& frame_polygons, const TileSpec& spec,
                               int samples_per_side) {
    CoverageGrid grid(spec.grid_h(), spec.grid_w());

    for (int ci = 0; ci < 2; ++ci) {
        SoilClass cls = SoilClass(ci);
        std::vector<Polygon> class_polys;
        std::vector<BBox> boxes;
        for (const auto& poly : frame_polygons) {
            if (poly.soiling_class == cls) {
                class_polys.push_back(poly);
                boxes.push_back(bbox_of(poly));
            }
        }
        if (class_polys.empty()) continue;

        for (int ty = 0; ty < grid.gh; ++ty) {
            for (int tx = 0; tx < grid.gw; ++tx) {
                TileRect rect{double(tx) * spec.tile_size, double(ty) * spec.tile_size,
                              std::min(double(tx + 1) * spec.tile_size, double(spec.image_width)),
                              std::min(double(ty + 1) * spec.tile_size, double(spec.image_height))};
                std::vector<Polygon> near;
                for (size_t k = 0; k < class_polys.size(); ++k) {
                    if (boxes[k].intersects(rect)) near.push_back(class_polys[k]);
                }
                if (near.empty()) continue;
                grid.at(ty, tx, cls) = tile_coverage(near, rect, samples_per_side);
            }
        }
    }
    return grid;
}

TileGrid threshold_grid(const CoverageGrid& cov, double tau) {
    if (tau < 0.0 || tau >= 1.0) {
        throw ConfigError("coverage threshold tau must be in [0,1), got " + std::to_string(tau));
    }
    TileGrid grid(cov.gh, cov.gw);
    for (size_t i = 0; i < cov.data.size(); ++i) {
        grid.bits[i] = cov.data[i] > tau ? 1 : 0;
    }
    return grid;
}

}  // namespace soil::geom
