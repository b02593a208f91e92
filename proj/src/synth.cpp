#include "soil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "soil/common.hpp"
#include "soil/rng.hpp"

namespace fs = std::filesystem;

namespace soil::synth {

namespace {

struct Rgb {
    int r, g, b;
};

struct SceneStyle {
    Rgb sky_top, sky_horizon, ground_far, ground_near, road;
    std::array<Rgb, 5> objects;
    Rgb soil;
};

// One palette per camera position. Left/right differ on purpose: scene hues
// shift and the opaque soil tone moves from brown to slate, which is what
// makes the cross-camera regimes measurably harder.
const std::array<SceneStyle, 4> kStyles = {{
    // front
    {{70, 110, 200},
     {170, 200, 235},
     {90, 140, 70},
     {60, 110, 50},
     {95, 95, 100},
     {{{200, 60, 50}, {230, 200, 60}, {240, 240, 240}, {60, 180, 200}, {180, 90, 200}}},
     {105, 70, 38}},
    // rear
    {{60, 100, 185},
     {160, 190, 225},
     {95, 135, 75},
     {65, 105, 55},
     {90, 90, 95},
     {{{210, 70, 60}, {220, 190, 70}, {235, 235, 230}, {70, 170, 190}, {170, 100, 190}}},
     {95, 65, 35}},
    // left
    {{200, 120, 60},
     {235, 190, 140},
     {140, 90, 120},
     {110, 60, 95},
     {120, 100, 90},
     {{{60, 200, 90}, {240, 140, 200}, {250, 250, 210}, {90, 90, 220}, {20, 160, 160}}},
     {75, 85, 100}},
    // right
    {{40, 160, 150},
     {150, 220, 210},
     {150, 130, 60},
     {120, 100, 45},
     {80, 95, 105},
     {{{220, 80, 160}, {120, 230, 100}, {250, 220, 170}, {70, 70, 210}, {200, 200, 40}}},
     {70, 90, 105}},
}};

uint8_t clamp_byte(int v) { return uint8_t(std::clamp(v, 0, 255)); }

int lerp_channel(int a, int b, double t) { return int(std::lround(a + (b - a) * t)); }

// Position hash for pixel noise; independent of paint order.
int pixel_noise(uint64_t seed, int x, int y, int c, int amplitude) {
    if (amplitude <= 0) return 0;
    uint64_t h = derive_seed(seed, (uint64_t(y) << 24) ^ (uint64_t(x) << 4) ^ uint64_t(c));
    return int(h % uint64_t(2 * amplitude + 1)) - amplitude;
}

geom::Polygon make_blob(Rng& rng, int width, int height, const BlobParams& params,
                        geom::SoilClass cls) {
    double mindim = std::min(width, height);
    double r = rng.uniform(params.radius_min_frac, params.radius_max_frac) * mindim;
    double rx = std::min(r * rng.uniform(0.8, 1.2), width / 2.0 - 1.5);
    double ry = std::min(r * rng.uniform(0.8, 1.2), height / 2.0 - 1.5);
    double cx = rng.uniform(rx + 1.0, width - rx - 1.0);
    double cy = rng.uniform(ry + 1.0, height - ry - 1.0);

    int nv = rng.uniform_int(8, 16);
    geom::Polygon poly;
    poly.soiling_class = cls;
    for (int i = 0; i < nv; ++i) {
        // jittered but strictly increasing angles keep the contour simple
        double theta = 2.0 * std::numbers::pi * (i + 0.3 * rng.next_double()) / nv;
        double f = rng.uniform(0.72, 1.0);
        poly.vertices.push_back({cx + rx * f * std::cos(theta), cy + ry * f * std::sin(theta)});
    }
    return poly;
}

geom::TileRect polygon_pixel_bbox(const geom::Polygon& poly, int width, int height) {
    double x0 = width, y0 = height, x1 = 0, y1 = 0;
    for (const auto& p : poly.vertices) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    return {std::max(0.0, std::floor(x0)), std::max(0.0, std::floor(y0)),
            std::min(double(width), std::ceil(x1)), std::min(double(height), std::ceil(y1))};
}

}  // namespace

void SynthConfig::validate() const {
    if (width < 16 || height < 16) {
        throw ConfigError("synth dims must be at least 16x16");
    }
    int quota_sum = category_quotas[0] + category_quotas[1] + category_quotas[2] +
                    category_quotas[3];
    if (quota_sum != n_frames) {
        throw ConfigError("category quotas sum to " + std::to_string(quota_sum) + ", expected " +
                          std::to_string(n_frames));
    }
    for (const auto* bp : {&opaque_blobs, &transparent_blobs}) {
        if (bp->count_min < 0 || bp->count_max < bp->count_min) {
            throw ConfigError("blob count range invalid");
        }
        if (bp->radius_min_frac <= 0 || bp->radius_max_frac < bp->radius_min_frac) {
            throw ConfigError("blob radius range invalid");
        }
    }
    if (blur_radius < 1) throw ConfigError("blur radius must be >= 1");
    if (desaturation < 0 || desaturation > 1) throw ConfigError("desaturation must be in [0,1]");
    if (objects_min < 0 || objects_max < objects_min) throw ConfigError("object count range invalid");
    if (noise_amplitude < 0) throw ConfigError("noise amplitude must be >= 0");
    if (cameras.empty()) throw ConfigError("camera list is empty");
}

Scene generate_scene(uint64_t seed, int width, int height, int style, int objects_min,
                     int objects_max, int noise_amplitude) {
    if (width < 16 || height < 16) throw ConfigError("scene dims must be at least 16x16");
    const SceneStyle& st = kStyles[size_t(style) % kStyles.size()];
    Rng rng(derive_seed(seed, 0x5CE7E));

    Scene scene;
    scene.image = io::Image(width, height);
    scene.seg = io::Mask(width, height);

    int horizon = int(height * rng.uniform(0.32, 0.45));
    double vanish_x = width * rng.uniform(0.38, 0.62);
    double road_bottom_half = width * rng.uniform(0.22, 0.38);

    for (int y = 0; y < height; ++y) {
        bool sky = y < horizon;
        double t = sky ? double(y) / std::max(1, horizon)
                       : double(y - horizon) / std::max(1, height - horizon);
        Rgb base = sky ? Rgb{lerp_channel(st.sky_top.r, st.sky_horizon.r, t),
                             lerp_channel(st.sky_top.g, st.sky_horizon.g, t),
                             lerp_channel(st.sky_top.b, st.sky_horizon.b, t)}
                       : Rgb{lerp_channel(st.ground_far.r, st.ground_near.r, t),
                             lerp_channel(st.ground_far.g, st.ground_near.g, t),
                             lerp_channel(st.ground_far.b, st.ground_near.b, t)};
        double road_half = sky ? -1.0 : road_bottom_half * t;
        for (int x = 0; x < width; ++x) {
            Rgb px = base;
            if (!sky && std::abs(x + 0.5 - vanish_x) < road_half) px = st.road;
            scene.image.at(x, y, 0) = clamp_byte(px.r);
            scene.image.at(x, y, 1) = clamp_byte(px.g);
            scene.image.at(x, y, 2) = clamp_byte(px.b);
            scene.seg.at(x, y) = sky ? kSky : kGround;
        }
    }

    int n_objects = rng.uniform_int(objects_min, objects_max);
    for (int i = 0; i < n_objects; ++i) {
        int ow = std::max(2, int(width * rng.uniform(0.05, 0.20)));
        int oh = std::max(2, int(height * rng.uniform(0.06, 0.22)));
        int x0 = rng.uniform_int(0, std::max(0, width - ow));
        int y0 = rng.uniform_int(std::min(height - oh, int(height * 0.2)),
                                 std::max(0, height - oh));
        Rgb color = st.objects[size_t(rng.next_below(st.objects.size()))];
        for (int y = y0; y < y0 + oh; ++y) {
            for (int x = x0; x < x0 + ow; ++x) {
                scene.image.at(x, y, 0) = clamp_byte(color.r);
                scene.image.at(x, y, 1) = clamp_byte(color.g);
                scene.image.at(x, y, 2) = clamp_byte(color.b);
                scene.seg.at(x, y) = kObject;
            }
        }
        scene.boxes.push_back({x0 + ow / 2.0, y0 + oh / 2.0, double(ow), double(oh)});
    }

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                int v = scene.image.at(x, y, c) + pixel_noise(seed, x, y, c, noise_amplitude);
                scene.image.at(x, y, c) = clamp_byte(v);
            }
        }
    }
    return scene;
}

io::Image generate_clean_scene(uint64_t seed, int width, int height, int style) {
    return generate_scene(seed, width, height, style).image;
}

std::pair<io::Image, std::vector<geom::Polygon>> apply_opaque_soiling(const io::Image& img,
                                                                      uint64_t seed,
                                                                      const BlobParams& params,
                                                                      int style) {
    const SceneStyle& st = kStyles[size_t(style) % kStyles.size()];
    Rng rng(derive_seed(seed, 0x0BA9));
    io::Image out = img;
    std::vector<geom::Polygon> polys;

    int count = rng.uniform_int(params.count_min, params.count_max);
    for (int i = 0; i < count; ++i) {
        geom::Polygon poly = make_blob(rng, img.width, img.height, params,
                                       geom::SoilClass::Opaque);
        Rgb tint{st.soil.r + rng.uniform_int(-15, 15), st.soil.g + rng.uniform_int(-12, 12),
                 st.soil.b + rng.uniform_int(-10, 10)};
        geom::TileRect bb = polygon_pixel_bbox(poly, img.width, img.height);
        for (int y = int(bb.y0); y < int(bb.y1); ++y) {
            for (int x = int(bb.x0); x < int(bb.x1); ++x) {
                if (!geom::point_in_polygon({x + 0.5, y + 0.5}, poly)) continue;
                out.at(x, y, 0) = clamp_byte(tint.r + pixel_noise(seed ^ 0xD1, x, y, 0, 12));
                out.at(x, y, 1) = clamp_byte(tint.g + pixel_noise(seed ^ 0xD1, x, y, 1, 12));
                out.at(x, y, 2) = clamp_byte(tint.b + pixel_noise(seed ^ 0xD1, x, y, 2, 12));
            }
        }
        polys.push_back(std::move(poly));
    }
    return {std::move(out), std::move(polys)};
}

io::Image box_blur(const io::Image& img, int radius) {
    if (radius < 1) throw ConfigError("blur radius must be >= 1");
    const int w = img.width, h = img.height;

    // Separable integer box filter; single rounding at the end so a
    // constant image is reproduced exactly.
    std::vector<int64_t> rowsum(size_t(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int c = 0; c < 3; ++c) {
            int64_t acc = 0;
            int x0 = 0, x1 = -1;  // current window [x0, x1]
            for (int x = 0; x < w; ++x) {
                int nx1 = std::min(w - 1, x + radius);
                int nx0 = std::max(0, x - radius);
                while (x1 < nx1) acc += img.at(++x1, y, c);
                while (x0 < nx0) acc -= img.at(x0++, y, c);
                rowsum[(size_t(y) * w + x) * 3 + c] = acc;
            }
        }
    }

    io::Image out(w, h);
    for (int x = 0; x < w; ++x) {
        int cx = std::min(w - 1, x + radius) - std::max(0, x - radius) + 1;
        for (int c = 0; c < 3; ++c) {
            int64_t acc = 0;
            int y0 = 0, y1 = -1;
            for (int y = 0; y < h; ++y) {
                int ny1 = std::min(h - 1, y + radius);
                int ny0 = std::max(0, y - radius);
                while (y1 < ny1) acc += rowsum[(size_t(++y1) * w + x) * 3 + c];
                while (y0 < ny0) acc -= rowsum[(size_t(y0++) * w + x) * 3 + c];
                int cy = ny1 - ny0 + 1;
                int64_t den = int64_t(cx) * cy;
                out.at(x, y, c) = clamp_byte(int((acc + den / 2) / den));
            }
        }
    }
    return out;
}

std::pair<io::Image, std::vector<geom::Polygon>> apply_transparent_soiling(
    const io::Image& img, uint64_t seed, const BlobParams& params, int blur_radius,
    double desaturation) {
    Rng rng(derive_seed(seed, 0x74A5));
    io::Image blurred = box_blur(img, blur_radius);
    io::Image out = img;
    std::vector<geom::Polygon> polys;

    int count = rng.uniform_int(params.count_min, params.count_max);
    for (int i = 0; i < count; ++i) {
        geom::Polygon poly = make_blob(rng, img.width, img.height, params,
                                       geom::SoilClass::Transparent);
        geom::TileRect bb = polygon_pixel_bbox(poly, img.width, img.height);
        for (int y = int(bb.y0); y < int(bb.y1); ++y) {
            for (int x = int(bb.x0); x < int(bb.x1); ++x) {
                if (!geom::point_in_polygon({x + 0.5, y + 0.5}, poly)) continue;
                int r = blurred.at(x, y, 0), g = blurred.at(x, y, 1), b = blurred.at(x, y, 2);
                if (desaturation > 0) {
                    int luma = (299 * r + 587 * g + 114 * b + 500) / 1000;
                    r = int(std::lround(r + desaturation * (luma - r)));
                    g = int(std::lround(g + desaturation * (luma - g)));
                    b = int(std::lround(b + desaturation * (luma - b)));
                }
                out.at(x, y, 0) = clamp_byte(r);
                out.at(x, y, 1) = clamp_byte(g);
                out.at(x, y, 2) = clamp_byte(b);
            }
        }
        polys.push_back(std::move(poly));
    }
    return {std::move(out), std::move(polys)};
}

data::DatasetManifest build_synthetic_dataset(const SynthConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "seg");

    std::vector<data::Category> categories;
    for (size_t c = 0; c < 4; ++c) {
        for (int k = 0; k < cfg.category_quotas[c]; ++k) categories.push_back(data::Category(c));
    }
    Rng order_rng(derive_seed(cfg.seed, 0xCA7));
    order_rng.shuffle(categories);

    std::ofstream boxes_csv(fs::path(out_dir) / "boxes.csv");
    if (!boxes_csv) throw DataError("cannot write boxes.csv in " + out_dir);
    boxes_csv << "frame_id,cx,cy,w,h\n";

    data::DatasetManifest manifest;
    for (int i = 0; i < cfg.n_frames; ++i) {
        uint64_t frame_seed = derive_seed(cfg.seed, 0x1000 + uint64_t(i));
        data::Camera camera = cfg.cameras[size_t(i) % cfg.cameras.size()];
        int style = cfg.style_by_camera ? int(camera) : 0;

        Scene scene = generate_scene(frame_seed, cfg.width, cfg.height, style, cfg.objects_min,
                                     cfg.objects_max, cfg.noise_amplitude);
        io::Image img = scene.image;
        std::vector<geom::Polygon> polygons;

        data::Category category = categories[size_t(i)];
        if (category == data::Category::Transparent || category == data::Category::Both) {
            auto [soiled, polys] = apply_transparent_soiling(
                img, derive_seed(frame_seed, 1), cfg.transparent_blobs, cfg.blur_radius,
                cfg.desaturation);
            img = std::move(soiled);
            polygons.insert(polygons.end(), polys.begin(), polys.end());
        }
        if (category == data::Category::Opaque || category == data::Category::Both) {
            auto [soiled, polys] =
                apply_opaque_soiling(img, derive_seed(frame_seed, 2), cfg.opaque_blobs, style);
            img = std::move(soiled);
            polygons.insert(polygons.end(), polys.begin(), polys.end());
        }

        char frame_id[32];
        std::snprintf(frame_id, sizeof frame_id, "frame_%06d", i);
        std::string rel_image = std::string("images/") + frame_id + ".ppm";
        io::save_ppm(img, (fs::path(out_dir) / rel_image).string());
        io::save_pgm(scene.seg, (fs::path(out_dir) / "seg" / (std::string(frame_id) + ".pgm")).string());
        for (const auto& box : scene.boxes) {
            char line[160];
            std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%.17g\n", frame_id, box.cx,
                          box.cy, box.w, box.h);
            boxes_csv << line;
        }

        data::FrameRecord rec;
        rec.frame_id = frame_id;
        rec.camera = camera;
        rec.width = cfg.width;
        rec.height = cfg.height;
        rec.image_path = rel_image;
        rec.polygons = std::move(polygons);
        manifest.records.push_back(std::move(rec));
    }

    if (!boxes_csv) throw DataError("write failed: boxes.csv");
    boxes_csv.close();
    data::save_manifest(manifest, (fs::path(out_dir) / "manifest.jsonl").string());
    return manifest;
}

}  // namespace soil::synth
