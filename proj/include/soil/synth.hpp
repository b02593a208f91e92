#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "soil/dataset.hpp"
#include "soil/geometry.hpp"
#include "soil/image.hpp"

namespace soil::synth {

// Scene segmentation class ids written to the sidecar masks.
enum SceneClass : uint8_t { kSky = 0, kGround = 1, kObject = 2 };

struct ObjectBox {
    double cx, cy, w, h;  // pixels
};

struct BlobParams {
    int count_min = 1;
    int count_max = 3;
    double radius_min_frac = 0.15;  // of min(image dim)
    double radius_max_frac = 0.35;
};

struct SynthConfig {
    uint64_t seed = 1;
    int width = 128;
    int height = 80;
    int n_frames = 0;
    // Quotas indexed by Category order: Clean, Transparent, Opaque, Both.
    std::array<int, 4> category_quotas{};

    BlobParams opaque_blobs{1, 3, 0.15, 0.35};
    BlobParams transparent_blobs{1, 2, 0.20, 0.40};
    int blur_radius = 4;
    // Chroma pull toward luminance inside transparent regions. Off by
    // default: any nonzero value breaks the blur-of-constant-is-identity
    // property on colored constant images.
    double desaturation = 0.0;

    int objects_min = 3;
    int objects_max = 7;
    int noise_amplitude = 10;

    // Left/right cameras draw from a different palette and soil tint so
    // cross-camera generalization experiments have a real gap to measure.
    bool style_by_camera = true;
    std::vector<data::Camera> cameras = {data::Camera::Front, data::Camera::Rear,
                                         data::Camera::Left, data::Camera::Right};

    void validate() const;  // throws ConfigError
};

// Deterministic clean scene: sky gradient, ground, road trapezoid, colored
// rectangles, pixel hash noise. style selects the palette (0..3).
io::Image generate_clean_scene(uint64_t seed, int width, int height, int style = 0);

// Same scene plus its structure ground truth (segmentation mask + boxes).
struct Scene {
    io::Image image;
    io::Mask seg;
    std::vector<ObjectBox> boxes;
};
Scene generate_scene(uint64_t seed, int width, int height, int style = 0,
                     int objects_min = 3, int objects_max = 7, int noise_amplitude = 10);

// Paints seeded blob polygons with an opaque soil tone. Returned polygons
// exactly bound the painted pixels (pixel center in polygon).
std::pair<io::Image, std::vector<geom::Polygon>> apply_opaque_soiling(const io::Image& img,
                                                                      uint64_t seed,
                                                                      const BlobParams& params,
                                                                      int style = 0);

// Box-blurs pixels inside seeded blob polygons (plus optional desaturation).
std::pair<io::Image, std::vector<geom::Polygon>> apply_transparent_soiling(
    const io::Image& img, uint64_t seed, const BlobParams& params, int blur_radius,
    double desaturation = 0.0);

// Writes images (PPM), co-task ground truth sidecars (seg/ masks, boxes.csv)
// and the manifest to out_dir. Fully deterministic in cfg.
data::DatasetManifest build_synthetic_dataset(const SynthConfig& cfg, const std::string& out_dir);

io::Image box_blur(const io::Image& img, int radius);

}  // namespace soil::synth
