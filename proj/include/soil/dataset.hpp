#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "soil/geometry.hpp"

namespace soil::data {

// The binary pair [opaque, transparent]; its four states are the
// Clean/Transparent/Opaque/Both categories.
struct SoilingClassVector {
    uint8_t opaque = 0;
    uint8_t transparent = 0;

    bool any() const { return opaque || transparent; }
    bool operator==(const SoilingClassVector&) const = default;
};

enum class Category { Clean = 0, Transparent = 1, Opaque = 2, Both = 3 };

inline constexpr std::array<const char*, 4> kCategoryNames = {"Clean", "Transparent", "Opaque",
                                                              "Both"};

Category category_of(SoilingClassVector v);
SoilingClassVector vector_of(Category c);

enum class Camera { Front = 0, Rear = 1, Left = 2, Right = 3 };

inline constexpr std::array<const char*, 4> kCameraNames = {"front", "rear", "left", "right"};

Camera camera_from_string(const std::string& s);

enum class Split { Train = 0, Val = 1, Test = 2 };

inline constexpr std::array<const char*, 3> kSplitNames = {"train", "val", "test"};

Split split_from_string(const std::string& s);

struct FrameRecord {
    std::string frame_id;
    Camera camera = Camera::Front;
    int width = 0;
    int height = 0;
    std::string image_path;  // relative to the manifest's directory
    std::vector<geom::Polygon> polygons;

    // GAN-generated frames carry no polygons; their image-level label is
    // fixed at generation time and they never leave the training split.
    bool augmented = false;
    SoilingClassVector augmented_label{};
};

struct DatasetManifest {
    std::vector<FrameRecord> records;
    std::map<std::string, Split> split_assignment;
    uint64_t split_seed = 0;

    const FrameRecord* find(const std::string& frame_id) const;
    bool has_split(const std::string& frame_id) const;
};

// Per-class presence: bit = 1 iff some polygon of that class has area
// >= min_area_frac * image area. Augmented records return their stored label.
SoilingClassVector image_level_label(const FrameRecord& record, double min_area_frac = 0.0);

// Keeps indices 0, stride, 2*stride, ...
std::vector<std::string> subsample_frames(const std::vector<std::string>& frame_ids, int stride);

// Largest-remainder apportionment of n into parts proportional to ratios;
// remainder ties go to the earlier split.
std::array<int, 3> apportion_largest_remainder(int n, const std::array<double, 3>& ratios);

// Deterministic stratified split: within each category stratum records are
// shuffled by a seeded PRNG and cut by largest-remainder sizes. Augmented
// records are always assigned to Train.
std::map<std::string, Split> stratified_split(const DatasetManifest& manifest,
                                              const std::array<double, 3>& ratios, uint64_t seed);

// Counts per Category over records assigned to `split`.
std::array<int64_t, 4> category_stats(const DatasetManifest& manifest, Split split);
std::array<int64_t, 4> category_stats_all(const DatasetManifest& manifest);

// Manifest file: UTF-8 JSON lines, one record per line, strict field set.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

double polygon_area(const geom::Polygon& poly);

}  // namespace soil::data
