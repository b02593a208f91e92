#include "soil/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "soil/common.hpp"
#include "soil/rng.hpp"

namespace soil::data {

using ordered_json = nlohmann::ordered_json;

Category category_of(SoilingClassVector v) {
    if (v.opaque && v.transparent) return Category::Both;
    if (v.opaque) return Category::Opaque;
    if (v.transparent) return Category::Transparent;
    return Category::Clean;
}

SoilingClassVector vector_of(Category c) {
    switch (c) {
        case Category::Clean: return {0, 0};
        case Category::Transparent: return {0, 1};
        case Category::Opaque: return {1, 0};
        case Category::Both: return {1, 1};
    }
    return {0, 0};
}

Camera camera_from_string(const std::string& s) {
    for (size_t i = 0; i < kCameraNames.size(); ++i) {
        if (s == kCameraNames[i]) return Camera(i);
    }
    throw DataError("unknown camera token: '" + s + "'");
}

Split split_from_string(const std::string& s) {
    for (size_t i = 0; i < kSplitNames.size(); ++i) {
        if (s == kSplitNames[i]) return Split(i);
    }
    throw ConfigError("unknown split name: '" + s + "'");
}

const FrameRecord* DatasetManifest::find(const std::string& frame_id) const {
    for (const auto& r : records) {
        if (r.frame_id == frame_id) return &r;
    }
    return nullptr;
}

bool DatasetManifest::has_split(const std::string& frame_id) const {
    return split_assignment.count(frame_id) > 0;
}

double polygon_area(const geom::Polygon& poly) {
    double acc = 0.0;
    size_t n = poly.vertices.size();
    for (size_t i = 0; i < n; ++i) {
        const auto& a = poly.vertices[i];
        const auto& b = poly.vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return std::abs(acc) * 0.5;
}

SoilingClassVector image_level_label(const FrameRecord& record, double min_area_frac) {
    if (record.augmented) return record.augmented_label;
    SoilingClassVector v;
    double min_area = min_area_frac * double(record.width) * double(record.height);
    for (const auto& poly : record.polygons) {
        if (polygon_area(poly) < min_area) continue;
        if (poly.soiling_class == geom::SoilClass::Opaque) v.opaque = 1;
        else v.transparent = 1;
    }
    return v;
}

std::vector<std::string> subsample_frames(const std::vector<std::string>& frame_ids, int stride) {
    if (stride < 1) throw ConfigError("subsample stride must be >= 1");
    std::vector<std::string> kept;
    for (size_t i = 0; i < frame_ids.size(); i += size_t(stride)) {
        kept.push_back(frame_ids[i]);
    }
    return kept;
}

std::array<int, 3> apportion_largest_remainder(int n, const std::array<double, 3>& ratios) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));
    }
    std::array<int, 3> sizes{};
    std::array<double, 3> remainder{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double exact = ratios[i] * n;
        sizes[i] = int(std::floor(exact));
        remainder[i] = exact - sizes[i];
        assigned += sizes[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (int k = 0; k < n - assigned; ++k) {
        sizes[order[size_t(k)]] += 1;
    }
    return sizes;
}

std::map<std::string, Split> stratified_split(const DatasetManifest& manifest,
                                              const std::array<double, 3>& ratios, uint64_t seed) {
    if (manifest.records.empty()) throw DataError("cannot split an empty manifest");

    std::array<std::vector<const FrameRecord*>, 4> strata;
    std::map<std::string, Split> assignment;
    for (const auto& rec : manifest.records) {
        if (rec.augmented) {
            assignment[rec.frame_id] = Split::Train;
            continue;
        }
        strata[size_t(category_of(image_level_label(rec)))].push_back(&rec);
    }

    for (size_t cat = 0; cat < strata.size(); ++cat) {
        auto& stratum = strata[cat];
        if (stratum.empty()) continue;
        Rng rng(derive_seed(seed, cat));
        rng.shuffle(stratum);
        auto sizes = apportion_largest_remainder(int(stratum.size()), ratios);
        size_t idx = 0;
        for (int s = 0; s < 3; ++s) {
            for (int k = 0; k < sizes[size_t(s)]; ++k) {
                assignment[stratum[idx++]->frame_id] = Split(s);
            }
        }
    }
    return assignment;
}

std::array<int64_t, 4> category_stats(const DatasetManifest& manifest, Split split) {
    std::array<int64_t, 4> counts{};
    for (const auto& rec : manifest.records) {
        auto it = manifest.split_assignment.find(rec.frame_id);
        if (it == manifest.split_assignment.end() || it->second != split) continue;
        counts[size_t(category_of(image_level_label(rec)))] += 1;
    }
    return counts;
}

std::array<int64_t, 4> category_stats_all(const DatasetManifest& manifest) {
    std::array<int64_t, 4> counts{};
    for (const auto& rec : manifest.records) {
        counts[size_t(category_of(image_level_label(rec)))] += 1;
    }
    return counts;
}

namespace {

const std::set<std::string> kRecordFields = {"frame_id", "camera", "width",     "height",
                                             "image",    "polygons", "split",
                                             "augmented", "label"};

[[noreturn]] void record_error(int line_no, const std::string& frame_id, const std::string& what) {
    std::string id = frame_id.empty() ? "<unknown>" : frame_id;
    throw DataError("manifest line " + std::to_string(line_no) + " (frame_id " + id + "): " + what);
}

FrameRecord parse_record(const ordered_json& j, int line_no, Split* split_out, bool* has_split) {
    std::string frame_id;
    if (j.contains("frame_id") && j["frame_id"].is_string()) {
        frame_id = j["frame_id"].get<std::string>();
    }
    for (const auto& [key, _] : j.items()) {
        if (!kRecordFields.count(key)) {
            record_error(line_no, frame_id, "unknown field '" + key + "'");
        }
    }
    for (const char* required : {"frame_id", "camera", "width", "height", "image", "polygons"}) {
        if (!j.contains(required)) {
            record_error(line_no, frame_id, std::string("missing field '") + required + "'");
        }
    }

    FrameRecord rec;
    try {
        rec.frame_id = j["frame_id"].get<std::string>();
        rec.camera = camera_from_string(j["camera"].get<std::string>());
        rec.width = j["width"].get<int>();
        rec.height = j["height"].get<int>();
        rec.image_path = j["image"].get<std::string>();
        for (const auto& jp : j["polygons"]) {
            for (const auto& [key, _] : jp.items()) {
                if (key != "class" && key != "points") {
                    record_error(line_no, rec.frame_id, "unknown polygon field '" + key + "'");
                }
            }
            geom::Polygon poly;
            std::string cls = jp.at("class").get<std::string>();
            if (cls == "opaque") poly.soiling_class = geom::SoilClass::Opaque;
            else if (cls == "transparent") poly.soiling_class = geom::SoilClass::Transparent;
            else record_error(line_no, rec.frame_id, "unknown polygon class '" + cls + "'");
            for (const auto& jpt : jp.at("points")) {
                poly.vertices.push_back({jpt.at(0).get<double>(), jpt.at(1).get<double>()});
            }
            rec.polygons.push_back(std::move(poly));
        }
        if (j.contains("augmented")) rec.augmented = j["augmented"].get<bool>();
        if (j.contains("label")) {
            if (!rec.augmented) {
                record_error(line_no, rec.frame_id, "'label' is only valid on augmented records");
            }
            rec.augmented_label.opaque = j["label"].at(0).get<uint8_t>();
            rec.augmented_label.transparent = j["label"].at(1).get<uint8_t>();
        }
        *has_split = j.contains("split");
        if (*has_split) *split_out = split_from_string(j["split"].get<std::string>());
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        record_error(line_no, frame_id, std::string("malformed record: ") + e.what());
    }

    if (rec.width <= 0 || rec.height <= 0) {
        record_error(line_no, rec.frame_id, "non-positive image dimensions");
    }
    for (const auto& poly : rec.polygons) {
        if (auto err = geom::polygon_validation_error(poly, rec.width, rec.height)) {
            record_error(line_no, rec.frame_id, "invalid polygon: " + *err);
        }
    }
    return rec;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);

    DatasetManifest manifest;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            record_error(line_no, "", "line is not a JSON object");
        }
        Split split = Split::Train;
        bool has_split = false;
        FrameRecord rec = parse_record(j, line_no, &split, &has_split);
        if (!seen_ids.insert(rec.frame_id).second) {
            record_error(line_no, rec.frame_id, "duplicate frame_id");
        }
        if (has_split) manifest.split_assignment[rec.frame_id] = split;
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    for (const auto& rec : manifest.records) {
        ordered_json j;
        j["frame_id"] = rec.frame_id;
        j["camera"] = kCameraNames[size_t(rec.camera)];
        j["width"] = rec.width;
        j["height"] = rec.height;
        j["image"] = rec.image_path;
        j["polygons"] = ordered_json::array();
        for (const auto& poly : rec.polygons) {
            ordered_json jp;
            jp["class"] = poly.soiling_class == geom::SoilClass::Opaque ? "opaque" : "transparent";
            jp["points"] = ordered_json::array();
            for (const auto& p : poly.vertices) {
                jp["points"].push_back({p.x, p.y});
            }
            j["polygons"].push_back(std::move(jp));
        }
        if (rec.augmented) {
            j["augmented"] = true;
            j["label"] = {int(rec.augmented_label.opaque), int(rec.augmented_label.transparent)};
        }
        auto it = manifest.split_assignment.find(rec.frame_id);
        if (it != manifest.split_assignment.end()) {
            j["split"] = kSplitNames[size_t(it->second)];
        }
        out << j.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace soil::data
