#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "soil/dataset.hpp"
#include "soil/model.hpp"

namespace soil::train {

struct TrainConfig {
    double lr = 5e-4;
    int steps = 500;
    int batch = 8;
    uint64_t seed = 1;
    // weighted-average scalarization: soiling, segmentation, detection
    std::vector<double> task_weights{1.0, 0.0, 0.0};
    int log_every = 25;
};

// One frame ready for the optimizer: normalized input plus every target the
// configured heads need.
struct Sample {
    std::string frame_id;
    data::Camera camera = data::Camera::Front;
    nn::Tensor input;        // [3,H,W], pixels / 255
    nn::Tensor soil_target;  // [2,gh,gw] (tile mode) or [2,1,1] (image mode)
    data::SoilingClassVector image_label;
    std::vector<int> seg_target;       // per-pixel class ids, when seg enabled
    nn::Tensor det_obj, det_box;       // [1,fh,fw], [4,fh,fw], when det enabled
};

struct DataOptions {
    double tau = 0.25;
    int samples_per_side = 16;
    double min_area_frac = 0.0;
    std::set<data::Camera> cameras;  // empty = no filtering
    bool need_seg = false;
    bool need_det = false;
};

// Loads the given split into memory. Augmented records participate only in
// image-level soiling-only training; they are skipped otherwise.
std::vector<Sample> load_samples(const data::DatasetManifest& manifest,
                                 const std::string& data_dir, const nn::ModelConfig& model_cfg,
                                 const DataOptions& opts, data::Split split);

struct StepLog {
    int step = 0;
    double total = 0.0;
    double soil = 0.0;
    double seg = 0.0;
    double det = 0.0;
};

struct TrainResult {
    std::unique_ptr<nn::SoilNet> net;
    std::vector<StepLog> logs;
};

// Deterministic in (config, samples): seeded init, seeded epoch shuffles,
// fixed batch assembly. Throws NumericError when a loss goes non-finite.
TrainResult train_soilnet(const nn::ModelConfig& model_cfg, const TrainConfig& tcfg,
                          const std::vector<Sample>& samples);

// Thresholded (p > 0.5) predictions.
std::vector<geom::TileGrid> predict_tile_grids(nn::SoilNet& net, const std::vector<Sample>& samples,
                                               int batch = 8);
std::vector<data::SoilingClassVector> predict_image_labels(nn::SoilNet& net,
                                                           const std::vector<Sample>& samples,
                                                           int batch = 8);

// Ground-truth views of a sample list.
std::vector<geom::TileGrid> tile_targets(const std::vector<Sample>& samples);
std::vector<data::SoilingClassVector> image_labels(const std::vector<Sample>& samples);

}  // namespace soil::train
