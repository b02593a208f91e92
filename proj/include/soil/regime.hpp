#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>

#include "soil/report.hpp"
#include "soil/train.hpp"

namespace soil::eval {

// One camera-ablation experiment: train on the train split filtered to
// train_cams, evaluate on the test split filtered to test_cams. Image-level
// metrics (confusion, mean hamming, TPR/FPR) come from the image-level
// model; per-camera tile precision/recall from the tile-level model.
struct RegimeConfig {
    std::set<data::Camera> train_cams;
    std::set<data::Camera> test_cams;
    bool with_tiles = true;
    nn::ModelConfig image_model;  // soil_head.mode forced to ImageLevel
    nn::ModelConfig tile_model;   // soil_head.mode forced to TileLevel
    train::TrainConfig train_cfg;
    train::DataOptions data;
    // evaluate this checkpoint instead of training the image-level model
    std::optional<std::string> image_checkpoint;
};

struct RegimeResult {
    ReportBundle report;
    std::unique_ptr<nn::SoilNet> image_net;
    std::unique_ptr<nn::SoilNet> tile_net;  // null when with_tiles is false
};

RegimeResult run_regime(const data::DatasetManifest& manifest, const std::string& data_dir,
                        const RegimeConfig& cfg);

}  // namespace soil::eval
