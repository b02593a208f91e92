#include "soil/regime.hpp"

#include "soil/checkpoint.hpp"
#include "soil/common.hpp"
#include "soil/rng.hpp"

namespace soil::eval {

RegimeResult run_regime(const data::DatasetManifest& manifest, const std::string& data_dir,
                        const RegimeConfig& cfg) {
    if (cfg.train_cams.empty() || cfg.test_cams.empty()) {
        throw ConfigError("regime camera sets must be non-empty");
    }

    nn::ModelConfig image_cfg = cfg.image_model;
    image_cfg.soil_head.mode = nn::HeadMode::ImageLevel;
    nn::ModelConfig tile_cfg = cfg.tile_model;
    tile_cfg.soil_head.mode = nn::HeadMode::TileLevel;

    train::DataOptions train_opts = cfg.data;
    train_opts.cameras = cfg.train_cams;
    train::DataOptions test_opts = cfg.data;
    test_opts.cameras = cfg.test_cams;
    test_opts.need_seg = false;
    test_opts.need_det = false;

    RegimeResult result;

    // image-level model: confusion, mean hamming, rates
    {
        train::DataOptions opts = train_opts;
        opts.need_seg = image_cfg.with_seg;
        opts.need_det = image_cfg.with_det;
        std::vector<train::Sample> test_set =
            train::load_samples(manifest, data_dir, image_cfg, test_opts, data::Split::Test);
        if (test_set.empty()) throw DataError("regime: no test frames for the camera filter");

        if (cfg.image_checkpoint) {
            result.image_net = std::make_unique<nn::SoilNet>(image_cfg);
            nn::load_checkpoint(result.image_net->params(), image_cfg.digest(),
                                *cfg.image_checkpoint);
        } else {
            std::vector<train::Sample> train_set =
                train::load_samples(manifest, data_dir, image_cfg, opts, data::Split::Train);
            if (train_set.empty()) throw DataError("regime: no training frames for the camera filter");
            train::TrainResult tr = train::train_soilnet(image_cfg, cfg.train_cfg, train_set);
            result.image_net = std::move(tr.net);
        }

        auto preds = train::predict_image_labels(*result.image_net, test_set, cfg.train_cfg.batch);
        auto gts = train::image_labels(test_set);
        result.report.confusion = confusion_4way(preds, gts);
        result.report.mean_hamming_value = mean_hamming(preds, gts);
        result.report.rates = image_tpr_fpr(preds, gts);
    }

    // tile-level model: per-camera precision/recall
    if (cfg.with_tiles) {
        train::TrainConfig tile_train = cfg.train_cfg;
        tile_train.task_weights = {1.0, 0.0, 0.0};  // heads beyond soiling stay off here
        nn::ModelConfig plain_tile = tile_cfg;
        plain_tile.with_seg = false;
        plain_tile.with_det = false;

        std::vector<train::Sample> train_set =
            train::load_samples(manifest, data_dir, plain_tile, train_opts, data::Split::Train);
        std::vector<train::Sample> test_set =
            train::load_samples(manifest, data_dir, plain_tile, test_opts, data::Split::Test);
        if (train_set.empty() || test_set.empty()) {
            throw DataError("regime: tile model has no frames for the camera filter");
        }
        train::TrainResult tr = train::train_soilnet(plain_tile, tile_train, train_set);
        result.tile_net = std::move(tr.net);

        auto preds = train::predict_tile_grids(*result.tile_net, test_set, cfg.train_cfg.batch);
        auto gts = train::tile_targets(test_set);
        std::vector<data::Camera> cameras;
        for (const auto& s : test_set) cameras.push_back(s.camera);
        result.report.tiles = tile_pr(preds, gts, cameras);
        result.report.has_tiles = true;
    }

    return result;
}

}  // namespace soil::eval
