#include "soil/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "soil/adam.hpp"
#include "soil/common.hpp"
#include "soil/image.hpp"
#include "soil/rng.hpp"

namespace fs = std::filesystem;

namespace soil::train {

namespace {

nn::Tensor image_to_tensor(const io::Image& img) {
    nn::Tensor t({3, img.height, img.width});
    const float scale = 1.0f / 255.0f;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                t.data[(size_t(c) * img.height + y) * img.width + x] = scale * img.at(x, y, c);
            }
        }
    }
    return t;
}

nn::Tensor tile_grid_to_target(const geom::TileGrid& grid) {
    nn::Tensor t({2, grid.gh, grid.gw});
    for (int cls = 0; cls < 2; ++cls) {
        for (int ty = 0; ty < grid.gh; ++ty) {
            for (int tx = 0; tx < grid.gw; ++tx) {
                t.data[(size_t(cls) * grid.gh + ty) * grid.gw + tx] =
                    float(grid.at(ty, tx, geom::SoilClass(cls)));
            }
        }
    }
    return t;
}

struct Box {
    double cx, cy, w, h;
};

std::map<std::string, std::vector<Box>> load_boxes_csv(const std::string& path) {
    std::map<std::string, std::vector<Box>> boxes;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open boxes file: " + path);
    std::string line;
    std::getline(in, line);  // header
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id, f;
        Box b{};
        if (!std::getline(ss, id, ',')) throw DataError(path + ": bad line " + std::to_string(line_no));
        try {
            std::getline(ss, f, ',');
            b.cx = std::stod(f);
            std::getline(ss, f, ',');
            b.cy = std::stod(f);
            std::getline(ss, f, ',');
            b.w = std::stod(f);
            std::getline(ss, f, ',');
            b.h = std::stod(f);
        } catch (const std::exception&) {
            throw DataError(path + ": bad line " + std::to_string(line_no));
        }
        boxes[id].push_back(b);
    }
    return boxes;
}

}  // namespace

std::vector<Sample> load_samples(const data::DatasetManifest& manifest,
                                 const std::string& data_dir, const nn::ModelConfig& model_cfg,
                                 const DataOptions& opts, data::Split split) {
    const bool tile_mode = model_cfg.soil_head.mode == nn::HeadMode::TileLevel;
    const int ds = model_cfg.encoder.total_downsample();
    const int fh = model_cfg.input_h / ds;
    const int fw = model_cfg.input_w / ds;

    std::map<std::string, std::vector<Box>> boxes;
    if (opts.need_det) boxes = load_boxes_csv((fs::path(data_dir) / "boxes.csv").string());

    std::vector<Sample> samples;
    for (const auto& rec : manifest.records) {
        auto it = manifest.split_assignment.find(rec.frame_id);
        if (it == manifest.split_assignment.end() || it->second != split) continue;
        if (!opts.cameras.empty() && !opts.cameras.count(rec.camera)) continue;
        // GAN-augmented frames carry an image-level label only
        if (rec.augmented && (tile_mode || opts.need_seg || opts.need_det)) continue;
        if (rec.width != model_cfg.input_w || rec.height != model_cfg.input_h) {
            throw DataError("frame " + rec.frame_id + " is " + std::to_string(rec.width) + "x" +
                            std::to_string(rec.height) + ", model expects " +
                            std::to_string(model_cfg.input_w) + "x" +
                            std::to_string(model_cfg.input_h));
        }

        Sample s;
        s.frame_id = rec.frame_id;
        s.camera = rec.camera;
        s.input = image_to_tensor(io::load_ppm((fs::path(data_dir) / rec.image_path).string()));
        s.image_label = data::image_level_label(rec, opts.min_area_frac);

        if (tile_mode) {
            geom::TileSpec spec{rec.width, rec.height, model_cfg.tile_size};
            geom::TileGrid grid = geom::threshold_grid(
                geom::rasterize_to_grid(rec.polygons, spec, opts.samples_per_side), opts.tau);
            s.soil_target = tile_grid_to_target(grid);
        } else {
            s.soil_target = nn::Tensor({2, 1, 1});
            s.soil_target.data[0] = float(s.image_label.opaque);
            s.soil_target.data[1] = float(s.image_label.transparent);
        }

        if (opts.need_seg) {
            fs::path seg_path = fs::path(data_dir) / "seg" / (rec.frame_id + ".pgm");
            io::Mask mask = io::load_pgm(seg_path.string());
            if (mask.width != rec.width || mask.height != rec.height) {
                throw DataError("seg mask dims mismatch for frame " + rec.frame_id);
            }
            s.seg_target.assign(mask.data.begin(), mask.data.end());
        }

        if (opts.need_det) {
            s.det_obj = nn::Tensor({1, fh, fw});
            s.det_box = nn::Tensor({4, fh, fw});
            auto bit = boxes.find(rec.frame_id);
            if (bit != boxes.end()) {
                for (const Box& b : bit->second) {
                    int cell_x = std::min(fw - 1, int(b.cx / ds));
                    int cell_y = std::min(fh - 1, int(b.cy / ds));
                    size_t cell = size_t(cell_y) * fw + cell_x;
                    s.det_obj.data[cell] = 1.0f;
                    s.det_box.data[0 * size_t(fh) * fw + cell] = float(b.cx / ds - cell_x);
                    s.det_box.data[1 * size_t(fh) * fw + cell] = float(b.cy / ds - cell_y);
                    s.det_box.data[2 * size_t(fh) * fw + cell] = float(b.w / model_cfg.input_w);
                    s.det_box.data[3 * size_t(fh) * fw + cell] = float(b.h / model_cfg.input_h);
                }
            }
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

struct Batch {
    nn::Tensor input;
    nn::Tensor soil_target;
    std::vector<int> seg_target;
    nn::Tensor det_obj, det_box;
};

Batch assemble(const std::vector<Sample>& samples, const std::vector<size_t>& order, size_t pos,
               size_t count, bool need_seg, bool need_det) {
    const Sample& first = samples[order[pos]];
    const int b = int(count);

    Batch batch;
    auto stack = [&](auto member) {
        const nn::Tensor& proto = first.*member;
        std::vector<int> shape{b};
        shape.insert(shape.end(), proto.shape.begin(), proto.shape.end());
        nn::Tensor out(shape);
        for (size_t i = 0; i < count; ++i) {
            const nn::Tensor& src = samples[order[pos + i]].*member;
            std::copy(src.data.begin(), src.data.end(), out.data.begin() + int64_t(i) * src.size());
        }
        return out;
    };

    batch.input = stack(&Sample::input);
    batch.soil_target = stack(&Sample::soil_target);
    if (need_seg) {
        for (size_t i = 0; i < count; ++i) {
            const auto& t = samples[order[pos + i]].seg_target;
            batch.seg_target.insert(batch.seg_target.end(), t.begin(), t.end());
        }
    }
    if (need_det) {
        batch.det_obj = stack(&Sample::det_obj);
        batch.det_box = stack(&Sample::det_box);
    }
    return batch;
}

}  // namespace

TrainResult train_soilnet(const nn::ModelConfig& model_cfg, const TrainConfig& tcfg,
                          const std::vector<Sample>& samples) {
    if (samples.empty()) throw DataError("training set is empty");
    if (tcfg.task_weights.size() != 3) throw ConfigError("expected 3 task weights");
    if (tcfg.batch < 1 || tcfg.steps < 0) throw ConfigError("bad batch/steps");
    const double w_soil = tcfg.task_weights[0];
    const double w_seg = tcfg.task_weights[1];
    const double w_det = tcfg.task_weights[2];
    if (w_seg > 0 && !model_cfg.with_seg) throw ConfigError("seg weight set but head disabled");
    if (w_det > 0 && !model_cfg.with_det) throw ConfigError("det weight set but head disabled");

    TrainResult result;
    result.net = std::make_unique<nn::SoilNet>(model_cfg);
    nn::init_params(result.net->params(), derive_seed(tcfg.seed, 0x11));

    nn::AdamConfig acfg;
    acfg.lr = float(tcfg.lr);
    nn::Adam opt(result.net->params().all(), acfg);

    const size_t n = samples.size();
    const size_t batch = std::min<size_t>(size_t(tcfg.batch), n);
    const size_t batches_per_epoch = (n + batch - 1) / batch;

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    for (int step = 1; step <= tcfg.steps; ++step) {
        size_t epoch = size_t(step - 1) / batches_per_epoch;
        size_t slot = size_t(step - 1) % batches_per_epoch;
        if (slot == 0) {
            Rng rng(derive_seed(tcfg.seed, 0xE90 + epoch));
            rng.shuffle(order);
        }
        size_t pos = slot * batch;
        size_t count = std::min(batch, n - pos);

        Batch b = assemble(samples, order, pos, count, w_seg > 0, w_det > 0);
        result.net->params().zero_grads();
        nn::SoilNet::Outputs out = result.net->forward_all(b.input);

        std::vector<double> losses(3, 0.0);
        nn::Tensor dsoil, dseg, ddet;
        if (w_soil > 0) {
            nn::LossGrad lg = nn::bce_loss(out.soil_probs, b.soil_target);
            losses[0] = lg.loss;
            dsoil = std::move(lg.grad);
            double scale = nn::multitask_weight_scale(tcfg.task_weights, 0);
            for (float& v : dsoil.data) v = float(v * scale);
        }
        if (w_seg > 0) {
            nn::LossGrad lg = nn::softmax_ce_loss(out.seg_logits, b.seg_target);
            losses[1] = lg.loss;
            dseg = std::move(lg.grad);
            double scale = nn::multitask_weight_scale(tcfg.task_weights, 1);
            for (float& v : dseg.data) v = float(v * scale);
        }
        if (w_det > 0) {
            nn::DetLossResult dl = nn::det_loss(out.det_out, b.det_obj, b.det_box);
            losses[2] = dl.loss;
            ddet = std::move(dl.dout);
            double scale = nn::multitask_weight_scale(tcfg.task_weights, 2);
            for (float& v : ddet.data) v = float(v * scale);
        }

        double total = nn::multitask_loss(losses, tcfg.task_weights);
        if (!std::isfinite(total)) {
            throw NumericError("training loss diverged at step " + std::to_string(step));
        }

        result.net->backward_all(dsoil, dseg, ddet);
        opt.step();

        if (tcfg.log_every > 0 && (step % tcfg.log_every == 0 || step == tcfg.steps)) {
            result.logs.push_back({step, total, losses[0], losses[1], losses[2]});
        }
    }
    return result;
}

namespace {

geom::TileGrid probs_to_grid(const nn::Tensor& probs, int item) {
    const int gh = probs.dim(2), gw = probs.dim(3);
    geom::TileGrid grid(gh, gw);
    for (int cls = 0; cls < 2; ++cls) {
        for (int ty = 0; ty < gh; ++ty) {
            for (int tx = 0; tx < gw; ++tx) {
                grid.at(ty, tx, geom::SoilClass(cls)) = probs.at4(item, cls, ty, tx) > 0.5f;
            }
        }
    }
    return grid;
}

}  // namespace

std::vector<geom::TileGrid> predict_tile_grids(nn::SoilNet& net, const std::vector<Sample>& samples,
                                               int batch) {
    std::vector<geom::TileGrid> grids;
    for (size_t pos = 0; pos < samples.size(); pos += size_t(batch)) {
        size_t count = std::min(size_t(batch), samples.size() - pos);
        std::vector<int> shape{int(count)};
        shape.insert(shape.end(), samples[pos].input.shape.begin(), samples[pos].input.shape.end());
        nn::Tensor input(shape);
        for (size_t i = 0; i < count; ++i) {
            const auto& src = samples[pos + i].input;
            std::copy(src.data.begin(), src.data.end(),
                      input.data.begin() + int64_t(i) * src.size());
        }
        nn::Tensor probs = net.forward_soiling(input);
        for (size_t i = 0; i < count; ++i) grids.push_back(probs_to_grid(probs, int(i)));
    }
    return grids;
}

std::vector<data::SoilingClassVector> predict_image_labels(nn::SoilNet& net,
                                                           const std::vector<Sample>& samples,
                                                           int batch) {
    std::vector<data::SoilingClassVector> labels;
    for (const geom::TileGrid& grid : predict_tile_grids(net, samples, batch)) {
        data::SoilingClassVector v;
        for (int ty = 0; ty < grid.gh; ++ty) {
            for (int tx = 0; tx < grid.gw; ++tx) {
                v.opaque |= grid.at(ty, tx, geom::SoilClass::Opaque);
                v.transparent |= grid.at(ty, tx, geom::SoilClass::Transparent);
            }
        }
        labels.push_back(v);
    }
    return labels;
}

std::vector<geom::TileGrid> tile_targets(const std::vector<Sample>& samples) {
    std::vector<geom::TileGrid> grids;
    for (const Sample& s : samples) {
        const int gh = s.soil_target.dim(1), gw = s.soil_target.dim(2);
        geom::TileGrid grid(gh, gw);
        for (int cls = 0; cls < 2; ++cls) {
            for (int ty = 0; ty < gh; ++ty) {
                for (int tx = 0; tx < gw; ++tx) {
                    grid.at(ty, tx, geom::SoilClass(cls)) =
                        s.soil_target.data[(size_t(cls) * gh + ty) * gw + tx] > 0.5f;
                }
            }
        }
        grids.push_back(std::move(grid));
    }
    return grids;
}

std::vector<data::SoilingClassVector> image_labels(const std::vector<Sample>& samples) {
    std::vector<data::SoilingClassVector> labels;
    for (const Sample& s : samples) labels.push_back(s.image_label);
    return labels;
}

}  // namespace soil::train
