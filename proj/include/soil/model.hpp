#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "soil/common.hpp"
#include "soil/layers.hpp"

namespace soil::nn {

// Shared backbone: stem conv + four residual stages. Total downsampling has
// to land on the soiling head's tile grid.
struct EncoderConfig {
    int in_channels = 3;
    int stem_channels = 8;
    int stem_stride = 2;
    std::array<int, 4> stage_channels{8, 16, 24, 32};
    std::array<int, 4> stage_strides{2, 2, 1, 1};

    int total_downsample() const {
        int d = stem_stride;
        for (int s : stage_strides) d *= s;
        return d;
    }
    int out_channels() const { return stage_channels[3]; }
};

class Encoder {
public:
    Encoder(ParamStore& ps, const EncoderConfig& cfg);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    Conv2D stem_;
    ReLU stem_relu_;
    std::vector<ResidualBlock> stages_;
};

enum class HeadMode { TileLevel, ImageLevel };

// Two 3x3 convolutions and a softsign output mapped to (0,1). The
// image-level variant reuses the same two convolutions with larger strides
// so the output collapses to a single cell.
struct SoilingHeadConfig {
    HeadMode mode = HeadMode::TileLevel;
    int hidden_channels = 16;
    // 0 = derive automatically from the feature grid (image-level mode).
    int s1y = 0, s1x = 0, s2y = 0, s2x = 0;
};

class SoilingHead {
public:
    SoilingHead(ParamStore& ps, const SoilingHeadConfig& cfg, int in_channels, int feat_h,
                int feat_w);

    Tensor forward(const Tensor& features);  // probabilities [N,2,gh,gw]
    Tensor backward(const Tensor& dprobs);

    int out_h() const { return out_h_; }
    int out_w() const { return out_w_; }

private:
    Conv2D conv1_, conv2_;
    ReLU relu_;
    Softsign softsign_;
    int out_h_, out_w_;
};

// FCN-style upsampler back to input resolution; one conv+relu+2x stage per
// factor of two, then a 1x-resolution classifier conv.
struct SegHeadConfig {
    std::array<int, 3> channels{16, 12, 8};
    int num_classes = 3;
};

class SegHead {
public:
    SegHead(ParamStore& ps, const SegHeadConfig& cfg, int in_channels, int upsample_factor);

    Tensor forward(const Tensor& features);  // logits [N,classes,H,W]
    Tensor backward(const Tensor& dlogits);

private:
    std::vector<Conv2D> convs_;
    std::vector<ReLU> relus_;
    std::vector<Upsample2x> ups_;
    std::optional<Conv2D> classifier_;
};

// Single conv producing objectness + 4 box offsets per cell.
class DetHead {
public:
    DetHead(ParamStore& ps, int in_channels);

    Tensor forward(const Tensor& features);  // [N,5,gh,gw]
    Tensor backward(const Tensor& dout);

private:
    Conv2D conv_;
};

// Objectness BCE everywhere + squared box error on cells that contain a
// ground-truth center.
struct DetLossResult {
    double loss = 0.0;
    double obj_loss = 0.0;
    double box_loss = 0.0;
    Tensor dout;
};
DetLossResult det_loss(const Tensor& det_out, const Tensor& obj_target, const Tensor& box_target);

struct ModelConfig {
    int input_w = 128;
    int input_h = 80;
    int tile_size = 8;
    EncoderConfig encoder;
    SoilingHeadConfig soil_head;
    SegHeadConfig seg_head;
    bool with_seg = false;
    bool with_det = false;

    int grid_w() const { return (input_w + tile_size - 1) / tile_size; }
    int grid_h() const { return (input_h + tile_size - 1) / tile_size; }

    void validate() const;       // throws ConfigError
    std::string canonical() const;
    uint64_t digest() const;
};

// The full network: shared encoder plus soiling head, with optional
// segmentation and detection heads for multi-task training.
class SoilNet {
public:
    explicit SoilNet(const ModelConfig& cfg);

    struct Outputs {
        Tensor soil_probs;  // [N,2,gh,gw]
        Tensor seg_logits;  // [N,classes,H,W] when enabled
        Tensor det_out;     // [N,5,fh,fw] when enabled
    };

    Tensor forward_soiling(const Tensor& x);
    Outputs forward_all(const Tensor& x);

    // Gradients for disabled heads are passed as empty tensors.
    void backward_all(const Tensor& dsoil, const Tensor& dseg, const Tensor& ddet);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const ModelConfig& config() const { return cfg_; }
    int feat_h() const { return feat_h_; }
    int feat_w() const { return feat_w_; }

private:
    ModelConfig cfg_;
    ParamStore params_;
    int feat_h_, feat_w_;
    Encoder encoder_;
    SoilingHead soil_head_;
    std::optional<SegHead> seg_head_;
    std::optional<DetHead> det_head_;
};

// Weighted average of per-task losses: sum(w*L) / sum(w).
double multitask_loss(const std::vector<double>& task_losses, const std::vector<double>& weights);

// Backward scale of task i under the weighted average.
double multitask_weight_scale(const std::vector<double>& weights, size_t task);

// Returns the grid entry maximizing val_metric(train_fn(weights)); ties keep
// the earliest entry. train_fn failures are rethrown with the offending
// weight vector named.
template <typename TrainFn, typename MetricFn>
std::vector<double> grid_search(const std::vector<std::vector<double>>& weight_grid,
                                TrainFn&& train_fn, MetricFn&& val_metric) {
    if (weight_grid.empty()) throw ConfigError("grid_search: empty weight grid");

    auto describe = [](const std::vector<double>& w) {
        std::string s = "(";
        for (size_t i = 0; i < w.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(w[i]);
        }
        return s + ")";
    };

    std::vector<double> best;
    double best_metric = 0.0;
    bool have_best = false;
    for (const auto& weights : weight_grid) {
        double metric;
        try {
            auto trained = train_fn(weights);
            metric = val_metric(trained);
        } catch (const ConfigError& e) {
            throw ConfigError("grid_search: weights " + describe(weights) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("grid_search: weights " + describe(weights) + ": " + e.what());
        } catch (const std::exception& e) {
            throw DataError("grid_search: weights " + describe(weights) + ": " + e.what());
        }
        if (!have_best || metric > best_metric) {
            best = weights;
            best_metric = metric;
            have_best = true;
        }
    }
    return best;
}

}  // namespace soil::nn
