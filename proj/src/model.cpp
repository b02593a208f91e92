#include "soil/model.hpp"

#include <cmath>
#include <sstream>

namespace soil::nn {

namespace {

int conv_out(int in, int k, int pad, int stride) { return (in + 2 * pad - k) / stride + 1; }

// ceil division chain for 3x3/pad-1 and the 1x1 projection path
int downsampled(int in, int stride) { return (in + stride - 1) / stride; }

}  // namespace

Encoder::Encoder(ParamStore& ps, const EncoderConfig& cfg)
    : stem_(ps, "encoder.stem", cfg.in_channels, cfg.stem_channels, 3, cfg.stem_stride,
            cfg.stem_stride, 1, 1) {
    stages_.reserve(4);
    int cin = cfg.stem_channels;
    for (int i = 0; i < 4; ++i) {
        stages_.emplace_back(ps, "encoder.stage" + std::to_string(i + 1), cin,
                             cfg.stage_channels[size_t(i)], cfg.stage_strides[size_t(i)]);
        cin = cfg.stage_channels[size_t(i)];
    }
}

Tensor Encoder::forward(const Tensor& x) {
    Tensor h = stem_relu_.forward(stem_.forward(x));
    for (auto& stage : stages_) h = stage.forward(h);
    return h;
}

Tensor Encoder::backward(const Tensor& dy) {
    Tensor d = dy;
    for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) d = it->backward(d);
    return stem_.backward(stem_relu_.backward(d));
}

namespace {

struct HeadStrides {
    int s1y, s1x, s2y, s2x;
};

HeadStrides resolve_head_strides(const SoilingHeadConfig& cfg, int feat_h, int feat_w) {
    HeadStrides s{cfg.s1y, cfg.s1x, cfg.s2y, cfg.s2x};
    if (cfg.mode == HeadMode::TileLevel) {
        if (s.s1y == 0) s.s1y = 1;
        if (s.s1x == 0) s.s1x = 1;
        if (s.s2y == 0) s.s2y = 1;
        if (s.s2x == 0) s.s2x = 1;
        return s;
    }
    // Image level: first conv halves, second conv swallows what is left so a
    // single cell remains whatever the feature grid is.
    if (s.s1y == 0) s.s1y = feat_h > 1 ? 2 : 1;
    if (s.s1x == 0) s.s1x = feat_w > 1 ? 2 : 1;
    int mid_h = conv_out(feat_h, 3, 1, s.s1y);
    int mid_w = conv_out(feat_w, 3, 1, s.s1x);
    if (s.s2y == 0) s.s2y = mid_h;
    if (s.s2x == 0) s.s2x = mid_w;
    return s;
}

}  // namespace

SoilingHead::SoilingHead(ParamStore& ps, const SoilingHeadConfig& cfg, int in_channels, int feat_h,
                         int feat_w)
    : conv1_(ps, "soil_head.conv1", in_channels, cfg.hidden_channels, 3,
             resolve_head_strides(cfg, feat_h, feat_w).s1y,
             resolve_head_strides(cfg, feat_h, feat_w).s1x, 1, 1),
      conv2_(ps, "soil_head.conv2", cfg.hidden_channels, 2, 3,
             resolve_head_strides(cfg, feat_h, feat_w).s2y,
             resolve_head_strides(cfg, feat_h, feat_w).s2x, 1, 1) {
    HeadStrides s = resolve_head_strides(cfg, feat_h, feat_w);
    int mid_h = conv_out(feat_h, 3, 1, s.s1y);
    int mid_w = conv_out(feat_w, 3, 1, s.s1x);
    out_h_ = conv_out(mid_h, 3, 1, s.s2y);
    out_w_ = conv_out(mid_w, 3, 1, s.s2x);
    if (cfg.mode == HeadMode::ImageLevel && (out_h_ != 1 || out_w_ != 1)) {
        throw ConfigError("image-level soiling head must collapse to 1x1, got " +
                          std::to_string(out_h_) + "x" + std::to_string(out_w_));
    }
}

Tensor SoilingHead::forward(const Tensor& features) {
    Tensor y = softsign_.forward(conv2_.forward(relu_.forward(conv1_.forward(features))));
    // softsign lands in (-1,1); the loss wants probabilities
    for (float& v : y.data) v = 0.5f * (v + 1.0f);
    return y;
}

Tensor SoilingHead::backward(const Tensor& dprobs) {
    Tensor dy = dprobs;
    for (float& v : dy.data) v *= 0.5f;
    return conv1_.backward(relu_.backward(conv2_.backward(softsign_.backward(dy))));
}

SegHead::SegHead(ParamStore& ps, const SegHeadConfig& cfg, int in_channels, int upsample_factor) {
    int levels = 0;
    for (int f = upsample_factor; f > 1; f /= 2) {
        if (f % 2) throw ConfigError("seg head needs a power-of-two downsample factor");
        ++levels;
    }
    if (levels > 3) throw ConfigError("seg head supports downsample factors up to 8");

    int cin = in_channels;
    convs_.reserve(size_t(levels));
    for (int i = 0; i < levels; ++i) {
        convs_.emplace_back(ps, "seg_head.up" + std::to_string(i + 1), cin,
                            cfg.channels[size_t(i)], 3, 1, 1, 1, 1);
        cin = cfg.channels[size_t(i)];
    }
    relus_.resize(size_t(levels));
    ups_.resize(size_t(levels));
    classifier_.emplace(ps, "seg_head.classifier", cin, cfg.num_classes, 3, 1, 1, 1, 1);
}

Tensor SegHead::forward(const Tensor& features) {
    Tensor h = features;
    for (size_t i = 0; i < convs_.size(); ++i) {
        h = ups_[i].forward(relus_[i].forward(convs_[i].forward(h)));
    }
    return classifier_->forward(h);
}

Tensor SegHead::backward(const Tensor& dlogits) {
    Tensor d = classifier_->backward(dlogits);
    for (size_t i = convs_.size(); i-- > 0;) {
        d = convs_[i].backward(relus_[i].backward(ups_[i].backward(d)));
    }
    return d;
}

DetHead::DetHead(ParamStore& ps, int in_channels)
    : conv_(ps, "det_head.conv", in_channels, 5, 3, 1, 1, 1, 1) {}

Tensor DetHead::forward(const Tensor& features) { return conv_.forward(features); }

Tensor DetHead::backward(const Tensor& dout) { return conv_.backward(dout); }

DetLossResult det_loss(const Tensor& det_out, const Tensor& obj_target, const Tensor& box_target) {
    const int n = det_out.dim(0), gh = det_out.dim(2), gw = det_out.dim(3);
    if (det_out.dim(1) != 5) throw DataError("det_loss: head output must have 5 channels");
    if (obj_target.shape != std::vector<int>{n, 1, gh, gw} ||
        box_target.shape != std::vector<int>{n, 4, gh, gw}) {
        throw DataError("det_loss: target shape mismatch");
    }

    DetLossResult res;
    res.dout = Tensor(det_out.shape);

    // objectness: sigmoid + BCE over all cells
    Tensor logits({n, 1, gh, gw});
    for (int in = 0; in < n; ++in)
        for (int y = 0; y < gh; ++y)
            for (int x = 0; x < gw; ++x) logits.at4(in, 0, y, x) = det_out.at4(in, 0, y, x);
    Tensor probs = sigmoid_forward(logits);
    LossGrad obj = bce_loss(probs, obj_target);
    Tensor dlogits = sigmoid_backward(probs, obj.grad);
    res.obj_loss = obj.loss;

    int64_t positives = 0;
    for (float v : obj_target.data) {
        if (v > 0.5f) ++positives;
    }
    double box_acc = 0.0;
    const double box_scale = 1.0 / (4.0 * double(std::max<int64_t>(1, positives)));
    for (int in = 0; in < n; ++in) {
        for (int y = 0; y < gh; ++y) {
            for (int x = 0; x < gw; ++x) {
                res.dout.at4(in, 0, y, x) = dlogits.at4(in, 0, y, x);
                if (obj_target.at4(in, 0, y, x) <= 0.5f) continue;
                for (int c = 0; c < 4; ++c) {
                    double diff =
                        double(det_out.at4(in, c + 1, y, x)) - double(box_target.at4(in, c, y, x));
                    box_acc += diff * diff * box_scale;
                    res.dout.at4(in, c + 1, y, x) = float(2.0 * diff * box_scale);
                }
            }
        }
    }
    res.box_loss = box_acc;
    res.loss = res.obj_loss + res.box_loss;
    return res;
}

void ModelConfig::validate() const {
    if (input_w < 8 || input_h < 8) throw ConfigError("model input dims too small");
    if (tile_size < 1) throw ConfigError("tile_size must be >= 1");
    if (encoder.stem_stride < 1) throw ConfigError("stem stride must be >= 1");
    for (int s : encoder.stage_strides) {
        if (s < 1) throw ConfigError("stage strides must be >= 1");
    }
    for (int c : encoder.stage_channels) {
        if (c < 1) throw ConfigError("stage channels must be >= 1");
    }
    if (soil_head.mode == HeadMode::TileLevel) {
        int fh = downsampled(input_h, encoder.stem_stride);
        int fw = downsampled(input_w, encoder.stem_stride);
        for (int s : encoder.stage_strides) {
            fh = downsampled(fh, s);
            fw = downsampled(fw, s);
        }
        if (fh != grid_h() || fw != grid_w()) {
            throw ConfigError("encoder output " + std::to_string(fh) + "x" + std::to_string(fw) +
                              " does not match the " + std::to_string(grid_h()) + "x" +
                              std::to_string(grid_w()) + " tile grid");
        }
    }
}

std::string ModelConfig::canonical() const {
    std::ostringstream os;
    os << "input=" << input_w << "x" << input_h << ";tile=" << tile_size
       << ";stem=" << encoder.stem_channels << "/" << encoder.stem_stride << ";stages=";
    for (int i = 0; i < 4; ++i) {
        os << encoder.stage_channels[size_t(i)] << "/" << encoder.stage_strides[size_t(i)]
           << (i == 3 ? "" : ",");
    }
    os << ";head=" << (soil_head.mode == HeadMode::TileLevel ? "tile" : "image") << "/"
       << soil_head.hidden_channels << "/" << soil_head.s1y << "," << soil_head.s1x << ","
       << soil_head.s2y << "," << soil_head.s2x;
    os << ";seg=" << (with_seg ? 1 : 0) << "/" << seg_head.num_classes << "/"
       << seg_head.channels[0] << "," << seg_head.channels[1] << "," << seg_head.channels[2];
    os << ";det=" << (with_det ? 1 : 0);
    return os.str();
}

uint64_t ModelConfig::digest() const { return fnv1a64(canonical()); }

SoilNet::SoilNet(const ModelConfig& cfg)
    : cfg_(cfg),
      feat_h_([&] {
          cfg.validate();
          int fh = downsampled(cfg.input_h, cfg.encoder.stem_stride);
          for (int s : cfg.encoder.stage_strides) fh = downsampled(fh, s);
          return fh;
      }()),
      feat_w_([&] {
          int fw = downsampled(cfg.input_w, cfg.encoder.stem_stride);
          for (int s : cfg.encoder.stage_strides) fw = downsampled(fw, s);
          return fw;
      }()),
      encoder_(params_, cfg.encoder),
      soil_head_(params_, cfg.soil_head, cfg.encoder.out_channels(), feat_h_, feat_w_) {
    if (cfg.with_seg) {
        seg_head_.emplace(params_, cfg.seg_head, cfg.encoder.out_channels(),
                          cfg.encoder.total_downsample());
    }
    if (cfg.with_det) {
        det_head_.emplace(params_, cfg.encoder.out_channels());
    }
}

Tensor SoilNet::forward_soiling(const Tensor& x) {
    return soil_head_.forward(encoder_.forward(x));
}

SoilNet::Outputs SoilNet::forward_all(const Tensor& x) {
    Tensor features = encoder_.forward(x);
    Outputs out;
    out.soil_probs = soil_head_.forward(features);
    if (seg_head_) out.seg_logits = seg_head_->forward(features);
    if (det_head_) out.det_out = det_head_->forward(features);
    return out;
}

void SoilNet::backward_all(const Tensor& dsoil, const Tensor& dseg, const Tensor& ddet) {
    Tensor dfeat;
    if (dsoil.size() > 0) dfeat = soil_head_.backward(dsoil);
    if (dseg.size() > 0) {
        if (!seg_head_) throw DataError("seg gradient passed but head disabled");
        Tensor d = seg_head_->backward(dseg);
        if (dfeat.size() == 0) {
            dfeat = std::move(d);
        } else {
            for (size_t i = 0; i < dfeat.data.size(); ++i) dfeat.data[i] += d.data[i];
        }
    }
    if (ddet.size() > 0) {
        if (!det_head_) throw DataError("det gradient passed but head disabled");
        Tensor d = det_head_->backward(ddet);
        if (dfeat.size() == 0) {
            dfeat = std::move(d);
        } else {
            for (size_t i = 0; i < dfeat.data.size(); ++i) dfeat.data[i] += d.data[i];
        }
    }
    if (dfeat.size() == 0) throw DataError("backward_all called with no gradients");
    encoder_.backward(dfeat);
}

double multitask_loss(const std::vector<double>& task_losses, const std::vector<double>& weights) {
    if (task_losses.size() != weights.size() || task_losses.empty()) {
        throw ConfigError("multitask_loss: losses and weights must have equal nonzero length");
    }
    double wsum = 0.0, acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw ConfigError("multitask_loss: negative weight");
        wsum += weights[i];
        acc += weights[i] * task_losses[i];
    }
    if (wsum <= 0.0) throw ConfigError("multitask_loss: weights sum to zero");
    return acc / wsum;
}

double multitask_weight_scale(const std::vector<double>& weights, size_t task) {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (wsum <= 0.0) throw ConfigError("multitask_weight_scale: weights sum to zero");
    return weights[task] / wsum;
}

}  // namespace soil::nn
