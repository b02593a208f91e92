#pragma once

#include <vector>

#include "soil/tensor.hpp"

namespace soil::nn {

// ---- convolution ------------------------------------------------------

// x: [N,Cin,H,W], w: [Cout,Cin,kh,kw], b: [Cout]. Cross-correlation with
// symmetric zero padding; output Ho = (H + 2*py - kh)/sy + 1.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int sy, int sx, int py,
                      int px);

struct Conv2DGrads {
    Tensor dx, dw, db;
};
Conv2DGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int sy, int sx,
                            int py, int px);

// ---- elementwise activations ------------------------------------------

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

Tensor leaky_relu_forward(const Tensor& x, float slope);
Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, float slope);

// y = x / (1 + |x|)
Tensor softsign_forward(const Tensor& x);
Tensor softsign_backward(const Tensor& x, const Tensor& dy);

Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);  // takes forward output

Tensor tanh_forward(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& dy);  // takes forward output

// nearest-neighbor 2x upsampling
Tensor upsample2x_forward(const Tensor& x);
Tensor upsample2x_backward(const Tensor& dy);

// ---- losses ------------------------------------------------------------

struct LossGrad {
    double loss = 0.0;
    Tensor grad;
};

// Mean over every element of -[t log p + (1-t) log(1-p)] with p clamped to
// [eps, 1-eps], eps = 1e-7. grad is d(loss)/d(p).
LossGrad bce_loss(const Tensor& p, const Tensor& target);

// Mean absolute difference; grad w.r.t. `a`.
LossGrad l1_loss(const Tensor& a, const Tensor& b);

// Mean squared distance to a constant; grad w.r.t. `x`.
LossGrad mse_to_const(const Tensor& x, float c);

// Per-position softmax over the channel dimension of [N,C,H,W].
Tensor softmax_channels(const Tensor& logits);

// Mean cross-entropy against integer class targets (length N*H*W, row-major
// over n,h,w). grad is d(loss)/d(logits).
LossGrad softmax_ce_loss(const Tensor& logits, const std::vector<int>& targets);

}  // namespace soil::nn
