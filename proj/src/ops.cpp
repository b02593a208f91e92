#include "soil/ops.hpp"

#include <algorithm>
#include <cmath>

#include "soil/common.hpp"

namespace soil::nn {

namespace {

struct ConvDims {
    int n, cin, h, w;
    int cout, kh, kw;
    int ho, wo;
    int64_t k() const { return int64_t(cin) * kh * kw; }
    int64_t o() const { return int64_t(ho) * wo; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int sy, int sx, int py, int px) {
    if (x.rank() != 4 || w.rank() != 4) {
        throw DataError("conv2d: expected rank-4 input and weights, got " + x.shape_str() +
                        " and " + w.shape_str());
    }
    if (sy < 1 || sx < 1 || py < 0 || px < 0) throw DataError("conv2d: bad stride/padding");
    ConvDims d{};
    d.n = x.dim(0);
    d.cin = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.cout = w.dim(0);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    if (w.dim(1) != d.cin) {
        throw DataError("conv2d: channel mismatch, input " + x.shape_str() + " weights " +
                        w.shape_str());
    }
    int hpad = d.h + 2 * py - d.kh;
    int wpad = d.w + 2 * px - d.kw;
    if (hpad < 0 || wpad < 0) {
        throw DataError("conv2d: kernel larger than padded input (" + x.shape_str() + ")");
    }
    d.ho = hpad / sy + 1;
    d.wo = wpad / sx + 1;
    return d;
}

// col[k][o] layout, k = (ci*kh + ky)*kw + kx, o = oy*wo + ox
void im2col(const float* x, const ConvDims& d, int sy, int sx, int py, int px, float* col) {
    for (int ci = 0; ci < d.cin; ++ci) {
        for (int ky = 0; ky < d.kh; ++ky) {
            for (int kx = 0; kx < d.kw; ++kx) {
                float* row = col + ((int64_t(ci) * d.kh + ky) * d.kw + kx) * d.o();
                for (int oy = 0; oy < d.ho; ++oy) {
                    int iy = oy * sy - py + ky;
                    float* out = row + int64_t(oy) * d.wo;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(out, out + d.wo, 0.0f);
                        continue;
                    }
                    const float* in = x + (int64_t(ci) * d.h + iy) * d.w;
                    for (int ox = 0; ox < d.wo; ++ox) {
                        int ix = ox * sx - px + kx;
                        out[ox] = (ix >= 0 && ix < d.w) ? in[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, const ConvDims& d, int sy, int sx, int py, int px, float* x) {
    for (int ci = 0; ci < d.cin; ++ci) {
        for (int ky = 0; ky < d.kh; ++ky) {
            for (int kx = 0; kx < d.kw; ++kx) {
                const float* row = col + ((int64_t(ci) * d.kh + ky) * d.kw + kx) * d.o();
                for (int oy = 0; oy < d.ho; ++oy) {
                    int iy = oy * sy - py + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    float* out = x + (int64_t(ci) * d.h + iy) * d.w;
                    const float* in = row + int64_t(oy) * d.wo;
                    for (int ox = 0; ox < d.wo; ++ox) {
                        int ix = ox * sx - px + kx;
                        if (ix >= 0 && ix < d.w) out[ix] += in[ox];
                    }
                }
            }
        }
    }
}

// C[M,N] (+)= A[M,K] * B[K,N]. Column-parallel: every C[m,n] is produced by
// exactly one worker with a fixed k-order, so results are independent of the
// worker count.
void gemm(const float* A, const float* B, float* C, int M, int K, int N, bool accumulate) {
    int64_t grain = std::max<int64_t>(16, (1 << 18) / std::max(1, M * K));
    parallel_for(N, grain, [&](int64_t lo, int64_t hi) {
        for (int m = 0; m < M; ++m) {
            float* crow = C + int64_t(m) * N;
            if (!accumulate) std::fill(crow + lo, crow + hi, 0.0f);
            const float* arow = A + int64_t(m) * K;
            for (int k = 0; k < K; ++k) {
                float a = arow[k];
                if (a == 0.0f) continue;
                const float* brow = B + int64_t(k) * N;
                for (int64_t n = lo; n < hi; ++n) crow[n] += a * brow[n];
            }
        }
    });
}

// C[M,K] += A[M,N] * B[K,N]^T (dot products along N).
void gemm_abt_acc(const float* A, const float* B, float* C, int M, int K, int N) {
    int64_t grain = std::max<int64_t>(4, (1 << 18) / std::max(1, M * N));
    parallel_for(K, grain, [&](int64_t lo, int64_t hi) {
        for (int m = 0; m < M; ++m) {
            const float* arow = A + int64_t(m) * N;
            for (int64_t k = lo; k < hi; ++k) {
                const float* brow = B + k * N;
                float acc = 0.0f;
                for (int n = 0; n < N; ++n) acc += arow[n] * brow[n];
                C[int64_t(m) * K + k] += acc;
            }
        }
    });
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int sy, int sx, int py,
                      int px) {
    ConvDims d = conv_dims(x, w, sy, sx, py, px);
    if (b.size() != d.cout) throw DataError("conv2d: bias size mismatch");

    Tensor y({d.n, d.cout, d.ho, d.wo});
    std::vector<float> col(size_t(d.k() * d.o()));
    for (int n = 0; n < d.n; ++n) {
        im2col(x.ptr() + int64_t(n) * d.cin * d.h * d.w, d, sy, sx, py, px, col.data());
        float* yn = y.ptr() + int64_t(n) * d.cout * d.o();
        gemm(w.ptr(), col.data(), yn, d.cout, int(d.k()), int(d.o()), false);
        for (int co = 0; co < d.cout; ++co) {
            float bias = b.data[size_t(co)];
            float* row = yn + int64_t(co) * d.o();
            for (int64_t o = 0; o < d.o(); ++o) row[o] += bias;
        }
    }
    return y;
}

Conv2DGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int sy, int sx,
                            int py, int px) {
    ConvDims d = conv_dims(x, w, sy, sx, py, px);
    if (dy.rank() != 4 || dy.dim(0) != d.n || dy.dim(1) != d.cout || dy.dim(2) != d.ho ||
        dy.dim(3) != d.wo) {
        throw DataError("conv2d backward: upstream gradient shape " + dy.shape_str() +
                        " does not match forward output");
    }

    Conv2DGrads g;
    g.dx = Tensor(x.shape);
    g.dw = Tensor(w.shape);
    g.db = Tensor({d.cout});

    // w transposed once: wt[k][cout]
    std::vector<float> wt(size_t(d.k()) * d.cout);
    for (int co = 0; co < d.cout; ++co) {
        for (int64_t k = 0; k < d.k(); ++k) {
            wt[size_t(k) * d.cout + co] = w.data[size_t(co) * d.k() + k];
        }
    }

    std::vector<float> col(size_t(d.k() * d.o()));
    std::vector<float> dcol(size_t(d.k() * d.o()));
    for (int n = 0; n < d.n; ++n) {
        const float* dyn = dy.ptr() + int64_t(n) * d.cout * d.o();

        for (int co = 0; co < d.cout; ++co) {
            const float* row = dyn + int64_t(co) * d.o();
            float acc = 0.0f;
            for (int64_t o = 0; o < d.o(); ++o) acc += row[o];
            g.db.data[size_t(co)] += acc;
        }

        im2col(x.ptr() + int64_t(n) * d.cin * d.h * d.w, d, sy, sx, py, px, col.data());
        gemm_abt_acc(dyn, col.data(), g.dw.ptr(), d.cout, int(d.k()), int(d.o()));

        gemm(wt.data(), dyn, dcol.data(), int(d.k()), d.cout, int(d.o()), false);
        col2im_add(dcol.data(), d, sy, sx, py, px, g.dx.ptr() + int64_t(n) * d.cin * d.h * d.w);
    }
    return g;
}

Tensor relu_forward(const Tensor& x) {
    Tensor y(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
    require_same_shape(x, dy, "relu backward");
    Tensor dx(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) dx.data[i] = x.data[i] > 0.0f ? dy.data[i] : 0.0f;
    return dx;
}

Tensor leaky_relu_forward(const Tensor& x, float slope) {
    Tensor y(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        y.data[i] = x.data[i] > 0.0f ? x.data[i] : slope * x.data[i];
    }
    return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy, float slope) {
    require_same_shape(x, dy, "leaky_relu backward");
    Tensor dx(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        dx.data[i] = x.data[i] > 0.0f ? dy.data[i] : slope * dy.data[i];
    }
    return dx;
}

Tensor softsign_forward(const Tensor& x) {
    Tensor y(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        y.data[i] = x.data[i] / (1.0f + std::abs(x.data[i]));
    }
    return y;
}

Tensor softsign_backward(const Tensor& x, const Tensor& dy) {
    require_same_shape(x, dy, "softsign backward");
    Tensor dx(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) {
        float denom = 1.0f + std::abs(x.data[i]);
        dx.data[i] = dy.data[i] / (denom * denom);
    }
    return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
    Tensor y(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = 1.0f / (1.0f + std::exp(-x.data[i]));
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
    require_same_shape(y, dy, "sigmoid backward");
    Tensor dx(y.shape);
    for (size_t i = 0; i < y.data.size(); ++i) {
        dx.data[i] = dy.data[i] * y.data[i] * (1.0f - y.data[i]);
    }
    return dx;
}

Tensor tanh_forward(const Tensor& x) {
    Tensor y(x.shape);
    for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = std::tanh(x.data[i]);
    return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
    require_same_shape(y, dy, "tanh backward");
    Tensor dx(y.shape);
    for (size_t i = 0; i < y.data.size(); ++i) {
        dx.data[i] = dy.data[i] * (1.0f - y.data[i] * y.data[i]);
    }
    return dx;
}

Tensor upsample2x_forward(const Tensor& x) {
    if (x.rank() != 4) throw DataError("upsample2x: expected rank-4 tensor");
    Tensor y({x.dim(0), x.dim(1), x.dim(2) * 2, x.dim(3) * 2});
    for (int n = 0; n < x.dim(0); ++n) {
        for (int c = 0; c < x.dim(1); ++c) {
            for (int h = 0; h < x.dim(2); ++h) {
                for (int w = 0; w < x.dim(3); ++w) {
                    float v = x.at4(n, c, h, w);
                    y.at4(n, c, 2 * h, 2 * w) = v;
                    y.at4(n, c, 2 * h, 2 * w + 1) = v;
                    y.at4(n, c, 2 * h + 1, 2 * w) = v;
                    y.at4(n, c, 2 * h + 1, 2 * w + 1) = v;
                }
            }
        }
    }
    return y;
}

Tensor upsample2x_backward(const Tensor& dy) {
    if (dy.rank() != 4 || dy.dim(2) % 2 || dy.dim(3) % 2) {
        throw DataError("upsample2x backward: bad gradient shape " + dy.shape_str());
    }
    Tensor dx({dy.dim(0), dy.dim(1), dy.dim(2) / 2, dy.dim(3) / 2});
    for (int n = 0; n < dx.dim(0); ++n) {
        for (int c = 0; c < dx.dim(1); ++c) {
            for (int h = 0; h < dx.dim(2); ++h) {
                for (int w = 0; w < dx.dim(3); ++w) {
                    dx.at4(n, c, h, w) = dy.at4(n, c, 2 * h, 2 * w) + dy.at4(n, c, 2 * h, 2 * w + 1) +
                                         dy.at4(n, c, 2 * h + 1, 2 * w) +
                                         dy.at4(n, c, 2 * h + 1, 2 * w + 1);
                }
            }
        }
    }
    return dx;
}

LossGrad bce_loss(const Tensor& p, const Tensor& target) {
    require_same_shape(p, target, "bce_loss");
    if (p.size() == 0) throw DataError("bce_loss: empty input");
    constexpr float kEps = 1e-7f;
    const double inv_n = 1.0 / double(p.size());

    LossGrad out;
    out.grad = Tensor(p.shape);
    double loss = 0.0;
    for (size_t i = 0; i < p.data.size(); ++i) {
        float t = target.data[i];
        float pc = std::clamp(p.data[i], kEps, 1.0f - kEps);
        loss -= t * std::log(double(pc)) + (1.0 - t) * std::log(1.0 - double(pc));
        bool clamped = p.data[i] < kEps || p.data[i] > 1.0f - kEps;
        out.grad.data[i] = clamped ? 0.0f : float((-double(t) / pc + (1.0 - t) / (1.0 - double(pc))) * inv_n);
    }
    out.loss = loss * inv_n;
    return out;
}

LossGrad l1_loss(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "l1_loss");
    if (a.size() == 0) throw DataError("l1_loss: empty input");
    const double inv_n = 1.0 / double(a.size());

    LossGrad out;
    out.grad = Tensor(a.shape);
    double loss = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        float diff = a.data[i] - b.data[i];
        loss += std::abs(double(diff));
        out.grad.data[i] = float((diff > 0.0f ? 1.0 : (diff < 0.0f ? -1.0 : 0.0)) * inv_n);
    }
    out.loss = loss * inv_n;
    return out;
}

LossGrad mse_to_const(const Tensor& x, float c) {
    if (x.size() == 0) throw DataError("mse_to_const: empty input");
    const double inv_n = 1.0 / double(x.size());

    LossGrad out;
    out.grad = Tensor(x.shape);
    double loss = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        double diff = double(x.data[i]) - c;
        loss += diff * diff;
        out.grad.data[i] = float(2.0 * diff * inv_n);
    }
    out.loss = loss * inv_n;
    return out;
}

Tensor softmax_channels(const Tensor& logits) {
    if (logits.rank() != 4) throw DataError("softmax_channels: expected rank-4 tensor");
    const int n = logits.dim(0), c = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
    Tensor probs(logits.shape);
    for (int in = 0; in < n; ++in) {
        for (int ih = 0; ih < h; ++ih) {
            for (int iw = 0; iw < w; ++iw) {
                float mx = logits.at4(in, 0, ih, iw);
                for (int ic = 1; ic < c; ++ic) mx = std::max(mx, logits.at4(in, ic, ih, iw));
                double denom = 0.0;
                for (int ic = 0; ic < c; ++ic) {
                    denom += std::exp(double(logits.at4(in, ic, ih, iw)) - mx);
                }
                for (int ic = 0; ic < c; ++ic) {
                    probs.at4(in, ic, ih, iw) =
                        float(std::exp(double(logits.at4(in, ic, ih, iw)) - mx) / denom);
                }
            }
        }
    }
    return probs;
}

LossGrad softmax_ce_loss(const Tensor& logits, const std::vector<int>& targets) {
    const int n = logits.dim(0), c = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
    if (int64_t(targets.size()) != int64_t(n) * h * w) {
        throw DataError("softmax_ce_loss: target count mismatch");
    }
    Tensor probs = softmax_channels(logits);
    const double inv_n = 1.0 / double(targets.size());

    LossGrad out;
    out.grad = Tensor(logits.shape);
    double loss = 0.0;
    size_t ti = 0;
    for (int in = 0; in < n; ++in) {
        for (int ih = 0; ih < h; ++ih) {
            for (int iw = 0; iw < w; ++iw, ++ti) {
                int t = targets[ti];
                if (t < 0 || t >= c) throw DataError("softmax_ce_loss: class id out of range");
                loss -= std::log(std::max(1e-30, double(probs.at4(in, t, ih, iw))));
                for (int ic = 0; ic < c; ++ic) {
                    float indicator = ic == t ? 1.0f : 0.0f;
                    out.grad.at4(in, ic, ih, iw) =
                        float((double(probs.at4(in, ic, ih, iw)) - indicator) * inv_n);
                }
            }
        }
    }
    out.loss = loss * inv_n;
    return out;
}

}  // namespace soil::nn
