#include "soil/gradcheck.hpp"

#include <cmath>

#include "soil/model.hpp"
#include "soil/ops.hpp"
#include "soil/rng.hpp"

namespace soil::nn {

double finite_diff_rel_err(std::vector<Tensor> inputs, const GradEvalFn& eval, double h) {
    std::vector<Tensor> analytic;
    for (const Tensor& t : inputs) analytic.emplace_back(t.shape);
    eval(inputs, &analytic);

    double num = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (size_t t = 0; t < inputs.size(); ++t) {
        for (size_t i = 0; i < inputs[t].data.size(); ++i) {
            float orig = inputs[t].data[i];
            float xp = float(double(orig) + h);
            float xm = float(double(orig) - h);
            inputs[t].data[i] = xp;
            double lp = eval(inputs, nullptr);
            inputs[t].data[i] = xm;
            double lm = eval(inputs, nullptr);
            inputs[t].data[i] = orig;
            double gn = (lp - lm) / (double(xp) - double(xm));
            double ga = double(analytic[t].data[i]);
            num += (ga - gn) * (ga - gn);
            norm_a += ga * ga;
            norm_n += gn * gn;
        }
    }
    double denom = std::sqrt(norm_a) + std::sqrt(norm_n);
    return std::sqrt(num) / std::max(denom, 1e-12);
}

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo, double hi,
                     double kink_margin = 0.0) {
    Tensor t(std::move(shape));
    for (float& v : t.data) {
        double x = rng.uniform(lo, hi);
        if (kink_margin > 0.0) {
            // keep samples away from |x| < margin so the finite difference
            // never straddles a non-differentiable point
            while (std::abs(x) < kink_margin) x = rng.uniform(lo, hi);
        }
        v = float(x);
    }
    return t;
}

Tensor random_bits(Rng& rng, std::vector<int> shape) {
    Tensor t(std::move(shape));
    for (float& v : t.data) v = rng.next_below(2) ? 1.0f : 0.0f;
    return t;
}

double weighted_sum(const Tensor& y, const Tensor& r) {
    double acc = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) acc += double(y.data[i]) * double(r.data[i]);
    return acc;
}

// probe for a unary op given forward and backward callables
GradCheckCase unary_probe(const std::string& name, Rng& rng, double lo, double hi, double margin,
                          const std::function<Tensor(const Tensor&)>& fwd,
                          const std::function<Tensor(const Tensor&, const Tensor&)>& bwd,
                          double tol) {
    Tensor x = random_tensor(rng, {1, 2, 4, 5}, lo, hi, margin);
    Tensor r = random_tensor(rng, {1, 2, 4, 5}, -1.0, 1.0);
    GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
        Tensor y = fwd(in[0]);
        if (grads) (*grads)[0] = bwd(in[0], r);
        return weighted_sum(y, r);
    };
    double err = finite_diff_rel_err({x}, eval);
    return {name, err, tol, err < tol};
}

// copies flattened inputs [1..] back into the store's parameters
void assign_params(ParamStore& ps, const std::vector<Tensor>& in, size_t offset) {
    const auto& params = ps.all();
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = in[offset + i];
}

void collect_param_grads(const ParamStore& ps, std::vector<Tensor>* grads, size_t offset) {
    const auto& params = ps.all();
    for (size_t i = 0; i < params.size(); ++i) (*grads)[offset + i] = params[i]->grad;
}

std::vector<Tensor> pack_inputs(const Tensor& x, const ParamStore& ps) {
    std::vector<Tensor> inputs{x};
    for (const Param* p : ps.all()) inputs.push_back(p->value);
    return inputs;
}

}  // namespace

std::vector<GradCheckCase> run_all_gradchecks(uint64_t seed) {
    std::vector<GradCheckCase> cases;
    Rng rng(derive_seed(seed, 0x6C));

    // conv2d: gradients w.r.t. input, weights and bias under a random
    // linear functional of the output
    {
        Tensor x = random_tensor(rng, {2, 2, 5, 4}, -1.0, 1.0);
        Tensor w = random_tensor(rng, {3, 2, 3, 3}, -0.7, 0.7);
        Tensor b = random_tensor(rng, {3}, -0.3, 0.3);
        Tensor y0 = conv2d_forward(x, w, b, 1, 1, 1, 1);
        Tensor r = random_tensor(rng, y0.shape, -1.0, 1.0);
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            Tensor y = conv2d_forward(in[0], in[1], in[2], 1, 1, 1, 1);
            if (grads) {
                Conv2DGrads g = conv2d_backward(in[0], in[1], r, 1, 1, 1, 1);
                (*grads)[0] = g.dx;
                (*grads)[1] = g.dw;
                (*grads)[2] = g.db;
            }
            return weighted_sum(y, r);
        };
        double err = finite_diff_rel_err({x, w, b}, eval);
        cases.push_back({"conv2d", err, 1e-3, err < 1e-3});
    }
    // strided conv2d, the encoder's downsampling configuration
    {
        Tensor x = random_tensor(rng, {1, 2, 6, 6}, -1.0, 1.0);
        Tensor w = random_tensor(rng, {3, 2, 3, 3}, -0.7, 0.7);
        Tensor b = random_tensor(rng, {3}, -0.3, 0.3);
        Tensor y0 = conv2d_forward(x, w, b, 2, 2, 1, 1);
        Tensor r = random_tensor(rng, y0.shape, -1.0, 1.0);
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            Tensor y = conv2d_forward(in[0], in[1], in[2], 2, 2, 1, 1);
            if (grads) {
                Conv2DGrads g = conv2d_backward(in[0], in[1], r, 2, 2, 1, 1);
                (*grads)[0] = g.dx;
                (*grads)[1] = g.dw;
                (*grads)[2] = g.db;
            }
            return weighted_sum(y, r);
        };
        double err = finite_diff_rel_err({x, w, b}, eval);
        cases.push_back({"conv2d_stride2", err, 1e-3, err < 1e-3});
    }

    cases.push_back(unary_probe(
        "relu", rng, -1.5, 1.5, 0.05, relu_forward,
        [](const Tensor& x, const Tensor& dy) { return relu_backward(x, dy); }, 1e-3));
    cases.push_back(unary_probe(
        "leaky_relu", rng, -1.5, 1.5, 0.05,
        [](const Tensor& x) { return leaky_relu_forward(x, 0.2f); },
        [](const Tensor& x, const Tensor& dy) { return leaky_relu_backward(x, dy, 0.2f); }, 1e-3));
    cases.push_back(unary_probe(
        "softsign", rng, -2.0, 2.0, 0.0, softsign_forward,
        [](const Tensor& x, const Tensor& dy) { return softsign_backward(x, dy); }, 1e-3));
    cases.push_back(unary_probe(
        "sigmoid", rng, -2.0, 2.0, 0.0, sigmoid_forward,
        [](const Tensor& x, const Tensor& dy) {
            return sigmoid_backward(sigmoid_forward(x), dy);
        },
        1e-3));
    cases.push_back(unary_probe(
        "tanh", rng, -2.0, 2.0, 0.0, tanh_forward,
        [](const Tensor& x, const Tensor& dy) { return tanh_backward(tanh_forward(x), dy); },
        1e-3));
    // upsample2x projects onto an output-shaped functional
    {
        Tensor x = random_tensor(rng, {1, 2, 3, 4}, -1.0, 1.0);
        Tensor r = random_tensor(rng, {1, 2, 6, 8}, -1.0, 1.0);
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            Tensor y = upsample2x_forward(in[0]);
            if (grads) (*grads)[0] = upsample2x_backward(r);
            return weighted_sum(y, r);
        };
        double err = finite_diff_rel_err({x}, eval);
        cases.push_back({"upsample2x", err, 1e-3, err < 1e-3});
    }

    // binary cross entropy w.r.t. probabilities
    {
        Tensor p = random_tensor(rng, {2, 2, 2, 2}, 0.15, 0.85);
        Tensor t = random_bits(rng, {2, 2, 2, 2});
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            LossGrad lg = bce_loss(in[0], t);
            if (grads) (*grads)[0] = lg.grad;
            return lg.loss;
        };
        double err = finite_diff_rel_err({p}, eval);
        cases.push_back({"bce", err, 1e-3, err < 1e-3});
    }

    // softmax cross entropy w.r.t. logits
    {
        Tensor logits = random_tensor(rng, {2, 3, 4, 4}, -1.0, 1.0);
        std::vector<int> targets;
        for (int i = 0; i < 2 * 4 * 4; ++i) targets.push_back(int(rng.next_below(3)));
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            LossGrad lg = softmax_ce_loss(in[0], targets);
            if (grads) (*grads)[0] = lg.grad;
            return lg.loss;
        };
        double err = finite_diff_rel_err({logits}, eval);
        cases.push_back({"softmax_ce", err, 1e-3, err < 1e-3});
    }

    // L1 with operands kept apart so the kink is never straddled
    {
        Tensor a = random_tensor(rng, {1, 3, 8, 8}, 0.1, 1.0);
        Tensor b = random_tensor(rng, {1, 3, 8, 8}, -1.0, -0.1);
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            LossGrad lg = l1_loss(in[0], b);
            if (grads) (*grads)[0] = lg.grad;
            return lg.loss;
        };
        double err = finite_diff_rel_err({a}, eval);
        cases.push_back({"l1", err, 1e-2, err < 1e-2});
    }

    // least-squares GAN objectives w.r.t. discriminator scores
    {
        Tensor real = random_tensor(rng, {2, 1, 3, 3}, -0.5, 1.5);
        Tensor fake = random_tensor(rng, {2, 1, 3, 3}, -0.5, 1.5);
        GradEvalFn d_eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            LossGrad lr = mse_to_const(in[0], 1.0f);
            LossGrad lf = mse_to_const(in[1], 0.0f);
            if (grads) {
                (*grads)[0] = lr.grad;
                (*grads)[1] = lf.grad;
                for (float& v : (*grads)[0].data) v *= 0.5f;
                for (float& v : (*grads)[1].data) v *= 0.5f;
            }
            return 0.5 * (lr.loss + lf.loss);
        };
        double err = finite_diff_rel_err({real, fake}, d_eval);
        cases.push_back({"lsgan_d", err, 1e-3, err < 1e-3});

        GradEvalFn g_eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            LossGrad lg = mse_to_const(in[0], 1.0f);
            if (grads) (*grads)[0] = lg.grad;
            return lg.loss;
        };
        err = finite_diff_rel_err({fake}, g_eval);
        cases.push_back({"lsgan_g", err, 1e-3, err < 1e-3});
    }

    // residual block with projection shortcut
    {
        ParamStore ps;
        ResidualBlock block(ps, "rb", 2, 3, 2);
        init_params(ps, derive_seed(seed, 1));
        Tensor x = random_tensor(rng, {1, 2, 6, 6}, -1.0, 1.0);
        Tensor y0 = block.forward(x);
        Tensor r = random_tensor(rng, y0.shape, -1.0, 1.0);
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            assign_params(ps, in, 1);
            Tensor y = block.forward(in[0]);
            if (grads) {
                ps.zero_grads();
                (*grads)[0] = block.backward(r);
                collect_param_grads(ps, grads, 1);
            }
            return weighted_sum(y, r);
        };
        double err = finite_diff_rel_err(pack_inputs(x, ps), eval);
        cases.push_back({"residual_block", err, 1e-3, err < 1e-3});
    }

    // soiling head (conv-relu-conv-softsign-affine) through BCE
    {
        ParamStore ps;
        SoilingHeadConfig hc;
        hc.hidden_channels = 4;
        SoilingHead head(ps, hc, 3, 4, 4);
        init_params(ps, derive_seed(seed, 2));
        Tensor x = random_tensor(rng, {1, 3, 4, 4}, -1.0, 1.0);
        Tensor target = random_bits(rng, {1, 2, 4, 4});
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            assign_params(ps, in, 1);
            Tensor probs = head.forward(in[0]);
            LossGrad lg = bce_loss(probs, target);
            if (grads) {
                ps.zero_grads();
                (*grads)[0] = head.backward(lg.grad);
                collect_param_grads(ps, grads, 1);
            }
            return lg.loss;
        };
        double err = finite_diff_rel_err(pack_inputs(x, ps), eval);
        cases.push_back({"soiling_head", err, 1e-3, err < 1e-3});
    }

    // segmentation head on a 4x4 toy through softmax cross entropy
    {
        ParamStore ps;
        SegHeadConfig sc;
        sc.channels = {4, 4, 4};
        sc.num_classes = 3;
        SegHead head(ps, sc, 3, 2);
        init_params(ps, derive_seed(seed, 3));
        Tensor x = random_tensor(rng, {1, 3, 2, 2}, -1.0, 1.0);
        std::vector<int> targets;
        for (int i = 0; i < 16; ++i) targets.push_back(int(rng.next_below(3)));
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            assign_params(ps, in, 1);
            Tensor logits = head.forward(in[0]);
            LossGrad lg = softmax_ce_loss(logits, targets);
            if (grads) {
                ps.zero_grads();
                (*grads)[0] = head.backward(lg.grad);
                collect_param_grads(ps, grads, 1);
            }
            return lg.loss;
        };
        double err = finite_diff_rel_err(pack_inputs(x, ps), eval);
        cases.push_back({"seg_head", err, 1e-3, err < 1e-3});
    }

    // detection head on a 2x2 grid toy
    {
        ParamStore ps;
        DetHead head(ps, 3);
        init_params(ps, derive_seed(seed, 4));
        Tensor x = random_tensor(rng, {1, 3, 2, 2}, -1.0, 1.0);
        Tensor obj({1, 1, 2, 2});
        obj.data = {1.0f, 0.0f, 0.0f, 1.0f};
        Tensor box = random_tensor(rng, {1, 4, 2, 2}, 0.0, 1.0);
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            assign_params(ps, in, 1);
            Tensor out = head.forward(in[0]);
            DetLossResult dl = det_loss(out, obj, box);
            if (grads) {
                ps.zero_grads();
                (*grads)[0] = head.backward(dl.dout);
                collect_param_grads(ps, grads, 1);
            }
            return dl.loss;
        };
        double err = finite_diff_rel_err(pack_inputs(x, ps), eval);
        cases.push_back({"det_head", err, 1e-3, err < 1e-3});
    }

    // two-block end-to-end miniature: stem + 2 residual stages + tile head
    // through BCE, checked over the input and every parameter
    {
        ParamStore ps;
        Conv2D stem(ps, "stem", 3, 4, 3, 2, 2, 1, 1);
        ReLU stem_relu;
        ResidualBlock block1(ps, "b1", 4, 4, 2);
        ResidualBlock block2(ps, "b2", 4, 6, 1);
        SoilingHeadConfig hc;
        hc.hidden_channels = 4;
        SoilingHead head(ps, hc, 6, 4, 4);
        init_params(ps, derive_seed(seed, 5));

        Tensor x = random_tensor(rng, {1, 3, 16, 16}, -0.5, 0.5);
        Tensor target = random_bits(rng, {1, 2, 4, 4});
        GradEvalFn eval = [&](const std::vector<Tensor>& in, std::vector<Tensor>* grads) {
            assign_params(ps, in, 1);
            Tensor h = block2.forward(block1.forward(stem_relu.forward(stem.forward(in[0]))));
            LossGrad lg = bce_loss(head.forward(h), target);
            if (grads) {
                ps.zero_grads();
                Tensor d = block1.backward(block2.backward(head.backward(lg.grad)));
                (*grads)[0] = stem.backward(stem_relu.backward(d));
                collect_param_grads(ps, grads, 1);
            }
            return lg.loss;
        };
        double err = finite_diff_rel_err(pack_inputs(x, ps), eval);
        cases.push_back({"two_block_end_to_end", err, 1e-2, err < 1e-2});
    }

    return cases;
}

}  // namespace soil::nn
