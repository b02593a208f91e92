#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "soil/ops.hpp"
#include "soil/tensor.hpp"

namespace soil::nn {

// A named trainable tensor with its gradient and Adam moments.
struct Param {
    std::string name;
    Tensor value, grad, m, v;

    Param(std::string n, std::vector<int> shape)
        : name(std::move(n)), value(shape), grad(shape), m(shape), v(std::move(shape)) {}
};

// Owns every parameter of a model in registration order. Registration order
// is the initialization and serialization order, which keeps training
// bitwise reproducible.
class ParamStore {
public:
    Param& add(const std::string& name, std::vector<int> shape);
    const std::vector<Param*>& all() const { return ptrs_; }
    Param* find(const std::string& name) const;
    int64_t param_count() const;
    void zero_grads();

private:
    std::vector<std::unique_ptr<Param>> params_;
    std::vector<Param*> ptrs_;
};

// Seeded He-style uniform fan-in init for weights; biases stay zero.
void init_params(ParamStore& store, uint64_t seed);

class Conv2D {
public:
    Conv2D(ParamStore& ps, const std::string& name, int cin, int cout, int k, int sy, int sx,
           int py, int px);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);  // accumulates into param grads

    Param& weight() { return *w_; }
    Param& bias() { return *b_; }

private:
    Param* w_;
    Param* b_;
    int sy_, sx_, py_, px_;
    Tensor x_;
};

class ReLU {
public:
    Tensor forward(const Tensor& x) {
        x_ = x;
        return relu_forward(x);
    }
    Tensor backward(const Tensor& dy) { return relu_backward(x_, dy); }

private:
    Tensor x_;
};

class LeakyReLU {
public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
    Tensor forward(const Tensor& x) {
        x_ = x;
        return leaky_relu_forward(x, slope_);
    }
    Tensor backward(const Tensor& dy) { return leaky_relu_backward(x_, dy, slope_); }

private:
    float slope_;
    Tensor x_;
};

class Softsign {
public:
    Tensor forward(const Tensor& x) {
        x_ = x;
        return softsign_forward(x);
    }
    Tensor backward(const Tensor& dy) { return softsign_backward(x_, dy); }

private:
    Tensor x_;
};

class Tanh {
public:
    Tensor forward(const Tensor& x) {
        y_ = tanh_forward(x);
        return y_;
    }
    Tensor backward(const Tensor& dy) { return tanh_backward(y_, dy); }

private:
    Tensor y_;
};

class Upsample2x {
public:
    Tensor forward(const Tensor& x) { return upsample2x_forward(x); }
    Tensor backward(const Tensor& dy) { return upsample2x_backward(dy); }
};

// y = relu(conv2(relu(conv1(x))) + shortcut(x)); the shortcut is a strided
// 1x1 projection when geometry or width changes, identity otherwise.
class ResidualBlock {
public:
    ResidualBlock(ParamStore& ps, const std::string& name, int cin, int cout, int stride);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

    bool has_projection() const { return proj_.has_value(); }

private:
    Conv2D conv1_, conv2_;
    std::optional<Conv2D> proj_;
    ReLU relu1_, relu2_;
    Tensor x_;
};

}  // namespace soil::nn
