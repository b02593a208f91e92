#include "soil/layers.hpp"

#include <cmath>

#include "soil/common.hpp"
#include "soil/rng.hpp"

namespace soil::nn {

Param& ParamStore::add(const std::string& name, std::vector<int> shape) {
    if (find(name)) throw DataError("duplicate parameter name: " + name);
    params_.push_back(std::make_unique<Param>(name, std::move(shape)));
    ptrs_.push_back(params_.back().get());
    return *params_.back();
}

Param* ParamStore::find(const std::string& name) const {
    for (Param* p : ptrs_) {
        if (p->name == name) return p;
    }
    return nullptr;
}

int64_t ParamStore::param_count() const {
    int64_t n = 0;
    for (const Param* p : ptrs_) n += p->value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (Param* p : ptrs_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0f);
}

void init_params(ParamStore& store, uint64_t seed) {
    Rng rng(derive_seed(seed, 0x1417));
    for (Param* p : store.all()) {
        if (p->value.rank() < 2) continue;  // biases stay zero
        int64_t fan_in = 1;
        for (int i = 1; i < p->value.rank(); ++i) fan_in *= p->value.dim(i);
        float limit = std::sqrt(6.0f / float(fan_in));
        for (float& v : p->value.data) v = float(rng.uniform(-limit, limit));
    }
}

Conv2D::Conv2D(ParamStore& ps, const std::string& name, int cin, int cout, int k, int sy, int sx,
               int py, int px)
    : w_(&ps.add(name + ".w", {cout, cin, k, k})),
      b_(&ps.add(name + ".b", {cout})),
      sy_(sy),
      sx_(sx),
      py_(py),
      px_(px) {}

Tensor Conv2D::forward(const Tensor& x) {
    x_ = x;
    return conv2d_forward(x, w_->value, b_->value, sy_, sx_, py_, px_);
}

Tensor Conv2D::backward(const Tensor& dy) {
    Conv2DGrads g = conv2d_backward(x_, w_->value, dy, sy_, sx_, py_, px_);
    for (size_t i = 0; i < g.dw.data.size(); ++i) w_->grad.data[i] += g.dw.data[i];
    for (size_t i = 0; i < g.db.data.size(); ++i) b_->grad.data[i] += g.db.data[i];
    return std::move(g.dx);
}

ResidualBlock::ResidualBlock(ParamStore& ps, const std::string& name, int cin, int cout,
                             int stride)
    : conv1_(ps, name + ".conv1", cin, cout, 3, stride, stride, 1, 1),
      conv2_(ps, name + ".conv2", cout, cout, 3, 1, 1, 1, 1) {
    if (stride != 1 || cin != cout) {
        proj_.emplace(ps, name + ".proj", cin, cout, 1, stride, stride, 0, 0);
    }
}

Tensor ResidualBlock::forward(const Tensor& x) {
    x_ = x;
    Tensor f = conv2_.forward(relu1_.forward(conv1_.forward(x)));
    Tensor s = proj_ ? proj_->forward(x) : x;
    require_same_shape(f, s, "residual add");
    for (size_t i = 0; i < f.data.size(); ++i) f.data[i] += s.data[i];
    return relu2_.forward(f);
}

Tensor ResidualBlock::backward(const Tensor& dy) {
    Tensor dsum = relu2_.backward(dy);
    Tensor dx = conv1_.backward(relu1_.backward(conv2_.backward(dsum)));
    Tensor ds = proj_ ? proj_->backward(dsum) : std::move(dsum);
    for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
    return dx;
}

}  // namespace soil::nn
