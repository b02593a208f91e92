#pragma once

#include <cstdint>
#include <vector>

#include "soil/layers.hpp"

namespace soil::nn {

struct AdamConfig {
    float lr = 5e-4f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Standard Adam with bias correction over a fixed parameter list. Throws
// NumericError on non-finite gradients, naming the parameter and step.
class Adam {
public:
    Adam(std::vector<Param*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {}

    void step();

    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Param*> params_;
    AdamConfig cfg_;
    int64_t t_ = 0;
};

}  // namespace soil::nn
