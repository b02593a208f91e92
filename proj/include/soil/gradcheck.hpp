#pragma once

#include <functional>
#include <string>
#include <vector>

#include "soil/tensor.hpp"

namespace soil::nn {

// eval(inputs, grads): returns the scalar loss; when grads is non-null it
// must fill analytic d(loss)/d(input) tensors of matching shapes.
using GradEvalFn = std::function<double(const std::vector<Tensor>&, std::vector<Tensor>*)>;

// Central finite differences at step h against the analytic gradients.
// Returns the vector-norm relative error ||ga - gn|| / (||ga|| + ||gn||)
// over all coordinates of all input tensors.
double finite_diff_rel_err(std::vector<Tensor> inputs, const GradEvalFn& eval, double h = 1e-3);

struct GradCheckCase {
    std::string name;
    double rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Every differentiable op plus composite probes (residual block, heads,
// two-block end-to-end miniature). Deterministic in `seed`.
std::vector<GradCheckCase> run_all_gradchecks(uint64_t seed);

}  // namespace soil::nn
