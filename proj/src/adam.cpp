#include "soil/adam.hpp"

#include <cmath>

#include "soil/common.hpp"

namespace soil::nn {

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(double(cfg_.beta1), double(t_));
    const double bc2 = 1.0 - std::pow(double(cfg_.beta2), double(t_));

    for (Param* p : params_) {
        if (!p->grad.all_finite()) {
            throw NumericError("non-finite gradient in parameter '" + p->name + "' at step " +
                               std::to_string(t_));
        }
        for (size_t i = 0; i < p->value.data.size(); ++i) {
            float g = p->grad.data[i];
            p->m.data[i] = cfg_.beta1 * p->m.data[i] + (1.0f - cfg_.beta1) * g;
            p->v.data[i] = cfg_.beta2 * p->v.data[i] + (1.0f - cfg_.beta2) * g * g;
            double mhat = double(p->m.data[i]) / bc1;
            double vhat = double(p->v.data[i]) / bc2;
            p->value.data[i] -= float(double(cfg_.lr) * mhat / (std::sqrt(vhat) + double(cfg_.eps)));
        }
    }
}

}  // namespace soil::nn
