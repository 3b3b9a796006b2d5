#include "liftaug/adam.hpp"

#include <cmath>

#include "liftaug/errors.hpp"

namespace liftaug {

void Adam::step(std::vector<Param*> params, double lr_scale) {
    ++step_count_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    double lr = cfg_.lr * lr_scale;
    for (Param* p : params) {
        if (!p->trainable) continue;
        if (!p->grad.all_finite())
            throw TrainingError("non-finite gradient for parameter " + p->name);
        AdamSlot& slot = slots_[p->name];
        if (slot.m1.empty()) {
            slot.m1 = Tensor::zeros(p->value.shape());
            slot.m2 = Tensor::zeros(p->value.shape());
        }
        for (long i = 0; i < p->value.numel(); ++i) {
            double g = p->grad[i];
            slot.m1[i] = cfg_.beta1 * slot.m1[i] + (1.0 - cfg_.beta1) * g;
            slot.m2[i] = cfg_.beta2 * slot.m2[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = slot.m1[i] / bc1;
            double vhat = slot.m2[i] / bc2;
            p->value[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace liftaug
