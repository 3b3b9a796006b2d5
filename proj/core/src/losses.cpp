#include "liftaug/losses.hpp"

#include <cmath>

#include "liftaug/errors.hpp"

namespace liftaug {

namespace {

void check_feedback_args(double lp_aug, double lp_orig, double beta) {
    if (lp_aug < 0.0 || lp_orig < 0.0) throw ContractError("pose losses must be nonnegative");
    if (!(beta > 1.0)) throw ContractError("feedback beta must exceed 1");
}

}  // namespace

double feedback_loss(double lp_aug, double lp_orig, double beta) {
    check_feedback_args(lp_aug, lp_orig, beta);
    double e = std::min(lp_aug - beta * lp_orig, kFeedbackExpClamp);
    return std::fabs(1.0 - std::exp(e));
}

Value feedback_loss_graph(Value lp_aug, double lp_orig, double beta, long* saturation_counter) {
    check_feedback_args(lp_aug.val().item(), lp_orig, beta);
    if (lp_aug.val().item() - beta * lp_orig >= kFeedbackExpClamp && saturation_counter)
        ++*saturation_counter;
    Value e = clamp_max(sadd(lp_aug, -beta * lp_orig), kFeedbackExpClamp);
    return vabs(sadd(neg(vexp(e)), 1.0));
}

double reg_loss(const Tensor& gamma, double threshold) {
    if (!(threshold > 0.0)) throw ContractError("reg threshold must be positive");
    double mean_abs = 0.0, sq = 0.0;
    for (long i = 0; i < gamma.numel(); ++i) {
        mean_abs += std::fabs(gamma[i]);
        sq += gamma[i] * gamma[i];
    }
    mean_abs /= static_cast<double>(gamma.numel());
    return mean_abs < threshold ? 0.0 : sq;
}

Value reg_loss_graph(Value gamma, double threshold) {
    if (!(threshold > 0.0)) throw ContractError("reg threshold must be positive");
    double mean_abs = 0.0;
    for (long i = 0; i < gamma.val().numel(); ++i) mean_abs += std::fabs(gamma.val()[i]);
    mean_abs /= static_cast<double>(gamma.val().numel());
    if (mean_abs < threshold)
        return smul(sum(gamma.tape()->constant(Tensor::scalar(0.0))), 0.0);
    return sum(mul(gamma, gamma));
}

double augmentor_loss(double lp_aug, double lp_orig, double beta, const Tensor& gamma_ba,
                      const Tensor& gamma_bl, double reg_threshold, double gen_guidance,
                      double w_adv) {
    return feedback_loss(lp_aug, lp_orig, beta) + reg_loss(gamma_ba, reg_threshold) +
           reg_loss(gamma_bl, reg_threshold) + w_adv * gen_guidance;
}

}  // namespace liftaug
