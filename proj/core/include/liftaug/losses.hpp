#pragma once

#include "liftaug/ops.hpp"

namespace liftaug {

/// Exponent cap inside the feedback loss; saturated evaluations are
/// counted by the caller-provided counter.
constexpr double kFeedbackExpClamp = 20.0;

/// |1 - exp(lp_aug - beta * lp_orig)|. lp_orig is a plain number (it
/// carries no augmentor gradient).
double feedback_loss(double lp_aug, double lp_orig, double beta);
Value feedback_loss_graph(Value lp_aug, double lp_orig, double beta, long* saturation_counter);

/// Rectified L2: 0 while mean(|gamma|) < threshold, else sum of squares.
double reg_loss(const Tensor& gamma, double threshold);
Value reg_loss_graph(Value gamma, double threshold);

/// L_A = L_fb + L_reg(gamma_ba) + L_reg(gamma_bl) + w_adv * guidance.
double augmentor_loss(double lp_aug, double lp_orig, double beta, const Tensor& gamma_ba,
                      const Tensor& gamma_bl, double reg_threshold, double gen_guidance,
                      double w_adv);

}  // namespace liftaug
