#pragma once

#include "liftaug/ops.hpp"
#include "liftaug/rng.hpp"

namespace liftaug {

enum class Init {
    kaiming_relu,   // uniform, fan-in scaled for a following ReLU
    kaiming_leaky,  // as above for leaky ReLU (slope fixed below)
    uniform_fan_in  // plain +-1/sqrt(fan_in)
};

constexpr double kLeakySlopeDefault = 0.2;

/// Fully connected layer; weight is (out x in), bias (1 x out).
/// Parameters live in the owning ParamStore.
struct LinearLayer {
    Param* weight = nullptr;
    Param* bias = nullptr;
    int in = 0, out = 0;

    Value operator()(Tape& t, Value x, bool train_params = true) const {
        return linear(x, t.leaf(*weight, train_params), t.leaf(*bias, train_params));
    }
};

LinearLayer make_linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng,
                        Init init, double leaky_slope = kLeakySlopeDefault);

/// Batch normalization layer; gamma/beta trainable, running stats kept
/// as non-trainable buffer parameters.
struct BatchNormLayer {
    Param* gamma = nullptr;
    Param* beta = nullptr;
    Param* running_mean = nullptr;
    Param* running_var = nullptr;
    double momentum = 0.1;
    double eps = 1e-5;

    Value operator()(Tape& t, Value x, bool train, bool train_params = true) const {
        return batch_norm(t, x, *gamma, *beta, *running_mean, *running_var, train, train_params,
                          momentum, eps);
    }
};

BatchNormLayer make_batch_norm(ParamStore& store, const std::string& name, int width);

}  // namespace liftaug
