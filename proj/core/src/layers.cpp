#include "liftaug/layers.hpp"

#include <cmath>

namespace liftaug {

LinearLayer make_linear(ParamStore& store, const std::string& name, int in, int out, Rng& rng,
                        Init init, double leaky_slope) {
    double gain = 1.0;
    switch (init) {
        case Init::kaiming_relu: gain = std::sqrt(2.0); break;
        case Init::kaiming_leaky: gain = std::sqrt(2.0 / (1.0 + leaky_slope * leaky_slope)); break;
        case Init::uniform_fan_in: gain = 1.0; break;
    }
    double bound = gain * std::sqrt(3.0 / in);
    Tensor w({out, in});
    Rng wr = rng.stream("init-w", hash_string(name));
    for (long i = 0; i < w.numel(); ++i) w[i] = wr.uniform(-bound, bound);
    Tensor b({1, out});
    double bbound = 1.0 / std::sqrt(static_cast<double>(in));
    Rng br = rng.stream("init-b", hash_string(name));
    for (long i = 0; i < b.numel(); ++i) b[i] = br.uniform(-bbound, bbound);

    LinearLayer layer;
    layer.weight = &store.add(name + ".weight", std::move(w));
    layer.bias = &store.add(name + ".bias", std::move(b));
    layer.in = in;
    layer.out = out;
    return layer;
}

BatchNormLayer make_batch_norm(ParamStore& store, const std::string& name, int width) {
    BatchNormLayer bn;
    bn.gamma = &store.add(name + ".gamma", Tensor::full({1, width}, 1.0));
    bn.beta = &store.add(name + ".beta", Tensor::zeros({1, width}));
    bn.running_mean = &store.add(name + ".running_mean", Tensor::zeros({1, width}), false);
    bn.running_var = &store.add(name + ".running_var", Tensor::full({1, width}, 1.0), false);
    return bn;
}

}  // namespace liftaug
