#include "liftaug/discriminator.hpp"

#include "liftaug/errors.hpp"

namespace liftaug {

Discriminator3D::Discriminator3D(const SkeletonTopology& topo, const DiscriminatorConfig& cfg,
                                 uint64_t seed)
    : topo_(&topo), leaky_slope_(cfg.leaky_slope), part_aware_(cfg.part_aware) {
    if (part_aware_ && topo.part_count() == 0)
        throw ConfigError("part-aware discriminator requires a topology with parts");
    Rng rng(seed);
    int w = cfg.width_3d;
    auto add_encoder = [&](const std::string& name, int in_dim) {
        Encoder e;
        e.l1 = make_linear(params_, name + ".l1", in_dim, w, rng, Init::kaiming_leaky, leaky_slope_);
        e.l2 = make_linear(params_, name + ".l2", w, w, rng, Init::kaiming_leaky, leaky_slope_);
        e.l3 = make_linear(params_, name + ".l3", w, w, rng, Init::kaiming_leaky, leaky_slope_);
        e.l4 = make_linear(params_, name + ".l4", w, 1, rng, Init::uniform_fan_in);
        encoders_.push_back(e);
        input_dims_.push_back(in_dim);
    };
    if (part_aware_) {
        for (int p = 0; p < topo.part_count(); ++p) {
            int n = static_cast<int>(topo.part(p).size());
            add_encoder("part_" + topo.part_name(p), n * n);
        }
    } else {
        int nb = topo.bone_count();
        add_encoder("full", nb * nb);
    }
}

Value Discriminator3D::encode(Tape& t, const Encoder& e, Value x, bool train_params) const {
    Value h0 = leaky_relu(e.l1(t, x, train_params), leaky_slope_);
    Value r = leaky_relu(e.l2(t, h0, train_params), leaky_slope_);
    Value h1 = leaky_relu(add(h0, e.l3(t, r, train_params)), leaky_slope_);
    return e.l4(t, h1, train_params);
}

Value Discriminator3D::score_batch(Tape& t, std::span<const Value> part_inputs,
                                   bool train_params) const {
    if (part_inputs.size() != encoders_.size())
        throw ContractError("expected " + std::to_string(encoders_.size()) +
                            " part inputs, got " + std::to_string(part_inputs.size()));
    Value acc;
    for (size_t p = 0; p < encoders_.size(); ++p) {
        if (part_inputs[p].val().cols() != input_dims_[p])
            throw ShapeError("part input " + std::to_string(p) + " width " +
                             part_inputs[p].val().shape_str());
        Value s = encode(t, encoders_[p], part_inputs[p], train_params);
        acc = p == 0 ? s : add(acc, s);
    }
    return smul(acc, 1.0 / static_cast<double>(encoders_.size()));
}

Value Discriminator3D::score_graph(Tape& t, const PartKCS& kcs, bool train_params) const {
    std::vector<Value> rows;
    if (part_aware_) {
        if (static_cast<int>(kcs.parts.size()) != topo_->part_count())
            throw ContractError("part count mismatch: discriminator expects " +
                                std::to_string(topo_->part_count()));
    } else if (kcs.parts.size() != 1) {
        throw ContractError("whole-body discriminator expects a single matrix");
    }
    rows.reserve(kcs.parts.size());
    for (const Tensor& m : kcs.parts) {
        Value flat = t.input(Tensor::from({1, static_cast<int>(m.numel())}, m.raw()));
        rows.push_back(flat);
    }
    return score_batch(t, rows, train_params);
}

double Discriminator3D::score(const PartKCS& kcs) const {
    Tape t;
    return score_graph(t, kcs, false).val().item();
}

Discriminator2D::Discriminator2D(int joint_count, const DiscriminatorConfig& cfg, uint64_t seed)
    : leaky_slope_(cfg.leaky_slope), joint_count_(joint_count) {
    Rng rng(seed);
    int w = cfg.width_2d;
    l1_ = make_linear(params_, "l1", 2 * joint_count, w, rng, Init::kaiming_leaky, leaky_slope_);
    l2_ = make_linear(params_, "l2", w, w, rng, Init::kaiming_leaky, leaky_slope_);
    l3_ = make_linear(params_, "l3", w, w, rng, Init::kaiming_leaky, leaky_slope_);
    l4_ = make_linear(params_, "l4", w, 1, rng, Init::uniform_fan_in);
}

Value Discriminator2D::score_batch(Tape& t, Value norm2d, bool train_params) const {
    if (norm2d.val().cols() != 2 * joint_count_)
        throw ShapeError("2D discriminator input width " + norm2d.val().shape_str());
    Value h0 = leaky_relu(l1_(t, norm2d, train_params), leaky_slope_);
    Value r = leaky_relu(l2_(t, h0, train_params), leaky_slope_);
    Value h1 = leaky_relu(add(h0, l3_(t, r, train_params)), leaky_slope_);
    return l4_(t, h1, train_params);
}

Value Discriminator2D::score_graph(Tape& t, const Pose2D& pose, const Camera& cam,
                                   bool train_params) const {
    Value x = t.input(normalize_pose2d(pose, cam));
    return score_batch(t, x, train_params);
}

double Discriminator2D::score(const Pose2D& pose, const Camera& cam) const {
    Tape t;
    return score_graph(t, pose, cam, false).val().item();
}

namespace {

Value ls_term(Value scores, double target) {
    if (scores.val().rows() < 1) throw ContractError("empty score batch");
    Value d = sadd(scores, -target);
    return mean(mul(d, d));
}

}  // namespace

Value discriminator_loss(Value real_3d, Value fake_3d, Value real_2d, Value fake_2d) {
    return add(add(ls_term(real_3d, 1.0), ls_term(fake_3d, 0.0)),
               add(ls_term(real_2d, 1.0), ls_term(fake_2d, 0.0)));
}

Value generator_guidance_loss(Value fake_3d, Value fake_2d) {
    return add(ls_term(fake_3d, 1.0), ls_term(fake_2d, 1.0));
}

}  // namespace liftaug
