#include "liftaug/estimator.hpp"

#include <cmath>

#include "liftaug/errors.hpp"

namespace liftaug {

EstimatorNet::EstimatorNet(int joint_count, int root_index, EstimatorConfig cfg, uint64_t seed)
    : joint_count_(joint_count), root_index_(root_index), cfg_(cfg) {
    if (joint_count < 2) throw ConfigError("estimator needs at least 2 joints");
    if (root_index < 0 || root_index >= joint_count) throw ConfigError("root index out of range");
    if (cfg.width < 1 || cfg.blocks < 1) throw ConfigError("estimator width/blocks must be >= 1");
    Rng rng(seed);
    int w = cfg_.width;
    input_ = make_linear(params_, "input", 2 * joint_count, w, rng, Init::kaiming_relu);
    input_bn_ = make_batch_norm(params_, "input_bn", w);
    blocks_.resize(static_cast<size_t>(cfg_.blocks));
    for (int b = 0; b < cfg_.blocks; ++b) {
        std::string base = "block" + std::to_string(b);
        Block& blk = blocks_[static_cast<size_t>(b)];
        blk.l1 = make_linear(params_, base + ".l1", w, w, rng, Init::kaiming_relu);
        blk.bn1 = make_batch_norm(params_, base + ".bn1", w);
        blk.l2 = make_linear(params_, base + ".l2", w, w, rng, Init::kaiming_relu);
        blk.bn2 = make_batch_norm(params_, base + ".bn2", w);
    }
    output_ = make_linear(params_, "output", w, 3 * joint_count, rng, Init::uniform_fan_in);

    // out_rel = out - root_xyz * root_tile_, zeroing the root exactly
    root_tile_ = Tensor::zeros({3, 3 * joint_count});
    for (int j = 0; j < joint_count; ++j)
        for (int c = 0; c < 3; ++c) root_tile_.at(c, 3 * j + c) = 1.0;
}

Value EstimatorNet::forward(Tape& t, Value norm2d, NetMode mode, bool train_params,
                            Rng* dropout_rng) const {
    if (norm2d.val().cols() != 2 * joint_count_)
        throw ShapeError("estimator input width " + norm2d.val().shape_str());
    bool train = mode == NetMode::train;
    if (train && cfg_.dropout > 0.0 && dropout_rng == nullptr)
        throw ContractError("train-mode forward requires a dropout RNG");
    auto drop = [&](Value x) {
        return cfg_.dropout > 0.0 && train ? dropout(x, cfg_.dropout, true, *dropout_rng) : x;
    };

    Value h = drop(relu(input_bn_(t, input_(t, norm2d, train_params), train, train_params)));
    for (const Block& blk : blocks_) {
        Value z = drop(relu(blk.bn1(t, blk.l1(t, h, train_params), train, train_params)));
        z = drop(relu(blk.bn2(t, blk.l2(t, z, train_params), train, train_params)));
        h = add(h, z);
    }
    Value out = output_(t, h, train_params);

    // subtract the predicted root from every joint
    int J = joint_count_;
    Tensor root_sel = Tensor::zeros({3 * J, 3});
    for (int c = 0; c < 3; ++c) root_sel.at(3 * root_index_ + c, c) = 1.0;
    Value root_xyz = matmul(out, t.constant(root_sel));  // {B, 3}
    return sub(out, matmul(root_xyz, t.constant(root_tile_)));
}

Tensor EstimatorNet::forward_value(const Tensor& norm2d) const {
    if (norm2d.cols() != 2 * joint_count_)
        throw ShapeError("estimator input width " + norm2d.shape_str());
    auto affine = [&](Tensor x, const LinearLayer& lin, const BatchNormLayer& bn, bool act) {
        Tensor z = matmul_nt(x, lin.weight->value);
        for (int r = 0; r < z.rows(); ++r)
            for (int c = 0; c < z.cols(); ++c) {
                double v = z.at(r, c) + lin.bias->value[c];
                v = (v - bn.running_mean->value[c]) /
                        std::sqrt(bn.running_var->value[c] + bn.eps) * bn.gamma->value[c] +
                    bn.beta->value[c];
                z.at(r, c) = act && v < 0.0 ? 0.0 : v;
            }
        return z;
    };
    Tensor h = affine(norm2d, input_, input_bn_, true);
    for (const Block& blk : blocks_) {
        Tensor z = affine(h, blk.l1, blk.bn1, true);
        z = affine(z, blk.l2, blk.bn2, true);
        h += z;
    }
    Tensor out = matmul_nt(h, output_.weight->value);
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) += output_.bias->value[c];
    int J = joint_count_;
    int root = root_index_;
    for (int r = 0; r < out.rows(); ++r) {
        double rx = out.at(r, 3 * root), ry = out.at(r, 3 * root + 1), rz = out.at(r, 3 * root + 2);
        for (int j = 0; j < J; ++j) {
            out.at(r, 3 * j) -= rx;
            out.at(r, 3 * j + 1) -= ry;
            out.at(r, 3 * j + 2) -= rz;
        }
    }
    return out;
}

Pose3D EstimatorNet::estimate(const Pose2D& pose, const Camera& cam, NetMode mode,
                              Rng* dropout_rng) const {
    Tensor in = normalize_pose2d(pose, cam);
    Tensor row;
    if (mode == NetMode::eval) {
        row = forward_value(in);
    } else {
        Tape t;
        row = forward(t, t.constant(in), mode, false, dropout_rng).val();
    }
    Pose3D out(joint_count_);
    for (int j = 0; j < joint_count_; ++j)
        for (int c = 0; c < 3; ++c) out.joints.at(j, c) = row[3 * j + c] * 1000.0;
    return out;
}

double pose_loss(const Pose3D& pred, const Pose3D& gt) {
    if (!pred.joints.same_shape(gt.joints))
        throw ShapeError("pose_loss shape mismatch " + pred.joints.shape_str() + " vs " +
                         gt.joints.shape_str());
    double acc = 0.0;
    for (long i = 0; i < pred.joints.numel(); ++i) {
        double d = pred.joints[i] - gt.joints[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.joint_count());
}

Value pose_loss_graph(Value pred, Value gt) {
    if (!pred.val().same_shape(gt.val()))
        throw ShapeError("pose_loss shape mismatch " + pred.val().shape_str() + " vs " +
                         gt.val().shape_str());
    if (pred.val().cols() % 3 != 0) throw ShapeError("pose rows must be 3J wide");
    long joints = pred.val().cols() / 3;
    long batch = pred.val().rows();
    Value d = sub(pred, gt);
    return smul(sum(mul(d, d)), 1.0 / static_cast<double>(joints * batch));
}

}  // namespace liftaug
