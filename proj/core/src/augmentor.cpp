#include "liftaug/augmentor.hpp"

#include <cmath>

#include "liftaug/errors.hpp"

namespace liftaug {

namespace {

// Rodrigues coefficients as functions of s = theta^2, with series
// fallbacks so the map and its derivative are smooth through s = 0.
constexpr double kSeriesCutoff = 1e-6;

double rot_coef_a(double s) {
    if (s < kSeriesCutoff) return 1.0 - s / 6.0 + s * s / 120.0;
    double th = std::sqrt(s);
    return std::sin(th) / th;
}

double rot_coef_a_prime(double s) {
    if (s < kSeriesCutoff) return -1.0 / 6.0 + s / 60.0 - s * s / 1680.0;
    double th = std::sqrt(s);
    return (th * std::cos(th) - std::sin(th)) / (2.0 * th * th * th);
}

double rot_coef_b(double s) {
    if (s < kSeriesCutoff) return 0.5 - s / 24.0 + s * s / 720.0;
    return (1.0 - std::cos(std::sqrt(s))) / s;
}

double rot_coef_b_prime(double s) {
    if (s < kSeriesCutoff) return -1.0 / 24.0 + s / 360.0 - s * s / 13440.0;
    double th = std::sqrt(s);
    return (th * std::sin(th) - 2.0 * (1.0 - std::cos(th))) / (2.0 * s * s);
}

// d(skew(w))/dw_i bases
Tensor skew_basis(int i) {
    Tensor e = Tensor::zeros({3, 3});
    if (i == 0) {
        e.at(1, 2) = -1.0;
        e.at(2, 1) = 1.0;
    } else if (i == 1) {
        e.at(0, 2) = 1.0;
        e.at(2, 0) = -1.0;
    } else {
        e.at(0, 1) = -1.0;
        e.at(1, 0) = 1.0;
    }
    return e;
}

void check_axis_angle_shape(const Tensor& w) {
    if (w.numel() != 3) throw ShapeError("axis-angle must have 3 elements, got " + w.shape_str());
}

}  // namespace

Tensor rodrigues(const Tensor& w) {
    check_axis_angle_shape(w);
    double s = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    double a = rot_coef_a(s), b = rot_coef_b(s);
    Tensor k = Tensor::zeros({3, 3});
    k.at(0, 1) = -w[2];
    k.at(0, 2) = w[1];
    k.at(1, 0) = w[2];
    k.at(1, 2) = -w[0];
    k.at(2, 0) = -w[1];
    k.at(2, 1) = w[0];
    Tensor k2 = matmul_nn(k, k);
    Tensor r = Tensor::identity(3);
    for (long i = 0; i < 9; ++i) r[i] += a * k[i] + b * k2[i];
    return r;
}

Value rodrigues_graph(Tape& t, Value w) {
    check_axis_angle_shape(w.val());
    Value s = sum(mul(w, w));
    Value a = unary_custom(s, rot_coef_a, rot_coef_a_prime);
    Value b = unary_custom(s, rot_coef_b, rot_coef_b_prime);
    Value wf = w.val().rank() == 2 ? reshape_v(w, {3}) : w;
    Value k;
    for (int i = 0; i < 3; ++i) {
        Value term = scale(t.constant(skew_basis(i)), slice_cols(reshape_v(wf, {1, 3}), i, i + 1));
        k = i == 0 ? term : add(k, term);
    }
    Value k2 = matmul(k, k);
    return add(t.constant(Tensor::identity(3)), add(scale(k, a), scale(k2, b)));
}

void AugmentationParams::validate(const SkeletonTopology& topo) const {
    int nb = topo.bone_count();
    if (gamma_ba.rows() != nb || gamma_ba.cols() != 3)
        throw ShapeError("gamma_ba must be (J-1) x 3");
    if (gamma_bl.numel() != nb) throw ShapeError("gamma_bl must have J-1 elements");
    if (rotation.rank() != 2 || rotation.rows() != 3 || rotation.cols() != 3)
        throw ShapeError("rotation must be 3 x 3");
    if (translation.numel() != 3) throw ShapeError("translation must have 3 elements");

    Tensor rtr = matmul_tn(rotation, rotation);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double expect = i == j ? 1.0 : 0.0;
            if (std::fabs(rtr.at(i, j) - expect) >= 1e-9)
                throw DomainError("rotation is not orthonormal");
        }
    const Tensor& r = rotation;
    double det = r.at(0, 0) * (r.at(1, 1) * r.at(2, 2) - r.at(1, 2) * r.at(2, 1)) -
                 r.at(0, 1) * (r.at(1, 0) * r.at(2, 2) - r.at(1, 2) * r.at(2, 0)) +
                 r.at(0, 2) * (r.at(1, 0) * r.at(2, 1) - r.at(1, 1) * r.at(2, 0));
    if (std::fabs(det - 1.0) >= 1e-9) throw DomainError("rotation determinant is not +1");

    for (long i = 0; i < gamma_bl.numel(); ++i)
        if (!(1.0 + gamma_bl[i] > 0.0)) throw DomainError("length ratio 1 + gamma_bl must be positive");
    for (const auto& pr : topo.symmetry_pairs())
        if (gamma_bl[pr[0]] != gamma_bl[pr[1]])
            throw DomainError("gamma_bl not tied across symmetry pair");
}

void AugmentorConfig::validate() const {
    if (width < 1 || noise_dim < 1) throw ConfigError("augmentor width and noise_dim must be >= 1");
    if (s_ba < 0.0 || s_bl < 0.0 || s_bl >= 1.0)
        throw ConfigError("augmentor scales: s_ba >= 0, 0 <= s_bl < 1 required");
    if (enable_rt && !(t0[2] - s_t[2] > z_min))
        throw ConfigError("translation box must keep depth above z_min: t0_z - s_t_z > z_min");
}

BoneSet apply_ba(const BoneSet& bones, const Tensor& gamma_ba) {
    if (!gamma_ba.same_shape(bones.directions))
        throw ShapeError("gamma_ba shape " + gamma_ba.shape_str());
    Tensor pert = bones.directions;
    pert += gamma_ba;
    BoneSet out = decompose(pert);  // renormalize; throws on degenerate
    out.lengths = bones.lengths;
    return out;
}

BoneSet apply_bl(const BoneSet& bones, const Tensor& gamma_bl) {
    if (gamma_bl.numel() != bones.lengths.numel())
        throw ShapeError("gamma_bl length " + gamma_bl.shape_str());
    BoneSet out = bones;
    for (long k = 0; k < out.lengths.numel(); ++k) {
        double ratio = 1.0 + gamma_bl[k];
        if (!(ratio > 0.0))
            throw DomainError("invalid length ratio " + std::to_string(ratio) + " for bone " +
                              std::to_string(k));
        out.lengths[k] *= ratio;
    }
    return out;
}

Pose3D apply_rt(const BoneSet& bones, const Tensor& R, const Tensor& t,
                const SkeletonTopology& topo, double z_min) {
    if (R.rank() != 2 || R.rows() != 3 || R.cols() != 3) throw ShapeError("R must be 3 x 3");
    if (t.numel() != 3) throw ShapeError("t must have 3 elements");
    Pose3D centered = inverse_hierarchical(topo, recompose(bones), {0.0, 0.0, 0.0});
    Tensor rotated = matmul_nt(centered.joints, R);  // row convention: x' = x R^T
    for (int j = 0; j < rotated.rows(); ++j)
        for (int c = 0; c < 3; ++c) rotated.at(j, c) += t[c];
    Pose3D out(std::move(rotated));
    for (int j = 0; j < out.joint_count(); ++j)
        if (!(out.z(j) > z_min))
            throw DomainError("augmented joint " + std::to_string(j) + " depth " +
                              std::to_string(out.z(j)) + " mm at or below guard");
    return out;
}

AugmentorNet::AugmentorNet(const SkeletonTopology& topo, AugmentorConfig cfg, uint64_t seed)
    : topo_(&topo), cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    int in = input_dim();
    int w = cfg_.width;
    for (int i = 0; i < 4; ++i) {
        trunk_[static_cast<size_t>(i)] =
            make_linear(params_, "trunk" + std::to_string(i), i == 0 ? in : w, w, rng,
                        Init::kaiming_leaky, cfg_.leaky_slope);
        bn_[static_cast<size_t>(i)] = make_batch_norm(params_, "bn" + std::to_string(i), w);
    }
    int nb = topo.bone_count();
    head_ba_ = make_linear(params_, "head_ba", w, 3 * nb, rng, Init::uniform_fan_in);
    head_bl_ = make_linear(params_, "head_bl", w, topo.symmetry_class_count(), rng,
                           Init::uniform_fan_in);
    head_rot_ = make_linear(params_, "head_rot", w, 3, rng, Init::uniform_fan_in);
    head_t_ = make_linear(params_, "head_t", w, 3, rng, Init::uniform_fan_in);

    class_matrix_ = Tensor::zeros({topo.symmetry_class_count(), nb});
    for (int k = 0; k < nb; ++k) class_matrix_.at(topo.symmetry_class()[static_cast<size_t>(k)], k) = 1.0;
}

Tensor AugmentorNet::make_input(const Pose3D& pose, const Tensor& noise) const {
    int J = topo_->joint_count();
    if (pose.joint_count() != J) throw ShapeError("pose joint count mismatch");
    if (noise.numel() != cfg_.noise_dim)
        throw ShapeError("noise must have noise_dim elements, got " + noise.shape_str());
    Tensor in({1, 3 * J + cfg_.noise_dim});
    auto root = pose.joint(topo_->root());
    for (int j = 0; j < J; ++j)
        for (int c = 0; c < 3; ++c)
            in[3 * j + c] = (pose.joints.at(j, c) - root[static_cast<size_t>(c)]) * cfg_.input_scale;
    for (int i = 0; i < cfg_.noise_dim; ++i) in[3 * J + i] = noise[i];
    return in;
}

AugmentorNet::Heads AugmentorNet::forward_heads(Tape& t, Value input, bool bn_train,
                                                bool train_params) const {
    Value h = input;
    for (int i = 0; i < 4; ++i) {
        h = trunk_[static_cast<size_t>(i)](t, h, train_params);
        h = bn_[static_cast<size_t>(i)](t, h, bn_train, train_params);
        h = leaky_relu(h, cfg_.leaky_slope);
    }
    return Heads{head_ba_(t, h, train_params), head_bl_(t, h, train_params),
                 head_rot_(t, h, train_params), head_t_(t, h, train_params)};
}

AugmentorNet::HeadsValue AugmentorNet::forward_heads_value(const Tensor& input) const {
    Tensor h = input;
    for (int i = 0; i < 4; ++i) {
        const LinearLayer& lin = trunk_[static_cast<size_t>(i)];
        const BatchNormLayer& bn = bn_[static_cast<size_t>(i)];
        Tensor z = matmul_nt(h, lin.weight->value);
        for (int r = 0; r < z.rows(); ++r)
            for (int c = 0; c < z.cols(); ++c) {
                double v = z.at(r, c) + lin.bias->value[c];
                v = (v - bn.running_mean->value[c]) /
                        std::sqrt(bn.running_var->value[c] + bn.eps) * bn.gamma->value[c] +
                    bn.beta->value[c];
                z.at(r, c) = v < 0.0 ? v * cfg_.leaky_slope : v;
            }
        h = std::move(z);
    }
    auto head = [&](const LinearLayer& lin) {
        Tensor z = matmul_nt(h, lin.weight->value);
        for (int r = 0; r < z.rows(); ++r)
            for (int c = 0; c < z.cols(); ++c) z.at(r, c) += lin.bias->value[c];
        return z;
    };
    return HeadsValue{head(head_ba_), head(head_bl_), head(head_rot_), head(head_t_)};
}

std::array<double, 3> AugmentorNet::translation_anchor(const Pose3D& source) const {
    if (cfg_.t0_source_root) return source.joint(topo_->root());
    return cfg_.t0;
}

AugmentationParams AugmentorNet::map_params(const Tensor& ba_row, const Tensor& bl_row,
                                            const Tensor& rot_row, const Tensor& trans_row,
                                            const std::array<double, 3>& t0) const {
    int nb = topo_->bone_count();
    if (!ba_row.all_finite() || !bl_row.all_finite() || !rot_row.all_finite() ||
        !trans_row.all_finite())
        throw TrainingError("non-finite augmentor head output");

    AugmentationParams p;
    p.gamma_ba = Tensor::zeros({nb, 3});
    if (cfg_.enable_ba) {
        if (ba_row.numel() != 3 * nb) throw ShapeError("ba head width");
        for (long i = 0; i < ba_row.numel(); ++i)
            p.gamma_ba[i] = cfg_.s_ba * std::tanh(ba_row[i]);
    }

    p.gamma_bl = Tensor::zeros({nb});
    if (cfg_.enable_bl) {
        if (bl_row.numel() != topo_->symmetry_class_count()) throw ShapeError("bl head width");
        for (int k = 0; k < nb; ++k)
            p.gamma_bl[k] = cfg_.s_bl * std::tanh(bl_row[topo_->symmetry_class()[static_cast<size_t>(k)]]);
    }

    if (cfg_.enable_rt) {
        if (rot_row.numel() != 3 || trans_row.numel() != 3) throw ShapeError("rt head width");
        p.rotation = rodrigues(rot_row);
        p.translation = Tensor::zeros({3});
        for (int c = 0; c < 3; ++c)
            p.translation[c] =
                t0[static_cast<size_t>(c)] + cfg_.s_t[static_cast<size_t>(c)] * std::tanh(trans_row[c]);
    } else {
        p.rotation = Tensor::identity(3);
        p.translation = Tensor::from({3}, {t0[0], t0[1], t0[2]});
    }
    return p;
}

AugmentResult augment(const AugmentorNet& net, const Pose3D& pose, const Camera& cam, Rng& rng) {
    const AugmentorConfig& cfg = net.config();
    const SkeletonTopology& topo = net.topology();
    Tensor noise({cfg.noise_dim});
    for (long i = 0; i < noise.numel(); ++i) noise[i] = rng.normal();

    auto hv = net.forward_heads_value(net.make_input(pose, noise));
    AugmentationParams params =
        net.map_params(hv.ba, hv.bl_classes, hv.rot, hv.trans, net.translation_anchor(pose));

    BoneSet bones = decompose(hierarchical_transform(topo, pose));
    if (cfg.enable_ba) bones = apply_ba(bones, params.gamma_ba);
    if (cfg.enable_bl) bones = apply_bl(bones, params.gamma_bl);

    AugmentResult out;
    if (cfg.enable_rt) {
        out.pose3d = apply_rt(bones, params.rotation, params.translation, topo, cfg.z_min);
    } else {
        out.pose3d = inverse_hierarchical(topo, recompose(bones), pose.joint(topo.root()));
        if (!camera_valid(out.pose3d, cfg.z_min))
            throw DomainError("augmented pose fails the depth guard");
    }
    out.pose2d = project(out.pose3d, cam, cfg.z_min);
    out.params = std::move(params);
    return out;
}

SampleAugGraph build_augment_graph(Tape& tape, const AugmentorNet& net, const Pose3D& source,
                                   const Camera& cam, Value ba_row, Value bl_row, Value rot_row,
                                   Value trans_row, bool full_kcs_mode) {
    const AugmentorConfig& cfg = net.config();
    const SkeletonTopology& topo = net.topology();
    int J = topo.joint_count();
    int nb = topo.bone_count();
    SampleAugGraph g;

    BoneSet src = decompose(hierarchical_transform(topo, source));

    // BA: perturb and renormalize directions
    Value dirs;
    if (cfg.enable_ba) {
        g.gamma_ba = smul(vtanh(reshape_v(ba_row, {nb, 3})), cfg.s_ba);
        Value pert = add(tape.constant(src.directions), g.gamma_ba);
        Value sq = row_sums(mul(pert, pert));
        for (long k = 0; k < sq.val().numel(); ++k)
            if (std::sqrt(sq.val()[k]) < kMinBoneLength) {
                g.reject_reason = "degenerate perturbed direction";
                return g;
            }
        dirs = scale_rows(pert, recip(vsqrt(sq)));
    } else {
        g.gamma_ba = tape.constant(Tensor::zeros({nb, 3}));
        dirs = tape.constant(src.directions);
    }

    // BL: symmetry-tied length ratios
    Value lengths_col;
    Tensor src_len_row({1, nb});
    for (int k = 0; k < nb; ++k) src_len_row[k] = src.lengths[k];
    if (cfg.enable_bl) {
        g.gamma_bl = matmul(smul(vtanh(bl_row), cfg.s_bl), tape.constant(net.class_matrix()));
        Value ratios = sadd(g.gamma_bl, 1.0);
        for (long k = 0; k < ratios.val().numel(); ++k)
            if (!(ratios.val()[k] > 0.0)) {
                g.reject_reason = "invalid length ratio";
                return g;
            }
        lengths_col = transpose_v(mul(tape.constant(src_len_row), ratios));
    } else {
        g.gamma_bl = tape.constant(Tensor::zeros({1, nb}));
        lengths_col = tape.constant(transposed(src_len_row));
    }

    Value bones = scale_rows(dirs, lengths_col);

    // RT
    Value centered = matmul(tape.constant(topo.path_matrix()), bones);  // root at origin
    Value pose3d;
    if (cfg.enable_rt) {
        g.rotation = rodrigues_graph(tape, rot_row);
        Tensor st({1, 3}), t0v({1, 3});
        auto anchor = net.translation_anchor(source);
        for (int c = 0; c < 3; ++c) {
            st[c] = cfg.s_t[static_cast<size_t>(c)];
            t0v[c] = anchor[static_cast<size_t>(c)];
        }
        g.translation = add(tape.constant(t0v), mul(vtanh(trans_row), tape.constant(st)));
        pose3d = add_rowvec(matmul_nt(centered, g.rotation), g.translation);
    } else {
        g.rotation = tape.constant(Tensor::identity(3));
        Tensor rootv({1, 3});
        auto root = source.joint(topo.root());
        for (int c = 0; c < 3; ++c) rootv[c] = root[static_cast<size_t>(c)];
        g.translation = tape.constant(rootv);
        pose3d = add_rowvec(centered, g.translation);
    }

    for (int j = 0; j < J; ++j)
        if (!(pose3d.val().at(j, 2) > cfg.z_min)) {
            g.reject_reason = "depth guard";
            return g;
        }
    if (!pose3d.val().all_finite()) {
        g.reject_reason = "non-finite pose";
        return g;
    }
    g.pose3d_mm = pose3d;

    // normalized 2D reprojection as one {1, 2J} row
    double s = std::max(cam.fx, cam.fy);
    Value xz = mul(slice_cols(pose3d, 0, 1), recip(slice_cols(pose3d, 2, 3)));
    Value yz = mul(slice_cols(pose3d, 1, 2), recip(slice_cols(pose3d, 2, 3)));
    Tensor ix = Tensor::zeros({J, 2 * J}), iy = Tensor::zeros({J, 2 * J});
    for (int j = 0; j < J; ++j) {
        ix.at(j, 2 * j) = 1.0;
        iy.at(j, 2 * j + 1) = 1.0;
    }
    g.norm2d_row = add(matmul(transpose_v(smul(xz, cam.fx / s)), tape.constant(ix)),
                       matmul(transpose_v(smul(yz, cam.fy / s)), tape.constant(iy)));

    // root-relative meters as one {1, 3J} row
    Value root_row = slice_rows(pose3d, topo.root(), topo.root() + 1);
    Value rel = sub(pose3d, matmul(tape.constant(Tensor::full({J, 1}, 1.0)), root_row));
    g.rel3d_m_row = reshape_v(smul(rel, 1e-3), {1, 3 * J});

    // KCS inputs for the 3D discriminator
    if (full_kcs_mode) {
        Value gram = matmul_nt(dirs, dirs);
        g.kcs_rows.push_back(reshape_v(gram, {1, nb * nb}));
    } else {
        for (int p = 0; p < topo.part_count(); ++p) {
            const auto& members = topo.part(p);
            int n = static_cast<int>(members.size());
            Tensor sel = Tensor::zeros({n, nb});
            for (int i = 0; i < n; ++i) sel.at(i, members[static_cast<size_t>(i)]) = 1.0;
            Value sub_dirs = matmul(tape.constant(sel), dirs);
            Value gram = matmul_nt(sub_dirs, sub_dirs);
            g.kcs_rows.push_back(reshape_v(gram, {1, n * n}));
        }
    }

    g.accepted = true;
    return g;
}

}  // namespace liftaug
