#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "liftaug/augmentor.hpp"
#include "liftaug/errors.hpp"
#include "liftaug/ops.hpp"
#include "liftaug/rng.hpp"

#include "support.hpp"

using namespace liftaug;
using testutil::random_pose;
using testutil::stock_topology;
using testutil::test_camera;

namespace {

AugmentorConfig tiny_cfg() {
    AugmentorConfig cfg;
    cfg.width = 32;
    cfg.noise_dim = 8;
    return cfg;
}

// independent Rodrigues oracle
Tensor rodrigues_reference(double wx, double wy, double wz) {
    double th = std::sqrt(wx * wx + wy * wy + wz * wz);
    Tensor R = Tensor::identity(3);
    if (th < 1e-300) return R;
    double kx = wx / th, ky = wy / th, kz = wz / th;
    double c = std::cos(th), s = std::sin(th), v = 1.0 - c;
    double m[3][3] = {{c + kx * kx * v, kx * ky * v - kz * s, kx * kz * v + ky * s},
                      {ky * kx * v + kz * s, c + ky * ky * v, ky * kz * v - kx * s},
                      {kz * kx * v - ky * s, kz * ky * v + kx * s, c + kz * kz * v}};
    for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) R.at(r, col) = m[r][col];
    return R;
}

double ortho_err(const Tensor& R) {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += R.at(k, i) * R.at(k, j);
            worst = std::max(worst, std::fabs(dot - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

double det3(const Tensor& R) {
    return R.at(0, 0) * (R.at(1, 1) * R.at(2, 2) - R.at(1, 2) * R.at(2, 1)) -
           R.at(0, 1) * (R.at(1, 0) * R.at(2, 2) - R.at(1, 2) * R.at(2, 0)) +
           R.at(0, 2) * (R.at(1, 0) * R.at(2, 1) - R.at(1, 1) * R.at(2, 0));
}

}  // namespace

TEST_CASE("rodrigues map examples") {
    SUBCASE("zero axis gives the identity") {
        Tensor R = rodrigues(Tensor::zeros({3}));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(R.at(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
    }
    SUBCASE("quarter turn about z") {
        Tensor R = rodrigues(Tensor::from({3}, {0.0, 0.0, M_PI / 2.0}));
        CHECK(R.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(R.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(R.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(R.at(1, 1) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(R.at(2, 2) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("random axes match the reference formula") {
        Rng rng(40);
        for (int trial = 0; trial < 200; ++trial) {
            double wx = rng.uniform(-3.0, 3.0), wy = rng.uniform(-3.0, 3.0),
                   wz = rng.uniform(-3.0, 3.0);
            Tensor R = rodrigues(Tensor::from({3}, {wx, wy, wz}));
            Tensor ref = rodrigues_reference(wx, wy, wz);
            for (long i = 0; i < 9; ++i) CHECK(std::fabs(R[i] - ref[i]) < 1e-9);
            CHECK(ortho_err(R) < 1e-9);
            CHECK(det3(R) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("graph form is differentiable, including near zero") {
        Rng pick(41);
        for (int trial = 0; trial < 20; ++trial) {
            Rng rng(100 + static_cast<uint64_t>(trial));
            ParamStore store;
            Tensor w({1, 3});
            // half the draws probe the small-angle branch
            double s = trial % 2 == 0 ? 1e-5 : 2.0;
            for (long i = 0; i < 3; ++i) w[i] = rng.uniform(-s, s);
            Param& p = store.add("w", w);
            auto loss = [&](Tape& t) {
                Value R = rodrigues_graph(t, t.leaf(p));
                Value target = t.constant(Tensor::from({3, 3}, {0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
                                                                1.0, 0.0, 0.0}));
                Value d = sub(R, target);
                return sum(mul(d, d));
            };
            double err = testutil::max_param_grad_err(store.trainable(), loss, 3, pick);
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("apply_ba examples") {
    Tensor bones = Tensor::from({2, 3}, {100.0, 0.0, 0.0, 0.0, 0.0, 200.0});
    BoneSet bs = decompose(bones);
    SUBCASE("zero residual is the identity") {
        BoneSet out = apply_ba(bs, Tensor::zeros({2, 3}));
        for (long i = 0; i < 6; ++i) CHECK(out.directions[i] == bs.directions[i]);
        for (long i = 0; i < 2; ++i) CHECK(out.lengths[i] == bs.lengths[i]);
    }
    SUBCASE("unit x plus unit y residual normalizes to the diagonal") {
        Tensor g = Tensor::zeros({2, 3});
        g.at(0, 1) = 1.0;
        BoneSet out = apply_ba(bs, g);
        CHECK(out.directions.at(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(out.directions.at(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(out.lengths[0] == doctest::Approx(100.0));
    }
    SUBCASE("degenerate perturbed direction is rejected") {
        Tensor g = Tensor::zeros({2, 3});
        g.at(0, 0) = -1.0;
        CHECK_THROWS_AS(apply_ba(bs, g), DomainError);
    }
    SUBCASE("outputs stay unit-norm over 1000 draws") {
        Rng rng(42);
        for (int trial = 0; trial < 1000; ++trial) {
            Tensor g({2, 3});
            for (long i = 0; i < 6; ++i) g[i] = rng.uniform(-0.9, 0.9);
            BoneSet out;
            try {
                out = apply_ba(bs, g);
            } catch (const DomainError&) {
                continue;
            }
            for (int k = 0; k < 2; ++k) {
                double n = 0.0;
                for (int c = 0; c < 3; ++c) n += out.directions.at(k, c) * out.directions.at(k, c);
                CHECK(std::fabs(std::sqrt(n) - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE("apply_bl examples") {
    Tensor bones = Tensor::from({2, 3}, {400.0, 0.0, 0.0, 0.0, 400.0, 0.0});
    BoneSet bs = decompose(bones);
    SUBCASE("zero ratio is the identity") {
        Tensor g = Tensor::zeros({2});
        BoneSet out = apply_bl(bs, g);
        CHECK(out.lengths[0] == 400.0);
        CHECK(out.lengths[1] == 400.0);
    }
    SUBCASE("ratio 0.1 scales 400 to 440") {
        Tensor g = Tensor::full({2}, 0.1);
        BoneSet out = apply_bl(bs, g);
        CHECK(out.lengths[0] == doctest::Approx(440.0).epsilon(1e-12));
        for (long i = 0; i < 6; ++i) CHECK(out.directions[i] == bs.directions[i]);
    }
    SUBCASE("equal lengths stay equal under a tied ratio") {
        Tensor g = Tensor::full({2}, 0.27);
        BoneSet out = apply_bl(bs, g);
        CHECK(out.lengths[0] == out.lengths[1]);
    }
    SUBCASE("nonpositive scale is rejected") {
        Tensor g = Tensor::full({2}, -1.0);
        CHECK_THROWS_AS(apply_bl(bs, g), DomainError);
    }
}

TEST_CASE("apply_rt examples") {
    const SkeletonTopology& topo = stock_topology();
    Rng rng(43);
    Pose3D pose = random_pose(topo, rng);
    BoneSet bs = decompose(hierarchical_transform(topo, pose));
    SUBCASE("identity transform reproduces the root-centered pose") {
        Tensor t = Tensor::from({3}, {0.0, 0.0, 6000.0});
        Pose3D out = apply_rt(bs, Tensor::identity(3), t, topo);
        Pose3D ref = inverse_hierarchical(topo, recompose(bs), {0.0, 0.0, 6000.0});
        for (long i = 0; i < out.joints.numel(); ++i)
            CHECK(out.joints[i] == doctest::Approx(ref.joints[i]).epsilon(1e-9));
    }
    SUBCASE("pure translation shifts every joint") {
        Tensor base = Tensor::from({3}, {0.0, 0.0, 6000.0});
        Tensor shifted = Tensor::from({3}, {0.0, 0.0, 7000.0});
        Pose3D a = apply_rt(bs, Tensor::identity(3), base, topo);
        Pose3D b = apply_rt(bs, Tensor::identity(3), shifted, topo);
        for (int j = 0; j < topo.joint_count(); ++j) {
            CHECK(b.x(j) == doctest::Approx(a.x(j)).epsilon(1e-12));
            CHECK(b.y(j) == doctest::Approx(a.y(j)).epsilon(1e-12));
            CHECK(b.z(j) == doctest::Approx(a.z(j) + 1000.0).epsilon(1e-12));
        }
    }
    SUBCASE("rigid transforms preserve pairwise distances") {
        Tensor R = rodrigues(Tensor::from({3}, {0.4, -0.8, 1.2}));
        Tensor t = Tensor::from({3}, {250.0, -100.0, 5200.0});
        Pose3D a = apply_rt(bs, Tensor::identity(3), Tensor::from({3}, {0.0, 0.0, 6000.0}), topo);
        Pose3D b = apply_rt(bs, R, t, topo);
        for (int i = 0; i < topo.joint_count(); ++i)
            for (int j = i + 1; j < topo.joint_count(); ++j) {
                double da = 0.0, db = 0.0;
                for (int c = 0; c < 3; ++c) {
                    double ea = a.joints.at(i, c) - a.joints.at(j, c);
                    double eb = b.joints.at(i, c) - b.joints.at(j, c);
                    da += ea * ea;
                    db += eb * eb;
                }
                CHECK(std::sqrt(da) == doctest::Approx(std::sqrt(db)).epsilon(1e-9));
            }
    }
    SUBCASE("depth below the guard is rejected") {
        Tensor t = Tensor::from({3}, {0.0, 0.0, 10.0});
        CHECK_THROWS_AS(apply_rt(bs, Tensor::identity(3), t, topo), DomainError);
    }
}

TEST_CASE("map_params zero rows give the identity augmentation") {
    const SkeletonTopology& topo = stock_topology();
    AugmentorNet net(topo, tiny_cfg(), 7);
    int nb = topo.bone_count();
    AugmentationParams p =
        net.map_params(Tensor::zeros({1, 3 * nb}), Tensor::zeros({1, topo.symmetry_class_count()}),
                       Tensor::zeros({1, 3}), Tensor::zeros({1, 3}), {0.0, 0.0, 5500.0});
    for (long i = 0; i < p.gamma_ba.numel(); ++i) CHECK(p.gamma_ba[i] == 0.0);
    for (long i = 0; i < p.gamma_bl.numel(); ++i) CHECK(p.gamma_bl[i] == 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(p.rotation.at(i, j) == (i == j ? 1.0 : 0.0));
    CHECK(p.translation[0] == 0.0);
    CHECK(p.translation[1] == 0.0);
    CHECK(p.translation[2] == 5500.0);
    p.validate(topo);
}

TEST_CASE("map_params ties gamma_bl across symmetry pairs and boxes ranges") {
    const SkeletonTopology& topo = stock_topology();
    AugmentorConfig cfg = tiny_cfg();
    AugmentorNet net(topo, cfg, 8);
    Rng rng(44);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor ba({1, 3 * topo.bone_count()}), bl({1, topo.symmetry_class_count()}), rot({1, 3}),
            tr({1, 3});
        for (long i = 0; i < ba.numel(); ++i) ba[i] = rng.uniform(-4.0, 4.0);
        for (long i = 0; i < bl.numel(); ++i) bl[i] = rng.uniform(-4.0, 4.0);
        for (long i = 0; i < 3; ++i) rot[i] = rng.uniform(-4.0, 4.0);
        for (long i = 0; i < 3; ++i) tr[i] = rng.uniform(-4.0, 4.0);
        AugmentationParams p = net.map_params(ba, bl, rot, tr, {0.0, 0.0, 5500.0});
        p.validate(topo);
        for (const auto& pr : topo.symmetry_pairs()) CHECK(p.gamma_bl[pr[0]] == p.gamma_bl[pr[1]]);
        for (long i = 0; i < p.gamma_ba.numel(); ++i) CHECK(std::fabs(p.gamma_ba[i]) <= cfg.s_ba);
        for (long i = 0; i < p.gamma_bl.numel(); ++i) CHECK(std::fabs(p.gamma_bl[i]) <= cfg.s_bl);
        CHECK(ortho_err(p.rotation) < 1e-9);
        for (int c = 0; c < 3; ++c)
            CHECK(std::fabs(p.translation[c] - cfg.t0[static_cast<size_t>(c)]) <=
                  cfg.s_t[static_cast<size_t>(c)]);
    }
}

TEST_CASE("augment validity over many sampled draws") {
    const SkeletonTopology& topo = stock_topology();
    AugmentorNet net(topo, tiny_cfg(), 9);
    Camera cam = test_camera();
    Rng rng(45);
    Rng poser(46);
    int accepted = 0, rejected = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Pose3D pose = random_pose(topo, poser);
        try {
            AugmentResult res = augment(net, pose, cam, rng);
            ++accepted;
            res.params.validate(topo);
            CHECK(camera_valid(res.pose3d));
            BoneSet bs = decompose(hierarchical_transform(topo, res.pose3d));
            for (int k = 0; k < topo.bone_count(); ++k) {
                double n = 0.0;
                for (int c = 0; c < 3; ++c) n += bs.directions.at(k, c) * bs.directions.at(k, c);
                CHECK(std::fabs(std::sqrt(n) - 1.0) < 1e-9);
            }
        } catch (const DomainError&) {
            ++rejected;
        }
    }
    CHECK(accepted > 0);
}

TEST_CASE("identity-forced augmentation reproduces the source geometry") {
    const SkeletonTopology& topo = stock_topology();
    AugmentorConfig cfg = tiny_cfg();
    cfg.t0_source_root = true;
    AugmentorNet net(topo, cfg, 10);
    // zero every head so raw outputs vanish
    for (Param* p : net.params().all())
        if (p->name.rfind("head_", 0) == 0)
            for (long i = 0; i < p->value.numel(); ++i) p->value[i] = 0.0;
    Rng rng(47);
    Pose3D pose = random_pose(topo, rng);
    Rng noise(48);
    AugmentResult res = augment(net, pose, test_camera(), noise);
    for (long i = 0; i < pose.joints.numel(); ++i)
        CHECK(res.pose3d.joints[i] == doctest::Approx(pose.joints[i]).epsilon(1e-9));
    Pose2D reproj = project(res.pose3d, test_camera());
    for (long i = 0; i < reproj.joints.numel(); ++i)
        CHECK(res.pose2d.joints[i] == doctest::Approx(reproj.joints[i]).epsilon(1e-12));
}

TEST_CASE("augment gradients reach the trunk weights") {
    const SkeletonTopology& topo = stock_topology();
    AugmentorNet net(topo, tiny_cfg(), 11);
    Camera cam = test_camera();
    Rng poser(49);
    Pose3D pose = random_pose(topo, poser);
    Tensor noise({1, net.config().noise_dim});
    Rng ns(50);
    for (long i = 0; i < noise.numel(); ++i) noise[i] = ns.normal();
    Tensor input = net.make_input(pose, noise);
    Rng pick(51);
    auto loss = [&](Tape& t) -> Value {
        auto heads = net.forward_heads(t, t.constant(input), false, true);
        SampleAugGraph g = build_augment_graph(t, net, pose, cam, heads.ba, heads.bl_classes,
                                               heads.rot, heads.trans, false);
        REQUIRE(g.accepted);
        return mean(g.pose3d_mm);
    };
    double err = testutil::max_param_grad_err(net.params().trainable(), loss, 4, pick);
    CHECK(err < 1e-4);
}

TEST_CASE("different noise vectors give different parameters") {
    const SkeletonTopology& topo = stock_topology();
    AugmentorNet net(topo, tiny_cfg(), 12);
    Rng poser(52);
    Pose3D pose = random_pose(topo, poser);
    Rng ns(53);
    int distinct = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Tensor n1({1, net.config().noise_dim}), n2({1, net.config().noise_dim});
        for (long i = 0; i < n1.numel(); ++i) n1[i] = ns.normal();
        for (long i = 0; i < n2.numel(); ++i) n2[i] = ns.normal();
        auto h1 = net.forward_heads_value(net.make_input(pose, n1));
        auto h2 = net.forward_heads_value(net.make_input(pose, n2));
        double diff = 0.0;
        for (long i = 0; i < h1.ba.numel(); ++i) diff = std::max(diff, std::fabs(h1.ba[i] - h2.ba[i]));
        for (long i = 0; i < h1.trans.numel(); ++i)
            diff = std::max(diff, std::fabs(h1.trans[i] - h2.trans[i]));
        if (diff > 1e-6) ++distinct;
    }
    CHECK(distinct >= 99);
}
