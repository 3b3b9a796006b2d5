#include <doctest.h>

#include <cmath>
#include <string>

#include "liftaug/errors.hpp"
#include "liftaug/estimator.hpp"
#include "liftaug/losses.hpp"
#include "liftaug/ops.hpp"
#include "liftaug/rng.hpp"

#include "support.hpp"

using namespace liftaug;
using testutil::random_pose;
using testutil::stock_topology;
using testutil::test_camera;

namespace {

EstimatorConfig tiny_cfg() {
    EstimatorConfig cfg;
    cfg.width = 32;
    cfg.blocks = 2;
    return cfg;
}

}  // namespace

TEST_CASE("zeroed output layer maps everything to the origin") {
    const SkeletonTopology& topo = stock_topology();
    EstimatorNet net(topo.joint_count(), topo.root(), tiny_cfg(), 80);
    for (Param* p : net.params().all())
        if (p->name.rfind("output.", 0) == 0)
            for (long i = 0; i < p->value.numel(); ++i) p->value[i] = 0.0;
    Rng rng(81);
    Pose3D pose = random_pose(topo, rng);
    Pose2D p2 = project(pose, test_camera());
    Pose3D out = net.estimate(p2, test_camera(), NetMode::eval);
    for (long i = 0; i < out.joints.numel(); ++i) CHECK(out.joints[i] == 0.0);
}

TEST_CASE("eval mode is deterministic and root-relative") {
    const SkeletonTopology& topo = stock_topology();
    EstimatorNet net(topo.joint_count(), topo.root(), tiny_cfg(), 82);
    Rng rng(83);
    for (int trial = 0; trial < 20; ++trial) {
        Pose3D pose = random_pose(topo, rng);
        Pose2D p2 = project(pose, test_camera());
        Pose3D a = net.estimate(p2, test_camera(), NetMode::eval);
        Pose3D b = net.estimate(p2, test_camera(), NetMode::eval);
        for (long i = 0; i < a.joints.numel(); ++i) CHECK(a.joints[i] == b.joints[i]);
        CHECK(a.x(topo.root()) == 0.0);
        CHECK(a.y(topo.root()) == 0.0);
        CHECK(a.z(topo.root()) == 0.0);
        CHECK(a.all_finite());
    }
}

TEST_CASE("train mode requires a dropout rng") {
    const SkeletonTopology& topo = stock_topology();
    EstimatorNet net(topo.joint_count(), topo.root(), tiny_cfg(), 84);
    Tape t;
    Value x = t.constant(Tensor::zeros({2, 2 * topo.joint_count()}));
    CHECK_THROWS_AS(net.forward(t, x, NetMode::train, true, nullptr), ContractError);
}

TEST_CASE("estimator gradients match finite differences") {
    const SkeletonTopology& topo = stock_topology();
    Camera cam = test_camera();
    Rng poser(85);
    Rng pick(86);
    for (int draw = 0; draw < 20; ++draw) {
        EstimatorNet net(topo.joint_count(), topo.root(), tiny_cfg(),
                         300 + static_cast<uint64_t>(draw));
        Tensor x({8, 2 * topo.joint_count()});
        Tensor y({8, 3 * topo.joint_count()});
        for (int r = 0; r < 8; ++r) {
            Pose3D pose = random_pose(topo, poser);
            Tensor norm = normalize_pose2d(project(pose, cam), cam);
            for (int c = 0; c < norm.numel(); ++c) x.at(r, c) = norm[c];
            for (int j = 0; j < topo.joint_count(); ++j)
                for (int c = 0; c < 3; ++c)
                    y.at(r, 3 * j + c) =
                        (pose.joints.at(j, c) - pose.joints.at(topo.root(), c)) * 1e-3;
        }
        auto loss = [&](Tape& t) {
            Rng frozen(999);  // frozen dropout mask
            Value pred = net.forward(t, t.constant(x), NetMode::train, true, &frozen);
            return pose_loss_graph(pred, t.constant(y));
        };
        double err = testutil::max_param_grad_err(net.params().trainable(), loss, 3, pick);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("pose loss examples") {
    SUBCASE("identical poses give 0") {
        Pose3D a(16), b(16);
        Rng rng(87);
        for (long i = 0; i < a.joints.numel(); ++i) a.joints[i] = b.joints[i] = rng.uniform(-1, 1);
        CHECK(pose_loss(a, b) == 0.0);
    }
    SUBCASE("one joint off by a 3-4-5 triangle gives 25/16") {
        Pose3D a(16), b(16);
        b.set_joint(7, 3.0, 0.0, 4.0);
        CHECK(pose_loss(a, b) == doctest::Approx(25.0 / 16.0).epsilon(1e-12));
    }
    SUBCASE("symmetric and nonnegative") {
        Rng rng(88);
        for (int trial = 0; trial < 50; ++trial) {
            Pose3D a(5), b(5);
            for (long i = 0; i < a.joints.numel(); ++i) {
                a.joints[i] = rng.uniform(-100, 100);
                b.joints[i] = rng.uniform(-100, 100);
            }
            double ab = pose_loss(a, b);
            CHECK(ab == pose_loss(b, a));
            CHECK(ab >= 0.0);
        }
    }
    SUBCASE("graph form agrees with the scalar form") {
        Rng rng(89);
        Pose3D a(6), b(6);
        for (long i = 0; i < a.joints.numel(); ++i) {
            a.joints[i] = rng.uniform(-10, 10);
            b.joints[i] = rng.uniform(-10, 10);
        }
        Tape t;
        Tensor ra = Tensor::from({1, 18}, a.joints.raw());
        Tensor rb = Tensor::from({1, 18}, b.joints.raw());
        Value g = pose_loss_graph(t.constant(ra), t.constant(rb));
        CHECK(g.val().item() == doctest::Approx(pose_loss(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("feedback loss identities") {
    SUBCASE("matched difficulty gives |1 - e^0| = 0") {
        CHECK(feedback_loss(2.0, 1.0, 2.0) == 0.0);
    }
    SUBCASE("the e^-0.4 case") {
        // lp_aug 1.6, lp_orig 1.0, beta 2 -> |1 - e^{-0.4}|
        CHECK(feedback_loss(1.6, 1.0, 2.0) ==
              doctest::Approx(1.0 - std::exp(-0.4)).epsilon(1e-12));
        CHECK(std::fabs(feedback_loss(1.6, 1.0, 2.0) - 0.329679953964361) < 1e-9);
    }
    SUBCASE("exponent is clamped") {
        double big = feedback_loss(1000.0, 0.0, 2.0);
        CHECK(big == doctest::Approx(std::exp(kFeedbackExpClamp) - 1.0));
        CHECK(std::isfinite(big));
    }
    SUBCASE("graph form agrees and is differentiable") {
        Rng pick(90);
        for (int trial = 0; trial < 20; ++trial) {
            Rng rng(400 + static_cast<uint64_t>(trial));
            ParamStore store;
            Param& p = store.add("p", Tensor::scalar(rng.uniform(0.1, 3.0)));
            double lp_orig = rng.uniform(0.05, 1.0);
            double beta = rng.uniform(1.5, 20.0);
            // keep the probe away from the |1 - e^x| kink at x = 0
            while (std::fabs(p.value[0] * p.value[0] - beta * lp_orig) < 1e-2)
                lp_orig += 0.02;
            auto loss = [&](Tape& t) {
                Value lp_aug = sum(mul(t.leaf(p), t.leaf(p)));
                return feedback_loss_graph(lp_aug, lp_orig, beta, nullptr);
            };
            {
                Tape t;
                Value v = loss(t);
                CHECK(v.val().item() ==
                      doctest::Approx(feedback_loss(p.value[0] * p.value[0], lp_orig, beta))
                          .epsilon(1e-12));
            }
            double err = testutil::max_param_grad_err(store.trainable(), loss, 1, pick);
            CHECK(err < 1e-4);
        }
    }
    SUBCASE("contract violations are rejected") {
        CHECK_THROWS_AS(feedback_loss(-0.1, 1.0, 2.0), ContractError);
        CHECK_THROWS_AS(feedback_loss(1.0, 1.0, 1.0), ContractError);
    }
}

TEST_CASE("reg loss branch behavior at threshold 0.1") {
    SUBCASE("below the threshold the loss is exactly 0") {
        Tensor g = Tensor::full({4}, 0.08);
        CHECK(reg_loss(g, 0.1) == 0.0);
        Tensor mixed = Tensor::from({4}, {0.05, -0.05, 0.08, -0.08});
        CHECK(reg_loss(mixed, 0.1) == 0.0);  // mean |gamma| = 0.065
    }
    SUBCASE("at or above the threshold the loss is the squared norm") {
        Tensor g = Tensor::full({4}, 0.2);
        CHECK(reg_loss(g, 0.1) == doctest::Approx(4 * 0.04).epsilon(1e-12));
        Tensor exact = Tensor::full({4}, 0.1);
        CHECK(reg_loss(exact, 0.1) == doctest::Approx(4 * 0.01).epsilon(1e-12));
    }
    SUBCASE("sign-mixed values use the mean of absolute values") {
        Tensor g = Tensor::from({2}, {0.3, -0.3});  // plain mean would be 0
        CHECK(reg_loss(g, 0.1) == doctest::Approx(0.18).epsilon(1e-12));
    }
    SUBCASE("graph form matches and is differentiable in the active branch") {
        Rng pick(91);
        ParamStore store;
        Param& p = store.add("p", Tensor::from({1, 4}, {0.3, -0.2, 0.4, 0.25}));
        auto loss = [&](Tape& t) { return reg_loss_graph(t.leaf(p), 0.1); };
        {
            Tape t;
            CHECK(loss(t).val().item() == doctest::Approx(reg_loss(p.value, 0.1)).epsilon(1e-12));
        }
        double err = testutil::max_param_grad_err(store.trainable(), loss, 4, pick);
        CHECK(err < 1e-4);
    }
    SUBCASE("inactive branch contributes zero gradient") {
        ParamStore store;
        Param& p = store.add("p", Tensor::full({1, 4}, 0.01));
        Tape t;
        store.zero_grad();
        t.backward(reg_loss_graph(t.leaf(p), 0.1));
        for (long i = 0; i < 4; ++i) CHECK(p.grad[i] == 0.0);
    }
}

TEST_CASE("combined augmentor objective composes its terms") {
    Tensor ba = Tensor::full({4}, 0.3);
    Tensor bl = Tensor::full({2}, 0.02);
    double composed = augmentor_loss(1.6, 1.0, 2.0, ba, bl, 0.1, 0.7, 2.0);
    double manual = feedback_loss(1.6, 1.0, 2.0) + reg_loss(ba, 0.1) + reg_loss(bl, 0.1) +
                    2.0 * 0.7;
    CHECK(composed == doctest::Approx(manual).epsilon(1e-12));
}
