#include <benchmark/benchmark.h>

#include <cmath>
#include <string>

#include "liftaug/adam.hpp"
#include "liftaug/augmentor.hpp"
#include "liftaug/camera.hpp"
#include "liftaug/errors.hpp"
#include "liftaug/estimator.hpp"
#include "liftaug/ops.hpp"
#include "liftaug/rng.hpp"
#include "liftaug/skeleton.hpp"
#include "liftaug/synthetic.hpp"

using namespace liftaug;

namespace {

const SkeletonTopology& topo() {
    static SkeletonTopology t = SkeletonTopology::from_json_file(
        std::string(LIFTAUG_SOURCE_DIR) + "/data/skeleton_h36m16.json");
    return t;
}

Pose3D sample_pose(Rng& rng) {
    Tensor bones({topo().bone_count(), 3});
    for (int k = 0; k < topo().bone_count(); ++k) {
        double v[3], n = 0.0;
        for (int c = 0; c < 3; ++c) {
            v[c] = rng.normal();
            n += v[c] * v[c];
        }
        n = std::sqrt(std::max(n, 1e-6));
        double len = rng.uniform(200.0, 500.0);
        for (int c = 0; c < 3; ++c) bones.at(k, c) = len * v[c] / n;
    }
    return inverse_hierarchical(topo(), bones, {0.0, 0.0, 5000.0});
}

}  // namespace

static void BM_MatmulBackward(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    ParamStore store;
    Tensor init({n, n});
    for (long i = 0; i < init.numel(); ++i) init[i] = rng.normal();
    Param& w = store.add("w", init);
    Tensor x(std::vector<int>{1, n});
    for (long i = 0; i < x.numel(); ++i) x[i] = rng.normal();
    for (auto _ : state) {
        Tape t;
        Value y = matmul(t.constant(x), t.leaf(w));
        Value loss = mean(mul(y, y));
        store.zero_grad();
        t.backward(loss);
        benchmark::DoNotOptimize(w.grad.data());
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_MatmulBackward)->RangeMultiplier(2)->Range(64, 512)->Complexity();

static void BM_KinematicRoundTrip(benchmark::State& state) {
    Rng rng(2);
    Pose3D pose = sample_pose(rng);
    for (auto _ : state) {
        Tensor bones = hierarchical_transform(topo(), pose);
        Pose3D back = inverse_hierarchical(topo(), bones, {0.0, 0.0, 5000.0});
        benchmark::DoNotOptimize(back.joints.data());
    }
}
BENCHMARK(BM_KinematicRoundTrip);

static void BM_PartGramMatrices(benchmark::State& state) {
    Rng rng(3);
    Pose3D pose = sample_pose(rng);
    for (auto _ : state) {
        PartKCS kcs = part_kcs(topo(), pose);
        benchmark::DoNotOptimize(kcs.parts.data());
    }
}
BENCHMARK(BM_PartGramMatrices);

static void BM_EstimatorEvalBatch(benchmark::State& state) {
    const int batch = static_cast<int>(state.range(0));
    EstimatorConfig cfg;
    cfg.width = 384;
    cfg.blocks = 2;
    EstimatorNet est(topo().joint_count(), topo().root(), cfg, 4);
    Camera cam{1100, 1100, 512, 512};
    Rng rng(5);
    Tensor x({batch, 2 * topo().joint_count()});
    for (int r = 0; r < batch; ++r) {
        Tensor row = normalize_pose2d(project(sample_pose(rng), cam), cam);
        for (int c = 0; c < row.numel(); ++c) x.at(r, c) = row[c];
    }
    for (auto _ : state) {
        Tensor pred = est.forward_value(x);
        benchmark::DoNotOptimize(pred.data());
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_EstimatorEvalBatch)->Arg(64)->Arg(256);

static void BM_EstimatorTrainStep(benchmark::State& state) {
    const int batch = static_cast<int>(state.range(0));
    const int J = topo().joint_count();
    EstimatorConfig cfg;
    cfg.width = 384;
    cfg.blocks = 2;
    EstimatorNet est(J, topo().root(), cfg, 6);
    Adam adam;
    Camera cam{1100, 1100, 512, 512};
    Rng rng(7);
    Tensor x({batch, 2 * J}), y({batch, 3 * J});
    for (int r = 0; r < batch; ++r) {
        Pose3D pose = sample_pose(rng);
        Tensor row = normalize_pose2d(project(pose, cam), cam);
        for (int c = 0; c < row.numel(); ++c) x.at(r, c) = row[c];
        for (int j = 0; j < J; ++j)
            for (int c = 0; c < 3; ++c)
                y.at(r, 3 * j + c) =
                    (pose.joints.at(j, c) - pose.joints.at(topo().root(), c)) * 1e-3;
    }
    long step = 0;
    for (auto _ : state) {
        Tape t;
        Rng drop = rng.stream("dropout", static_cast<uint64_t>(step++));
        Value loss = pose_loss_graph(
            est.forward(t, t.constant(x), NetMode::train, true, &drop), t.constant(y));
        est.params().zero_grad();
        t.backward(loss);
        adam.step(est.params().trainable());
        benchmark::DoNotOptimize(loss.val().item());
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_EstimatorTrainStep)->Arg(64)->Arg(256);

static void BM_AugmentGraph(benchmark::State& state) {
    AugmentorConfig cfg;
    cfg.width = 128;
    cfg.noise_dim = 32;
    AugmentorNet net(topo(), cfg, 8);
    Camera cam{1100, 1100, 512, 512};
    Rng rng(9);
    Pose3D pose = sample_pose(rng);
    Tensor noise({cfg.noise_dim});
    for (long k = 0; k < noise.numel(); ++k) noise[k] = rng.normal();
    Tensor input = net.make_input(pose, noise);
    for (auto _ : state) {
        Tape t;
        AugmentorNet::Heads heads = net.forward_heads(t, t.constant(input), false, true);
        SampleAugGraph g = build_augment_graph(t, net, pose, cam, heads.ba, heads.bl_classes,
                                               heads.rot, heads.trans, false);
        if (!g.accepted) continue;
        Value loss = mean(g.rel3d_m_row);
        net.params().zero_grad();
        t.backward(loss);
        benchmark::DoNotOptimize(g.pose3d_mm.val().data());
    }
}
BENCHMARK(BM_AugmentGraph);

static void BM_AugmentSample(benchmark::State& state) {
    AugmentorConfig cfg;
    cfg.width = 128;
    cfg.noise_dim = 32;
    AugmentorNet net(topo(), cfg, 10);
    Camera cam{1100, 1100, 512, 512};
    Rng rng(11);
    Pose3D pose = sample_pose(rng);
    for (auto _ : state) {
        try {
            AugmentResult res = augment(net, pose, cam, rng);
            benchmark::DoNotOptimize(res.pose3d.joints.data());
        } catch (const DomainError&) {
        }
    }
}
BENCHMARK(BM_AugmentSample);

static void BM_SyntheticGeneration(benchmark::State& state) {
    SyntheticConfig cfg;
    cfg.source_train = static_cast<int>(state.range(0));
    cfg.source_test = 1;
    cfg.target_test = 1;
    for (auto _ : state) {
        SyntheticOutput out = generate_synthetic(topo(), cfg, 12);
        benchmark::DoNotOptimize(out.source_train.records.data());
    }
    state.SetItemsProcessed(state.iterations() * cfg.source_train);
}
BENCHMARK(BM_SyntheticGeneration)->Arg(256);

BENCHMARK_MAIN();
