#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "liftaug/augmentor.hpp"
#include "liftaug/errors.hpp"
#include "liftaug/evaluation.hpp"
#include "liftaug/synthetic.hpp"

#include "support.hpp"

using namespace liftaug;
using testutil::random_pose;
using testutil::stock_topology;

namespace {

Pose3D random_cloud(int joints, Rng& rng, double spread = 100.0) {
    Pose3D p(joints);
    for (long i = 0; i < p.joints.numel(); ++i) p.joints[i] = rng.uniform(-spread, spread);
    return p;
}

Pose3D apply_similarity(const Pose3D& p, const Tensor& R, double s,
                        const std::array<double, 3>& t) {
    Pose3D out(p.joint_count());
    for (int j = 0; j < p.joint_count(); ++j) {
        for (int r = 0; r < 3; ++r) {
            double acc = t[static_cast<size_t>(r)];
            for (int c = 0; c < 3; ++c) acc += s * R.at(r, c) * p.joints.at(j, c);
            out.joints.at(j, r) = acc;
        }
    }
    return out;
}

double squared_err(const Pose3D& a, const Pose3D& b) {
    double acc = 0.0;
    for (long i = 0; i < a.joints.numel(); ++i) {
        double d = a.joints[i] - b.joints[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

TEST_CASE("mpjpe matches a hand computation") {
    Pose3D gt0(2), gt1(2), pr0(2), pr1(2);
    pr0.set_joint(0, 3.0, 4.0, 0.0);   // distance 5
    pr0.set_joint(1, 0.0, 0.0, 2.0);   // distance 2
    pr1.set_joint(0, 1.0, 2.0, 2.0);   // distance 3
    gt1.set_joint(1, 0.0, 0.0, 0.0);   // distance 0
    std::vector<Pose3D> pred = {pr0, pr1}, gt = {gt0, gt1};
    CHECK(mpjpe(pred, gt) == doctest::Approx((5.0 + 2.0) / 2.0 / 2.0 + (3.0 + 0.0) / 2.0 / 2.0)
                                 .epsilon(1e-12));
    CHECK(mpjpe(gt, gt) == 0.0);
}

TEST_CASE("pose set mismatches are rejected") {
    Rng rng(61);
    std::vector<Pose3D> a = {random_cloud(4, rng)}, b = {random_cloud(4, rng), random_cloud(4, rng)};
    CHECK_THROWS_AS(mpjpe(a, b), ShapeError);
    CHECK_THROWS_AS(mpjpe(std::vector<Pose3D>{}, std::vector<Pose3D>{}), ShapeError);
    std::vector<Pose3D> c = {random_cloud(5, rng)};
    CHECK_THROWS_AS(mpjpe(a, c), ShapeError);
    CHECK_THROWS_AS(pck_auc(a, c), ShapeError);
}

TEST_CASE("alignment recovers any similarity transform exactly") {
    Rng rng(62);
    for (int trial = 0; trial < 50; ++trial) {
        Pose3D gt = random_cloud(10, rng);
        Tensor axis = Tensor::from({3}, {rng.uniform(-2, 2), rng.uniform(-2, 2),
                                         rng.uniform(-2, 2)});
        Tensor R = rodrigues(axis);
        double s = rng.uniform(0.3, 3.0);
        std::array<double, 3> t = {rng.uniform(-500, 500), rng.uniform(-500, 500),
                                   rng.uniform(-500, 500)};
        std::vector<Pose3D> pred = {apply_similarity(gt, R, s, t)};
        std::vector<Pose3D> gts = {gt};
        CHECK(pa_mpjpe(pred, gts) < 1e-6);
        CHECK(mpjpe(pred, gts) > 1.0);  // alignment did the work, not coincidence
    }
}

TEST_CASE("alignment is optimal in squared error over similarity transforms") {
    Rng rng(63);
    for (int trial = 0; trial < 10; ++trial) {
        Pose3D gt = random_cloud(8, rng);
        Pose3D pred = random_cloud(8, rng);
        double aligned_err = squared_err(procrustes_align(pred, gt), gt);
        CHECK(aligned_err <= squared_err(pred, gt) + 1e-9);  // identity is a candidate
        for (int k = 0; k < 100; ++k) {
            Tensor R = rodrigues(Tensor::from({3}, {rng.uniform(-3, 3), rng.uniform(-3, 3),
                                                    rng.uniform(-3, 3)}));
            double s = rng.uniform(0.2, 4.0);
            std::array<double, 3> t = {rng.uniform(-200, 200), rng.uniform(-200, 200),
                                       rng.uniform(-200, 200)};
            CHECK(aligned_err <= squared_err(apply_similarity(pred, R, s, t), gt) + 1e-9);
        }
    }
}

TEST_CASE("alignment rejects an all-coincident prediction") {
    Pose3D gt(4);
    gt.set_joint(1, 10, 0, 0);
    Pose3D flat(4);
    for (int j = 0; j < 4; ++j) flat.set_joint(j, 5.0, 5.0, 5.0);
    CHECK_THROWS_AS(procrustes_align(flat, gt), DomainError);
}

TEST_CASE("pck and auc enumerate exactly on constructed errors") {
    SUBCASE("uniform 75mm errors") {
        Pose3D gt(4), pred(4);
        for (int j = 0; j < 4; ++j) pred.set_joint(j, 75.0, 0.0, 0.0);
        std::vector<Pose3D> p = {pred}, g = {gt};
        auto [pck150, auc] = pck_auc(p, g);
        CHECK(pck150 == 1.0);  // 75 < 150
        // thresholds 0,5,...,150: the 15 of 31 at 80mm and above count
        CHECK(auc == doctest::Approx(15.0 / 31.0).epsilon(1e-12));
        CHECK(pck_auc(p, g, 75.0).first == 0.0);  // strictly-under comparison
        CHECK(pck_auc(p, g, 75.01).first == 1.0);
    }
    SUBCASE("perfect predictions score 1 on the whole curve") {
        Rng rng(64);
        Pose3D pose = random_cloud(6, rng);
        std::vector<Pose3D> p = {pose}, g = {pose};
        auto [pck, auc] = pck_auc(p, g);
        CHECK(pck == 1.0);
        CHECK(auc == 1.0);  // zero threshold admits exact zeros
    }
    SUBCASE("half the joints beyond the curve") {
        Pose3D gt(2), pred(2);
        pred.set_joint(1, 0.0, 200.0, 0.0);
        std::vector<Pose3D> p = {pred}, g = {gt};
        auto [pck, auc] = pck_auc(p, g);
        CHECK(pck == 0.5);
        CHECK(auc == 0.5);
    }
    SUBCASE("monotone in the threshold") {
        Rng rng(65);
        std::vector<Pose3D> p = {random_cloud(10, rng)}, g = {random_cloud(10, rng)};
        double prev = 0.0;
        for (double thr : {0.0, 25.0, 50.0, 100.0, 200.0, 400.0}) {
            double pck = pck_auc(p, g, thr).first;
            CHECK(pck >= prev);
            prev = pck;
        }
        CHECK(prev == 1.0);  // every error is under 400 for 100mm clouds
    }
    SUBCASE("invariant to sample order") {
        Rng rng(66);
        std::vector<Pose3D> p, g;
        for (int i = 0; i < 6; ++i) {
            p.push_back(random_cloud(5, rng));
            g.push_back(random_cloud(5, rng));
        }
        auto [pck, auc] = pck_auc(p, g);
        std::vector<Pose3D> pr(p.rbegin(), p.rend()), gr(g.rbegin(), g.rend());
        auto [pck2, auc2] = pck_auc(pr, gr);
        CHECK(pck == pck2);
        CHECK(auc == auc2);
        CHECK(mpjpe(p, g) == doctest::Approx(mpjpe(pr, gr)).epsilon(1e-12));
    }
    SUBCASE("bad thresholds are rejected") {
        Rng rng(67);
        std::vector<Pose3D> p = {random_cloud(3, rng)}, g = {random_cloud(3, rng)};
        CHECK_THROWS_AS(pck_auc(p, g, -1.0), ContractError);
        CHECK_THROWS_AS(pck_auc(p, g, 150.0, 150.0, 0.0), ContractError);
    }
}

TEST_CASE("evaluation report carries every metric as JSON") {
    Rng rng(68);
    std::vector<Pose3D> p, g;
    for (int i = 0; i < 4; ++i) {
        p.push_back(random_cloud(6, rng));
        g.push_back(random_cloud(6, rng));
    }
    EvalReport rep = evaluate(p, g);
    CHECK(rep.per_sample_mpjpe_mm.size() == 4);
    CHECK(rep.pa_mpjpe_mm <= rep.mpjpe_mm + 1e-9);
    double mean = 0.0;
    for (double e : rep.per_sample_mpjpe_mm) mean += e;
    CHECK(rep.mpjpe_mm == doctest::Approx(mean / 4.0).epsilon(1e-12));

    nlohmann::json j = nlohmann::json::parse(rep.to_json());
    CHECK(j.at("mpjpe_mm").get<double>() == doctest::Approx(rep.mpjpe_mm));
    CHECK(j.at("pa_mpjpe_mm").get<double>() == doctest::Approx(rep.pa_mpjpe_mm));
    CHECK(j.at("pck").get<double>() == doctest::Approx(rep.pck));
    CHECK(j.at("auc").get<double>() == doctest::Approx(rep.auc));
    CHECK(j.at("samples").get<int>() == 4);
}

TEST_CASE("identity augmentation parameters reproduce the source table bitwise") {
    const SkeletonTopology& topo = stock_topology();
    Rng rng(69);
    std::vector<PoseRecord> records;
    for (int i = 0; i < 5; ++i) {
        PoseRecord rec;
        rec.pose3d = random_pose(topo, rng);
        records.push_back(rec);
    }
    const int bones = topo.bone_count();
    auto identity_params = [&](const PoseRecord& rec, int) {
        AugmentationParams p;
        p.gamma_ba = Tensor::zeros({bones, 3});
        p.gamma_bl = Tensor::zeros({bones});
        p.rotation = Tensor::identity(3);
        p.translation = Tensor::from(
            {3}, {rec.pose3d.x(topo.root()), rec.pose3d.y(topo.root()), rec.pose3d.z(topo.root())});
        return p;
    };
    RtDistribution dist = export_rt_distribution_params(topo, identity_params, records, 8);
    REQUIRE(dist.source.size() == 8);  // cycles past the 5 records
    REQUIRE(dist.augmented.size() == 8);
    for (size_t i = 0; i < dist.source.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            CHECK(dist.source[i].viewpoint[static_cast<size_t>(c)] ==
                  dist.augmented[i].viewpoint[static_cast<size_t>(c)]);
            CHECK(dist.source[i].position_mm[static_cast<size_t>(c)] ==
                  dist.augmented[i].position_mm[static_cast<size_t>(c)]);
        }
    }
    CHECK(dist.source_cov_trace == dist.augmented_cov_trace);
}

TEST_CASE("position covariance trace matches a hand computation") {
    const SkeletonTopology& topo = stock_topology();
    std::vector<PoseRecord> records(2);
    records[0].pose3d = Pose3D(topo.joint_count());
    records[1].pose3d = Pose3D(topo.joint_count());
    records[0].pose3d.set_joint(topo.root(), 0.0, 0.0, 1000.0);
    records[1].pose3d.set_joint(topo.root(), 0.0, 0.0, 3000.0);
    auto fixed = [&](const PoseRecord& rec, int) {
        AugmentationParams p;
        p.gamma_ba = Tensor::zeros({topo.bone_count(), 3});
        p.gamma_bl = Tensor::zeros({topo.bone_count()});
        p.rotation = Tensor::identity(3);
        p.translation = Tensor::from(
            {3}, {rec.pose3d.x(topo.root()), rec.pose3d.y(topo.root()), rec.pose3d.z(topo.root())});
        return p;
    };
    RtDistribution dist = export_rt_distribution_params(topo, fixed, records, 2);
    // roots 1000 and 3000 on z: mean 2000, variance 1e6, x/y contribute 0
    CHECK(dist.source_cov_trace == doctest::Approx(1.0e6).epsilon(1e-12));
    CHECK(dist.augmented_cov_trace == doctest::Approx(1.0e6).epsilon(1e-12));
}

TEST_CASE("sampled distribution export runs the real augmentor") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticConfig scfg;
    scfg.source_train = 6;
    scfg.source_test = 1;
    scfg.target_test = 1;
    SyntheticOutput data = generate_synthetic(topo, scfg, 71);
    AugmentorConfig acfg;
    acfg.width = 32;
    acfg.noise_dim = 8;
    AugmentorNet net(topo, acfg, 72);
    Rng rng(73);
    RtDistribution dist = export_rt_distribution(net, data.source_train.records, 10, rng);
    CHECK(dist.source.size() == 10);
    CHECK(dist.augmented.size() == 10);
    CHECK(dist.source_cov_trace >= 0.0);
    CHECK(dist.augmented_cov_trace >= 0.0);
    for (const RtRow& r : dist.augmented) {
        double n = std::sqrt(r.viewpoint[0] * r.viewpoint[0] + r.viewpoint[1] * r.viewpoint[1] +
                             r.viewpoint[2] * r.viewpoint[2]);
        CHECK(std::fabs(n - 1.0) < 1e-9);
    }

    std::filesystem::path csv = std::filesystem::temp_directory_path() / "liftaug_dist.csv";
    std::filesystem::remove(csv);
    dist.write_csv(csv.string());
    std::ifstream in(csv);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "pool,view_x,view_y,view_z,pos_x_mm,pos_y_mm,pos_z_mm");
    size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 20);
}
