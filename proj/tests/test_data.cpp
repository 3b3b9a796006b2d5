#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "liftaug/checkpoint.hpp"
#include "liftaug/config.hpp"
#include "liftaug/dataset.hpp"
#include "liftaug/errors.hpp"
#include "liftaug/synthetic.hpp"

#include "support.hpp"

using namespace liftaug;
using testutil::stock_topology;

namespace {

std::filesystem::path scratch_file(const char* leaf) {
    std::filesystem::path p = std::filesystem::temp_directory_path() / leaf;
    std::filesystem::remove(p);
    return p;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string valid_header(const SkeletonTopology& topo) {
    return std::string("{\"format\":\"liftaug-poses\",\"version\":1,\"units\":\"mm\","
                       "\"joint_count\":") +
           std::to_string(topo.joint_count()) + ",\"topology_hash\":\"" +
           std::to_string(topo.hash()) + "\"}\n";
}

std::string flat_record(int joints, double z) {
    std::string rows;
    for (int j = 0; j < joints; ++j) {
        rows += "[" + std::to_string(10.0 * j) + ",20," + std::to_string(z) + "]";
        if (j + 1 < joints) rows += ",";
    }
    return "{\"pose3d\":[" + rows +
           "],\"camera\":{\"fx\":1000,\"fy\":1000,\"cx\":500,\"cy\":500}}\n";
}

SyntheticConfig small_synth() {
    SyntheticConfig cfg;
    cfg.source_train = 12;
    cfg.source_test = 3;
    cfg.target_test = 5;
    return cfg;
}

}  // namespace

TEST_CASE("dataset files round trip bit for bit") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticOutput gen = generate_synthetic(topo, small_synth(), 51);
    std::filesystem::path path = scratch_file("liftaug_roundtrip.jsonl");
    save_dataset(path.string(), gen.source_train, topo);
    Dataset back = load_dataset(path.string(), topo);

    REQUIRE(back.records.size() == gen.source_train.records.size());
    CHECK(back.topology_hash == topo.hash());
    for (size_t i = 0; i < back.records.size(); ++i) {
        const PoseRecord& a = gen.source_train.records[i];
        const PoseRecord& b = back.records[i];
        for (long k = 0; k < a.pose3d.joints.numel(); ++k)
            CHECK(a.pose3d.joints[k] == b.pose3d.joints[k]);
        for (long k = 0; k < a.pose2d.joints.numel(); ++k)
            CHECK(a.pose2d.joints[k] == b.pose2d.joints[k]);
        CHECK(a.camera.fx == b.camera.fx);
        CHECK(a.camera.cy == b.camera.cy);
        CHECK(a.subject == b.subject);
        CHECK(a.sequence == b.sequence);
    }
}

TEST_CASE("dataset loading rejects bad files with the offending record named") {
    const SkeletonTopology& topo = stock_topology();
    const std::string header = valid_header(topo);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_dataset("/nonexistent/poses.jsonl", topo), DataError);
    }
    SUBCASE("missing header") {
        auto p = scratch_file("liftaug_noheader.jsonl");
        write_text(p, flat_record(topo.joint_count(), 3000.0));
        CHECK_THROWS_WITH_AS(load_dataset(p.string(), topo),
                             doctest::Contains("missing dataset header"), DataError);
    }
    SUBCASE("wrong version") {
        auto p = scratch_file("liftaug_badver.jsonl");
        write_text(p, "{\"format\":\"liftaug-poses\",\"version\":9,\"units\":\"mm\"}\n");
        CHECK_THROWS_AS(load_dataset(p.string(), topo), DataError);
    }
    SUBCASE("wrong units") {
        auto p = scratch_file("liftaug_badunits.jsonl");
        write_text(p, "{\"format\":\"liftaug-poses\",\"version\":1,\"units\":\"cm\","
                      "\"joint_count\":16,\"topology_hash\":\"1\"}\n");
        CHECK_THROWS_AS(load_dataset(p.string(), topo), DataError);
    }
    SUBCASE("foreign topology hash") {
        auto p = scratch_file("liftaug_badhash.jsonl");
        write_text(p, std::string("{\"format\":\"liftaug-poses\",\"version\":1,\"units\":\"mm\","
                                  "\"joint_count\":") +
                          std::to_string(topo.joint_count()) + ",\"topology_hash\":\"12345\"}\n");
        CHECK_THROWS_AS(load_dataset(p.string(), topo), DataError);
    }
    SUBCASE("malformed second record carries its index") {
        auto p = scratch_file("liftaug_badrec.jsonl");
        write_text(p, header + flat_record(topo.joint_count(), 3000.0) + "{not json\n");
        try {
            load_dataset(p.string(), topo);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.record == 1);
            CHECK(std::string(e.what()).find("(record 1)") != std::string::npos);
        }
    }
    SUBCASE("non-positive depth is rejected") {
        auto p = scratch_file("liftaug_baddepth.jsonl");
        write_text(p, header + flat_record(topo.joint_count(), -5.0));
        try {
            load_dataset(p.string(), topo);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(e.record == 0);
            CHECK(std::string(e.what()).find("depth") != std::string::npos);
        }
    }
    SUBCASE("empty file loads as an empty dataset with a warning") {
        auto p = scratch_file("liftaug_empty.jsonl");
        write_text(p, "  \n\n");
        Dataset d = load_dataset(p.string(), topo);
        CHECK(d.records.empty());
        CHECK(d.topology_hash == topo.hash());
    }
}

TEST_CASE("synthetic generation is deterministic in the seed") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticConfig cfg = small_synth();
    SyntheticOutput a = generate_synthetic(topo, cfg, 77);
    SyntheticOutput b = generate_synthetic(topo, cfg, 77);
    REQUIRE(a.source_train.size() == b.source_train.size());
    for (size_t i = 0; i < a.source_train.size(); ++i)
        for (long k = 0; k < a.source_train.records[i].pose3d.joints.numel(); ++k)
            CHECK(a.source_train.records[i].pose3d.joints[k] ==
                  b.source_train.records[i].pose3d.joints[k]);

    SyntheticOutput c = generate_synthetic(topo, cfg, 78);
    bool any_diff = false;
    for (long k = 0; k < a.source_train.records[0].pose3d.joints.numel(); ++k)
        any_diff |= a.source_train.records[0].pose3d.joints[k] !=
                    c.source_train.records[0].pose3d.joints[k];
    CHECK(any_diff);
}

TEST_CASE("growing a pool keeps earlier records unchanged") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticConfig small = small_synth();
    SyntheticConfig big = small;
    big.source_train = 24;
    SyntheticOutput a = generate_synthetic(topo, small, 52);
    SyntheticOutput b = generate_synthetic(topo, big, 52);
    for (size_t i = 0; i < a.source_train.size(); ++i)
        for (long k = 0; k < a.source_train.records[i].pose3d.joints.numel(); ++k)
            CHECK(a.source_train.records[i].pose3d.joints[k] ==
                  b.source_train.records[i].pose3d.joints[k]);
}

TEST_CASE("zero posture ranges reproduce the template body exactly") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticConfig cfg = small_synth();
    cfg.angle_range_default = 0.0;
    SyntheticOutput out = generate_synthetic(topo, cfg, 53);

    // Rotation-invariant bone-direction Gram matrices must agree across
    // all rigid camera views of the one template posture.
    Tensor ref = full_kcs(topo, out.source_train.records[0].pose3d);
    for (const PoseRecord& rec : out.source_train.records) {
        Tensor k = full_kcs(topo, rec.pose3d);
        for (long i = 0; i < k.numel(); ++i) CHECK(std::fabs(k[i] - ref[i]) < 1e-9);
    }

    BoneSet ref_bones = decompose(hierarchical_transform(topo, out.source_train.records[0].pose3d));
    for (const PoseRecord& rec : out.source_test.records) {
        BoneSet bs = decompose(hierarchical_transform(topo, rec.pose3d));
        for (long k = 0; k < bs.lengths.numel(); ++k)
            CHECK(bs.lengths[k] == doctest::Approx(ref_bones.lengths[k]).epsilon(1e-9));
    }

    // Target subjects are uniformly rescaled: one common ratio per record.
    for (const PoseRecord& rec : out.target_test.records) {
        BoneSet bs = decompose(hierarchical_transform(topo, rec.pose3d));
        double ratio = bs.lengths[0] / ref_bones.lengths[0];
        CHECK(ratio >= cfg.target_scale_min - 1e-9);
        CHECK(ratio <= cfg.target_scale_max + 1e-9);
        for (long k = 1; k < bs.lengths.numel(); ++k)
            CHECK(bs.lengths[k] / ref_bones.lengths[k] == doctest::Approx(ratio).epsilon(1e-9));
    }
}

TEST_CASE("custom template lengths are honored") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticConfig cfg = small_synth();
    cfg.angle_range_default = 0.0;
    cfg.template_lengths_mm.assign(static_cast<size_t>(topo.bone_count()), 333.0);
    SyntheticOutput out = generate_synthetic(topo, cfg, 54);
    BoneSet bs = decompose(hierarchical_transform(topo, out.source_train.records[0].pose3d));
    for (long k = 0; k < bs.lengths.numel(); ++k)
        CHECK(bs.lengths[k] == doctest::Approx(333.0).epsilon(1e-9));
}

TEST_CASE("target pool covers a wider viewpoint spread than the source pool") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticConfig cfg = small_synth();
    cfg.source_train = 100;
    cfg.target_test = 100;
    SyntheticOutput out = generate_synthetic(topo, cfg, 55);
    CHECK(out.stats.target_elevation_var > out.stats.source_elevation_var);
    for (const PoseRecord& rec : out.target_test.records)
        for (int j = 0; j < topo.joint_count(); ++j) CHECK(rec.pose3d.z(j) > 0.0);
}

TEST_CASE("synthetic configuration is validated") {
    const SkeletonTopology& topo = stock_topology();
    SyntheticConfig cfg = small_synth();
    SUBCASE("counts") {
        cfg.source_train = 0;
        CHECK_THROWS_AS(generate_synthetic(topo, cfg, 1), ConfigError);
    }
    SUBCASE("angle range arity") {
        cfg.angle_ranges_rad = {0.1, 0.2};
        CHECK_THROWS_AS(generate_synthetic(topo, cfg, 1), ConfigError);
    }
    SUBCASE("ring ordering") {
        cfg.target_ring.radius_min_mm = 9000.0;
        CHECK_THROWS_AS(generate_synthetic(topo, cfg, 1), ConfigError);
    }
    SUBCASE("scale range") {
        cfg.target_scale_min = -1.0;
        CHECK_THROWS_AS(generate_synthetic(topo, cfg, 1), ConfigError);
    }
}

TEST_CASE("run configs parse with partial overrides") {
    RunConfig cfg = parse_run_config(R"({"seed": 9, "train": {"epochs": 7, "w_adv": 0.0}})");
    CHECK(cfg.seed == 9);
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.train.w_adv == 0.0);
    CHECK(cfg.train.batch_size == 1024);   // untouched default
    CHECK(cfg.train.beta_start == 2.0);
    CHECK(cfg.model.estimator.width == 1024);
    CHECK(cfg.model.discriminator.part_aware);

    RunConfig nested = parse_run_config(
        R"({"model": {"augmentor": {"s_t": [1.0, 2.0, 3.0], "t0_source_root": true}}})");
    CHECK(nested.model.augmentor.s_t[2] == 3.0);
    CHECK(nested.model.augmentor.t0_source_root);
    CHECK(nested.model.augmentor.width == 256);
}

TEST_CASE("run configs round trip through their JSON form") {
    RunConfig cfg;
    cfg.seed = 42;
    cfg.train.epochs = 13;
    cfg.train.lr = 0.0025;
    cfg.model.estimator.blocks = 3;
    cfg.model.discriminator.part_aware = false;
    cfg.synthetic.angle_range_default = 0.31;
    RunConfig back = parse_run_config(run_config_json(cfg));
    CHECK(back.seed == 42);
    CHECK(back.train.epochs == 13);
    CHECK(back.train.lr == 0.0025);
    CHECK(back.model.estimator.blocks == 3);
    CHECK(back.model.discriminator.part_aware == false);
    CHECK(back.synthetic.angle_range_default == 0.31);
}

TEST_CASE("bad run configs are rejected") {
    CHECK_THROWS_AS(parse_run_config("{nope"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"epochs": "ten"}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"epochs": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"batch_size": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"beta_start": 1.0}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"beta_start": 5.0, "beta_end": 3.0}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"train": {"w_adv": -0.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"model": {"augmentor": {"s_t": [1.0]}}})"), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("checkpoint container stores named tensors with metadata") {
    Checkpoint ck;
    ck.meta.epoch = 17;
    ck.meta.seed = 99;
    ck.meta.beta = 7.5;
    ck.meta.phase = "train";
    ck.meta.extra["note"] = "abc";
    Tensor w = Tensor::from({2, 3}, {1.5, -2.25, 0.0, 4.0, 5.0, -6.125});
    Tensor b = Tensor::from({3}, {0.25, 0.5, 0.75});
    ck.put("layer.weight", w);
    ck.put("layer.bias", b);
    CHECK(ck.entry_count() == 2);
    CHECK(ck.has("layer.weight"));
    CHECK(!ck.has("layer.gamma"));
    CHECK_THROWS_AS(ck.put("layer.weight", w), ContractError);

    auto path = scratch_file("liftaug_container.ckpt");
    ck.save(path.string());
    Checkpoint back = Checkpoint::load(path.string());
    CHECK(back.meta.format_version == 1);
    CHECK(back.meta.epoch == 17);
    CHECK(back.meta.seed == 99);
    CHECK(back.meta.beta == 7.5);
    CHECK(back.meta.phase == "train");
    CHECK(back.meta.extra.at("note") == "abc");
    REQUIRE(back.names() == ck.names());
    const Tensor* w2 = back.get("layer.weight");
    REQUIRE(w2 != nullptr);
    REQUIRE(w2->same_shape(w));
    for (long i = 0; i < w.numel(); ++i) CHECK((*w2)[i] == w[i]);
}

TEST_CASE("checkpoint loading detects corruption") {
    Checkpoint ck;
    ck.put("t", Tensor::full({8}, 1.0));
    auto path = scratch_file("liftaug_corrupt.ckpt");
    ck.save(path.string());

    SUBCASE("flipped payload byte fails the checksum") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-1, std::ios::end);
        char c;
        f.seekg(-1, std::ios::end);
        f.get(c);
        f.seekp(-1, std::ios::end);
        f.put(static_cast<char>(c ^ 0x5a));
        f.close();
        CHECK_THROWS_AS(Checkpoint::load(path.string()), DataError);
    }
    SUBCASE("wrong magic is rejected") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_AS(Checkpoint::load(path.string()), DataError);
    }
    SUBCASE("truncated file is rejected") {
        auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 9);
        CHECK_THROWS_AS(Checkpoint::load(path.string()), DataError);
    }
    SUBCASE("missing parameter on restore is named") {
        Checkpoint loaded = Checkpoint::load(path.string());
        ParamStore store;
        store.add("other", Tensor::zeros({8}));
        CHECK_THROWS_WITH_AS(loaded.load_params("", store), doctest::Contains("other"), DataError);
    }
}
