#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "liftaug/checkpoint.hpp"
#include "liftaug/config.hpp"
#include "liftaug/errors.hpp"
#include "liftaug/synthetic.hpp"
#include "liftaug/training.hpp"

namespace {

using namespace liftaug;

struct CommonArgs {
    std::string config_path;
    bool have_seed = false;
    uint64_t seed = 0;
    std::string topology;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path,
                    "JSON config file (default: $" + std::string(kConfigEnvVar) + ")");
    cmd->add_option("--seed", args.seed, "Run seed")->each([&](const std::string&) {
        args.have_seed = true;
    });
    cmd->add_option("--topology", args.topology, "Skeleton topology JSON path");
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg;
    std::string path = args.config_path;
    if (path.empty()) {
        const char* env = std::getenv(kConfigEnvVar);
        if (env != nullptr && env[0] != '\0') path = env;
    }
    if (!path.empty()) cfg = load_run_config(path);
    if (args.have_seed) cfg.seed = args.seed;
    if (!args.topology.empty()) cfg.topology_path = args.topology;
    return cfg;
}

SkeletonTopology load_topology(const RunConfig& cfg) {
    return SkeletonTopology::from_json_file(cfg.topology_path);
}

EstimatorNet load_estimator(const RunConfig& cfg, const SkeletonTopology& topo,
                            const Checkpoint& ck) {
    EstimatorNet est(topo.joint_count(), topo.root(), cfg.model.estimator,
                     net_seed(cfg.seed, "estimator"));
    ck.load_params("estimator.", est.params());
    return est;
}

AugmentorNet load_augmentor(const RunConfig& cfg, const SkeletonTopology& topo,
                            const Checkpoint& ck) {
    AugmentorNet aug(topo, cfg.model.augmentor, net_seed(cfg.seed, "augmentor"));
    ck.load_params("augmentor.", aug.params());
    return aug;
}

std::vector<Tensor> external_2d_rows(const RunConfig& cfg, const SkeletonTopology& topo) {
    std::vector<Tensor> rows;
    if (cfg.external_2d_path.empty()) return rows;
    Dataset pool = load_dataset(cfg.external_2d_path, topo);
    rows.reserve(pool.records.size());
    for (const PoseRecord& rec : pool.records)
        rows.push_back(normalize_pose2d(rec.pose2d, rec.camera));
    return rows;
}

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    SkeletonTopology topo = load_topology(cfg);
    SyntheticOutput out = generate_synthetic(topo, cfg.synthetic, cfg.seed);
    std::filesystem::create_directories(out_dir);
    save_dataset(out_dir + "/source_train.jsonl", out.source_train, topo);
    save_dataset(out_dir + "/source_test.jsonl", out.source_test, topo);
    save_dataset(out_dir + "/target_test.jsonl", out.target_test, topo);
    std::printf("wrote %zu/%zu/%zu records to %s\n", out.source_train.size(),
                out.source_test.size(), out.target_test.size(), out_dir.c_str());
    std::printf("elevation variance: source %.6f, target %.6f\n",
                out.stats.source_elevation_var, out.stats.target_elevation_var);
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir,
              const std::string& resume, bool pretrain_only) {
    SkeletonTopology topo = load_topology(cfg);
    Dataset data = load_dataset(data_path, topo);
    Trainer trainer(topo, std::move(data), cfg);
    std::vector<Tensor> ext = external_2d_rows(cfg, topo);
    if (!ext.empty()) trainer.set_external_2d(std::move(ext));
    if (!resume.empty()) trainer.load_checkpoint(resume);

    if (pretrain_only) {
        std::filesystem::create_directories(out_dir);
        trainer.pretrain();
        std::string ck = out_dir + "/checkpoint_pretrained.ckpt";
        trainer.save_checkpoint(ck);
        std::ofstream metrics(out_dir + "/metrics.csv");
        metrics << metrics_csv_header() << "\n";
        for (const EpochLog& log : trainer.log()) metrics << metrics_csv_row(log) << "\n";
        std::printf("pretrained %d epochs; checkpoint: %s\n", trainer.pretrain_epochs_done(),
                    ck.c_str());
        return 0;
    }

    TrainResult result = trainer.run(out_dir);
    std::printf("trained %d epochs; final checkpoint: %s\n", trainer.epochs_done(),
                result.checkpoints.back().c_str());
    std::printf("metrics: %s\n", result.metrics_path.c_str());
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt_path, const std::string& data_path,
             const std::string& out_path) {
    SkeletonTopology topo = load_topology(cfg);
    Dataset data = load_dataset(data_path, topo);
    Checkpoint ck = Checkpoint::load(ckpt_path);
    EstimatorNet est = load_estimator(cfg, topo, ck);
    EvalReport report = evaluate_estimator(est, topo, data.records);
    std::string json = report.to_json();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw DataError("cannot write report file: " + out_path);
        out << json << "\n";
    }
    std::printf("%s\n", json.c_str());
    return 0;
}

int cmd_infer(const RunConfig& cfg, const std::string& ckpt_path, const std::string& data_path,
              const std::string& out_path) {
    SkeletonTopology topo = load_topology(cfg);
    Dataset data = load_dataset(data_path, topo);
    Checkpoint ck = Checkpoint::load(ckpt_path);
    EstimatorNet est = load_estimator(cfg, topo, ck);
    std::vector<Pose3D> pred = lift_dataset(est, data.records);
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write predictions file: " + out_path);
    for (size_t i = 0; i < pred.size(); ++i) {
        out << "{\"index\":" << i << ",\"pred3d_mm\":[";
        for (int j = 0; j < pred[i].joint_count(); ++j) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%s[%.17g,%.17g,%.17g]", j == 0 ? "" : ",",
                          pred[i].x(j), pred[i].y(j), pred[i].z(j));
            out << buf;
        }
        out << "]}\n";
    }
    std::printf("wrote %zu predictions to %s\n", pred.size(), out_path.c_str());
    return 0;
}

int cmd_augment_dump(const RunConfig& cfg, const std::string& ckpt_path,
                     const std::string& data_path, const std::string& out_path, int count) {
    SkeletonTopology topo = load_topology(cfg);
    Dataset data = load_dataset(data_path, topo);
    if (data.records.empty()) throw DataError("augment-dump needs a nonempty dataset");
    Checkpoint ck = Checkpoint::load(ckpt_path);
    AugmentorNet aug = load_augmentor(cfg, topo, ck);
    Rng rng = Rng(cfg.seed).stream("augment-dump");
    Dataset out;
    out.topology_hash = topo.hash();
    long rejected = 0;
    for (int i = 0; i < count; ++i) {
        const PoseRecord& src = data.records[static_cast<size_t>(i) % data.records.size()];
        bool done = false;
        for (int attempt = 0; attempt < 64 && !done; ++attempt) {
            try {
                AugmentResult res = augment(aug, src.pose3d, src.camera, rng);
                PoseRecord rec;
                rec.pose3d = res.pose3d;
                rec.camera = src.camera;
                rec.pose2d = res.pose2d;
                rec.subject = "augmented";
                rec.sequence = src.sequence;
                out.records.push_back(std::move(rec));
                done = true;
            } catch (const DomainError&) {
                ++rejected;
            }
        }
        if (!done) throw DomainError("augmentor rejected 64 consecutive draws");
    }
    save_dataset(out_path, out, topo);
    std::printf("wrote %zu augmented records to %s (%ld rejected draws)\n", out.records.size(),
                out_path.c_str(), rejected);
    return 0;
}

int cmd_plot_dist(const RunConfig& cfg, const std::string& ckpt_path,
                  const std::string& data_path, const std::string& out_path, int count) {
    SkeletonTopology topo = load_topology(cfg);
    Dataset data = load_dataset(data_path, topo);
    Checkpoint ck = Checkpoint::load(ckpt_path);
    AugmentorNet aug = load_augmentor(cfg, topo, ck);
    Rng rng = Rng(cfg.seed).stream("plot-dist");
    RtDistribution dist = export_rt_distribution(aug, data.records, count, rng);
    dist.write_csv(out_path);
    std::printf("wrote %zu+%zu rows to %s\n", dist.source.size(), dist.augmented.size(),
                out_path.c_str());
    std::printf("position covariance trace: source %.3f, augmented %.3f, ratio %.3f\n",
                dist.source_cov_trace, dist.augmented_cov_trace,
                dist.source_cov_trace > 0.0 ? dist.augmented_cov_trace / dist.source_cov_trace
                                            : 0.0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D->3D pose lifting with online differentiable pose augmentation"};
    app.require_subcommand(1);

    CommonArgs common;

    auto* gen = app.add_subcommand("gen-data", "Generate synthetic source/target pose pools");
    add_common(gen, common);
    std::string gen_out = "out/data";
    int gen_source_train = -1, gen_source_test = -1, gen_target_test = -1;
    gen->add_option("--out", gen_out, "Output directory");
    gen->add_option("--source-train", gen_source_train, "Source training pool size");
    gen->add_option("--source-test", gen_source_test, "Source test pool size");
    gen->add_option("--target-test", gen_target_test, "Target test pool size");

    auto* pre = app.add_subcommand("pretrain", "Supervised estimator pretraining only");
    add_common(pre, common);
    std::string pre_data, pre_out = "out/pretrain";
    int pre_epochs = -1;
    pre->add_option("--data", pre_data, "Training dataset (JSONL)")->required();
    pre->add_option("--out", pre_out, "Output directory");
    pre->add_option("--pretrain-epochs", pre_epochs, "Pretraining epochs");

    auto* train = app.add_subcommand("train", "Joint adversarial training");
    add_common(train, common);
    std::string train_data, train_out = "out/train", train_resume;
    int train_epochs = -1, train_batch = -1, train_pre = -1, train_ckpt_every = -1;
    double train_lr = -1.0, train_wadv = -1.0, train_beta_start = -1.0, train_beta_end = -1.0;
    bool train_no_aug = false, train_full_kcs = false, train_rt_only = false;
    bool train_per_epoch = false, train_isolation = false;
    train->add_option("--data", train_data, "Training dataset (JSONL)")->required();
    train->add_option("--out", train_out, "Output directory");
    train->add_option("--resume", train_resume, "Checkpoint to resume from");
    train->add_option("--epochs", train_epochs, "Adversarial epochs");
    train->add_option("--batch-size", train_batch, "Batch size");
    train->add_option("--pretrain-epochs", train_pre, "Pretraining epochs");
    train->add_option("--checkpoint-every", train_ckpt_every, "Checkpoint cadence (epochs)");
    train->add_option("--lr", train_lr, "Adam learning rate");
    train->add_option("--w-adv", train_wadv, "Adversarial guidance weight");
    train->add_option("--beta-start", train_beta_start, "Initial hardness ratio");
    train->add_option("--beta-end", train_beta_end, "Final hardness ratio");
    train->add_flag("--no-augmentation", train_no_aug, "Plain supervised training");
    train->add_flag("--full-kcs", train_full_kcs, "Whole-body KCS ablation");
    train->add_flag("--rt-only", train_rt_only, "Rigid-transform-only augmentation ablation");
    train->add_flag("--estimator-per-epoch", train_per_epoch,
                    "Defer estimator updates to the end of each epoch");
    train->add_flag("--isolation-check", train_isolation, "Assert per-phase update isolation");

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint against a dataset");
    add_common(ev, common);
    std::string ev_ckpt, ev_data, ev_out;
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
    ev->add_option("--data", ev_data, "Evaluation dataset (JSONL)")->required();
    ev->add_option("--out", ev_out, "Write the JSON report here too");

    auto* inf = app.add_subcommand("infer", "Lift a dataset's 2D poses to 3D");
    add_common(inf, common);
    std::string inf_ckpt, inf_data, inf_out = "predictions.jsonl";
    inf->add_option("--checkpoint", inf_ckpt, "Checkpoint file")->required();
    inf->add_option("--data", inf_data, "Input dataset (JSONL)")->required();
    inf->add_option("--out", inf_out, "Predictions output (JSONL)");

    auto* adump = app.add_subcommand("augment-dump", "Write augmented pose records");
    add_common(adump, common);
    std::string ad_ckpt, ad_data, ad_out = "augmented.jsonl";
    int ad_n = 100;
    adump->add_option("--checkpoint", ad_ckpt, "Checkpoint file")->required();
    adump->add_option("--data", ad_data, "Source dataset (JSONL)")->required();
    adump->add_option("--out", ad_out, "Augmented dataset output (JSONL)");
    adump->add_option("-n,--count", ad_n, "Number of augmented records");

    auto* pdist = app.add_subcommand("plot-dist", "Export view-point/position distributions");
    add_common(pdist, common);
    std::string pd_ckpt, pd_data, pd_out = "distribution.csv";
    int pd_n = 1000;
    pdist->add_option("--checkpoint", pd_ckpt, "Checkpoint file")->required();
    pdist->add_option("--data", pd_data, "Source dataset (JSONL)")->required();
    pdist->add_option("--out", pd_out, "CSV output path");
    pdist->add_option("-n,--count", pd_n, "Rows per pool");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = resolve_config(common);
        if (gen->parsed()) {
            if (gen_source_train > 0) cfg.synthetic.source_train = gen_source_train;
            if (gen_source_test > 0) cfg.synthetic.source_test = gen_source_test;
            if (gen_target_test > 0) cfg.synthetic.target_test = gen_target_test;
            return cmd_gen_data(cfg, gen_out);
        }
        if (pre->parsed()) {
            if (pre_epochs >= 0) cfg.train.pretrain_epochs = pre_epochs;
            cfg.train.validate();
            return cmd_train(cfg, pre_data, pre_out, "", true);
        }
        if (train->parsed()) {
            if (train_epochs >= 0) cfg.train.epochs = train_epochs;
            if (train_batch >= 0) cfg.train.batch_size = train_batch;
            if (train_pre >= 0) cfg.train.pretrain_epochs = train_pre;
            if (train_ckpt_every >= 0) cfg.train.checkpoint_every = train_ckpt_every;
            if (train_lr >= 0.0) cfg.train.lr = train_lr;
            if (train_wadv >= 0.0) cfg.train.w_adv = train_wadv;
            if (train_beta_start >= 0.0) cfg.train.beta_start = train_beta_start;
            if (train_beta_end >= 0.0) cfg.train.beta_end = train_beta_end;
            if (train_no_aug) cfg.train.augmentation = false;
            if (train_full_kcs) cfg.model.discriminator.part_aware = false;
            if (train_rt_only) {
                cfg.model.augmentor.enable_ba = false;
                cfg.model.augmentor.enable_bl = false;
            }
            if (train_per_epoch) cfg.train.estimator_per_epoch = true;
            if (train_isolation) cfg.train.isolation_check = true;
            cfg.train.validate();
            return cmd_train(cfg, train_data, train_out, train_resume, false);
        }
        if (ev->parsed()) return cmd_eval(cfg, ev_ckpt, ev_data, ev_out);
        if (inf->parsed()) return cmd_infer(cfg, inf_ckpt, inf_data, inf_out);
        if (adump->parsed()) return cmd_augment_dump(cfg, ad_ckpt, ad_data, ad_out, ad_n);
        if (pdist->parsed()) return cmd_plot_dist(cfg, pd_ckpt, pd_data, pd_out, pd_n);
        std::fprintf(stderr, "no command given\n");
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "training aborted: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
