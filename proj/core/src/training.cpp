#include "liftaug/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "liftaug/checkpoint.hpp"
#include "liftaug/errors.hpp"
#include "liftaug/losses.hpp"
#include "liftaug/ops.hpp"

namespace liftaug {

double beta_schedule(int epoch, int epochs, double beta_start, double beta_end) {
    if (epochs <= 1) return beta_start;
    int e = std::clamp(epoch, 0, epochs - 1);
    return beta_start + (beta_end - beta_start) * static_cast<double>(e) /
                            static_cast<double>(epochs - 1);
}

double lr_decay(int epoch, int epochs) {
    if (epochs < 1) return 1.0;
    int e = std::clamp(epoch, 0, epochs - 1);
    return 1.0 - static_cast<double>(e) / static_cast<double>(epochs);
}

uint64_t net_seed(uint64_t run_seed, std::string_view role) {
    return mix64(run_seed ^ hash_string(role));
}

std::string metrics_csv_header() {
    return "phase,epoch,lp_orig,lp_aug,l_fb,l_reg,l_adv,l_aug,d_loss,beta,lr_scale,"
           "reject_rate,saturations";
}

std::string metrics_csv_row(const EpochLog& log) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%ld",
                  log.phase.c_str(), log.epoch, log.lp_orig, log.lp_aug, log.l_fb, log.l_reg,
                  log.l_adv, log.l_aug_total, log.d_loss, log.beta, log.lr_scale, log.reject_rate,
                  log.saturations);
    return std::string(buf);
}

namespace {

Tensor stack_row_tensors(const std::vector<Tensor*>& rows, int cols) {
    Tensor out = Tensor::zeros({static_cast<int>(rows.size()), cols});
    for (size_t i = 0; i < rows.size(); ++i) {
        const Tensor& r = *rows[i];
        if (r.numel() != cols) throw ShapeError("row width mismatch while stacking batch");
        for (int c = 0; c < cols; ++c) out.at(static_cast<int>(i), c) = r[c];
    }
    return out;
}

double mse_rows(const Tensor& a, const Tensor& b, int joint_count) {
    if (!a.same_shape(b)) throw ShapeError("mse_rows shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < static_cast<size_t>(a.numel()); ++i) {
        double d = a[static_cast<long>(i)] - b[static_cast<long>(i)];
        acc += d * d;
    }
    return acc / (static_cast<double>(a.rows()) * static_cast<double>(joint_count));
}

void check_finite_loss(double v, const char* what, int epoch, int batch) {
    if (!std::isfinite(v))
        throw TrainingError(std::string("non-finite ") + what + " at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batch));
}

std::vector<Tensor> kcs_record_rows(const SkeletonTopology& topo, const Pose3D& pose,
                                    bool part_aware) {
    std::vector<Tensor> rows;
    if (part_aware) {
        PartKCS kcs = part_kcs(topo, pose);
        rows.reserve(kcs.parts.size());
        for (const Tensor& m : kcs.parts) {
            Tensor row({1, static_cast<int>(m.numel())});
            row.raw() = m.raw();
            rows.push_back(std::move(row));
        }
    } else {
        Tensor m = full_kcs(topo, pose);
        Tensor row({1, static_cast<int>(m.numel())});
        row.raw() = m.raw();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

Trainer::Trainer(const SkeletonTopology& topo, Dataset train_data, const RunConfig& cfg)
    : topo_(&topo), cfg_(cfg), data_(std::move(train_data)), rng_(cfg.seed) {
    cfg_.train.validate();
    cfg_.model.augmentor.validate();
    if (data_.records.size() < 2)
        throw TrainingError("training needs at least 2 records, got " +
                            std::to_string(data_.records.size()));

    const int J = topo.joint_count();
    estimator_ = std::make_unique<EstimatorNet>(J, topo.root(), cfg_.model.estimator,
                                                net_seed(cfg_.seed, "estimator"));
    augmentor_ = std::make_unique<AugmentorNet>(topo, cfg_.model.augmentor,
                                                net_seed(cfg_.seed, "augmentor"));
    d3d_ = std::make_unique<Discriminator3D>(topo, cfg_.model.discriminator,
                                             net_seed(cfg_.seed, "discriminator3d"));
    d2d_ = std::make_unique<Discriminator2D>(J, cfg_.model.discriminator,
                                             net_seed(cfg_.seed, "discriminator2d"));
    adam_est_ = Adam(AdamConfig{cfg_.train.lr, 0.9, 0.999, 1e-8});
    adam_aug_ = Adam(AdamConfig{cfg_.train.lr, 0.9, 0.999, 1e-8});
    adam_d3_ = Adam(AdamConfig{cfg_.train.lr, 0.9, 0.999, 1e-8});
    adam_d2_ = Adam(AdamConfig{cfg_.train.lr, 0.9, 0.999, 1e-8});

    const int root = topo.root();
    norm2d_rows_.reserve(data_.records.size());
    target_rows_.reserve(data_.records.size());
    kcs_rows_.reserve(data_.records.size());
    for (const PoseRecord& rec : data_.records) {
        norm2d_rows_.push_back(normalize_pose2d(rec.pose2d, rec.camera));
        Tensor y({1, 3 * J});
        for (int j = 0; j < J; ++j)
            for (int c = 0; c < 3; ++c)
                y[3 * j + c] =
                    (rec.pose3d.joints.at(j, c) - rec.pose3d.joints.at(root, c)) * 1e-3;
        target_rows_.push_back(std::move(y));
        kcs_rows_.push_back(
            kcs_record_rows(topo, rec.pose3d, cfg_.model.discriminator.part_aware));
    }
}

void Trainer::set_external_2d(std::vector<Tensor> rows) {
    const int width = 2 * topo_->joint_count();
    for (const Tensor& r : rows)
        if (r.numel() != width)
            throw ShapeError("external 2D rows must have width " + std::to_string(width));
    external_2d_ = std::move(rows);
}

int Trainer::batch_size_for(int pool_size) const {
    int b = std::min(cfg_.train.batch_size, pool_size);
    if (b < 2) throw TrainingError("effective batch size fell below 2");
    return b;
}

std::vector<int> Trainer::make_batches(int epoch_index, const char* tag, int pool_size,
                                       std::vector<size_t>* perm_out) const {
    perm_out->resize(static_cast<size_t>(pool_size));
    std::iota(perm_out->begin(), perm_out->end(), size_t{0});
    Rng shuffle_rng = rng_.stream(tag, static_cast<uint64_t>(epoch_index));
    shuffle_rng.shuffle(*perm_out);
    const int b = batch_size_for(pool_size);
    std::vector<int> sizes(static_cast<size_t>(pool_size / b), b);
    return sizes;
}

double Trainer::estimator_step(const std::vector<Tensor*>& x_rows,
                               const std::vector<Tensor*>& y_rows, double lr_scale) {
    const int J = topo_->joint_count();
    Tape tape;
    Value x = tape.constant(stack_row_tensors(x_rows, 2 * J));
    Value y = tape.constant(stack_row_tensors(y_rows, 3 * J));
    Rng drop = rng_.stream("dropout", static_cast<uint64_t>(global_step_));
    Value pred = estimator_->forward(tape, x, NetMode::train, true, &drop);
    Value loss = pose_loss_graph(pred, y);
    estimator_->params().zero_grad();
    tape.backward(loss);
    adam_est_.step(estimator_->params().trainable(), lr_scale);
    ++global_step_;
    return loss.val().item();
}

void Trainer::pretrain() {
    const int n = static_cast<int>(data_.records.size());
    for (int pe = pretrain_done_; pe < cfg_.train.pretrain_epochs; ++pe) {
        std::vector<size_t> perm;
        std::vector<int> sizes = make_batches(pe, "pretrain-shuffle", n, &perm);
        double loss_acc = 0.0;
        size_t cursor = 0;
        for (size_t b = 0; b < sizes.size(); ++b) {
            std::vector<Tensor*> xs, ys;
            for (int i = 0; i < sizes[b]; ++i, ++cursor) {
                xs.push_back(&norm2d_rows_[perm[cursor]]);
                ys.push_back(&target_rows_[perm[cursor]]);
            }
            double loss = estimator_step(xs, ys, 1.0);
            check_finite_loss(loss, "pretrain loss", pe, static_cast<int>(b));
            loss_acc += loss;
        }
        EpochLog log;
        log.phase = "pretrain";
        log.epoch = pe;
        log.lp_orig = loss_acc / static_cast<double>(sizes.size());
        log.beta = cfg_.train.beta_start;
        log_.push_back(log);
        ++pretrain_done_;
    }
}

void Trainer::isolation_guard(uint64_t est, uint64_t aug, uint64_t d3, uint64_t d2,
                              const char* phase) const {
    auto req = [&](bool ok, const char* which) {
        if (!ok)
            throw TrainingError(std::string("update isolation violated: ") + which +
                                " parameters changed during the " + phase + " phase");
    };
    if (est) req(estimator_->params().value_hash() == est, "estimator");
    if (aug) req(augmentor_->params().value_hash() == aug, "augmentor");
    if (d3) req(d3d_->params().value_hash() == d3, "3D discriminator");
    if (d2) req(d2d_->params().value_hash() == d2, "2D discriminator");
}

void Trainer::train_epoch() {
    const int ep = epoch_;
    const int J = topo_->joint_count();
    const double beta = beta_schedule(ep, cfg_.train.epochs, cfg_.train.beta_start,
                                      cfg_.train.beta_end);
    const double scale = lr_decay(ep, cfg_.train.epochs);
    const bool full_kcs_mode = !cfg_.model.discriminator.part_aware;
    const int n = static_cast<int>(data_.records.size());

    std::vector<size_t> perm;
    std::vector<int> sizes = make_batches(ep, "shuffle", n, &perm);

    EpochLog log;
    log.phase = "train";
    log.epoch = ep;
    log.beta = beta;
    log.lr_scale = scale;

    long rejected = 0, attempted = 0;
    long saturations = 0;
    double lp_orig_acc = 0.0, lp_aug_acc = 0.0, fb_acc = 0.0, reg_acc = 0.0, adv_acc = 0.0,
           la_acc = 0.0, d_acc = 0.0;
    long aug_batches = 0;
    std::vector<BatchStash> epoch_stash;

    size_t cursor = 0;
    for (size_t b = 0; b < sizes.size(); ++b) {
        std::vector<size_t> idx(static_cast<size_t>(sizes[b]));
        for (int i = 0; i < sizes[b]; ++i, ++cursor) idx[static_cast<size_t>(i)] = perm[cursor];
        const int B = sizes[b];

        // Supervised-only mode: the loop reduces to plain estimator training.
        if (!cfg_.train.augmentation) {
            std::vector<Tensor*> xs, ys;
            for (size_t i : idx) {
                xs.push_back(&norm2d_rows_[i]);
                ys.push_back(&target_rows_[i]);
            }
            double lp = estimator_step(xs, ys, scale);
            check_finite_loss(lp, "estimator loss", ep, static_cast<int>(b));
            lp_orig_acc += lp;
            continue;
        }

        uint64_t h_est = cfg_.train.isolation_check ? estimator_->params().value_hash() : 0;

        // Original-batch estimator loss (eval mode), the feedback reference.
        std::vector<Tensor*> ox, oy;
        for (size_t i : idx) {
            ox.push_back(&norm2d_rows_[i]);
            oy.push_back(&target_rows_[i]);
        }
        Tensor orig_x = stack_row_tensors(ox, 2 * J);
        Tensor orig_y = stack_row_tensors(oy, 3 * J);
        double lp_orig = mse_rows(estimator_->forward_value(orig_x), orig_y, J);
        check_finite_loss(lp_orig, "original-batch estimator loss", ep, static_cast<int>(b));
        lp_orig_acc += lp_orig;

        // Augmentor phase: frozen estimator and discriminators.
        Tape tape_a;
        Tensor aug_in = Tensor::zeros({B, augmentor_->input_dim()});
        Rng noise_rng = rng_.stream("noise", static_cast<uint64_t>(ep), static_cast<uint64_t>(b));
        for (int i = 0; i < B; ++i) {
            Tensor noise({cfg_.model.augmentor.noise_dim});
            for (long k = 0; k < noise.numel(); ++k) noise[k] = noise_rng.normal();
            Tensor row = augmentor_->make_input(data_.records[idx[static_cast<size_t>(i)]].pose3d,
                                                noise);
            for (int c = 0; c < aug_in.cols(); ++c) aug_in.at(i, c) = row[c];
        }
        AugmentorNet::Heads heads =
            augmentor_->forward_heads(tape_a, tape_a.constant(aug_in), true, true);

        std::vector<SampleAugGraph> accepted;
        std::vector<size_t> accepted_src;
        for (int i = 0; i < B; ++i) {
            const PoseRecord& rec = data_.records[idx[static_cast<size_t>(i)]];
            SampleAugGraph g = build_augment_graph(
                tape_a, *augmentor_, rec.pose3d, rec.camera, slice_rows(heads.ba, i, i + 1),
                slice_rows(heads.bl_classes, i, i + 1), slice_rows(heads.rot, i, i + 1),
                slice_rows(heads.trans, i, i + 1), full_kcs_mode);
            ++attempted;
            if (g.accepted) {
                accepted.push_back(std::move(g));
                accepted_src.push_back(idx[static_cast<size_t>(i)]);
            } else {
                ++rejected;
            }
        }

        BatchStash stash;
        if (!accepted.empty()) {
            const int Ba = static_cast<int>(accepted.size());
            std::vector<Value> xr, yr;
            for (const SampleAugGraph& g : accepted) {
                xr.push_back(g.norm2d_row);
                yr.push_back(g.rel3d_m_row);
            }
            Value x_aug = stack_rows(tape_a, xr);
            Value y_aug = stack_rows(tape_a, yr);
            const size_t enc = kcs_rows_[0].size();
            std::vector<Value> kcs_stacks;
            for (size_t p = 0; p < enc; ++p) {
                std::vector<Value> rows;
                for (const SampleAugGraph& g : accepted) rows.push_back(g.kcs_rows[p]);
                kcs_stacks.push_back(stack_rows(tape_a, rows));
            }

            Value pred_aug = estimator_->forward(tape_a, x_aug, NetMode::eval, false);
            Value lp_aug = pose_loss_graph(pred_aug, y_aug);
            Value l_fb = feedback_loss_graph(lp_aug, lp_orig, beta, &saturations);

            Value l_reg = tape_a.constant(Tensor::scalar(0.0));
            for (const SampleAugGraph& g : accepted) {
                l_reg = add(l_reg, reg_loss_graph(g.gamma_ba, cfg_.train.reg_threshold));
                l_reg = add(l_reg, reg_loss_graph(g.gamma_bl, cfg_.train.reg_threshold));
            }
            l_reg = smul(l_reg, 1.0 / static_cast<double>(Ba));

            Value l_a = add(l_fb, l_reg);
            double adv_val = 0.0;
            if (cfg_.train.w_adv > 0.0) {
                Value s3 = d3d_->score_batch(tape_a, kcs_stacks, false);
                Value s2 = d2d_->score_batch(tape_a, x_aug, false);
                Value guidance = generator_guidance_loss(s3, s2);
                adv_val = guidance.val().item();
                l_a = add(l_a, smul(guidance, cfg_.train.w_adv));
            }
            double la_val = l_a.val().item();
            check_finite_loss(la_val, "augmentor loss", ep, static_cast<int>(b));

            augmentor_->params().zero_grad();
            tape_a.backward(l_a);
            adam_aug_.step(augmentor_->params().trainable(), scale);

            lp_aug_acc += lp_aug.val().item();
            fb_acc += l_fb.val().item();
            reg_acc += l_reg.val().item();
            adv_acc += adv_val;
            la_acc += la_val;
            ++aug_batches;

            // Detach the accepted samples for the remaining phases.
            for (const SampleAugGraph& g : accepted) {
                stash.x_rows.push_back(g.norm2d_row.val());
                stash.y_rows.push_back(g.rel3d_m_row.val());
            }

            // Discriminator phase on real vs. detached fake pools.
            Tape tape_d;
            std::vector<Value> real3, fake3;
            for (size_t p = 0; p < enc; ++p) {
                std::vector<Tensor*> rrows, frows;
                std::vector<Tensor> fvals;
                for (size_t i : idx) rrows.push_back(&kcs_rows_[i][p]);
                fvals.reserve(accepted.size());
                for (const SampleAugGraph& g : accepted) fvals.push_back(g.kcs_rows[p].val());
                for (Tensor& t : fvals) frows.push_back(&t);
                const int w = static_cast<int>(kcs_rows_[0][p].numel());
                real3.push_back(tape_d.constant(stack_row_tensors(rrows, w)));
                fake3.push_back(tape_d.constant(stack_row_tensors(frows, w)));
            }
            Tensor real2;
            if (external_2d_.empty()) {
                real2 = orig_x;
            } else {
                Rng pick = rng_.stream("ext2d", static_cast<uint64_t>(ep), static_cast<uint64_t>(b));
                std::vector<Tensor*> rows;
                for (int i = 0; i < B; ++i)
                    rows.push_back(&external_2d_[static_cast<size_t>(
                        pick.uniform_index(external_2d_.size()))]);
                real2 = stack_row_tensors(rows, 2 * J);
            }
            std::vector<Tensor*> f2rows;
            for (Tensor& t : stash.x_rows) f2rows.push_back(&t);
            Value s_r3 = d3d_->score_batch(tape_d, real3, true);
            Value s_f3 = d3d_->score_batch(tape_d, fake3, true);
            Value s_r2 = d2d_->score_batch(tape_d, tape_d.constant(real2), true);
            Value s_f2 = d2d_->score_batch(
                tape_d, tape_d.constant(stack_row_tensors(f2rows, 2 * J)), true);
            Value l_d = discriminator_loss(s_r3, s_f3, s_r2, s_f2);
            double ld_val = l_d.val().item();
            check_finite_loss(ld_val, "discriminator loss", ep, static_cast<int>(b));

            d3d_->params().zero_grad();
            d2d_->params().zero_grad();
            tape_d.backward(l_d);
            adam_d3_.step(d3d_->params().trainable(), scale);
            adam_d2_.step(d2d_->params().trainable(), scale);
            d_acc += ld_val;
        }

        if (cfg_.train.isolation_check)
            isolation_guard(h_est, 0, 0, 0, "augmentor/discriminator");

        if (cfg_.train.estimator_per_epoch) {
            epoch_stash.push_back(std::move(stash));
            continue;
        }

        uint64_t h_aug = cfg_.train.isolation_check ? augmentor_->params().value_hash() : 0;
        uint64_t h_d3b = cfg_.train.isolation_check ? d3d_->params().value_hash() : 0;
        uint64_t h_d2b = cfg_.train.isolation_check ? d2d_->params().value_hash() : 0;

        // Estimator phase on the union of original and augmented pairs.
        std::vector<Tensor*> xs, ys;
        for (size_t i : idx) {
            xs.push_back(&norm2d_rows_[i]);
            ys.push_back(&target_rows_[i]);
        }
        for (size_t i = 0; i < stash.x_rows.size(); ++i) {
            xs.push_back(&stash.x_rows[i]);
            ys.push_back(&stash.y_rows[i]);
        }
        double lp = estimator_step(xs, ys, scale);
        check_finite_loss(lp, "estimator loss", ep, static_cast<int>(b));

        if (cfg_.train.isolation_check) isolation_guard(0, h_aug, h_d3b, h_d2b, "estimator");
    }

    // Deferred estimator updates over original + augmented pools.
    if (cfg_.train.augmentation && cfg_.train.estimator_per_epoch) {
        std::vector<Tensor*> pool_x, pool_y;
        for (size_t i = 0; i < data_.records.size(); ++i) {
            pool_x.push_back(&norm2d_rows_[i]);
            pool_y.push_back(&target_rows_[i]);
        }
        for (BatchStash& s : epoch_stash)
            for (size_t i = 0; i < s.x_rows.size(); ++i) {
                pool_x.push_back(&s.x_rows[i]);
                pool_y.push_back(&s.y_rows[i]);
            }
        std::vector<size_t> eperm(pool_x.size());
        std::iota(eperm.begin(), eperm.end(), size_t{0});
        Rng eshuffle = rng_.stream("est-shuffle", static_cast<uint64_t>(ep));
        eshuffle.shuffle(eperm);
        const int eb = batch_size_for(static_cast<int>(pool_x.size()));
        const size_t ebatches = pool_x.size() / static_cast<size_t>(eb);
        size_t ec = 0;
        for (size_t b = 0; b < ebatches; ++b) {
            std::vector<Tensor*> xs, ys;
            for (int i = 0; i < eb; ++i, ++ec) {
                xs.push_back(pool_x[eperm[ec]]);
                ys.push_back(pool_y[eperm[ec]]);
            }
            double lp = estimator_step(xs, ys, scale);
            check_finite_loss(lp, "estimator loss", ep, static_cast<int>(b));
        }
    }

    const double batches = static_cast<double>(sizes.size());
    log.lp_orig = lp_orig_acc / batches;
    if (aug_batches > 0) {
        log.lp_aug = lp_aug_acc / static_cast<double>(aug_batches);
        log.l_fb = fb_acc / static_cast<double>(aug_batches);
        log.l_reg = reg_acc / static_cast<double>(aug_batches);
        log.l_adv = adv_acc / static_cast<double>(aug_batches);
        log.l_aug_total = la_acc / static_cast<double>(aug_batches);
        log.d_loss = d_acc / static_cast<double>(aug_batches);
    }
    log.reject_rate = attempted > 0 ? static_cast<double>(rejected) / static_cast<double>(attempted)
                                    : 0.0;
    log.saturations = saturations;
    last_rejected_ = rejected;
    last_attempted_ = attempted;
    if (attempted > 0 && log.reject_rate > 0.5)
        std::fprintf(stderr, "warning: epoch %d rejected %.1f%% of augmentations\n", ep,
                     100.0 * log.reject_rate);
    log_.push_back(log);
    ++epoch_;
}

TrainResult Trainer::run(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    TrainResult result;
    result.metrics_path = out_dir + "/metrics.csv";
    std::ofstream metrics(result.metrics_path);
    if (!metrics) throw DataError("cannot write metrics file: " + result.metrics_path);
    metrics << metrics_csv_header() << "\n";

    size_t written = 0;
    auto flush_log = [&] {
        for (; written < log_.size(); ++written) metrics << metrics_csv_row(log_[written]) << "\n";
        metrics.flush();
    };

    pretrain();
    flush_log();
    while (epoch_ < cfg_.train.epochs) {
        train_epoch();
        flush_log();
        if (cfg_.train.checkpoint_every > 0 && (epoch_ % cfg_.train.checkpoint_every) == 0 &&
            epoch_ < cfg_.train.epochs) {
            char name[64];
            std::snprintf(name, sizeof(name), "/checkpoint_ep%04d.ckpt", epoch_);
            std::string path = out_dir + name;
            save_checkpoint(path);
            result.checkpoints.push_back(path);
        }
    }
    std::string final_path = out_dir + "/checkpoint_final.ckpt";
    save_checkpoint(final_path);
    result.checkpoints.push_back(final_path);
    result.log = log_;
    return result;
}

void Trainer::save_checkpoint(const std::string& path) const {
    Checkpoint ck;
    ck.meta.epoch = epoch_;
    ck.meta.seed = cfg_.seed;
    ck.meta.beta = beta_schedule(std::max(epoch_ - 1, 0), cfg_.train.epochs,
                                 cfg_.train.beta_start, cfg_.train.beta_end);
    ck.meta.phase = epoch_ > 0 ? "train" : "pretrain";
    ck.meta.extra["pretrain_done"] = std::to_string(pretrain_done_);
    ck.meta.extra["global_step"] = std::to_string(global_step_);
    ck.put_params("estimator.", estimator_->params());
    ck.put_params("augmentor.", augmentor_->params());
    ck.put_params("d3d.", d3d_->params());
    ck.put_params("d2d.", d2d_->params());
    ck.put_adam("adam_est.", adam_est_);
    ck.put_adam("adam_aug.", adam_aug_);
    ck.put_adam("adam_d3.", adam_d3_);
    ck.put_adam("adam_d2.", adam_d2_);
    ck.save(path);
}

void Trainer::load_checkpoint(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    if (ck.meta.seed != cfg_.seed)
        throw DataError("checkpoint seed " + std::to_string(ck.meta.seed) +
                        " does not match config seed " + std::to_string(cfg_.seed));
    ck.load_params("estimator.", estimator_->params());
    ck.load_params("augmentor.", augmentor_->params());
    ck.load_params("d3d.", d3d_->params());
    ck.load_params("d2d.", d2d_->params());
    ck.load_adam("adam_est.", adam_est_);
    ck.load_adam("adam_aug.", adam_aug_);
    ck.load_adam("adam_d3.", adam_d3_);
    ck.load_adam("adam_d2.", adam_d2_);
    epoch_ = static_cast<int>(ck.meta.epoch);
    auto it = ck.meta.extra.find("pretrain_done");
    pretrain_done_ = it != ck.meta.extra.end() ? std::stoi(it->second) : 0;
    it = ck.meta.extra.find("global_step");
    global_step_ = it != ck.meta.extra.end() ? std::stol(it->second) : 0;
}

std::vector<Pose3D> lift_dataset(const EstimatorNet& est, const std::vector<PoseRecord>& records) {
    if (records.empty()) throw ContractError("lift_dataset needs a nonempty dataset");
    const int J = est.joint_count();
    Tensor x = Tensor::zeros({static_cast<int>(records.size()), 2 * J});
    for (size_t i = 0; i < records.size(); ++i) {
        Tensor row = normalize_pose2d(records[i].pose2d, records[i].camera);
        for (int c = 0; c < 2 * J; ++c) x.at(static_cast<int>(i), c) = row[c];
    }
    Tensor pred = est.forward_value(x);
    std::vector<Pose3D> out;
    out.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        Tensor joints = Tensor::zeros({J, 3});
        for (int j = 0; j < J; ++j)
            for (int c = 0; c < 3; ++c)
                joints.at(j, c) = pred.at(static_cast<int>(i), 3 * j + c) * 1000.0;
        out.push_back(Pose3D(joints));
    }
    return out;
}

std::vector<Pose3D> root_relative_poses(const SkeletonTopology& topo,
                                        const std::vector<PoseRecord>& records) {
    const int root = topo.root();
    std::vector<Pose3D> out;
    out.reserve(records.size());
    for (const PoseRecord& rec : records) {
        Tensor joints = Tensor::zeros({topo.joint_count(), 3});
        for (int j = 0; j < topo.joint_count(); ++j)
            for (int c = 0; c < 3; ++c)
                joints.at(j, c) = rec.pose3d.joints.at(j, c) - rec.pose3d.joints.at(root, c);
        out.push_back(Pose3D(joints));
    }
    return out;
}

EvalReport evaluate_estimator(const EstimatorNet& est, const SkeletonTopology& topo,
                              const std::vector<PoseRecord>& records) {
    return evaluate(lift_dataset(est, records), root_relative_poses(topo, records));
}

}  // namespace liftaug
