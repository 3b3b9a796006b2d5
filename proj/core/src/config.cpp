#include "liftaug/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "liftaug/errors.hpp"

namespace liftaug {

using nlohmann::json;

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
    }
}

void maybe_vec3(const json& j, const char* key, std::array<double, 3>& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 3)
        throw ConfigError(std::string("\"") + key + "\" must be an array of 3 numbers");
    for (int i = 0; i < 3; ++i) out[static_cast<size_t>(i)] = v[static_cast<size_t>(i)].get<double>();
}

void read_ring(const json& j, CameraRing& r) {
    maybe(j, "radius_min_mm", r.radius_min_mm);
    maybe(j, "radius_max_mm", r.radius_max_mm);
    maybe(j, "elevation_min_rad", r.elevation_min_rad);
    maybe(j, "elevation_max_rad", r.elevation_max_rad);
    maybe(j, "look_jitter_mm", r.look_jitter_mm);
}

json ring_json(const CameraRing& r) {
    return {{"radius_min_mm", r.radius_min_mm},
            {"radius_max_mm", r.radius_max_mm},
            {"elevation_min_rad", r.elevation_min_rad},
            {"elevation_max_rad", r.elevation_max_rad},
            {"look_jitter_mm", r.look_jitter_mm}};
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batch norm needs 2 samples)");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(beta_start > 1.0)) throw ConfigError("beta_start must exceed 1");
    if (!(beta_end >= beta_start)) throw ConfigError("beta_end must be >= beta_start");
    if (!(reg_threshold > 0.0)) throw ConfigError("reg_threshold must be positive");
    if (w_adv < 0.0) throw ConfigError("w_adv must be nonnegative");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    RunConfig cfg;
    maybe(j, "seed", cfg.seed);
    maybe(j, "topology", cfg.topology_path);
    maybe(j, "external_2d", cfg.external_2d_path);

    if (j.contains("train")) {
        const json& t = j.at("train");
        TrainConfig& tc = cfg.train;
        maybe(t, "epochs", tc.epochs);
        maybe(t, "batch_size", tc.batch_size);
        maybe(t, "lr", tc.lr);
        maybe(t, "beta_start", tc.beta_start);
        maybe(t, "beta_end", tc.beta_end);
        maybe(t, "reg_threshold", tc.reg_threshold);
        maybe(t, "w_adv", tc.w_adv);
        maybe(t, "pretrain_epochs", tc.pretrain_epochs);
        maybe(t, "checkpoint_every", tc.checkpoint_every);
        maybe(t, "estimator_per_epoch", tc.estimator_per_epoch);
        maybe(t, "augmentation", tc.augmentation);
        maybe(t, "isolation_check", tc.isolation_check);
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.contains("estimator")) {
            const json& e = m.at("estimator");
            maybe(e, "width", cfg.model.estimator.width);
            maybe(e, "blocks", cfg.model.estimator.blocks);
            maybe(e, "dropout", cfg.model.estimator.dropout);
        }
        if (m.contains("augmentor")) {
            const json& a = m.at("augmentor");
            AugmentorConfig& ac = cfg.model.augmentor;
            maybe(a, "width", ac.width);
            maybe(a, "noise_dim", ac.noise_dim);
            maybe(a, "leaky_slope", ac.leaky_slope);
            maybe(a, "s_ba", ac.s_ba);
            maybe(a, "s_bl", ac.s_bl);
            maybe_vec3(a, "s_t", ac.s_t);
            maybe_vec3(a, "t0", ac.t0);
            maybe(a, "t0_source_root", ac.t0_source_root);
            maybe(a, "enable_ba", ac.enable_ba);
            maybe(a, "enable_bl", ac.enable_bl);
            maybe(a, "enable_rt", ac.enable_rt);
        }
        if (m.contains("discriminator")) {
            const json& d = m.at("discriminator");
            DiscriminatorConfig& dc = cfg.model.discriminator;
            maybe(d, "width_3d", dc.width_3d);
            maybe(d, "width_2d", dc.width_2d);
            maybe(d, "leaky_slope", dc.leaky_slope);
            maybe(d, "part_aware", dc.part_aware);
        }
    }
    if (j.contains("synthetic")) {
        const json& s = j.at("synthetic");
        SyntheticConfig& sc = cfg.synthetic;
        maybe(s, "source_train", sc.source_train);
        maybe(s, "source_test", sc.source_test);
        maybe(s, "target_test", sc.target_test);
        maybe(s, "angle_ranges_rad", sc.angle_ranges_rad);
        maybe(s, "angle_range_default", sc.angle_range_default);
        maybe(s, "template_lengths_mm", sc.template_lengths_mm);
        if (s.contains("source_ring")) read_ring(s.at("source_ring"), sc.source_ring);
        if (s.contains("target_ring")) read_ring(s.at("target_ring"), sc.target_ring);
        maybe(s, "target_scale_min", sc.target_scale_min);
        maybe(s, "target_scale_max", sc.target_scale_max);
        if (s.contains("intrinsics")) {
            const json& c = s.at("intrinsics");
            maybe(c, "fx", sc.intrinsics.fx);
            maybe(c, "fy", sc.intrinsics.fy);
            maybe(c, "cx", sc.intrinsics.cx);
            maybe(c, "cy", sc.intrinsics.cy);
        }
    }
    cfg.train.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["topology"] = cfg.topology_path;
    j["external_2d"] = cfg.external_2d_path;
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"lr", cfg.train.lr},
                  {"beta_start", cfg.train.beta_start},
                  {"beta_end", cfg.train.beta_end},
                  {"reg_threshold", cfg.train.reg_threshold},
                  {"w_adv", cfg.train.w_adv},
                  {"pretrain_epochs", cfg.train.pretrain_epochs},
                  {"checkpoint_every", cfg.train.checkpoint_every},
                  {"estimator_per_epoch", cfg.train.estimator_per_epoch},
                  {"augmentation", cfg.train.augmentation},
                  {"isolation_check", cfg.train.isolation_check}};
    j["model"] = {
        {"estimator",
         {{"width", cfg.model.estimator.width},
          {"blocks", cfg.model.estimator.blocks},
          {"dropout", cfg.model.estimator.dropout}}},
        {"augmentor",
         {{"width", cfg.model.augmentor.width},
          {"noise_dim", cfg.model.augmentor.noise_dim},
          {"leaky_slope", cfg.model.augmentor.leaky_slope},
          {"s_ba", cfg.model.augmentor.s_ba},
          {"s_bl", cfg.model.augmentor.s_bl},
          {"s_t", cfg.model.augmentor.s_t},
          {"t0", cfg.model.augmentor.t0},
          {"t0_source_root", cfg.model.augmentor.t0_source_root},
          {"enable_ba", cfg.model.augmentor.enable_ba},
          {"enable_bl", cfg.model.augmentor.enable_bl},
          {"enable_rt", cfg.model.augmentor.enable_rt}}},
        {"discriminator",
         {{"width_3d", cfg.model.discriminator.width_3d},
          {"width_2d", cfg.model.discriminator.width_2d},
          {"leaky_slope", cfg.model.discriminator.leaky_slope},
          {"part_aware", cfg.model.discriminator.part_aware}}}};
    j["synthetic"] = {{"source_train", cfg.synthetic.source_train},
                      {"source_test", cfg.synthetic.source_test},
                      {"target_test", cfg.synthetic.target_test},
                      {"angle_ranges_rad", cfg.synthetic.angle_ranges_rad},
                      {"angle_range_default", cfg.synthetic.angle_range_default},
                      {"template_lengths_mm", cfg.synthetic.template_lengths_mm},
                      {"source_ring", ring_json(cfg.synthetic.source_ring)},
                      {"target_ring", ring_json(cfg.synthetic.target_ring)},
                      {"target_scale_min", cfg.synthetic.target_scale_min},
                      {"target_scale_max", cfg.synthetic.target_scale_max},
                      {"intrinsics",
                       {{"fx", cfg.synthetic.intrinsics.fx},
                        {"fy", cfg.synthetic.intrinsics.fy},
                        {"cx", cfg.synthetic.intrinsics.cx},
                        {"cy", cfg.synthetic.intrinsics.cy}}}};
    return j.dump(2);
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << run_config_json(cfg) << "\n";
}

}  // namespace liftaug
