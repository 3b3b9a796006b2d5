#include "liftaug/synthetic.hpp"

#include <array>
#include <cmath>
#include <map>

#include "liftaug/errors.hpp"
#include "liftaug/rng.hpp"

namespace liftaug {

namespace {

using Mat3 = std::array<double, 9>;
using Vec3 = std::array<double, 3>;

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[3 * i + j] += a[3 * i + k] * b[3 * k + j];
    return r;
}

Vec3 mat_apply(const Mat3& a, const Vec3& v) {
    return {a[0] * v[0] + a[1] * v[1] + a[2] * v[2], a[3] * v[0] + a[4] * v[1] + a[5] * v[2],
            a[6] * v[0] + a[7] * v[1] + a[8] * v[2]};
}

Mat3 rot_x(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {1, 0, 0, 0, c, -s, 0, s, c};
}
Mat3 rot_y(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {c, 0, s, 0, 1, 0, -s, 0, c};
}
Mat3 rot_z(double a) {
    double c = std::cos(a), s = std::sin(a);
    return {c, -s, 0, s, c, 0, 0, 0, 1};
}

Vec3 vsub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double vdot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double vnorm(const Vec3& a) { return std::sqrt(vdot(a, a)); }
Vec3 vcross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Rest-pose bone offsets (mm, y-up world, subject facing +z) keyed by
/// the bone's child joint name. The generator covers the stock topology;
/// template lengths in the config rescale these directions.
const std::map<std::string, Vec3>& rest_offsets() {
    static const std::map<std::string, Vec3> table = {
        {"right_hip", {-130.0, 0.0, 0.0}},    {"right_knee", {0.0, -450.0, 0.0}},
        {"right_ankle", {0.0, -440.0, 0.0}},  {"left_hip", {130.0, 0.0, 0.0}},
        {"left_knee", {0.0, -450.0, 0.0}},    {"left_ankle", {0.0, -440.0, 0.0}},
        {"spine", {0.0, 230.0, 0.0}},         {"thorax", {0.0, 230.0, 0.0}},
        {"head", {0.0, 210.0, 0.0}},          {"left_shoulder", {160.0, 40.0, 0.0}},
        {"left_elbow", {280.0, 0.0, 0.0}},    {"left_wrist", {250.0, 0.0, 0.0}},
        {"right_shoulder", {-160.0, 40.0, 0.0}}, {"right_elbow", {-280.0, 0.0, 0.0}},
        {"right_wrist", {-250.0, 0.0, 0.0}},
    };
    return table;
}

void validate_ring(const CameraRing& r, const char* name) {
    if (!(r.radius_min_mm > 0.0) || !(r.radius_max_mm >= r.radius_min_mm))
        throw ConfigError(std::string(name) + ": radius range must satisfy 0 < min <= max");
    if (!(r.elevation_min_rad <= r.elevation_max_rad))
        throw ConfigError(std::string(name) + ": elevation range not well-ordered");
    if (r.elevation_min_rad < -1.3 || r.elevation_max_rad > 1.3)
        throw ConfigError(std::string(name) + ": elevation must stay within +-1.3 rad");
    if (!(r.look_jitter_mm >= 0.0) || r.look_jitter_mm >= r.radius_min_mm)
        throw ConfigError(std::string(name) + ": look jitter must be in [0, radius_min)");
}

struct PoolSpec {
    const CameraRing* ring;
    int count;
    uint64_t pool_id;
    bool scale_body;
    const char* name;
};

PoseRecord make_record(const SkeletonTopology& topo, const SyntheticConfig& cfg,
                       const PoolSpec& pool, const std::vector<Vec3>& offsets, Rng& rng,
                       double* elevation_out) {
    const int joints = topo.joint_count();
    const int bones = topo.bone_count();

    double body_scale = 1.0;
    std::vector<Vec3> euler(static_cast<size_t>(bones));
    for (int k = 0; k < bones; ++k) {
        double range = cfg.angle_ranges_rad.empty() ? cfg.angle_range_default
                                                    : cfg.angle_ranges_rad[static_cast<size_t>(k)];
        for (int i = 0; i < 3; ++i)
            euler[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                range > 0.0 ? rng.uniform(-range, range) : 0.0;
    }
    double azimuth = rng.uniform(0.0, 2.0 * M_PI);
    double elevation = rng.uniform(pool.ring->elevation_min_rad, pool.ring->elevation_max_rad);
    double radius = rng.uniform(pool.ring->radius_min_mm, pool.ring->radius_max_mm);
    Vec3 jitter = {rng.uniform(-pool.ring->look_jitter_mm, pool.ring->look_jitter_mm),
                   rng.uniform(-pool.ring->look_jitter_mm, pool.ring->look_jitter_mm),
                   rng.uniform(-pool.ring->look_jitter_mm, pool.ring->look_jitter_mm)};
    if (pool.scale_body) body_scale = rng.uniform(cfg.target_scale_min, cfg.target_scale_max);

    // Forward kinematics, root at the world origin.
    std::vector<Vec3> world(static_cast<size_t>(joints), Vec3{0, 0, 0});
    std::vector<Mat3> global(static_cast<size_t>(joints), Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1});
    for (int k = 0; k < bones; ++k) {
        int child = topo.bone_child(k);
        int parent = topo.parent(child);
        const Vec3& e = euler[static_cast<size_t>(k)];
        Mat3 local = mat_mul(rot_z(e[2]), mat_mul(rot_y(e[1]), rot_x(e[0])));
        global[static_cast<size_t>(child)] = mat_mul(global[static_cast<size_t>(parent)], local);
        Vec3 off = offsets[static_cast<size_t>(k)];
        for (double& c : off) c *= body_scale;
        Vec3 step = mat_apply(global[static_cast<size_t>(child)], off);
        world[static_cast<size_t>(child)] = {world[static_cast<size_t>(parent)][0] + step[0],
                                             world[static_cast<size_t>(parent)][1] + step[1],
                                             world[static_cast<size_t>(parent)][2] + step[2]};
    }

    // Camera on the ring, looking at a jittered point near the subject.
    Vec3 center = {radius * std::cos(elevation) * std::cos(azimuth), radius * std::sin(elevation),
                   radius * std::cos(elevation) * std::sin(azimuth)};
    Vec3 z_axis = vsub(jitter, center);
    double zn = vnorm(z_axis);
    if (zn < 1e-6) throw DomainError("degenerate camera placement");
    for (double& c : z_axis) c /= zn;
    Vec3 x_axis = vcross(Vec3{0, 1, 0}, z_axis);
    double xn = vnorm(x_axis);
    if (xn < 1e-9) throw DomainError("camera looks along the world up axis");
    for (double& c : x_axis) c /= xn;
    Vec3 y_axis = vcross(z_axis, x_axis);

    Tensor cam_joints = Tensor::zeros({joints, 3});
    for (int j = 0; j < joints; ++j) {
        Vec3 rel = vsub(world[static_cast<size_t>(j)], center);
        cam_joints.at(j, 0) = vdot(x_axis, rel);
        cam_joints.at(j, 1) = vdot(y_axis, rel);
        cam_joints.at(j, 2) = vdot(z_axis, rel);
    }

    PoseRecord rec;
    rec.pose3d = Pose3D(cam_joints);
    if (!camera_valid(rec.pose3d)) throw DomainError("camera-invalid pose");
    rec.camera = cfg.intrinsics;
    rec.pose2d = project(rec.pose3d, rec.camera);
    rec.subject = "synthetic";
    rec.sequence = pool.name;
    *elevation_out = elevation;
    return rec;
}

double variance(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size());
}

}  // namespace

void SyntheticConfig::validate(const SkeletonTopology& topo) const {
    const size_t bones = static_cast<size_t>(topo.bone_count());
    if (source_train < 1 || source_test < 1 || target_test < 1)
        throw ConfigError("synthetic sample counts must be >= 1");
    if (!angle_ranges_rad.empty() && angle_ranges_rad.size() != bones)
        throw ConfigError("angle_ranges_rad must be empty or have one entry per bone");
    for (double r : angle_ranges_rad)
        if (!(r >= 0.0)) throw ConfigError("angle ranges must be nonnegative");
    if (!(angle_range_default >= 0.0)) throw ConfigError("angle_range_default must be nonnegative");
    if (!template_lengths_mm.empty() && template_lengths_mm.size() != bones)
        throw ConfigError("template_lengths_mm must be empty or have one entry per bone");
    for (double l : template_lengths_mm)
        if (!(l > kMinBoneLength)) throw ConfigError("template lengths must be positive");
    validate_ring(source_ring, "source_ring");
    validate_ring(target_ring, "target_ring");
    if (!(target_scale_min > 0.0) || !(target_scale_max >= target_scale_min))
        throw ConfigError("target scale range must satisfy 0 < min <= max");
    try {
        intrinsics.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid intrinsics: ") + e.what());
    }
}

SyntheticOutput generate_synthetic(const SkeletonTopology& topo, const SyntheticConfig& cfg,
                                   uint64_t seed) {
    cfg.validate(topo);

    const int bones = topo.bone_count();
    std::vector<Vec3> offsets(static_cast<size_t>(bones));
    for (int k = 0; k < bones; ++k) {
        const std::string& child = topo.joint_names()[static_cast<size_t>(topo.bone_child(k))];
        auto it = rest_offsets().find(child);
        if (it == rest_offsets().end())
            throw ConfigError("synthetic generator has no rest offset for joint \"" + child +
                              "\"; it supports the stock 16-joint topology");
        Vec3 off = it->second;
        if (!cfg.template_lengths_mm.empty()) {
            double cur = vnorm(off);
            double want = cfg.template_lengths_mm[static_cast<size_t>(k)];
            for (double& c : off) c *= want / cur;
        }
        offsets[static_cast<size_t>(k)] = off;
    }

    Rng base(seed);
    SyntheticOutput out;
    out.source_train.topology_hash = topo.hash();
    out.source_test.topology_hash = topo.hash();
    out.target_test.topology_hash = topo.hash();

    const PoolSpec pools[] = {
        {&cfg.source_ring, cfg.source_train, 0, false, "source_train"},
        {&cfg.source_ring, cfg.source_test, 1, false, "source_test"},
        {&cfg.target_ring, cfg.target_test, 2, true, "target_test"},
    };
    Dataset* dests[] = {&out.source_train, &out.source_test, &out.target_test};
    std::vector<double> source_elev, target_elev;

    for (int p = 0; p < 3; ++p) {
        const PoolSpec& pool = pools[p];
        for (int i = 0; i < pool.count; ++i) {
            bool made = false;
            for (uint64_t attempt = 0; attempt < 64 && !made; ++attempt) {
                Rng rec_rng = base.stream("synthetic", pool.pool_id + 3 * attempt,
                                          static_cast<uint64_t>(i));
                try {
                    double elev = 0.0;
                    PoseRecord rec = make_record(topo, cfg, pool, offsets, rec_rng, &elev);
                    dests[p]->records.push_back(std::move(rec));
                    (pool.pool_id == 2 ? target_elev : source_elev).push_back(elev);
                    made = true;
                } catch (const DomainError&) {
                }
            }
            if (!made)
                throw ConfigError(std::string("synthetic pool ") + pool.name +
                                  " cannot produce camera-valid poses under this configuration");
        }
    }

    out.stats.source_elevation_var = variance(source_elev);
    out.stats.target_elevation_var = variance(target_elev);
    return out;
}

}  // namespace liftaug
