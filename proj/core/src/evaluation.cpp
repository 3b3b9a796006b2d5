#include "liftaug/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "liftaug/errors.hpp"

namespace liftaug {

namespace {

void check_pair(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
    if (pred.empty() || gt.empty()) throw ShapeError("empty pose set");
    if (pred.size() != gt.size())
        throw ShapeError("pose set sizes differ: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(gt.size()));
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i].joint_count() != gt[i].joint_count())
            throw ShapeError("joint counts differ at sample " + std::to_string(i));
}

double sample_mpjpe(const Pose3D& pred, const Pose3D& gt) {
    double acc = 0.0;
    for (int j = 0; j < pred.joint_count(); ++j) {
        double dx = pred.x(j) - gt.x(j);
        double dy = pred.y(j) - gt.y(j);
        double dz = pred.z(j) - gt.z(j);
        acc += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    return acc / static_cast<double>(pred.joint_count());
}

std::vector<double> joint_errors(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
    std::vector<double> errs;
    errs.reserve(pred.size() * static_cast<size_t>(pred[0].joint_count()));
    for (size_t i = 0; i < pred.size(); ++i)
        for (int j = 0; j < pred[i].joint_count(); ++j) {
            double dx = pred[i].x(j) - gt[i].x(j);
            double dy = pred[i].y(j) - gt[i].y(j);
            double dz = pred[i].z(j) - gt[i].z(j);
            errs.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
        }
    return errs;
}

/// Joint "correct" test; the degenerate zero threshold admits exact
/// zeros so a perfect prediction scores 1 on the whole curve.
bool within(double err, double threshold) {
    return err < threshold || (threshold == 0.0 && err == 0.0);
}

std::array<double, 3> normalized_or_zero(double x, double y, double z) {
    double n = std::sqrt(x * x + y * y + z * z);
    if (n < 1e-12) return {0.0, 0.0, 0.0};
    return {x / n, y / n, z / n};
}

double position_cov_trace(const std::vector<RtRow>& rows) {
    if (rows.empty()) return 0.0;
    std::array<double, 3> mu = {0, 0, 0};
    for (const RtRow& r : rows)
        for (int i = 0; i < 3; ++i) mu[static_cast<size_t>(i)] += r.position_mm[static_cast<size_t>(i)];
    for (double& m : mu) m /= static_cast<double>(rows.size());
    double acc = 0.0;
    for (const RtRow& r : rows)
        for (int i = 0; i < 3; ++i) {
            double d = r.position_mm[static_cast<size_t>(i)] - mu[static_cast<size_t>(i)];
            acc += d * d;
        }
    return acc / static_cast<double>(rows.size());
}

RtRow source_row(const PoseRecord& rec, int root) {
    const Pose3D& p = rec.pose3d;
    RtRow row;
    row.position_mm = {p.x(root), p.y(root), p.z(root)};
    row.viewpoint = normalized_or_zero(-p.x(root), -p.y(root), -p.z(root));
    return row;
}

RtRow augmented_row(const AugmentationParams& params) {
    const Tensor& R = params.rotation;
    const Tensor& t = params.translation;
    RtRow row;
    row.position_mm = {t[0], t[1], t[2]};
    double wx = -(R.at(0, 0) * t[0] + R.at(1, 0) * t[1] + R.at(2, 0) * t[2]);
    double wy = -(R.at(0, 1) * t[0] + R.at(1, 1) * t[1] + R.at(2, 1) * t[2]);
    double wz = -(R.at(0, 2) * t[0] + R.at(1, 2) * t[1] + R.at(2, 2) * t[2]);
    row.viewpoint = normalized_or_zero(wx, wy, wz);
    return row;
}

}  // namespace

double mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
    check_pair(pred, gt);
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) acc += sample_mpjpe(pred[i], gt[i]);
    return acc / static_cast<double>(pred.size());
}

Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt) {
    if (pred.joint_count() != gt.joint_count()) throw ShapeError("joint counts differ");
    const int j = pred.joint_count();
    Eigen::MatrixXd p(j, 3), q(j, 3);
    for (int r = 0; r < j; ++r)
        for (int c = 0; c < 3; ++c) {
            p(r, c) = pred.joints.at(r, c);
            q(r, c) = gt.joints.at(r, c);
        }
    Eigen::RowVector3d mp = p.colwise().mean();
    Eigen::RowVector3d mq = q.colwise().mean();
    Eigen::MatrixXd pc = p.rowwise() - mp;
    Eigen::MatrixXd qc = q.rowwise() - mq;

    double var_p = pc.squaredNorm() / static_cast<double>(j);
    if (var_p < 1e-12) throw DomainError("alignment failed: prediction joints coincide");

    Eigen::Matrix3d sigma = (qc.transpose() * pc) / static_cast<double>(j);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = Eigen::Vector3d::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2) = -1.0;
    Eigen::Matrix3d rot = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    double scale = svd.singularValues().dot(s) / var_p;
    Eigen::RowVector3d t = mq - scale * (rot * mp.transpose()).transpose();

    Eigen::MatrixXd aligned = scale * (pc.rowwise() + mp) * rot.transpose();
    aligned = aligned.rowwise() + t;
    Tensor out = Tensor::zeros({j, 3});
    for (int r = 0; r < j; ++r)
        for (int c = 0; c < 3; ++c) out.at(r, c) = aligned(r, c);
    return Pose3D(out);
}

double pa_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
    check_pair(pred, gt);
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i)
        acc += sample_mpjpe(procrustes_align(pred[i], gt[i]), gt[i]);
    return acc / static_cast<double>(pred.size());
}

std::pair<double, double> pck_auc(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt,
                                  double threshold_mm, double curve_max_mm, double curve_step_mm) {
    check_pair(pred, gt);
    if (!(threshold_mm >= 0.0) || !(curve_max_mm >= 0.0) || !(curve_step_mm > 0.0))
        throw ContractError("pck_auc thresholds must be nonnegative with positive step");
    std::vector<double> errs = joint_errors(pred, gt);
    const double n = static_cast<double>(errs.size());

    long correct = 0;
    for (double e : errs) correct += within(e, threshold_mm) ? 1 : 0;
    double pck = static_cast<double>(correct) / n;

    int steps = static_cast<int>(std::lround(curve_max_mm / curve_step_mm));
    double auc_acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
        double thr = static_cast<double>(i) * curve_step_mm;
        long c = 0;
        for (double e : errs) c += within(e, thr) ? 1 : 0;
        auc_acc += static_cast<double>(c) / n;
    }
    return {pck, auc_acc / static_cast<double>(steps + 1)};
}

EvalReport evaluate(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
    check_pair(pred, gt);
    EvalReport rep;
    rep.per_sample_mpjpe_mm.reserve(pred.size());
    for (size_t i = 0; i < pred.size(); ++i)
        rep.per_sample_mpjpe_mm.push_back(sample_mpjpe(pred[i], gt[i]));
    double acc = 0.0;
    for (double e : rep.per_sample_mpjpe_mm) acc += e;
    rep.mpjpe_mm = acc / static_cast<double>(pred.size());
    rep.pa_mpjpe_mm = pa_mpjpe(pred, gt);
    auto [pck, auc] = pck_auc(pred, gt);
    rep.pck = pck;
    rep.auc = auc;
    return rep;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["mpjpe_mm"] = mpjpe_mm;
    j["pa_mpjpe_mm"] = pa_mpjpe_mm;
    j["pck"] = pck;
    j["auc"] = auc;
    j["samples"] = per_sample_mpjpe_mm.size();
    j["per_sample_mpjpe_mm"] = per_sample_mpjpe_mm;
    return j.dump(2);
}

void RtDistribution::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write distribution file: " + path);
    out << "pool,view_x,view_y,view_z,pos_x_mm,pos_y_mm,pos_z_mm\n";
    char buf[256];
    auto emit = [&](const char* pool, const RtRow& r) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", pool,
                      r.viewpoint[0], r.viewpoint[1], r.viewpoint[2], r.position_mm[0],
                      r.position_mm[1], r.position_mm[2]);
        out << buf;
    };
    for (const RtRow& r : source) emit("source", r);
    for (const RtRow& r : augmented) emit("augmented", r);
    if (!out) throw DataError("failed while writing distribution file: " + path);
}

RtDistribution export_rt_distribution(const AugmentorNet& net,
                                      const std::vector<PoseRecord>& records, int n_samples,
                                      Rng& rng) {
    if (records.empty()) throw ContractError("export_rt_distribution needs a nonempty dataset");
    const int root = net.topology().root();
    RtDistribution dist;
    dist.source.reserve(static_cast<size_t>(n_samples));
    dist.augmented.reserve(static_cast<size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        const PoseRecord& rec = records[static_cast<size_t>(i) % records.size()];
        dist.source.push_back(source_row(rec, root));
        bool done = false;
        for (int attempt = 0; attempt < 64 && !done; ++attempt) {
            try {
                AugmentResult res = augment(net, rec.pose3d, rec.camera, rng);
                dist.augmented.push_back(augmented_row(res.params));
                done = true;
            } catch (const DomainError&) {
            }
        }
        if (!done)
            throw DomainError("augmentor rejected 64 consecutive draws for record " +
                              std::to_string(i));
    }
    dist.source_cov_trace = position_cov_trace(dist.source);
    dist.augmented_cov_trace = position_cov_trace(dist.augmented);
    return dist;
}

RtDistribution export_rt_distribution_params(
    const SkeletonTopology& topo,
    const std::function<AugmentationParams(const PoseRecord&, int)>& sample_params,
    const std::vector<PoseRecord>& records, int n_samples) {
    if (records.empty()) throw ContractError("export_rt_distribution needs a nonempty dataset");
    const int root = topo.root();
    RtDistribution dist;
    for (int i = 0; i < n_samples; ++i) {
        const PoseRecord& rec = records[static_cast<size_t>(i) % records.size()];
        dist.source.push_back(source_row(rec, root));
        dist.augmented.push_back(augmented_row(sample_params(rec, i)));
    }
    dist.source_cov_trace = position_cov_trace(dist.source);
    dist.augmented_cov_trace = position_cov_trace(dist.augmented);
    return dist;
}

}  // namespace liftaug
