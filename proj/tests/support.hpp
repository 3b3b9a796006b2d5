#pragma once

#include <cmath>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "liftaug/camera.hpp"
#include "liftaug/graph.hpp"
#include "liftaug/rng.hpp"
#include "liftaug/skeleton.hpp"
#include "liftaug/tensor.hpp"

#ifndef LIFTAUG_SOURCE_DIR
#error "tests must be compiled with LIFTAUG_SOURCE_DIR"
#endif

namespace testutil {

inline std::string data_path(const std::string& rel) {
    return std::string(LIFTAUG_SOURCE_DIR) + "/" + rel;
}

inline const liftaug::SkeletonTopology& stock_topology() {
    static liftaug::SkeletonTopology topo =
        liftaug::SkeletonTopology::from_json_file(data_path("data/skeleton_h36m16.json"));
    return topo;
}

/// Simple chain topology root -> j1 -> ... (no parts, no symmetry).
inline liftaug::SkeletonTopology chain_topology(int joints) {
    std::string names = "[", parents = "[";
    for (int i = 0; i < joints; ++i) {
        if (i) {
            names += ",";
            parents += ",";
        }
        names += "\"j" + std::to_string(i) + "\"";
        parents += std::to_string(i - 1);
    }
    names += "]";
    parents += "]";
    return liftaug::SkeletonTopology::from_json_text("{\"joint_names\":" + names +
                                                     ",\"parents\":" + parents + ",\"root\":0}");
}

/// Random camera-valid pose assembled from random bone directions and lengths.
inline liftaug::Pose3D random_pose(const liftaug::SkeletonTopology& topo, liftaug::Rng& rng,
                                   double root_z = 5000.0) {
    liftaug::Tensor bones({topo.bone_count(), 3});
    for (int k = 0; k < topo.bone_count(); ++k) {
        double v[3], n = 0.0;
        do {
            n = 0.0;
            for (int c = 0; c < 3; ++c) {
                v[c] = rng.normal();
                n += v[c] * v[c];
            }
            n = std::sqrt(n);
        } while (n < 1e-3);
        double len = rng.uniform(200.0, 500.0);
        for (int c = 0; c < 3; ++c) bones.at(k, c) = len * v[c] / n;
    }
    std::array<double, 3> root = {rng.uniform(-300.0, 300.0), rng.uniform(-300.0, 300.0),
                                  root_z + rng.uniform(-500.0, 500.0)};
    return liftaug::inverse_hierarchical(topo, bones, root);
}

inline liftaug::Camera test_camera() { return liftaug::Camera{1100.0, 1100.0, 512.0, 512.0}; }

inline double rel_err(double analytic, double numeric) {
    double m = std::max(std::fabs(analytic), std::fabs(numeric));
    if (m < 1e-7) return 0.0;
    return std::fabs(analytic - numeric) / m;
}

/// Builds a scalar loss from the current parameter values. Must be a
/// deterministic function of those values (freeze any dropout RNG inside).
using LossBuilder = std::function<liftaug::Value(liftaug::Tape&)>;

/// Max relative error between analytic parameter gradients and central
/// finite differences, probing up to max_entries random entries per param.
inline double max_param_grad_err(std::vector<liftaug::Param*> params, const LossBuilder& build,
                                 int max_entries, liftaug::Rng& pick, double h = 1e-5) {
    auto eval = [&]() {
        liftaug::Tape t;
        return build(t).val().item();
    };
    for (liftaug::Param* p : params) p->zero_grad();
    {
        liftaug::Tape t;
        liftaug::Value loss = build(t);
        t.backward(loss);
    }
    double worst = 0.0;
    for (liftaug::Param* p : params) {
        long n = p->value.numel();
        for (int probe = 0; probe < std::min<long>(max_entries, n); ++probe) {
            long i = n <= max_entries ? probe : static_cast<long>(pick.uniform_index(static_cast<uint64_t>(n)));
            double saved = p->value[i];
            p->value[i] = saved + h;
            double up = eval();
            p->value[i] = saved - h;
            double dn = eval();
            p->value[i] = saved;
            double fd = (up - dn) / (2.0 * h);
            double an = p->grad.numel() == n ? p->grad[i] : 0.0;
            worst = std::max(worst, rel_err(an, fd));
        }
    }
    return worst;
}

/// Same check for the gradient w.r.t. a tensor input fed through Tape::input.
inline double max_input_grad_err(liftaug::Tensor x,
                                 const std::function<liftaug::Value(liftaug::Tape&,
                                                                    liftaug::Value)>& build,
                                 int max_entries, liftaug::Rng& pick, double h = 1e-5) {
    auto eval = [&]() {
        liftaug::Tape t;
        return build(t, t.input(x)).val().item();
    };
    liftaug::Tensor grad;
    {
        liftaug::Tape t;
        liftaug::Value in = t.input(x);
        liftaug::Value loss = build(t, in);
        t.backward(loss);
        grad = in.grad();
    }
    double worst = 0.0;
    long n = x.numel();
    for (int probe = 0; probe < std::min<long>(max_entries, n); ++probe) {
        long i = n <= max_entries ? probe : static_cast<long>(pick.uniform_index(static_cast<uint64_t>(n)));
        double saved = x[i];
        x[i] = saved + h;
        double up = eval();
        x[i] = saved - h;
        double dn = eval();
        x[i] = saved;
        double fd = (up - dn) / (2.0 * h);
        worst = std::max(worst, rel_err(grad[i], fd));
    }
    return worst;
}

}  // namespace testutil
