#pragma once

#include <string>
#include <vector>

#include "liftaug/camera.hpp"
#include "liftaug/skeleton.hpp"

namespace liftaug {

/// One paired 2D-3D sample.
struct PoseRecord {
    Pose3D pose3d;  // mm, camera frame, all depths > 0
    Camera camera;
    Pose2D pose2d;  // pixels; projected from pose3d when absent in the file
    std::string subject;
    std::string sequence;
};

struct Dataset {
    uint64_t topology_hash = 0;
    std::vector<PoseRecord> records;

    size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

/// JSON Lines: a header object carrying the topology hash and unit
/// declaration, then one record per line. Validation failures name the
/// offending record index.
Dataset load_dataset(const std::string& path, const SkeletonTopology& topo);
void save_dataset(const std::string& path, const Dataset& data, const SkeletonTopology& topo);

}  // namespace liftaug
