#include "liftaug/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "liftaug/errors.hpp"

namespace liftaug {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "liftaug-poses";
constexpr int kFormatVersion = 1;

json pose_to_json(const Tensor& t) {
    json rows = json::array();
    for (int r = 0; r < t.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < t.cols(); ++c) row.push_back(t.at(r, c));
        rows.push_back(row);
    }
    return rows;
}

Tensor pose_from_json(const json& j, int rows, int cols, const char* field, int record_index) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw DataError(std::string(field) + " must be an array of " + std::to_string(rows) +
                            " rows",
                        record_index);
    Tensor t = Tensor::zeros({rows, cols});
    for (int r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw DataError(std::string(field) + " row " + std::to_string(r) + " must have " +
                                std::to_string(cols) + " values",
                            record_index);
        for (int c = 0; c < cols; ++c) {
            if (!row[c].is_number())
                throw DataError(std::string(field) + " has a non-numeric entry", record_index);
            double v = row[c].get<double>();
            if (!std::isfinite(v))
                throw DataError(std::string(field) + " has a non-finite entry", record_index);
            t.at(r, c) = v;
        }
    }
    return t;
}

}  // namespace

Dataset load_dataset(const std::string& path, const SkeletonTopology& topo) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);

    Dataset data;
    std::string line;
    bool have_header = false;
    int record_index = 0;
    const int joints = topo.joint_count();

    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            if (!have_header) throw DataError(std::string("malformed dataset header: ") + e.what());
            throw DataError(std::string("malformed record: ") + e.what(), record_index);
        }

        if (!have_header) {
            if (!j.is_object() || j.value("format", "") != kFormatName)
                throw DataError("missing dataset header line (expected format \"" +
                                std::string(kFormatName) + "\")");
            if (j.value("version", 0) != kFormatVersion)
                throw DataError("unsupported dataset version " +
                                std::to_string(j.value("version", 0)));
            if (j.value("units", "") != "mm")
                throw DataError("dataset units must be \"mm\", got \"" + j.value("units", "") +
                                "\"");
            if (j.value("joint_count", -1) != joints)
                throw DataError("dataset joint count " + std::to_string(j.value("joint_count", -1)) +
                                " does not match topology joint count " + std::to_string(joints));
            uint64_t h = 0;
            try {
                h = std::stoull(j.value("topology_hash", std::string("0")));
            } catch (const std::exception&) {
                throw DataError("malformed topology_hash in dataset header");
            }
            if (h != topo.hash())
                throw DataError("dataset topology hash " + std::to_string(h) +
                                " does not match topology " + std::to_string(topo.hash()));
            data.topology_hash = h;
            have_header = true;
            continue;
        }

        try {
            PoseRecord rec;
            if (!j.contains("pose3d")) throw DataError("record missing pose3d", record_index);
            Tensor p3 = pose_from_json(j["pose3d"], joints, 3, "pose3d", record_index);
            for (int r = 0; r < joints; ++r)
                if (p3.at(r, 2) <= 0.0)
                    throw DataError("pose3d joint " + std::to_string(r) +
                                        " has non-positive depth " + std::to_string(p3.at(r, 2)),
                                    record_index);
            rec.pose3d = Pose3D(p3);

            if (!j.contains("camera")) throw DataError("record missing camera", record_index);
            const json& jc = j["camera"];
            for (const char* k : {"fx", "fy", "cx", "cy"})
                if (!jc.contains(k) || !jc[k].is_number())
                    throw DataError(std::string("camera missing numeric field ") + k, record_index);
            rec.camera = Camera{jc["fx"].get<double>(), jc["fy"].get<double>(),
                                jc["cx"].get<double>(), jc["cy"].get<double>()};
            rec.camera.validate();

            if (j.contains("pose2d")) {
                rec.pose2d = Pose2D(pose_from_json(j["pose2d"], joints, 2, "pose2d", record_index));
            } else {
                rec.pose2d = project(rec.pose3d, rec.camera);
            }
            rec.subject = j.value("subject", "");
            rec.sequence = j.value("sequence", "");
            data.records.push_back(std::move(rec));
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(e.what(), record_index);
        }
        ++record_index;
    }

    if (!have_header) {
        bool nonempty_file = false;
        {
            std::ifstream probe(path);
            std::string l;
            while (std::getline(probe, l))
                if (l.find_first_not_of(" \t\r") != std::string::npos) nonempty_file = true;
        }
        if (nonempty_file) throw DataError("missing dataset header line");
        std::fprintf(stderr, "warning: dataset file %s is empty\n", path.c_str());
        data.topology_hash = topo.hash();
        return data;
    }
    if (data.records.empty())
        std::fprintf(stderr, "warning: dataset file %s contains no records\n", path.c_str());
    return data;
}

void save_dataset(const std::string& path, const Dataset& data, const SkeletonTopology& topo) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file: " + path);

    json header;
    header["format"] = kFormatName;
    header["version"] = kFormatVersion;
    header["units"] = "mm";
    header["joint_count"] = topo.joint_count();
    header["topology_hash"] = std::to_string(topo.hash());
    out << header.dump() << "\n";

    for (const PoseRecord& rec : data.records) {
        json j;
        j["pose3d"] = pose_to_json(rec.pose3d.joints);
        j["camera"] = {{"fx", rec.camera.fx}, {"fy", rec.camera.fy},
                       {"cx", rec.camera.cx}, {"cy", rec.camera.cy}};
        j["pose2d"] = pose_to_json(rec.pose2d.joints);
        if (!rec.subject.empty()) j["subject"] = rec.subject;
        if (!rec.sequence.empty()) j["sequence"] = rec.sequence;
        out << j.dump() << "\n";
    }
    if (!out) throw DataError("failed while writing dataset file: " + path);
}

}  // namespace liftaug
