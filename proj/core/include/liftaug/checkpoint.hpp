#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liftaug/adam.hpp"
#include "liftaug/graph.hpp"

namespace liftaug {

struct CheckpointMeta {
    int format_version = 1;
    long epoch = 0;  // completed epochs at save time
    uint64_t seed = 0;
    double beta = 0.0;
    std::string phase;  // "pretrain" or "train"
    std::map<std::string, std::string> extra;
};

/// Flat container of named f64 tensors plus metadata, saved as a single
/// binary file: magic, version, a JSON index and a contiguous payload.
/// Load verifies magic, version, payload size and a payload checksum.
class Checkpoint {
  public:
    CheckpointMeta meta;

    void put(const std::string& name, const Tensor& t);
    const Tensor* get(const std::string& name) const;
    bool has(const std::string& name) const { return get(name) != nullptr; }
    size_t entry_count() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    /// Store every parameter (buffers included) under prefix + name.
    void put_params(const std::string& prefix, const ParamStore& store);
    /// Restore values into an existing store; every parameter must be
    /// present with a matching shape.
    void load_params(const std::string& prefix, ParamStore& store) const;

    void put_adam(const std::string& prefix, const Adam& opt);
    void load_adam(const std::string& prefix, Adam& opt) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

  private:
    std::vector<std::string> names_;
    std::map<std::string, Tensor> tensors_;
};

}  // namespace liftaug
