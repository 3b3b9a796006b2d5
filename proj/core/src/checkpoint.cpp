#include "liftaug/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "liftaug/errors.hpp"
#include "liftaug/rng.hpp"

namespace liftaug {

namespace {
constexpr char kMagic[4] = {'L', 'A', 'C', 'K'};
constexpr uint32_t kFormatVersion = 1;
}  // namespace

void Checkpoint::put(const std::string& name, const Tensor& t) {
    if (tensors_.count(name)) throw ContractError("duplicate checkpoint entry: " + name);
    names_.push_back(name);
    tensors_.emplace(name, t);
}

const Tensor* Checkpoint::get(const std::string& name) const {
    auto it = tensors_.find(name);
    return it == tensors_.end() ? nullptr : &it->second;
}

void Checkpoint::put_params(const std::string& prefix, const ParamStore& store) {
    for (const Param* p : store.all()) put(prefix + p->name, p->value);
}

void Checkpoint::load_params(const std::string& prefix, ParamStore& store) const {
    for (Param* p : store.all()) {
        const Tensor* t = get(prefix + p->name);
        if (!t) throw DataError("checkpoint missing parameter " + prefix + p->name);
        if (!t->same_shape(p->value))
            throw DataError("checkpoint shape mismatch for " + prefix + p->name + ": " +
                            t->shape_str() + " vs " + p->value.shape_str());
        p->value = *t;
    }
}

void Checkpoint::put_adam(const std::string& prefix, const Adam& opt) {
    for (const auto& [name, slot] : opt.slots()) {
        put(prefix + name + ".m1", slot.m1);
        put(prefix + name + ".m2", slot.m2);
    }
    meta.extra[prefix + "step_count"] = std::to_string(opt.step_count());
}

void Checkpoint::load_adam(const std::string& prefix, Adam& opt) const {
    opt.slots().clear();
    for (const std::string& name : names_) {
        if (name.rfind(prefix, 0) != 0) continue;
        if (name.size() > 3 && name.compare(name.size() - 3, 3, ".m1") == 0) {
            std::string pname = name.substr(prefix.size(), name.size() - prefix.size() - 3);
            const Tensor* m1 = get(name);
            const Tensor* m2 = get(prefix + pname + ".m2");
            if (!m2) throw DataError("checkpoint missing " + prefix + pname + ".m2");
            opt.slots()[pname] = AdamSlot{*m1, *m2};
        }
    }
    auto it = meta.extra.find(prefix + "step_count");
    if (it == meta.extra.end()) throw DataError("checkpoint missing " + prefix + "step_count");
    opt.set_step_count(std::stol(it->second));
}

void Checkpoint::save(const std::string& path) const {
    nlohmann::json index;
    index["meta"] = {{"format_version", meta.format_version},
                     {"epoch", meta.epoch},
                     {"seed", meta.seed},
                     {"beta", meta.beta},
                     {"phase", meta.phase},
                     {"extra", meta.extra}};
    nlohmann::json entries = nlohmann::json::array();
    uint64_t offset = 0;  // in doubles
    uint64_t checksum = 0xcbf29ce484222325ull;
    for (const std::string& name : names_) {
        const Tensor& t = tensors_.at(name);
        entries.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += static_cast<uint64_t>(t.numel());
        checksum = hash_bytes(t.data(), sizeof(double) * static_cast<size_t>(t.numel()), checksum);
    }
    index["entries"] = std::move(entries);
    index["payload_doubles"] = offset;
    index["payload_hash"] = checksum;
    std::string index_str = index.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    uint32_t ver = kFormatVersion;
    out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    uint64_t index_len = index_str.size();
    out.write(reinterpret_cast<const char*>(&index_len), sizeof(index_len));
    out.write(index_str.data(), static_cast<std::streamsize>(index_len));
    for (const std::string& name : names_) {
        const Tensor& t = tensors_.at(name);
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(sizeof(double) * t.numel()));
    }
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a checkpoint file: " + path);
    uint32_t ver = 0;
    in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
    if (ver != kFormatVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(ver));
    uint64_t index_len = 0;
    in.read(reinterpret_cast<char*>(&index_len), sizeof(index_len));
    std::string index_str(index_len, '\0');
    in.read(index_str.data(), static_cast<std::streamsize>(index_len));
    if (!in) throw DataError("truncated checkpoint index: " + path);

    nlohmann::json index;
    try {
        index = nlohmann::json::parse(index_str);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("corrupt checkpoint index: ") + e.what());
    }

    Checkpoint ck;
    const auto& jm = index.at("meta");
    ck.meta.format_version = jm.at("format_version").get<int>();
    ck.meta.epoch = jm.at("epoch").get<long>();
    ck.meta.seed = jm.at("seed").get<uint64_t>();
    ck.meta.beta = jm.at("beta").get<double>();
    ck.meta.phase = jm.at("phase").get<std::string>();
    ck.meta.extra = jm.at("extra").get<std::map<std::string, std::string>>();

    uint64_t payload_doubles = index.at("payload_doubles").get<uint64_t>();
    std::vector<double> payload(payload_doubles);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(sizeof(double) * payload_doubles));
    if (!in) throw DataError("truncated checkpoint payload: " + path);

    uint64_t checksum = hash_bytes(payload.data(), sizeof(double) * payload.size());
    if (checksum != index.at("payload_hash").get<uint64_t>())
        throw DataError("checkpoint payload checksum mismatch: " + path);

    for (const auto& e : index.at("entries")) {
        std::string name = e.at("name").get<std::string>();
        std::vector<int> shape = e.at("shape").get<std::vector<int>>();
        uint64_t offset = e.at("offset").get<uint64_t>();
        long n = 1;
        for (int d : shape) n *= d;
        if (offset + static_cast<uint64_t>(n) > payload_doubles)
            throw DataError("checkpoint entry out of bounds: " + name);
        std::vector<double> vals(payload.begin() + static_cast<long>(offset),
                                 payload.begin() + static_cast<long>(offset) + n);
        ck.put(name, Tensor::from(std::move(shape), std::move(vals)));
    }
    return ck;
}

}  // namespace liftaug
