#include "taskforge/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "taskforge/sha256.hpp"

namespace taskforge {

namespace {

using nlohmann::json;

float half_to_float(uint16_t h) {
    uint32_t sign = (h >> 15) & 1u;
    uint32_t exp = (h >> 10) & 0x1fu;
    uint32_t frac = h & 0x3ffu;
    uint32_t bits;
    if (exp == 0) {
        if (frac == 0) {
            bits = sign << 31;
        } else {
            // subnormal: normalize
            int e = -1;
            uint32_t f = frac;
            do {
                ++e;
                f <<= 1;
            } while ((f & 0x400u) == 0);
            bits = (sign << 31) | ((127 - 15 - e) << 23) | ((f & 0x3ffu) << 13);
        }
    } else if (exp == 0x1f) {
        bits = (sign << 31) | 0x7f800000u | (frac << 13);
    } else {
        bits = (sign << 31) | ((exp - 15 + 127) << 23) | (frac << 13);
    }
    float out;
    std::memcpy(&out, &bits, 4);
    return out;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path, const LoadOptions& opts) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint file: " + path);

    uint64_t header_len = 0;
    f.read(reinterpret_cast<char*>(&header_len), 8);
    if (!f) throw std::runtime_error("malformed header: " + path);
    if (header_len > (1ull << 32)) throw std::runtime_error("malformed header: implausible length");

    std::string header_str(header_len, '\0');
    f.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!f) throw std::runtime_error("malformed header: truncated JSON block");

    json header;
    try {
        header = json::parse(header_str);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("malformed header: ") + e.what());
    }
    if (!header.is_object()) throw std::runtime_error("malformed header: not a JSON object");

    std::vector<char> payload((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());

    Checkpoint ckpt;
    for (auto& [name, info] : header.items()) {
        if (name == "__metadata__") {
            for (auto& [k, v] : info.items()) {
                std::string val = v.get<std::string>();
                if (k == "model_id") ckpt.meta.model_id = val;
                else if (k == "config_hash") ckpt.meta.config_hash = val;
                else ckpt.meta.extra[k] = val;
            }
            continue;
        }
        if (ckpt.tensors.contains(name)) {
            throw std::runtime_error("duplicate tensor name '" + name + "'");
        }
        std::string dtype = info.at("dtype").get<std::string>();
        auto shape = info.at("shape").get<std::vector<int64_t>>();
        auto offsets = info.at("data_offsets").get<std::vector<uint64_t>>();
        if (offsets.size() != 2 || offsets[1] < offsets[0] || offsets[1] > payload.size()) {
            throw std::runtime_error("malformed data_offsets for '" + name + "'");
        }

        Tensor t;
        t.shape = shape;
        int64_t numel = t.numel();
        uint64_t nbytes = offsets[1] - offsets[0];
        const char* src = payload.data() + offsets[0];

        if (dtype == "F32") {
            if (nbytes != static_cast<uint64_t>(numel) * 4) {
                throw std::runtime_error("shape/data mismatch for '" + name + "'");
            }
            t.data.resize(static_cast<size_t>(numel));
            std::memcpy(t.data.data(), src, nbytes);
        } else if (dtype == "F16") {
            if (nbytes != static_cast<uint64_t>(numel) * 2) {
                throw std::runtime_error("shape/data mismatch for '" + name + "'");
            }
            t.data.resize(static_cast<size_t>(numel));
            for (int64_t i = 0; i < numel; ++i) {
                uint16_t h;
                std::memcpy(&h, src + 2 * i, 2);
                t.data[static_cast<size_t>(i)] = half_to_float(h);
            }
        } else {
            throw std::runtime_error("unsupported dtype '" + dtype + "' for '" + name + "'");
        }
        ckpt.tensors.set(name, std::move(t));
    }

    if (opts.strict_finite) ckpt.tensors.validate_finite();
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    ckpt.tensors.validate_shapes();

    json header = json::object();
    uint64_t offset = 0;
    for (const auto& [name, t] : ckpt.tensors.entries()) {
        uint64_t nbytes = static_cast<uint64_t>(t.numel()) * 4;
        if (nbytes / 4 != static_cast<uint64_t>(t.numel())) {
            throw std::runtime_error("unserializable shape for '" + name + "'");
        }
        header[name] = {{"dtype", "F32"},
                        {"shape", t.shape},
                        {"data_offsets", {offset, offset + nbytes}}};
        offset += nbytes;
    }
    json meta = json::object();
    if (!ckpt.meta.model_id.empty()) meta["model_id"] = ckpt.meta.model_id;
    if (!ckpt.meta.config_hash.empty()) meta["config_hash"] = ckpt.meta.config_hash;
    for (const auto& [k, v] : ckpt.meta.extra) meta[k] = v;
    if (!meta.empty()) header["__metadata__"] = meta;

    std::string header_str = header.dump();
    uint64_t header_len = header_str.size();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(&header_len), 8);
    f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& [_, t] : ckpt.tensors.entries()) {
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * 4));
    }
    if (!f) throw std::runtime_error("I/O failure writing " + path);
}

void save_checkpoint_json(const Checkpoint& ckpt, const std::string& path) {
    json doc = json::object();
    json tensors = json::object();
    for (const auto& [name, t] : ckpt.tensors.entries()) {
        tensors[name] = {{"shape", t.shape}, {"data", t.data}};
    }
    doc["tensors"] = tensors;
    json meta = json::object();
    meta["model_id"] = ckpt.meta.model_id;
    meta["config_hash"] = ckpt.meta.config_hash;
    doc["meta"] = meta;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << doc.dump(2) << '\n';
}

AlignmentReport align_keys(const std::vector<const TensorMap*>& maps, bool report_only) {
    if (maps.empty()) throw std::invalid_argument("align_keys: at least one map required");

    AlignmentReport rep;
    rep.missing_per_map.resize(maps.size());

    std::set<std::string> all_names;
    for (const auto* m : maps) {
        for (const auto& [name, _] : m->entries()) all_names.insert(name);
    }

    for (const auto& name : all_names) {
        size_t present = 0;
        const std::vector<int64_t>* shape = nullptr;
        bool conflict = false;
        for (size_t i = 0; i < maps.size(); ++i) {
            if (!maps[i]->contains(name)) {
                rep.missing_per_map[i].push_back(name);
                continue;
            }
            ++present;
            const auto& s = maps[i]->at(name).shape;
            if (shape && *shape != s) conflict = true;
            if (!shape) shape = &s;
        }
        if (conflict && present > 1) {
            if (!report_only) {
                throw std::runtime_error("shape conflict on shared tensor '" + name + "'");
            }
            rep.shape_conflicts.push_back(name);
        } else if (present == maps.size()) {
            rep.common.push_back(name);
        }
    }
    return rep;
}

std::string config_hash(const std::string& canonical_config) {
    return sha256_hex(canonical_config);
}

}  // namespace taskforge
