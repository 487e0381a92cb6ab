#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskforge/tensor_map.hpp"

namespace taskforge {

/// Checkpoint metadata carried in the container's __metadata__ block.
struct CheckpointMeta {
    std::string model_id;
    std::string config_hash;  // 64 hex chars when present, else empty
    std::map<std::string, std::string> extra;
};

struct Checkpoint {
    TensorMap tensors;
    CheckpointMeta meta;

    std::vector<std::string> key_manifest() const { return tensors.manifest(); }
};

struct LoadOptions {
    bool strict_finite = true;  // reject NaN/Inf payloads
};

/// Reads a safetensors-layout file: 8-byte LE header length, JSON header
/// (name -> dtype/shape/data_offsets, optional __metadata__), then the
/// concatenated little-endian payload. F16 tensors are widened to F32.
Checkpoint load_checkpoint(const std::string& path, const LoadOptions& opts = {});

/// Canonical writer: names sorted, offsets assigned in name order, header
/// JSON emitted with sorted keys. Equal checkpoints produce identical bytes.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Debug fallback: JSON document with shapes and full data arrays.
void save_checkpoint_json(const Checkpoint& ckpt, const std::string& path);

struct AlignmentReport {
    std::vector<std::string> common;                         // names in all maps, shapes agree
    std::vector<std::vector<std::string>> missing_per_map;   // names absent from map i
    std::vector<std::string> shape_conflicts;                // shared names with conflicting shapes
};

/// Intersects manifests. A name present with conflicting shapes is a hard
/// error unless `report_only`; it is never silently dropped.
AlignmentReport align_keys(const std::vector<const TensorMap*>& maps, bool report_only = false);

/// SHA-256 of a canonical config document, lowercase hex.
std::string config_hash(const std::string& canonical_config);

}  // namespace taskforge
