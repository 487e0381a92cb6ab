#pragma once

#include <string>
#include <vector>

#include "taskforge/checkpoint.hpp"
#include "taskforge/tensor_map.hpp"

namespace taskforge {

/// Difference between a specialist checkpoint and its shared base,
/// tagged with provenance so incompatible vectors cannot be combined
/// by accident.
struct TaskVector {
    TensorMap delta;
    std::string specialist_id;
    std::string base_hash;  // config hash of the base checkpoint's provenance

    std::vector<std::string> key_manifest() const { return delta.manifest(); }
};

/// True when `name` matches the glob `pattern` ('*' and '?' wildcards).
bool glob_match(const std::string& pattern, const std::string& name);

/// specialist - base, elementwise, after dropping names matching any
/// exclude pattern from both sides. Manifests must then agree exactly.
TaskVector extract(const Checkpoint& base, const Checkpoint& specialist,
                   const std::vector<std::string>& exclude = {},
                   const std::string& specialist_id = "");

/// base + scale * tv for names present in tv; other tensors pass through.
Checkpoint apply(const Checkpoint& base, const TensorMap& tv, double scale);

/// sum_i coeffs[i] * tvs[i], elementwise, 64-bit accumulation in input order.
TensorMap linear_combine(const std::vector<const TaskVector*>& tvs,
                         const std::vector<double>& coeffs);

/// Throws unless all vectors share base_hash and manifest/shapes.
void check_combinable(const std::vector<const TaskVector*>& tvs, bool force = false);

/// TaskVectors serialize as checkpoints with specialist_id/base_hash metadata.
void save_task_vector(const TaskVector& tv, const std::string& path);
TaskVector load_task_vector(const std::string& path, const LoadOptions& opts = {});

}  // namespace taskforge
