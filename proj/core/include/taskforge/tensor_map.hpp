#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace taskforge {

/// A single named tensor: row-major float32 payload plus its shape.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<float> data;

    int64_t numel() const {
        int64_t n = 1;
        for (auto s : shape) n *= s;
        return n;
    }
    bool operator==(const Tensor&) const = default;
};

/// Ordered collection of named tensors. Names are kept sorted
/// lexicographically (std::map), which fixes the canonical order used
/// everywhere: serialization, reductions, RNG streams.
class TensorMap {
  public:
    using Entries = std::map<std::string, Tensor>;

    TensorMap() = default;

    void set(const std::string& name, Tensor t);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return entries_.count(name) > 0; }

    const Entries& entries() const { return entries_; }
    Entries& entries() { return entries_; }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Total element count across all tensors (the "d" of the flattened view).
    int64_t total_elements() const;

    /// Sorted tensor-name list.
    std::vector<std::string> manifest() const;

    /// True if all entries satisfy product(shape) == data length.
    void validate_shapes() const;

    /// Throws if any value is NaN or infinite.
    void validate_finite() const;

    bool same_manifest_and_shapes(const TensorMap& other) const;

    bool operator==(const TensorMap&) const = default;

  private:
    Entries entries_;
};

/// Visits every element of `m` in canonical (name, flat-index) order.
template <typename Fn>
void for_each_element(const TensorMap& m, Fn&& fn) {
    for (const auto& [name, t] : m.entries()) {
        for (size_t i = 0; i < t.data.size(); ++i) fn(name, i, t.data[i]);
    }
}

/// Flattens in canonical order into one vector (small inputs / tests).
std::vector<float> flatten(const TensorMap& m);

/// Builds a map with the same manifest/shapes as `like`, zero-filled.
TensorMap zeros_like(const TensorMap& like);

/// L2 norm over the full flattened map, 64-bit accumulation.
double l2_norm(const TensorMap& m);

/// Inner product of two maps with identical manifests, 64-bit accumulation.
double dot(const TensorMap& a, const TensorMap& b);

}  // namespace taskforge
