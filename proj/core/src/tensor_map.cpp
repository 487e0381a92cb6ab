#include "taskforge/tensor_map.hpp"

#include <cmath>
#include <stdexcept>

namespace taskforge {

void TensorMap::set(const std::string& name, Tensor t) {
    for (auto s : t.shape) {
        if (s < 0) throw std::invalid_argument("negative extent in shape of '" + name + "'");
    }
    if (t.numel() != static_cast<int64_t>(t.data.size())) {
        throw std::invalid_argument("shape/data mismatch for tensor '" + name + "'");
    }
    entries_[name] = std::move(t);
}

const Tensor& TensorMap::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw std::out_of_range("no tensor named '" + name + "'");
    return it->second;
}

int64_t TensorMap::total_elements() const {
    int64_t n = 0;
    for (const auto& [_, t] : entries_) n += t.numel();
    return n;
}

std::vector<std::string> TensorMap::manifest() const {
    std::vector<std::string> names;
    names.reserve(entries_.size());
    for (const auto& [name, _] : entries_) names.push_back(name);
    return names;
}

void TensorMap::validate_shapes() const {
    for (const auto& [name, t] : entries_) {
        if (t.numel() != static_cast<int64_t>(t.data.size())) {
            throw std::runtime_error("shape/data mismatch for tensor '" + name + "'");
        }
    }
}

void TensorMap::validate_finite() const {
    for (const auto& [name, t] : entries_) {
        for (float v : t.data) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("non-finite value in tensor '" + name + "'");
            }
        }
    }
}

bool TensorMap::same_manifest_and_shapes(const TensorMap& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    auto it = other.entries_.begin();
    for (const auto& [name, t] : entries_) {
        if (it->first != name || it->second.shape != t.shape) return false;
        ++it;
    }
    return true;
}

std::vector<float> flatten(const TensorMap& m) {
    std::vector<float> out;
    out.reserve(static_cast<size_t>(m.total_elements()));
    for (const auto& [_, t] : m.entries()) {
        out.insert(out.end(), t.data.begin(), t.data.end());
    }
    return out;
}

TensorMap zeros_like(const TensorMap& like) {
    TensorMap out;
    for (const auto& [name, t] : like.entries()) {
        Tensor z;
        z.shape = t.shape;
        z.data.assign(t.data.size(), 0.0f);
        out.set(name, std::move(z));
    }
    return out;
}

double l2_norm(const TensorMap& m) {
    double acc = 0.0;
    for (const auto& [_, t] : m.entries()) {
        for (float v : t.data) acc += static_cast<double>(v) * v;
    }
    return std::sqrt(acc);
}

double dot(const TensorMap& a, const TensorMap& b) {
    if (!a.same_manifest_and_shapes(b)) {
        throw std::invalid_argument("dot: manifests/shapes differ");
    }
    double acc = 0.0;
    auto ib = b.entries().begin();
    for (const auto& [_, ta] : a.entries()) {
        const auto& tb = ib->second;
        for (size_t i = 0; i < ta.data.size(); ++i) {
            acc += static_cast<double>(ta.data[i]) * tb.data[i];
        }
        ++ib;
    }
    return acc;
}

}  // namespace taskforge
