#include "taskforge/lmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace taskforge {

namespace {

void check_alphas(const std::vector<double>& alphas) {
    if (alphas.size() < 2) throw std::invalid_argument("alphas must include 0 and 1");
    for (size_t i = 1; i < alphas.size(); ++i) {
        if (alphas[i] <= alphas[i - 1]) {
            throw std::invalid_argument("alphas must be strictly ascending");
        }
    }
    if (alphas.front() != 0.0 || alphas.back() != 1.0) {
        throw std::invalid_argument("alphas must start at 0 and end at 1");
    }
}

Checkpoint lerp(const Checkpoint& a, const Checkpoint& b, double alpha) {
    if (alpha == 1.0) return a;
    if (alpha == 0.0) return b;
    Checkpoint out;
    auto ib = b.tensors.entries().begin();
    for (const auto& [name, ta] : a.tensors.entries()) {
        const auto& tb = ib->second;
        Tensor r;
        r.shape = ta.shape;
        r.data.resize(ta.data.size());
        for (size_t i = 0; i < ta.data.size(); ++i) {
            r.data[i] = static_cast<float>(alpha * static_cast<double>(ta.data[i]) +
                                           (1.0 - alpha) * static_cast<double>(tb.data[i]));
        }
        out.tensors.set(name, std::move(r));
        ++ib;
    }
    return out;
}

}  // namespace

InterpolationPath interpolate(const Checkpoint& a, const Checkpoint& b,
                              const std::vector<double>& alphas) {
    check_alphas(alphas);
    if (!a.tensors.same_manifest_and_shapes(b.tensors)) {
        throw std::invalid_argument("interpolate: manifests differ");
    }
    InterpolationPath path;
    path.endpoint_a_id = a.meta.model_id;
    path.endpoint_b_id = b.meta.model_id;
    path.alphas = alphas;
    path.checkpoints.reserve(alphas.size());
    for (double alpha : alphas) path.checkpoints.push_back(lerp(a, b, alpha));
    return path;
}

void interpolate_streamed(const Checkpoint& a, const Checkpoint& b,
                          const std::vector<double>& alphas,
                          const std::function<void(double, const Checkpoint&)>& sink) {
    check_alphas(alphas);
    if (!a.tensors.same_manifest_and_shapes(b.tensors)) {
        throw std::invalid_argument("interpolate: manifests differ");
    }
    for (double alpha : alphas) {
        Checkpoint c = lerp(a, b, alpha);
        sink(alpha, c);
    }
}

double barrier(const std::vector<double>& losses) {
    if (losses.size() < 3) {
        throw std::invalid_argument("barrier: need at least 3 loss values");
    }
    double endpoint_max = std::max(losses.front(), losses.back());
    double interior_max = losses[1];
    for (size_t i = 1; i + 1 < losses.size(); ++i) {
        interior_max = std::max(interior_max, losses[i]);
    }
    return std::max(0.0, interior_max - endpoint_max);
}

std::map<std::pair<std::string, std::string>, double> barrier_matrix(
    const std::vector<InterpolationPath>& paths) {
    std::map<std::pair<std::string, std::string>, double> out;
    for (const auto& p : paths) {
        if (p.losses.empty()) {
            throw std::invalid_argument("barrier_matrix: path " + p.endpoint_a_id + "-" +
                                        p.endpoint_b_id + " carries no losses");
        }
        out[{p.endpoint_a_id, p.endpoint_b_id}] = barrier(p.losses);
    }
    return out;
}

double quadratic_loss(const TensorMap& theta, const TensorMap& target) {
    double acc = 0.0;
    auto it = target.entries().begin();
    for (const auto& [_, t] : theta.entries()) {
        const auto& tt = it->second;
        for (size_t i = 0; i < t.data.size(); ++i) {
            double d = static_cast<double>(t.data[i]) - tt.data[i];
            acc += d * d;
        }
        ++it;
    }
    return acc;
}

}  // namespace taskforge
