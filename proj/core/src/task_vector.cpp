#include "taskforge/task_vector.hpp"

#include <stdexcept>

namespace taskforge {

bool glob_match(const std::string& pattern, const std::string& name) {
    // iterative '*'/'?' matcher with backtracking on the last star
    size_t p = 0, n = 0, star = std::string::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

namespace {

bool excluded(const std::string& name, const std::vector<std::string>& patterns) {
    for (const auto& p : patterns) {
        if (glob_match(p, name)) return true;
    }
    return false;
}

TensorMap drop_excluded(const TensorMap& m, const std::vector<std::string>& patterns) {
    if (patterns.empty()) return m;
    TensorMap out;
    for (const auto& [name, t] : m.entries()) {
        if (!excluded(name, patterns)) out.set(name, t);
    }
    return out;
}

}  // namespace

TaskVector extract(const Checkpoint& base, const Checkpoint& specialist,
                   const std::vector<std::string>& exclude,
                   const std::string& specialist_id) {
    TensorMap b = drop_excluded(base.tensors, exclude);
    TensorMap s = drop_excluded(specialist.tensors, exclude);
    if (!b.same_manifest_and_shapes(s)) {
        throw std::runtime_error("extract: manifests differ after exclusion");
    }

    TaskVector tv;
    tv.specialist_id = specialist_id.empty() ? specialist.meta.model_id : specialist_id;
    tv.base_hash = base.meta.config_hash;

    auto ib = b.entries().begin();
    for (const auto& [name, ts] : s.entries()) {
        Tensor d;
        d.shape = ts.shape;
        d.data.resize(ts.data.size());
        const auto& tb = ib->second;
        for (size_t i = 0; i < ts.data.size(); ++i) d.data[i] = ts.data[i] - tb.data[i];
        tv.delta.set(name, std::move(d));
        ++ib;
    }
    return tv;
}

Checkpoint apply(const Checkpoint& base, const TensorMap& tv, double scale) {
    Checkpoint out;
    out.meta = base.meta;
    for (const auto& [name, tb] : base.tensors.entries()) {
        if (!tv.contains(name)) {
            out.tensors.set(name, tb);
            continue;
        }
        const Tensor& td = tv.at(name);
        if (td.shape != tb.shape) {
            throw std::runtime_error("apply: shape conflict on '" + name + "'");
        }
        Tensor r;
        r.shape = tb.shape;
        r.data.resize(tb.data.size());
        for (size_t i = 0; i < tb.data.size(); ++i) {
            r.data[i] = static_cast<float>(static_cast<double>(tb.data[i]) +
                                           scale * static_cast<double>(td.data[i]));
        }
        out.tensors.set(name, std::move(r));
    }
    for (const auto& [name, _] : tv.entries()) {
        if (!base.tensors.contains(name)) {
            throw std::runtime_error("apply: tensor '" + name + "' absent from base");
        }
    }
    return out;
}

void check_combinable(const std::vector<const TaskVector*>& tvs, bool force) {
    if (tvs.empty()) throw std::invalid_argument("no task vectors given");
    for (size_t i = 1; i < tvs.size(); ++i) {
        if (!tvs[0]->delta.same_manifest_and_shapes(tvs[i]->delta)) {
            throw std::runtime_error("task vectors have mismatched manifests/shapes");
        }
        if (!force && tvs[0]->base_hash != tvs[i]->base_hash) {
            throw std::runtime_error(
                "base_hash mismatch between task vectors '" + tvs[0]->specialist_id +
                "' and '" + tvs[i]->specialist_id + "' (use force to override)");
        }
    }
}

TensorMap linear_combine(const std::vector<const TaskVector*>& tvs,
                         const std::vector<double>& coeffs) {
    if (tvs.empty()) throw std::invalid_argument("linear_combine: empty list");
    if (tvs.size() != coeffs.size()) {
        throw std::invalid_argument("linear_combine: coefficient count mismatch");
    }
    check_combinable(tvs);

    TensorMap out;
    for (const auto& [name, t0] : tvs[0]->delta.entries()) {
        std::vector<const float*> src(tvs.size());
        for (size_t v = 0; v < tvs.size(); ++v) src[v] = tvs[v]->delta.at(name).data.data();
        Tensor r;
        r.shape = t0.shape;
        r.data.resize(t0.data.size());
        for (size_t i = 0; i < t0.data.size(); ++i) {
            double acc = 0.0;
            for (size_t v = 0; v < tvs.size(); ++v) {
                acc += coeffs[v] * static_cast<double>(src[v][i]);
            }
            r.data[i] = static_cast<float>(acc);
        }
        out.set(name, std::move(r));
    }
    return out;
}

void save_task_vector(const TaskVector& tv, const std::string& path) {
    Checkpoint c;
    c.tensors = tv.delta;
    c.meta.model_id = tv.specialist_id;
    c.meta.extra["specialist_id"] = tv.specialist_id;
    c.meta.extra["base_hash"] = tv.base_hash;
    save_checkpoint(c, path);
}

TaskVector load_task_vector(const std::string& path, const LoadOptions& opts) {
    Checkpoint c = load_checkpoint(path, opts);
    TaskVector tv;
    tv.delta = std::move(c.tensors);
    auto it = c.meta.extra.find("specialist_id");
    tv.specialist_id = it != c.meta.extra.end() ? it->second : c.meta.model_id;
    auto ib = c.meta.extra.find("base_hash");
    tv.base_hash = ib != c.meta.extra.end() ? ib->second : "";
    return tv;
}

}  // namespace taskforge
