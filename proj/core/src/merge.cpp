#include "taskforge/merge.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "taskforge/rng.hpp"

namespace taskforge {

namespace {

using Clock = std::chrono::steady_clock;

struct Timer {
    Clock::time_point t0 = Clock::now();
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }
};

void init_report(MergeReport* rep, MergeStrategy strategy,
                 const std::vector<const TaskVector*>& tvs) {
    if (!rep) return;
    *rep = MergeReport{};
    rep->strategy = to_string(strategy);
    for (const auto* tv : tvs) rep->vector_ids.push_back(tv->specialist_id);
    rep->retained_fraction.assign(tvs.size(), 1.0);
}

uint64_t stream_key(uint64_t base_seed, SeedPolicy policy, const TaskVector& tv,
                    size_t vector_index, const std::string& tensor_name) {
    if (policy == SeedPolicy::ByName) {
        return derive_stream_key(base_seed, tv.specialist_id, tensor_name);
    }
    return derive_stream_key(base_seed + vector_index, "", tensor_name);
}

/// DARE sparsification of one vector: drop with probability p, rescale
/// survivors by 1/(1-p). Counter-based per-element randomness.
TensorMap dare_sparsify(const TaskVector& tv, size_t vector_index, double p,
                        uint64_t base_seed, SeedPolicy policy) {
    TensorMap out;
    double rescale = 1.0 / (1.0 - p);
    for (const auto& [name, t] : tv.delta.entries()) {
        CounterRng rng(stream_key(base_seed, policy, tv, vector_index, name));
        Tensor r;
        r.shape = t.shape;
        r.data.resize(t.data.size());
        for (size_t i = 0; i < t.data.size(); ++i) {
            r.data[i] = rng.uniform(i) < p
                            ? 0.0f
                            : static_cast<float>(static_cast<double>(t.data[i]) * rescale);
        }
        out.set(name, std::move(r));
    }
    return out;
}

/// DELLA sparsification: p_i = (1 - |d_i|/max|d|) * p_target, per-element
/// rescale 1/(1-p_i). max|d| scope is per tensor unless global_max.
TensorMap della_sparsify(const TaskVector& tv, size_t vector_index, double p_target,
                         uint64_t base_seed, SeedPolicy policy, bool global_max) {
    double vec_max = 0.0;
    if (global_max) {
        for (const auto& [_, t] : tv.delta.entries()) {
            for (float v : t.data) vec_max = std::max(vec_max, std::abs(static_cast<double>(v)));
        }
    }
    TensorMap out;
    for (const auto& [name, t] : tv.delta.entries()) {
        double mx = vec_max;
        if (!global_max) {
            mx = 0.0;
            for (float v : t.data) mx = std::max(mx, std::abs(static_cast<double>(v)));
        }
        CounterRng rng(stream_key(base_seed, policy, tv, vector_index, name));
        Tensor r;
        r.shape = t.shape;
        r.data.resize(t.data.size());
        for (size_t i = 0; i < t.data.size(); ++i) {
            double v = t.data[i];
            double p_i = mx > 0.0 ? (1.0 - std::abs(v) / mx) * p_target : 0.0;
            if (rng.uniform(i) < p_i) {
                r.data[i] = 0.0f;
            } else {
                r.data[i] = static_cast<float>(v / (1.0 - p_i));
            }
        }
        out.set(name, std::move(r));
    }
    return out;
}

/// Zero the floor(k * d) smallest-|value| elements of one vector. Ties at
/// the threshold magnitude are broken in canonical (name, flat-index)
/// order. Scope is the full flattened vector, or each tensor when
/// per_tensor is set.
void trim_in_place(TensorMap& m, double k, bool per_tensor) {
    auto trim_span = [&](std::vector<float*>& elems) {
        size_t d = elems.size();
        auto count = static_cast<size_t>(std::floor(k * static_cast<double>(d) + 1e-9));
        if (count == 0) return;
        std::vector<float> mags(d);
        for (size_t i = 0; i < d; ++i) mags[i] = std::abs(*elems[i]);
        std::vector<float> sorted = mags;
        std::nth_element(sorted.begin(), sorted.begin() + (count - 1), sorted.end());
        float thr = sorted[count - 1];
        size_t below = 0;
        for (float v : mags) {
            if (v < thr) ++below;
        }
        size_t at_budget = count - below;
        for (size_t i = 0; i < d; ++i) {
            if (mags[i] < thr) {
                *elems[i] = 0.0f;
            } else if (mags[i] == thr && at_budget > 0) {
                *elems[i] = 0.0f;
                --at_budget;
            }
        }
    };

    if (per_tensor) {
        for (auto& [_, t] : m.entries()) {
            std::vector<float*> elems;
            elems.reserve(t.data.size());
            for (auto& v : t.data) elems.push_back(&v);
            trim_span(elems);
        }
    } else {
        std::vector<float*> elems;
        elems.reserve(static_cast<size_t>(m.total_elements()));
        for (auto& [_, t] : m.entries()) {
            for (auto& v : t.data) elems.push_back(&v);
        }
        trim_span(elems);
    }
}

double nonzero_fraction(const TensorMap& m) {
    int64_t nz = 0, d = 0;
    for (const auto& [_, t] : m.entries()) {
        d += static_cast<int64_t>(t.data.size());
        for (float v : t.data) {
            if (v != 0.0f) ++nz;
        }
    }
    return d == 0 ? 0.0 : static_cast<double>(nz) / static_cast<double>(d);
}

/// TIES steps 2-3 over already-sparsified vectors. Per element: elect the
/// majority sign among nonzero values (tie -> sign of the sum; still zero
/// -> output 0), then average the non-conflicting values. Zeros abstain
/// from the vote but stay in the denominator, so on disjoint supports the
/// result equals the plain mean.
TensorMap elect_and_merge(const std::vector<TensorMap>& sparsified, MergeReport* rep) {
    const TensorMap& first = sparsified[0];
    size_t n = sparsified.size();
    TensorMap out;
    for (const auto& [name, t0] : first.entries()) {
        std::vector<const float*> src(n);
        for (size_t v = 0; v < n; ++v) src[v] = sparsified[v].at(name).data.data();
        Tensor r;
        r.shape = t0.shape;
        r.data.resize(t0.data.size());
        for (size_t i = 0; i < t0.data.size(); ++i) {
            int pos = 0, neg = 0;
            double sum = 0.0;
            for (size_t v = 0; v < n; ++v) {
                float x = src[v][i];
                sum += x;
                if (x > 0.0f) ++pos;
                else if (x < 0.0f) ++neg;
            }
            if (rep && pos > 0 && neg > 0) ++rep->sign_conflicts;
            int elected;
            if (pos > neg) elected = 1;
            else if (neg > pos) elected = -1;
            else elected = sum > 0.0 ? 1 : (sum < 0.0 ? -1 : 0);
            if (elected == 0) {
                r.data[i] = 0.0f;
                if (rep) ++rep->elected_zero;
                continue;
            }
            if (rep) ++(elected > 0 ? rep->elected_positive : rep->elected_negative);
            double acc = 0.0;
            size_t agreeing = 0;
            for (size_t v = 0; v < n; ++v) {
                float x = src[v][i];
                if ((x > 0.0f) == (elected > 0) || x == 0.0f) {
                    acc += x;
                    ++agreeing;
                }
            }
            r.data[i] = static_cast<float>(acc / static_cast<double>(agreeing));
        }
        out.set(name, std::move(r));
    }
    return out;
}

TensorMap mean_of(const std::vector<TensorMap>& maps) {
    size_t n = maps.size();
    TensorMap out;
    for (const auto& [name, t0] : maps[0].entries()) {
        std::vector<const float*> src(n);
        for (size_t v = 0; v < n; ++v) src[v] = maps[v].at(name).data.data();
        Tensor r;
        r.shape = t0.shape;
        r.data.resize(t0.data.size());
        for (size_t i = 0; i < t0.data.size(); ++i) {
            double acc = 0.0;
            for (size_t v = 0; v < n; ++v) acc += static_cast<double>(src[v][i]);
            r.data[i] = static_cast<float>(acc / static_cast<double>(n));
        }
        out.set(name, std::move(r));
    }
    return out;
}

/// Canonical input order: sorted by specialist_id. Makes every merge's
/// accumulation order (and therefore its bits) independent of how the
/// caller happened to order the vectors.
std::vector<const TaskVector*> canonical_order(std::vector<const TaskVector*> tvs) {
    std::stable_sort(tvs.begin(), tvs.end(), [](const TaskVector* a, const TaskVector* b) {
        return a->specialist_id < b->specialist_id;
    });
    return tvs;
}

}  // namespace

std::string to_string(MergeStrategy s) {
    switch (s) {
        case MergeStrategy::SimpleAverage: return "simple_average";
        case MergeStrategy::TaskArithmetic: return "task_arithmetic";
        case MergeStrategy::Dare: return "dare";
        case MergeStrategy::Ties: return "ties";
        case MergeStrategy::DareTies: return "dare_ties";
        case MergeStrategy::Della: return "della";
        case MergeStrategy::NormAdjusted: return "norm_adjusted";
        case MergeStrategy::Negation: return "negation";
    }
    return "unknown";
}

MergeStrategy strategy_from_string(const std::string& s) {
    if (s == "simple_average" || s == "avg" || s == "average") {
        return MergeStrategy::SimpleAverage;
    }
    if (s == "task_arithmetic" || s == "ta" || s == "arithmetic") {
        return MergeStrategy::TaskArithmetic;
    }
    if (s == "dare") return MergeStrategy::Dare;
    if (s == "ties") return MergeStrategy::Ties;
    if (s == "dare_ties" || s == "dare-ties") return MergeStrategy::DareTies;
    if (s == "della") return MergeStrategy::Della;
    if (s == "norm_adjusted" || s == "norm-adjusted") return MergeStrategy::NormAdjusted;
    if (s == "negation") return MergeStrategy::Negation;
    throw std::invalid_argument("unknown merge strategy: " + s);
}

TensorMap merge_simple_average(const std::vector<const TaskVector*>& tvs, MergeReport* rep) {
    Timer timer;
    check_combinable(tvs);
    auto ordered = canonical_order(tvs);
    init_report(rep, MergeStrategy::SimpleAverage, ordered);
    std::vector<double> coeffs(ordered.size(), 1.0 / static_cast<double>(ordered.size()));
    TensorMap out = linear_combine(ordered, coeffs);
    if (rep) rep->wall_seconds = timer.seconds();
    return out;
}

TensorMap merge_task_arithmetic(const std::vector<const TaskVector*>& tvs, double lambda,
                                MergeReport* rep) {
    Timer timer;
    check_combinable(tvs);
    auto ordered = canonical_order(tvs);
    init_report(rep, MergeStrategy::TaskArithmetic, ordered);
    if (rep) rep->spec.lambda = lambda;
    std::vector<double> coeffs(ordered.size(), lambda / static_cast<double>(ordered.size()));
    TensorMap out = linear_combine(ordered, coeffs);
    if (rep) rep->wall_seconds = timer.seconds();
    return out;
}

TensorMap merge_dare(const std::vector<const TaskVector*>& tvs, double drop_rate,
                     uint64_t base_seed, SeedPolicy policy, MergeReport* rep) {
    Timer timer;
    if (drop_rate < 0.0 || drop_rate >= 1.0) {
        throw std::invalid_argument("dare: drop rate must be in [0, 1)");
    }
    check_combinable(tvs);
    auto ordered = canonical_order(tvs);
    init_report(rep, MergeStrategy::Dare, ordered);
    if (rep) {
        rep->spec.drop_rate = drop_rate;
        rep->spec.base_seed = base_seed;
        rep->spec.seed_policy = policy;
    }
    std::vector<TensorMap> sparsified;
    sparsified.reserve(ordered.size());
    for (size_t v = 0; v < ordered.size(); ++v) {
        sparsified.push_back(dare_sparsify(*ordered[v], v, drop_rate, base_seed, policy));
        if (rep) rep->retained_fraction[v] = nonzero_fraction(sparsified.back());
    }
    TensorMap out = mean_of(sparsified);
    if (rep) rep->wall_seconds = timer.seconds();
    return out;
}

TensorMap merge_ties(const std::vector<const TaskVector*>& tvs, double trim_fraction,
                     bool per_tensor_trim, MergeReport* rep) {
    Timer timer;
    if (trim_fraction < 0.0 || trim_fraction >= 1.0) {
        throw std::invalid_argument("ties: trim fraction must be in [0, 1)");
    }
    check_combinable(tvs);
    auto ordered = canonical_order(tvs);
    init_report(rep, MergeStrategy::Ties, ordered);
    if (rep) {
        rep->spec.trim_fraction = trim_fraction;
        rep->spec.trim_per_tensor = per_tensor_trim;
    }
    std::vector<TensorMap> trimmed;
    trimmed.reserve(ordered.size());
    for (size_t v = 0; v < ordered.size(); ++v) {
        trimmed.push_back(ordered[v]->delta);
        trim_in_place(trimmed.back(), trim_fraction, per_tensor_trim);
        if (rep) rep->retained_fraction[v] = nonzero_fraction(trimmed.back());
    }
    TensorMap out = elect_and_merge(trimmed, rep);
    if (rep) rep->wall_seconds = timer.seconds();
    return out;
}

TensorMap merge_dare_ties(const std::vector<const TaskVector*>& tvs, double drop_rate,
                          double trim_fraction, uint64_t base_seed, SeedPolicy policy,
                          MergeReport* rep) {
    Timer timer;
    if (drop_rate < 0.0 || drop_rate >= 1.0) {
        throw std::invalid_argument("dare_ties: drop rate must be in [0, 1)");
    }
    if (trim_fraction < 0.0 || trim_fraction >= 1.0) {
        throw std::invalid_argument("dare_ties: trim fraction must be in [0, 1)");
    }
    check_combinable(tvs);
    auto ordered = canonical_order(tvs);
    init_report(rep, MergeStrategy::DareTies, ordered);
    if (rep) {
        rep->spec.drop_rate = drop_rate;
        rep->spec.trim_fraction = trim_fraction;
        rep->spec.base_seed = base_seed;
        rep->spec.seed_policy = policy;
    }
    std::vector<TensorMap> sparsified;
    sparsified.reserve(ordered.size());
    for (size_t v = 0; v < ordered.size(); ++v) {
        sparsified.push_back(dare_sparsify(*ordered[v], v, drop_rate, base_seed, policy));
        trim_in_place(sparsified.back(), trim_fraction, false);
        if (rep) rep->retained_fraction[v] = nonzero_fraction(sparsified.back());
    }
    TensorMap out = elect_and_merge(sparsified, rep);
    if (rep) rep->wall_seconds = timer.seconds();
    return out;
}

TensorMap merge_della(const std::vector<const TaskVector*>& tvs, double p_target,
                      double trim_fraction, uint64_t base_seed, SeedPolicy policy,
                      bool global_max, MergeReport* rep) {
    Timer timer;
    if (p_target < 0.0 || p_target >= 1.0) {
        throw std::invalid_argument("della: p_target must be in [0, 1)");
    }
    if (trim_fraction < 0.0 || trim_fraction >= 1.0) {
        throw std::invalid_argument("della: trim fraction must be in [0, 1)");
    }
    check_combinable(tvs);
    auto ordered = canonical_order(tvs);
    init_report(rep, MergeStrategy::Della, ordered);
    if (rep) {
        rep->spec.drop_rate = p_target;
        rep->spec.trim_fraction = trim_fraction;
        rep->spec.base_seed = base_seed;
        rep->spec.seed_policy = policy;
        rep->spec.della_global_max = global_max;
    }
    std::vector<TensorMap> sparsified;
    sparsified.reserve(ordered.size());
    for (size_t v = 0; v < ordered.size(); ++v) {
        sparsified.push_back(
            della_sparsify(*ordered[v], v, p_target, base_seed, policy, global_max));
        trim_in_place(sparsified.back(), trim_fraction, false);
        if (rep) rep->retained_fraction[v] = nonzero_fraction(sparsified.back());
    }
    TensorMap out = elect_and_merge(sparsified, rep);
    if (rep) rep->wall_seconds = timer.seconds();
    return out;
}

TensorMap merge_norm_adjusted(const std::vector<const TaskVector*>& tvs, double gamma,
                              double lambda, MergeReport* rep) {
    Timer timer;
    check_combinable(tvs);
    auto ordered = canonical_order(tvs);
    init_report(rep, MergeStrategy::NormAdjusted, ordered);
    if (rep) {
        rep->spec.gamma = gamma;
        rep->spec.lambda = lambda;
        rep->weights_renormalized = true;
    }
    std::vector<double> weights(ordered.size());
    double total = 0.0;
    for (size_t v = 0; v < ordered.size(); ++v) {
        double norm = l2_norm(ordered[v]->delta);
        if (norm == 0.0 && gamma > 0.0) {
            throw std::runtime_error("norm_adjusted: zero-norm task vector '" +
                                     ordered[v]->specialist_id + "'");
        }
        weights[v] = gamma == 0.0 ? 1.0 : std::pow(norm, -gamma);
        total += weights[v];
    }
    for (auto& w : weights) w = lambda * w / total;
    TensorMap out = linear_combine(ordered, weights);
    if (rep) rep->wall_seconds = timer.seconds();
    return out;
}

TensorMap merge(const std::vector<const TaskVector*>& tvs, const MergeSpec& spec,
                MergeReport* rep) {
    switch (spec.strategy) {
        case MergeStrategy::SimpleAverage:
            return merge_simple_average(tvs, rep);
        case MergeStrategy::TaskArithmetic:
            return merge_task_arithmetic(tvs, spec.lambda, rep);
        case MergeStrategy::Dare:
            return merge_dare(tvs, spec.drop_rate, spec.base_seed, spec.seed_policy, rep);
        case MergeStrategy::Ties:
            return merge_ties(tvs, spec.trim_fraction, spec.trim_per_tensor, rep);
        case MergeStrategy::DareTies:
            return merge_dare_ties(tvs, spec.drop_rate, spec.trim_fraction, spec.base_seed,
                                   spec.seed_policy, rep);
        case MergeStrategy::Della:
            return merge_della(tvs, spec.drop_rate, spec.trim_fraction, spec.base_seed,
                               spec.seed_policy, spec.della_global_max, rep);
        case MergeStrategy::NormAdjusted:
            return merge_norm_adjusted(tvs, spec.gamma, spec.lambda, rep);
        case MergeStrategy::Negation:
            throw std::invalid_argument("negation requires negate_domain with a source checkpoint");
    }
    throw std::invalid_argument("unknown strategy");
}

std::vector<Checkpoint> negate_domain(const Checkpoint& source, const TaskVector& tau_focal,
                                      const std::vector<double>& beta_grid) {
    std::vector<Checkpoint> out;
    out.reserve(beta_grid.size());
    for (double beta : beta_grid) {
        out.push_back(apply(source, tau_focal.delta, -beta));
    }
    return out;
}

TaskVector random_control_vector(const TaskVector& templ, uint64_t seed) {
    TaskVector out;
    out.specialist_id = templ.specialist_id + "-control";
    out.base_hash = templ.base_hash;
    for (const auto& [name, t] : templ.delta.entries()) {
        CounterRng rng(derive_stream_key(seed, "control", name));
        Tensor r;
        r.shape = t.shape;
        r.data.resize(t.data.size());
        double sq = 0.0;
        std::vector<double> draws(t.data.size());
        for (size_t i = 0; i < t.data.size(); ++i) {
            draws[i] = rng.gaussian(i);
            sq += draws[i] * draws[i];
        }
        double target = 0.0;
        for (float v : t.data) target += static_cast<double>(v) * v;
        target = std::sqrt(target);
        double scale = sq > 0.0 ? target / std::sqrt(sq) : 0.0;
        for (size_t i = 0; i < t.data.size(); ++i) {
            r.data[i] = static_cast<float>(draws[i] * scale);
        }
        out.delta.set(name, std::move(r));
    }
    return out;
}

}  // namespace taskforge
