#include "taskforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace taskforge {

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    size_t n = a.size();
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double num = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) {
        throw std::invalid_argument("correlation undefined for constant series");
    }
    return num / std::sqrt(va * vb);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    double pos = q * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - lo;
    return (1.0 - frac) * sorted[lo] + frac * sorted[hi];
}

int64_t factorial_capped(size_t n, int64_t cap) {
    int64_t f = 1;
    for (size_t i = 2; i <= n; ++i) {
        if (f > cap / static_cast<int64_t>(i)) return cap + 1;
        f *= static_cast<int64_t>(i);
    }
    return f;
}

}  // namespace

std::vector<double> midranks(const std::vector<double>& values) {
    size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(const PairedSeries& series) {
    if (series.x.size() != series.y.size()) {
        throw std::invalid_argument("spearman: series lengths differ");
    }
    if (series.x.size() < 2) throw std::invalid_argument("spearman: need at least 2 points");
    return pearson(midranks(series.x), midranks(series.y));
}

PermutationResult permutation_test(const PairedSeries& series, int64_t n_perm, uint64_t seed,
                                   bool exhaustive) {
    if (series.x.size() < 3) {
        throw std::invalid_argument("permutation_test: need at least 3 points");
    }
    auto rx = midranks(series.x);
    auto ry = midranks(series.y);

    PermutationResult res;
    res.rho = pearson(rx, ry);
    double obs = std::abs(res.rho);
    // rounding guard so permutations achieving |rho_obs| exactly count as hits
    double cutoff = obs - 1e-12;

    size_t n = series.x.size();
    if (exhaustive && factorial_capped(n, n_perm) <= n_perm) {
        std::vector<double> perm = ry;
        std::sort(perm.begin(), perm.end());
        int64_t hits = 0, total = 0;
        do {
            ++total;
            if (std::abs(pearson(rx, perm)) >= cutoff) ++hits;
        } while (std::next_permutation(perm.begin(), perm.end()));
        res.n_permutations = total;
        res.exhaustive = true;
        res.p_two_sided = static_cast<double>(hits) / static_cast<double>(total);
        return res;
    }

    std::mt19937_64 rng(seed);
    std::vector<double> perm = ry;
    int64_t hits = 0;
    for (int64_t t = 0; t < n_perm; ++t) {
        for (size_t i = n - 1; i > 0; --i) {
            size_t j = std::uniform_int_distribution<size_t>(0, i)(rng);
            std::swap(perm[i], perm[j]);
        }
        if (std::abs(pearson(rx, perm)) >= cutoff) ++hits;
    }
    res.n_permutations = n_perm;
    res.p_two_sided = static_cast<double>(1 + hits) / static_cast<double>(1 + n_perm);
    return res;
}

BootstrapCi paired_bootstrap_ci(const std::vector<bool>& a, const std::vector<bool>& b,
                                int64_t n_boot, double level, uint64_t seed) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("paired_bootstrap_ci: vectors must be paired");
    }
    if (a.empty()) throw std::invalid_argument("paired_bootstrap_ci: empty input");

    size_t n = a.size();
    auto mean_diff = [&](const std::vector<size_t>& idx) {
        int64_t diff = 0;
        for (size_t i : idx) diff += static_cast<int>(a[i]) - static_cast<int>(b[i]);
        return static_cast<double>(diff) / static_cast<double>(idx.size());
    };

    BootstrapCi out;
    {
        int64_t diff = 0;
        for (size_t i = 0; i < n; ++i) diff += static_cast<int>(a[i]) - static_cast<int>(b[i]);
        out.delta = static_cast<double>(diff) / static_cast<double>(n);
    }

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    std::vector<double> deltas(static_cast<size_t>(n_boot));
    std::vector<size_t> idx(n);
    for (int64_t t = 0; t < n_boot; ++t) {
        for (size_t i = 0; i < n; ++i) idx[i] = pick(rng);
        deltas[static_cast<size_t>(t)] = mean_diff(idx);
    }
    std::sort(deltas.begin(), deltas.end());
    double tail = (1.0 - level) / 2.0;
    out.lo = quantile_sorted(deltas, tail);
    out.hi = quantile_sorted(deltas, 1.0 - tail);
    return out;
}

}  // namespace taskforge
