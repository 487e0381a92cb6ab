#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace taskforge {

struct PairedSeries {
    std::vector<std::string> labels;
    std::vector<double> x;
    std::vector<double> y;
};

/// Midranks (average ranks for ties), 1-based.
std::vector<double> midranks(const std::vector<double>& values);

/// Spearman rank correlation: Pearson correlation of midrank-transformed
/// series. Throws on constant input (undefined).
double spearman(const PairedSeries& series);

struct PermutationResult {
    double rho = 0.0;
    double p_two_sided = 1.0;
    int64_t n_permutations = 0;
    bool exhaustive = false;
};

/// Two-sided permutation test of Spearman rho: y is permuted, x fixed.
/// p uses the add-one estimator (1 + hits) / (1 + n_perm). When
/// `exhaustive` and n is small enough that n! <= n_perm, every permutation
/// is enumerated once and p = hits / n!.
PermutationResult permutation_test(const PairedSeries& series, int64_t n_perm = 100000,
                                   uint64_t seed = 42, bool exhaustive = false);

struct BootstrapCi {
    double delta = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Paired bootstrap percentile CI for mean(a) - mean(b); resamples example
/// indices jointly with replacement.
BootstrapCi paired_bootstrap_ci(const std::vector<bool>& a, const std::vector<bool>& b,
                                int64_t n_boot = 10000, double level = 0.95,
                                uint64_t seed = 42);

}  // namespace taskforge
