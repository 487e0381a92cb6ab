#pragma once

#include <string>
#include <vector>

#include "taskforge/tensor_map.hpp"

namespace taskforge {

struct GeometryReport {
    std::vector<std::string> vector_ids;
    std::vector<std::vector<double>> cosine;          // symmetric, unit diagonal
    std::vector<std::vector<double>> sign_agreement;  // symmetric, in [0,1]
    std::vector<double> l2_norms;
    std::vector<double> mean_abs;
    std::vector<double> sparsity;  // fraction |tau| < threshold
    double threshold = 1e-3;
};

struct LayerReport {
    std::vector<std::string> layer_labels;
    std::vector<std::vector<double>> per_layer_norms;  // [vector][layer]
    std::vector<double> per_layer_mean_cosine;         // mean over unordered pairs
};

struct PcaReport {
    std::vector<std::string> point_ids;
    std::vector<std::vector<double>> coordinates;  // [point][component]
    std::vector<double> explained_variance_ratio;  // nonincreasing
    int effective_rank = 0;
};

/// <a,b> / (||a|| ||b||) over the flattened concatenation.
double cosine_similarity(const TensorMap& a, const TensorMap& b);

/// Fraction of coordinates with equal sign; sign(0) = 0, so a 0-vs-0 pair
/// counts as agreeing (keeps sigma(x, x) = 1 for sparse vectors).
double sign_agreement(const TensorMap& a, const TensorMap& b);

struct SummaryStats {
    double l2 = 0.0;
    double mean_abs = 0.0;
    double sparsity = 0.0;
};
SummaryStats summary_stats(const TensorMap& tv, double threshold = 1e-3);

struct DisplacementCheck {
    double actual = 0.0;     // ||mean(tau) - tau_i||^2
    double predicted = 0.0;  // orthogonality prediction from the norms
};
DisplacementCheck displacement_check(const std::vector<const TensorMap*>& tvs, size_t i);

/// Full pairwise report over a set of vectors with matching manifests.
GeometryReport geometry_report(const std::vector<const TensorMap*>& tvs,
                               const std::vector<std::string>& ids, double threshold = 1e-3);

/// Groups tensors by the first capture of `layer_pattern` (ECMAScript
/// regex applied to tensor names); unmatched names fall under "other".
LayerReport per_layer_report(const std::vector<const TensorMap*>& tvs,
                             const std::string& layer_pattern = R"(\.layers\.(\d+)\.)");

/// PCA of K points via the K x K Gram matrix of centered points; feasible
/// for d far larger than K.
PcaReport checkpoint_pca(const std::vector<const TensorMap*>& points,
                         const std::vector<std::string>& ids, int n_components);

}  // namespace taskforge
