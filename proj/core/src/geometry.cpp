#include "taskforge/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <stdexcept>

namespace taskforge {

double cosine_similarity(const TensorMap& a, const TensorMap& b) {
    double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine_similarity: zero vector");
    }
    return dot(a, b) / (na * nb);
}

double sign_agreement(const TensorMap& a, const TensorMap& b) {
    if (!a.same_manifest_and_shapes(b)) {
        throw std::invalid_argument("sign_agreement: manifests differ");
    }
    int64_t agree = 0, total = 0;
    auto ib = b.entries().begin();
    for (const auto& [_, ta] : a.entries()) {
        const auto& tb = ib->second;
        for (size_t i = 0; i < ta.data.size(); ++i) {
            int sa = ta.data[i] > 0.0f ? 1 : (ta.data[i] < 0.0f ? -1 : 0);
            int sb = tb.data[i] > 0.0f ? 1 : (tb.data[i] < 0.0f ? -1 : 0);
            if (sa == sb) ++agree;
            ++total;
        }
        ++ib;
    }
    if (total == 0) return 1.0;
    return static_cast<double>(agree) / static_cast<double>(total);
}

SummaryStats summary_stats(const TensorMap& tv, double threshold) {
    SummaryStats s;
    double sq = 0.0, abs_sum = 0.0;
    int64_t below = 0, total = 0;
    for (const auto& [_, t] : tv.entries()) {
        for (float v : t.data) {
            double x = v;
            sq += x * x;
            abs_sum += std::abs(x);
            if (std::abs(x) < threshold) ++below;
            ++total;
        }
    }
    s.l2 = std::sqrt(sq);
    if (total > 0) {
        s.mean_abs = abs_sum / static_cast<double>(total);
        s.sparsity = static_cast<double>(below) / static_cast<double>(total);
    } else {
        s.sparsity = 1.0;
    }
    return s;
}

DisplacementCheck displacement_check(const std::vector<const TensorMap*>& tvs, size_t idx) {
    if (idx >= tvs.size()) throw std::out_of_range("displacement_check: index out of range");
    size_t n = tvs.size();
    DisplacementCheck out;
    if (n == 1) return out;

    double n_d = static_cast<double>(n);
    double norm_i_sq = 0.0, others_sq = 0.0;
    for (size_t j = 0; j < n; ++j) {
        double sq = l2_norm(*tvs[j]);
        sq *= sq;
        if (j == idx) norm_i_sq = sq;
        else others_sq += sq;
    }
    out.predicted = (n_d - 1.0) * (n_d - 1.0) / (n_d * n_d) * norm_i_sq +
                    others_sq / (n_d * n_d);

    // actual: ||mean(tau) - tau_i||^2, accumulated per element
    double acc = 0.0;
    const TensorMap& first = *tvs[0];
    for (const auto& [name, t0] : first.entries()) {
        std::vector<const float*> src(n);
        for (size_t v = 0; v < n; ++v) src[v] = tvs[v]->at(name).data.data();
        for (size_t i = 0; i < t0.data.size(); ++i) {
            double mean = 0.0;
            for (size_t v = 0; v < n; ++v) mean += static_cast<double>(src[v][i]);
            mean /= n_d;
            double diff = mean - static_cast<double>(src[idx][i]);
            acc += diff * diff;
        }
    }
    out.actual = acc;
    return out;
}

GeometryReport geometry_report(const std::vector<const TensorMap*>& tvs,
                               const std::vector<std::string>& ids, double threshold) {
    size_t n = tvs.size();
    GeometryReport rep;
    rep.vector_ids = ids;
    rep.threshold = threshold;
    rep.cosine.assign(n, std::vector<double>(n, 0.0));
    rep.sign_agreement.assign(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        auto s = summary_stats(*tvs[i], threshold);
        rep.l2_norms.push_back(s.l2);
        rep.mean_abs.push_back(s.mean_abs);
        rep.sparsity.push_back(s.sparsity);
    }
    for (size_t i = 0; i < n; ++i) {
        rep.cosine[i][i] = 1.0;
        rep.sign_agreement[i][i] = 1.0;
        for (size_t j = i + 1; j < n; ++j) {
            double c = cosine_similarity(*tvs[i], *tvs[j]);
            double s = sign_agreement(*tvs[i], *tvs[j]);
            rep.cosine[i][j] = rep.cosine[j][i] = c;
            rep.sign_agreement[i][j] = rep.sign_agreement[j][i] = s;
        }
    }
    return rep;
}

LayerReport per_layer_report(const std::vector<const TensorMap*>& tvs,
                             const std::string& layer_pattern) {
    std::regex re(layer_pattern);
    const TensorMap& first = *tvs[0];

    // label -> tensor names, in first-seen canonical order
    std::map<std::string, std::vector<std::string>> groups;
    std::vector<std::string> order;
    for (const auto& [name, _] : first.entries()) {
        std::smatch m;
        std::string label = "other";
        if (std::regex_search(name, m, re) && m.size() > 1) label = m[1].str();
        if (groups.find(label) == groups.end()) order.push_back(label);
        groups[label].push_back(name);
    }
    // numeric labels in numeric order, then the rest lexicographically
    std::sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
        bool na = !a.empty() && std::all_of(a.begin(), a.end(), ::isdigit);
        bool nb = !b.empty() && std::all_of(b.begin(), b.end(), ::isdigit);
        if (na && nb) return std::stoll(a) < std::stoll(b);
        if (na != nb) return na;
        return a < b;
    });

    LayerReport rep;
    rep.layer_labels = order;
    size_t n = tvs.size();
    rep.per_layer_norms.assign(n, std::vector<double>(order.size(), 0.0));
    rep.per_layer_mean_cosine.assign(order.size(), 0.0);

    for (size_t li = 0; li < order.size(); ++li) {
        const auto& names = groups[order[li]];
        std::vector<double> sq(n, 0.0);
        for (size_t v = 0; v < n; ++v) {
            for (const auto& name : names) {
                for (float x : tvs[v]->at(name).data) {
                    sq[v] += static_cast<double>(x) * x;
                }
            }
            rep.per_layer_norms[v][li] = std::sqrt(sq[v]);
        }
        double acc = 0.0;
        size_t pairs = 0;
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = i + 1; j < n; ++j) {
                ++pairs;
                if (sq[i] == 0.0 || sq[j] == 0.0) continue;  // cosine taken as 0
                double d = 0.0;
                for (const auto& name : names) {
                    const auto& ti = tvs[i]->at(name).data;
                    const auto& tj = tvs[j]->at(name).data;
                    for (size_t e = 0; e < ti.size(); ++e) {
                        d += static_cast<double>(ti[e]) * tj[e];
                    }
                }
                acc += d / (std::sqrt(sq[i]) * std::sqrt(sq[j]));
            }
        }
        rep.per_layer_mean_cosine[li] = pairs > 0 ? acc / static_cast<double>(pairs) : 0.0;
    }
    return rep;
}

PcaReport checkpoint_pca(const std::vector<const TensorMap*>& points,
                         const std::vector<std::string>& ids, int n_components) {
    size_t k = points.size();
    if (k < 2) throw std::invalid_argument("checkpoint_pca: need at least 2 points");
    if (n_components <= 0 || static_cast<size_t>(n_components) >= k) {
        throw std::invalid_argument("checkpoint_pca: n_components must be in [1, K)");
    }
    for (size_t i = 1; i < k; ++i) {
        if (!points[0]->same_manifest_and_shapes(*points[i])) {
            throw std::invalid_argument("checkpoint_pca: manifests differ");
        }
    }

    // Gram matrix of raw points, then double-center: G_c = H G H.
    Eigen::MatrixXd gram(k, k);
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i; j < k; ++j) {
            double d = dot(*points[i], *points[j]);
            gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
            gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
        }
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(k, k) -
                        Eigen::MatrixXd::Constant(k, k, 1.0 / static_cast<double>(k));
    Eigen::MatrixXd centered = h * gram * h;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("checkpoint_pca: eigendecomposition failed");
    }
    // ascending in Eigen; reverse to descending
    Eigen::VectorXd evals = solver.eigenvalues().reverse();
    Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

    double total = 0.0;
    for (Eigen::Index i = 0; i < evals.size(); ++i) total += std::max(0.0, evals(i));

    PcaReport rep;
    rep.point_ids = ids;
    double tol = 1e-12 * std::max(1.0, evals.size() > 0 ? std::abs(evals(0)) : 0.0);
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals(i) > tol) ++rep.effective_rank;
    }
    rep.coordinates.assign(k, std::vector<double>(static_cast<size_t>(n_components), 0.0));
    for (int c = 0; c < n_components; ++c) {
        double lam = std::max(0.0, evals(c));
        rep.explained_variance_ratio.push_back(total > 0.0 ? lam / total : 0.0);
        double scale = std::sqrt(lam);
        for (size_t p = 0; p < k; ++p) {
            rep.coordinates[p][static_cast<size_t>(c)] =
                scale * evecs(static_cast<Eigen::Index>(p), c);
        }
    }
    return rep;
}

}  // namespace taskforge
