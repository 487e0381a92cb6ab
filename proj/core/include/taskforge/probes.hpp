#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "taskforge/stats.hpp"

namespace taskforge {

/// N x D feature matrix with integer labels in [0, C).
struct FeatureSet {
    Eigen::MatrixXf features;   // rows: examples
    std::vector<int> labels;
    std::string split_tag;

    int64_t size() const { return features.rows(); }
    int64_t dim() const { return features.cols(); }
    int num_classes() const;
    void validate() const;
};

struct ProbeConfig {
    double lr = 1e-3;
    int batch_size = 256;
    int epochs = 10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 42;
    int num_classes = 0;  // 0: infer from labels
};

struct ProbeModel {
    Eigen::MatrixXd weights;  // C x D
    Eigen::VectorXd bias;     // C
    ProbeConfig config;
    std::vector<double> epoch_losses;  // mean training loss per epoch
};

struct EvalResult {
    double accuracy = 0.0;
    std::vector<bool> correctness;
};

/// Multinomial logistic regression trained with adaptive-moment gradient
/// descent; zero-initialized, deterministic shuffling per seed.
ProbeModel train_linear_probe(const FeatureSet& train, const ProbeConfig& config = {});

/// Softmax cross-entropy loss and gradient on one batch; exposed so tests
/// can finite-difference the gradient.
double probe_loss_and_grad(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                           const Eigen::MatrixXd& x, const std::vector<int>& y,
                           Eigen::MatrixXd* grad_w = nullptr,
                           Eigen::VectorXd* grad_b = nullptr);

/// Argmax prediction per row; ties broken by lowest class index.
EvalResult evaluate(const ProbeModel& model, const FeatureSet& test);

/// k = 1 nearest neighbor by cosine similarity; ties broken by lowest
/// train index. Zero-norm rows are an error in strict mode, otherwise
/// guarded with a small epsilon.
EvalResult knn_classify(const FeatureSet& train, const FeatureSet& test, int k = 1,
                        bool strict = true);

struct CompositionGap {
    double gap = 0.0;
    BootstrapCi ci;
};

/// Accuracy(joint) - Accuracy(merged) with a paired bootstrap CI.
CompositionGap composition_gap(const std::vector<bool>& joint, const std::vector<bool>& merged,
                               int64_t n_boot = 10000, uint64_t seed = 42);

/// Gaussian class clusters with controllable separation, for tests.
FeatureSet synthetic_clusters(int n_per_class, int n_classes, int dim, double separation,
                              uint64_t seed);

/// Binary I/O: int64 N, int64 D, N*D float32 payload, N int32 labels.
void save_feature_set(const FeatureSet& fs, const std::string& path);
FeatureSet load_feature_set(const std::string& path);

/// CSV with label in the last column.
FeatureSet load_feature_csv(const std::string& path);

}  // namespace taskforge
