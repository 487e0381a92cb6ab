#include "taskforge/probes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "taskforge/rng.hpp"

namespace taskforge {

int FeatureSet::num_classes() const {
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);
    return c;
}

void FeatureSet::validate() const {
    if (features.rows() < 1) throw std::invalid_argument("feature set is empty");
    if (static_cast<int64_t>(labels.size()) != features.rows()) {
        throw std::invalid_argument("label count does not match feature rows");
    }
    if (!features.allFinite()) throw std::invalid_argument("non-finite feature value");
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("negative label");
    }
}

double probe_loss_and_grad(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                           const Eigen::MatrixXd& x, const std::vector<int>& y,
                           Eigen::MatrixXd* grad_w, Eigen::VectorXd* grad_b) {
    Eigen::Index n = x.rows();
    Eigen::MatrixXd logits = x * weights.transpose();
    logits.rowwise() += bias.transpose();

    double loss = 0.0;
    Eigen::MatrixXd probs(n, weights.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = logits.row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
        double z = e.sum();
        probs.row(i) = (e / z).matrix();
        loss -= std::log(std::max(probs(i, y[static_cast<size_t>(i)]), 1e-300));
    }
    loss /= static_cast<double>(n);

    if (grad_w || grad_b) {
        Eigen::MatrixXd delta = probs;  // probs - onehot
        for (Eigen::Index i = 0; i < n; ++i) delta(i, y[static_cast<size_t>(i)]) -= 1.0;
        delta /= static_cast<double>(n);
        if (grad_w) *grad_w = delta.transpose() * x;
        if (grad_b) *grad_b = delta.colwise().sum().transpose();
    }
    return loss;
}

ProbeModel train_linear_probe(const FeatureSet& train, const ProbeConfig& config) {
    train.validate();
    int n_classes = config.num_classes > 0 ? config.num_classes : train.num_classes();
    for (int l : train.labels) {
        if (l >= n_classes) throw std::invalid_argument("label out of class range");
    }
    Eigen::Index n = train.features.rows();
    Eigen::Index d = train.features.cols();

    ProbeModel model;
    model.config = config;
    model.weights = Eigen::MatrixXd::Zero(n_classes, d);
    model.bias = Eigen::VectorXd::Zero(n_classes);

    Eigen::MatrixXd mw = Eigen::MatrixXd::Zero(n_classes, d);
    Eigen::MatrixXd vw = Eigen::MatrixXd::Zero(n_classes, d);
    Eigen::VectorXd mb = Eigen::VectorXd::Zero(n_classes);
    Eigen::VectorXd vb = Eigen::VectorXd::Zero(n_classes);

    Eigen::MatrixXd x = train.features.cast<double>();
    std::vector<size_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);

    int64_t step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int64_t batches = 0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            Eigen::Index bsz = std::min<Eigen::Index>(config.batch_size, n - start);
            Eigen::MatrixXd bx(bsz, d);
            std::vector<int> by(static_cast<size_t>(bsz));
            for (Eigen::Index i = 0; i < bsz; ++i) {
                size_t src = order[static_cast<size_t>(start + i)];
                bx.row(i) = x.row(static_cast<Eigen::Index>(src));
                by[static_cast<size_t>(i)] = train.labels[src];
            }
            Eigen::MatrixXd gw;
            Eigen::VectorXd gb;
            double loss = probe_loss_and_grad(model.weights, model.bias, bx, by, &gw, &gb);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("probe training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch));
            }
            epoch_loss += loss;
            ++batches;
            ++step;

            double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            mw = config.beta1 * mw + (1.0 - config.beta1) * gw;
            vw = config.beta2 * vw.array().matrix() +
                 (1.0 - config.beta2) * gw.array().square().matrix();
            mb = config.beta1 * mb + (1.0 - config.beta1) * gb;
            vb = config.beta2 * vb.array().matrix() +
                 (1.0 - config.beta2) * gb.array().square().matrix();
            model.weights.array() -=
                config.lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + config.eps);
            model.bias.array() -=
                config.lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + config.eps);
        }
        model.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    }
    return model;
}

EvalResult evaluate(const ProbeModel& model, const FeatureSet& test) {
    test.validate();
    if (test.features.cols() != model.weights.cols()) {
        throw std::invalid_argument("evaluate: feature dimension mismatch");
    }
    Eigen::MatrixXd logits = test.features.cast<double>() * model.weights.transpose();
    logits.rowwise() += model.bias.transpose();

    EvalResult res;
    res.correctness.resize(static_cast<size_t>(test.features.rows()));
    int64_t correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
        }
        bool ok = best == test.labels[static_cast<size_t>(i)];
        res.correctness[static_cast<size_t>(i)] = ok;
        if (ok) ++correct;
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(logits.rows());
    return res;
}

EvalResult knn_classify(const FeatureSet& train, const FeatureSet& test, int k, bool strict) {
    train.validate();
    test.validate();
    if (k != 1) throw std::invalid_argument("knn_classify: only k = 1 is supported");
    if (train.features.cols() != test.features.cols()) {
        throw std::invalid_argument("knn_classify: feature dimension mismatch");
    }

    auto norms = [&](const Eigen::MatrixXf& m, const char* which) {
        Eigen::VectorXd out(m.rows());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            double nrm = m.row(i).cast<double>().norm();
            if (nrm == 0.0) {
                if (strict) {
                    throw std::runtime_error(std::string("zero-norm feature row in ") + which);
                }
                nrm = 1e-12;
            }
            out(i) = nrm;
        }
        return out;
    };
    Eigen::VectorXd tn = norms(train.features, "train set");
    Eigen::VectorXd qn = norms(test.features, "test set");

    EvalResult res;
    res.correctness.resize(static_cast<size_t>(test.features.rows()));
    int64_t correct = 0;
    for (Eigen::Index q = 0; q < test.features.rows(); ++q) {
        Eigen::VectorXd row = test.features.row(q).cast<double>();
        Eigen::Index best = 0;
        double best_cos = -2.0;
        for (Eigen::Index t = 0; t < train.features.rows(); ++t) {
            double c = row.dot(train.features.row(t).cast<double>()) / (qn(q) * tn(t));
            if (c > best_cos) {
                best_cos = c;
                best = t;
            }
        }
        bool ok = train.labels[static_cast<size_t>(best)] == test.labels[static_cast<size_t>(q)];
        res.correctness[static_cast<size_t>(q)] = ok;
        if (ok) ++correct;
    }
    res.accuracy = static_cast<double>(correct) / static_cast<double>(test.features.rows());
    return res;
}

CompositionGap composition_gap(const std::vector<bool>& joint, const std::vector<bool>& merged,
                               int64_t n_boot, uint64_t seed) {
    CompositionGap out;
    out.ci = paired_bootstrap_ci(joint, merged, n_boot, 0.95, seed);
    out.gap = out.ci.delta;
    return out;
}

FeatureSet synthetic_clusters(int n_per_class, int n_classes, int dim, double separation,
                              uint64_t seed) {
    FeatureSet fs;
    fs.features.resize(static_cast<Eigen::Index>(n_per_class) * n_classes, dim);
    fs.labels.reserve(static_cast<size_t>(n_per_class) * n_classes);
    Eigen::Index row = 0;
    for (int c = 0; c < n_classes; ++c) {
        // deterministic axis-aligned centers with guaranteed pairwise
        // distance >= separation; the seed only drives the noise
        std::vector<double> center(static_cast<size_t>(dim), 0.0);
        center[static_cast<size_t>(c % dim)] = separation * (1.0 + c / dim);
        CounterRng rng(derive_stream_key(seed, "cluster", std::to_string(c)));
        for (int i = 0; i < n_per_class; ++i) {
            for (int d = 0; d < dim; ++d) {
                uint64_t idx = static_cast<uint64_t>(i) * static_cast<uint64_t>(dim) +
                               static_cast<uint64_t>(d);
                fs.features(row, d) =
                    static_cast<float>(center[static_cast<size_t>(d)] + rng.gaussian(idx));
            }
            fs.labels.push_back(c);
            ++row;
        }
    }
    fs.split_tag = "train";
    return fs;
}

void save_feature_set(const FeatureSet& fs, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    int64_t n = fs.features.rows(), d = fs.features.cols();
    f.write(reinterpret_cast<char*>(&n), 8);
    f.write(reinterpret_cast<char*>(&d), 8);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            float v = fs.features(i, j);
            f.write(reinterpret_cast<char*>(&v), 4);
        }
    }
    for (int l : fs.labels) {
        int32_t v = l;
        f.write(reinterpret_cast<char*>(&v), 4);
    }
}

FeatureSet load_feature_set(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open feature set: " + path);
    int64_t n = 0, d = 0;
    f.read(reinterpret_cast<char*>(&n), 8);
    f.read(reinterpret_cast<char*>(&d), 8);
    if (!f || n < 1 || d < 1) throw std::runtime_error("malformed feature set header");
    FeatureSet fs;
    fs.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            float v;
            f.read(reinterpret_cast<char*>(&v), 4);
            fs.features(i, j) = v;
        }
    }
    fs.labels.resize(static_cast<size_t>(n));
    for (auto& l : fs.labels) {
        int32_t v;
        f.read(reinterpret_cast<char*>(&v), 4);
        l = v;
    }
    if (!f) throw std::runtime_error("truncated feature set file");
    fs.validate();
    return fs;
}

FeatureSet load_feature_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open feature csv: " + path);
    std::vector<std::vector<float>> rows;
    std::vector<int> labels;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<float> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stof(cell));
        if (vals.size() < 2) throw std::runtime_error("csv row needs features + label");
        labels.push_back(static_cast<int>(vals.back()));
        vals.pop_back();
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error("empty feature csv");
    FeatureSet fs;
    fs.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            throw std::runtime_error("ragged feature csv");
        }
        for (size_t j = 0; j < rows[i].size(); ++j) {
            fs.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    fs.labels = std::move(labels);
    fs.validate();
    return fs;
}

}  // namespace taskforge
