#include "taskforge/synth.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "taskforge/geometry.hpp"
#include "taskforge/merge.hpp"
#include "taskforge/rng.hpp"

namespace taskforge {

namespace {

TaskVector make_vector(std::vector<float> data, int index, uint64_t seed) {
    TaskVector tv;
    tv.specialist_id = "synth-" + std::to_string(index);
    tv.base_hash = "synth-" + std::to_string(seed);
    Tensor t;
    t.shape = {static_cast<int64_t>(data.size())};
    t.data = std::move(data);
    tv.delta.set("v", std::move(t));
    return tv;
}

void scale_to_norm(std::vector<float>& v, double target) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    if (sq == 0.0) throw std::runtime_error("synth: cannot scale a zero vector");
    double s = target / std::sqrt(sq);
    for (auto& x : v) x = static_cast<float>(x * s);
}

}  // namespace

std::vector<TaskVector> generate(const SynthSpec& spec) {
    if (spec.n_vectors < 1) throw std::invalid_argument("synth: need at least one vector");
    if (spec.dim < 1) throw std::invalid_argument("synth: dim must be positive");
    if (spec.sparsity < 0.0 || spec.sparsity >= 1.0) {
        throw std::invalid_argument("synth: sparsity must lie in [0, 1)");
    }
    std::vector<double> norms = spec.target_norms;
    if (norms.empty()) norms.assign(static_cast<size_t>(spec.n_vectors), 1.0);
    if (norms.size() != static_cast<size_t>(spec.n_vectors)) {
        throw std::invalid_argument("synth: norm count does not match vector count");
    }
    for (double n : norms) {
        if (n <= 0.0) throw std::invalid_argument("synth: norms must be positive");
    }

    std::vector<TaskVector> out;
    size_t d = static_cast<size_t>(spec.dim);

    switch (spec.support_mode) {
        case SupportMode::DisjointSupport: {
            size_t block = d / static_cast<size_t>(spec.n_vectors);
            if (block == 0) throw std::invalid_argument("synth: dim too small for block split");
            for (int v = 0; v < spec.n_vectors; ++v) {
                CounterRng rng(derive_stream_key(spec.seed, "disjoint", std::to_string(v)));
                std::vector<float> data(d, 0.0f);
                size_t lo = static_cast<size_t>(v) * block;
                size_t hi = v + 1 == spec.n_vectors ? d : lo + block;
                for (size_t i = lo; i < hi; ++i) {
                    data[i] = static_cast<float>(rng.gaussian(i));
                }
                scale_to_norm(data, norms[static_cast<size_t>(v)]);
                out.push_back(make_vector(std::move(data), v, spec.seed));
            }
            break;
        }
        case SupportMode::RandomGaussian: {
            for (int v = 0; v < spec.n_vectors; ++v) {
                CounterRng rng(derive_stream_key(spec.seed, "gaussian", std::to_string(v)));
                CounterRng mask(derive_stream_key(spec.seed, "mask", std::to_string(v)));
                std::vector<float> data(d);
                for (size_t i = 0; i < d; ++i) {
                    double x = rng.gaussian(i);
                    if (spec.sparsity > 0.0 && mask.uniform(i) < spec.sparsity) x = 0.0;
                    data[i] = static_cast<float>(x);
                }
                scale_to_norm(data, norms[static_cast<size_t>(v)]);
                out.push_back(make_vector(std::move(data), v, spec.seed));
            }
            break;
        }
        case SupportMode::ControlledCosine: {
            int n = spec.n_vectors;
            if (spec.dim < n) {
                throw std::invalid_argument("synth: dim must be >= n_vectors for cosine control");
            }
            double t = spec.target_cosine;
            if (std::abs(t) > 1.0) throw std::invalid_argument("synth: |target cosine| > 1");
            // unit-diagonal Gram with constant off-diagonal t; PSD iff
            // t >= -1/(n-1)
            if (n > 1 && t < -1.0 / (n - 1) + 1e-15) {
                throw std::invalid_argument("synth: target cosine infeasible for this count");
            }
            Eigen::MatrixXd gram = Eigen::MatrixXd::Constant(n, n, t);
            gram.diagonal().setOnes();
            Eigen::LLT<Eigen::MatrixXd> llt(gram);
            if (llt.info() != Eigen::Success) {
                throw std::invalid_argument("synth: target Gram matrix is not positive definite");
            }
            Eigen::MatrixXd chol = llt.matrixL();

            // deterministic orthonormal basis via Gram-Schmidt on Gaussians
            Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(d));
            for (int v = 0; v < n; ++v) {
                CounterRng rng(derive_stream_key(spec.seed, "basis", std::to_string(v)));
                for (size_t i = 0; i < d; ++i) {
                    basis(v, static_cast<Eigen::Index>(i)) = rng.gaussian(i);
                }
                for (int p = 0; p < v; ++p) {
                    basis.row(v) -= basis.row(v).dot(basis.row(p)) * basis.row(p);
                }
                double nrm = basis.row(v).norm();
                if (nrm < 1e-12) throw std::runtime_error("synth: basis degenerated");
                basis.row(v) /= nrm;
            }
            Eigen::MatrixXd vecs = chol * basis;
            for (int v = 0; v < n; ++v) {
                std::vector<float> data(d);
                double target = norms[static_cast<size_t>(v)];
                double nrm = vecs.row(v).norm();
                for (size_t i = 0; i < d; ++i) {
                    data[i] = static_cast<float>(vecs(v, static_cast<Eigen::Index>(i)) *
                                                 target / nrm);
                }
                out.push_back(make_vector(std::move(data), v, spec.seed));
            }
            break;
        }
    }
    return out;
}

PredictionReport verify_predictions(const std::vector<const TaskVector*>& tvs,
                                    const std::vector<double>& trim_grid) {
    if (tvs.size() < 2) throw std::invalid_argument("verify_predictions: need >= 2 vectors");
    size_t n = tvs.size();
    PredictionReport rep;
    rep.trim_grid = trim_grid;

    std::vector<const TensorMap*> maps;
    for (const auto* tv : tvs) maps.push_back(&tv->delta);

    std::vector<std::vector<double>> inner(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i; j < n; ++j) {
            inner[i][j] = inner[j][i] = dot(*maps[i], *maps[j]);
        }
        rep.norms.push_back(std::sqrt(inner[i][i]));
    }

    rep.cosine.assign(n, std::vector<double>(n, 1.0));
    rep.sign_agreement.assign(n, std::vector<double>(n, 1.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            rep.cosine[i][j] = rep.cosine[j][i] =
                inner[i][j] / (rep.norms[i] * rep.norms[j]);
            rep.sign_agreement[i][j] = rep.sign_agreement[j][i] =
                sign_agreement(*maps[i], *maps[j]);
        }
    }

    double n_d = static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        auto dc = displacement_check(maps, i);
        rep.displacement_actual.push_back(dc.actual);
        rep.displacement_predicted.push_back(dc.predicted);
        // exact expansion bound on |actual - predicted| from the cross terms
        double cross_i = 0.0, cross_jl = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            cross_i += std::abs(inner[i][j]);
            for (size_t l = j + 1; l < n; ++l) {
                if (l == i) continue;
                cross_jl += std::abs(inner[j][l]);
            }
        }
        rep.cross_term_bound.push_back(2.0 * (n_d - 1.0) / (n_d * n_d) * cross_i +
                                       2.0 / (n_d * n_d) * cross_jl);
    }

    rep.discarded_fraction.assign(n, std::vector<double>(trim_grid.size(), 0.0));
    for (size_t v = 0; v < n; ++v) {
        for (size_t ki = 0; ki < trim_grid.size(); ++ki) {
            std::vector<const TaskVector*> single = {tvs[v]};
            TensorMap merged = merge_ties(single, trim_grid[ki]);
            int64_t zeros = 0, total = 0;
            for (const auto& [_, t] : merged.entries()) {
                for (float x : t.data) {
                    if (x == 0.0f) ++zeros;
                    ++total;
                }
            }
            rep.discarded_fraction[v][ki] =
                static_cast<double>(zeros) / static_cast<double>(total);
        }
    }
    return rep;
}

}  // namespace taskforge
