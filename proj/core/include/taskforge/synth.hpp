#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "taskforge/task_vector.hpp"

namespace taskforge {

enum class SupportMode {
    DisjointSupport,   // nonzero on disjoint index blocks; exact pairwise cosine 0
    RandomGaussian,    // i.i.d. normal scaled to target norms
    ControlledCosine,  // Cholesky-of-Gram construction hitting a target cosine
};

struct SynthSpec {
    int n_vectors = 2;
    int64_t dim = 1000;
    std::vector<double> target_norms;  // empty: all 1.0
    SupportMode support_mode = SupportMode::RandomGaussian;
    double target_cosine = 0.0;  // ControlledCosine only
    double sparsity = 0.0;       // fraction of each vector zeroed (Gaussian mode)
    uint64_t seed = 42;
};

/// Generates synthetic task vectors with controlled geometry. Each vector
/// is a single flat tensor named "v".
std::vector<TaskVector> generate(const SynthSpec& spec);

struct PredictionReport {
    std::vector<double> norms;
    std::vector<std::vector<double>> cosine;
    std::vector<std::vector<double>> sign_agreement;
    std::vector<double> displacement_actual;     // per vector
    std::vector<double> displacement_predicted;  // orthogonality prediction
    std::vector<double> cross_term_bound;        // algebraic |actual - predicted| bound
    std::vector<double> trim_grid;               // k values probed
    std::vector<std::vector<double>> discarded_fraction;  // [vector][k]
};

/// Checks the displacement prediction, sign agreements, and the fraction
/// TIES trimming discards at each k; serializable to JSON by the CLI.
PredictionReport verify_predictions(const std::vector<const TaskVector*>& tvs,
                                    const std::vector<double>& trim_grid = {0.1, 0.2, 0.5,
                                                                            0.8});

}  // namespace taskforge
