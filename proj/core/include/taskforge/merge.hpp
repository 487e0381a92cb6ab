#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taskforge/task_vector.hpp"
#include "taskforge/tensor_map.hpp"

namespace taskforge {

enum class MergeStrategy {
    SimpleAverage,
    TaskArithmetic,
    Dare,
    Ties,
    DareTies,
    Della,
    NormAdjusted,
    Negation,
};

enum class SeedPolicy {
    ByName,   // stream keyed by SHA-256(base_seed, specialist_id): order-invariant
    ByIndex,  // stream keyed by base_seed + vector index: order-dependent
};

/// Strategy selector plus every hyperparameter. Fields irrelevant to the
/// chosen strategy are ignored but kept for provenance in the report.
struct MergeSpec {
    MergeStrategy strategy = MergeStrategy::SimpleAverage;
    double lambda = 1.0;         // scaling
    double drop_rate = 0.0;      // DARE p / DELLA p_target, in [0, 1)
    double trim_fraction = 0.0;  // TIES k, in [0, 1)
    double gamma = 0.0;          // inverse-norm weighting exponent
    double beta = 1.0;           // negation strength
    uint64_t base_seed = 42;
    SeedPolicy seed_policy = SeedPolicy::ByName;
    bool trim_per_tensor = false;     // TIES: threshold per tensor instead of global
    bool della_global_max = false;    // DELLA: max|delta| over whole vector, not per tensor
};

struct MergeReport {
    std::string strategy;
    MergeSpec spec;
    std::vector<std::string> vector_ids;
    std::vector<double> retained_fraction;  // per vector, after trim/dropout
    int64_t sign_conflicts = 0;             // elements with both signs present
    int64_t elected_positive = 0;
    int64_t elected_negative = 0;
    int64_t elected_zero = 0;
    double wall_seconds = 0.0;
    bool weights_renormalized = false;  // NormAdjusted interpretation flag
};

std::string to_string(MergeStrategy s);
MergeStrategy strategy_from_string(const std::string& s);

TensorMap merge_simple_average(const std::vector<const TaskVector*>& tvs,
                               MergeReport* report = nullptr);

/// lambda * mean(tau): lambda = 1 coincides with simple averaging.
TensorMap merge_task_arithmetic(const std::vector<const TaskVector*>& tvs, double lambda,
                                MergeReport* report = nullptr);

/// Per-vector Bernoulli dropout at rate p with 1/(1-p) rescale, then mean.
TensorMap merge_dare(const std::vector<const TaskVector*>& tvs, double drop_rate,
                     uint64_t base_seed, SeedPolicy policy = SeedPolicy::ByName,
                     MergeReport* report = nullptr);

/// Trim bottom-k by magnitude, elect per-element sign by majority vote
/// (tie -> sign of elementwise sum), average non-conflicting values.
TensorMap merge_ties(const std::vector<const TaskVector*>& tvs, double trim_fraction,
                     bool per_tensor_trim = false, MergeReport* report = nullptr);

TensorMap merge_dare_ties(const std::vector<const TaskVector*>& tvs, double drop_rate,
                          double trim_fraction, uint64_t base_seed,
                          SeedPolicy policy = SeedPolicy::ByName,
                          MergeReport* report = nullptr);

/// Magnitude-proportional dropout p_i = (1 - |d_i|/max|d|) * p_target with
/// per-element 1/(1-p_i) rescale, then the TIES election steps.
TensorMap merge_della(const std::vector<const TaskVector*>& tvs, double p_target,
                      double trim_fraction, uint64_t base_seed,
                      SeedPolicy policy = SeedPolicy::ByName, bool global_max = false,
                      MergeReport* report = nullptr);

/// w_i proportional to ||tau_i||^-gamma, renormalized to sum 1; output
/// lambda * sum w_i tau_i.
TensorMap merge_norm_adjusted(const std::vector<const TaskVector*>& tvs, double gamma,
                              double lambda, MergeReport* report = nullptr);

/// Single entry point dispatching on spec.strategy.
TensorMap merge(const std::vector<const TaskVector*>& tvs, const MergeSpec& spec,
                MergeReport* report = nullptr);

/// source - beta * tau_focal for each beta in the grid.
std::vector<Checkpoint> negate_domain(const Checkpoint& source, const TaskVector& tau_focal,
                                      const std::vector<double>& beta_grid);

/// Gaussian vector matched to the template's per-tensor L2 norms.
TaskVector random_control_vector(const TaskVector& templ, uint64_t seed);

}  // namespace taskforge
