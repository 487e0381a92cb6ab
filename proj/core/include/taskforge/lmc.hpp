#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taskforge/checkpoint.hpp"

namespace taskforge {

struct InterpolationPath {
    std::string endpoint_a_id;
    std::string endpoint_b_id;
    std::vector<double> alphas;  // strictly ascending, includes 0 and 1
    std::vector<Checkpoint> checkpoints;  // optional, one per alpha
    std::vector<double> losses;           // optional, one per alpha
};

/// alpha * a + (1 - alpha) * b at each grid point. Endpoints are bit-exact
/// copies of a (alpha = 1) and b (alpha = 0).
InterpolationPath interpolate(const Checkpoint& a, const Checkpoint& b,
                              const std::vector<double>& alphas);

/// Streams one interpolated checkpoint at a time instead of materializing
/// the whole path.
void interpolate_streamed(const Checkpoint& a, const Checkpoint& b,
                          const std::vector<double>& alphas,
                          const std::function<void(double, const Checkpoint&)>& sink);

/// Loss-barrier metric: max(0, max interior loss - max endpoint loss).
double barrier(const std::vector<double>& losses);

/// Barrier per path, keyed by (endpoint_a_id, endpoint_b_id).
std::map<std::pair<std::string, std::string>, double> barrier_matrix(
    const std::vector<InterpolationPath>& paths);

/// Toy quadratic loss L(theta) = ||theta - target||^2 for self-tests.
double quadratic_loss(const TensorMap& theta, const TensorMap& target);

}  // namespace taskforge
