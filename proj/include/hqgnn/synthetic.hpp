#pragma once

#include "hqgnn/graph.hpp"

#include <cstdint>

namespace hqgnn {

/// Clustered implicit-feedback generator: users and items belong to latent
/// communities, and a user picks most items from their own community.
struct SyntheticConfig {
    Index num_users = 500;
    Index num_items = 800;
    Index clusters = 10;
    Index min_items_per_user = 10;
    Index max_items_per_user = 40;
    /// Probability that an interaction stays inside the user's community.
    double affinity = 0.8;
    /// Zipf-like popularity skew within a community (0 = uniform).
    double popularity_skew = 0.7;
    std::uint64_t seed = 1;
};

Dataset make_synthetic(const SyntheticConfig& config);

}  // namespace hqgnn
