#pragma once

#include "hqgnn/encoder.hpp"
#include "hqgnn/graph.hpp"
#include "hqgnn/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace hqgnn::fixtures {

/// Random bipartite interaction set; each pair present with probability p.
inline InteractionSet random_interactions(Index users, Index items, double p, Rng& rng) {
    InteractionSet s;
    s.num_users = users;
    s.num_items = items;
    for (Index u = 0; u < users; ++u)
        for (Index i = 0; i < items; ++i)
            if (rng.uniform() < p) s.interactions.push_back({u, i});
    return s;
}

inline EmbeddingTable random_table(Index users, Index items, Index dim, Rng& rng) {
    EmbeddingTable t(users, items, dim);
    for (Index r = 0; r < users; ++r)
        for (Index c = 0; c < dim; ++c) t.users(r, c) = rng.uniform(-1, 1);
    for (Index r = 0; r < items; ++r)
        for (Index c = 0; c < dim; ++c) t.items(r, c) = rng.uniform(-1, 1);
    return t;
}

/// Dense (U+I) x (U+I) normalized adjacency, built from degrees directly.
inline Eigen::MatrixXd dense_adjacency(const InteractionSet& s) {
    std::vector<double> du(static_cast<std::size_t>(s.num_users)), di(static_cast<std::size_t>(s.num_items));
    for (const auto& x : s.interactions) {
        du[static_cast<std::size_t>(x.user)] += 1;
        di[static_cast<std::size_t>(x.item)] += 1;
    }
    const Index n = s.num_users + s.num_items;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& x : s.interactions) {
        const double w = 1.0 / std::sqrt(du[static_cast<std::size_t>(x.user)] * di[static_cast<std::size_t>(x.item)]);
        a(x.user, s.num_users + x.item) = w;
        a(s.num_users + x.item, x.user) = w;
    }
    return a;
}

inline Eigen::MatrixXd stacked(const EmbeddingTable& t) {
    Eigen::MatrixXd m(t.num_users() + t.num_items(), t.dim());
    m << t.users, t.items;
    return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace hqgnn::fixtures
