#pragma once

#include "hqgnn/graph.hpp"
#include "hqgnn/retrieval.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace hqgnn {

/// |top-k ∩ relevant| / |relevant|. nullopt when `relevant` is empty.
std::optional<double> recall_at_k(std::span<const Index> ranked, std::span<const Index> relevant, Index k);

/// Binary-gain NDCG with discount 1/log2(rank + 1), ranks 1-based, normalized
/// by the ideal DCG of min(|relevant|, k) hits. nullopt when `relevant` is empty.
std::optional<double> ndcg_at_k(std::span<const Index> ranked, std::span<const Index> relevant, Index k);

struct UserMetrics {
    Index user = 0;
    double recall = 0.0;
    double ndcg = 0.0;
};

struct RankingResult {
    std::vector<UserMetrics> per_user;  // users with at least one test item, ascending id
    double recall = 0.0;
    double ndcg = 0.0;
    Index k = 0;

    Index evaluated_users() const { return static_cast<Index>(per_user.size()); }
};

/// Scores for every item for one user.
using UserScorer = std::function<Eigen::VectorXd(Index user)>;

/// Ranks all items per test user with the user's training items masked out,
/// then averages Recall@k and NDCG@k over users that have test items.
/// `threads` splits users across workers; results do not depend on it.
RankingResult evaluate(const UserScorer& scorer, const InteractionSet& test, const InteractionSet& train, Index k,
                       int threads = 1);

/// Integer-path evaluation over exported codes.
RankingResult evaluate(const QuantizedTable& user_codes, const CodeIndex& items, const InteractionSet& test,
                       const InteractionSet& train, Index k, int threads = 1);

/// Float inner-product evaluation, used for full-precision embeddings.
RankingResult evaluate(const EmbeddingTable& embeddings, const InteractionSet& test, const InteractionSet& train,
                       Index k, int threads = 1);

/// user_id,recall,ndcg rows.
void write_metrics_csv(const std::filesystem::path& path, const RankingResult& result);

/// JSON object with keys "k", "users", "recall", "ndcg".
void write_metrics_summary(const std::filesystem::path& path, const RankingResult& result);

}  // namespace hqgnn
