#include "hqgnn/evalrank.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <thread>
#include <unordered_set>

namespace hqgnn {

std::optional<double> recall_at_k(std::span<const Index> ranked, std::span<const Index> relevant, Index k) {
    if (relevant.empty()) return std::nullopt;
    const std::unordered_set<Index> rel(relevant.begin(), relevant.end());
    const auto top = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max<Index>(k, 0)));
    std::size_t hits = 0;
    for (std::size_t p = 0; p < top; ++p) hits += rel.count(ranked[p]);
    return static_cast<double>(hits) / static_cast<double>(rel.size());
}

std::optional<double> ndcg_at_k(std::span<const Index> ranked, std::span<const Index> relevant, Index k) {
    if (relevant.empty()) return std::nullopt;
    const std::unordered_set<Index> rel(relevant.begin(), relevant.end());
    const auto top = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max<Index>(k, 0)));
    double dcg = 0.0;
    for (std::size_t p = 0; p < top; ++p)
        if (rel.count(ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    const auto ideal_hits = std::min<std::size_t>(rel.size(), static_cast<std::size_t>(std::max<Index>(k, 0)));
    double idcg = 0.0;
    for (std::size_t p = 0; p < ideal_hits; ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

RankingResult evaluate(const UserScorer& scorer, const InteractionSet& test, const InteractionSet& train, Index k,
                       int threads) {
    RankingResult result;
    result.k = k;
    const auto relevant = test.items_by_user();
    const auto seen = train.items_by_user();

    std::vector<Index> users;
    for (Index u = 0; u < test.num_users; ++u)
        if (!relevant[static_cast<std::size_t>(u)].empty()) users.push_back(u);
    result.per_user.resize(users.size());

    const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
            const Index u = users[n];
            const Eigen::VectorXd scores = scorer(u);
            std::span<const Index> mask;
            if (static_cast<std::size_t>(u) < seen.size()) mask = seen[static_cast<std::size_t>(u)];
            const TopK top = topk(scores, k, mask);
            std::vector<Index> ranked;
            ranked.reserve(top.items.size());
            for (const auto& r : top.items) ranked.push_back(r.item);
            const auto& rel = relevant[static_cast<std::size_t>(u)];
            result.per_user[n] = {u, *recall_at_k(ranked, rel, k), *ndcg_at_k(ranked, rel, k)};
        }
    };

    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || users.size() < 2 * workers) {
        work(0, users.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (users.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(users.size(), begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }

    for (const auto& m : result.per_user) {
        result.recall += m.recall;
        result.ndcg += m.ndcg;
    }
    if (!result.per_user.empty()) {
        result.recall /= static_cast<double>(result.per_user.size());
        result.ndcg /= static_cast<double>(result.per_user.size());
    }
    return result;
}

RankingResult evaluate(const QuantizedTable& user_codes, const CodeIndex& items, const InteractionSet& test,
                       const InteractionSet& train, Index k, int threads) {
    return evaluate(
        [&](Index u) {
            return score_all(user_codes.codes.row(u), user_codes.row_sums(u), items);
        },
        test, train, k, threads);
}

RankingResult evaluate(const EmbeddingTable& embeddings, const InteractionSet& test, const InteractionSet& train,
                       Index k, int threads) {
    return evaluate(
        [&](Index u) -> Eigen::VectorXd { return embeddings.items * embeddings.users.row(u).transpose(); }, test,
        train, k, threads);
}

void write_metrics_csv(const std::filesystem::path& path, const RankingResult& result) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "user_id,recall,ndcg\n" << std::setprecision(17);
    for (const auto& m : result.per_user) out << m.user << ',' << m.recall << ',' << m.ndcg << '\n';
}

void write_metrics_summary(const std::filesystem::path& path, const RankingResult& result) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    nlohmann::ordered_json j;
    j["k"] = result.k;
    j["users"] = result.evaluated_users();
    j["recall"] = result.recall;
    j["ndcg"] = result.ndcg;
    out << j.dump(2) << '\n';
}

}  // namespace hqgnn
