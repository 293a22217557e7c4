#include "hqgnn/synthetic.hpp"

#include "hqgnn/error.hpp"
#include "hqgnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hqgnn {

namespace {

// Draws an index from cumulative weights.
Index draw(const std::vector<double>& cumulative, Rng& rng) {
    const double x = rng.uniform() * cumulative.back();
    return static_cast<Index>(std::upper_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin());
}

}  // namespace

Dataset make_synthetic(const SyntheticConfig& c) {
    if (c.num_users <= 0 || c.num_items <= 1 || c.clusters <= 0 || c.clusters > c.num_items)
        throw InputError("invalid synthetic dataset shape");
    if (c.min_items_per_user < 1 || c.max_items_per_user < c.min_items_per_user ||
        c.max_items_per_user >= c.num_items)
        throw InputError("invalid per-user interaction range");

    Rng rng(c.seed);
    std::vector<Index> item_order(static_cast<std::size_t>(c.num_items));
    for (Index i = 0; i < c.num_items; ++i) item_order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(item_order.begin(), item_order.end());

    // community k owns every clusters-th item of a random permutation
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(c.clusters));
    for (Index r = 0; r < c.num_items; ++r)
        members[static_cast<std::size_t>(r % c.clusters)].push_back(item_order[static_cast<std::size_t>(r)]);

    const auto popularity = [&](std::size_t n) {
        std::vector<double> cum(n);
        double acc = 0;
        for (std::size_t r = 0; r < n; ++r) cum[r] = acc += 1.0 / std::pow(static_cast<double>(r + 1), c.popularity_skew);
        return cum;
    };
    std::vector<std::vector<double>> member_cum;
    for (const auto& m : members) member_cum.push_back(popularity(m.size()));
    std::vector<double> global_cum = popularity(static_cast<std::size_t>(c.num_items));

    Dataset data;
    auto& set = data.interactions;
    set.num_users = c.num_users;
    set.num_items = c.num_items;
    for (Index u = 0; u < c.num_users; ++u) {
        const auto cluster = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(c.clusters)));
        const Index n = c.min_items_per_user +
                        static_cast<Index>(rng.uniform_index(
                            static_cast<std::uint64_t>(c.max_items_per_user - c.min_items_per_user + 1)));
        std::set<Index> chosen;
        for (Index attempts = 0; static_cast<Index>(chosen.size()) < n && attempts < 50 * n; ++attempts) {
            Index item;
            if (rng.uniform() < c.affinity) {
                item = members[cluster][static_cast<std::size_t>(draw(member_cum[cluster], rng))];
            } else {
                item = item_order[static_cast<std::size_t>(draw(global_cum, rng))];
            }
            if (chosen.insert(item).second) set.interactions.push_back({u, item});
        }
    }

    for (Index u = 0; u < c.num_users; ++u) data.ids.users.push_back("u" + std::to_string(u));
    for (Index i = 0; i < c.num_items; ++i) data.ids.items.push_back("i" + std::to_string(i));
    return data;
}

}  // namespace hqgnn
