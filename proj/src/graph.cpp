#include "hqgnn/graph.hpp"

#include "hqgnn/error.hpp"
#include "hqgnn/random.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace hqgnn {

namespace {

struct PairHash {
    std::size_t operator()(const Interaction& x) const noexcept {
        return std::hash<Index>{}(x.user) * 0x9e3779b97f4a7c15ULL ^ std::hash<Index>{}(x.item);
    }
};

Index intern(std::unordered_map<std::string, Index>& table, std::vector<std::string>& names,
             const std::string& raw) {
    auto [it, inserted] = table.try_emplace(raw, static_cast<Index>(names.size()));
    if (inserted) names.push_back(raw);
    return it->second;
}

// floor(frac * n), tolerant to representation error such as 0.29 * 100.
Index floor_count(double frac, Index n) {
    return static_cast<Index>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

}  // namespace

void InteractionSet::validate() const {
    std::unordered_set<Interaction, PairHash> seen;
    seen.reserve(interactions.size());
    for (const auto& x : interactions) {
        if (x.user < 0 || x.user >= num_users || x.item < 0 || x.item >= num_items)
            throw InputError("interaction (" + std::to_string(x.user) + ", " + std::to_string(x.item) +
                             ") out of range");
        if (!seen.insert(x).second)
            throw InputError("duplicate interaction (" + std::to_string(x.user) + ", " +
                             std::to_string(x.item) + ")");
    }
}

std::vector<std::vector<Index>> InteractionSet::items_by_user() const {
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(num_users));
    for (const auto& x : interactions) out[static_cast<std::size_t>(x.user)].push_back(x.item);
    return out;
}

Dataset parse_interactions(std::istream& in) {
    Dataset data;
    std::unordered_map<std::string, Index> users, items;
    std::unordered_set<Interaction, PairHash> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(lineno, "expected <user>\\t<item>");
        const std::string user = line.substr(0, tab);
        const std::string item = line.substr(tab + 1);
        if (user.empty() || item.empty() || item.find('\t') != std::string::npos)
            throw ParseError(lineno, "expected <user>\\t<item>");
        const Interaction x{intern(users, data.ids.users, user), intern(items, data.ids.items, item)};
        if (seen.insert(x).second) data.interactions.interactions.push_back(x);
    }
    if (data.interactions.empty()) throw InputError("no interactions");
    data.interactions.num_users = static_cast<Index>(data.ids.users.size());
    data.interactions.num_items = static_cast<Index>(data.ids.items.size());
    return data;
}

Dataset load_interactions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return parse_interactions(in);
}

void write_interactions(const std::filesystem::path& path, const InteractionSet& set, const IdMap& ids) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& x : set.interactions)
        out << ids.users.at(static_cast<std::size_t>(x.user)) << '\t'
            << ids.items.at(static_cast<std::size_t>(x.item)) << '\n';
}

void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& ids) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (std::size_t i = 0; i < ids.size(); ++i) out << i << '\t' << ids[i] << '\n';
}

std::vector<std::string> read_id_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.substr(0, tab) != std::to_string(ids.size()))
            throw ParseError(lineno, "bad id map entry");
        ids.push_back(line.substr(tab + 1));
    }
    return ids;
}

Splits split(const InteractionSet& set, const SplitConfig& config) {
    const auto in_unit = [](double f) { return f >= 0.0 && f <= 1.0; };
    if (!in_unit(config.train_frac) || !in_unit(config.val_frac))
        throw InputError("split fractions must lie in [0, 1]");
    if (config.train_frac + config.val_frac > 1.0 + 1e-12)
        throw InputError("train_frac + val_frac must not exceed 1");

    Splits out;
    for (auto* s : {&out.train, &out.val, &out.test}) {
        s->num_users = set.num_users;
        s->num_items = set.num_items;
    }

    Rng rng(config.seed);
    auto by_user = set.items_by_user();
    for (Index u = 0; u < set.num_users; ++u) {
        auto& items = by_user[static_cast<std::size_t>(u)];
        rng.shuffle(items.begin(), items.end());
        const auto n = static_cast<Index>(items.size());
        const Index train_portion = floor_count(config.train_frac, n);
        const Index n_val = std::min(floor_count(config.val_frac, n), train_portion);
        const Index n_train = train_portion - n_val;
        for (Index k = 0; k < n; ++k) {
            auto& dst = k < n_train ? out.train : (k < train_portion ? out.val : out.test);
            dst.interactions.push_back({u, items[static_cast<std::size_t>(k)]});
        }
    }
    return out;
}

void write_split_manifest(const std::filesystem::path& path, const SplitConfig& config, const Splits& splits) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << std::setprecision(17);
    out << "seed=" << config.seed << '\n'
        << "train_frac=" << config.train_frac << '\n'
        << "val_frac=" << config.val_frac << '\n'
        << "num_users=" << splits.train.num_users << '\n'
        << "num_items=" << splits.train.num_items << '\n'
        << "train=" << splits.train.size() << '\n'
        << "val=" << splits.val.size() << '\n'
        << "test=" << splits.test.size() << '\n';
}

BipartiteGraph build_graph(const InteractionSet& train) {
    BipartiteGraph g;
    g.user_deg.assign(static_cast<std::size_t>(train.num_users), 0);
    g.item_deg.assign(static_cast<std::size_t>(train.num_items), 0);
    for (const auto& x : train.interactions) {
        ++g.user_deg[static_cast<std::size_t>(x.user)];
        ++g.item_deg[static_cast<std::size_t>(x.item)];
    }

    std::vector<Eigen::Triplet<double, Index>> triplets;
    triplets.reserve(train.size());
    for (const auto& x : train.interactions) {
        const double du = static_cast<double>(g.user_deg[static_cast<std::size_t>(x.user)]);
        const double di = static_cast<double>(g.item_deg[static_cast<std::size_t>(x.item)]);
        triplets.emplace_back(x.user, x.item, 1.0 / std::sqrt(du * di));
    }
    g.user_adj.resize(train.num_users, train.num_items);
    g.user_adj.setFromTriplets(triplets.begin(), triplets.end());
    g.user_adj.makeCompressed();
    g.item_adj = g.user_adj.transpose();
    g.item_adj.makeCompressed();
    return g;
}

}  // namespace hqgnn
