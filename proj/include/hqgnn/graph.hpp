#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hqgnn {

using Index = Eigen::Index;

struct Interaction {
    Index user = 0;
    Index item = 0;

    friend bool operator==(const Interaction&, const Interaction&) = default;
    friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

/// Implicit-feedback pairs over dense 0-based user and item ids.
struct InteractionSet {
    std::vector<Interaction> interactions;
    Index num_users = 0;
    Index num_items = 0;

    std::size_t size() const { return interactions.size(); }
    bool empty() const { return interactions.empty(); }

    /// Throws InputError when an id is out of range or a pair repeats.
    void validate() const;

    /// Per-user item lists, in stored order.
    std::vector<std::vector<Index>> items_by_user() const;
};

/// Raw string ids in dense-id order.
struct IdMap {
    std::vector<std::string> users;
    std::vector<std::string> items;
};

struct Dataset {
    InteractionSet interactions;
    IdMap ids;
};

/// Reads "user<TAB>item" lines. '#' lines and blank lines are skipped,
/// raw ids are renumbered in first-appearance order and duplicates dropped.
Dataset load_interactions(const std::filesystem::path& path);
Dataset parse_interactions(std::istream& in);

void write_interactions(const std::filesystem::path& path, const InteractionSet& set, const IdMap& ids);
void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& ids);
std::vector<std::string> read_id_map(const std::filesystem::path& path);

struct SplitConfig {
    double train_frac = 0.8;
    double val_frac = 0.1;
    std::uint64_t seed = 0;
};

struct Splits {
    InteractionSet train;
    InteractionSet val;
    InteractionSet test;
};

/// Per-user random split. Each user's n interactions are shuffled; the first
/// floor(train_frac*n) form the training portion, of which floor(val_frac*n)
/// are moved to validation. The rest is test.
Splits split(const InteractionSet& set, const SplitConfig& config);

/// Writes seed, fractions and per-split counts as key=value lines.
void write_split_manifest(const std::filesystem::path& path, const SplitConfig& config, const Splits& splits);

/// User-item bipartite graph with symmetric-normalized weights
/// 1/sqrt(deg(u) deg(i)). item_adj is the transpose of user_adj.
struct BipartiteGraph {
    using Adjacency = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

    Adjacency user_adj;  // num_users x num_items
    Adjacency item_adj;  // num_items x num_users
    std::vector<Index> user_deg;
    std::vector<Index> item_deg;

    Index num_users() const { return user_adj.rows(); }
    Index num_items() const { return user_adj.cols(); }
    Index num_edges() const { return user_adj.nonZeros(); }
};

BipartiteGraph build_graph(const InteractionSet& train);

}  // namespace hqgnn
