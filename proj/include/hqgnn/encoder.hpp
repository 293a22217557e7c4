#pragma once

#include "hqgnn/error.hpp"
#include "hqgnn/graph.hpp"
#include "hqgnn/random.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <string>
#include <vector>

namespace hqgnn {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// User and item embedding matrices, one row per node.
template <typename Scalar>
struct EmbeddingTableT {
    using Matrix = RowMatrix<Scalar>;

    Matrix users;
    Matrix items;

    EmbeddingTableT() = default;
    EmbeddingTableT(Index num_users, Index num_items, Index dim)
        : users(Matrix::Zero(num_users, dim)), items(Matrix::Zero(num_items, dim)) {}
    EmbeddingTableT(Matrix u, Matrix i) : users(std::move(u)), items(std::move(i)) {}

    Index dim() const { return users.cols(); }
    Index num_users() const { return users.rows(); }
    Index num_items() const { return items.rows(); }

    bool all_finite() const { return users.allFinite() && items.allFinite(); }

    EmbeddingTableT& operator+=(const EmbeddingTableT& o) {
        users += o.users;
        items += o.items;
        return *this;
    }
    EmbeddingTableT& operator*=(Scalar s) {
        users *= s;
        items *= s;
        return *this;
    }
    friend EmbeddingTableT operator+(EmbeddingTableT a, const EmbeddingTableT& b) { return a += b; }
    friend EmbeddingTableT operator*(Scalar s, EmbeddingTableT a) { return a *= s; }

    static EmbeddingTableT zeros_like(const EmbeddingTableT& t) {
        return EmbeddingTableT(t.num_users(), t.num_items(), t.dim());
    }
};

using EmbeddingTable = EmbeddingTableT<double>;

/// Frobenius inner product over both blocks.
template <typename Scalar>
Scalar inner(const EmbeddingTableT<Scalar>& a, const EmbeddingTableT<Scalar>& b) {
    return a.users.cwiseProduct(b.users).sum() + a.items.cwiseProduct(b.items).sum();
}

template <typename Scalar>
Scalar squared_norm(const EmbeddingTableT<Scalar>& a) {
    return a.users.squaredNorm() + a.items.squaredNorm();
}

/// I.i.d. normal entries with mean 0 and the given standard deviation.
inline EmbeddingTable init_embeddings(Index num_users, Index num_items, Index dim, Rng& rng,
                                      double stddev = 0.1) {
    if (dim <= 0) throw InputError("embedding dimension must be positive");
    EmbeddingTable t(num_users, num_items, dim);
    for (Index r = 0; r < num_users; ++r)
        for (Index c = 0; c < dim; ++c) t.users(r, c) = stddev * rng.normal();
    for (Index r = 0; r < num_items; ++r)
        for (Index c = 0; c < dim; ++c) t.items(r, c) = stddev * rng.normal();
    return t;
}

/// Layers 0..L of propagated embeddings. layers[0] is the input table.
template <typename Scalar>
using LayerStackT = std::vector<EmbeddingTableT<Scalar>>;
using LayerStack = LayerStackT<double>;

namespace detail {

template <typename Scalar>
void check_shapes(const BipartiteGraph& graph, const EmbeddingTableT<Scalar>& table) {
    if (table.num_users() != graph.num_users() || table.num_items() != graph.num_items())
        throw InputError("embedding table is " + std::to_string(table.num_users()) + "x" +
                         std::to_string(table.num_items()) + " nodes, graph has " +
                         std::to_string(graph.num_users()) + "x" + std::to_string(graph.num_items()));
    if (table.users.cols() != table.items.cols())
        throw InputError("user and item embeddings differ in dimension");
}

}  // namespace detail

/// One propagation step: users take the weighted sum of their items' rows and
/// vice versa. Nodes without edges get zero rows.
template <typename Scalar>
EmbeddingTableT<Scalar> propagate_once(const BipartiteGraph& graph, const EmbeddingTableT<Scalar>& x) {
    EmbeddingTableT<Scalar> next;
    next.users.noalias() = graph.user_adj.template cast<Scalar>() * x.items;
    next.items.noalias() = graph.item_adj.template cast<Scalar>() * x.users;
    return next;
}

template <typename Scalar>
LayerStackT<Scalar> propagate(const BipartiteGraph& graph, const EmbeddingTableT<Scalar>& table, int layers) {
    detail::check_shapes(graph, table);
    if (layers < 0) throw InputError("layer count must be non-negative");
    LayerStackT<Scalar> stack;
    stack.reserve(static_cast<std::size_t>(layers) + 1);
    stack.push_back(table);
    for (int l = 1; l <= layers; ++l) stack.push_back(propagate_once(graph, stack.back()));
    return stack;
}

/// Mean over layers 0..L.
template <typename Scalar>
EmbeddingTableT<Scalar> pool(const LayerStackT<Scalar>& stack) {
    if (stack.empty()) throw InputError("empty layer stack");
    EmbeddingTableT<Scalar> out = stack.front();
    for (std::size_t l = 1; l < stack.size(); ++l) out += stack[l];
    out *= Scalar(1) / static_cast<Scalar>(stack.size());
    return out;
}

template <typename Scalar>
EmbeddingTableT<Scalar> encode(const BipartiteGraph& graph, const EmbeddingTableT<Scalar>& table, int layers) {
    return pool(propagate(graph, table, layers));
}

/// Gradient of <grad_final, encode(X)> with respect to X. The normalized
/// propagation operator is symmetric on the stacked user+item space, so the
/// adjoint of encode is encode itself.
template <typename Scalar>
EmbeddingTableT<Scalar> pool_adjoint(const BipartiteGraph& graph, const EmbeddingTableT<Scalar>& grad_final,
                                     int layers) {
    return pool(propagate(graph, grad_final, layers));
}

/// "HQEM" binary: magic, version u32, rows u64, dim u32, type tag u32, then
/// row-major little-endian f64 values.
void write_embeddings(const std::filesystem::path& path, const RowMatrix<double>& m);
RowMatrix<double> read_embeddings(const std::filesystem::path& path);

void write_embeddings(std::ostream& out, const RowMatrix<double>& m);
RowMatrix<double> read_embeddings(std::istream& in);

}  // namespace hqgnn
