#pragma once

#include "hqgnn/encoder.hpp"

#include <Eigen/Core>

#include <cmath>
#include <unordered_map>
#include <vector>

namespace hqgnn {

/// (user, observed item, unobserved item).
struct Triplet {
    Index user = 0;
    Index pos = 0;
    Index neg = 0;

    friend bool operator==(const Triplet&, const Triplet&) = default;
    friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

using TripletBatch = std::vector<Triplet>;

struct LossReport {
    double bpr = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

template <typename A, typename B>
typename A::Scalar score(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    if (x.size() != y.size()) throw InputError("score: dimension mismatch");
    return x.derived().reshaped().dot(y.derived().reshaped());
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Sum over the batch of -ln sigmoid(<q_u, q_i> - <q_u, q_j>), plus
/// alpha * ||theta||_F^2. q holds the (dequantized) embeddings that are scored.
LossReport bpr_loss(const TripletBatch& batch, const EmbeddingTable& q, const EmbeddingTable& theta, double alpha);

/// Gradient of the batch BPR term with respect to q. Rows not touched by
/// the batch are zero. The regularizer is not included.
EmbeddingTable bpr_grad(const TripletBatch& batch, const EmbeddingTable& q);

/// Nodes touched by a batch, each owning one d-sized slot of a flat vector.
/// Users come first (in order of first appearance), then items.
class BatchSlots {
public:
    BatchSlots(const TripletBatch& batch, Index dim);

    Index dim() const { return dim_; }
    Index num_slots() const { return static_cast<Index>(users_.size() + items_.size()); }
    Index flat_size() const { return num_slots() * dim_; }

    const std::vector<Index>& users() const { return users_; }
    const std::vector<Index>& items() const { return items_; }

    /// Offset of a node's slot in the flat vector.
    Index user_offset(Index user) const { return user_slot_.at(user) * dim_; }
    Index item_offset(Index item) const {
        return (static_cast<Index>(users_.size()) + item_slot_.at(item)) * dim_;
    }

    /// Copies the touched rows of a table into a flat vector.
    Eigen::VectorXd gather(const EmbeddingTable& table) const;
    /// Writes a flat vector back into the touched rows (other rows untouched).
    void scatter(const Eigen::VectorXd& flat, EmbeddingTable& table) const;

private:
    Index dim_;
    std::vector<Index> users_;
    std::vector<Index> items_;
    std::unordered_map<Index, Index> user_slot_;
    std::unordered_map<Index, Index> item_slot_;
};

/// Exact Hessian-vector product of the batch BPR term with respect to the
/// touched rows of q, laid out per `slots`.
Eigen::VectorXd bpr_hvp(const TripletBatch& batch, const EmbeddingTable& q, const BatchSlots& slots,
                        const Eigen::VectorXd& v);

}  // namespace hqgnn
