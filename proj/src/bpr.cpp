#include "hqgnn/bpr.hpp"

namespace hqgnn {

namespace {

void check_batch(const TripletBatch& batch, const EmbeddingTable& q) {
    for (const auto& t : batch)
        if (t.user < 0 || t.user >= q.num_users() || t.pos < 0 || t.pos >= q.num_items() || t.neg < 0 ||
            t.neg >= q.num_items())
            throw InputError("triplet references a node outside the embedding table");
}

double margin(const Triplet& t, const EmbeddingTable& q) {
    return q.users.row(t.user).dot(q.items.row(t.pos)) - q.users.row(t.user).dot(q.items.row(t.neg));
}

}  // namespace

LossReport bpr_loss(const TripletBatch& batch, const EmbeddingTable& q, const EmbeddingTable& theta, double alpha) {
    if (alpha < 0) throw InputError("alpha must be non-negative");
    check_batch(batch, q);
    LossReport r;
    for (const auto& t : batch) r.bpr += softplus(-margin(t, q));
    r.reg = alpha * squared_norm(theta);
    r.total = r.bpr + r.reg;
    return r;
}

EmbeddingTable bpr_grad(const TripletBatch& batch, const EmbeddingTable& q) {
    check_batch(batch, q);
    EmbeddingTable g = EmbeddingTable::zeros_like(q);
    for (const auto& t : batch) {
        const double c = sigmoid(margin(t, q)) - 1.0;
        g.users.row(t.user) += c * (q.items.row(t.pos) - q.items.row(t.neg));
        g.items.row(t.pos) += c * q.users.row(t.user);
        g.items.row(t.neg) -= c * q.users.row(t.user);
    }
    return g;
}

BatchSlots::BatchSlots(const TripletBatch& batch, Index dim) : dim_(dim) {
    const auto add = [](std::unordered_map<Index, Index>& slot, std::vector<Index>& order, Index node) {
        if (slot.try_emplace(node, static_cast<Index>(order.size())).second) order.push_back(node);
    };
    for (const auto& t : batch) add(user_slot_, users_, t.user);
    for (const auto& t : batch) {
        add(item_slot_, items_, t.pos);
        add(item_slot_, items_, t.neg);
    }
}

Eigen::VectorXd BatchSlots::gather(const EmbeddingTable& table) const {
    Eigen::VectorXd flat(flat_size());
    Index off = 0;
    for (Index u : users_) {
        flat.segment(off, dim_) = table.users.row(u).transpose();
        off += dim_;
    }
    for (Index i : items_) {
        flat.segment(off, dim_) = table.items.row(i).transpose();
        off += dim_;
    }
    return flat;
}

void BatchSlots::scatter(const Eigen::VectorXd& flat, EmbeddingTable& table) const {
    if (flat.size() != flat_size()) throw InputError("slot vector size mismatch");
    Index off = 0;
    for (Index u : users_) {
        table.users.row(u) = flat.segment(off, dim_).transpose();
        off += dim_;
    }
    for (Index i : items_) {
        table.items.row(i) = flat.segment(off, dim_).transpose();
        off += dim_;
    }
}

Eigen::VectorXd bpr_hvp(const TripletBatch& batch, const EmbeddingTable& q, const BatchSlots& slots,
                        const Eigen::VectorXd& v) {
    if (v.size() != slots.flat_size() || q.dim() != slots.dim())
        throw InputError("direction has " + std::to_string(v.size()) + " entries, batch slots need " +
                         std::to_string(slots.flat_size()));
    check_batch(batch, q);
    const Index d = slots.dim();
    Eigen::VectorXd hv = Eigen::VectorXd::Zero(v.size());
    for (const auto& t : batch) {
        const Index ou = slots.user_offset(t.user);
        const Index oi = slots.item_offset(t.pos);
        const Index oj = slots.item_offset(t.neg);
        const auto qu = q.users.row(t.user).transpose();
        const auto qi = q.items.row(t.pos).transpose();
        const auto qj = q.items.row(t.neg).transpose();
        const auto vu = v.segment(ou, d);
        const auto vi = v.segment(oi, d);
        const auto vj = v.segment(oj, d);

        const double s = qu.dot(qi) - qu.dot(qj);
        const double p = sigmoid(s);
        const double w = p * (1.0 - p);  // d2 loss / ds2
        const double c = p - 1.0;        // d loss / ds

        // grad(s) = (q_i - q_j, q_u, -q_u) over the (u, i, j) slots
        const double gs_v = (qi - qj).dot(vu) + qu.dot(vi) - qu.dot(vj);
        const Eigen::VectorXd hu = w * gs_v * (qi - qj) + c * (vi - vj);
        const Eigen::VectorXd hi = w * gs_v * qu + c * vu;
        const Eigen::VectorXd hj = -w * gs_v * qu - c * vu;
        hv.segment(ou, d) += hu;
        hv.segment(oi, d) += hi;
        hv.segment(oj, d) += hj;
    }
    return hv;
}

}  // namespace hqgnn
