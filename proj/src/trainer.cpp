#include "hqgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace hqgnn {

namespace {
enum Stream : std::uint64_t { kInit = 0, kSampling = 1, kProbes = 2 };
}  // namespace

void TrainConfig::validate() const {
    if (dim <= 0) throw InputError("dim must be positive");
    if (layers < 0) throw InputError("layers must be non-negative");
    if (bits < 1 || bits > QuantParams::kMaxBits) throw InputError("bits must lie in [1, 16]");
    if (alpha < 0) throw InputError("alpha must be non-negative");
    if (!(lr > 0)) throw InputError("lr must be positive");
    if (batch_size <= 0) throw InputError("batch_size must be positive");
    if (epochs < 0) throw InputError("epochs must be non-negative");
    if (patience < 0) throw InputError("patience must be non-negative");
    if (!(ema_decay > 0 && ema_decay < 1)) throw InputError("ema_decay must lie in (0, 1)");
    if (k_eval <= 0) throw InputError("k must be positive");
    if (!(init_std > 0)) throw InputError("init_std must be positive");
    estimator.validate();
}

InteractionIndex::InteractionIndex(const InteractionSet& set)
    : by_user_(set.items_by_user()), num_items_(set.num_items) {
    for (auto& items : by_user_) std::sort(items.begin(), items.end());
}

bool InteractionIndex::contains(Index user, Index item) const {
    if (user < 0 || user >= num_users()) return false;
    const auto& items = by_user_[static_cast<std::size_t>(user)];
    return std::binary_search(items.begin(), items.end(), item);
}

TripletBatch sample_negatives(const InteractionIndex& train, std::span<const Interaction> positives, Rng& rng) {
    TripletBatch batch;
    batch.reserve(positives.size());
    for (const auto& p : positives) {
        if (p.user < 0 || p.user >= train.num_users()) throw InputError("positive references an unknown user");
        if (static_cast<Index>(train.items(p.user).size()) >= train.num_items())
            throw InputError("user " + std::to_string(p.user) + " has interacted with every item");
        Index j;
        do {
            j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(train.num_items())));
        } while (train.contains(p.user, j));
        batch.push_back({p.user, p.item, j});
    }
    return batch;
}

TripletBatch sample_negatives(const InteractionSet& train, std::span<const Interaction> positives, Rng& rng) {
    return sample_negatives(InteractionIndex(train), positives, rng);
}

TrainState::TrainState(const TrainConfig& config, Index num_users, Index num_items)
    : user_q(config.bits, config.ema_decay),
      item_q(config.bits, config.ema_decay),
      sample_rng(Rng::derive(config.seed, kSampling)),
      probe_rng(Rng::derive(config.seed, kProbes)) {
    config.validate();
    Rng init(Rng::derive(config.seed, kInit));
    table = init_embeddings(num_users, num_items, config.dim, init, config.init_std);
    if (config.estimator.frozen_delta) delta.delta = *config.estimator.frozen_delta;
}

namespace {

struct QuantizedSide {
    RowMatrix<double> normalized;
    CodeMatrix codes;
    RowMatrix<double> values;
};

QuantizedSide quantize_side(const RowMatrix<double>& x, const QuantParams& p, DequantMode mode) {
    QuantizedSide s;
    s.normalized = normalize(x, p);
    s.codes = quantize(s.normalized);
    s.values = dequantize(s.codes, p, mode);
    return s;
}

// Maps a gradient on the normalized values back onto the pooled values:
// d x_n / d x = 1/delta inside [l, u], zero where the forward pass clipped.
RowMatrix<double> through_clip(const RowMatrix<double>& g_n, const RowMatrix<double>& x, const QuantParams& p) {
    const auto inside = (x.array() >= p.l && x.array() <= p.u).cast<double>();
    return (g_n.array() * inside / p.delta).matrix();
}

}  // namespace

LossReport train_step(TrainState& state, const BipartiteGraph& graph, const TripletBatch& batch,
                      const TrainConfig& config) {
    ++state.step;
    const EmbeddingTable pooled = encode(graph, state.table, config.layers);
    StepRecord rec;
    rec.step = state.step;

    EmbeddingTable grad_pooled;
    LossReport loss;
    if (config.full_precision) {
        loss = bpr_loss(batch, pooled, state.table, config.alpha);
        grad_pooled = bpr_grad(batch, pooled);
    } else {
        const QuantParams pu = update_thresholds(state.user_q, pooled.users);
        const QuantParams pi = update_thresholds(state.item_q, pooled.items);
        const QuantizedSide qu = quantize_side(pooled.users, pu, config.dequant);
        const QuantizedSide qi = quantize_side(pooled.items, pi, config.dequant);
        const EmbeddingTable q(qu.values, qi.values);

        loss = bpr_loss(batch, q, state.table, config.alpha);
        const EmbeddingTable g_b = bpr_grad(batch, q);

        // gradient with respect to the integer codes: d q / d code = delta
        const EmbeddingTable g_code(g_b.users * pu.delta, g_b.items * pi.delta);

        const bool gste = config.estimator.mode == Estimator::gste;
        const double delta = gste ? state.delta.delta : 0.0;
        const RowMatrix<double> g_n_users = adjust_gradient(g_code.users, qu.normalized, qu.codes, delta);
        const RowMatrix<double> g_n_items = adjust_gradient(g_code.items, qi.normalized, qi.codes, delta);

        if (gste && !batch.empty()) {
            const BatchSlots slots(batch, pooled.dim());
            // Hessian with respect to the codes: D H D with D = per-slot delta
            Eigen::VectorXd scale(slots.flat_size());
            const auto n_user_coords = static_cast<Index>(slots.users().size()) * slots.dim();
            scale.head(n_user_coords).setConstant(pu.delta);
            scale.tail(scale.size() - n_user_coords).setConstant(pi.delta);
            const HessianVectorProduct hvp = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
                return scale.cwiseProduct(bpr_hvp(batch, q, slots, scale.cwiseProduct(v)));
            };
            rec.trace = hutchinson_trace(hvp, slots.flat_size(), config.estimator.probes_per_batch, state.probe_rng);
            const Eigen::VectorXd g_slots = slots.gather(g_code);
            rec.grad_mag = g_slots.cwiseAbs().mean();
            if (config.estimator.frozen_delta) {
                state.delta.delta = *config.estimator.frozen_delta;
            } else {
                update_delta(state.delta, rec.trace, g_slots, config.estimator);
            }
        }
        rec.delta = delta;

        grad_pooled.users = through_clip(g_n_users, pooled.users, pu);
        grad_pooled.items = through_clip(g_n_items, pooled.items, pi);
    }

    if (!std::isfinite(loss.total)) throw DivergenceError(state.step, "non-finite loss");

    EmbeddingTable grad = pool_adjoint(graph, grad_pooled, config.layers);
    grad += (2.0 * config.alpha) * state.table;
    grad *= -config.lr;
    state.table += grad;
    if (!state.table.all_finite()) throw DivergenceError(state.step, "non-finite parameters");

    const double per_triple = batch.empty() ? 0.0 : loss.bpr / static_cast<double>(batch.size());
    rec.loss = per_triple + loss.reg;
    state.steps.push_back(rec);
    return loss;
}

Checkpoint make_checkpoint(const TrainState& state, const BipartiteGraph& graph, const TrainConfig& config) {
    Checkpoint c;
    c.table = state.table;
    c.pooled = encode(graph, state.table, config.layers);
    const auto params_for = [&](const QuantizerState& q, const RowMatrix<double>& values) {
        if (q.initialized) return q.params;
        QuantizerState fresh(config.bits, config.ema_decay);
        return update_thresholds(fresh, values);
    };
    c.user_params = params_for(state.user_q, c.pooled.users);
    c.item_params = params_for(state.item_q, c.pooled.items);
    c.delta = state.delta.delta;
    c.epoch = state.epoch;
    return c;
}

QuantizedTable user_codes(const Checkpoint& ckpt) { return quantize_table(ckpt.pooled.users, ckpt.user_params); }
QuantizedTable item_codes(const Checkpoint& ckpt) { return quantize_table(ckpt.pooled.items, ckpt.item_params); }

RankingResult evaluate_checkpoint(const Checkpoint& ckpt, const TrainConfig& config, const InteractionSet& eval_set,
                                  const InteractionSet& mask) {
    if (config.full_precision) return evaluate(ckpt.pooled, eval_set, mask, config.k_eval, config.threads);
    const CodeIndex index(item_codes(ckpt), ckpt.user_params);
    return evaluate(user_codes(ckpt), index, eval_set, mask, config.k_eval, config.threads);
}

TrainResult train(const Splits& splits, const TrainConfig& config) {
    config.validate();
    TrainResult result{TrainState(config, splits.train.num_users, splits.train.num_items), {},
                       build_graph(splits.train)};
    TrainState& state = result.state;
    const BipartiteGraph& graph = result.graph;
    const InteractionIndex train_index(splits.train);

    result.best = make_checkpoint(state, graph, config);
    double best_recall = -1.0;
    int since_best = 0;

    std::vector<Interaction> order = splits.train.interactions;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        state.sample_rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        long batches = 0;
        const auto first_step = state.steps.size();
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const auto len = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
            const auto batch = sample_negatives(train_index, std::span(order).subspan(start, len), state.sample_rng);
            train_step(state, graph, batch, config);
            ++batches;
        }
        for (auto s = first_step; s < state.steps.size(); ++s) loss_sum += state.steps[s].loss;
        state.epoch = epoch;

        Checkpoint snapshot = make_checkpoint(state, graph, config);
        const RankingResult val = evaluate_checkpoint(snapshot, config, splits.val, splits.train);
        snapshot.val_recall = val.recall;
        state.history.push_back({epoch, batches ? loss_sum / static_cast<double>(batches) : 0.0, val.recall,
                                 val.ndcg, state.delta.delta});

        if (val.recall > best_recall) {
            best_recall = val.recall;
            result.best = std::move(snapshot);
            since_best = 0;
        } else if (config.patience > 0 && ++since_best >= config.patience) {
            break;
        }
    }
    return result;
}

InteractionSet merge(const InteractionSet& a, const InteractionSet& b) {
    InteractionSet out;
    out.num_users = std::max(a.num_users, b.num_users);
    out.num_items = std::max(a.num_items, b.num_items);
    out.interactions = a.interactions;
    out.interactions.insert(out.interactions.end(), b.interactions.begin(), b.interactions.end());
    return out;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "epoch,train_loss,val_recall,val_ndcg,delta\n" << std::setprecision(17);
    for (const auto& h : history)
        out << h.epoch << ',' << h.train_loss << ',' << h.val_recall << ',' << h.val_ndcg << ',' << h.delta << '\n';
}

void write_step_log_csv(const std::filesystem::path& path, const std::vector<StepRecord>& steps) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "step,delta,trace,grad_mag\n" << std::setprecision(17);
    for (const auto& s : steps) out << s.step << ',' << s.delta << ',' << s.trace << ',' << s.grad_mag << '\n';
}

}  // namespace hqgnn
