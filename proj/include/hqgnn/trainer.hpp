#pragma once

#include "hqgnn/bpr.hpp"
#include "hqgnn/encoder.hpp"
#include "hqgnn/evalrank.hpp"
#include "hqgnn/graph.hpp"
#include "hqgnn/gste.hpp"
#include "hqgnn/quantizer.hpp"
#include "hqgnn/random.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace hqgnn {

struct TrainConfig {
    Index dim = 64;
    int layers = 2;
    int bits = 1;
    /// Train and rank on the pooled float embeddings, no quantizer.
    bool full_precision = false;
    DequantMode dequant = DequantMode::affine;
    double alpha = 1e-4;
    double lr = 0.01;
    Index batch_size = 1024;
    int epochs = 200;
    /// Stop after this many epochs without a better validation recall; 0 disables.
    int patience = 20;
    std::uint64_t seed = 0;
    GsteConfig estimator;
    double ema_decay = 0.99;
    Index k_eval = 50;
    double init_std = 0.1;
    int threads = 1;

    void validate() const;
};

/// Sorted per-user item lists for membership tests.
class InteractionIndex {
public:
    explicit InteractionIndex(const InteractionSet& set);

    bool contains(Index user, Index item) const;
    const std::vector<Index>& items(Index user) const { return by_user_[static_cast<std::size_t>(user)]; }
    Index num_users() const { return static_cast<Index>(by_user_.size()); }
    Index num_items() const { return num_items_; }

private:
    std::vector<std::vector<Index>> by_user_;
    Index num_items_;
};

/// Pairs each (u, i) with an item j drawn uniformly among items u has not
/// interacted with in `train` (rejection sampling).
TripletBatch sample_negatives(const InteractionIndex& train, std::span<const Interaction> positives, Rng& rng);
TripletBatch sample_negatives(const InteractionSet& train, std::span<const Interaction> positives, Rng& rng);

struct StepRecord {
    long step = 0;
    double loss = 0.0;  // mean BPR per triple plus the regularizer
    double delta = 0.0;
    double trace = 0.0;
    double grad_mag = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_recall = 0.0;
    double val_ndcg = 0.0;
    double delta = 0.0;
};

/// Everything needed to score or resume from one point of training.
struct Checkpoint {
    EmbeddingTable table;   // layer-0 parameters
    EmbeddingTable pooled;  // encoder output for `table`
    QuantParams user_params;
    QuantParams item_params;
    double delta = 0.0;
    int epoch = 0;
    double val_recall = 0.0;
};

struct TrainState {
    EmbeddingTable table;
    QuantizerState user_q;
    QuantizerState item_q;
    DeltaState delta;
    int epoch = 0;
    long step = 0;
    Rng sample_rng;
    Rng probe_rng;
    std::vector<EpochRecord> history;
    std::vector<StepRecord> steps;

    TrainState(const TrainConfig& config, Index num_users, Index num_items);
};

/// One mini-batch of the quantization-aware update:
/// encode, quantize, BPR loss, estimator-adjusted backward pass, SGD.
LossReport train_step(TrainState& state, const BipartiteGraph& graph, const TripletBatch& batch,
                      const TrainConfig& config);

/// Quantizer parameters for a snapshot; falls back to the table's own
/// extrema when the EMA has not seen a batch yet.
Checkpoint make_checkpoint(const TrainState& state, const BipartiteGraph& graph, const TrainConfig& config);

/// Code tables for a checkpoint.
QuantizedTable user_codes(const Checkpoint& ckpt);
QuantizedTable item_codes(const Checkpoint& ckpt);

/// Validation or test metrics for a checkpoint: integer codes when quantized,
/// float inner products when full precision.
RankingResult evaluate_checkpoint(const Checkpoint& ckpt, const TrainConfig& config, const InteractionSet& eval_set,
                                  const InteractionSet& mask);

struct TrainResult {
    TrainState state;
    Checkpoint best;
    BipartiteGraph graph;
};

/// Epoch loop with per-epoch validation and best-recall checkpointing.
TrainResult train(const Splits& splits, const TrainConfig& config);

/// train split plus validation split, the mask used when ranking test users.
InteractionSet merge(const InteractionSet& a, const InteractionSet& b);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);
void write_step_log_csv(const std::filesystem::path& path, const std::vector<StepRecord>& steps);

}  // namespace hqgnn
