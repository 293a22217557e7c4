#pragma once

#include "hqgnn/encoder.hpp"
#include "hqgnn/random.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>

namespace hqgnn {

enum class Estimator { ste, gste };

struct GsteConfig {
    Estimator mode = Estimator::gste;
    int probes_per_batch = 1;
    /// 0 disables smoothing.
    double delta_decay = 0.9;
    double delta_lo = 0.0;
    double delta_hi = 2.0;
    /// When set, delta stays at this value and is never re-estimated.
    std::optional<double> frozen_delta;

    void validate() const;
};

/// Scaling-factor bookkeeping. n_diag is the Hessian size of the last batch.
struct DeltaState {
    double delta = 0.0;
    double trace_ema = 0.0;
    double grad_mag_ema = 0.0;
    Index n_diag = 0;
    bool initialized = false;
};

/// g * (1 + delta * sign(g) * (x_n - x_q)) element-wise, with sign(0) = +1.
/// Throws InputError on shape mismatch.
template <typename G, typename N, typename Q>
RowMatrix<double> adjust_gradient(const Eigen::MatrixBase<G>& g_q, const Eigen::MatrixBase<N>& x_n,
                                  const Eigen::MatrixBase<Q>& x_q, double delta) {
    if (g_q.rows() != x_n.rows() || g_q.cols() != x_n.cols() || g_q.rows() != x_q.rows() ||
        g_q.cols() != x_q.cols())
        throw InputError("adjust_gradient: shape mismatch");
    RowMatrix<double> out(g_q.rows(), g_q.cols());
    for (Index r = 0; r < g_q.rows(); ++r)
        for (Index c = 0; c < g_q.cols(); ++c) {
            const double g = g_q(r, c);
            const double err = static_cast<double>(x_n(r, c)) - static_cast<double>(x_q(r, c));
            const double sign = g >= 0.0 ? 1.0 : -1.0;
            out(r, c) = g * (1.0 + delta * sign * err);
        }
    return out;
}

using HessianVectorProduct = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// (1/m) sum_k v_k^T H v_k with Rademacher probes v_k.
double hutchinson_trace(const HessianVectorProduct& hvp, Index dim, int probes, Rng& rng);

/// delta = (trace / N) / G with N = grad.size() and G = mean |grad| (floored
/// at 1e-12). Both ratios are smoothed with config.delta_decay before the
/// division and the result is clamped to [delta_lo, delta_hi].
double update_delta(DeltaState& state, double trace_estimate, const Eigen::Ref<const Eigen::VectorXd>& grad,
                    const GsteConfig& config);

}  // namespace hqgnn
