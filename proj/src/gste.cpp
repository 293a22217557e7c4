#include "hqgnn/gste.hpp"

#include <algorithm>
#include <cmath>

namespace hqgnn {

void GsteConfig::validate() const {
    if (probes_per_batch < 1) throw InputError("probes_per_batch must be at least 1");
    if (!(delta_decay >= 0.0 && delta_decay < 1.0)) throw InputError("delta_decay must lie in [0, 1)");
    if (delta_lo < 0.0 || delta_hi > 2.0 || delta_lo > delta_hi)
        throw InputError("delta clamp must satisfy 0 <= lo <= hi <= 2");
}

double hutchinson_trace(const HessianVectorProduct& hvp, Index dim, int probes, Rng& rng) {
    if (probes < 1) throw InputError("hutchinson_trace needs at least one probe");
    double acc = 0.0;
    Eigen::VectorXd v(dim);
    for (int k = 0; k < probes; ++k) {
        for (Index i = 0; i < dim; ++i) v(i) = rng.rademacher();
        acc += v.dot(hvp(v));
    }
    return acc / probes;
}

double update_delta(DeltaState& state, double trace_estimate, const Eigen::Ref<const Eigen::VectorXd>& grad,
                    const GsteConfig& config) {
    if (grad.size() == 0) throw InputError("update_delta needs a non-empty gradient");
    state.n_diag = grad.size();
    const double avg_trace = trace_estimate / static_cast<double>(grad.size());
    const double grad_mag = grad.cwiseAbs().mean();
    if (!state.initialized) {
        state.trace_ema = avg_trace;
        state.grad_mag_ema = grad_mag;
        state.initialized = true;
    } else {
        const double a = config.delta_decay;
        state.trace_ema = a * state.trace_ema + (1.0 - a) * avg_trace;
        state.grad_mag_ema = a * state.grad_mag_ema + (1.0 - a) * grad_mag;
    }
    const double raw = state.trace_ema / std::max(state.grad_mag_ema, 1e-12);
    state.delta = std::isfinite(raw) ? std::clamp(raw, config.delta_lo, config.delta_hi) : config.delta_lo;
    return state.delta;
}

}  // namespace hqgnn
