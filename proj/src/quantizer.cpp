#include "hqgnn/quantizer.hpp"

namespace hqgnn {

QuantParams QuantParams::make(double l, double u, int bits) {
    if (bits < 1 || bits > kMaxBits)
        throw InputError("bit-width " + std::to_string(bits) + " outside [1, " + std::to_string(kMaxBits) + "]");
    if (!std::isfinite(l) || !std::isfinite(u) || !(u > l))
        throw InputError("quantization bounds require u > l");
    QuantParams p;
    p.l = l;
    p.u = u;
    p.bits = bits;
    p.delta = (u - l) / static_cast<double>(p.max_code());
    return p;
}

void QuantParams::validate() const {
    const auto expected = make(l, u, bits);
    if (expected.delta != delta) throw InputError("quantization delta inconsistent with bounds");
}

QuantizerState::QuantizerState(int bits, double decay_) : params(QuantParams::make(0.0, 1.0, bits)), decay(decay_) {
    if (!(decay > 0.0 && decay < 1.0)) throw InputError("EMA decay must lie in (0, 1)");
}

QuantParams update_thresholds(QuantizerState& state, const Eigen::Ref<const RowMatrix<double>>& batch) {
    if (batch.size() == 0) throw InputError("empty batch for threshold update");
    if (!batch.allFinite()) throw InputError("non-finite value in threshold batch");
    const double lo = batch.minCoeff();
    const double hi = batch.maxCoeff();
    if (!state.initialized) {
        state.running_min = lo;
        state.running_max = hi;
        state.initialized = true;
    } else {
        state.running_min = state.decay * state.running_min + (1.0 - state.decay) * lo;
        state.running_max = state.decay * state.running_max + (1.0 - state.decay) * hi;
    }
    double u = state.running_max;
    if (!(u > state.running_min)) u = state.running_min + 1e-8;
    state.params = QuantParams::make(state.running_min, u, state.params.bits);
    return state.params;
}

void QuantizedTable::validate() const {
    params.validate();
    if (codes.size() > 0 && (codes.minCoeff() < 0 || codes.maxCoeff() > params.max_code()))
        throw FormatError("code outside [0, " + std::to_string(params.max_code()) + "]");
    if (row_sums.size() != codes.rows()) throw FormatError("row sum count does not match rows");
    for (Index r = 0; r < codes.rows(); ++r)
        if (codes.row(r).cast<std::int64_t>().sum() != row_sums(r))
            throw FormatError("row sum mismatch at row " + std::to_string(r));
}

QuantizedTable make_quantized_table(CodeMatrix codes, const QuantParams& params) {
    QuantizedTable t;
    t.row_sums = codes.cast<std::int64_t>().rowwise().sum();
    t.codes = std::move(codes);
    t.params = params;
    return t;
}

}  // namespace hqgnn
