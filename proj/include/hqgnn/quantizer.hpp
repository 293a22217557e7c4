#pragma once

#include "hqgnn/encoder.hpp"
#include "hqgnn/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

namespace hqgnn {

using CodeMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CodeSums = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Uniform b-bit quantization interval [l, u] with step (u - l) / (2^b - 1).
struct QuantParams {
    double l = 0.0;
    double u = 1.0;
    int bits = 1;
    double delta = 1.0;

    static constexpr int kMaxBits = 16;

    /// Validated construction; delta is derived.
    static QuantParams make(double l, double u, int bits);

    std::int32_t max_code() const { return (std::int32_t{1} << bits) - 1; }

    /// Throws InputError unless u > l, bits in [1, 16] and delta consistent.
    void validate() const;

    friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

enum class DequantMode {
    affine,   // code * delta + l, reconstructs values in [l, u]
    literal,  // code * delta, the post-scale without the offset
};

/// (clip(x, l, u) - l) / delta, element-wise. Output lies in [0, 2^b - 1].
inline double normalize(double x, const QuantParams& p) {
    if (!std::isfinite(x)) throw InputError("non-finite value in quantizer input");
    return (std::min(std::max(x, p.l), p.u) - p.l) / p.delta;
}

template <typename Derived>
RowMatrix<double> normalize(const Eigen::MatrixBase<Derived>& x, const QuantParams& p) {
    if (!x.allFinite()) throw InputError("non-finite value in quantizer input");
    return ((x.derived().array().max(p.l).min(p.u) - p.l) / p.delta).matrix();
}

/// Nearest integer, halves away from zero.
inline std::int32_t quantize(double normalized) { return static_cast<std::int32_t>(std::round(normalized)); }

template <typename Derived>
CodeMatrix quantize(const Eigen::MatrixBase<Derived>& normalized) {
    return normalized.derived().unaryExpr([](double v) { return quantize(v); });
}

inline double dequantize(std::int32_t code, const QuantParams& p, DequantMode mode = DequantMode::affine) {
    if (code < 0 || code > p.max_code())
        throw InputError("code " + std::to_string(code) + " outside [0, " + std::to_string(p.max_code()) + "]");
    const double scaled = static_cast<double>(code) * p.delta;
    return mode == DequantMode::affine ? scaled + p.l : scaled;
}

template <typename Derived>
RowMatrix<double> dequantize(const Eigen::MatrixBase<Derived>& codes, const QuantParams& p,
                             DequantMode mode = DequantMode::affine) {
    if (codes.size() > 0 && (codes.minCoeff() < 0 || codes.maxCoeff() > p.max_code()))
        throw InputError("code outside [0, " + std::to_string(p.max_code()) + "]");
    RowMatrix<double> out = codes.derived().template cast<double>() * p.delta;
    if (mode == DequantMode::affine) out.array() += p.l;
    return out;
}

/// Clipping bounds tracked by an exponential moving average of batch extrema.
struct QuantizerState {
    QuantParams params;
    double decay = 0.99;
    bool initialized = false;
    double running_min = 0.0;
    double running_max = 0.0;

    explicit QuantizerState(int bits = 1, double decay = 0.99);
};

/// Degenerate ranges are widened to [l, l + 1e-8].
QuantParams update_thresholds(QuantizerState& state, const Eigen::Ref<const RowMatrix<double>>& batch);

/// Integer codes for a whole table under one shared parameter set.
struct QuantizedTable {
    CodeMatrix codes;
    QuantParams params;
    CodeSums row_sums;

    Index rows() const { return codes.rows(); }
    Index dim() const { return codes.cols(); }

    /// Throws FormatError if a code is out of range or a row sum disagrees.
    void validate() const;

    RowMatrix<double> dequantized(DequantMode mode = DequantMode::affine) const {
        return dequantize(codes, params, mode);
    }
};

QuantizedTable make_quantized_table(CodeMatrix codes, const QuantParams& params);

template <typename Derived>
QuantizedTable quantize_table(const Eigen::MatrixBase<Derived>& table, const QuantParams& params) {
    params.validate();
    return make_quantized_table(quantize(normalize(table, params)), params);
}

/// "HQCD" binary: magic, version u32, rows u64, dim u32, bits u8, l/u/delta
/// f64, then codes and u32 row sums. 1-bit codes are packed LSB-first, eight
/// per byte, each row padded to a whole byte; 2..8 bits take one byte per
/// code and 9..16 bits two bytes.
void write_codes(std::ostream& out, const QuantizedTable& table);
QuantizedTable read_codes(std::istream& in);
void write_codes(const std::filesystem::path& path, const QuantizedTable& table);
QuantizedTable read_codes(const std::filesystem::path& path);

}  // namespace hqgnn
