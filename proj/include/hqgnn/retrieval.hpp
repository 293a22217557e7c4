#pragma once

#include "hqgnn/quantizer.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace hqgnn {

using CodeRow = Eigen::Matrix<std::int32_t, 1, Eigen::Dynamic>;

/// Item codes prepared for integer-only scoring against user codes quantized
/// with `user_params`.
class CodeIndex {
public:
    CodeIndex(QuantizedTable items, const QuantParams& user_params);

    const QuantizedTable& items() const { return items_; }
    const QuantParams& user_params() const { return user_params_; }
    const QuantParams& item_params() const { return items_.params; }
    Index dim() const { return items_.dim(); }
    Index num_items() const { return items_.rows(); }

    /// Integer dot products of one user code row against every item.
    void dots(const CodeRow& user, Eigen::Ref<Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>> out) const;

private:
    QuantizedTable items_;
    QuantParams user_params_;
    Index words_per_row_ = 0;
    std::vector<std::uint64_t> packed_;  // 1-bit codes, 64 per word
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> narrow_;  // 2..8 bits
};

/// Packs a 0/1 code row into 64-bit words, LSB first.
std::vector<std::uint64_t> pack_bits(const CodeRow& row);
/// Popcount of the AND of two packed rows.
std::int64_t packed_dot(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Scores every item from integers only, using the affine expansion
///   du*di*<cu,ci> + lu*di*sum(ci) + li*du*sum(cu) + d*lu*li.
Eigen::VectorXd score_all(const CodeRow& user, std::int64_t user_sum, const CodeIndex& index);
inline Eigen::VectorXd score_all(const CodeRow& user, const CodeIndex& index) {
    return score_all(user, user.cast<std::int64_t>().sum(), index);
}

/// Reference path: dequantize both sides and take float inner products.
/// `item_values` is the affine-dequantized item table.
Eigen::VectorXd score_all_dequantized(const CodeRow& user, const QuantParams& user_params,
                                      const RowMatrix<double>& item_values);

struct Ranked {
    Index item = 0;
    double score = 0.0;

    friend bool operator==(const Ranked&, const Ranked&) = default;
};

struct TopK {
    std::vector<Ranked> items;
    /// Fewer than k unmasked items were available.
    bool truncated = false;
};

/// Highest k unmasked scores, descending, ties by ascending item id.
TopK topk(const Eigen::Ref<const Eigen::VectorXd>& scores, Index k, std::span<const Index> mask = {});

/// Two rankings agree under the tie rule when, position by position, the
/// items are the same or their reference scores differ by at most `tol`.
bool rankings_equivalent(const TopK& a, const TopK& b, const Eigen::Ref<const Eigen::VectorXd>& reference,
                         double tol);

struct LatencySummary {
    double p50_us = 0.0;
    double p90_us = 0.0;
    double p99_us = 0.0;
    double mean_us = 0.0;
};

struct BenchReport {
    int repetitions = 0;
    Index queries = 0;
    Index k = 0;
    bool lists_match = true;
    LatencySummary integer_path;
    LatencySummary float_path;

    bool empty() const { return repetitions == 0; }
};

/// Times score_all+topk for the integer and the dequantized float path over
/// the given user rows. Both paths are first checked to return equivalent
/// top-k lists for every query.
BenchReport bench(const CodeIndex& index, const QuantizedTable& users, std::span<const Index> queries, Index k,
                  int repetitions);

}  // namespace hqgnn
