#include "hqgnn/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <chrono>
#include <numeric>

namespace hqgnn {

std::vector<std::uint64_t> pack_bits(const CodeRow& row) {
    std::vector<std::uint64_t> words(static_cast<std::size_t>((row.size() + 63) / 64), 0);
    for (Index c = 0; c < row.size(); ++c)
        if (row(c)) words[static_cast<std::size_t>(c / 64)] |= std::uint64_t{1} << (c % 64);
    return words;
}

std::int64_t packed_dot(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    std::int64_t acc = 0;
    for (std::size_t w = 0; w < a.size(); ++w) acc += std::popcount(a[w] & b[w]);
    return acc;
}

CodeIndex::CodeIndex(QuantizedTable items, const QuantParams& user_params)
    : items_(std::move(items)), user_params_(user_params) {
    items_.validate();
    user_params_.validate();
    if (items_.params.bits == 1) {
        words_per_row_ = (items_.dim() + 63) / 64;
        packed_.reserve(static_cast<std::size_t>(words_per_row_ * items_.rows()));
        for (Index r = 0; r < items_.rows(); ++r) {
            const auto words = pack_bits(items_.codes.row(r));
            packed_.insert(packed_.end(), words.begin(), words.end());
        }
    } else if (items_.params.bits <= 8) {
        narrow_ = items_.codes.cast<std::uint8_t>();
    }
}

void CodeIndex::dots(const CodeRow& user, Eigen::Ref<Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>> out) const {
    if (user.size() != dim()) throw InputError("query has dimension " + std::to_string(user.size()) +
                                               ", index has " + std::to_string(dim()));
    if (out.size() != num_items()) throw InputError("output size does not match item count");
    const Index d = dim();
    if (items_.params.bits == 1 && user_params_.bits == 1) {
        const auto q = pack_bits(user);
        const auto wpr = static_cast<std::size_t>(words_per_row_);
        for (Index r = 0; r < num_items(); ++r)
            out(r) = packed_dot(q, std::span(packed_).subspan(static_cast<std::size_t>(r) * wpr, wpr));
    } else if (narrow_.size() > 0 && d < (Index{1} << 15)) {
        // 8-bit products summed over fewer than 2^15 terms fit in 32 bits
        for (Index r = 0; r < num_items(); ++r) {
            const std::uint8_t* row = narrow_.data() + r * d;
            std::int32_t acc = 0;
            for (Index c = 0; c < d; ++c) acc += static_cast<std::int32_t>(row[c]) * user(c);
            out(r) = acc;
        }
    } else {
        for (Index r = 0; r < num_items(); ++r) {
            std::int64_t acc = 0;
            for (Index c = 0; c < d; ++c)
                acc += static_cast<std::int64_t>(items_.codes(r, c)) * static_cast<std::int64_t>(user(c));
            out(r) = acc;
        }
    }
}

Eigen::VectorXd score_all(const CodeRow& user, std::int64_t user_sum, const CodeIndex& index) {
    const auto& pu = index.user_params();
    const auto& pi = index.item_params();
    if (user.size() > 0 && (user.minCoeff() < 0 || user.maxCoeff() > pu.max_code()))
        throw InputError("user code outside [0, " + std::to_string(pu.max_code()) + "]");
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> dots(index.num_items());
    index.dots(user, dots);
    const double dd = pu.delta * pi.delta;
    const double user_term = pi.l * pu.delta * static_cast<double>(user_sum) +
                             static_cast<double>(index.dim()) * pu.l * pi.l;
    const double item_coef = pu.l * pi.delta;
    const auto& sums = index.items().row_sums;
    Eigen::VectorXd scores(index.num_items());
    for (Index r = 0; r < index.num_items(); ++r)
        scores(r) = dd * static_cast<double>(dots(r)) + item_coef * static_cast<double>(sums(r)) + user_term;
    return scores;
}

Eigen::VectorXd score_all_dequantized(const CodeRow& user, const QuantParams& user_params,
                                      const RowMatrix<double>& item_values) {
    if (user.size() != item_values.cols()) throw InputError("query dimension mismatch");
    const Eigen::VectorXd q = dequantize(user, user_params).transpose();
    return item_values * q;
}

TopK topk(const Eigen::Ref<const Eigen::VectorXd>& scores, Index k, std::span<const Index> mask) {
    if (k < 1) throw InputError("k must be at least 1");
    std::vector<char> masked(static_cast<std::size_t>(scores.size()), 0);
    for (Index m : mask)
        if (m >= 0 && m < scores.size()) masked[static_cast<std::size_t>(m)] = 1;
    std::vector<Index> candidates;
    candidates.reserve(static_cast<std::size_t>(scores.size()));
    for (Index i = 0; i < scores.size(); ++i)
        if (!masked[static_cast<std::size_t>(i)]) candidates.push_back(i);

    const auto better = [&](Index a, Index b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    };
    TopK out;
    out.truncated = static_cast<Index>(candidates.size()) < k;
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      better);
    out.items.reserve(take);
    for (std::size_t p = 0; p < take; ++p) out.items.push_back({candidates[p], scores(candidates[p])});
    return out;
}

bool rankings_equivalent(const TopK& a, const TopK& b, const Eigen::Ref<const Eigen::VectorXd>& reference,
                         double tol) {
    if (a.items.size() != b.items.size()) return false;
    for (std::size_t p = 0; p < a.items.size(); ++p) {
        const Index x = a.items[p].item;
        const Index y = b.items[p].item;
        if (x != y && std::abs(reference(x) - reference(y)) > tol) return false;
    }
    return true;
}

namespace {

LatencySummary summarize(std::vector<double> us) {
    LatencySummary s;
    if (us.empty()) return s;
    std::sort(us.begin(), us.end());
    const auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(us.size()))) - 1;
        return us[std::min(idx, us.size() - 1)];
    };
    s.p50_us = at(0.50);
    s.p90_us = at(0.90);
    s.p99_us = at(0.99);
    s.mean_us = std::accumulate(us.begin(), us.end(), 0.0) / static_cast<double>(us.size());
    return s;
}

}  // namespace

BenchReport bench(const CodeIndex& index, const QuantizedTable& users, std::span<const Index> queries, Index k,
                  int repetitions) {
    BenchReport report;
    report.k = k;
    if (repetitions <= 0 || queries.empty()) return report;
    report.repetitions = repetitions;
    report.queries = static_cast<Index>(queries.size());

    const RowMatrix<double> item_values = index.items().dequantized();
    const double tol = 1e-9 * static_cast<double>(index.dim());
    for (Index u : queries) {
        const CodeRow row = users.codes.row(u);
        const Eigen::VectorXd exact = score_all(row, users.row_sums(u), index);
        const Eigen::VectorXd approx = score_all_dequantized(row, users.params, item_values);
        if (!rankings_equivalent(topk(exact, k), topk(approx, k), exact, tol)) report.lists_match = false;
    }

    using clock = std::chrono::steady_clock;
    std::vector<double> int_us, float_us;
    volatile std::size_t sink = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (Index u : queries) {
            const CodeRow row = users.codes.row(u);
            auto t0 = clock::now();
            sink = sink + topk(score_all(row, users.row_sums(u), index), k).items.size();
            auto t1 = clock::now();
            sink = sink + topk(score_all_dequantized(row, users.params, item_values), k).items.size();
            auto t2 = clock::now();
            int_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
            float_us.push_back(std::chrono::duration<double, std::micro>(t2 - t1).count());
        }
    }
    report.integer_path = summarize(std::move(int_us));
    report.float_path = summarize(std::move(float_us));
    return report;
}

}  // namespace hqgnn
