#include "hqgnn/quantizer.hpp"

#include "hqgnn/random.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <sstream>

using namespace hqgnn;

TEST(QuantParams, DerivedDelta) {
    const auto p = QuantParams::make(-1, 1, 8);
    EXPECT_DOUBLE_EQ(p.delta, 2.0 / 255.0);
    EXPECT_EQ(p.max_code(), 255);
    EXPECT_THROW(QuantParams::make(1, 1, 2), InputError);
    EXPECT_THROW(QuantParams::make(0, 1, 0), InputError);
    EXPECT_THROW(QuantParams::make(0, 1, 17), InputError);
}

TEST(Normalize, Examples) {
    EXPECT_DOUBLE_EQ(normalize(1.4, QuantParams::make(0, 3, 2)), 1.4);
    EXPECT_DOUBLE_EQ(normalize(0.3, QuantParams::make(-1, 1, 1)), 0.65);
    EXPECT_DOUBLE_EQ(normalize(5.0, QuantParams::make(0, 3, 2)), 3.0);
    EXPECT_DOUBLE_EQ(normalize(-5.0, QuantParams::make(0, 3, 2)), 0.0);
}

TEST(Normalize, RejectsNonFinite) {
    const auto p = QuantParams::make(0, 1, 2);
    EXPECT_THROW(normalize(std::numeric_limits<double>::quiet_NaN(), p), InputError);
    RowMatrix<double> m = RowMatrix<double>::Zero(2, 2);
    m(1, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(normalize(m, p), InputError);
}

TEST(Quantize, NearestWithTiesAwayFromZero) {
    EXPECT_EQ(quantize(0.65), 1);
    EXPECT_EQ(quantize(1.5), 2);
    EXPECT_EQ(quantize(0.49), 0);
    EXPECT_EQ(quantize(0.5), 1);
    EXPECT_EQ(quantize(2.5), 3);
}

TEST(Dequantize, AffineAndLiteral) {
    const auto p = QuantParams::make(0, 3, 2);
    EXPECT_DOUBLE_EQ(dequantize(1, p), 1.0);
    EXPECT_DOUBLE_EQ(dequantize(1, p, DequantMode::literal), 1.0);
    const auto q = QuantParams::make(-1, 1, 1);
    EXPECT_DOUBLE_EQ(dequantize(1, q), 1.0);
    EXPECT_DOUBLE_EQ(dequantize(1, q, DequantMode::literal), 2.0);
    EXPECT_THROW(dequantize(2, q), InputError);
    EXPECT_THROW(dequantize(-1, q), InputError);
}

TEST(Dequantize, RoundTripWithinHalfStep) {
    const auto p = QuantParams::make(-1, 1, 8);
    const double back = dequantize(quantize(normalize(0.3, p)), p);
    EXPECT_LE(std::abs(back - 0.3), p.delta / 2);
    EXPECT_NEAR(p.delta / 2, 0.00392, 1e-5);
}

TEST(Quantizer, ReconstructionBoundProperty) {
    Rng rng(17);
    for (int trial = 0; trial < 20000; ++trial) {
        const int bits = std::array{1, 2, 3, 4, 8}[rng.uniform_index(5)];
        const double l = rng.uniform(-5, 5);
        const double u = l + rng.uniform(1e-3, 10);
        const auto p = QuantParams::make(l, u, bits);
        const double x = rng.uniform(l, u);
        const double xn = normalize(x, p);
        const auto code = quantize(xn);
        ASSERT_LE(std::abs(xn - code), 0.5);
        ASSERT_LE(std::abs(dequantize(code, p) - x), p.delta / 2 * (1 + 1e-9)) << "l=" << l << " u=" << u;
    }
}

TEST(Quantizer, Monotone) {
    Rng rng(19);
    const auto p = QuantParams::make(-0.7, 1.3, 3);
    for (int trial = 0; trial < 5000; ++trial) {
        double x = rng.uniform(p.l, p.u), y = rng.uniform(p.l, p.u);
        if (x > y) std::swap(x, y);
        ASSERT_LE(quantize(normalize(x, p)), quantize(normalize(y, p)));
    }
}

TEST(UpdateThresholds, FirstBatchInitializes) {
    QuantizerState s(1, 0.9);
    const auto p = update_thresholds(s, RowMatrix<double>{{-2.0, 0.0, 2.0}});
    EXPECT_TRUE(s.initialized);
    EXPECT_DOUBLE_EQ(p.l, -2);
    EXPECT_DOUBLE_EQ(p.u, 2);
    EXPECT_DOUBLE_EQ(p.delta, 4);
}

TEST(UpdateThresholds, EmaStep) {
    QuantizerState s(1, 0.9);
    update_thresholds(s, RowMatrix<double>{{-2.0, 2.0}});
    const auto p = update_thresholds(s, RowMatrix<double>{{-2.0, 4.0}});
    EXPECT_NEAR(p.u, 2.2, 1e-15);
    EXPECT_NEAR(p.l, -2.0, 1e-15);
}

TEST(UpdateThresholds, DegenerateBatchIsWidened) {
    QuantizerState s(2, 0.99);
    const auto p = update_thresholds(s, RowMatrix<double>::Constant(3, 3, 0.5));
    EXPECT_DOUBLE_EQ(p.l, 0.5);
    EXPECT_DOUBLE_EQ(p.u, 0.5 + 1e-8);
    EXPECT_GT(p.u, p.l);
}

TEST(UpdateThresholds, EmptyBatch) {
    QuantizerState s(2, 0.99);
    EXPECT_THROW(update_thresholds(s, RowMatrix<double>(0, 3)), InputError);
}

TEST(QuantizeTable, ConstantZeros) {
    const auto t = quantize_table(RowMatrix<double>::Zero(3, 4), QuantParams::make(-1, 1, 1));
    EXPECT_TRUE((t.codes.array() == 1).all());
    for (Index r = 0; r < 3; ++r) EXPECT_EQ(t.row_sums(r), 4);
}

TEST(QuantizeTable, Endpoints) {
    for (int bits : {1, 2, 5, 8, 12, 16}) {
        const auto p = QuantParams::make(-0.3, 0.9, bits);
        const auto t = quantize_table(RowMatrix<double>{{p.l, p.u}}, p);
        EXPECT_EQ(t.codes(0, 0), 0);
        EXPECT_EQ(t.codes(0, 1), p.max_code());
    }
}

TEST(QuantizeTable, MatchesScalarOracle) {
    Rng rng(23);
    RowMatrix<double> m(4, 8);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.5, 1.5);
    const auto p = QuantParams::make(-1, 1, 3);
    const auto t = quantize_table(m, p);
    for (Index r = 0; r < 4; ++r) {
        std::int64_t sum = 0;
        for (Index c = 0; c < 8; ++c) {
            const double clipped = std::min(std::max(m(r, c), -1.0), 1.0);
            const double xn = (clipped + 1.0) / (2.0 / 7.0);
            const auto code = static_cast<std::int32_t>(xn < 0 ? -std::floor(-xn + 0.5) : std::floor(xn + 0.5));
            EXPECT_EQ(t.codes(r, c), code);
            sum += code;
        }
        EXPECT_EQ(t.row_sums(r), sum);
    }
}

TEST(QuantizeTable, IdempotentOnRepresentableValues) {
    Rng rng(29);
    for (int bits : {1, 2, 4, 8}) {
        RowMatrix<double> m(6, 9);
        for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-2, 2);
        const auto p = QuantParams::make(-1.2, 1.7, bits);
        const auto once = quantize_table(m, p);
        const auto twice = quantize_table(once.dequantized(), p);
        EXPECT_EQ(once.codes, twice.codes) << "bits=" << bits;
    }
}

namespace {

QuantizedTable random_codes(Index rows, Index dim, int bits, Rng& rng) {
    CodeMatrix c(rows, dim);
    const auto p = QuantParams::make(-0.25, 0.75, bits);
    for (Index i = 0; i < c.size(); ++i)
        c.data()[i] = static_cast<std::int32_t>(rng.uniform_index(static_cast<std::uint64_t>(p.max_code()) + 1));
    return make_quantized_table(std::move(c), p);
}

}  // namespace

TEST(CodeIo, RoundTripAcrossWidths) {
    Rng rng(31);
    for (int bits : {1, 2, 7, 8, 9, 16}) {
        for (Index dim : {1, 7, 8, 13, 64}) {
            const auto t = random_codes(5, dim, bits, rng);
            std::stringstream buf;
            write_codes(buf, t);
            const auto back = read_codes(buf);
            EXPECT_EQ(back.codes, t.codes);
            EXPECT_EQ(back.row_sums, t.row_sums);
            EXPECT_EQ(back.params, t.params);
        }
    }
}

TEST(CodeIo, OneBitCodesArePacked) {
    CodeMatrix c(2, 10);
    c << 1, 0, 0, 0, 0, 0, 0, 1, 1, 0,  //
        0, 1, 0, 0, 0, 0, 0, 0, 0, 1;
    const auto t = make_quantized_table(c, QuantParams::make(-1, 1, 1));
    std::stringstream buf;
    write_codes(buf, t);
    const std::string bytes = buf.str();
    const std::size_t header = 4 + 4 + 8 + 4 + 1 + 24;
    ASSERT_EQ(bytes.size(), header + 2 * 2 + 2 * 4);
    EXPECT_EQ(static_cast<unsigned char>(bytes[header]), 0x81);
    EXPECT_EQ(static_cast<unsigned char>(bytes[header + 1]), 0x01);
    EXPECT_EQ(static_cast<unsigned char>(bytes[header + 2]), 0x02);
    EXPECT_EQ(static_cast<unsigned char>(bytes[header + 3]), 0x02);
    EXPECT_EQ(static_cast<unsigned char>(bytes[header + 4]), 3);  // row sum of row 0
}

TEST(CodeIo, RejectsCorruption) {
    Rng rng(37);
    const auto t = random_codes(3, 4, 4, rng);
    std::stringstream buf;
    write_codes(buf, t);
    std::string bytes = buf.str();

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream a(bad_magic);
    EXPECT_THROW(read_codes(a), FormatError);

    std::string bad_sum = bytes;
    bad_sum[bad_sum.size() - 4] ^= 1;
    std::stringstream b(bad_sum);
    EXPECT_THROW(read_codes(b), FormatError);

    std::stringstream c(bytes.substr(0, bytes.size() - 1));
    EXPECT_THROW(read_codes(c), FormatError);
}
