#include "hqgnn/encoder.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace hqgnn;
using fixtures::random_interactions;
using fixtures::random_table;

TEST(Propagate, SingleEdgeSwaps) {
    const auto g = build_graph({{{0, 0}}, 1, 1});
    EmbeddingTable t(RowMatrix<double>{{1.0, 2.0}}, RowMatrix<double>{{3.0, 4.0}});
    const auto stack = propagate(g, t, 1);
    ASSERT_EQ(stack.size(), 2u);
    EXPECT_EQ(stack[1].users, t.items);
    EXPECT_EQ(stack[1].items, t.users);
}

TEST(Propagate, IsolatedNodesBecomeZero) {
    const auto g = build_graph({{{0, 0}}, 2, 2});
    Rng rng(1);
    const auto t = random_table(2, 2, 3, rng);
    const auto stack = propagate(g, t, 3);
    for (std::size_t l = 1; l < stack.size(); ++l) {
        EXPECT_TRUE(stack[l].users.row(1).isZero(0));
        EXPECT_TRUE(stack[l].items.row(1).isZero(0));
    }
}

TEST(Propagate, MatchesDenseMatrixPower) {
    Rng rng(3);
    const InteractionSet set{{{0, 0}, {0, 2}, {1, 1}, {2, 0}, {2, 1}}, 3, 3};
    const auto g = build_graph(set);
    const auto t = random_table(3, 3, 4, rng);
    const Eigen::MatrixXd a = fixtures::dense_adjacency(set);
    const Eigen::MatrixXd x0 = fixtures::stacked(t);
    const auto stack = propagate(g, t, 2);
    EXPECT_LE((fixtures::stacked(stack[1]) - a * x0).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((fixtures::stacked(stack[2]) - a * (a * x0)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Propagate, DimensionMismatch) {
    const auto g = build_graph({{{0, 0}}, 1, 1});
    EXPECT_THROW(propagate(g, EmbeddingTable(2, 1, 3), 1), InputError);
    EXPECT_THROW(propagate(g, EmbeddingTable(1, 1, 3), -1), InputError);
}

TEST(Propagate, Linearity) {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto set = random_interactions(8, 6, 0.4, rng);
        const auto g = build_graph(set);
        const auto x = random_table(8, 6, 3, rng);
        const auto z = random_table(8, 6, 3, rng);
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        const auto lhs = encode(g, a * x + b * z, 2);
        const auto rhs = a * encode(g, x, 2) + b * encode(g, z, 2);
        EXPECT_LE((fixtures::stacked(lhs) - fixtures::stacked(rhs)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Pool, ZeroLayersIsIdentity) {
    Rng rng(2);
    const auto t = random_table(3, 4, 2, rng);
    const auto g = build_graph(random_interactions(3, 4, 0.5, rng));
    const auto p = encode(g, t, 0);
    EXPECT_EQ(p.users, t.users);
    EXPECT_EQ(p.items, t.items);
}

TEST(Pool, SingleEdgeTwoLayerMean) {
    const auto g = build_graph({{{0, 0}}, 1, 1});
    EmbeddingTable t(RowMatrix<double>{{1.0}}, RowMatrix<double>{{3.0}});
    const auto p = encode(g, t, 1);
    EXPECT_DOUBLE_EQ(p.users(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(p.items(0, 0), 2.0);
}

TEST(Pool, PerEntryMean) {
    Rng rng(4);
    LayerStack stack;
    for (int l = 0; l < 4; ++l) stack.push_back(random_table(3, 2, 5, rng));
    const auto p = pool(stack);
    for (Index r = 0; r < 3; ++r)
        for (Index c = 0; c < 5; ++c) {
            double s = 0;
            for (const auto& layer : stack) s += layer.users(r, c);
            EXPECT_NEAR(p.users(r, c), s / 4.0, 1e-15);
        }
}

TEST(Pool, ZerosStayZero) {
    Rng rng(6);
    const auto g = build_graph(random_interactions(5, 5, 0.5, rng));
    EXPECT_TRUE(fixtures::stacked(encode(g, EmbeddingTable(5, 5, 3), 3)).isZero(0));
}

TEST(PoolAdjoint, ZeroLayersPassesThrough) {
    Rng rng(7);
    const auto g = build_graph(random_interactions(4, 3, 0.5, rng));
    const auto y = random_table(4, 3, 2, rng);
    const auto x = pool_adjoint(g, y, 0);
    EXPECT_EQ(x.users, y.users);
    EXPECT_EQ(x.items, y.items);
}

TEST(PoolAdjoint, DotProductIdentity) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = build_graph(random_interactions(5, 5, 0.4, rng));
        const int layers = static_cast<int>(rng.uniform_index(4));
        const auto x = random_table(5, 5, 3, rng);
        const auto y = random_table(5, 5, 3, rng);
        const double lhs = inner(encode(g, x, layers), y);
        const double rhs = inner(x, pool_adjoint(g, y, layers));
        EXPECT_LE(fixtures::rel_err(lhs, rhs), 1e-10);
    }
}

TEST(PoolAdjoint, MatchesCentralDifferences) {
    Rng rng(10);
    const auto g = build_graph(random_interactions(4, 5, 0.5, rng));
    const auto x = random_table(4, 5, 2, rng);
    const auto y = random_table(4, 5, 2, rng);
    const auto adj = pool_adjoint(g, y, 2);
    const double h = 1e-5;
    for (Index r = 0; r < 4; ++r)
        for (Index c = 0; c < 2; ++c) {
            auto plus = x, minus = x;
            plus.users(r, c) += h;
            minus.users(r, c) -= h;
            const double fd = (inner(encode(g, plus, 2), y) - inner(encode(g, minus, 2), y)) / (2 * h);
            if (std::abs(adj.users(r, c)) > 1e-8) EXPECT_LE(fixtures::rel_err(fd, adj.users(r, c)), 1e-5);
            else EXPECT_NEAR(fd, 0.0, 1e-8);
        }
    for (Index r = 0; r < 5; ++r) {
        auto plus = x, minus = x;
        plus.items(r, 1) += h;
        minus.items(r, 1) -= h;
        const double fd = (inner(encode(g, plus, 2), y) - inner(encode(g, minus, 2), y)) / (2 * h);
        if (std::abs(adj.items(r, 1)) > 1e-8) EXPECT_LE(fixtures::rel_err(fd, adj.items(r, 1)), 1e-5);
        else EXPECT_NEAR(fd, 0.0, 1e-8);
    }
}

TEST(EmbeddingIo, BitExactRoundTrip) {
    Rng rng(12);
    RowMatrix<double> m(7, 5);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * 1e3;
    m(0, 0) = -0.0;
    m(1, 1) = 5e-324;
    std::stringstream buf;
    write_embeddings(buf, m);
    const auto back = read_embeddings(buf);
    ASSERT_EQ(back.rows(), 7);
    ASSERT_EQ(back.cols(), 5);
    EXPECT_EQ(std::memcmp(back.data(), m.data(), sizeof(double) * 35), 0);
}

TEST(EmbeddingIo, HeaderLayout) {
    std::stringstream buf;
    write_embeddings(buf, RowMatrix<double>::Zero(2, 3));
    const std::string bytes = buf.str();
    ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 4 + 4 + 6 * 8);
    EXPECT_EQ(bytes.substr(0, 4), "HQEM");
    EXPECT_EQ(bytes[4], 1);   // version
    EXPECT_EQ(bytes[8], 2);   // rows
    EXPECT_EQ(bytes[16], 3);  // dim
}

TEST(EmbeddingIo, RejectsBadMagicAndTruncation) {
    std::stringstream bad("HQXX0000");
    EXPECT_THROW(read_embeddings(bad), FormatError);
    std::stringstream buf;
    write_embeddings(buf, RowMatrix<double>::Ones(3, 3));
    std::stringstream cut(buf.str().substr(0, buf.str().size() - 4));
    EXPECT_THROW(read_embeddings(cut), FormatError);
}

TEST(InitEmbeddings, SeededNormal) {
    Rng a(5), b(5);
    const auto x = init_embeddings(50, 60, 16, a);
    const auto y = init_embeddings(50, 60, 16, b);
    EXPECT_EQ(x.users, y.users);
    const double sd = std::sqrt(x.items.array().square().mean());
    EXPECT_NEAR(sd, 0.1, 0.01);
}
