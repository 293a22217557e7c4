#include "commands.hpp"

#include "hqgnn/quantizer.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using hqgnn::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (const auto eq = line.find('='); eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    return kv;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hqgnn_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

// One small training run shared by the tests below.
class TrainedRun : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = scratch("trained");
        result_ = call({"train", "--data", HQGNN_TOY_DATA, "--out", dir_.string(), "--epochs", "4", "--dim", "16",
                        "--bits", "2", "--k", "20", "--seed", "3"});
    }
    static inline fs::path dir_;
    static inline Result result_;
};

}  // namespace

TEST_F(TrainedRun, WritesAllArtifacts) {
    ASSERT_EQ(result_.code, 0) << result_.err;
    for (const char* f : {"train.tsv", "val.tsv", "test.tsv", "split_manifest.txt", "config.txt", "history.csv",
                          "steps.csv", "quantizer.txt", "metrics.csv", "metrics.json", "checkpoint/meta.txt",
                          "checkpoint/theta_users.hqem", "codes/users.hqcd", "codes/items.hqcd"})
        EXPECT_TRUE(fs::exists(dir_ / f)) << f;
    const auto kv = key_values(result_.out);
    EXPECT_TRUE(kv.count("recall@20"));
    EXPECT_TRUE(kv.count("ndcg@20"));
}

TEST_F(TrainedRun, EvalReproducesTrainMetrics) {
    ASSERT_EQ(result_.code, 0);
    const auto e = call({"eval", "--checkpoint", (dir_ / "checkpoint").string()});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto a = key_values(result_.out), b = key_values(e.out);
    EXPECT_NEAR(std::stod(a.at("recall@20")), std::stod(b.at("recall@20")), 1e-12);
    EXPECT_NEAR(std::stod(a.at("ndcg@20")), std::stod(b.at("ndcg@20")), 1e-12);
    EXPECT_EQ(a.at("users"), b.at("users"));
    const auto c = call({"eval", "--checkpoint", (dir_ / "checkpoint").string(), "--codes", (dir_ / "codes").string()});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_NEAR(std::stod(key_values(c.out).at("recall@20")), std::stod(a.at("recall@20")), 1e-12);
}

TEST_F(TrainedRun, EvalWarnsWhenKExceedsItems) {
    const auto e = call({"eval", "--checkpoint", (dir_ / "checkpoint").string(), "--k", "100000"});
    EXPECT_EQ(e.code, 0);
    EXPECT_NE(e.err.find("warning"), std::string::npos);
    EXPECT_TRUE(key_values(e.out).count("recall@100000"));
}

TEST_F(TrainedRun, EvalRejectsCorruptedMagic) {
    const auto bad = scratch("corrupt");
    fs::copy(dir_ / "checkpoint", bad);
    {
        std::fstream f(bad / "pooled_users.hqem", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    EXPECT_EQ(call({"eval", "--checkpoint", bad.string()}).code, 2);
    const auto codes = scratch("corrupt_codes");
    fs::copy(dir_ / "codes", codes);
    {
        std::fstream f(codes / "items.hqcd", std::ios::in | std::ios::out | std::ios::binary);
        f.write("ABCD", 4);
    }
    EXPECT_EQ(call({"eval", "--checkpoint", (dir_ / "checkpoint").string(), "--codes", codes.string()}).code, 2);
}

TEST_F(TrainedRun, ExportRoundTrip) {
    const auto out = scratch("export");
    const auto r = call({"export", "--checkpoint", (dir_ / "checkpoint").string(), "--bits", "2", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"users.hqcd", "items.hqcd"}) {
        const auto a = hqgnn::read_codes(out / f), b = hqgnn::read_codes(dir_ / "codes" / f);
        EXPECT_EQ(a.codes, b.codes);
        EXPECT_EQ(a.params.l, b.params.l);
        EXPECT_EQ(a.params.bits, 2);
    }
}

TEST_F(TrainedRun, ExportBitsMismatchNamesBoth) {
    const auto r = call({"export", "--checkpoint", (dir_ / "checkpoint").string(), "--bits", "4", "--out",
                         scratch("export_bad").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bits=4"), std::string::npos);
    EXPECT_NE(r.err.find("bits=2"), std::string::npos);
}

TEST_F(TrainedRun, RetrieveFromTrainedCodes) {
    const auto r = call({"retrieve", "--codes", (dir_ / "codes").string(), "--user", "0", "--k", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    int lines = 0;
    for (std::string line; std::getline(in, line);) {
        EXPECT_NE(line.find('\t'), std::string::npos);
        ++lines;
    }
    EXPECT_EQ(lines, 5);
    EXPECT_EQ(call({"retrieve", "--codes", (dir_ / "codes").string(), "--user", "99999"}).code, 2);
    EXPECT_EQ(call({"retrieve", "--codes", (dir_ / "codes").string(), "--user", "abc"}).code, 2);
    EXPECT_EQ(call({"retrieve", "--codes", (dir_ / "codes").string(), "--user", "0", "--k", "0"}).code, 2);
}

TEST_F(TrainedRun, BenchReportsMatchingLists) {
    const auto r = call({"bench", "--codes", (dir_ / "codes").string(), "--k", "10", "--reps", "1", "--queries", "20"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(key_values(r.out).at("lists_match"), "true");
}

TEST(CliTrain, MissingDataExitsTwo) {
    const auto r = call({"train", "--data", "/nonexistent/data.tsv", "--out", scratch("missing").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("not found"), std::string::npos);
}

TEST(CliTrain, UnknownConfigKeyExitsTwo) {
    const auto dir = scratch("unknown_key");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "# comment\nbits=2\nlearning_rate=0.1\n";
    }
    const auto r = call({"train", "--config", (dir / "run.cfg").string(), "--data", HQGNN_TOY_DATA});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("learning_rate"), std::string::npos);
}

TEST(CliTrain, FlagsOverrideConfigFile) {
    const auto dir = scratch("precedence");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "bits=4\nepochs=1\ndim=8\nout=" << (dir / "out").string() << "\n";
    }
    const auto r = call({"train", "--config", (dir / "run.cfg").string(), "--data", HQGNN_TOY_DATA, "--bits", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream echo(dir / "out" / "config.txt");
    std::stringstream ss;
    ss << echo.rdbuf();
    const auto kv = key_values(ss.str());
    EXPECT_EQ(kv.at("bits"), "1");
    EXPECT_EQ(kv.at("dim"), "8");
}

TEST(CliTrain, BadEstimatorExitsTwo) {
    EXPECT_EQ(call({"train", "--data", HQGNN_TOY_DATA, "--estimator", "adam"}).code, 2);
}

TEST(CliRetrieve, KnownArgmaxFirst) {
    const auto dir = scratch("argmax");
    fs::create_directories(dir);
    const auto p = hqgnn::QuantParams::make(0.0, 1.0, 1);
    hqgnn::CodeMatrix items(4, 3);
    items << 1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 0, 0;
    hqgnn::CodeMatrix users(1, 3);
    users << 1, 1, 1;
    hqgnn::write_codes(dir / "items.hqcd", hqgnn::make_quantized_table(items, p));
    hqgnn::write_codes(dir / "users.hqcd", hqgnn::make_quantized_table(users, p));
    const auto r = call({"retrieve", "--codes", dir.string(), "--user", "0", "--k", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, 2), "1\t");
    const auto row = call({"retrieve", "--codes", dir.string(), "--row", "0,1,0", "--k", "1"});
    ASSERT_EQ(row.code, 0) << row.err;
    EXPECT_EQ(row.out.substr(0, 2), "1\t");
    EXPECT_EQ(call({"retrieve", "--codes", dir.string(), "--row", "0,1"}).code, 2);
}

TEST(CliExport, MissingCheckpointExitsTwo) {
    EXPECT_EQ(call({"export", "--checkpoint", "/nonexistent/ckpt", "--bits", "1", "--out", "/tmp/x"}).code, 2);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(call({}).code, 2);
    EXPECT_EQ(call({"frobnicate"}).code, 2);
    EXPECT_EQ(call({"--help"}).code, 0);
}
