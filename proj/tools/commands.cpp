#include "commands.hpp"

#include "hqgnn/checkpoint.hpp"
#include "hqgnn/config.hpp"
#include "hqgnn/evalrank.hpp"
#include "hqgnn/retrieval.hpp"
#include "hqgnn/synthetic.hpp"
#include "hqgnn/trainer.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace hqgnn::cli {

namespace {

enum class Level { error = 0, info = 1, debug = 2 };

class Log {
public:
    explicit Log(std::ostream& sink) : sink_(sink) {
        if (const char* env = std::getenv("HQ_LOG")) {
            const std::string v = env;
            if (v == "error") level_ = Level::error;
            else if (v == "debug") level_ = Level::debug;
        }
    }

    void error(const std::string& msg) const { emit(Level::error, "error", msg); }
    void warn(const std::string& msg) const { emit(Level::error, "warning", msg); }
    void info(const std::string& msg) const { emit(Level::info, "info", msg); }
    void debug(const std::string& msg) const { emit(Level::debug, "debug", msg); }

private:
    void emit(Level at, const char* tag, const std::string& msg) const {
        if (static_cast<int>(at) <= static_cast<int>(level_)) sink_ << tag << ": " << msg << '\n';
    }

    std::ostream& sink_;
    Level level_ = Level::info;
};

std::string exact(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void print_metrics(std::ostream& out, const RankingResult& r) {
    out << "recall@" << r.k << '=' << exact(r.recall) << '\n'
        << "ndcg@" << r.k << '=' << exact(r.ndcg) << '\n'
        << "users=" << r.evaluated_users() << '\n';
}

void write_quantizer_params(const fs::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    for (const auto& [side, p] : {std::pair{"user", ckpt.user_params}, std::pair{"item", ckpt.item_params}})
        out << side << "_l=" << exact(p.l) << '\n'
            << side << "_u=" << exact(p.u) << '\n'
            << side << "_bits=" << p.bits << '\n'
            << side << "_delta=" << exact(p.delta) << '\n';
}

struct CodePair {
    QuantizedTable users;
    QuantizedTable items;
};

CodePair read_code_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError("code directory " + dir.string() + " not found");
    return {read_codes(dir / "users.hqcd"), read_codes(dir / "items.hqcd")};
}

// Rebuilds the splits a run used from its recorded data path and seed.
Splits resplit(const RunConfig& config, const fs::path& data_override) {
    const fs::path data = data_override.empty() ? config.data : data_override;
    if (!fs::exists(data)) throw InputError("data file " + data.string() + " not found");
    return split(load_interactions(data).interactions, config.split);
}

int cmd_train(const fs::path& config_path, const std::map<std::string, std::string>& overrides, std::ostream& out,
              const Log& log) {
    RunConfig config;
    if (!config_path.empty()) {
        if (!fs::exists(config_path)) throw InputError("config file " + config_path.string() + " not found");
        config = load_run_config(config_path);
    }
    for (const auto& [k, v] : overrides) config.set(k, v);
    config.train.validate();
    if (config.data.empty()) throw InputError("no data file given (--data)");
    if (!fs::exists(config.data)) throw InputError("data file " + config.data.string() + " not found");

    const Dataset data = load_interactions(config.data);
    const Splits splits = split(data.interactions, config.split);
    log.info("loaded " + std::to_string(data.interactions.size()) + " interactions, " +
             std::to_string(data.interactions.num_users) + " users, " +
             std::to_string(data.interactions.num_items) + " items");

    fs::create_directories(config.out);
    write_interactions(config.out / "train.tsv", splits.train, data.ids);
    write_interactions(config.out / "val.tsv", splits.val, data.ids);
    write_interactions(config.out / "test.tsv", splits.test, data.ids);
    write_split_manifest(config.out / "split_manifest.txt", config.split, splits);
    write_id_map(config.out / "users.map", data.ids.users);
    write_id_map(config.out / "items.map", data.ids.items);
    {
        std::ofstream echo(config.out / "config.txt");
        for (const auto& [k, v] : config.to_pairs()) echo << k << '=' << v << '\n';
    }

    TrainResult result = train(splits, config.train);
    log.info("trained " + std::to_string(result.state.epoch) + " epochs, best epoch " +
             std::to_string(result.best.epoch));
    for (const auto& h : result.state.history)
        log.debug("epoch " + std::to_string(h.epoch) + " loss=" + exact(h.train_loss) +
                  " val_recall=" + exact(h.val_recall) + " delta=" + exact(h.delta));

    save_checkpoint(config.out / "checkpoint", result.best, config);
    write_history_csv(config.out / "history.csv", result.state.history);
    write_step_log_csv(config.out / "steps.csv", result.state.steps);
    write_quantizer_params(config.out / "quantizer.txt", result.best);
    if (!config.train.full_precision) {
        fs::create_directories(config.out / "codes");
        write_codes(config.out / "codes" / "users.hqcd", user_codes(result.best));
        write_codes(config.out / "codes" / "items.hqcd", item_codes(result.best));
    }

    const RankingResult test =
        evaluate_checkpoint(result.best, config.train, splits.test, merge(splits.train, splits.val));
    write_metrics_csv(config.out / "metrics.csv", test);
    write_metrics_summary(config.out / "metrics.json", test);
    print_metrics(out, test);
    return kOk;
}

int cmd_eval(const fs::path& ckpt_dir, const fs::path& data, const fs::path& codes_dir, Index k, int threads,
             std::ostream& out, const Log& log) {
    LoadedCheckpoint loaded = load_checkpoint(ckpt_dir);
    RunConfig& config = loaded.config;
    if (k > 0) config.train.k_eval = k;
    if (threads > 0) config.train.threads = threads;
    const Splits splits = resplit(config, data);
    if (config.train.k_eval > splits.test.num_items)
        log.warn("k=" + std::to_string(config.train.k_eval) + " exceeds the item count " +
                 std::to_string(splits.test.num_items) + "; ranking all items");
    const InteractionSet mask = merge(splits.train, splits.val);

    RankingResult r;
    if (!codes_dir.empty()) {
        const CodePair codes = read_code_dir(codes_dir);
        if (codes.users.rows() != splits.test.num_users || codes.items.rows() != splits.test.num_items)
            throw FormatError("code tables do not match the dataset's user/item counts");
        const CodeIndex index(codes.items, codes.users.params);
        r = evaluate(codes.users, index, splits.test, mask, config.train.k_eval, config.train.threads);
    } else {
        const auto& c = loaded.checkpoint;
        if (c.pooled.num_users() != splits.test.num_users || c.pooled.num_items() != splits.test.num_items)
            throw FormatError("checkpoint does not match the dataset's user/item counts");
        r = evaluate_checkpoint(c, config.train, splits.test, mask);
    }
    print_metrics(out, r);
    return kOk;
}

int cmd_export(const fs::path& ckpt_dir, int bits, const fs::path& out_dir, std::ostream& out) {
    const LoadedCheckpoint loaded = load_checkpoint(ckpt_dir);
    const auto& c = loaded.checkpoint;
    if (loaded.config.train.full_precision) throw InputError("checkpoint is full precision; nothing to export");
    if (bits != c.user_params.bits)
        throw InputError("requested bits=" + std::to_string(bits) + " but checkpoint was trained with bits=" +
                         std::to_string(c.user_params.bits));
    fs::create_directories(out_dir);
    const QuantizedTable users = user_codes(c);
    const QuantizedTable items = item_codes(c);
    write_codes(out_dir / "users.hqcd", users);
    write_codes(out_dir / "items.hqcd", items);
    out << "users=" << users.rows() << "\nitems=" << items.rows() << "\nbits=" << bits << '\n';
    return kOk;
}

CodeRow parse_code_row(const std::string& text) {
    std::vector<std::int32_t> values;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            values.push_back(v);
        } catch (const std::exception&) {
            throw InputError("invalid code \"" + tok + "\" in --row");
        }
    }
    CodeRow row(static_cast<Index>(values.size()));
    for (std::size_t c = 0; c < values.size(); ++c) row(static_cast<Index>(c)) = values[c];
    return row;
}

int cmd_retrieve(const fs::path& codes_dir, const std::string& user, const std::string& row_text, Index k,
                 std::ostream& out) {
    if (k < 1) throw InputError("k must be at least 1");
    const CodePair codes = read_code_dir(codes_dir);
    const CodeIndex index(codes.items, codes.users.params);
    CodeRow row;
    if (!row_text.empty()) {
        row = parse_code_row(row_text);
        if (row.size() != index.dim())
            throw InputError("code row has " + std::to_string(row.size()) + " entries, index dimension is " +
                             std::to_string(index.dim()));
    } else {
        Index u = -1;
        try {
            std::size_t used = 0;
            u = std::stoll(user, &used);
            if (used != user.size()) u = -1;
        } catch (const std::exception&) {
            u = -1;
        }
        if (u < 0 || u >= codes.users.rows()) throw InputError("unknown user id " + user);
        row = codes.users.codes.row(u);
    }
    const TopK top = topk(score_all(row, index), k);
    out << std::setprecision(17);
    for (const auto& r : top.items) out << r.item << '\t' << r.score << '\n';
    return kOk;
}

int cmd_bench(const fs::path& codes_dir, Index k, int reps, Index max_queries, std::ostream& out) {
    if (k < 1) throw InputError("k must be at least 1");
    const CodePair codes = read_code_dir(codes_dir);
    const CodeIndex index(codes.items, codes.users.params);
    std::vector<Index> queries;
    for (Index u = 0; u < std::min(max_queries, codes.users.rows()); ++u) queries.push_back(u);
    const BenchReport r = bench(index, codes.users, queries, k, reps);
    out << "repetitions=" << r.repetitions << '\n' << "queries=" << r.queries << '\n' << "k=" << r.k << '\n';
    if (r.empty()) return kOk;
    out << "lists_match=" << (r.lists_match ? "true" : "false") << '\n';
    for (const auto& [name, s] : {std::pair{"integer", r.integer_path}, std::pair{"float", r.float_path}})
        out << name << "_p50_us=" << s.p50_us << '\n'
            << name << "_p90_us=" << s.p90_us << '\n'
            << name << "_p99_us=" << s.p99_us << '\n'
            << name << "_mean_us=" << s.mean_us << '\n';
    if (r.float_path.mean_us > 0) out << "speedup=" << r.float_path.mean_us / r.integer_path.mean_us << '\n';
    return r.lists_match ? kOk : kNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const Log log(err);
    CLI::App app{"Quantization-aware graph recommender: train, evaluate, export and search codes"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "split the data, train and write all artifacts");
    std::string config_path;
    train_cmd->add_option("--config", config_path, "key=value config file");
    static const char* kFlags[] = {"data", "out",  "bits", "layers",    "dim",  "lr",
                                   "alpha", "epochs", "seed", "estimator", "k", "threads"};
    std::map<std::string, std::string> flag_values;
    std::vector<std::pair<std::string, CLI::Option*>> flag_opts;
    for (const char* name : kFlags)
        flag_opts.emplace_back(name, train_cmd->add_option(std::string("--") + name, flag_values[name]));
    std::vector<std::string> sets;
    train_cmd->add_option("--set", sets, "extra key=value overrides");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on its test split");
    std::string ckpt, data, codes;
    Index k = 0;
    int threads = 0;
    eval_cmd->add_option("--checkpoint", ckpt)->required();
    eval_cmd->add_option("--data", data, "defaults to the data path recorded in the checkpoint");
    eval_cmd->add_option("--codes", codes, "directory with users.hqcd and items.hqcd");
    eval_cmd->add_option("--k", k);
    eval_cmd->add_option("--threads", threads);

    // export
    auto* export_cmd = app.add_subcommand("export", "write HQCD code tables for a checkpoint");
    int bits = 0;
    std::string out_dir;
    export_cmd->add_option("--checkpoint", ckpt)->required();
    export_cmd->add_option("--bits", bits)->required();
    export_cmd->add_option("--out", out_dir)->required();

    // retrieve
    auto* retrieve_cmd = app.add_subcommand("retrieve", "top-k items for one user from exported codes");
    std::string user, row;
    Index rk = 50;
    retrieve_cmd->add_option("--codes", codes)->required();
    auto* user_opt = retrieve_cmd->add_option("--user", user, "dense user id");
    auto* row_opt = retrieve_cmd->add_option("--row", row, "comma-separated code row");
    user_opt->excludes(row_opt);
    retrieve_cmd->add_option("--k", rk);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "latency of integer vs float scoring");
    Index bk = 50;
    int reps = 5;
    Index max_queries = 1000;
    bench_cmd->add_option("--codes", codes)->required();
    bench_cmd->add_option("--k", bk);
    bench_cmd->add_option("--reps", reps);
    bench_cmd->add_option("--queries", max_queries);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write a clustered synthetic interaction TSV");
    SyntheticConfig synth;
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out)->required();
    synth_cmd->add_option("--users", synth.num_users);
    synth_cmd->add_option("--items", synth.num_items);
    synth_cmd->add_option("--clusters", synth.clusters);
    synth_cmd->add_option("--min-items", synth.min_items_per_user);
    synth_cmd->add_option("--max-items", synth.max_items_per_user);
    synth_cmd->add_option("--affinity", synth.affinity);
    synth_cmd->add_option("--seed", synth.seed);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (train_cmd->parsed()) {
            std::map<std::string, std::string> overrides;
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos) throw InputError("--set expects key=value, got " + s);
                overrides[s.substr(0, eq)] = s.substr(eq + 1);
            }
            for (const auto& [name, opt] : flag_opts)
                if (opt->count() > 0) overrides[name] = flag_values[name];
            return cmd_train(config_path, overrides, out, log);
        }
        if (eval_cmd->parsed()) return cmd_eval(ckpt, data, codes, k, threads, out, log);
        if (export_cmd->parsed()) return cmd_export(ckpt, bits, out_dir, out);
        if (retrieve_cmd->parsed()) {
            if (user_opt->count() == 0 && row_opt->count() == 0) throw InputError("give --user or --row");
            return cmd_retrieve(codes, user, row, rk, out);
        }
        if (bench_cmd->parsed()) return cmd_bench(codes, bk, reps, max_queries, out);
        if (synth_cmd->parsed()) {
            const Dataset d = make_synthetic(synth);
            write_interactions(synth_out, d.interactions, d.ids);
            out << "interactions=" << d.interactions.size() << '\n';
            return kOk;
        }
    } catch (const DivergenceError& e) {
        log.error(e.what());
        return kNumerical;
    } catch (const InputError& e) {
        log.error(e.what());
        return kUsage;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kUsage;
    }
    return kUsage;
}

}  // namespace hqgnn::cli
