#include "hqgnn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hqgnn {

namespace {

constexpr int kMetaVersion = 1;

std::string exact(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("checkpoint metadata lacks " + key);
    double v = 0;
    const auto* end = it->second.data() + it->second.size();
    const auto [ptr, ec] = std::from_chars(it->second.data(), end, v);
    if (ec != std::errc() || ptr != end) throw FormatError("bad checkpoint value for " + key);
    return v;
}

QuantParams read_params(const std::map<std::string, std::string>& kv, const std::string& side) {
    QuantParams p;
    p.l = parse_double(kv, side + "_l");
    p.u = parse_double(kv, side + "_u");
    p.bits = static_cast<int>(parse_double(kv, side + "_bits"));
    p.delta = parse_double(kv, side + "_delta");
    try {
        p.validate();
    } catch (const InputError& e) {
        throw FormatError("bad " + side + " quantizer parameters: " + e.what());
    }
    return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt, const RunConfig& config) {
    std::filesystem::create_directories(dir);
    write_embeddings(dir / "theta_users.hqem", ckpt.table.users);
    write_embeddings(dir / "theta_items.hqem", ckpt.table.items);
    write_embeddings(dir / "pooled_users.hqem", ckpt.pooled.users);
    write_embeddings(dir / "pooled_items.hqem", ckpt.pooled.items);

    std::ofstream meta(dir / "meta.txt");
    if (!meta) throw InputError("cannot write " + (dir / "meta.txt").string());
    meta << "# checkpoint metadata\n";
    meta << "meta_version=" << kMetaVersion << '\n';
    for (const auto& [k, v] : config.to_pairs()) meta << k << '=' << v << '\n';
    meta << "epoch=" << ckpt.epoch << '\n';
    meta << "delta_value=" << exact(ckpt.delta) << '\n';
    meta << "val_recall=" << exact(ckpt.val_recall) << '\n';
    for (const auto& [side, p] : {std::pair{"user", ckpt.user_params}, std::pair{"item", ckpt.item_params}}) {
        meta << side << "_l=" << exact(p.l) << '\n'
             << side << "_u=" << exact(p.u) << '\n'
             << side << "_bits=" << p.bits << '\n'
             << side << "_delta=" << exact(p.delta) << '\n';
    }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError("checkpoint directory " + dir.string() + " not found");
    auto kv = read_key_values(dir / "meta.txt");
    if (kv["meta_version"] != std::to_string(kMetaVersion))
        throw FormatError("unsupported checkpoint metadata version");

    LoadedCheckpoint out;
    for (const auto& key : RunConfig::keys()) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw FormatError("checkpoint metadata lacks " + key);
        out.config.set(key, it->second);
    }
    auto& c = out.checkpoint;
    c.epoch = static_cast<int>(parse_double(kv, "epoch"));
    c.delta = parse_double(kv, "delta_value");
    c.val_recall = parse_double(kv, "val_recall");
    c.user_params = read_params(kv, "user");
    c.item_params = read_params(kv, "item");
    c.table = EmbeddingTable(read_embeddings(dir / "theta_users.hqem"), read_embeddings(dir / "theta_items.hqem"));
    c.pooled = EmbeddingTable(read_embeddings(dir / "pooled_users.hqem"), read_embeddings(dir / "pooled_items.hqem"));
    if (c.table.users.cols() != c.table.items.cols() || c.pooled.users.rows() != c.table.users.rows() ||
        c.pooled.items.rows() != c.table.items.rows() || c.pooled.dim() != c.table.dim())
        throw FormatError("checkpoint embedding shapes disagree");
    return out;
}

}  // namespace hqgnn
