#include "hqgnn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hqgnn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw InputError("invalid value \"" + value + "\" for key " + key);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw InputError("invalid value \"" + value + "\" for key " + key);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string to_string(Estimator e) { return e == Estimator::ste ? "ste" : "gste"; }
std::string to_string(DequantMode m) { return m == DequantMode::affine ? "affine" : "literal"; }

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = {
        "data",        "out",         "train_frac",  "val_frac",  "seed",        "dim",         "layers",
        "bits",        "full_precision", "dequant",  "alpha",     "lr",          "batch_size",  "epochs",
        "patience",    "estimator",   "probes",      "delta_decay", "delta_lo",  "delta_hi",    "frozen_delta",
        "ema_decay",   "k",           "init_std",    "threads",
    };
    return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto& t = train;
    if (key == "data") data = value;
    else if (key == "out") out = value;
    else if (key == "train_frac") split.train_frac = parse_number<double>(key, value);
    else if (key == "val_frac") split.val_frac = parse_number<double>(key, value);
    else if (key == "seed") split.seed = t.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "dim") t.dim = parse_number<Index>(key, value);
    else if (key == "layers") t.layers = parse_number<int>(key, value);
    else if (key == "bits") t.bits = parse_number<int>(key, value);
    else if (key == "full_precision") t.full_precision = parse_bool(key, value);
    else if (key == "dequant") {
        if (value == "affine") t.dequant = DequantMode::affine;
        else if (value == "literal") t.dequant = DequantMode::literal;
        else throw InputError("invalid value \"" + value + "\" for key dequant");
    } else if (key == "alpha") t.alpha = parse_number<double>(key, value);
    else if (key == "lr") t.lr = parse_number<double>(key, value);
    else if (key == "batch_size") t.batch_size = parse_number<Index>(key, value);
    else if (key == "epochs") t.epochs = parse_number<int>(key, value);
    else if (key == "patience") t.patience = parse_number<int>(key, value);
    else if (key == "estimator") {
        if (value == "ste") t.estimator.mode = Estimator::ste;
        else if (value == "gste") t.estimator.mode = Estimator::gste;
        else throw InputError("invalid value \"" + value + "\" for key estimator");
    } else if (key == "probes") t.estimator.probes_per_batch = parse_number<int>(key, value);
    else if (key == "delta_decay") t.estimator.delta_decay = parse_number<double>(key, value);
    else if (key == "delta_lo") t.estimator.delta_lo = parse_number<double>(key, value);
    else if (key == "delta_hi") t.estimator.delta_hi = parse_number<double>(key, value);
    else if (key == "frozen_delta") {
        if (value.empty() || value == "none") t.estimator.frozen_delta.reset();
        else t.estimator.frozen_delta = parse_number<double>(key, value);
    } else if (key == "ema_decay") t.ema_decay = parse_number<double>(key, value);
    else if (key == "k") t.k_eval = parse_number<Index>(key, value);
    else if (key == "init_std") t.init_std = parse_number<double>(key, value);
    else if (key == "threads") t.threads = parse_number<int>(key, value);
    else throw InputError("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_pairs() const {
    const auto& t = train;
    return {
        {"data", data.string()},
        {"out", out.string()},
        {"train_frac", format_double(split.train_frac)},
        {"val_frac", format_double(split.val_frac)},
        {"seed", std::to_string(t.seed)},
        {"dim", std::to_string(t.dim)},
        {"layers", std::to_string(t.layers)},
        {"bits", std::to_string(t.bits)},
        {"full_precision", t.full_precision ? "true" : "false"},
        {"dequant", to_string(t.dequant)},
        {"alpha", format_double(t.alpha)},
        {"lr", format_double(t.lr)},
        {"batch_size", std::to_string(t.batch_size)},
        {"epochs", std::to_string(t.epochs)},
        {"patience", std::to_string(t.patience)},
        {"estimator", to_string(t.estimator.mode)},
        {"probes", std::to_string(t.estimator.probes_per_batch)},
        {"delta_decay", format_double(t.estimator.delta_decay)},
        {"delta_lo", format_double(t.estimator.delta_lo)},
        {"delta_hi", format_double(t.estimator.delta_hi)},
        {"frozen_delta", t.estimator.frozen_delta ? format_double(*t.estimator.frozen_delta) : "none"},
        {"ema_decay", format_double(t.ema_decay)},
        {"k", std::to_string(t.k_eval)},
        {"init_std", format_double(t.init_std)},
        {"threads", std::to_string(t.threads)},
    };
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "expected key=value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError(lineno, "empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return parse_key_values(in);
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig c;
    for (const auto& [k, v] : read_key_values(path)) c.set(k, v);
    return c;
}

}  // namespace hqgnn
