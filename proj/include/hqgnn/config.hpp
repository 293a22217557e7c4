#pragma once

#include "hqgnn/graph.hpp"
#include "hqgnn/trainer.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hqgnn {

/// Training configuration plus the paths and split parameters of one run.
struct RunConfig {
    TrainConfig train;
    SplitConfig split;
    std::filesystem::path data;
    std::filesystem::path out = "out";

    /// Sets one field from its text form. Unknown keys and unparsable
    /// values throw InputError naming the key.
    void set(const std::string& key, const std::string& value);

    /// Every key with its current value, in a fixed order.
    std::vector<std::pair<std::string, std::string>> to_pairs() const;

    static const std::vector<std::string>& keys();
};

/// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Loads a config file on top of the defaults.
RunConfig load_run_config(const std::filesystem::path& path);

std::string to_string(Estimator e);
std::string to_string(DequantMode m);

}  // namespace hqgnn
