#pragma once

#include "hqgnn/config.hpp"
#include "hqgnn/trainer.hpp"

#include <filesystem>

namespace hqgnn {

struct LoadedCheckpoint {
    Checkpoint checkpoint;
    RunConfig config;
};

/// Directory layout: theta_{users,items}.hqem (layer-0 parameters),
/// pooled_{users,items}.hqem (encoder output) and meta.txt, a key=value file
/// echoing the run config plus epoch, delta and both quantizer parameter sets.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt, const RunConfig& config);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace hqgnn
