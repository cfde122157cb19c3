#pragma once

#include <filesystem>
#include <limits>
#include <memory>
#include <stdexcept>

#include "mcomp/model/teach_model.hpp"

namespace mcomp {

class CorruptCheckpoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainingState {
    std::int64_t epoch = 0;
    std::int64_t step = 0;
    double best_val_ape = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

struct Checkpoint {
    std::unique_ptr<TeachModel> model;
    nn::AdamW optimizer;
    TrainingState state;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary container: "MCKP", version, a JSON header (config, strategy,
// vocabulary, feature stats, skeleton, training state, tensor directory),
// raw little-endian doubles, and a trailing FNV-1a checksum. Written
// atomically.
void save_checkpoint(const std::filesystem::path& path, const TeachModel& model, const nn::AdamW* optimizer,
                     const TrainingState& state);

// Throws CorruptCheckpoint on a bad magic, unsupported version, checksum
// mismatch, truncation or a tensor that does not fit the model.
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace mcomp
