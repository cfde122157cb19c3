#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mcomp/dataset/corpus.hpp"
#include "mcomp/metrics/metrics.hpp"
#include "mcomp/model/checkpoint.hpp"

namespace mcomp {

struct TrainingData {
    std::vector<ActionPair> train_pairs;
    std::vector<SingleClip> train_singles;
    std::vector<ActionPair> val_pairs;
};

// Pairs (and, for the independent strategy, single clips) of the train split
// plus the validation pairs. A non-zero cap keeps the first n pairs.
TrainingData load_training_data(const CorpusManifest& manifest, Strategy strategy, std::uint64_t seed,
                                std::size_t max_train_pairs = 0, std::size_t max_val_pairs = 0,
                                const FilterConfig& filter = {});

// The strategy's training items built from the data.
std::vector<TrainItem> training_items(const TeachModel& model, const TrainingData& data);

struct EpochReport {
    int epoch = 0;  // 1-based count of completed epochs
    std::int64_t step = 0;
    LossReport mean_loss;
    std::optional<double> val_ape;
    bool checkpointed = false;
};

struct TrainOptions {
    ModelConfig model = ModelConfig::desk();
    Strategy strategy = Strategy::teach;
    std::filesystem::path manifest;
    std::filesystem::path out_dir;
    int epochs = 200;
    int checkpoint_every = 10;
    std::uint64_t seed = 0;
    std::uint64_t eval_seed = 0;
    std::size_t max_train_pairs = 0;
    std::size_t max_val_pairs = 0;
    bool resume = false;
    FilterConfig filter;
    std::function<void(const EpochReport&)> progress;
};

struct TrainSummary {
    int epochs_completed = 0;
    std::int64_t steps = 0;
    LossReport last_epoch;
    double best_val_ape = 0.0;
    std::filesystem::path last_checkpoint;
    std::filesystem::path best_checkpoint;
};

struct LossRow {
    std::int64_t step = 0;
    LossReport loss;
};

// Files under out_dir.
std::filesystem::path loss_csv_path(const std::filesystem::path& out_dir);
std::filesystem::path best_checkpoint_path(const std::filesystem::path& out_dir);
std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& out_dir, int epoch);
// Newest epoch checkpoint, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& out_dir);

std::vector<LossRow> read_loss_csv(const std::filesystem::path& path);
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRow>& rows);

class ResumeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Trains from scratch or, with resume set, from the newest epoch checkpoint.
// A checkpoint is written every checkpoint_every epochs and after the last
// one; validation APE (mean global) is measured at each checkpoint and the
// best model kept in best.ckpt. Throws ResumeError when the checkpoint to
// resume from is unreadable or belongs to another strategy.
TrainSummary cmd_train(const TrainOptions& options);

struct AblationOptions {
    TrainOptions base;
    std::vector<int> past_frames{1, 5, 10, 15};
};

struct AblationRow {
    int past_frames = 0;
    MetricReport report;
};

std::filesystem::path ablation_csv_path(const std::filesystem::path& out_dir);

// Trains one teach model per past-frame count under out_dir/P<n>, evaluates
// each on the validation pairs and writes a Table-3-shaped CSV.
std::vector<AblationRow> run_ablation(const AblationOptions& options);
std::string ablation_csv(const std::vector<AblationRow>& rows);

} // namespace mcomp
