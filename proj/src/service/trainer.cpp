#include "mcomp/service/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mcomp/core/motion_io.hpp"
#include "mcomp/core/seed.hpp"
#include "mcomp/dataset/batching.hpp"
#include "mcomp/service/evaluation.hpp"

namespace mcomp {

namespace fs = std::filesystem;

namespace {

// Independent streams derived from the run seed.
enum SeedStream : std::uint64_t { kInit = 0, kOrder = 1, kStep = 2, kCrop = 3 };

} // namespace

TrainingData load_training_data(const CorpusManifest& manifest, Strategy strategy, std::uint64_t seed,
                                std::size_t max_train_pairs, std::size_t max_val_pairs, const FilterConfig& filter)
{
    const std::vector<SequenceRecord> train = load_records(manifest, Split::train);
    const std::vector<SequenceRecord> val = load_records(manifest, Split::val);
    TrainingData d;
    d.train_pairs = collect_pairs(train, filter);
    d.val_pairs = collect_pairs(val, filter);
    if (max_train_pairs > 0 && d.train_pairs.size() > max_train_pairs) {
        d.train_pairs.erase(d.train_pairs.begin() + static_cast<std::ptrdiff_t>(max_train_pairs), d.train_pairs.end());
    }
    if (max_val_pairs > 0 && d.val_pairs.size() > max_val_pairs) {
        d.val_pairs.erase(d.val_pairs.begin() + static_cast<std::ptrdiff_t>(max_val_pairs), d.val_pairs.end());
    }
    if (strategy == Strategy::independent) {
        d.train_singles = collect_singles(train, derive_seed(seed, kCrop), filter);
    }
    const bool empty = strategy == Strategy::independent ? d.train_singles.empty() : d.train_pairs.empty();
    if (empty) {
        throw EmptyDataset("no training examples in the train split of the manifest");
    }
    return d;
}

std::vector<TrainItem> training_items(const TeachModel& model, const TrainingData& data)
{
    std::vector<TrainItem> items;
    switch (model.strategy()) {
    case Strategy::teach:
        for (const ActionPair& p : data.train_pairs) {
            items.push_back(model.make_pair_item(p));
        }
        break;
    case Strategy::joint:
        for (const ActionPair& p : data.train_pairs) {
            items.push_back(model.make_joint_item(p));
        }
        break;
    case Strategy::independent:
        for (const SingleClip& s : data.train_singles) {
            items.push_back(model.make_single_item(s.text, s.motion));
        }
        break;
    }
    return items;
}

fs::path loss_csv_path(const fs::path& out_dir)
{
    return out_dir / "loss.csv";
}

fs::path best_checkpoint_path(const fs::path& out_dir)
{
    return out_dir / "best.ckpt";
}

fs::path epoch_checkpoint_path(const fs::path& out_dir, int epoch)
{
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%05d.ckpt", epoch);
    return out_dir / "checkpoints" / name;
}

std::optional<fs::path> latest_checkpoint(const fs::path& out_dir)
{
    const fs::path dir = out_dir / "checkpoints";
    if (!fs::is_directory(dir)) {
        return std::nullopt;
    }
    std::optional<fs::path> best;
    for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.starts_with("epoch_") && name.ends_with(".ckpt") && (!best || name > best->filename().string())) {
            best = e.path();
        }
    }
    return best;
}

namespace {

constexpr const char* kLossHeader = "step,total,recon,kl,cross_kl,latent_l1";

} // namespace

std::vector<LossRow> read_loss_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        return {};
    }
    std::string line;
    std::getline(in, line);
    if (line != kLossHeader) {
        throw FormatError(path.string() + ": unexpected loss CSV header '" + line + "'");
    }
    std::vector<LossRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        LossRow r;
        char comma = 0;
        std::istringstream s(line);
        s >> r.step >> comma >> r.loss.total >> comma >> r.loss.recon >> comma >> r.loss.kl >> comma >>
            r.loss.cross_kl >> comma >> r.loss.latent_l1;
        if (!s) {
            throw FormatError(path.string() + ": malformed loss row '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

void write_loss_csv(const fs::path& path, const std::vector<LossRow>& rows)
{
    std::string out = std::string(kLossHeader) + "\n";
    char buf[256];
    for (const LossRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(r.step),
                      r.loss.total, r.loss.recon, r.loss.kl, r.loss.cross_kl, r.loss.latent_l1);
        out += buf;
    }
    write_file_atomic(path, out);
}

TrainSummary cmd_train(const TrainOptions& options)
{
    const CorpusManifest manifest = CorpusManifest::load(options.manifest);
    const TrainingData data = load_training_data(manifest, options.strategy, options.seed, options.max_train_pairs,
                                                 options.max_val_pairs, options.filter);
    if (options.epochs < 1 || options.checkpoint_every < 1) {
        throw std::invalid_argument("epochs and checkpoint interval must be at least 1");
    }
    fs::create_directories(options.out_dir / "checkpoints");

    std::unique_ptr<TeachModel> model;
    nn::AdamW optimizer;
    TrainingState state;
    std::vector<LossRow> rows;
    const std::optional<fs::path> previous = options.resume ? latest_checkpoint(options.out_dir) : std::nullopt;
    if (previous) {
        Checkpoint ck;
        try {
            ck = load_checkpoint(*previous);
        } catch (const std::exception& e) {
            throw ResumeError("refusing to resume from " + previous->string() + ": " + e.what());
        }
        if (ck.model->strategy() != options.strategy) {
            throw ResumeError("refusing to resume: " + previous->string() + " holds a " +
                              to_string(ck.model->strategy()) + " model");
        }
        model = std::move(ck.model);
        optimizer = std::move(ck.optimizer);
        state = ck.state;
        for (const LossRow& r : read_loss_csv(loss_csv_path(options.out_dir))) {
            if (r.step < state.step) {
                rows.push_back(r);
            }
        }
    } else {
        const TrainingCorpus corpus = training_corpus(options.strategy, data.train_pairs, data.train_singles);
        model = std::make_unique<TeachModel>(options.model, options.strategy, Vocabulary::build(corpus.texts),
                                             feature_stats(corpus.canonical_motions), default_skeleton(),
                                             derive_seed(options.seed, kInit));
        optimizer = nn::AdamW({.lr = options.model.learning_rate, .weight_decay = options.model.weight_decay});
        state.seed = options.seed;
    }

    const std::vector<TrainItem> items = training_items(*model, data);
    std::vector<ItemLength> lengths;
    for (const TrainItem& it : items) {
        lengths.push_back({static_cast<int>(it.target_1.rows()), static_cast<int>(it.target_2.rows())});
    }
    const BatchIterator batches(lengths, static_cast<std::size_t>(model->config().batch_size),
                                derive_seed(state.seed, kOrder));

    TrainSummary summary;
    summary.best_val_ape = state.best_val_ape;
    for (int epoch = static_cast<int>(state.epoch); epoch < options.epochs; ++epoch) {
        EpochReport report;
        for (const Batch& b : batches.epoch(static_cast<std::uint64_t>(epoch))) {
            std::vector<const TrainItem*> batch;
            for (std::size_t i : b.indices) {
                batch.push_back(&items[i]);
            }
            const LossReport l = model->training_step(
                batch, optimizer, derive_seed(derive_seed(state.seed, kStep), static_cast<std::uint64_t>(state.step)));
            rows.push_back({state.step, l});
            ++state.step;
            const double w = static_cast<double>(l.items) / static_cast<double>(items.size());
            report.mean_loss.total += w * l.total;
            report.mean_loss.recon += w * l.recon;
            report.mean_loss.kl += w * l.kl;
            report.mean_loss.cross_kl += w * l.cross_kl;
            report.mean_loss.latent_l1 += w * l.latent_l1;
            report.mean_loss.items += l.items;
        }
        state.epoch = epoch + 1;
        report.epoch = epoch + 1;
        report.step = state.step;
        write_loss_csv(loss_csv_path(options.out_dir), rows);
        if (state.epoch % options.checkpoint_every == 0 || state.epoch == options.epochs) {
            if (!data.val_pairs.empty()) {
                const double val = evaluate(data.val_pairs, pair_generator(*model), options.eval_seed).ape.mean_global;
                report.val_ape = val;
                if (val < state.best_val_ape) {
                    state.best_val_ape = val;
                    save_checkpoint(best_checkpoint_path(options.out_dir), *model, &optimizer, state);
                }
            } else {
                save_checkpoint(best_checkpoint_path(options.out_dir), *model, &optimizer, state);
            }
            summary.last_checkpoint = epoch_checkpoint_path(options.out_dir, epoch + 1);
            save_checkpoint(summary.last_checkpoint, *model, &optimizer, state);
            report.checkpointed = true;
        }
        summary.last_epoch = report.mean_loss;
        if (options.progress) {
            options.progress(report);
        }
    }
    summary.epochs_completed = static_cast<int>(state.epoch);
    summary.steps = state.step;
    summary.best_val_ape = state.best_val_ape;
    summary.best_checkpoint = best_checkpoint_path(options.out_dir);
    if (summary.last_checkpoint.empty()) {
        summary.last_checkpoint = latest_checkpoint(options.out_dir).value_or(fs::path{});
    }
    return summary;
}

fs::path ablation_csv_path(const fs::path& out_dir)
{
    return out_dir / "past_frames_ablation.csv";
}

std::string ablation_csv(const std::vector<AblationRow>& rows)
{
    std::string out = "P";
    for (const char* metric : {"ape", "ave"}) {
        for (PositionVariant v : kPositionVariants) {
            out += std::string(",") + metric + "_" + to_string(v);
        }
    }
    out += "\n";
    char buf[64];
    for (const AblationRow& r : rows) {
        out += std::to_string(r.past_frames);
        for (const VariantScores* s : {&r.report.ape, &r.report.ave}) {
            for (PositionVariant v : kPositionVariants) {
                std::snprintf(buf, sizeof buf, ",%.6f", (*s)[v]);
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

std::vector<AblationRow> run_ablation(const AblationOptions& options)
{
    if (options.past_frames.empty()) {
        throw std::invalid_argument("empty past-frame grid");
    }
    std::vector<AblationRow> rows;
    for (int p : options.past_frames) {
        if (p < 0) {
            throw std::invalid_argument("past-frame counts must be non-negative");
        }
        TrainOptions run = options.base;
        run.strategy = Strategy::teach;
        run.model.past_frames = p;
        run.out_dir = options.base.out_dir / ("P" + std::to_string(p));
        cmd_train(run);
        const Checkpoint ck = load_checkpoint(latest_checkpoint(run.out_dir).value());
        const CorpusManifest manifest = CorpusManifest::load(run.manifest);
        const TrainingData data = load_training_data(manifest, Strategy::teach, run.seed, run.max_train_pairs,
                                                     run.max_val_pairs, run.filter);
        if (data.val_pairs.empty()) {
            throw EmptyDataset("the ablation needs validation pairs");
        }
        const MetricReport report = evaluate(data.val_pairs, pair_generator(*ck.model), run.eval_seed);
        write_file_atomic(run.out_dir / "report.json", to_json(report).dump(2) + "\n");
        rows.push_back({p, report});
    }
    write_file_atomic(ablation_csv_path(options.base.out_dir), ablation_csv(rows));
    return rows;
}

} // namespace mcomp
