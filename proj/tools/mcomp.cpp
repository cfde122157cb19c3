#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mcomp/compose/compose.hpp"
#include "mcomp/core/motion_io.hpp"
#include "mcomp/dataset/corpus.hpp"
#include "mcomp/model/checkpoint.hpp"
#include "mcomp/service/evaluation.hpp"
#include "mcomp/service/server.hpp"
#include "mcomp/service/session.hpp"
#include "mcomp/service/trainer.hpp"

// After Eigen: resolv.h defines _res, which Eigen uses as a parameter name.
#include <httplib.h>

using namespace mcomp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& path)
{
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

// A preset name or a JSON file holding a full configuration.
ModelConfig model_config_from_arg(const std::string& arg)
{
    if (arg == "full" || arg == "desk" || arg == "tiny") {
        return ModelConfig::preset(arg);
    }
    return model_config_from_json(read_json(arg));
}

std::vector<Prompt> read_prompts(const fs::path& path)
{
    const json j = read_json(path);
    if (!j.is_array()) {
        throw std::runtime_error(path.string() + ": expected an array of {text, duration_s}");
    }
    std::vector<Prompt> out;
    for (const json& p : j) {
        out.push_back({p.at("text").get<std::string>(), p.at("duration_s").get<double>()});
    }
    return out;
}

void print_epoch(const EpochReport& r)
{
    std::printf("epoch %d step %lld loss %.6f recon %.6f kl %.6f cross_kl %.6f latent_l1 %.6f", r.epoch,
                static_cast<long long>(r.step), r.mean_loss.total, r.mean_loss.recon, r.mean_loss.kl,
                r.mean_loss.cross_kl, r.mean_loss.latent_l1);
    if (r.val_ape) {
        std::printf(" val_ape %.6f", *r.val_ape);
    }
    std::printf("%s\n", r.checkpointed ? " [checkpoint]" : "");
    std::fflush(stdout);
}

struct TrainArgs {
    std::string model = "desk";
    std::string strategy = "teach";
    std::string manifest;
    std::string out;
    int epochs = 200;
    int checkpoint_every = 10;
    std::uint64_t seed = 0;
    std::uint64_t eval_seed = 0;
    std::size_t max_train_pairs = 0;
    std::size_t max_val_pairs = 0;
    std::optional<int> past_frames;
    bool resume = false;
};

void add_train_options(CLI::App& cmd, TrainArgs& a)
{
    cmd.add_option("--manifest", a.manifest, "Corpus manifest")->required();
    cmd.add_option("--out", a.out, "Output directory")->required();
    cmd.add_option("--model", a.model, "Preset (full, desk, tiny) or config JSON file");
    cmd.add_option("--epochs", a.epochs)->check(CLI::PositiveNumber);
    cmd.add_option("--checkpoint-every", a.checkpoint_every)->check(CLI::PositiveNumber);
    cmd.add_option("--seed", a.seed);
    cmd.add_option("--eval-seed", a.eval_seed);
    cmd.add_option("--max-train-pairs", a.max_train_pairs, "Keep the first n training pairs (0: all)");
    cmd.add_option("--max-val-pairs", a.max_val_pairs, "Keep the first n validation pairs (0: all)");
}

TrainOptions train_options(const TrainArgs& a)
{
    TrainOptions o;
    o.model = model_config_from_arg(a.model);
    if (a.past_frames) {
        o.model.past_frames = *a.past_frames;
    }
    o.model.validate();
    o.strategy = strategy_from_string(a.strategy);
    o.manifest = a.manifest;
    o.out_dir = a.out;
    o.epochs = a.epochs;
    o.checkpoint_every = a.checkpoint_every;
    o.seed = a.seed;
    o.eval_seed = a.eval_seed;
    o.max_train_pairs = a.max_train_pairs;
    o.max_val_pairs = a.max_val_pairs;
    o.resume = a.resume;
    o.progress = print_epoch;
    return o;
}

int run_synth(const std::string& actions_path, const fs::path& out, std::uint64_t seed, std::size_t count,
              double val_fraction)
{
    if (actions_path.empty()) {
        const CorpusManifest m = write_synth_corpus(out, CorpusSpec{}, seed, count, val_fraction);
        std::printf("wrote %zu records and %s\n", m.entries.size(), (out / "manifest.json").c_str());
        return 0;
    }
    const json j = read_json(actions_path);
    if (!j.is_array()) {
        throw std::runtime_error(actions_path + ": expected an array of {action, duration_s}");
    }
    std::vector<ActionRequest> actions;
    for (const json& a : j) {
        actions.push_back({a.at("action").get<std::string>(), a.at("duration_s").get<double>()});
    }
    const SequenceRecord record = synth_generate(actions, seed);
    fs::create_directories(out);
    write_motion_file(out / "sequence.json", record.to_file());
    CorpusManifest manifest;
    manifest.fps = record.motion.fps();
    manifest.entries.push_back({"sequence.json", Split::train});
    manifest.save(out / "manifest.json");
    std::printf("wrote %zu frames, %zu segments to %s\n", record.motion.size(), record.segments.size(),
                (out / "sequence.json").c_str());
    return 0;
}

int run_pairs(const fs::path& manifest_path, const std::string& split, bool stats)
{
    const CorpusManifest manifest = CorpusManifest::load(manifest_path);
    const std::vector<SequenceRecord> records = load_records(manifest, split_from_string(split));
    const std::vector<ActionPair> pairs = collect_pairs(records);
    if (!stats) {
        for (const ActionPair& p : pairs) {
            std::cout << json{{"text_1", p.text_1},
                              {"text_2", p.text_2},
                              {"source", p.source == PairSource::overlap ? "overlap" : "transition_bridge"},
                              {"frames_1", p.motion_1.size()},
                              {"frames_2", p.motion_2.size()}}
                             .dump()
                      << '\n';
        }
        return 0;
    }
    std::size_t bridges = 0, min_len = 0, max_len = 0;
    double total_len = 0.0;
    for (const ActionPair& p : pairs) {
        bridges += p.source == PairSource::transition_bridge ? 1 : 0;
        const std::size_t len = p.motion_1.size() + p.motion_2.size();
        min_len = min_len == 0 ? len : std::min(min_len, len);
        max_len = std::max(max_len, len);
        total_len += static_cast<double>(len);
    }
    json out{{"split", split},
             {"records", records.size()},
             {"pairs", pairs.size()},
             {"overlap_pairs", pairs.size() - bridges},
             {"transition_bridge_pairs", bridges},
             {"singles", collect_singles(records, 0).size()},
             {"pair_frames", {{"min", min_len}, {"max", max_len}, {"mean", pairs.empty() ? 0.0 : total_len / pairs.size()}}}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

struct ComposeArgs {
    std::string strategy = "teach";
    std::string prompts;
    std::string checkpoint;
    std::string out;
    int slerp_frames = 8;
    std::string stitch_mode = "overwrite";
    bool deterministic = false;
    std::uint64_t seed = 0;
};

int run_compose(const ComposeArgs& a)
{
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    CompositionRequest req;
    req.prompts = read_prompts(a.prompts);
    req.strategy = strategy_from_string(a.strategy);
    req.stitch = {a.slerp_frames, stitch_mode_from_string(a.stitch_mode)};
    req.sample = a.deterministic ? SampleMode::deterministic : SampleMode::stochastic;
    req.seed = a.seed;
    const Composition c = compose(req, *ck.model);
    MotionFile file{c.motion, {}};
    for (std::size_t i = 0; i < req.prompts.size(); ++i) {
        file.labels.push_back(
            {req.prompts[i].text, static_cast<int>(c.spans[i].begin), static_cast<int>(c.spans[i].end)});
    }
    write_motion_file(a.out, file);
    std::printf("wrote %zu frames to %s\n", c.motion.size(), a.out.c_str());
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string manifest;
    std::string strategy = "teach";
    std::uint64_t seed = 0;
    std::string out;
    std::size_t max_pairs = 0;
    int slerp_frames = 8;
    std::string stitch_mode = "overwrite";
    bool deterministic = false;
};

int run_eval(const EvalArgs& a)
{
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const Strategy strategy = strategy_from_string(a.strategy);
    if (ck.model->strategy() != strategy) {
        throw StrategyMismatch("checkpoint was trained for " + to_string(ck.model->strategy()) + ", not " +
                               a.strategy);
    }
    const CorpusManifest manifest = CorpusManifest::load(a.manifest);
    std::vector<ActionPair> pairs = collect_pairs(load_records(manifest, Split::val));
    if (a.max_pairs > 0 && pairs.size() > a.max_pairs) {
        pairs.erase(pairs.begin() + static_cast<std::ptrdiff_t>(a.max_pairs), pairs.end());
    }
    if (pairs.empty()) {
        throw std::runtime_error(a.manifest + ": no validation pairs");
    }
    const StitchOptions stitch{a.slerp_frames, stitch_mode_from_string(a.stitch_mode)};
    const SampleMode mode = a.deterministic ? SampleMode::deterministic : SampleMode::stochastic;
    const MetricReport report = evaluate(pairs, pair_generator(*ck.model, stitch, mode), a.seed);

    const json config{{"model", to_json(ck.model->config())},
                      {"strategy", a.strategy},
                      {"checkpoint", fs::path(a.checkpoint).filename().string()},
                      {"manifest", fs::path(a.manifest).filename().string()},
                      {"pairs", pairs.size()},
                      {"seed", a.seed},
                      {"slerp_frames", a.slerp_frames},
                      {"stitch_mode", a.stitch_mode},
                      {"sample", a.deterministic ? "deterministic" : "stochastic"}};
    json out = to_json(report);
    out["config"] = config;
    out["config_hash"] = config_hash(config);
    write_file_atomic(a.out, out.dump(2) + "\n");
    std::printf("APE mean_global %.6f  AVE mean_global %.6f  transition %.6f (aligned %.6f) over %zu pairs\n",
                report.ape[PositionVariant::mean_global], report.ave[PositionVariant::mean_global],
                report.transition_without_align, report.transition_with_align, pairs.size());
    return 0;
}

struct ServeArgs {
    std::string checkpoint;
    std::optional<int> port;
    std::string host = "0.0.0.0";
    std::string persist_dir;
    int slerp_frames = 8;
    std::string stitch_mode = "overwrite";
};

int run_serve(const ServeArgs& a)
{
    std::string checkpoint = a.checkpoint;
    if (checkpoint.empty()) {
        const char* env = std::getenv(kCheckpointEnv);
        if (env == nullptr || *env == '\0') {
            throw std::runtime_error(std::string("no checkpoint: pass --checkpoint or set ") + kCheckpointEnv);
        }
        checkpoint = env;
    }
    const int port = a.port ? *a.port : port_from_env();
    Checkpoint ck = load_checkpoint(checkpoint);
    SessionOptions options;
    options.stitch = {a.slerp_frames, stitch_mode_from_string(a.stitch_mode)};
    if (!a.persist_dir.empty()) {
        options.persist_dir = a.persist_dir;
    }
    SessionManager sessions(std::shared_ptr<const TeachModel>(std::move(ck.model)), options);
    httplib::Server server;
    register_routes(server, sessions);
    std::printf("serving %s on %s:%d\n", checkpoint.c_str(), a.host.c_str(), port);
    std::fflush(stdout);
    if (!server.listen(a.host, port)) {
        throw std::runtime_error("cannot listen on " + a.host + ":" + std::to_string(port));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Text-driven motion composition"};
    app.require_subcommand(1);

    CLI::App* dataset = app.add_subcommand("dataset", "Synthetic corpus tools");
    dataset->require_subcommand(1);
    std::string actions, synth_out;
    std::uint64_t synth_seed = 0;
    std::size_t synth_count = 500;
    double val_fraction = 0.1;
    CLI::App* synth = dataset->add_subcommand("synth", "Generate one labeled sequence or a random corpus");
    synth->add_option("--actions", actions, "JSON array of {action, duration_s}; omit for a random corpus");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--seed", synth_seed);
    synth->add_option("--count", synth_count, "Records in a random corpus");
    synth->add_option("--val-fraction", val_fraction)->check(CLI::Range(0.0, 1.0));

    std::string pairs_manifest, pairs_split = "train";
    bool pairs_stats = false;
    CLI::App* pairs = dataset->add_subcommand("pairs", "List or summarize the action pairs of a corpus");
    pairs->add_option("--manifest", pairs_manifest)->required();
    pairs->add_option("--split", pairs_split)->check(CLI::IsMember({"train", "val"}));
    pairs->add_flag("--stats", pairs_stats, "Print counts and lengths instead of the pairs");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train a model");
    add_train_options(*train, train_args);
    train->add_option("--strategy", train_args.strategy)->check(CLI::IsMember({"teach", "independent", "joint"}));
    train->add_option("--past-frames", train_args.past_frames);
    train->add_flag("--resume", train_args.resume, "Continue from the newest checkpoint in --out");

    ComposeArgs compose_args;
    CLI::App* compose_cmd = app.add_subcommand("compose", "Generate a motion for a list of prompts");
    compose_cmd->add_option("--strategy", compose_args.strategy)->check(CLI::IsMember({"teach", "independent", "joint"}));
    compose_cmd->add_option("--prompts", compose_args.prompts, "JSON array of {text, duration_s}")->required();
    compose_cmd->add_option("--checkpoint", compose_args.checkpoint)->required();
    compose_cmd->add_option("--out", compose_args.out)->required();
    compose_cmd->add_option("--slerp-frames", compose_args.slerp_frames)->check(CLI::NonNegativeNumber);
    compose_cmd->add_option("--stitch-mode", compose_args.stitch_mode)->check(CLI::IsMember({"overwrite", "insert"}));
    compose_cmd->add_flag("--deterministic", compose_args.deterministic, "Use latent means instead of samples");
    compose_cmd->add_option("--seed", compose_args.seed);

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint on the validation pairs");
    eval->add_option("--checkpoint", eval_args.checkpoint)->required();
    eval->add_option("--manifest", eval_args.manifest)->required();
    eval->add_option("--strategy", eval_args.strategy)->check(CLI::IsMember({"teach", "independent", "joint"}));
    eval->add_option("--seed", eval_args.seed);
    eval->add_option("--out", eval_args.out)->required();
    eval->add_option("--max-pairs", eval_args.max_pairs, "Keep the first n pairs (0: all)");
    eval->add_option("--slerp-frames", eval_args.slerp_frames)->check(CLI::NonNegativeNumber);
    eval->add_option("--stitch-mode", eval_args.stitch_mode)->check(CLI::IsMember({"overwrite", "insert"}));
    eval->add_flag("--deterministic", eval_args.deterministic);

    TrainArgs ablate_args;
    std::vector<int> grid{1, 5, 10, 15};
    CLI::App* ablate = app.add_subcommand("ablate", "Past-frame ablation of the teach model");
    add_train_options(*ablate, ablate_args);
    ablate->add_option("--past-frames", grid, "Past-frame counts")->delimiter(',')->check(CLI::NonNegativeNumber);

    ServeArgs serve_args;
    CLI::App* serve = app.add_subcommand("serve", "Run the HTTP session service");
    serve->add_option("--checkpoint", serve_args.checkpoint, std::string("Defaults to $") + kCheckpointEnv);
    serve->add_option("--port", serve_args.port, std::string("Defaults to $") + kPortEnv + " or 7860");
    serve->add_option("--host", serve_args.host);
    serve->add_option("--persist-dir", serve_args.persist_dir, "Keep sessions as JSON files here");
    serve->add_option("--slerp-frames", serve_args.slerp_frames)->check(CLI::NonNegativeNumber);
    serve->add_option("--stitch-mode", serve_args.stitch_mode)->check(CLI::IsMember({"overwrite", "insert"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return run_synth(actions, synth_out, synth_seed, synth_count, val_fraction);
        }
        if (pairs->parsed()) {
            return run_pairs(pairs_manifest, pairs_split, pairs_stats);
        }
        if (train->parsed()) {
            const TrainSummary s = cmd_train(train_options(train_args));
            std::printf("trained %d epochs (%lld steps); best val APE %.6f; best %s; last %s\n", s.epochs_completed,
                        static_cast<long long>(s.steps), s.best_val_ape, s.best_checkpoint.c_str(),
                        s.last_checkpoint.c_str());
            return 0;
        }
        if (compose_cmd->parsed()) {
            return run_compose(compose_args);
        }
        if (eval->parsed()) {
            return run_eval(eval_args);
        }
        if (ablate->parsed()) {
            AblationOptions o{train_options(ablate_args), grid};
            const auto rows = run_ablation(o);
            std::cout << ablation_csv(rows);
            std::printf("wrote %s\n", ablation_csv_path(ablate_args.out).c_str());
            return 0;
        }
        if (serve->parsed()) {
            return run_serve(serve_args);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
