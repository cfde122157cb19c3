#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcomp/core/features.hpp"
#include "mcomp/dataset/corpus.hpp"
#include "mcomp/model/config.hpp"
#include "mcomp/model/losses.hpp"
#include "mcomp/nn/layers.hpp"
#include "mcomp/text/encoder.hpp"

namespace mcomp {

enum class SampleMode { deterministic, stochastic };

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One training example in standardized feature space. Pairs carry a second
// member; single clips (independent and joint strategies) do not.
struct TrainItem {
    TokenSequence text_1;
    FeatureMatrix target_1;
    std::optional<TokenSequence> text_2;
    FeatureMatrix target_2;
};

struct LossReport {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    double cross_kl = 0.0;
    double latent_l1 = 0.0;
    std::size_t items = 0;
    bool operator==(const LossReport&) const = default;
};

struct Prompt {
    std::string text;
    double duration_s = 0.0;
};

class TeachModel {
public:
    // Strategies other than teach never use past frames; their config is
    // stored with past_frames = 0.
    TeachModel(ModelConfig config, Strategy strategy, Vocabulary vocab, FeatureStats stats, SkeletonPtr skeleton,
               std::uint64_t init_seed);

    TeachModel(const TeachModel&) = delete;
    TeachModel& operator=(const TeachModel&) = delete;

    const ModelConfig& config() const { return config_; }
    Strategy strategy() const { return strategy_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    const FeatureStats& stats() const { return stats_; }
    const SkeletonPtr& skeleton() const { return skeleton_; }
    int feature_dim() const { return stats_.dim(); }
    nn::ParameterStore& parameters() { return store_; }
    const nn::ParameterStore& parameters() const { return store_; }
    // Parameter names the optimizer must leave alone.
    std::vector<std::string> frozen_parameters() const;

    nn::Var text_features(nn::Context& ctx, const TokenSequence& tokens) const;
    // One feature row per past frame (standardized input rows); zero rows in,
    // zero rows out.
    nn::Var past_encode(nn::Context& ctx, const nn::Var& past) const;
    LatentDistribution encode_distribution(nn::Context& ctx, const nn::Var& text_features,
                                           const nn::Var& past_features) const;
    LatentDistribution motion_encode(nn::Context& ctx, const nn::Var& motion) const;
    // Stochastic mode draws from rng, which must then be non-null.
    nn::Var sample_latent(const LatentDistribution& dist, SampleMode mode, std::mt19937_64* rng) const;
    nn::Var decode(nn::Context& ctx, const nn::Var& z, int frames) const;

    // An empty past block (PC disabled) for encode_distribution.
    nn::Var no_past() const;

    // Training examples for this model's strategy: canonicalized jointly for
    // pairs, individually for singles, then standardized.
    TrainItem make_pair_item(const ActionPair& pair) const;
    TrainItem make_joint_item(const ActionPair& pair) const;
    TrainItem make_single_item(const std::string& text, const Motion& motion) const;

    struct ItemLosses {
        nn::Var total;
        nn::Var recon;
        nn::Var kl;
        nn::Var cross_kl;
        // Part of cross_kl: KL of the motion distributions to N(0, I).
        nn::Var motion_prior_kl;
        nn::Var latent_l1;
        nn::Var motion_recon;
    };
    ItemLosses item_losses(nn::Context& ctx, const TrainItem& item) const;

    // Zeroes gradients and accumulates d(mean total)/d(theta) over the batch.
    // Item k draws dropout masks and latent noise from derive_seed(seed, k).
    LossReport accumulate_gradients(const std::vector<const TrainItem*>& batch, std::uint64_t seed);
    // accumulate_gradients followed by one optimizer update. Throws
    // NonFiniteLoss (parameters untouched) when any component is not finite.
    LossReport training_step(const std::vector<const TrainItem*>& batch, nn::AdamW& optimizer, std::uint64_t seed);

    int frames_for(double duration_s) const;

    // Standardized features for `frames` frames of `tokens`, optionally
    // conditioned on standardized past rows. Eval mode (no dropout).
    FeatureMatrix generate_features(const TokenSequence& tokens, int frames, const FeatureMatrix* past,
                                    SampleMode mode, std::uint64_t seed) const;
    // Un-standardized, rotation-orthonormalized motion.
    Motion features_to_output(const FeatureMatrix& standardized) const;

    // Next action after `previous` (null for the first). With past
    // conditioning the previous motion is canonicalized, its last P frames
    // condition the encoder, and the result is mapped back into the frame of
    // `previous`. Throws EmptyText on an empty prompt.
    Motion generate_next(const Motion* previous, const std::string& text, int frames, SampleMode mode,
                         std::uint64_t seed) const;

    // One motion per prompt, action i conditioned on action i-1 and drawn
    // from derive_seed(seed, i). Throws std::invalid_argument on no prompts or
    // a non-positive duration.
    std::vector<Motion> generate_sequence(const std::vector<Prompt>& prompts, SampleMode mode,
                                          std::uint64_t seed) const;

private:
    FeatureMatrix standardized(const Motion& canonical) const;

    ModelConfig config_;
    Strategy strategy_;
    Vocabulary vocab_;
    FeatureStats stats_;
    SkeletonPtr skeleton_;

    nn::ParameterStore store_;
    TextEncoder text_;
    nn::Linear past_in_;
    nn::TransformerEncoder past_encoder_;
    nn::Parameter* mu_token_ = nullptr;
    nn::Parameter* sigma_token_ = nullptr;
    nn::Parameter* sep_token_ = nullptr;
    nn::TransformerEncoder text_encoder_;
    nn::Linear motion_in_;
    nn::Parameter* motion_mu_token_ = nullptr;
    nn::Parameter* motion_sigma_token_ = nullptr;
    nn::TransformerEncoder motion_encoder_;
    nn::TransformerDecoder decoder_;
    nn::Linear out_;
};

// Texts and canonical motions a strategy trains on, for building the
// vocabulary and feature statistics before the model exists.
struct TrainingCorpus {
    std::vector<std::string> texts;
    std::vector<Motion> canonical_motions;
};

TrainingCorpus training_corpus(Strategy strategy, const std::vector<ActionPair>& pairs,
                               const std::vector<SingleClip>& singles);

FeatureStats feature_stats(const std::vector<Motion>& motions);

// Comma-joined text of the joint strategy.
std::string joint_text(const std::string& first, const std::string& second);

} // namespace mcomp
