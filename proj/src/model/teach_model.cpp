#include "mcomp/model/teach_model.hpp"

#include <cmath>

#include "mcomp/core/seed.hpp"

namespace mcomp {

namespace {

ModelConfig effective_config(ModelConfig c, Strategy s)
{
    c.validate();
    if (s != Strategy::teach) {
        c.past_frames = 0;
    }
    return c;
}

nn::Var positional(const nn::Var& x)
{
    return nn::add(x, nn::constant(nn::sinusoidal_encoding(x.rows(), x.cols())));
}

nn::Var sigma_map(const nn::Var& raw)
{
    return nn::softplus(raw);
}

// The symmetric text/motion KL treats the motion distribution as a constant
// and the latent L1 treats the motion sample as one. The motion encoder
// learns from its own reconstruction and its prior KL only.
nn::Var text_motion_kl(const LatentDistribution& t, const LatentDistribution& m)
{
    const nn::Var mu = nn::constant(m.mu.value());
    const nn::Var sigma = nn::constant(m.sigma.value());
    return nn::add(nn::kl_diag(t.mu, t.sigma, mu, sigma), nn::kl_diag(mu, sigma, t.mu, t.sigma));
}

nn::Var latent_l1_to(const nn::Var& z_text, const nn::Var& z_motion)
{
    return latent_l1(z_text, nn::constant(z_motion.value()));
}

} // namespace

TeachModel::TeachModel(ModelConfig config, Strategy strategy, Vocabulary vocab, FeatureStats stats,
                       SkeletonPtr skeleton, std::uint64_t init_seed)
    : config_(effective_config(config, strategy)),
      strategy_(strategy),
      vocab_(std::move(vocab)),
      stats_(std::move(stats)),
      skeleton_(std::move(skeleton))
{
    if (stats_.dim() != mcomp::feature_dim(skeleton_->joint_count())) {
        throw ShapeMismatch("feature statistics do not match the skeleton");
    }
    const Eigen::Index d = config_.latent_dim;
    const Eigen::Index D = stats_.dim();
    const int L = config_.layers;
    const int H = config_.heads;
    const Eigen::Index ff = config_.feedforward;
    std::mt19937_64 rng(init_seed);
    text_ = TextEncoder::create(store_, vocab_.size(), d, rng, config_.freeze_text);
    past_in_ = nn::Linear::create(store_, "past.in", D, d, rng);
    past_encoder_ = nn::TransformerEncoder::create(store_, "past.encoder", L, d, H, ff, rng);
    mu_token_ = &store_.add("text_enc.mu_token", nn::normal_init(1, d, 1.0, rng));
    sigma_token_ = &store_.add("text_enc.sigma_token", nn::normal_init(1, d, 1.0, rng));
    sep_token_ = &store_.add("text_enc.sep_token", nn::normal_init(1, d, 1.0, rng));
    text_encoder_ = nn::TransformerEncoder::create(store_, "text_enc.encoder", L, d, H, ff, rng);
    motion_in_ = nn::Linear::create(store_, "motion_enc.in", D, d, rng);
    motion_mu_token_ = &store_.add("motion_enc.mu_token", nn::normal_init(1, d, 1.0, rng));
    motion_sigma_token_ = &store_.add("motion_enc.sigma_token", nn::normal_init(1, d, 1.0, rng));
    motion_encoder_ = nn::TransformerEncoder::create(store_, "motion_enc.encoder", L, d, H, ff, rng);
    decoder_ = nn::TransformerDecoder::create(store_, "decoder", L, d, H, ff, rng);
    out_ = nn::Linear::create(store_, "decoder.out", d, D, rng);
}

std::vector<std::string> TeachModel::frozen_parameters() const
{
    if (text_.frozen()) {
        return {text_.embedding().name};
    }
    return {};
}

nn::Var TeachModel::text_features(nn::Context& ctx, const TokenSequence& tokens) const
{
    return text_.encode(ctx, tokens);
}

nn::Var TeachModel::no_past() const
{
    return nn::constant(nn::Mat(0, config_.latent_dim));
}

nn::Var TeachModel::past_encode(nn::Context& ctx, const nn::Var& past) const
{
    if (past.cols() != feature_dim()) {
        throw ShapeMismatch("past frames have " + std::to_string(past.cols()) + " features, expected " +
                            std::to_string(feature_dim()));
    }
    if (past.rows() == 0) {
        return no_past();
    }
    return past_encoder_(ctx, ctx.drop(positional(past_in_(ctx, past))));
}

LatentDistribution TeachModel::encode_distribution(nn::Context& ctx, const nn::Var& text_features,
                                                   const nn::Var& past_features) const
{
    if (text_features.rows() == 0) {
        throw std::invalid_argument("encode_distribution needs at least one text token");
    }
    std::vector<nn::Var> parts{ctx.graph.param(*mu_token_), ctx.graph.param(*sigma_token_)};
    if (past_features.rows() > 0) {
        parts.push_back(past_features);
    }
    parts.push_back(ctx.graph.param(*sep_token_));
    parts.push_back(text_features);
    const nn::Var h = text_encoder_(ctx, ctx.drop(positional(nn::concat_rows(parts))));
    return {nn::slice_rows(h, 0, 1), sigma_map(nn::slice_rows(h, 1, 1))};
}

LatentDistribution TeachModel::motion_encode(nn::Context& ctx, const nn::Var& motion) const
{
    if (motion.rows() == 0 || motion.cols() != feature_dim()) {
        throw ShapeMismatch("motion_encode needs F >= 1 rows of " + std::to_string(feature_dim()) + " features");
    }
    const nn::Var x = nn::concat_rows(
        {ctx.graph.param(*motion_mu_token_), ctx.graph.param(*motion_sigma_token_), motion_in_(ctx, motion)});
    const nn::Var h = motion_encoder_(ctx, ctx.drop(positional(x)));
    return {nn::slice_rows(h, 0, 1), sigma_map(nn::slice_rows(h, 1, 1))};
}

nn::Var TeachModel::sample_latent(const LatentDistribution& dist, SampleMode mode, std::mt19937_64* rng) const
{
    if (mode == SampleMode::deterministic) {
        return dist.mu;
    }
    if (rng == nullptr) {
        throw std::logic_error("stochastic sampling without a random stream");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    nn::Mat eps(1, dist.mu.cols());
    for (Eigen::Index i = 0; i < eps.size(); ++i) {
        eps(0, i) = normal(*rng);
    }
    return nn::add(dist.mu, nn::mul(dist.sigma, nn::constant(std::move(eps))));
}

nn::Var TeachModel::decode(nn::Context& ctx, const nn::Var& z, int frames) const
{
    if (frames < 1) {
        throw std::invalid_argument("decode needs at least one frame");
    }
    const nn::Var queries = ctx.drop(nn::constant(nn::sinusoidal_encoding(frames, config_.latent_dim)));
    return out_(ctx, decoder_(ctx, queries, z));
}

FeatureMatrix TeachModel::standardized(const Motion& canonical) const
{
    return stats_.apply(motion_features(canonical));
}

TrainItem TeachModel::make_pair_item(const ActionPair& pair) const
{
    const Motion both = canonicalize(concatenate({pair.motion_1, pair.motion_2}));
    const std::size_t n1 = pair.motion_1.size();
    return {vocab_.tokenize(pair.text_1), standardized(both.slice(0, n1)), vocab_.tokenize(pair.text_2),
            standardized(both.slice(n1, both.size()))};
}

TrainItem TeachModel::make_joint_item(const ActionPair& pair) const
{
    const Motion both = canonicalize(concatenate({pair.motion_1, pair.motion_2}));
    return {vocab_.tokenize(joint_text(pair.text_1, pair.text_2)), standardized(both), std::nullopt, {}};
}

TrainItem TeachModel::make_single_item(const std::string& text, const Motion& motion) const
{
    return {vocab_.tokenize(text), standardized(canonicalize(motion)), std::nullopt, {}};
}

TeachModel::ItemLosses TeachModel::item_losses(nn::Context& ctx, const TrainItem& item) const
{
    const nn::Var gt_1 = nn::constant(item.target_1);
    const int f1 = static_cast<int>(item.target_1.rows());
    const LatentDistribution text_1 = encode_distribution(ctx, text_features(ctx, item.text_1), no_past());
    const nn::Var z_1 = sample_latent(text_1, SampleMode::stochastic, ctx.rng);
    const nn::Var gen_1 = decode(ctx, z_1, f1);
    const LatentDistribution motion_1 = motion_encode(ctx, gt_1);
    const nn::Var zm_1 = sample_latent(motion_1, SampleMode::stochastic, ctx.rng);

    ItemLosses out;
    if (!item.text_2) {
        out.recon = nn::smooth_l1_mean(gen_1, gt_1);
        out.kl = nn::kl_standard(text_1.mu, text_1.sigma);
        out.motion_prior_kl = nn::kl_standard(motion_1.mu, motion_1.sigma);
        out.cross_kl = nn::add(text_motion_kl(text_1, motion_1), out.motion_prior_kl);
        out.latent_l1 = latent_l1_to(z_1, zm_1);
        out.motion_recon = nn::smooth_l1_mean(decode(ctx, zm_1, f1), gt_1);
    } else {
        const nn::Var gt_2 = nn::constant(item.target_2);
        const int k = std::min(config_.past_frames, f1);
        const nn::Var past_source = config_.ground_truth_past ? gt_1 : gen_1;
        const nn::Var past = past_encode(ctx, nn::slice_rows(past_source, f1 - k, k));
        const LatentDistribution text_2 = encode_distribution(ctx, text_features(ctx, *item.text_2), past);
        const nn::Var z_2 = sample_latent(text_2, SampleMode::stochastic, ctx.rng);
        const nn::Var gen_2 = decode(ctx, z_2, static_cast<int>(item.target_2.rows()));
        const LatentDistribution motion_2 = motion_encode(ctx, gt_2);
        const nn::Var zm_2 = sample_latent(motion_2, SampleMode::stochastic, ctx.rng);
        out.recon = reconstruction_loss(gt_1, gen_1, gt_2, gen_2);
        out.kl = prior_kl(text_1, text_2);
        out.motion_prior_kl =
            nn::add(nn::kl_standard(motion_1.mu, motion_1.sigma), nn::kl_standard(motion_2.mu, motion_2.sigma));
        out.cross_kl =
            nn::add(nn::add(text_motion_kl(text_1, motion_1), text_motion_kl(text_2, motion_2)), out.motion_prior_kl);
        out.latent_l1 = nn::add(latent_l1_to(z_1, zm_1), latent_l1_to(z_2, zm_2));
        out.motion_recon = reconstruction_loss(gt_1, decode(ctx, zm_1, f1), gt_2,
                                               decode(ctx, zm_2, static_cast<int>(item.target_2.rows())));
    }
    out.total = nn::add(nn::add(nn::add(out.recon, out.motion_recon),
                                nn::scale(nn::add(out.kl, out.cross_kl), config_.lambda_kl)),
                        out.latent_l1);
    return out;
}

LossReport TeachModel::accumulate_gradients(const std::vector<const TrainItem*>& batch, std::uint64_t seed)
{
    if (batch.empty()) {
        throw std::invalid_argument("empty training batch");
    }
    store_.zero_grad();
    const double w = 1.0 / static_cast<double>(batch.size());
    LossReport report;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        nn::Graph graph;
        std::mt19937_64 rng(derive_seed(seed, k));
        nn::Context ctx{graph, true, config_.dropout, &rng};
        const ItemLosses l = item_losses(ctx, *batch[k]);
        const double parts[] = {nn::scalar(l.total), nn::scalar(l.recon), nn::scalar(l.kl), nn::scalar(l.cross_kl),
                                nn::scalar(l.latent_l1)};
        static const char* names[] = {"total", "recon", "kl", "cross_kl", "latent_l1"};
        for (int i = 0; i < 5; ++i) {
            if (!std::isfinite(parts[i])) {
                throw NonFiniteLoss("non-finite " + std::string(names[i]) + " loss (" + std::to_string(parts[i]) +
                                    ") on batch item " + std::to_string(k));
            }
        }
        graph.backward(nn::scale(l.total, w));
        report.total += w * parts[0];
        report.recon += w * parts[1];
        report.kl += w * parts[2];
        report.cross_kl += w * parts[3];
        report.latent_l1 += w * parts[4];
    }
    report.items = batch.size();
    return report;
}

LossReport TeachModel::training_step(const std::vector<const TrainItem*>& batch, nn::AdamW& optimizer,
                                     std::uint64_t seed)
{
    const LossReport report = accumulate_gradients(batch, seed);
    for (const nn::Parameter& p : store_.all()) {
        if (!p.grad.allFinite()) {
            throw NonFiniteLoss("non-finite gradient for " + p.name);
        }
    }
    optimizer.step(store_, frozen_parameters());
    return report;
}

int TeachModel::frames_for(double duration_s) const
{
    if (!(duration_s > 0.0)) {
        throw std::invalid_argument("duration must be positive");
    }
    return std::max(1, static_cast<int>(std::lround(duration_s * config_.fps)));
}

FeatureMatrix TeachModel::generate_features(const TokenSequence& tokens, int frames, const FeatureMatrix* past,
                                            SampleMode mode, std::uint64_t seed) const
{
    nn::Graph graph(false);
    std::mt19937_64 rng(seed);
    nn::Context ctx{graph, false, 0.0, &rng};
    nn::Var past_features = no_past();
    if (past != nullptr && past->rows() > 0 && config_.past_frames > 0) {
        const Eigen::Index k = std::min<Eigen::Index>(config_.past_frames, past->rows());
        past_features = past_encode(ctx, nn::constant(past->bottomRows(k)));
    }
    const LatentDistribution dist = encode_distribution(ctx, text_features(ctx, tokens), past_features);
    return decode(ctx, sample_latent(dist, mode, &rng), frames).value();
}

Motion TeachModel::features_to_output(const FeatureMatrix& standardized_features) const
{
    return features_to_motion(stats_.invert(standardized_features), config_.fps, skeleton_).orthonormalized();
}

Motion TeachModel::generate_next(const Motion* previous, const std::string& text, int frames, SampleMode mode,
                                 std::uint64_t seed) const
{
    const TokenSequence tokens = vocab_.tokenize(text);
    if (previous == nullptr || strategy_ != Strategy::teach || config_.past_frames == 0) {
        return features_to_output(generate_features(tokens, frames, nullptr, mode, seed));
    }
    const YawTransform to_canonical = canonical_transform(previous->front());
    const Motion prev = apply_rigid(*previous, to_canonical);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config_.past_frames), prev.size());
    const FeatureMatrix past = standardized(prev.slice(prev.size() - k, prev.size()));
    const Motion out = features_to_output(generate_features(tokens, frames, &past, mode, seed));
    return apply_rigid(out, to_canonical.inverse());
}

std::vector<Motion> TeachModel::generate_sequence(const std::vector<Prompt>& prompts, SampleMode mode,
                                                  std::uint64_t seed) const
{
    if (prompts.empty()) {
        throw std::invalid_argument("generate_sequence needs at least one prompt");
    }
    std::vector<Motion> out;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        const int frames = frames_for(prompts[i].duration_s);
        out.push_back(generate_next(i == 0 ? nullptr : &out[i - 1], prompts[i].text, frames, mode,
                                    derive_seed(seed, i)));
    }
    return out;
}

TrainingCorpus training_corpus(Strategy strategy, const std::vector<ActionPair>& pairs,
                               const std::vector<SingleClip>& singles)
{
    TrainingCorpus c;
    switch (strategy) {
    case Strategy::teach:
        for (const ActionPair& p : pairs) {
            c.texts.push_back(p.text_1);
            c.texts.push_back(p.text_2);
            c.canonical_motions.push_back(canonicalize(concatenate({p.motion_1, p.motion_2})));
        }
        break;
    case Strategy::joint:
        for (const ActionPair& p : pairs) {
            c.texts.push_back(joint_text(p.text_1, p.text_2));
            c.canonical_motions.push_back(canonicalize(concatenate({p.motion_1, p.motion_2})));
        }
        break;
    case Strategy::independent:
        for (const SingleClip& s : singles) {
            c.texts.push_back(s.text);
            c.canonical_motions.push_back(canonicalize(s.motion));
        }
        break;
    }
    return c;
}

FeatureStats feature_stats(const std::vector<Motion>& motions)
{
    std::vector<FeatureMatrix> feats;
    feats.reserve(motions.size());
    for (const Motion& m : motions) {
        feats.push_back(motion_features(m));
    }
    return FeatureStats::compute(feats);
}

std::string joint_text(const std::string& first, const std::string& second)
{
    return first + ", " + second;
}

} // namespace mcomp
