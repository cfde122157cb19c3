#include <gtest/gtest.h>

#include <cmath>

#include "mcomp/core/seed.hpp"
#include "mcomp/model/checkpoint.hpp"
#include "mcomp/model/losses.hpp"
#include "support/gradcheck.hpp"
#include "support/model_fixture.hpp"
#include "support/temp_dir.hpp"

using namespace mcomp;
using namespace mcomp::testing;

namespace {

nn::Var c(std::initializer_list<double> values)
{
    nn::Mat m(1, static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) {
        m(0, i++) = v;
    }
    return nn::constant(m);
}

// Weighted sum with fixed random weights, so layer-normed outputs do not
// sum to a constant.
nn::Var probe(const nn::Var& x, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return nn::sum(nn::mul(x, nn::constant(random_mat(rng, x.rows(), x.cols()))));
}

struct EvalContext {
    nn::Graph graph{false};
    nn::Context ctx{graph, false, 0.0, nullptr};
};

FeatureMatrix standardized_rows(const TeachModel& m, int rows, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return random_mat(rng, rows, m.feature_dim());
}

} // namespace

TEST(Losses, ReconstructionClosedForms)
{
    const nn::Var zero = c({0.0});
    EXPECT_EQ(nn::scalar(nn::smooth_l1_mean(c({0.5}), zero)), 0.125);
    EXPECT_EQ(nn::scalar(nn::smooth_l1_mean(c({2.0}), zero)), 1.5);
    EXPECT_EQ(nn::scalar(nn::smooth_l1_mean(c({-2.0, 0.5}), c({0.0, 0.0}))), 0.8125);
    EXPECT_EQ(nn::scalar(reconstruction_loss(zero, c({0.5}), zero, c({2.0}))), 1.625);
}

TEST(Losses, KlClosedForms)
{
    const LatentDistribution standard{c({0.0, 0.0}), c({1.0, 1.0})};
    EXPECT_EQ(nn::scalar(nn::kl_standard(standard.mu, standard.sigma)), 0.0);
    EXPECT_EQ(nn::scalar(nn::kl_diag(standard.mu, standard.sigma, standard.mu, standard.sigma)), 0.0);
    EXPECT_EQ(nn::scalar(cross_modal_kl(standard, standard)), 0.0);
    EXPECT_EQ(nn::scalar(nn::kl_standard(c({1.0}), c({1.0}))), 0.5);
    EXPECT_DOUBLE_EQ(nn::scalar(nn::kl_standard(c({0.0}), c({2.0}))), 1.5 - std::log(2.0));
    EXPECT_DOUBLE_EQ(nn::scalar(nn::kl_diag(c({0.0}), c({1.0}), c({0.0}), c({2.0}))), std::log(2.0) + 0.125 - 0.5);
    // KL(t||m) = KL(m||t) = KL(m||prior) = 0.5.
    EXPECT_EQ(nn::scalar(cross_modal_kl({c({0.0}), c({1.0})}, {c({1.0}), c({1.0})})), 1.5);
    EXPECT_EQ(nn::scalar(prior_kl({c({1.0}), c({1.0})}, {c({0.0}), c({1.0})})), 0.5);
}

TEST(Losses, KlMatchesMonteCarlo)
{
    const std::vector<double> mu1{0.5, -1.0, 0.3}, s1{0.8, 1.2, 0.5}, mu2{0.0, 0.5, -0.2}, s2{1.0, 0.9, 0.7};
    const double closed =
        nn::scalar(nn::kl_diag(c({0.5, -1.0, 0.3}), c({0.8, 1.2, 0.5}), c({0.0, 0.5, -0.2}), c({1.0, 0.9, 0.7})));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    const int samples = 1'000'000;
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) {
        for (int d = 0; d < 3; ++d) {
            const double x = mu1[d] + s1[d] * n(rng);
            const double a = (x - mu1[d]) / s1[d];
            const double b = (x - mu2[d]) / s2[d];
            acc += std::log(s2[d] / s1[d]) - 0.5 * a * a + 0.5 * b * b;
        }
    }
    const double mc = acc / samples;
    EXPECT_LT(std::abs(mc - closed) / closed, 0.01) << "closed " << closed << " mc " << mc;
}

TEST(Losses, LatentL1)
{
    EXPECT_EQ(nn::scalar(latent_l1(c({1.0, 2.0, 3.0}), c({1.0, 0.0, -1.0}))), 2.0);
    EXPECT_EQ(nn::scalar(latent_l1(c({0.5}), c({0.5}))), 0.0);
}

TEST(TeachModel, EncoderShapesAndPositivity)
{
    const auto m = tiny_model(Strategy::teach);
    const int d = m->config().latent_dim;
    EvalContext e;
    const nn::Var text = m->text_features(e.ctx, m->vocabulary().tokenize("walk forward slowly"));
    EXPECT_EQ(text.rows(), 3);
    EXPECT_EQ(text.cols(), d);

    const nn::Var none = m->past_encode(e.ctx, nn::constant(standardized_rows(*m, 0, 1)));
    EXPECT_EQ(none.rows(), 0);
    const nn::Var five = m->past_encode(e.ctx, nn::constant(standardized_rows(*m, 5, 1)));
    EXPECT_EQ(five.rows(), 5);
    EXPECT_EQ(five.cols(), d);

    for (const nn::Var& past : {m->no_past(), five}) {
        const LatentDistribution dist = m->encode_distribution(e.ctx, text, past);
        EXPECT_EQ(dist.mu.rows(), 1);
        EXPECT_EQ(dist.mu.cols(), d);
        EXPECT_EQ(dist.sigma.cols(), d);
        EXPECT_TRUE((dist.sigma.value().array() > 0.0).all());
    }
    const LatentDistribution motion = m->motion_encode(e.ctx, nn::constant(standardized_rows(*m, 9, 2)));
    EXPECT_EQ(motion.mu.cols(), d);
    EXPECT_TRUE((motion.sigma.value().array() > 0.0).all());
}

TEST(TeachModel, PastOrderMatters)
{
    const auto m = tiny_model(Strategy::teach);
    EvalContext e;
    const FeatureMatrix rows = standardized_rows(*m, 5, 3);
    const FeatureMatrix reversed = rows.colwise().reverse();
    const nn::Var text = m->text_features(e.ctx, m->vocabulary().tokenize("sit down"));
    const auto a = m->encode_distribution(e.ctx, text, m->past_encode(e.ctx, nn::constant(rows)));
    const auto b = m->encode_distribution(e.ctx, text, m->past_encode(e.ctx, nn::constant(reversed)));
    const auto none = m->encode_distribution(e.ctx, text, m->no_past());
    EXPECT_GT((a.mu.value() - b.mu.value()).norm(), 1e-6);
    EXPECT_GT((a.mu.value() - none.mu.value()).norm(), 1e-6);
}

TEST(TeachModel, DecodeFrameCount)
{
    const auto m = tiny_model(Strategy::teach);
    EvalContext e;
    std::mt19937_64 rng(4);
    const nn::Var z = nn::constant(random_mat(rng, 1, m->config().latent_dim));
    for (int frames : {1, 7, 45}) {
        const nn::Var out = m->decode(e.ctx, z, frames);
        EXPECT_EQ(out.rows(), frames);
        EXPECT_EQ(out.cols(), m->feature_dim());
    }
    EXPECT_THROW(m->decode(e.ctx, z, 0), std::invalid_argument);
}

TEST(TeachModel, SampleLatentStatistics)
{
    const auto m = tiny_model(Strategy::teach);
    const LatentDistribution dist{c({0.5, -2.0, 0.0}), c({1.5, 0.1, 1.0})};
    std::mt19937_64 rng(5);
    const int n = 100'000;
    nn::Mat sum = nn::Mat::Zero(1, 3), sq = nn::Mat::Zero(1, 3);
    for (int i = 0; i < n; ++i) {
        const nn::Mat z = m->sample_latent(dist, SampleMode::stochastic, &rng).value();
        sum += z;
        sq += z.cwiseProduct(z);
    }
    const nn::Mat mean = sum / n;
    const nn::Mat var = sq / n - mean.cwiseProduct(mean);
    for (int d = 0; d < 3; ++d) {
        const double s = dist.sigma.value()(0, d);
        EXPECT_NEAR(mean(0, d), dist.mu.value()(0, d), 4.0 * s / std::sqrt(n));
        EXPECT_NEAR(std::sqrt(var(0, d)), s, 0.01 * s);
    }
    EXPECT_EQ(m->sample_latent(dist, SampleMode::deterministic, nullptr).value(), dist.mu.value());
}

TEST(TeachModel, EvalGenerationIsDeterministic)
{
    const auto m = tiny_model(Strategy::teach);
    const TokenSequence tokens = m->vocabulary().tokenize("walk forward");
    const FeatureMatrix past = standardized_rows(*m, 5, 6);
    EXPECT_EQ(m->generate_features(tokens, 20, &past, SampleMode::deterministic, 1),
              m->generate_features(tokens, 20, &past, SampleMode::deterministic, 2));
    EXPECT_EQ(m->generate_features(tokens, 20, &past, SampleMode::stochastic, 3),
              m->generate_features(tokens, 20, &past, SampleMode::stochastic, 3));
    EXPECT_NE(m->generate_features(tokens, 20, &past, SampleMode::stochastic, 3),
              m->generate_features(tokens, 20, &past, SampleMode::stochastic, 4));
}

TEST(GradientCheck, PastEncoderInputs)
{
    const auto m = tiny_model(Strategy::teach);
    const double err = input_gradient_error(
        [&](nn::Graph& g, const std::vector<nn::Var>& in) {
            nn::Context local{g, false, 0.0, nullptr};
            return probe(m->past_encode(local, in[0]), 1);
        },
        {standardized_rows(*m, 5, 7)});
    EXPECT_LT(err, 1e-4);
}

TEST(GradientCheck, DecoderLatent)
{
    const auto m = tiny_model(Strategy::teach);
    std::mt19937_64 rng(8);
    const double err = input_gradient_error(
        [&](nn::Graph& g, const std::vector<nn::Var>& in) {
            nn::Context local{g, false, 0.0, nullptr};
            return probe(m->decode(local, in[0], 6), 2);
        },
        {random_mat(rng, 1, m->config().latent_dim)});
    EXPECT_LT(err, 1e-4);
}

TEST(GradientCheck, MotionEncoderInputs)
{
    const auto m = tiny_model(Strategy::teach);
    const double err = input_gradient_error(
        [&](nn::Graph& g, const std::vector<nn::Var>& in) {
            nn::Context local{g, false, 0.0, nullptr};
            const LatentDistribution d = m->motion_encode(local, in[0]);
            return nn::add(probe(d.mu, 3), probe(d.sigma, 4));
        },
        {standardized_rows(*m, 6, 9)});
    EXPECT_LT(err, 1e-4);
}

// Sampled parameter gradients of a full training objective against central
// differences. The text/motion alignment terms treat the motion side as a
// constant, so the motion encoder is checked against the terms that reach it.
TEST(GradientCheck, TrainingObjectiveParameters)
{
    for (Strategy strategy : {Strategy::teach, Strategy::independent}) {
        auto m = tiny_model(strategy, 2);
        const auto pairs = synth_pairs(2, 21);
        std::vector<TrainItem> items;
        for (const ActionPair& p : pairs) {
            items.push_back(strategy == Strategy::teach ? m->make_pair_item(p)
                                                        : m->make_single_item(p.text_1, p.motion_1));
        }
        std::vector<const TrainItem*> batch;
        for (const TrainItem& item : items) {
            batch.push_back(&item);
        }
        const std::uint64_t seed = 99;
        auto objective = [&](bool motion_terms) {
            double total = 0.0;
            for (std::size_t k = 0; k < batch.size(); ++k) {
                nn::Graph graph(false);
                std::mt19937_64 rng(derive_seed(seed, k));
                nn::Context ctx{graph, true, m->config().dropout, &rng};
                const auto l = m->item_losses(ctx, *batch[k]);
                total += motion_terms ? nn::scalar(l.motion_recon) + m->config().lambda_kl * nn::scalar(l.motion_prior_kl)
                                      : nn::scalar(l.total);
            }
            return total / static_cast<double>(batch.size());
        };
        std::vector<nn::Parameter*> motion_params, other_params;
        for (nn::Parameter& p : m->parameters().all()) {
            (p.name.rfind("motion_enc.", 0) == 0 ? motion_params : other_params).push_back(&p);
        }
        std::vector<nn::Parameter*> all = motion_params;
        all.insert(all.end(), other_params.begin(), other_params.end());
        std::mt19937_64 rng(31);
        auto accumulate = [&] { m->accumulate_gradients(batch, seed); };
        const double other_err =
            parameter_gradient_error([&] { return objective(false); }, accumulate, all,
                                     sample_coordinates(other_params, 2, rng));
        const double motion_err = parameter_gradient_error([&] { return objective(true); }, accumulate, all,
                                                           sample_coordinates(motion_params, 2, rng));
        EXPECT_LT(other_err, 1e-3) << to_string(strategy);
        EXPECT_LT(motion_err, 1e-3) << to_string(strategy);
    }
}

TEST(TeachModel, AlignmentTermsDoNotTrainMotionEncoder)
{
    const auto m = tiny_model(Strategy::teach);
    const TrainItem item = m->make_pair_item(synth_pairs(1)[0]);
    nn::Graph graph;
    std::mt19937_64 rng(1);
    nn::Context ctx{graph, true, 0.0, &rng};
    const auto l = m->item_losses(ctx, item);
    m->parameters().zero_grad();
    graph.backward(nn::add(l.latent_l1, nn::sub(l.cross_kl, l.motion_prior_kl)));
    double motion = 0.0, text = 0.0;
    for (const nn::Parameter& p : m->parameters().all()) {
        (p.name.rfind("motion_enc.", 0) == 0 ? motion : text) += p.grad.norm();
    }
    EXPECT_EQ(motion, 0.0);
    EXPECT_GT(text, 0.0);
}

TEST(TeachModel, TrainingStepIsDeterministic)
{
    const auto pairs = synth_pairs(3, 4);
    std::vector<LossReport> reports;
    std::vector<std::vector<nn::Mat>> params;
    for (int run = 0; run < 2; ++run) {
        auto m = tiny_model(Strategy::teach, 3);
        std::vector<TrainItem> items;
        for (const ActionPair& p : pairs) {
            items.push_back(m->make_pair_item(p));
        }
        std::vector<const TrainItem*> batch{&items[0], &items[1], &items[2]};
        nn::AdamW opt({.lr = 1e-3});
        for (std::uint64_t s = 0; s < 3; ++s) {
            reports.push_back(m->training_step(batch, opt, s));
        }
        params.emplace_back();
        for (const nn::Parameter& p : m->parameters().all()) {
            params.back().push_back(p.value);
        }
    }
    EXPECT_EQ(reports[2], reports[5]);
    EXPECT_EQ(params[0], params[1]);
    EXPECT_LT(reports[2].total, reports[0].total);
}

TEST(TeachModel, GenerateSequenceLengthsAndCausality)
{
    const auto m = tiny_model(Strategy::teach);
    const std::vector<Prompt> prompts{{"walk forward", 1.0}, {"sit down", 0.5}, {"wave", 0.8}};
    const auto seq = m->generate_sequence(prompts, SampleMode::stochastic, 5);
    ASSERT_EQ(seq.size(), 3u);
    EXPECT_EQ(seq[0].size(), 30u);
    EXPECT_EQ(seq[1].size(), 15u);
    EXPECT_EQ(seq[2].size(), 24u);
    EXPECT_EQ(seq, m->generate_sequence(prompts, SampleMode::stochastic, 5));

    // A different last prompt changes nothing before it.
    auto changed = prompts;
    changed[2].text = "jump";
    const auto other = m->generate_sequence(changed, SampleMode::stochastic, 5);
    EXPECT_EQ(other[0], seq[0]);
    EXPECT_EQ(other[1], seq[1]);
    EXPECT_FALSE(other[2] == seq[2]);

    // With past conditioning the second action depends on the first.
    auto first_changed = prompts;
    first_changed[0].text = "jump";
    const auto dependent = m->generate_sequence(first_changed, SampleMode::deterministic, 5);
    const auto base = m->generate_sequence(prompts, SampleMode::deterministic, 5);
    EXPECT_FALSE(canonicalize(dependent[1]) == canonicalize(base[1]));

    EXPECT_THROW(m->generate_sequence({}, SampleMode::stochastic, 1), std::invalid_argument);
    EXPECT_THROW(m->generate_sequence({{"walk", 0.0}}, SampleMode::stochastic, 1), std::invalid_argument);
}

TEST(Checkpoint, RoundtripIsBitStable)
{
    TempDir dir;
    auto m = tiny_model(Strategy::teach, 6);
    const auto pairs = synth_pairs(2);
    std::vector<TrainItem> items{m->make_pair_item(pairs[0]), m->make_pair_item(pairs[1])};
    nn::AdamW opt({.lr = 1e-3});
    m->training_step({&items[0], &items[1]}, opt, 0);
    const TrainingState state{3, 17, 0.25, 42};
    save_checkpoint(dir.path() / "a.ckpt", *m, &opt, state);

    Checkpoint back = load_checkpoint(dir.path() / "a.ckpt");
    EXPECT_EQ(back.state.epoch, 3);
    EXPECT_EQ(back.state.step, 17);
    EXPECT_EQ(back.state.best_val_ape, 0.25);
    EXPECT_EQ(back.model->config(), m->config());
    EXPECT_EQ(back.model->strategy(), Strategy::teach);
    EXPECT_EQ(back.optimizer.steps(), 1);
    ASSERT_EQ(back.model->parameters().all().size(), m->parameters().all().size());
    for (std::size_t i = 0; i < m->parameters().all().size(); ++i) {
        EXPECT_EQ(back.model->parameters().all()[i].value, m->parameters().all()[i].value);
    }
    save_checkpoint(dir.path() / "b.ckpt", *back.model, &back.optimizer, back.state);
    EXPECT_EQ(read_file(dir.path() / "a.ckpt"), read_file(dir.path() / "b.ckpt"));

    const std::vector<Prompt> prompts{{"walk forward", 0.5}, {"sit down", 0.5}};
    EXPECT_EQ(m->generate_sequence(prompts, SampleMode::stochastic, 8),
              back.model->generate_sequence(prompts, SampleMode::stochastic, 8));
}

TEST(Checkpoint, CorruptionIsDetected)
{
    TempDir dir;
    const auto m = tiny_model(Strategy::independent);
    save_checkpoint(dir.path() / "a.ckpt", *m, nullptr, {});
    const std::string bytes = read_file(dir.path() / "a.ckpt");

    std::string flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x01;
    write_file_atomic(dir.path() / "flipped.ckpt", flipped);
    EXPECT_THROW(load_checkpoint(dir.path() / "flipped.ckpt"), CorruptCheckpoint);

    write_file_atomic(dir.path() / "short.ckpt", bytes.substr(0, bytes.size() - 9));
    EXPECT_THROW(load_checkpoint(dir.path() / "short.ckpt"), CorruptCheckpoint);

    std::string magic = bytes;
    magic[0] = 'X';
    write_file_atomic(dir.path() / "magic.ckpt", magic);
    EXPECT_THROW(load_checkpoint(dir.path() / "magic.ckpt"), CorruptCheckpoint);
}
