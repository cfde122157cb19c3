#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mcomp/compose/compose.hpp"
#include "mcomp/metrics/metrics.hpp"
#include "support/model_fixture.hpp"
#include "support/random_geometry.hpp"

using namespace mcomp;
using mcomp::testing::random_motion;
using mcomp::testing::random_rotation;

namespace {

Motion shifted(const Motion& m, const Vec3& offset)
{
    return apply_rigid(m, 0.0, offset);
}

// Hand-built track: positions chosen directly, headings supplied.
PositionTrack make_track(const std::vector<std::vector<Vec3>>& frames, const std::vector<double>& headings)
{
    PositionTrack t;
    for (const auto& f : frames) {
        JointPositions p(static_cast<Eigen::Index>(f.size()), 3);
        for (std::size_t j = 0; j < f.size(); ++j) {
            p.row(static_cast<Eigen::Index>(j)) = f[j].transpose();
        }
        t.global.push_back(p);
    }
    t.root_heading = headings;
    return t;
}

PositionTrack random_track(std::mt19937_64& rng, int frames, int joints)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<Vec3>> f(static_cast<std::size_t>(frames));
    std::vector<double> h;
    for (auto& fr : f) {
        for (int j = 0; j < joints; ++j) {
            fr.emplace_back(u(rng), u(rng), u(rng));
        }
        h.push_back(3.0 * u(rng));
    }
    return make_track(f, h);
}

Vec3 at(const PositionTrack& t, std::size_t f, int j)
{
    return t.global[f].row(j).transpose();
}

// Direct per-frame evaluation written out coordinate by coordinate.
double oracle_ape(const PositionTrack& a, const PositionTrack& b, PositionVariant v)
{
    const int joints = static_cast<int>(a.global[0].rows());
    double sum = 0.0;
    int n = 0;
    for (std::size_t f = 0; f < a.size(); ++f) {
        if (v == PositionVariant::root_joint) {
            sum += (at(a, f, 0) - at(b, f, 0)).norm();
            ++n;
        } else if (v == PositionVariant::global_traj) {
            sum += std::hypot(at(a, f, 0).x() - at(b, f, 0).x(), at(a, f, 0).y() - at(b, f, 0).y());
            ++n;
        } else {
            for (int j = 1; j < joints; ++j) {
                Vec3 pa = at(a, f, j);
                Vec3 pb = at(b, f, j);
                if (v == PositionVariant::mean_local) {
                    const double ca = std::cos(a.root_heading[f]), sa = std::sin(a.root_heading[f]);
                    const double cb = std::cos(b.root_heading[f]), sb = std::sin(b.root_heading[f]);
                    const Vec3 da = pa - at(a, f, 0);
                    const Vec3 db = pb - at(b, f, 0);
                    // Rotation by -heading.
                    pa = Vec3(ca * da.x() + sa * da.y(), -sa * da.x() + ca * da.y(), da.z());
                    pb = Vec3(cb * db.x() + sb * db.y(), -sb * db.x() + cb * db.y(), db.z());
                }
                sum += (pa - pb).norm();
                ++n;
            }
        }
    }
    return sum / n;
}

} // namespace

TEST(Ape, ZeroOnIdenticalMotions)
{
    std::mt19937_64 rng(1);
    const Motion m = random_motion(rng, 9);
    for (PositionVariant v : kPositionVariants) {
        EXPECT_EQ(ape(m, m, v), 0.0) << to_string(v);
        EXPECT_EQ(ave(m, m, v), 0.0) << to_string(v);
    }
    const Motion n = random_motion(rng, 9);
    EXPECT_EQ(transition_distance(m, m.with_frames(std::vector<Pose>{m.back()}), false), 0.0);
    EXPECT_EQ(transition_distance(m, m.with_frames(std::vector<Pose>{m.back()}), true), 0.0);
    EXPECT_NEAR(transition_distance(m, align_second(m, n), false), transition_distance(m, n, true), 1e-12);
}

TEST(Ape, RigidOffsetExample)
{
    std::mt19937_64 rng(2);
    const Motion gt = random_motion(rng, 12);
    const Motion gen = shifted(gt, Vec3(0.3, 0.0, 0.0));
    EXPECT_NEAR(ape(gt, gen, PositionVariant::root_joint), 0.3, 1e-12);
    EXPECT_NEAR(ape(gt, gen, PositionVariant::global_traj), 0.3, 1e-12);
    EXPECT_NEAR(ape(gt, gen, PositionVariant::mean_global), 0.3, 1e-12);
    EXPECT_NEAR(ape(gt, gen, PositionVariant::mean_local), 0.0, 1e-12);
}

TEST(Ape, MatchesDirectOracleOnRandomSmallCases)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const PositionTrack a = random_track(rng, 3, 3);
        const PositionTrack b = random_track(rng, 3, 3);
        for (PositionVariant v : kPositionVariants) {
            EXPECT_NEAR(ape(a, b, v), oracle_ape(a, b, v), 1e-12) << to_string(v);
        }
    }
}

TEST(Ape, RejectsLengthMismatch)
{
    std::mt19937_64 rng(4);
    EXPECT_THROW(ape(random_motion(rng, 3), random_motion(rng, 4), PositionVariant::root_joint), LengthMismatch);
    EXPECT_THROW(ave(random_motion(rng, 3), random_motion(rng, 4), PositionVariant::root_joint), LengthMismatch);
    const Motion one = random_motion(rng, 1);
    EXPECT_THROW(ave(one, one, PositionVariant::mean_global), LengthMismatch);
}

TEST(Ape, RigidInvariances)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Motion gt = random_motion(rng, 6);
        const Motion gen = random_motion(rng, 6);
        const double yaw = u(rng);
        const Vec3 t(u(rng), u(rng), u(rng));
        const Motion gt2 = apply_rigid(gt, yaw, t);
        const Motion gen2 = apply_rigid(gen, yaw, t);
        // Per-axis variances only permute under quarter turns.
        const double quarter = std::numbers::pi / 2 * static_cast<double>(trial % 4);
        const Motion gt3 = apply_rigid(gt, quarter, t);
        const Motion gen3 = apply_rigid(gen, quarter, t);
        for (PositionVariant v : kPositionVariants) {
            EXPECT_NEAR(ape(gt, gen, v), ape(gt2, gen2, v), 1e-9) << to_string(v);
            EXPECT_NEAR(ave(gt, gen, v), ave(gt3, gen3, v), 1e-9) << to_string(v);
        }
        // Local coordinates ignore a rigid transform of either motion alone.
        const Motion moved = apply_rigid(gen, u(rng), Vec3(u(rng), u(rng), u(rng)));
        EXPECT_NEAR(ape(gt, gen, PositionVariant::mean_local), ape(gt, moved, PositionVariant::mean_local), 1e-9);
        EXPECT_NEAR(ave(gt, gen, PositionVariant::mean_local), ave(gt, moved, PositionVariant::mean_local), 1e-9);
    }
}

TEST(Ave, ShiftInvariantForGlobalVariants)
{
    std::mt19937_64 rng(6);
    const Motion gt = random_motion(rng, 10);
    const Motion gen = shifted(gt, Vec3(1.0, -2.0, 0.5));
    for (PositionVariant v : kPositionVariants) {
        EXPECT_NEAR(ave(gt, gen, v), 0.0, 1e-12) << to_string(v);
    }
}

TEST(Ave, ScalingAboutTheMeanQuadruplesVariance)
{
    // Two joints, four frames; gen scales every coordinate by 2 about its
    // temporal mean, so each variance becomes 4x and the difference is 3x.
    const std::vector<std::vector<Vec3>> gt_pos{{{0, 0, 0}, {1, 0, 2}},
                                                {{1, 2, 0}, {1, 1, 2}},
                                                {{2, 0, 1}, {3, 0, 2}},
                                                {{1, 2, 3}, {3, 3, 2}}};
    std::vector<std::vector<Vec3>> gen_pos = gt_pos;
    for (int j = 0; j < 2; ++j) {
        Vec3 mean = Vec3::Zero();
        for (const auto& f : gt_pos) {
            mean += f[static_cast<std::size_t>(j)] / 4.0;
        }
        for (std::size_t f = 0; f < 4; ++f) {
            gen_pos[f][static_cast<std::size_t>(j)] = mean + 2.0 * (gt_pos[f][static_cast<std::size_t>(j)] - mean);
        }
    }
    const std::vector<double> zeros(4, 0.0);
    const PositionTrack gt = make_track(gt_pos, zeros);
    const PositionTrack gen = make_track(gen_pos, zeros);
    // Population variances by hand: root (0.5, 1.0, 1.5), joint 1 (1.0, 1.5, 0).
    EXPECT_NEAR(ave(gt, gen, PositionVariant::root_joint), 3.0 * std::sqrt(0.25 + 1.0 + 2.25), 1e-12);
    EXPECT_NEAR(ave(gt, gen, PositionVariant::global_traj), 3.0 * std::sqrt(0.25 + 1.0), 1e-12);
    EXPECT_NEAR(ave(gt, gen, PositionVariant::mean_global), 3.0 * std::sqrt(1.0 + 2.25), 1e-12);
}

TEST(TransitionDistance, YawedCopyIsRemovedByAlignment)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Motion first = random_motion(rng, 5);
        const Motion next = first.with_frames({first.back(), first.frame(2)});
        const Vec3 root = first.back().root_translation;
        // Rotate 90 degrees about the root's vertical axis.
        const double yaw = std::numbers::pi / 2;
        const Vec3 r = yaw_matrix(yaw) * root;
        const Motion turned = apply_rigid(next, yaw, Vec3(root.x() - r.x(), root.y() - r.y(), 0.0));
        EXPECT_NEAR(transition_distance(first, turned, true), 0.0, 1e-9);
        EXPECT_GT(transition_distance(first, turned, false), 0.01);
    }
}

TEST(TransitionDistance, AlignmentNeverHurtsOnPureYawTranslationMismatch)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Motion first = random_motion(rng, 4);
        const Motion tail = first.with_frames({first.back(), first.frame(0)});
        const Motion moved = apply_rigid(tail, u(rng), Vec3(u(rng), u(rng), 0.0));
        EXPECT_LE(transition_distance(first, moved, true), transition_distance(first, moved, false) + 1e-12);
        EXPECT_NEAR(transition_distance(first, moved, true), 0.0, 1e-9);
    }
}

TEST(TransitionDistance, AlignmentHelpsOnAverageForGeneratedPairs)
{
    const auto model = mcomp::testing::tiny_model(Strategy::independent, 3);
    double with = 0.0;
    double without = 0.0;
    int not_worse = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Motion a = model->generate_next(nullptr, "walk forward", 8, SampleMode::stochastic, 2 * s);
        Motion b = model->generate_next(nullptr, "sit down", 8, SampleMode::stochastic, 2 * s + 1);
        // Place the second action somewhere else in the world.
        b = apply_rigid(b, 0.37 * static_cast<double>(s), Vec3(0.05 * static_cast<double>(s % 7), -0.4, 0.0));
        const double w = transition_distance(a, b, true);
        const double wo = transition_distance(a, b, false);
        with += w;
        without += wo;
        not_worse += w <= wo ? 1 : 0;
    }
    EXPECT_LT(with, without);
    EXPECT_GT(not_worse, 50);
}

TEST(MetricReport, JsonRoundtripHasTableColumns)
{
    MetricReport r;
    r.ape = {0.1, 0.2, 0.3, 0.4};
    r.ave = {0.5, 0.6, 0.7, 0.8};
    r.transition_with_align = 0.9;
    r.transition_without_align = 1.1;
    r.samples = 3;
    r.seed = 42;
    const nlohmann::json j = to_json(r);
    EXPECT_EQ(j.at("ape").size(), 4u);
    EXPECT_EQ(j.at("ave").size(), 4u);
    EXPECT_EQ(j.at("transition_dist").size(), 2u);
    EXPECT_EQ(metric_report_from_json(j), r);
    EXPECT_EQ(j.at("ape").at("mean_local"), 0.3);
}

TEST(Evaluate, GroundTruthGeneratorScoresZero)
{
    const auto pairs = mcomp::testing::synth_pairs(5);
    const PairGenerator oracle = [](const ActionPair& p, std::uint64_t) {
        const Motion gt = pair_ground_truth(p);
        const std::size_t n1 = p.motion_1.size();
        return PairGeneration{gt.slice(0, n1), gt.slice(n1, gt.size()), gt};
    };
    const MetricReport r = evaluate(pairs, oracle, 3);
    for (PositionVariant v : kPositionVariants) {
        EXPECT_EQ(r.ape[v], 0.0);
        EXPECT_EQ(r.ave[v], 0.0);
    }
    EXPECT_EQ(r.samples, 5u);
    EXPECT_EQ(r.seed, 3u);
    EXPECT_THROW(evaluate({}, oracle, 3), std::invalid_argument);
}

TEST(Evaluate, SeededReportIsDeterministic)
{
    const auto pairs = mcomp::testing::synth_pairs(3);
    const auto model = mcomp::testing::tiny_model(Strategy::teach, 5);
    const PairGenerator gen = [&](const ActionPair& p, std::uint64_t seed) {
        const double d1 = static_cast<double>(p.motion_1.size()) / p.motion_1.fps();
        const double d2 = static_cast<double>(p.motion_2.size()) / p.motion_2.fps();
        const auto parts = model->generate_sequence({{p.text_1, d1}, {p.text_2, d2}}, SampleMode::stochastic, seed);
        return PairGeneration{parts[0], parts[1], stitch_sequence(parts, {}).motion};
    };
    const MetricReport a = evaluate(pairs, gen, 11);
    const MetricReport b = evaluate(pairs, gen, 11);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, evaluate(pairs, gen, 12));
    EXPECT_GT(a.ape.mean_global, 0.0);
}
