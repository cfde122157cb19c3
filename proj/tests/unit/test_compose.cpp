#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mcomp/compose/compose.hpp"
#include "mcomp/core/seed.hpp"
#include "support/model_fixture.hpp"
#include "support/random_geometry.hpp"

using namespace mcomp;
using mcomp::testing::random_motion;
using mcomp::testing::random_pose;
using mcomp::testing::tiny_model;

namespace {

double max_pose_diff(const Pose& a, const Pose& b)
{
    double d = (a.root_translation - b.root_translation).cwiseAbs().maxCoeff();
    for (std::size_t j = 0; j < a.rot6d.size(); ++j) {
        d = std::max(d, (a.rot6d[j] - b.rot6d[j]).cwiseAbs().maxCoeff());
    }
    return d;
}

double max_motion_diff(const Motion& a, const Motion& b)
{
    EXPECT_EQ(a.size(), b.size());
    double d = 0.0;
    for (std::size_t f = 0; f < std::min(a.size(), b.size()); ++f) {
        d = std::max(d, max_pose_diff(a.frame(f), b.frame(f)));
    }
    return d;
}

double orthonormality_error(const Motion& m)
{
    double e = 0.0;
    for (const Pose& p : m.frames()) {
        for (const Rot6d& r : p.rot6d) {
            const Mat3 a = (Mat3() << r.head<3>(), r.tail<3>(), r.head<3>().cross(r.tail<3>())).finished();
            e = std::max(e, (a.transpose() * a - Mat3::Identity()).cwiseAbs().maxCoeff());
        }
    }
    return e;
}

Motion static_motion(const Pose& p, int frames)
{
    return Motion(std::vector<Pose>(static_cast<std::size_t>(frames), p), 30.0, default_skeleton());
}

Pose upright_pose(std::mt19937_64& rng, double heading, const Vec3& root)
{
    Pose p = random_pose(rng, default_skeleton()->joint_count());
    p.rot6d[0] = sixd_from_matrix(yaw_matrix(heading));
    p.root_translation = root;
    return p;
}

} // namespace

TEST(StitchMode, StringRoundtrip)
{
    EXPECT_EQ(stitch_mode_from_string(to_string(StitchMode::overwrite)), StitchMode::overwrite);
    EXPECT_EQ(stitch_mode_from_string(to_string(StitchMode::insert)), StitchMode::insert);
    EXPECT_THROW(stitch_mode_from_string("blend"), std::invalid_argument);
}

TEST(AlignSecond, AlreadyAlignedIsFixedPoint)
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Motion first = random_motion(rng, 10);
        std::vector<Pose> frames = random_motion(rng, 12).frames();
        const Motion raw(frames, 30.0, default_skeleton());
        // Move raw so it starts where first ends.
        const double yaw = pose_heading(first.back()) - pose_heading(raw.front());
        const Vec3 r = yaw_matrix(yaw) * raw.front().root_translation;
        const Vec3 t(first.back().root_translation.x() - r.x(), first.back().root_translation.y() - r.y(), 0.0);
        const Motion aligned = apply_rigid(raw, yaw, t);
        EXPECT_LT(max_motion_diff(align_second(first, aligned), aligned), 1e-9);
    }
}

TEST(AlignSecond, CanonicalSecondMovesToFirstEnd)
{
    std::mt19937_64 rng(2);
    const double quarter = std::numbers::pi / 2;
    const Motion first = static_motion(upright_pose(rng, quarter, Vec3(2, 3, 0.9)), 5);
    std::vector<Pose> frames;
    for (int f = 0; f < 8; ++f) {
        frames.push_back(upright_pose(rng, 0.0, Vec3(0.0, 0.1 * f, 0.8)));
    }
    const Motion second = align_second(first, Motion(frames, 30.0, default_skeleton()));
    EXPECT_NEAR(second.front().root_translation.x(), 2.0, 1e-12);
    EXPECT_NEAR(second.front().root_translation.y(), 3.0, 1e-12);
    EXPECT_NEAR(second.front().root_translation.z(), 0.8, 1e-12);
    EXPECT_NEAR(pose_heading(second.front()), quarter, 1e-12);
    // Heading 90 degrees turns forward (+y) into -x.
    EXPECT_NEAR(second.back().root_translation.x(), 2.0 - 0.7, 1e-12);
    EXPECT_NEAR(second.back().root_translation.y(), 3.0, 1e-12);
}

TEST(AlignSecond, PreservesIntraFrameDistancesAndHeight)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Motion first = random_motion(rng, 4);
        const Motion second = random_motion(rng, 6);
        const Motion aligned = align_second(first, second);
        const auto before = motion_positions(second);
        const auto after = motion_positions(aligned);
        for (std::size_t f = 0; f < second.size(); ++f) {
            EXPECT_NEAR(aligned.frame(f).root_translation.z(), second.frame(f).root_translation.z(), 1e-12);
            for (Eigen::Index a = 0; a < before[f].rows(); ++a) {
                for (Eigen::Index b = a + 1; b < before[f].rows(); ++b) {
                    EXPECT_NEAR((before[f].row(a) - before[f].row(b)).norm(),
                                (after[f].row(a) - after[f].row(b)).norm(), 1e-9);
                }
            }
        }
    }
}

TEST(SlerpStitch, ZeroFramesIsConcatenation)
{
    std::mt19937_64 rng(4);
    const Motion a = random_motion(rng, 7);
    const Motion b = random_motion(rng, 5);
    EXPECT_EQ(slerp_stitch(a, b, 0, StitchMode::overwrite), concatenate({a, b}));
    EXPECT_EQ(slerp_stitch(a, b, 0, StitchMode::insert), concatenate({a, b}));
}

TEST(SlerpStitch, LengthArithmetic)
{
    std::mt19937_64 rng(5);
    const Motion a = random_motion(rng, 60);
    const Motion b = random_motion(rng, 45);
    EXPECT_EQ(slerp_stitch(a, b, 8, StitchMode::overwrite).size(), 105u);
    EXPECT_EQ(slerp_stitch(a, b, 8, StitchMode::insert).size(), 113u);
}

TEST(SlerpStitch, EqualEndpointsGiveConstantPose)
{
    std::mt19937_64 rng(6);
    const Pose p = random_pose(rng, default_skeleton()->joint_count());
    const Motion a = static_motion(p, 4);
    const Motion b = static_motion(p, 12);
    for (int n : {1, 3, 8, 12}) {
        for (StitchMode mode : {StitchMode::overwrite, StitchMode::insert}) {
            const Motion s = slerp_stitch(a, b, n, mode);
            for (const Pose& q : s.frames()) {
                EXPECT_LT(max_pose_diff(q, p), 1e-9);
            }
        }
    }
}

TEST(SlerpStitch, KeepsPrefixEndpointsAndRotationGroup)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Motion a = random_motion(rng, 10);
        const Motion b = random_motion(rng, 12);
        for (int n : {1, 8, 11, 12}) {
            const Motion s = slerp_stitch(a, b, n, StitchMode::overwrite);
            for (std::size_t f = 0; f < a.size(); ++f) {
                EXPECT_EQ(s.frame(f), a.frame(f));
            }
            EXPECT_EQ(s.back(), b.back());
            for (std::size_t f = static_cast<std::size_t>(n); f < b.size(); ++f) {
                EXPECT_EQ(s.frame(a.size() + f), b.frame(f));
            }
            EXPECT_LT(orthonormality_error(s), 1e-6);

            const Motion ins = slerp_stitch(a, b, n, StitchMode::insert);
            for (std::size_t f = 0; f < a.size(); ++f) {
                EXPECT_EQ(ins.frame(f), a.frame(f));
            }
            for (std::size_t f = 0; f < b.size(); ++f) {
                EXPECT_EQ(ins.frame(a.size() + n + f), b.frame(f));
            }
            EXPECT_LT(orthonormality_error(ins), 1e-6);
        }
    }
}

TEST(SlerpStitch, InterpolatedFramesFollowTheGeodesic)
{
    std::mt19937_64 rng(8);
    const Motion a = random_motion(rng, 3);
    const Motion b = random_motion(rng, 10);
    const int n = 4;
    const Motion s = slerp_stitch(a, b, n, StitchMode::overwrite);
    const Pose& from = a.back();
    const Pose& to = b.frame(n);
    for (int k = 0; k < n; ++k) {
        const double t = (k + 1.0) / (n + 1.0);
        const Pose& q = s.frame(a.size() + k);
        for (std::size_t j = 0; j < from.rot6d.size(); ++j) {
            const Quat qa = quat_from_6d(from.rot6d[j]);
            const Quat qb = quat_from_6d(to.rot6d[j]);
            const Quat qk = quat_from_6d(q.rot6d[j]);
            const double total = rotation_angle_between(qa, qb);
            EXPECT_NEAR(rotation_angle_between(qa, qk), t * total, 1e-9);
            EXPECT_NEAR(rotation_angle_between(qk, qb), (1 - t) * total, 1e-9);
        }
        const Vec3 root = (1 - t) * from.root_translation + t * to.root_translation;
        EXPECT_LT((q.root_translation - root).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SlerpStitch, RejectsOverlongOverwriteAndNegativeCount)
{
    std::mt19937_64 rng(9);
    const Motion a = random_motion(rng, 5);
    const Motion b = random_motion(rng, 6);
    EXPECT_THROW(slerp_stitch(a, b, 7, StitchMode::overwrite), std::invalid_argument);
    EXPECT_NO_THROW(slerp_stitch(a, b, 7, StitchMode::insert));
    EXPECT_THROW(slerp_stitch(a, b, -1, StitchMode::insert), std::invalid_argument);
    const Motion other(b.frames(), 60.0, default_skeleton());
    EXPECT_THROW(slerp_stitch(a, other, 2, StitchMode::insert), std::invalid_argument);
}

TEST(Compose, TeachLengthsAndSpans)
{
    const auto model = tiny_model(Strategy::teach);
    CompositionRequest req{{{"walk forward", 2.0}, {"sit down", 2.0}}, Strategy::teach, {}, SampleMode::deterministic, 1};
    const Composition c = compose(req, *model);
    EXPECT_EQ(c.motion.size(), 120u);
    EXPECT_EQ(c.spans, (std::vector<FrameSpan>{{0, 60}, {60, 120}}));

    req.stitch.mode = StitchMode::insert;
    const Composition ins = compose(req, *model);
    EXPECT_EQ(ins.motion.size(), 128u);
    EXPECT_EQ(ins.spans, (std::vector<FrameSpan>{{0, 60}, {60, 128}}));
}

TEST(Compose, TeachWithoutSlerpIsAlignedConcatenation)
{
    const auto model = tiny_model(Strategy::teach);
    const std::vector<Prompt> prompts{{"walk forward", 1.0}, {"turn left", 0.5}, {"sit down", 0.7}};
    const CompositionRequest req{prompts, Strategy::teach, {0, StitchMode::overwrite}, SampleMode::stochastic, 3};
    const Composition c = compose(req, *model);
    const std::vector<Motion> parts = model->generate_sequence(prompts, SampleMode::stochastic, 3);
    Motion expected = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        expected = concatenate({expected, align_second(expected, parts[i])});
    }
    EXPECT_EQ(c.motion, expected);
    EXPECT_EQ(c.spans, (std::vector<FrameSpan>{{0, 30}, {30, 45}, {45, 66}}));
}

TEST(Compose, IndependentGeneratesEachActionInIsolation)
{
    const auto model = tiny_model(Strategy::independent);
    const std::vector<Prompt> prompts{{"walk forward", 1.0}, {"sit down", 1.0}};
    const CompositionRequest req{prompts, Strategy::independent, {0, StitchMode::overwrite}, SampleMode::stochastic, 5};
    const Composition c = compose(req, *model);
    const Motion a = model->generate_next(nullptr, prompts[0].text, 30, SampleMode::stochastic, derive_seed(5, 0));
    const Motion b = model->generate_next(nullptr, prompts[1].text, 30, SampleMode::stochastic, derive_seed(5, 1));
    EXPECT_EQ(c.motion, concatenate({a, align_second(a, b)}));
}

TEST(Compose, JointDecodesCommaJoinedTextOnce)
{
    const auto model = tiny_model(Strategy::joint);
    const std::vector<Prompt> prompts{{"walk forward", 1.0}, {"sit down", 1.5}};
    const CompositionRequest req{prompts, Strategy::joint, {}, SampleMode::deterministic, 0};
    const Composition c = compose(req, *model);
    EXPECT_EQ(c.motion.size(), 75u);
    EXPECT_EQ(c.spans, (std::vector<FrameSpan>{{0, 30}, {30, 75}}));
    EXPECT_EQ(c.motion, model->generate_next(nullptr, "walk forward , sit down", 75, SampleMode::deterministic, 0));

    const Vocabulary v = Vocabulary::build({"walk forward", "sit down"});
    EXPECT_EQ(v.detokenize(v.tokenize(joint_text("walk forward", "sit down"))), "walk forward , sit down");
}

TEST(Compose, RejectsInvalidRequests)
{
    const auto joint = tiny_model(Strategy::joint);
    const auto teach = tiny_model(Strategy::teach);
    CompositionRequest req{{{"walk forward", 1.0}}, Strategy::joint, {}, SampleMode::deterministic, 0};
    EXPECT_THROW(compose(req, *joint), std::invalid_argument);
    req.prompts.assign(3, {"walk forward", 1.0});
    EXPECT_THROW(compose(req, *joint), std::invalid_argument);
    req.prompts.resize(2);
    EXPECT_THROW(compose(req, *teach), StrategyMismatch);

    CompositionRequest empty{{}, Strategy::teach, {}, SampleMode::deterministic, 0};
    EXPECT_THROW(compose(empty, *teach), std::invalid_argument);
    CompositionRequest bad{{{"walk", 1.0}}, Strategy::teach, {-1, StitchMode::overwrite}, SampleMode::deterministic, 0};
    EXPECT_THROW(compose(bad, *teach), std::invalid_argument);
    CompositionRequest zero{{{"walk", 0.0}}, Strategy::teach, {}, SampleMode::deterministic, 0};
    EXPECT_THROW(compose(zero, *teach), std::invalid_argument);
    CompositionRequest blank{{{"  ", 1.0}}, Strategy::teach, {}, SampleMode::deterministic, 0};
    EXPECT_ANY_THROW(compose(blank, *teach));
}

TEST(Compose, BitIdenticalAcrossRuns)
{
    const auto a = tiny_model(Strategy::teach, 11);
    const auto b = tiny_model(Strategy::teach, 11);
    const CompositionRequest req{
        {{"walk forward", 1.0}, {"wave", 0.8}, {"sit down", 1.2}}, Strategy::teach, {}, SampleMode::stochastic, 99};
    EXPECT_EQ(compose(req, *a).motion, compose(req, *b).motion);
    EXPECT_EQ(compose(req, *a).motion, compose(req, *a).motion);
}
