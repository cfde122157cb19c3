#include <gtest/gtest.h>

#include "mcomp/core/features.hpp"
#include "mcomp/core/motion_io.hpp"
#include "support/random_geometry.hpp"

using namespace mcomp;
using mcomp::testing::max_abs_diff;
using mcomp::testing::random_motion;
using mcomp::testing::random_pose;
using mcomp::testing::random_rotation;

namespace {

double max_motion_diff(const Motion& a, const Motion& b)
{
    EXPECT_EQ(a.size(), b.size());
    double d = 0.0;
    for (std::size_t f = 0; f < a.size(); ++f) {
        d = std::max(d, (pose_features(a.frame(f)) - pose_features(b.frame(f))).cwiseAbs().maxCoeff());
    }
    return d;
}

Motion walking_motion(int frames)
{
    // Canonical: frame 0 at origin facing +y; afterwards drifts and turns.
    std::vector<Pose> out;
    const auto skel = default_skeleton();
    for (int f = 0; f < frames; ++f) {
        Pose p = Pose::identity(skel->joint_count());
        p.rot6d[0] = sixd_from_matrix(yaw_matrix(0.05 * f));
        p.rot6d[4] = sixd_from_matrix(Eigen::AngleAxisd(0.1 * f, Vec3::UnitX()).toRotationMatrix());
        p.root_translation = Vec3(0.01 * f * f, 0.03 * f, 0.9);
        out.push_back(std::move(p));
    }
    return Motion(std::move(out), 30.0, skel);
}

} // namespace

TEST(Skeleton, DefaultHumanoidInvariants)
{
    const Skeleton s = Skeleton::default_humanoid();
    EXPECT_EQ(s.joint_count(), 22);
    EXPECT_EQ(s.joint(0).parent, -1);
    for (int j = 1; j < s.joint_count(); ++j) {
        EXPECT_LT(s.joint(j).parent, j);
        EXPECT_GE(s.joint(j).parent, 0);
    }
    EXPECT_EQ(s.index_of("right_wrist"), joints::right_wrist);
}

TEST(Skeleton, RejectsBadTopology)
{
    EXPECT_THROW(Skeleton({{"root", -1, Vec3::Zero()}}), std::invalid_argument);
    EXPECT_THROW(Skeleton({{"root", -1, Vec3::Zero()}, {"a", 2, Vec3::Zero()}, {"b", 1, Vec3::Zero()}}),
                 std::invalid_argument);
    EXPECT_THROW(Skeleton({{"root", 0, Vec3::Zero()}, {"a", 0, Vec3::Zero()}}), std::invalid_argument);
}

TEST(ForwardKinematics, IdentityChainSumsOffsets)
{
    const Skeleton& s = *default_skeleton();
    const JointPositions pos = forward_kinematics(Pose::identity(s.joint_count()), s);
    for (int j = 0; j < s.joint_count(); ++j) {
        Vec3 expected = Vec3::Zero();
        for (int k = j; k > 0; k = s.joint(k).parent) {
            expected += s.joint(k).offset;
        }
        EXPECT_LT((pos.row(j).transpose() - expected).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(ForwardKinematics, RootTranslationShiftsEverything)
{
    const Skeleton& s = *default_skeleton();
    Pose p = Pose::identity(s.joint_count());
    const JointPositions rest = forward_kinematics(p, s);
    p.root_translation = Vec3(1, 2, 3);
    const JointPositions moved = forward_kinematics(p, s);
    EXPECT_LT(max_abs_diff(moved, rest.rowwise() + Eigen::RowVector3d(1, 2, 3)), 1e-15);
}

TEST(ForwardKinematics, TwoJointChainRotatedRoot)
{
    const Skeleton s({{"root", -1, Vec3::Zero()}, {"tip", 0, Vec3(0, 1, 0)}});
    Pose p = Pose::identity(2);
    p.rot6d[0] = sixd_from_matrix(yaw_matrix(M_PI / 2));
    p.root_translation = Vec3(0.5, 0.5, 0.0);
    const JointPositions pos = forward_kinematics(p, s);
    EXPECT_LT((pos.row(1) - Eigen::RowVector3d(-0.5, 0.5, 0.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ForwardKinematics, JointCountMismatchThrows)
{
    EXPECT_THROW(forward_kinematics(Pose::identity(3), *default_skeleton()), ShapeMismatch);
}

TEST(ForwardKinematics, CommutesWithRigidTransforms)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        const Motion m = random_motion(rng, 1);
        const double yaw = u(rng);
        const Vec3 t(u(rng), u(rng), u(rng));
        const JointPositions before = forward_kinematics(m.front(), *m.skeleton());
        const JointPositions after = forward_kinematics(apply_rigid(m, yaw, t).front(), *m.skeleton());
        const JointPositions expected =
            ((yaw_matrix(yaw) * before.transpose()).colwise() + t).transpose();
        EXPECT_LT(max_abs_diff(after, expected), 1e-9);
    }
}

TEST(Canonicalize, FixedPoint)
{
    const Motion m = walking_motion(20);
    EXPECT_LT(max_motion_diff(canonicalize(m), m), 1e-9);
}

TEST(Canonicalize, RecoversKnownTransform)
{
    const Motion m = walking_motion(20);
    const Motion moved = apply_rigid(m, 1.3, Vec3(4.0, -2.5, 0.0));
    EXPECT_GT(max_motion_diff(moved, m), 0.1);
    EXPECT_LT(max_motion_diff(canonicalize(moved), m), 1e-9);
}

TEST(Canonicalize, ZeroesHorizontalRootKeepsHeight)
{
    std::vector<Pose> frames(3, Pose::identity(22));
    frames[0].root_translation = Vec3(5, 5, 1);
    frames[1].root_translation = Vec3(6, 5, 1);
    const Motion c = canonicalize(Motion(frames, 30.0, default_skeleton()));
    EXPECT_LT((c.front().root_translation - Vec3(0, 0, 1)).norm(), 1e-12);
    EXPECT_LT((c.frame(1).root_translation - Vec3(1, 0, 1)).norm(), 1e-12);
}

TEST(Canonicalize, IdempotentAndFacesForward)
{
    std::mt19937_64 rng(6);
    for (int i = 0; i < 50; ++i) {
        const Motion m = random_motion(rng, 4);
        const Motion c = canonicalize(m);
        EXPECT_NEAR(pose_heading(c.front()), 0.0, 1e-9);
        EXPECT_NEAR(c.front().root_translation.head<2>().norm(), 0.0, 1e-9);
        EXPECT_NEAR(c.front().root_translation.z(), m.front().root_translation.z(), 1e-12);
        EXPECT_LT(max_motion_diff(canonicalize(c), c), 1e-9);
    }
}

TEST(Features, RoundtripIsExact)
{
    std::mt19937_64 rng(12);
    const Pose p = random_pose(rng, 22);
    EXPECT_EQ(features_to_pose(pose_features(p), *default_skeleton()), p);
    const Motion m = random_motion(rng, 7);
    EXPECT_EQ(features_to_motion(motion_features(m), m.fps(), m.skeleton()), m);
}

TEST(Features, DimensionMismatchThrows)
{
    EXPECT_THROW(features_to_pose(Eigen::VectorXd::Zero(10), *default_skeleton()), ShapeMismatch);
    EXPECT_THROW(FeatureStats::identity(5).apply(FeatureMatrix::Zero(2, 4)), ShapeMismatch);
}

TEST(FeatureStats, IdentityStatsAreIdentity)
{
    std::mt19937_64 rng(13);
    const FeatureMatrix x = motion_features(random_motion(rng, 5));
    EXPECT_EQ(FeatureStats::identity(static_cast<int>(x.cols())).apply(x), x);
}

TEST(FeatureStats, ThreeFrameDirectFormula)
{
    FeatureMatrix x(3, 2);
    x << 1.0, 5.0, 2.0, 5.0, 6.0, 5.0;
    const FeatureStats s = FeatureStats::compute({x});
    EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
    EXPECT_DOUBLE_EQ(s.mean[1], 5.0);
    // population variance of (1, 2, 6): ((4 + 1 + 9) / 3)
    EXPECT_NEAR(s.std[0], std::sqrt(14.0 / 3.0), 1e-15);
    EXPECT_DOUBLE_EQ(s.std[1], FeatureStats::kStdFloor);
}

TEST(FeatureStats, ApplyInvertRoundtrip)
{
    std::mt19937_64 rng(14);
    const FeatureMatrix a = motion_features(random_motion(rng, 9));
    const FeatureMatrix b = motion_features(random_motion(rng, 4));
    const FeatureStats s = FeatureStats::compute({a, b});
    EXPECT_LT((s.invert(s.apply(a)) - a).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MotionIo, JsonRoundtripIsBitExact)
{
    std::mt19937_64 rng(15);
    MotionFile file{random_motion(rng, 6), {{"walk forward", 0, 4}, {"sit down", 3, 6}}};
    const std::string text = dump_motion_file(file);
    const MotionFile back = parse_motion_file(text);
    EXPECT_EQ(back.motion, file.motion);
    EXPECT_EQ(back.labels, file.labels);
    EXPECT_EQ(dump_motion_file(back), text);
}

TEST(MotionIo, MalformedInputIsFormatError)
{
    EXPECT_THROW(parse_motion_file("{"), FormatError);
    EXPECT_THROW(parse_motion_file(R"({"fps": 30, "frames": []})"), FormatError);
}

TEST(Canonicalize, TransformInverseRestoresMotion)
{
    std::mt19937_64 rng(77);
    const Motion m = random_motion(rng, 6);
    const YawTransform t = canonical_transform(m.front());
    EXPECT_LT(max_motion_diff(apply_rigid(m, t), canonicalize(m)), 1e-12);
    EXPECT_LT(max_motion_diff(apply_rigid(apply_rigid(m, t), t.inverse()), m), 1e-12);
}
