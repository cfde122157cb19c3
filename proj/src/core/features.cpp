#include "mcomp/core/features.hpp"

#include <cmath>

namespace mcomp {

Eigen::VectorXd pose_features(const Pose& pose)
{
    const int J = pose.joint_count();
    Eigen::VectorXd f(feature_dim(J));
    for (int j = 0; j < J; ++j) {
        f.segment<6>(6 * j) = pose.rot6d[j];
    }
    f.tail<3>() = pose.root_translation;
    return f;
}

Pose features_to_pose(const Eigen::Ref<const Eigen::VectorXd>& features, const Skeleton& skeleton)
{
    const int J = skeleton.joint_count();
    if (features.size() != feature_dim(J)) {
        throw ShapeMismatch("feature vector has " + std::to_string(features.size()) +
                            " entries, expected " + std::to_string(feature_dim(J)));
    }
    Pose p;
    p.rot6d.resize(J);
    for (int j = 0; j < J; ++j) {
        p.rot6d[j] = features.segment<6>(6 * j);
    }
    p.root_translation = features.tail<3>();
    return p;
}

FeatureMatrix motion_features(const Motion& motion)
{
    const int D = feature_dim(motion.skeleton()->joint_count());
    FeatureMatrix out(static_cast<Eigen::Index>(motion.size()), D);
    for (std::size_t f = 0; f < motion.size(); ++f) {
        out.row(static_cast<Eigen::Index>(f)) = pose_features(motion.frame(f)).transpose();
    }
    return out;
}

Motion features_to_motion(const FeatureMatrix& features, double fps, SkeletonPtr skeleton)
{
    std::vector<Pose> frames;
    frames.reserve(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index f = 0; f < features.rows(); ++f) {
        frames.push_back(features_to_pose(features.row(f).transpose(), *skeleton));
    }
    return Motion(std::move(frames), fps, std::move(skeleton));
}

FeatureStats FeatureStats::identity(int dim)
{
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

FeatureStats FeatureStats::compute(const std::vector<FeatureMatrix>& samples)
{
    if (samples.empty() || samples.front().rows() == 0) {
        throw std::invalid_argument("feature stats need at least one sample row");
    }
    const Eigen::Index D = samples.front().cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    double n = 0;
    for (const FeatureMatrix& s : samples) {
        if (s.cols() != D) {
            throw ShapeMismatch("feature stats: inconsistent feature dimension");
        }
        sum += s.colwise().sum().transpose();
        n += static_cast<double>(s.rows());
    }
    const Eigen::VectorXd mean = sum / n;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(D);
    for (const FeatureMatrix& s : samples) {
        sq += (s.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    }
    Eigen::VectorXd std = (sq / n).array().sqrt().max(kStdFloor).matrix();
    return {mean, std};
}

FeatureMatrix FeatureStats::apply(const FeatureMatrix& x) const
{
    if (x.cols() != dim()) {
        throw ShapeMismatch("feature stats dimension mismatch");
    }
    return ((x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array()).matrix();
}

FeatureMatrix FeatureStats::invert(const FeatureMatrix& x) const
{
    if (x.cols() != dim()) {
        throw ShapeMismatch("feature stats dimension mismatch");
    }
    return ((x.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose());
}

} // namespace mcomp
