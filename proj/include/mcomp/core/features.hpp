#pragma once

#include <Eigen/Core>

#include "mcomp/core/motion.hpp"

namespace mcomp {

// Row-major so one frame is one contiguous row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// D = 6 J + 3, laid out as [rot6d joint 0, ..., rot6d joint J-1, root xyz].
inline int feature_dim(int joint_count) { return 6 * joint_count + 3; }

Eigen::VectorXd pose_features(const Pose& pose);
Pose features_to_pose(const Eigen::Ref<const Eigen::VectorXd>& features, const Skeleton& skeleton);

FeatureMatrix motion_features(const Motion& motion);
Motion features_to_motion(const FeatureMatrix& features, double fps, SkeletonPtr skeleton);

// Per-coordinate standardization statistics (population std, floored).
struct FeatureStats {
    static constexpr double kStdFloor = 1e-2;

    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    static FeatureStats identity(int dim);
    // Each row of each matrix is one sample.
    static FeatureStats compute(const std::vector<FeatureMatrix>& samples);

    int dim() const { return static_cast<int>(mean.size()); }

    FeatureMatrix apply(const FeatureMatrix& x) const;
    FeatureMatrix invert(const FeatureMatrix& x) const;
};

} // namespace mcomp
