#pragma once

#include <stdexcept>
#include <vector>

#include "mcomp/core/rotation.hpp"
#include "mcomp/core/skeleton.hpp"

namespace mcomp {

class ShapeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// One frame: per-joint local rotations (joint 0 is the global root
// orientation) plus the root translation in meters.
struct Pose {
    std::vector<Rot6d> rot6d;
    Vec3 root_translation = Vec3::Zero();

    static Pose identity(int joint_count);

    int joint_count() const { return static_cast<int>(rot6d.size()); }
    bool operator==(const Pose&) const = default;
};

class Motion {
public:
    // Throws std::invalid_argument on empty frames, non-positive fps or a
    // frame whose joint count differs from the skeleton's.
    Motion(std::vector<Pose> frames, double fps, SkeletonPtr skeleton);

    const std::vector<Pose>& frames() const { return frames_; }
    const Pose& frame(std::size_t i) const { return frames_.at(i); }
    const Pose& front() const { return frames_.front(); }
    const Pose& back() const { return frames_.back(); }
    std::size_t size() const { return frames_.size(); }
    double fps() const { return fps_; }
    const SkeletonPtr& skeleton() const { return skeleton_; }
    double duration_seconds() const { return static_cast<double>(frames_.size()) / fps_; }

    // Frames [begin, end).
    Motion slice(std::size_t begin, std::size_t end) const;
    Motion with_frames(std::vector<Pose> frames) const;

    // Every joint rotation projected back onto SO(3) via Gram-Schmidt.
    Motion orthonormalized() const;

    bool operator==(const Motion& other) const;

private:
    std::vector<Pose> frames_;
    double fps_;
    SkeletonPtr skeleton_;
};

// Concatenates motions sharing fps and skeleton.
Motion concatenate(const std::vector<Motion>& parts);

// Joint positions (J x 3, one row per joint) in meters.
using JointPositions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

JointPositions forward_kinematics(const Pose& pose, const Skeleton& skeleton);
std::vector<JointPositions> motion_positions(const Motion& motion);

Mat3 root_rotation(const Pose& pose);
double pose_heading(const Pose& pose);

// Applies one rigid transform x -> yaw_matrix(yaw) * x + translation to the
// whole motion (root orientation and root translation).
Motion apply_rigid(const Motion& motion, double yaw, const Vec3& translation);

// x -> yaw_matrix(yaw) * x + translation.
struct YawTransform {
    double yaw = 0.0;
    Vec3 translation = Vec3::Zero();

    YawTransform inverse() const;
};

Motion apply_rigid(const Motion& motion, const YawTransform& t);

// The transform canonicalize() applies for a motion starting at `first`.
YawTransform canonical_transform(const Pose& first);

// Puts frame 0 at x = y = 0 (z preserved) facing +y.
Motion canonicalize(const Motion& motion);

} // namespace mcomp
