#include "mcomp/core/motion.hpp"

#include <cmath>
#include <stdexcept>

namespace mcomp {

Pose Pose::identity(int joint_count)
{
    Pose p;
    p.rot6d.assign(joint_count, sixd_from_matrix(Mat3::Identity()));
    return p;
}

Motion::Motion(std::vector<Pose> frames, double fps, SkeletonPtr skeleton)
    : frames_(std::move(frames)), fps_(fps), skeleton_(std::move(skeleton))
{
    if (!skeleton_) {
        throw std::invalid_argument("motion requires a skeleton");
    }
    if (frames_.empty()) {
        throw std::invalid_argument("motion must have at least one frame");
    }
    if (!(fps_ > 0.0) || !std::isfinite(fps_)) {
        throw std::invalid_argument("motion fps must be positive");
    }
    const int J = skeleton_->joint_count();
    for (const Pose& p : frames_) {
        if (p.joint_count() != J) {
            throw ShapeMismatch("pose joint count does not match skeleton");
        }
    }
}

Motion Motion::slice(std::size_t begin, std::size_t end) const
{
    if (begin >= end || end > frames_.size()) {
        throw std::out_of_range("motion slice out of range");
    }
    return with_frames(std::vector<Pose>(frames_.begin() + static_cast<std::ptrdiff_t>(begin),
                                         frames_.begin() + static_cast<std::ptrdiff_t>(end)));
}

Motion Motion::with_frames(std::vector<Pose> frames) const
{
    return Motion(std::move(frames), fps_, skeleton_);
}

Motion Motion::orthonormalized() const
{
    std::vector<Pose> out = frames_;
    for (Pose& p : out) {
        for (Rot6d& r : p.rot6d) {
            r = orthonormalize_6d(r);
        }
    }
    return with_frames(std::move(out));
}

bool Motion::operator==(const Motion& other) const
{
    return fps_ == other.fps_ && *skeleton_ == *other.skeleton_ && frames_ == other.frames_;
}

Motion concatenate(const std::vector<Motion>& parts)
{
    if (parts.empty()) {
        throw std::invalid_argument("concatenate: no motions");
    }
    std::vector<Pose> frames;
    for (const Motion& m : parts) {
        if (m.fps() != parts.front().fps() || *m.skeleton() != *parts.front().skeleton()) {
            throw ShapeMismatch("concatenate: fps or skeleton differ");
        }
        frames.insert(frames.end(), m.frames().begin(), m.frames().end());
    }
    return parts.front().with_frames(std::move(frames));
}

JointPositions forward_kinematics(const Pose& pose, const Skeleton& skeleton)
{
    const int J = skeleton.joint_count();
    if (pose.joint_count() != J) {
        throw ShapeMismatch("forward_kinematics: pose joint count does not match skeleton");
    }
    JointPositions pos(J, 3);
    std::vector<Mat3> global(J);
    global[0] = matrix_from_6d(pose.rot6d[0]);
    pos.row(0) = pose.root_translation.transpose();
    for (int j = 1; j < J; ++j) {
        const Joint& joint = skeleton.joint(j);
        const int p = joint.parent;
        pos.row(j) = pos.row(p) + (global[p] * joint.offset).transpose();
        global[j] = global[p] * matrix_from_6d(pose.rot6d[j]);
    }
    return pos;
}

std::vector<JointPositions> motion_positions(const Motion& motion)
{
    std::vector<JointPositions> out;
    out.reserve(motion.size());
    for (const Pose& p : motion.frames()) {
        out.push_back(forward_kinematics(p, *motion.skeleton()));
    }
    return out;
}

Mat3 root_rotation(const Pose& pose)
{
    return matrix_from_6d(pose.rot6d.at(0));
}

double pose_heading(const Pose& pose)
{
    return heading_of(root_rotation(pose));
}

Motion apply_rigid(const Motion& motion, double yaw, const Vec3& translation)
{
    const Mat3 r = yaw_matrix(yaw);
    std::vector<Pose> frames = motion.frames();
    for (Pose& p : frames) {
        // Rotating the two stored columns directly keeps the transform exact
        // and linear even for slightly non-orthonormal inputs.
        p.rot6d[0].head<3>() = r * p.rot6d[0].head<3>();
        p.rot6d[0].tail<3>() = r * p.rot6d[0].tail<3>();
        p.root_translation = r * p.root_translation + translation;
    }
    return motion.with_frames(std::move(frames));
}

YawTransform YawTransform::inverse() const
{
    return {-yaw, -(yaw_matrix(-yaw) * translation)};
}

YawTransform canonical_transform(const Pose& first)
{
    const double yaw = -pose_heading(first);
    const Vec3 origin(first.root_translation.x(), first.root_translation.y(), 0.0);
    // x -> R (x - origin)
    return {yaw, -(yaw_matrix(yaw) * origin)};
}

Motion apply_rigid(const Motion& motion, const YawTransform& t)
{
    return apply_rigid(motion, t.yaw, t.translation);
}

Motion canonicalize(const Motion& motion)
{
    return apply_rigid(motion, canonical_transform(motion.front()));
}

} // namespace mcomp
