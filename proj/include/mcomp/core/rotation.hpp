#pragma once

#include <stdexcept>
#include <variant>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mcomp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// First two columns of a rotation matrix, stacked column-major:
// (r00, r10, r20, r01, r11, r21).
using Rot6d = Eigen::Matrix<double, 6, 1>;

class DegenerateRotation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RotationRepr { sixd, matrix, quaternion };

using RotationValue = std::variant<Rot6d, Mat3, Quat>;

// Gram-Schmidt reconstruction. Throws DegenerateRotation when the first
// column norm or the projected second column norm falls below 1e-8.
Mat3 matrix_from_6d(const Rot6d& r);
Rot6d sixd_from_matrix(const Mat3& m);

// Unit quaternion with non-negative scalar part.
Quat quat_from_matrix(const Mat3& m);
// Normalizes the input; throws DegenerateRotation on a zero quaternion.
Mat3 matrix_from_quat(const Quat& q);

Quat quat_from_6d(const Rot6d& r);
Rot6d sixd_from_quat(const Quat& q);

// Re-projects a (possibly non-orthonormal) 6D value onto the rotation group.
Rot6d orthonormalize_6d(const Rot6d& r);

RotationValue rotation_convert(const RotationValue& value, RotationRepr to);

// Shortest-path spherical interpolation. If dot(q0, q1) < 0, q1 is negated.
Quat slerp(const Quat& q0, const Quat& q1, double t);

// Angle (radians, in [0, pi]) of the relative rotation between a and b.
double rotation_angle_between(const Quat& a, const Quat& b);

// Rotation about the vertical (+z) axis.
Mat3 yaw_matrix(double yaw);

// Heading of a root orientation: yaw theta such that the body forward axis
// (+y in the local frame), projected onto the ground plane, equals
// yaw_matrix(theta) * (0, 1, 0). Heading 0 faces +y.
double heading_of(const Mat3& root_rotation);

} // namespace mcomp
