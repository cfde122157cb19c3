#include "mcomp/core/rotation.hpp"

#include <algorithm>
#include <cmath>

namespace mcomp {

namespace {
constexpr double kDegenerateTol = 1e-8;

Quat canonical_sign(Quat q)
{
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    return q;
}
} // namespace

Mat3 matrix_from_6d(const Rot6d& r)
{
    const Vec3 a1 = r.head<3>();
    const Vec3 a2 = r.tail<3>();
    const double n1 = a1.norm();
    if (!(n1 >= kDegenerateTol)) {
        throw DegenerateRotation("6D rotation: first column has near-zero norm");
    }
    const Vec3 b1 = a1 / n1;
    const Vec3 u2 = a2 - b1.dot(a2) * b1;
    const double n2 = u2.norm();
    if (!(n2 >= kDegenerateTol)) {
        throw DegenerateRotation("6D rotation: columns are near-parallel");
    }
    const Vec3 b2 = u2 / n2;
    Mat3 m;
    m.col(0) = b1;
    m.col(1) = b2;
    m.col(2) = b1.cross(b2);
    return m;
}

Rot6d sixd_from_matrix(const Mat3& m)
{
    Rot6d r;
    r.head<3>() = m.col(0);
    r.tail<3>() = m.col(1);
    return r;
}

Quat quat_from_matrix(const Mat3& m)
{
    Quat q(m);
    q.normalize();
    return canonical_sign(q);
}

Mat3 matrix_from_quat(const Quat& q)
{
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DegenerateRotation("quaternion has zero norm");
    }
    return Quat(q.coeffs() / n).toRotationMatrix();
}

Quat quat_from_6d(const Rot6d& r)
{
    return quat_from_matrix(matrix_from_6d(r));
}

Rot6d sixd_from_quat(const Quat& q)
{
    return sixd_from_matrix(matrix_from_quat(q));
}

Rot6d orthonormalize_6d(const Rot6d& r)
{
    return sixd_from_matrix(matrix_from_6d(r));
}

RotationValue rotation_convert(const RotationValue& value, RotationRepr to)
{
    const Mat3 m = std::visit(
        [](const auto& v) -> Mat3 {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rot6d>) {
                return matrix_from_6d(v);
            } else if constexpr (std::is_same_v<T, Mat3>) {
                return v;
            } else {
                return matrix_from_quat(v);
            }
        },
        value);
    switch (to) {
    case RotationRepr::sixd:
        return sixd_from_matrix(m);
    case RotationRepr::matrix:
        return m;
    case RotationRepr::quaternion:
        return quat_from_matrix(m);
    }
    throw std::invalid_argument("unknown rotation representation");
}

Quat slerp(const Quat& q0, const Quat& q1, double t)
{
    Eigen::Vector4d a = q0.coeffs();
    Eigen::Vector4d b = q1.coeffs();
    if (a.dot(b) < 0.0) {
        b = -b;
    }
    // Angle between the two 4-vectors, stable near 0 and pi/2.
    const double omega = 2.0 * std::atan2((a - b).norm(), (a + b).norm());
    Eigen::Vector4d out;
    if (omega < 1e-10) {
        out = (1.0 - t) * a + t * b;
    } else {
        const double s = std::sin(omega);
        out = (std::sin((1.0 - t) * omega) / s) * a + (std::sin(t * omega) / s) * b;
    }
    out.normalize();
    Quat q;
    q.coeffs() = out;
    return q;
}

double rotation_angle_between(const Quat& a, const Quat& b)
{
    const Eigen::Vector4d u = a.coeffs().normalized();
    Eigen::Vector4d v = b.coeffs().normalized();
    if (u.dot(v) < 0.0) {
        v = -v;
    }
    // Quaternion half-angle doubled.
    return 4.0 * std::atan2((u - v).norm(), (u + v).norm());
}

Mat3 yaw_matrix(double yaw)
{
    return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

double heading_of(const Mat3& root_rotation)
{
    const Vec3 forward = root_rotation * Vec3::UnitY();
    if (std::hypot(forward.x(), forward.y()) > 1e-9) {
        return std::atan2(-forward.x(), forward.y());
    }
    // Forward axis is vertical; fall back to the lateral axis.
    const Vec3 right = root_rotation * Vec3::UnitX();
    return std::atan2(right.y(), right.x());
}

} // namespace mcomp
