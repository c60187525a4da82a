#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "vimu/common.hpp"

namespace vimu {

/// Unit quaternion (w, x, y, z). Every constructor and product renormalises,
/// so values stay on the unit sphere to within rounding.
class Quaternion {
public:
    Quaternion() = default;
    /// Normalises the input; throws InvalidArgument on a zero or non-finite quaternion.
    Quaternion(double w, double x, double y, double z);

    static Quaternion identity() { return {}; }

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }
    Vec3 vec() const { return {x_, y_, z_}; }

    Quaternion conjugate() const;
    Quaternion inverse() const { return conjugate(); }
    Quaternion operator*(const Quaternion& rhs) const;
    Vec3 rotate(const Vec3& v) const;
    Mat3 to_matrix() const;

    /// Same rotation with w >= 0.
    Quaternion canonical() const;
    double dot(const Quaternion& o) const { return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }
    double norm() const;

    /// Rotation vector (axis * angle, radians) of the shorter of q and -q.
    Vec3 rotation_vector() const;

    bool operator==(const Quaternion&) const = default;

private:
    double w_ = 1.0, x_ = 0.0, y_ = 0.0, z_ = 0.0;
};

/// Throws InvalidArgument if |axis| == 0.
Quaternion quat_from_axis_angle(const Vec3& axis, double angle_rad);

/// Shortest-arc rotation taking a/|a| onto b/|b|. Antiparallel inputs rotate
/// by pi about the axis obtained by orthogonalising the lowest-index basis
/// vector that is not parallel to a.
Quaternion quat_between(const Vec3& a, const Vec3& b);

/// Rotation matrix (orthonormal, det +1) to quaternion, w >= 0.
Quaternion quat_from_matrix(const Mat3& m);

/// Inverse of quat_from_axis_angle for a rotation vector; zero maps to identity.
Quaternion quat_from_rotation_vector(const Vec3& rv);

/// Axis permutation of an Euler triple, e.g. "ZXY". Rotations compose
/// intrinsically in the listed order: R = R_first * R_second * R_third.
struct RotationOrder {
    std::array<std::uint8_t, 3> axes{0, 1, 2};

    static RotationOrder parse(std::string_view letters);
    std::string str() const;
    bool operator==(const RotationOrder&) const = default;
};

Quaternion quat_from_euler_deg(const RotationOrder& order, const Vec3& angles_deg);

/// Inverse of quat_from_euler_deg; the middle angle lies in [-90, 90].
Vec3 euler_deg_from_quat(const RotationOrder& order, const Quaternion& q);

}  // namespace vimu
