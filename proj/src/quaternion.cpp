#include "vimu/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace vimu {

namespace {

// Shortest arc for unit vectors that are not close to antiparallel.
Quaternion arc_unit(const Vec3& a, const Vec3& b) {
    const Vec3 c = a.cross(b);
    return {1.0 + a.dot(b), c.x(), c.y(), c.z()};
}

Vec3 perpendicular_axis(const Vec3& a) {
    for (int i = 0; i < 3; ++i) {
        Vec3 e = Vec3::Zero();
        e[i] = 1.0;
        const Vec3 p = e - e.dot(a) * a;
        if (p.norm() > 1e-6) return p.normalized();
    }
    return Vec3::UnitX();  // unreachable for unit a
}

}  // namespace

Quaternion::Quaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n))
        throw InvalidArgument(fmt::format("quaternion ({}, {}, {}, {}) cannot be normalised", w, x, y, z));
    w_ = w / n;
    x_ = x / n;
    y_ = y / n;
    z_ = z / n;
}

double Quaternion::norm() const { return std::sqrt(dot(*this)); }

Quaternion Quaternion::conjugate() const {
    Quaternion q;
    q.w_ = w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
}

Quaternion Quaternion::operator*(const Quaternion& r) const {
    return {w_ * r.w_ - x_ * r.x_ - y_ * r.y_ - z_ * r.z_,
            w_ * r.x_ + x_ * r.w_ + y_ * r.z_ - z_ * r.y_,
            w_ * r.y_ - x_ * r.z_ + y_ * r.w_ + z_ * r.x_,
            w_ * r.z_ + x_ * r.y_ - y_ * r.x_ + z_ * r.w_};
}

Vec3 Quaternion::rotate(const Vec3& v) const {
    const Vec3 u = vec();
    const Vec3 t = 2.0 * u.cross(v);
    return v + w_ * t + u.cross(t);
}

Mat3 Quaternion::to_matrix() const {
    Mat3 m;
    const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
    const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
    const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
    m << 1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
         2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
         2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy);
    return m;
}

Quaternion Quaternion::canonical() const {
    if (w_ > 0.0 || (w_ == 0.0 && (x_ > 0.0 || (x_ == 0.0 && (y_ > 0.0 || (y_ == 0.0 && z_ >= 0.0))))))
        return *this;
    Quaternion q;
    q.w_ = -w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
}

Vec3 Quaternion::rotation_vector() const {
    const Quaternion q = canonical();
    const Vec3 v = q.vec();
    const double s = v.norm();
    if (s < 1e-12) return 2.0 * v / q.w_;
    return v * (2.0 * std::atan2(s, q.w_) / s);
}

Quaternion quat_from_axis_angle(const Vec3& axis, double angle_rad) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw InvalidArgument("quat_from_axis_angle: zero-length axis");
    const Vec3 u = axis / n * std::sin(0.5 * angle_rad);
    return {std::cos(0.5 * angle_rad), u.x(), u.y(), u.z()};
}

Quaternion quat_from_rotation_vector(const Vec3& rv) {
    const double angle = rv.norm();
    if (angle == 0.0) return Quaternion::identity();
    return quat_from_axis_angle(rv, angle);
}

Quaternion quat_between(const Vec3& a, const Vec3& b) {
    const double na = a.norm(), nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) throw InvalidArgument("quat_between: zero-length input vector");
    const Vec3 ua = a / na, ub = b / nb;
    if (ua.dot(ub) > -1.0 + 1e-6) return arc_unit(ua, ub);
    // Near antiparallel: half-turn onto -a, then the small remaining arc.
    const Vec3 axis = perpendicular_axis(ua);
    const Quaternion half_turn{0.0, axis.x(), axis.y(), axis.z()};
    return arc_unit(-ua, ub) * half_turn;
}

Quaternion quat_from_matrix(const Mat3& m) {
    const double tr = m.trace();
    double w, x, y, z;
    if (tr > 0.0) {
        const double s = 2.0 * std::sqrt(1.0 + tr);
        w = 0.25 * s;
        x = (m(2, 1) - m(1, 2)) / s;
        y = (m(0, 2) - m(2, 0)) / s;
        z = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
        w = (m(2, 1) - m(1, 2)) / s;
        x = 0.25 * s;
        y = (m(0, 1) + m(1, 0)) / s;
        z = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
        w = (m(0, 2) - m(2, 0)) / s;
        x = (m(0, 1) + m(1, 0)) / s;
        y = 0.25 * s;
        z = (m(1, 2) + m(2, 1)) / s;
    } else {
        const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
        w = (m(1, 0) - m(0, 1)) / s;
        x = (m(0, 2) + m(2, 0)) / s;
        y = (m(1, 2) + m(2, 1)) / s;
        z = 0.25 * s;
    }
    return Quaternion{w, x, y, z}.canonical();
}

RotationOrder RotationOrder::parse(std::string_view letters) {
    if (letters.size() != 3) throw InvalidArgument(fmt::format("rotation order '{}' must name three axes", letters));
    RotationOrder order;
    unsigned seen = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const char c = letters[i];
        int axis = -1;
        if (c == 'X' || c == 'x') axis = 0;
        if (c == 'Y' || c == 'y') axis = 1;
        if (c == 'Z' || c == 'z') axis = 2;
        if (axis < 0 || (seen & (1u << axis)))
            throw InvalidArgument(fmt::format("rotation order '{}' is not an axis permutation", letters));
        seen |= 1u << axis;
        order.axes[i] = static_cast<std::uint8_t>(axis);
    }
    return order;
}

std::string RotationOrder::str() const {
    std::string s;
    for (auto a : axes) s.push_back("XYZ"[a]);
    return s;
}

Quaternion quat_from_euler_deg(const RotationOrder& order, const Vec3& angles_deg) {
    Quaternion q;
    for (std::size_t i = 0; i < 3; ++i) {
        if (angles_deg[i] == 0.0) continue;
        Vec3 axis = Vec3::Zero();
        axis[order.axes[i]] = 1.0;
        q = q * quat_from_axis_angle(axis, angles_deg[i] * std::numbers::pi / 180.0);
    }
    return q;
}

Vec3 euler_deg_from_quat(const RotationOrder& order, const Quaternion& q) {
    const Mat3 r = q.to_matrix();
    const int i = order.axes[0], j = order.axes[1], k = order.axes[2];
    const double s = ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;  // +1 for cyclic orders
    const double deg = 180.0 / std::numbers::pi;
    const double b = std::asin(std::clamp(s * r(i, k), -1.0, 1.0));
    double a, c;
    if (std::abs(s * r(i, k)) < 1.0 - 1e-12) {
        a = std::atan2(-s * r(j, k), r(k, k));
        c = std::atan2(-s * r(i, j), r(i, i));
    } else {
        // Gimbal lock: only a +/- c is determined; put it all on the first angle.
        a = std::atan2(s * r(k, j), r(j, j));
        c = 0.0;
    }
    return {a * deg, b * deg, c * deg};
}

}  // namespace vimu
