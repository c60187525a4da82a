#include <cmath>
#include <numbers>

#include <doctest.h>

#include "support.hpp"
#include "vimu/quaternion.hpp"

using namespace vimu;
using vtest::random_unit;

namespace {

constexpr double kPi = std::numbers::pi;

// Rodrigues' formula, written out independently of the quaternion code.
Mat3 rodrigues(const Vec3& axis, double angle) {
    const Vec3 k = axis.normalized();
    Mat3 K;
    K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
    return Mat3::Identity() + std::sin(angle) * K + (1 - std::cos(angle)) * K * K;
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("zero angle gives the identity quaternion") {
    const Quaternion q = quat_from_axis_angle({0, 0, 1}, 0.0);
    CHECK(q.w() == 1.0);
    CHECK(q.x() == 0.0);
    CHECK(q.y() == 0.0);
    CHECK(q.z() == 0.0);
}

TEST_CASE("quarter turn about z takes x to y") {
    const Vec3 v = quat_from_axis_angle({0, 0, 1}, kPi / 2).rotate({1, 0, 0});
    CHECK((v - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("axis-angle matches the Rodrigues matrix") {
    Rng rng(7);
    std::uniform_real_distribution<double> ang(-2 * kPi, 2 * kPi);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 2000; ++i) {
        Vec3 axis(n(rng), n(rng), n(rng));
        if (axis.norm() < 1e-3) continue;
        const double a = ang(rng);
        CHECK(max_abs(quat_from_axis_angle(axis, a).to_matrix() - rodrigues(axis, a)) < 1e-9);
    }
}

TEST_CASE("zero axis is rejected") {
    CHECK_THROWS_AS(quat_from_axis_angle({0, 0, 0}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(Quaternion(0, 0, 0, 0), InvalidArgument);
}

TEST_CASE("quat_between worked cases") {
    SUBCASE("parallel") {
        const Quaternion q = quat_between({0, 1, 0}, {0, 1, 0});
        CHECK(std::abs(q.canonical().w() - 1.0) < 1e-12);
    }
    SUBCASE("y onto x is -90 degrees about z") {
        const Quaternion q = quat_between({0, 1, 0}, {1, 0, 0});
        const Vec3 rv = q.rotation_vector();
        CHECK((rv - Vec3(0, 0, -kPi / 2)).norm() < 1e-12);
        CHECK((q.rotate({0, 1, 0}) - Vec3(1, 0, 0)).norm() < 1e-12);
    }
    SUBCASE("antiparallel is a half turn about a perpendicular axis") {
        const Quaternion q = quat_between({1, 0, 0}, {-1, 0, 0});
        const Vec3 rv = q.rotation_vector();
        CHECK(std::abs(rv.norm() - kPi) < 1e-9);
        CHECK(std::abs(rv.normalized().dot(Vec3(1, 0, 0))) < 1e-12);
        CHECK((q.rotate({1, 0, 0}) - Vec3(-1, 0, 0)).norm() < 1e-9);
    }
    SUBCASE("unnormalised inputs") {
        const Quaternion q = quat_between({0, 0, 5}, {3, 0, 0});
        CHECK((q.rotate({0, 0, 1}) - Vec3(1, 0, 0)).norm() < 1e-12);
    }
}

TEST_CASE("property: quat_between maps a onto b for random pairs") {
    Rng rng(11);
    std::normal_distribution<double> n;
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        Vec3 a = random_unit(rng) * std::exp(n(rng));
        Vec3 b = random_unit(rng) * std::exp(n(rng));
        if (i % 100 == 0) b = -a * 2.0;  // keep antiparallel pairs in the mix
        if (i % 100 == 1) b = a + Vec3(1e-9, 0, 0);
        worst = std::max(worst, (quat_between(a, b).rotate(a.normalized()) - b.normalized()).norm());
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("property: products stay unit norm") {
    Rng rng(3);
    Quaternion acc;
    for (int i = 0; i < 100000; ++i) {
        acc = acc * vtest::random_rotation(rng);
        REQUIRE(std::abs(acc.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("matrix conversion round trip") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const Quaternion q = vtest::random_rotation(rng);
        const Quaternion back = quat_from_matrix(q.to_matrix());
        CHECK(back.w() >= 0.0);
        CHECK(std::abs(std::abs(back.dot(q)) - 1.0) < 1e-12);
    }
    // Near-half-turns exercise the other Shepperd branches.
    for (const Vec3& axis : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 1, 0)}) {
        const Quaternion q = quat_from_axis_angle(axis, kPi - 1e-7);
        CHECK(std::abs(std::abs(quat_from_matrix(q.to_matrix()).dot(q)) - 1.0) < 1e-12);
    }
}

TEST_CASE("rotation vector round trip and short hemisphere") {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const Quaternion q = vtest::random_rotation(rng);
        const Vec3 rv = q.rotation_vector();
        CHECK(rv.norm() <= kPi + 1e-12);
        CHECK(std::abs(std::abs(quat_from_rotation_vector(rv).dot(q)) - 1.0) < 1e-12);
    }
    CHECK(quat_from_rotation_vector(Vec3::Zero()) == Quaternion{});
    // 270 degrees one way is 90 the other.
    const Vec3 rv = quat_from_axis_angle({0, 0, 1}, 1.5 * kPi).rotation_vector();
    CHECK((rv - Vec3(0, 0, -kPi / 2)).norm() < 1e-12);
}

TEST_CASE("euler composition is intrinsic in listed order") {
    const RotationOrder zxy = RotationOrder::parse("ZXY");
    CHECK(zxy.str() == "ZXY");
    const Quaternion q = quat_from_euler_deg(zxy, {30, 40, 50});
    const Mat3 expect = rodrigues({0, 0, 1}, 30 * kPi / 180) * rodrigues({1, 0, 0}, 40 * kPi / 180) *
                        rodrigues({0, 1, 0}, 50 * kPi / 180);
    CHECK(max_abs(q.to_matrix() - expect) < 1e-12);
    CHECK_THROWS_AS(RotationOrder::parse("ZZY"), InvalidArgument);
}

TEST_CASE("euler decomposition inverts composition for every order") {
    Rng rng(21);
    std::uniform_real_distribution<double> outer(-179, 179), middle(-89, 89);
    for (const char* o : {"XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX"}) {
        const RotationOrder order = RotationOrder::parse(o);
        for (int i = 0; i < 300; ++i) {
            const Vec3 e(outer(rng), middle(rng), outer(rng));
            const Vec3 back = euler_deg_from_quat(order, quat_from_euler_deg(order, e));
            CHECK((back - e).norm() < 1e-7);
        }
        // Gimbal lock still reproduces the rotation, if not the angles.
        const Quaternion lock = quat_from_euler_deg(order, {25, 90, -40});
        const Quaternion again = quat_from_euler_deg(order, euler_deg_from_quat(order, lock));
        CHECK(std::abs(std::abs(again.dot(lock)) - 1.0) < 1e-9);
    }
}
