#include <cmath>
#include <functional>
#include <numbers>

#include <doctest.h>

#include "support.hpp"
#include "vimu/imu_sim.hpp"

using namespace vimu;

namespace {

constexpr double kPi = std::numbers::pi;

struct Single {
    MotionSequence motion;
    RotationTrack track;
};

// One free joint following p(t) with orientation q(t).
Single single_joint(double rate, std::size_t frames, const std::function<Vec3(double)>& p,
                    const std::function<Quaternion(double)>& q = [](double) { return Quaternion{}; }) {
    Single s;
    s.motion.frame_rate = rate;
    s.motion.joint_count = 1;
    s.track.joint_count = 1;
    for (std::size_t k = 0; k < frames; ++k) {
        const double t = static_cast<double>(k) / rate;
        s.motion.positions.push_back(p(t));
        s.track.global.push_back(q(t));
        s.track.local.push_back(q(t));
    }
    return s;
}

SensorConfig clean() {
    SensorConfig c;
    c.accel_noise_std = 0;
    c.gyro_noise_std = 0;
    return c;
}

}  // namespace

TEST_CASE("stationary sensor reads +g on z and no rotation") {
    const auto s = single_joint(100, 50, [](double) { return Vec3(0.3, -1, 2); });
    const ImuTrace t = simulate_imu(s.motion, s.track, clean());
    REQUIRE(t.samples() == 50);
    for (std::size_t k = 0; k < t.samples(); ++k) {
        CHECK((t.accel[k] - Vec3(0, 0, 9.81)).norm() < 1e-12);
        CHECK(t.gyro[k].norm() < 1e-12);
    }
}

TEST_CASE("free fall reads zero specific force") {
    const auto s = single_joint(100, 100, [](double t) { return Vec3(0, 0, 10 - 0.5 * 9.81 * t * t); });
    const ImuTrace t = simulate_imu(s.motion, s.track, clean());
    for (const auto& a : t.accel) CHECK(a.norm() < 1e-9);
}

TEST_CASE("constant velocity is indistinguishable from rest") {
    const Quaternion q = quat_from_axis_angle({1, 1, 0}, 0.6);
    const auto s = single_joint(50, 40, [](double t) { return Vec3(1.5 * t, -0.5 * t, 0.2 * t); },
                                [q](double) { return q; });
    const ImuTrace t = simulate_imu(s.motion, s.track, clean());
    const Vec3 expect = q.inverse().rotate(Vec3(0, 0, 9.81));
    for (const auto& a : t.accel) CHECK((a - expect).norm() < 1e-9);
}

TEST_CASE("uniform circular motion: centripetal magnitude and composed reading") {
    // r = 1 m, 1 rev/s; |a| = (2 pi)^2 = 39.478
    const double w = 2 * kPi;
    const auto s = single_joint(1000, 2000, [w](double t) { return Vec3(std::cos(w * t), std::sin(w * t), 0); });
    const auto a = linear_acceleration(s.motion, 0);
    for (std::size_t k = 0; k < a.size(); k += 97) CHECK(std::abs(a[k].norm() - 39.478) < 1e-3);
    const ImuTrace t = simulate_imu(s.motion, s.track, clean());
    // at t = 0 the point is at (1, 0, 0)
    CHECK((t.accel[1000] - Vec3(-39.478, 0, 9.81)).norm() < 1e-3);
}

TEST_CASE("linear acceleration copies interior values to the endpoints") {
    const auto s = single_joint(10, 5, [](double t) { return Vec3(t * t * t, 0, 0); });
    const auto a = linear_acceleration(s.motion, 0);
    CHECK(a.front() == a[1]);
    CHECK(a.back() == a[3]);
    const auto two = single_joint(10, 2, [](double) { return Vec3::Zero(); });
    CHECK_THROWS_AS(linear_acceleration(two.motion, 0), InvalidArgument);
}

TEST_CASE("gyro reports the body-frame spin") {
    const Quaternion tilt = quat_from_axis_angle({1, 0, 0}, 0.4);
    const auto s = single_joint(100, 100, [](double) { return Vec3::Zero(); },
                                [tilt](double t) { return tilt * quat_from_axis_angle({0, 0, 1}, 3.0 * t); });
    const ImuTrace t = simulate_imu(s.motion, s.track, clean());
    for (const auto& g : t.gyro) CHECK((g - Vec3(0, 0, 3.0)).norm() < 1e-9);
}

TEST_CASE("property: readings do not depend on the world frame") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Quaternion world = vtest::random_rotation(rng);
        const Vec3 a0 = vtest::random_unit(rng), b0 = vtest::random_unit(rng);
        auto pos = [&](double t) { return Vec3(a0 * std::sin(3 * t) + b0 * t * t); };
        auto ori = [&](double t) { return quat_from_rotation_vector(a0 * t + b0 * std::cos(t)); };
        const auto s = single_joint(60, 30, pos, ori);
        const auto r = single_joint(
            60, 30, [&](double t) { return world.rotate(pos(t)); }, [&](double t) { return world * ori(t); });
        SensorConfig cr = clean();
        cr.gravity = world.rotate(cr.gravity);
        const ImuTrace ta = simulate_imu(s.motion, s.track, clean());
        const ImuTrace tb = simulate_imu(r.motion, r.track, cr);
        for (std::size_t k = 0; k < ta.samples(); ++k) {
            CHECK((ta.accel[k] - tb.accel[k]).norm() < 1e-9);
            CHECK((ta.gyro[k] - tb.gyro[k]).norm() < 1e-9);
        }
    }
}

TEST_CASE("white noise has the configured spread") {
    const auto s = single_joint(100, 1'000'000, [](double) { return Vec3::Zero(); });
    SensorConfig c;
    c.accel_noise_std = 0.05;
    c.gyro_noise_std = 0.01;
    c.seed = 42;
    const ImuTrace t = simulate_imu(s.motion, s.track, c);
    for (int axis = 0; axis < 3; ++axis) {
        double sa = 0, sa2 = 0, sg = 0, sg2 = 0;
        const double base = axis == 2 ? 9.81 : 0.0;
        for (std::size_t k = 0; k < t.samples(); ++k) {
            const double a = t.accel[k][axis] - base, g = t.gyro[k][axis];
            sa += a;
            sa2 += a * a;
            sg += g;
            sg2 += g * g;
        }
        const double n = static_cast<double>(t.samples());
        CHECK(std::abs(sa / n) < 5e-4);
        CHECK(std::abs(std::sqrt(sa2 / n - (sa / n) * (sa / n)) - 0.05) < 0.05 * 0.01);
        CHECK(std::abs(std::sqrt(sg2 / n - (sg / n) * (sg / n)) - 0.01) < 0.01 * 0.01);
    }
}

TEST_CASE("bias is constant within a trace and inside its range") {
    const auto s = single_joint(100, 200, [](double) { return Vec3::Zero(); });
    SensorConfig c = clean();
    c.accel_bias_range = 0.1;
    c.gyro_bias_range = 0.02;
    c.seed = 3;
    const ImuTrace t = simulate_imu(s.motion, s.track, c);
    const Vec3 ba = t.accel[0] - Vec3(0, 0, 9.81);
    for (std::size_t k = 0; k < t.samples(); ++k) {
        CHECK((t.accel[k] - Vec3(0, 0, 9.81) - ba).norm() < 1e-12);
        CHECK((t.gyro[k] - t.gyro[0]).norm() < 1e-12);
    }
    CHECK(ba.cwiseAbs().maxCoeff() <= 0.1);
    CHECK(t.gyro[0].cwiseAbs().maxCoeff() <= 0.02);
    CHECK(ba.norm() > 0);
}

TEST_CASE("noise is reproducible from the seed") {
    const auto s = single_joint(100, 300, [](double t) { return Vec3(t, 0, 0); });
    SensorConfig c;
    c.seed = 5;
    const ImuTrace a = simulate_imu(s.motion, s.track, c);
    const ImuTrace b = simulate_imu(s.motion, s.track, c);
    CHECK(a.accel == b.accel);
    CHECK(a.gyro == b.gyro);
    c.seed = 6;
    CHECK(simulate_imu(s.motion, s.track, c).accel != a.accel);
}

TEST_CASE("invalid sensor settings are rejected") {
    const auto s = single_joint(100, 10, [](double) { return Vec3::Zero(); });
    SensorConfig c;
    c.accel_noise_std = -1;
    CHECK_THROWS_AS(simulate_imu(s.motion, s.track, c), InvalidArgument);
    c = SensorConfig{};
    c.joint_index = 1;
    CHECK_THROWS_AS(simulate_imu(s.motion, s.track, c), InvalidArgument);
}

TEST_CASE("resampling at the same rate is the identity") {
    Rng rng(1);
    std::normal_distribution<double> n;
    ImuTrace t;
    t.sample_rate = 20;
    for (int k = 0; k < 33; ++k) {
        t.accel.emplace_back(n(rng), n(rng), n(rng));
        t.gyro.emplace_back(n(rng), n(rng), n(rng));
    }
    const ImuTrace r = resample_trace(t, 20);
    CHECK(r.accel == t.accel);
    CHECK(r.gyro == t.gyro);
}

TEST_CASE("resampling a ramp is exact") {
    ImuTrace t;
    t.sample_rate = 30;
    for (int k = 0; k <= 60; ++k) {
        const double x = k / 30.0;
        t.accel.emplace_back(x, 2 * x + 1, -x);
        t.gyro.emplace_back(0, x, 0);
    }
    const ImuTrace r = resample_trace(t, 20);
    CHECK(r.samples() == 41);  // t = 0 .. 2 s inclusive
    for (std::size_t k = 0; k < r.samples(); ++k) {
        const double x = static_cast<double>(k) / 20.0;
        CHECK((r.accel[k] - Vec3(x, 2 * x + 1, -x)).norm() < 1e-12);
    }
}

TEST_CASE("a 1 Hz sine survives 50 to 20 Hz resampling") {
    ImuTrace t;
    t.sample_rate = 50;
    for (int k = 0; k < 500; ++k) {
        const double v = std::sin(2 * kPi * k / 50.0);
        t.accel.emplace_back(v, 0, 0);
        t.gyro.emplace_back(0, 0, v);
    }
    const ImuTrace r = resample_trace(t, 20);
    double worst = 0;
    for (std::size_t k = 0; k < r.samples(); ++k)
        worst = std::max(worst, std::abs(r.accel[k].x() - std::sin(2 * kPi * static_cast<double>(k) / 20.0)));
    CHECK(worst < 2e-3);
}

TEST_CASE("recording resampling takes the nearest label, earlier on ties") {
    Recording rec;
    rec.sample_rate = 4;
    rec.layout = vtest::layout_of({"s.acc_x"});
    rec.values = {0, 1, 2, 3, 4};
    rec.labels = {"a", "b", "c", "d", "e"};
    const Recording r = resample_recording(rec, 8);
    REQUIRE(r.samples() == 9);
    CHECK(r.values[1] == doctest::Approx(0.5));
    CHECK(r.labels[1] == "a");
    CHECK(r.labels[2] == "b");
    CHECK(r.labels[3] == "b");
}

TEST_CASE("synthesis emits every placement at the output rate") {
    const Skeleton sk = body22_skeleton();
    // slow yaw plus drift; the limbs stay at rest
    RotationTrack smooth;
    smooth.joint_count = sk.size();
    std::vector<Vec3> roots;
    for (int f = 0; f < 90; ++f) {
        for (std::size_t j = 0; j < sk.size(); ++j)
            smooth.local.push_back(j == 0 ? quat_from_axis_angle({0, 0, 1}, 0.02 * f) : Quaternion{});
        roots.emplace_back(0.01 * f, 0, 1);
    }
    compose_globals(sk, smooth);
    SynthJob job;
    job.skeleton = &sk;
    job.motion = forward_kinematics(sk, smooth, roots, 30);
    job.motion.activity_label = "walking";
    job.motion.subject_id = "v1";
    job.source_id = "motions/walk.csv";
    SynthParams p;
    p.placements = {"right_wrist", "left_ankle", "head"};
    p.seed = 8;
    const SynthOutcome o = synthesize(job, p);
    REQUIRE(o.error.empty());
    REQUIRE(o.recording);
    CHECK(o.recording->channels() == 18);
    CHECK(o.recording->sample_rate == 20);
    CHECK(o.recording->samples() == 60);  // 89/30 s, k = 0..59 at 20 Hz
    CHECK(o.recording->labels.front() == "walking");
    CHECK((*o.recording->layout)[0].name() == "right_wrist.acc_x");
    CHECK(o.traces.size() == 3);

    SynthJob bad = job;
    bad.motion.positions.resize(sk.size() * 2);
    const auto batch = synthesize_batch({job, bad, job}, p);
    const auto serial = synthesize_batch_serial({job, bad, job}, p);
    CHECK(batch[0].recording->values == o.recording->values);
    CHECK_FALSE(batch[1].error.empty());
    CHECK(batch[2].recording->values == serial[2].recording->values);

    p.placements = {"tail"};
    CHECK_THROWS_AS(synthesize(job, p), InvalidArgument);
}
