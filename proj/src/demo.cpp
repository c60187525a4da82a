#include "vimu/demo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vimu/imu_sim.hpp"
#include "vimu/io_util.hpp"

namespace vimu {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

Quaternion rx(double deg) { return quat_from_axis_angle(Vec3::UnitX(), deg * kDeg); }
Quaternion ry(double deg) { return quat_from_axis_angle(Vec3::UnitY(), deg * kDeg); }
Quaternion rz(double deg) { return quat_from_axis_angle(Vec3::UnitZ(), deg * kDeg); }

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Centre +- spread * halfwidth.
double around(Rng& rng, double centre, double halfwidth, double spread) {
    if (spread <= 0.0) return centre;
    return centre + uniform(rng, -1.0, 1.0) * halfwidth * spread;
}

struct Body {
    std::size_t pelvis, lhip, rhip, spine1, lknee, rknee, spine2, lankle, rankle, spine3, neck, lsho, rsho, lelb,
        relb;

    explicit Body(const Skeleton& s) {
        auto idx = [&](const char* n) {
            auto i = s.find(n);
            if (!i) throw InvalidArgument(fmt::format("demo skeleton lacks joint '{}'", n));
            return *i;
        };
        pelvis = idx("pelvis");
        lhip = idx("left_hip");
        rhip = idx("right_hip");
        spine1 = idx("spine1");
        lknee = idx("left_knee");
        rknee = idx("right_knee");
        spine2 = idx("spine2");
        lankle = idx("left_ankle");
        rankle = idx("right_ankle");
        spine3 = idx("spine3");
        neck = idx("neck");
        lsho = idx("left_shoulder");
        rsho = idx("right_shoulder");
        lelb = idx("left_elbow");
        relb = idx("right_elbow");
    }
};

// Arm pose: hang by `abd` from the T-pose, flex forward by `flex`, swing
// towards the midline by `adduct`. Sign conventions mirror for the left side.
Quaternion arm(bool right, double abd, double flex, double adduct) {
    const double m = right ? 1.0 : -1.0;
    return rz(m * adduct) * rx(flex) * ry(m * abd);
}
Quaternion elbow(bool right, double flex) { return rz(right ? flex : -flex); }

struct Frame {
    std::vector<Quaternion> local;
    Vec3 root;
};

void pose_locomotion(const Body& b, const MotionStyle& st, double t, bool run, Frame& fr) {
    const double w = 2 * kPi * st.cycle_hz;
    const double ph = w * t + st.phase;
    const double a = st.amplitude;
    const double hip = (run ? 40.0 : 24.0) * a;
    const double knee_base = run ? 25.0 : 6.0;
    const double knee_amp = (run ? 75.0 : 45.0) * a;
    const double bob = (run ? 0.05 : 0.022) * a;
    const double swing = (run ? 38.0 : 20.0) * a;
    const Vec3 dir(-std::sin(st.heading), std::cos(st.heading), 0.0);
    fr.root = Vec3(0, 0, run ? 0.92 : 0.95) + dir * (st.speed * t) + Vec3(0, 0, bob * std::cos(2 * ph));
    fr.local[b.pelvis] = rz(st.heading / kDeg + 5.0 * a * std::sin(ph)) * rx(-st.lean_deg);
    fr.local[b.spine1] = rz(-4.0 * a * std::sin(ph));
    for (int side = 0; side < 2; ++side) {
        const double p = ph + (side ? kPi : 0.0);  // side 1 = right leg
        const std::size_t h = side ? b.rhip : b.lhip;
        const std::size_t k = side ? b.rknee : b.lknee;
        const std::size_t an = side ? b.rankle : b.lankle;
        fr.local[h] = rx(hip * std::sin(p));
        fr.local[k] = rx(-(knee_base + knee_amp * std::max(0.0, std::sin(p + 1.2))));
        fr.local[an] = rx(10.0 * a * std::sin(p - 0.5));
        // The opposite arm swings with this leg.
        const bool right_arm = side == 0;
        fr.local[right_arm ? b.rsho : b.lsho] = arm(right_arm, st.arm_abduction_deg, swing * std::sin(p), 0.0);
        fr.local[right_arm ? b.relb : b.lelb] = elbow(right_arm, st.elbow_deg + 12.0 * a * std::sin(p + 0.4));
    }
}

void pose_clapping(const Body& b, const MotionStyle& st, double t, Frame& fr) {
    const double ph = 2 * kPi * st.cycle_hz * t + st.phase;
    const double a = st.amplitude;
    fr.root = Vec3(0, 0, 0.95 + 0.004 * std::sin(0.5 * ph));
    fr.local[b.pelvis] = rz(st.heading / kDeg) * rx(-st.lean_deg);
    const double open = 0.5 + 0.5 * std::sin(ph);
    for (bool right : {false, true}) {
        fr.local[right ? b.rsho : b.lsho] = arm(right, 85.0, 70.0 + 6.0 * a * std::sin(ph), 8.0 + 26.0 * a * (1 - open));
        fr.local[right ? b.relb : b.lelb] = elbow(right, st.elbow_deg + 18.0 * a * (1 - open));
        fr.local[right ? b.rknee : b.lknee] = rx(-4.0);
    }
}

void pose_boxing(const Body& b, const MotionStyle& st, double t, Frame& fr) {
    const double w = 2 * kPi * st.cycle_hz;
    const double ph = w * t + st.phase;
    const double a = st.amplitude;
    const double pr = std::pow(std::max(0.0, std::sin(ph)), 3);
    const double pl = std::pow(std::max(0.0, std::sin(ph + kPi)), 3);
    fr.root = Vec3(0, 0, 0.93 + 0.02 * a * std::sin(2 * ph));
    fr.local[b.pelvis] = rz(st.heading / kDeg + 6.0 * (pr - pl)) * rx(-st.lean_deg);
    fr.local[b.spine1] = rz(14.0 * a * (pl - pr));
    for (bool right : {false, true}) {
        const double p = right ? pr : pl;
        fr.local[right ? b.rsho : b.lsho] = arm(right, 75.0, 40.0 + 45.0 * a * p, 18.0 + 8.0 * p);
        fr.local[right ? b.relb : b.lelb] = elbow(right, std::max(5.0, st.elbow_deg - 95.0 * a * p));
        const double step = 8.0 * a * std::sin(2 * ph + (right ? kPi : 0.0));
        fr.local[right ? b.rhip : b.lhip] = rx(10.0 + step);
        fr.local[right ? b.rknee : b.lknee] = rx(-20.0 - step);
    }
}

void pose_squat(const Body& b, const MotionStyle& st, double t, Frame& fr) {
    const double d = 0.5 - 0.5 * std::cos(2 * kPi * st.cycle_hz * t + st.phase);
    const double depth = d * st.amplitude;
    fr.root = Vec3(0, 0, 0.95 - 0.33 * depth);
    fr.local[b.pelvis] = rz(st.heading / kDeg) * rx(-(st.lean_deg + 30.0 * depth));
    for (bool right : {false, true}) {
        fr.local[right ? b.rhip : b.lhip] = rx(95.0 * depth);
        fr.local[right ? b.rknee : b.lknee] = rx(-110.0 * depth);
        fr.local[right ? b.rankle : b.lankle] = rx(20.0 * depth);
        fr.local[right ? b.rsho : b.lsho] = arm(right, 85.0, 80.0 * depth, 5.0);
    }
}

void pose_idle(const Body& b, const MotionStyle& st, double t, Frame& fr) {
    const double ph = 2 * kPi * st.cycle_hz * t + st.phase;
    fr.root = Vec3(0.01 * std::sin(0.3 * ph), 0, 0.95);
    fr.local[b.pelvis] = rz(st.heading / kDeg + 3.0 * std::sin(0.2 * ph));
    for (bool right : {false, true}) {
        fr.local[right ? b.rsho : b.lsho] = arm(right, 82.0, 4.0 * std::sin(0.5 * ph + (right ? 1.0 : 0.0)), 0.0);
        fr.local[right ? b.relb : b.lelb] = elbow(right, st.elbow_deg);
    }
}

}  // namespace

std::string_view to_string(DemoActivity a) {
    switch (a) {
        case DemoActivity::walking: return "walking";
        case DemoActivity::jogging: return "jogging";
        case DemoActivity::clapping: return "clapping";
        case DemoActivity::boxing: return "boxing";
        case DemoActivity::squat: return "squat";
        case DemoActivity::idle: return "idle";
    }
    return "?";
}

MotionStyle sample_style(DemoActivity a, double spread, Rng& rng) {
    MotionStyle s;
    s.heading = uniform(rng, -kPi, kPi);
    s.phase = uniform(rng, 0.0, 2 * kPi);
    s.amplitude = around(rng, 1.0, 0.3, spread);
    s.lean_deg = around(rng, 3.0, 3.0, spread);
    s.arm_abduction_deg = around(rng, 80.0, 6.0, spread);
    switch (a) {
        case DemoActivity::walking:
            s.cycle_hz = around(rng, 0.95, 0.15, spread);
            s.speed = around(rng, 1.25, 0.3, spread);
            s.elbow_deg = around(rng, 18.0, 10.0, spread);
            break;
        case DemoActivity::jogging:
            s.cycle_hz = around(rng, 1.2, 0.15, spread);
            s.speed = around(rng, 2.6, 0.5, spread);
            s.elbow_deg = around(rng, 80.0, 12.0, spread);
            s.lean_deg += 4.0;
            break;
        case DemoActivity::clapping:
            s.cycle_hz = around(rng, 1.5, 0.5, spread);
            s.elbow_deg = around(rng, 45.0, 12.0, spread);
            break;
        case DemoActivity::boxing:
            s.cycle_hz = around(rng, 1.1, 0.3, spread);
            s.elbow_deg = around(rng, 110.0, 12.0, spread);
            s.lean_deg += 5.0;
            break;
        case DemoActivity::squat:
            s.cycle_hz = around(rng, 0.4, 0.1, spread);
            s.amplitude = around(rng, 0.8, 0.15, spread);
            break;
        case DemoActivity::idle:
            s.cycle_hz = around(rng, 0.3, 0.1, spread);
            s.elbow_deg = around(rng, 10.0, 8.0, spread);
            break;
    }
    return s;
}

PoseClip generate_activity(const Skeleton& skeleton, DemoActivity a, const MotionStyle& style, double seconds,
                           double frame_rate, Rng& rng) {
    if (!(frame_rate > 0.0) || !(seconds > 0.0)) throw InvalidArgument("demo clip needs positive duration and rate");
    const Body b(skeleton);
    const std::size_t nj = skeleton.size();
    const auto frames = static_cast<std::size_t>(std::floor(seconds * frame_rate)) + 1;

    // Slow drift: per joint a fixed random axis and a sinusoid at 0.2-0.6 Hz.
    std::vector<Vec3> wobble_axis(nj);
    std::vector<double> wobble_hz(nj), wobble_ph(nj);
    std::normal_distribution<double> n01;
    for (std::size_t j = 0; j < nj; ++j) {
        Vec3 v(n01(rng), n01(rng), n01(rng));
        wobble_axis[j] = v.norm() > 1e-9 ? v.normalized() : Vec3::UnitZ();
        wobble_hz[j] = uniform(rng, 0.2, 0.6);
        wobble_ph[j] = uniform(rng, 0.0, 2 * kPi);
    }

    PoseClip clip;
    clip.frame_rate = frame_rate;
    clip.track.joint_count = nj;
    clip.track.local.reserve(frames * nj);
    clip.root.reserve(frames);
    Frame fr;
    for (std::size_t f = 0; f < frames; ++f) {
        const double t = static_cast<double>(f) / frame_rate;
        fr.local.assign(nj, Quaternion{});
        fr.root = Vec3(0, 0, 0.95);
        switch (a) {
            case DemoActivity::walking: pose_locomotion(b, style, t, false, fr); break;
            case DemoActivity::jogging: pose_locomotion(b, style, t, true, fr); break;
            case DemoActivity::clapping: pose_clapping(b, style, t, fr); break;
            case DemoActivity::boxing: pose_boxing(b, style, t, fr); break;
            case DemoActivity::squat: pose_squat(b, style, t, fr); break;
            case DemoActivity::idle: pose_idle(b, style, t, fr); break;
        }
        if (style.wobble_deg > 0.0) {
            for (std::size_t j = 0; j < nj; ++j) {
                const double ang = style.wobble_deg * kDeg * std::sin(2 * kPi * wobble_hz[j] * t + wobble_ph[j]);
                fr.local[j] = fr.local[j] * quat_from_axis_angle(wobble_axis[j], ang);
            }
        }
        clip.track.local.insert(clip.track.local.end(), fr.local.begin(), fr.local.end());
        clip.root.push_back(fr.root);
    }
    compose_globals(skeleton, clip.track);
    clip.positions = forward_kinematics(skeleton, clip.track, clip.root, frame_rate);
    return clip;
}

namespace {

constexpr DemoActivity kClasses[] = {DemoActivity::walking, DemoActivity::jogging, DemoActivity::clapping,
                                     DemoActivity::boxing};

int label_code(DemoActivity a) {
    switch (a) {
        case DemoActivity::walking: return 4;
        case DemoActivity::jogging: return 5;
        case DemoActivity::clapping: return 12;
        case DemoActivity::boxing: return 13;
        default: return 0;
    }
}

// Writes one subject's session: idle gaps between the four activities, two
// body-worn sensors with a subject-specific mount rotation, bias and noise.
std::string real_session(const Skeleton& sk, const DemoParams& p, std::size_t subject) {
    Rng rng = substream(p.seed, fmt::format("real/{}", subject));
    std::vector<DemoActivity> order(std::begin(kClasses), std::end(kClasses));
    std::shuffle(order.begin(), order.end(), rng);

    struct Mount {
        std::size_t joint;
        Quaternion mount;
        Vec3 acc_bias, gyro_bias;
    };
    std::vector<Mount> mounts;
    for (const auto& name : p.placements) {
        auto j = sk.find(name);
        if (!j) throw InvalidArgument(fmt::format("unknown placement '{}'", name));
        Mount m;
        m.joint = *j;
        m.mount = rz(uniform(rng, -20.0, 20.0)) * rx(uniform(rng, -5.0, 5.0));
        for (int a = 0; a < 3; ++a) {
            m.acc_bias[a] = uniform(rng, -0.25, 0.25);
            m.gyro_bias[a] = uniform(rng, -0.03, 0.03);
        }
        mounts.push_back(m);
    }

    std::string header = "timestamp_ms;activity_id;subject";
    for (std::size_t s = 0; s < p.placements.size(); ++s)
        for (const char* kind : {"acc", "gyr"})
            for (char ax : {'X', 'Y', 'Z'}) header += fmt::format(";s{}_{}{}", s + 1, kind, ax);
    std::string out = header + "\n";

    std::size_t row = 0;
    auto emit_segment = [&](DemoActivity act, double seconds, std::size_t seg) {
        MotionStyle style = sample_style(act, 1.0, rng);
        style.wobble_deg = 1.5;
        const PoseClip clip = generate_activity(sk, act, style, seconds, p.real_rate, rng);
        std::vector<ImuTrace> traces;
        for (std::size_t s = 0; s < mounts.size(); ++s) {
            SensorConfig cfg;
            cfg.joint_index = mounts[s].joint;
            cfg.accel_noise_std = 0.3;
            cfg.gyro_noise_std = 0.08;
            cfg.seed = derive_seed(p.seed, fmt::format("real/{}/{}/{}", subject, seg, s));
            traces.push_back(simulate_imu(clip.positions, clip.track, cfg));
        }
        const int code = label_code(act);
        for (std::size_t k = 0; k < clip.positions.frames(); ++k, ++row) {
            const auto ms = static_cast<long long>(std::llround(static_cast<double>(row) * 1000.0 / p.real_rate));
            std::string line = fmt::format("{};{};{}", ms, code, subject + 1);
            // Occasional dropouts, as logged by the vendor firmware.
            const bool dropout = (row % 997) == 500;
            for (std::size_t s = 0; s < mounts.size(); ++s) {
                const Quaternion inv = mounts[s].mount.inverse();
                const Vec3 acc = inv.rotate(traces[s].accel[k]) + mounts[s].acc_bias;
                const Vec3 gyr = inv.rotate(traces[s].gyro[k]) + mounts[s].gyro_bias;
                for (int a = 0; a < 3; ++a) line += dropout && s == 0 && a == 0 ? ";NaN" : fmt::format(";{:.5f}", acc[a]);
                for (int a = 0; a < 3; ++a) line += fmt::format(";{:.6f}", gyr[a]);
            }
            out += line + "\n";
        }
    };
    std::size_t seg = 0;
    emit_segment(DemoActivity::idle, 6.0, seg++);
    for (auto act : order) {
        emit_segment(act, p.real_seconds, seg++);
        emit_segment(DemoActivity::idle, 6.0, seg++);
    }
    return out;
}

nlohmann::json real_adapter(const DemoParams& p) {
    nlohmann::json sensors = nlohmann::json::array();
    for (std::size_t s = 0; s < p.placements.size(); ++s) {
        for (auto [kind, raw] : {std::pair{"acc", "acc"}, std::pair{"gyro", "gyr"}}) {
            nlohmann::json cols = nlohmann::json::array();
            for (char ax : {'X', 'Y', 'Z'}) cols.push_back(fmt::format("s{}_{}{}", s + 1, raw, ax));
            sensors.push_back({{"name", p.placements[s] + "." + kind}, {"columns", cols}});
        }
    }
    nlohmann::json labels = nlohmann::json::object();
    for (auto a : kClasses) labels[std::to_string(label_code(a))] = std::string(to_string(a));
    return {{"delimiter", ";"},
            {"has_header", true},
            {"timestamp_column", "timestamp_ms"},
            {"timestamp_scale", 0.001},
            {"label_column", "activity_id"},
            {"subject_column", "subject"},
            {"label_map", labels},
            {"sensors", sensors},
            {"provenance", "real"}};
}

// Converts a z-up clip into y-up BVH channels (ZXY Euler angles).
std::string video_bvh(const Skeleton& sk, const PoseClip& clip) {
    const Quaternion c = rx(-90.0);  // z-up -> y-up: (x, y, z) -> (x, z, -y)
    const Quaternion ci = c.inverse();
    Skeleton yup = sk;
    for (auto& o : yup.rest_offset) o = c.rotate(o);
    ChannelPose pose;
    pose.frame_rate = clip.frame_rate;
    pose.joint_count = sk.size();
    pose.rotation_order.assign(sk.size(), RotationOrder::parse("ZXY"));
    for (std::size_t f = 0; f < clip.track.frames(); ++f) {
        pose.root_translation.push_back(c.rotate(clip.root[f]));
        for (std::size_t j = 0; j < sk.size(); ++j)
            pose.euler_deg.push_back(euler_deg_from_quat(pose.rotation_order[j], c * clip.track.local_at(f, j) * ci));
    }
    return write_bvh(yup, pose, 0.01);
}

}  // namespace

std::filesystem::path write_demo_task(const std::filesystem::path& dir, const DemoParams& p) {
    namespace fs = std::filesystem;
    if (p.subjects < 2) throw InvalidArgument("demo needs at least two subjects");
    const Skeleton sk = body22_skeleton();

    nlohmann::json real_files = nlohmann::json::array();
    for (std::size_t s = 0; s < p.subjects; ++s) {
        const std::string name = fmt::format("real/subject_{}.txt", s + 1);
        write_file(dir / name, real_session(sk, p, s));
        real_files.push_back(name);
    }
    write_file(dir / "real/adapter.json", real_adapter(p).dump(2) + "\n");

    std::vector<DemoActivity> text_classes(std::begin(kClasses), std::end(kClasses));
    text_classes.push_back(DemoActivity::squat);  // absent from the real data
    for (auto act : text_classes) {
        for (std::size_t i = 0; i < p.text_per_class; ++i) {
            const std::string key = fmt::format("text/{}/{}", to_string(act), i);
            Rng rng = substream(p.seed, key);
            MotionStyle style = sample_style(act, 0.8, rng);
            const double seconds = uniform(rng, 5.0, 10.0);
            const PoseClip clip = generate_activity(sk, act, style, seconds, 20.0, rng);
            write_file(dir / fmt::format("motions/text/{}/{:03}.csv", to_string(act), i),
                       write_joint_csv(clip.positions, sk.joint_names));
        }
    }
    for (auto act : kClasses) {
        for (std::size_t i = 0; i < p.video_per_class; ++i) {
            const std::string key = fmt::format("video/{}/{}", to_string(act), i);
            Rng rng = substream(p.seed, key);
            MotionStyle style = sample_style(act, 1.2, rng);
            style.wobble_deg = 3.0;
            const double seconds = uniform(rng, 6.0, 10.0);
            const PoseClip clip = generate_activity(sk, act, style, seconds, 30.0, rng);
            write_file(dir / fmt::format("motions/video/{}/{:03}.bvh", to_string(act), i), video_bvh(sk, clip));
        }
    }

    nlohmann::json placements = p.placements;
    nlohmann::json cfg = {
        {"output_dir", "out"},
        {"real", {{"adapter", "real/adapter.json"}, {"files", real_files}}},
        {"virtual_text",
         {{"dir", "motions/text"}, {"format", "csv"}, {"skeleton", "body22"}, {"up_axis", "z"}, {"length_scale", 1.0}}},
        {"virtual_video",
         {{"dir", "motions/video"},
          {"format", "bvh"},
          {"up_axis", "y"},
          {"length_scale", 0.01},
          {"include_end_sites", false}}},
        {"placements", placements},
        {"simulation", {{"accel_noise_std", 0.05}, {"gyro_noise_std", 0.01}, {"seed", 11}}},
        {"window", {{"window_seconds", 2.0}, {"overlap_seconds", 1.0}, {"rate", 20.0}}},
        {"augment", {{"theta", kPi / 6}, {"noise_std", 0.05}, {"bias_halfwidth", 0.1}}},
        {"features", {{"n_components", 15}, {"include_mean", true}}},
        {"forest", {{"n_trees", p.n_trees}, {"max_depth", 20}, {"min_samples_leaf", 2}}},
        {"evaluation",
         {{"folds", "loso"},
          {"configurations", {"RealOnly", "Real+IMUGPT", "Real+IMUTube", "Real+IMUGPT+IMUTube", "Real+Augmentation"}},
          {"fractions", {1.0, 0.1}},
          {"seeds", {17, 29, 43}}}},
    };
    const fs::path path = dir / "config.json";
    write_file(path, cfg.dump(2) + "\n");
    return path;
}

}  // namespace vimu
