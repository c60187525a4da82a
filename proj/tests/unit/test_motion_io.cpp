#include <cmath>
#include <numbers>

#include <doctest.h>
#include <fmt/format.h>

#include "support.hpp"
#include "vimu/io_util.hpp"
#include "vimu/motion_io.hpp"

using namespace vimu;

namespace {

constexpr double kPi = std::numbers::pi;

const char* kTwoJoint = R"(HIERARCHY
ROOT hips
{
  OFFSET 0 1 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT chest
  {
    OFFSET 0 0.5 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 0.3 0
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.05
0 0 0 0 0 0 0 0 0
0 0 0 0 0 0 0 0 0
)";

// Root spins 90 degrees about z on frame 1.
const char* kThreeJoint = R"(HIERARCHY
ROOT root
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation
  JOINT a
  {
    OFFSET 1 0.5 0
    CHANNELS 3 Zrotation Yrotation Xrotation
    JOINT b
    {
      OFFSET 0 0 2
      CHANNELS 3 Zrotation Yrotation Xrotation
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.0333333
0 0 0 0 0 0 0 0 0 0 0 0
0 0 0 90 0 0 0 0 0 0 0 0
)";

Mat3 rot(int axis, double deg) {
    const double a = deg * kPi / 180.0, c = std::cos(a), s = std::sin(a);
    Mat3 m = Mat3::Identity();
    const int i = (axis + 1) % 3, j = (axis + 2) % 3;
    m(i, i) = c;
    m(i, j) = -s;
    m(j, i) = s;
    m(j, j) = c;
    return m;
}

// Independent FK: plain 3x3 matrices composed from Euler triples.
std::vector<Vec3> naive_fk(const Skeleton& sk, const ChannelPose& pose, std::size_t f) {
    std::vector<Mat3> g(sk.size());
    std::vector<Vec3> p(sk.size());
    for (auto j : sk.topological_order()) {
        const auto& order = pose.rotation_order[j].axes;
        const Vec3& e = pose.angles(f, j);
        const Mat3 local = rot(order[0], e[0]) * rot(order[1], e[1]) * rot(order[2], e[2]);
        const int par = sk.parent_index[j];
        if (par == kNoParent) {
            g[j] = local;
            p[j] = pose.root_translation[f];
        } else {
            const auto pj = static_cast<std::size_t>(par);
            p[j] = p[pj] + g[pj] * sk.rest_offset[j];
            g[j] = g[pj] * local;
        }
    }
    return p;
}

}  // namespace

TEST_CASE("minimal two-joint BVH at zero channels stays at rest") {
    BvhOptions opt;
    opt.include_end_sites = false;
    const BvhFile f = parse_bvh(kTwoJoint, opt);
    REQUIRE(f.skeleton.size() == 2);
    CHECK(f.pose.frames() == 2);
    const MotionSequence m = forward_kinematics(f.skeleton, f.pose);
    for (std::size_t fr = 0; fr < 2; ++fr) {
        CHECK(m.at(fr, 0) == Vec3(0, 1, 0));
        CHECK(m.at(fr, 1) == Vec3(0, 1.5, 0));
    }
}

TEST_CASE("frame time is the reciprocal of the frame rate") {
    CHECK(parse_bvh(kTwoJoint).pose.frame_rate == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("end sites become named joints") {
    const BvhFile f = parse_bvh(kTwoJoint);
    REQUIRE(f.skeleton.size() == 3);
    CHECK(f.skeleton.joint_names[2] == "chest_end");
    CHECK(f.skeleton.parent_index[2] == 1);
    CHECK(f.channels[2].empty());
}

TEST_CASE("root z rotation moves the child by a hand-applied matrix") {
    const BvhFile f = parse_bvh(kThreeJoint);
    const MotionSequence m = forward_kinematics(f.skeleton, f.pose);
    Mat3 rz90;
    rz90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const Vec3 a_off(1, 0.5, 0), b_off(0, 0, 2);
    CHECK((m.at(0, 1) - a_off).norm() < 1e-12);
    CHECK((m.at(1, 1) - rz90 * a_off).norm() < 1e-12);
    CHECK((m.at(1, 2) - (rz90 * a_off + rz90 * b_off)).norm() < 1e-12);
}

TEST_CASE("length scale applies to offsets and root motion") {
    BvhOptions opt;
    opt.length_scale = 0.01;
    const std::string text = std::string(kTwoJoint).replace(std::string(kTwoJoint).rfind("0 0 0 0 0 0 0 0 0"), 5, "100 1 0");
    const BvhFile f = parse_bvh(text, opt);
    CHECK(f.skeleton.rest_offset[1].isApprox(Vec3(0, 0.005, 0)));
    CHECK(f.pose.root_translation[1].isApprox(Vec3(1.0, 0.02, 0)));
}

TEST_CASE("BVH errors carry line numbers") {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            (void)parse_bvh(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    std::string bad = kTwoJoint;
    bad.replace(bad.rfind("0 0 0 0 0 0 0 0 0"), 17, "0 0 0 0 0 0 0 0");
    CHECK(line_of(bad) == 20);

    std::string bad_count = kTwoJoint;
    bad_count.replace(bad_count.find("Frames: 2"), 9, "Frames: 3");
    CHECK(line_of(bad_count) > 0);

    std::string pos_child = kTwoJoint;
    pos_child.replace(pos_child.find("CHANNELS 3 Zrotation"), 20, "CHANNELS 3 Xposition");
    CHECK(line_of(pos_child) == 9);

    std::string unknown = kTwoJoint;
    unknown.replace(unknown.find("Yrotation"), 9, "Wrotation");
    CHECK(line_of(unknown) == 5);

    std::string zero = kTwoJoint;
    zero.replace(zero.find("OFFSET 0 0.5 0"), 14, "OFFSET 0 0 0");
    CHECK(line_of(zero) == 8);

    CHECK(line_of(std::string(kTwoJoint) + "ROOT x") > 0);
    CHECK(line_of("HIERARCHY\nROOT a\n{\n OFFSET 0 0 0\n}\n") > 0);  // no MOTION
}

TEST_CASE("property: fuzzed BVH either parses or fails with a located error") {
    Rng rng(99);
    const std::string base = kThreeJoint;
    std::uniform_int_distribution<std::size_t> pos(0, base.size() - 1);
    std::uniform_int_distribution<int> byte(32, 126), op(0, 2);
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 3000; ++i) {
        std::string s = base;
        for (int k = 0; k < 3; ++k) {
            const std::size_t p = pos(rng) % s.size();
            switch (op(rng)) {
                case 0: s[p] = static_cast<char>(byte(rng)); break;
                case 1: s.erase(p, 1); break;
                default: s.insert(p, 1, static_cast<char>(byte(rng))); break;
            }
        }
        try {
            const BvhFile f = parse_bvh(s);
            (void)forward_kinematics(f.skeleton, f.pose);
            ++parsed;
        } catch (const ParseError& e) {
            CHECK(e.line() >= 1);
            ++rejected;
        } catch (const InvalidArgument&) {
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 3000);
}

TEST_CASE("joint CSV mapping") {
    JointCsvSpec spec;
    spec.joints = {"pelvis"};
    spec.frame_rate = 20.0;
    const MotionSequence m = parse_joint_csv("pelvis_x,pelvis_y,pelvis_z\n0,0,0\n1,2,3\n", spec);
    REQUIRE(m.frames() == 2);
    CHECK(m.at(1, 0) == Vec3(1, 2, 3));
    CHECK(m.frame_rate == 20.0);
}

TEST_CASE("joint CSV missing column is an error") {
    JointCsvSpec spec;
    spec.joints = {"pelvis"};
    spec.frame_rate = 20.0;
    CHECK_THROWS_AS(parse_joint_csv("pelvis_x,pelvis_y\n0,0\n1,2\n", spec), ParseError);
    CHECK_THROWS_WITH_AS(parse_joint_csv("pelvis_x,pelvis_y\n0,0\n1,2\n", spec), doctest::Contains("pelvis_z"),
                         ParseError);
}

TEST_CASE("joint CSV other errors") {
    JointCsvSpec spec;
    spec.joints = {"a"};
    spec.frame_rate = 10.0;
    CHECK_THROWS_AS(parse_joint_csv("a_x,a_y,a_z\n0,0,zz\n1,1,1\n", spec), ParseError);
    CHECK_THROWS_AS(parse_joint_csv("a_x,a_y,a_z\n0,0\n1,1,1\n", spec), ParseError);
    spec.frame_rate.reset();
    CHECK_THROWS_AS(parse_joint_csv("a_x,a_y,a_z\n0,0,0\n1,1,1\n", spec), ParseError);
    CHECK(parse_joint_csv("# frame_rate=25\na_x,a_y,a_z\n0,0,0\n1,1,1\n", spec).frame_rate == 25.0);
}

TEST_CASE("joint CSV round trip keeps nine significant digits") {
    Rng rng(4);
    std::uniform_real_distribution<double> u(-3, 3);
    const std::vector<std::string> names{"pelvis", "left_hip", "head"};
    std::string text = "# frame_rate=30\n";
    text += "pelvis_x,pelvis_y,pelvis_z,left_hip_x,left_hip_y,left_hip_z,head_x,head_y,head_z\n";
    std::vector<double> truth;
    for (int f = 0; f < 20; ++f) {
        for (int c = 0; c < 9; ++c) {
            const double v = u(rng);
            truth.push_back(v);
            text += fmt::format("{}{:.9g}", c ? "," : "", v);
        }
        text += "\n";
    }
    JointCsvSpec spec;
    spec.joints = names;
    const MotionSequence m = parse_joint_csv(text, spec);
    const MotionSequence again = parse_joint_csv(write_joint_csv(m, names), spec);
    REQUIRE(again.positions.size() * 3 == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double v = again.positions[i / 3][static_cast<int>(i % 3)];
        CHECK(std::abs(v - truth[i]) <= 5e-9 * std::max(1.0, std::abs(truth[i])));
    }
    CHECK(again.positions == m.positions);
}

TEST_CASE("identity FK is the cumulative rest offset") {
    Rng rng(8);
    const Skeleton sk = vtest::random_skeleton(rng, 12);
    ChannelPose pose;
    pose.frame_rate = 30;
    pose.joint_count = sk.size();
    pose.rotation_order.assign(sk.size(), RotationOrder{});
    pose.root_translation.assign(3, Vec3::Zero());
    pose.euler_deg.assign(3 * sk.size(), Vec3::Zero());
    const MotionSequence m = forward_kinematics(sk, pose);
    for (std::size_t j = 0; j < sk.size(); ++j) {
        Vec3 sum = Vec3::Zero();
        for (int k = static_cast<int>(j); sk.parent_index[static_cast<std::size_t>(k)] != kNoParent;
             k = sk.parent_index[static_cast<std::size_t>(k)])
            sum += sk.rest_offset[static_cast<std::size_t>(k)];
        for (std::size_t f = 0; f < 3; ++f) CHECK((m.at(f, j) - sum).norm() < 1e-12);
    }
}

TEST_CASE("two unit bones along +y rotated 90 about z end at (-2,0,0)") {
    Skeleton sk;
    sk.joint_names = {"root", "mid", "tip"};
    sk.parent_index = {kNoParent, 0, 1};
    sk.rest_offset = {Vec3::Zero(), Vec3(0, 1, 0), Vec3(0, 1, 0)};
    ChannelPose pose;
    pose.frame_rate = 1;
    pose.joint_count = 3;
    pose.rotation_order.assign(3, RotationOrder::parse("ZXY"));
    pose.root_translation = {Vec3::Zero()};
    pose.euler_deg = {Vec3(90, 0, 0), Vec3::Zero(), Vec3::Zero()};
    const MotionSequence m = forward_kinematics(sk, pose);
    CHECK((m.at(0, 2) - Vec3(-2, 0, 0)).norm() < 1e-12);
}

TEST_CASE("random poses match a naive matrix chain and keep bone lengths") {
    Rng rng(12);
    std::uniform_real_distribution<double> ang(-30, 30), tr(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const Skeleton sk = vtest::random_skeleton(rng, 15);
        ChannelPose pose;
        pose.frame_rate = 60;
        pose.joint_count = sk.size();
        const char* orders[] = {"XYZ", "ZXY", "YZX", "ZYX"};
        for (std::size_t j = 0; j < sk.size(); ++j) pose.rotation_order.push_back(RotationOrder::parse(orders[j % 4]));
        for (int f = 0; f < 5; ++f) {
            pose.root_translation.emplace_back(tr(rng), tr(rng), tr(rng));
            for (std::size_t j = 0; j < sk.size(); ++j) pose.euler_deg.emplace_back(ang(rng), ang(rng), ang(rng));
        }
        const MotionSequence m = forward_kinematics(sk, pose);
        for (std::size_t f = 0; f < 5; ++f) {
            const auto ref = naive_fk(sk, pose, f);
            for (std::size_t j = 0; j < sk.size(); ++j) {
                CHECK((m.at(f, j) - ref[j]).norm() < 1e-12);
                if (sk.parent_index[j] != kNoParent) {
                    const double len = (m.at(f, j) - m.at(f, static_cast<std::size_t>(sk.parent_index[j]))).norm();
                    CHECK(std::abs(len - sk.rest_offset[j].norm()) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("write_bvh reads back to the same positions") {
    Rng rng(31);
    const Skeleton sk = vtest::random_skeleton(rng, 8);
    ChannelPose pose;
    pose.frame_rate = 30;
    pose.joint_count = sk.size();
    pose.rotation_order.assign(sk.size(), RotationOrder::parse("ZXY"));
    std::uniform_real_distribution<double> ang(-80, 80);
    for (int f = 0; f < 4; ++f) {
        pose.root_translation.emplace_back(0.1 * f, 1.0, -0.2);
        for (std::size_t j = 0; j < sk.size(); ++j) pose.euler_deg.emplace_back(ang(rng), ang(rng), ang(rng));
    }
    const MotionSequence want = forward_kinematics(sk, pose);
    BvhOptions opt;
    opt.include_end_sites = false;
    opt.length_scale = 0.01;
    const BvhFile back = parse_bvh(write_bvh(sk, pose, 0.01), opt);
    REQUIRE(back.skeleton.size() == sk.size());
    const MotionSequence got = forward_kinematics(back.skeleton, back.pose);
    for (std::size_t j = 0; j < sk.size(); ++j) {
        const auto jj = *back.skeleton.find(sk.joint_names[j]);
        for (std::size_t f = 0; f < 4; ++f) CHECK((got.at(f, jj) - want.at(f, j)).norm() < 1e-9);
    }
}

TEST_CASE("skeleton validation") {
    Skeleton sk;
    sk.joint_names = {"a", "b"};
    sk.parent_index = {kNoParent, kNoParent};
    sk.rest_offset = {Vec3::Zero(), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(sk.validate(), InvalidArgument);
    sk.parent_index = {1, 0};
    CHECK_THROWS_AS(sk.validate(), InvalidArgument);
    sk.parent_index = {kNoParent, 0};
    sk.rest_offset[1] = Vec3::Zero();
    CHECK_THROWS_AS(sk.validate(), InvalidArgument);
    CHECK_NOTHROW(body22_skeleton().validate());
    CHECK(body22_skeleton().size() == 22);
}

TEST_CASE("y-up data is rotated into z-up") {
    MotionSequence m;
    m.frame_rate = 1;
    m.joint_count = 1;
    m.positions = {Vec3(1, 2, 3), Vec3(0, 1, 0)};
    to_z_up(m, UpAxis::y);
    CHECK(m.positions[0] == Vec3(1, -3, 2));
    CHECK(m.positions[1] == Vec3(0, 0, 1));  // y-up's up is z-up's up
    CHECK(up_axis_from_string("Y") == UpAxis::y);
    CHECK_THROWS_AS(up_axis_from_string("x"), InvalidArgument);
}
