#include "vimu/motion_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "vimu/io_util.hpp"

namespace vimu {

// ---------------------------------------------------------------- Skeleton

std::optional<std::size_t> Skeleton::find(std::string_view name) const {
    for (std::size_t i = 0; i < joint_names.size(); ++i)
        if (joint_names[i] == name) return i;
    return std::nullopt;
}

std::vector<std::vector<std::size_t>> Skeleton::children() const {
    std::vector<std::vector<std::size_t>> out(size());
    for (std::size_t j = 0; j < size(); ++j)
        if (parent_index[j] != kNoParent) out[static_cast<std::size_t>(parent_index[j])].push_back(j);
    return out;
}

std::vector<std::size_t> Skeleton::topological_order() const {
    const auto kids = children();
    std::vector<std::size_t> order;
    order.reserve(size());
    order.push_back(root_index);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (auto c : kids[order[i]]) order.push_back(c);
    return order;
}

std::vector<Vec3> Skeleton::rest_positions() const {
    std::vector<Vec3> pos(size(), Vec3::Zero());
    for (auto j : topological_order()) {
        const int p = parent_index[j];
        pos[j] = (p == kNoParent ? Vec3::Zero() : pos[static_cast<std::size_t>(p)]) + rest_offset[j];
    }
    return pos;
}

void Skeleton::validate() const {
    const std::size_t n = joint_names.size();
    if (n == 0) throw InvalidArgument("skeleton has no joints");
    if (parent_index.size() != n || rest_offset.size() != n)
        throw InvalidArgument("skeleton field lengths disagree");
    std::size_t roots = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const int p = parent_index[j];
        if (p == kNoParent) {
            ++roots;
            if (j != root_index) throw InvalidArgument(fmt::format("joint '{}' is parentless but not the root", joint_names[j]));
            continue;
        }
        if (p < 0 || static_cast<std::size_t>(p) >= n || static_cast<std::size_t>(p) == j)
            throw InvalidArgument(fmt::format("joint '{}' has invalid parent index {}", joint_names[j], p));
        if (!(rest_offset[j].norm() > 0.0))
            throw InvalidArgument(fmt::format("joint '{}' has a zero-length rest offset", joint_names[j]));
    }
    if (roots != 1) throw InvalidArgument(fmt::format("skeleton must have exactly one root, found {}", roots));
    if (topological_order().size() != n) throw InvalidArgument("skeleton parent links contain a cycle");
    for (const auto& v : rest_offset)
        if (!v.allFinite()) throw InvalidArgument("skeleton rest offsets must be finite");
}

// ---------------------------------------------------------- MotionSequence

void MotionSequence::validate() const {
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) throw InvalidArgument("motion frame rate must be positive");
    if (joint_count == 0 || positions.size() % joint_count != 0)
        throw InvalidArgument("motion positions are not a whole number of frames");
    if (frames() < 2) throw InvalidArgument("motion needs at least two frames");
    for (const auto& p : positions)
        if (!p.allFinite()) throw InvalidArgument("motion contains non-finite coordinates");
}

void MotionSequence::validate_against(const Skeleton& skeleton) const {
    validate();
    if (joint_count != skeleton.size())
        throw InvalidArgument(fmt::format("motion has {} joints but skeleton has {}", joint_count, skeleton.size()));
}

// --------------------------------------------------------------------- BVH

namespace {

struct Token {
    std::string_view text;
    std::size_t line;
};

class BvhParser {
public:
    BvhParser(std::string_view text, const BvhOptions& opt, std::string_view source)
        : text_(text), opt_(opt), source_(source) {}

    BvhFile run() {
        tokenize_hierarchy();
        expect("HIERARCHY");
        const Token root = next();
        if (root.text != "ROOT") fail(root.line, fmt::format("expected ROOT, found '{}'", root.text));
        parse_joint(kNoParent, root.line);
        if (pos_ < tokens_.size()) {
            const Token t = tokens_[pos_];
            if (t.text == "ROOT") fail(t.line, "multiple ROOT hierarchies are not supported");
            fail(t.line, fmt::format("unexpected token '{}' after hierarchy", t.text));
        }
        if (!motion_line_) fail(last_line_, "missing MOTION block");
        parse_motion();
        out_.skeleton.validate();
        return std::move(out_);
    }

private:
    [[noreturn]] void fail(std::size_t line, const std::string& msg) const { throw ParseError(source_, line, msg); }

    void tokenize_hierarchy() {
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text_.size()) {
            auto end = text_.find('\n', start);
            if (end == std::string_view::npos) end = text_.size();
            const std::string_view line = text_.substr(start, end - start);
            ++line_no;
            last_line_ = line_no;
            if (trim(line) == "MOTION") {
                motion_line_ = line_no;
                body_offset_ = end + 1;
                return;
            }
            std::size_t i = 0;
            while (i < line.size()) {
                while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
                std::size_t j = i;
                while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
                if (j > i) tokens_.push_back({line.substr(i, j - i), line_no});
                i = j;
            }
            if (end == text_.size()) break;
            start = end + 1;
        }
    }

    Token next() {
        if (pos_ >= tokens_.size()) fail(last_line_, "unexpected end of hierarchy");
        return tokens_[pos_++];
    }

    void expect(std::string_view word) {
        const Token t = next();
        if (t.text != word) fail(t.line, fmt::format("expected '{}', found '{}'", word, t.text));
    }

    double number() {
        const Token t = next();
        double v = 0.0;
        if (!parse_double(t.text, v)) fail(t.line, fmt::format("expected a number, found '{}'", t.text));
        return v;
    }

    Vec3 offset(bool must_be_nonzero) {
        const Token kw = next();
        if (kw.text != "OFFSET") fail(kw.line, fmt::format("expected OFFSET, found '{}'", kw.text));
        Vec3 v;
        for (int i = 0; i < 3; ++i) v[i] = number() * opt_.length_scale;
        if (must_be_nonzero && !(v.norm() > 0.0)) fail(kw.line, "non-root OFFSET has zero length");
        return v;
    }

    std::size_t add_joint(std::string name, int parent, const Vec3& off) {
        out_.skeleton.joint_names.push_back(std::move(name));
        out_.skeleton.parent_index.push_back(parent);
        out_.skeleton.rest_offset.push_back(off);
        out_.channels.emplace_back();
        return out_.skeleton.joint_names.size() - 1;
    }

    void parse_joint(int parent, std::size_t decl_line) {
        const Token name = next();
        if (name.text == "{") fail(decl_line, "joint is missing a name");
        expect("{");
        const bool is_root = parent == kNoParent;
        const std::size_t self = add_joint(std::string(name.text), parent, Vec3::Zero());
        out_.skeleton.rest_offset[self] = offset(!is_root);
        if (is_root) out_.skeleton.root_index = self;

        bool seen_channels = false;
        while (true) {
            const Token t = next();
            if (t.text == "}") break;
            if (t.text == "CHANNELS") {
                if (seen_channels) fail(t.line, "duplicate CHANNELS line");
                seen_channels = true;
                parse_channels(self, is_root, t.line);
            } else if (t.text == "JOINT") {
                parse_joint(static_cast<int>(self), t.line);
            } else if (t.text == "End") {
                expect("Site");
                expect("{");
                const Vec3 off = offset(true);
                expect("}");
                if (opt_.include_end_sites)
                    add_joint(out_.skeleton.joint_names[self] + "_end", static_cast<int>(self), off);
            } else {
                fail(t.line, fmt::format("unexpected token '{}' in joint '{}'", t.text, name.text));
            }
        }
    }

    void parse_channels(std::size_t joint, bool is_root, std::size_t line) {
        const double count_d = number();
        if (count_d < 0 || count_d != std::floor(count_d) || count_d > 6)
            fail(line, "CHANNELS count must be an integer in [0, 6]");
        const auto count = static_cast<std::size_t>(count_d);
        auto& list = out_.channels[joint];
        for (std::size_t i = 0; i < count; ++i) {
            const Token t = next();
            Channel c;
            if (t.text == "Xposition") c = Channel::x_position;
            else if (t.text == "Yposition") c = Channel::y_position;
            else if (t.text == "Zposition") c = Channel::z_position;
            else if (t.text == "Xrotation") c = Channel::x_rotation;
            else if (t.text == "Yrotation") c = Channel::y_rotation;
            else if (t.text == "Zrotation") c = Channel::z_rotation;
            else fail(t.line, fmt::format("unknown channel token '{}'", t.text));
            if (std::find(list.begin(), list.end(), c) != list.end()) fail(t.line, fmt::format("duplicate channel '{}'", t.text));
            if (!is_root && c <= Channel::z_position) fail(t.line, "position channels are only supported on the root");
            list.push_back(c);
        }
        const auto rotations = std::count_if(list.begin(), list.end(), [](Channel c) { return c >= Channel::x_rotation; });
        if (rotations != 0 && rotations != 3) fail(line, "a joint must declare either zero or three rotation channels");
        total_channels_ += count;
    }

    void parse_motion() {
        const auto& sk = out_.skeleton;
        auto& pose = out_.pose;
        const std::size_t nj = sk.size();
        pose.joint_count = nj;
        pose.rotation_order.assign(nj, RotationOrder{});
        for (std::size_t j = 0; j < nj; ++j) {
            std::string letters;
            for (auto c : out_.channels[j])
                if (c >= Channel::x_rotation) letters.push_back("XYZ"[static_cast<int>(c) - 3]);
            if (!letters.empty()) pose.rotation_order[j] = RotationOrder::parse(letters);
        }

        std::size_t line_no = *motion_line_;
        std::size_t start = body_offset_;
        std::optional<std::size_t> declared_frames;
        std::optional<double> frame_time;
        std::size_t rows = 0;
        std::vector<double> values;
        while (start < text_.size()) {
            auto end = text_.find('\n', start);
            if (end == std::string_view::npos) end = text_.size();
            const std::string_view line = trim(text_.substr(start, end - start));
            ++line_no;
            start = end + 1;
            if (line.empty()) continue;
            if (!declared_frames) {
                if (!line.starts_with("Frames:")) fail(line_no, "expected 'Frames:' line");
                double n = 0;
                if (!parse_double(line.substr(7), n) || n < 0 || n != std::floor(n)) fail(line_no, "invalid frame count");
                declared_frames = static_cast<std::size_t>(n);
                continue;
            }
            if (!frame_time) {
                if (!line.starts_with("Frame Time:")) fail(line_no, "expected 'Frame Time:' line");
                double ft = 0;
                if (!parse_double(line.substr(11), ft) || !(ft > 0)) fail(line_no, "invalid frame time");
                frame_time = ft;
                continue;
            }
            values.clear();
            for (auto tok : split(line, ' ')) {
                for (auto sub : split(tok, '\t')) {
                    if (trim(sub).empty()) continue;
                    double v = 0;
                    if (!parse_double(sub, v)) fail(line_no, fmt::format("non-numeric channel value '{}'", sub));
                    values.push_back(v);
                }
            }
            if (values.size() != total_channels_)
                fail(line_no, fmt::format("frame row has {} values, expected {}", values.size(), total_channels_));
            if (declared_frames && rows >= *declared_frames)
                fail(line_no, fmt::format("more frame rows than the declared {}", *declared_frames));
            append_frame(values);
            ++rows;
        }
        if (!declared_frames) fail(line_no, "missing 'Frames:' line");
        if (!frame_time) fail(line_no, "missing 'Frame Time:' line");
        if (rows != *declared_frames)
            fail(line_no, fmt::format("declared {} frames but found {}", *declared_frames, rows));
        pose.frame_rate = 1.0 / *frame_time;
    }

    void append_frame(const std::vector<double>& values) {
        const auto& sk = out_.skeleton;
        auto& pose = out_.pose;
        Vec3 root = sk.rest_offset[sk.root_index];
        std::size_t k = 0;
        const std::size_t base = pose.euler_deg.size();
        pose.euler_deg.resize(base + sk.size(), Vec3::Zero());
        for (std::size_t j = 0; j < sk.size(); ++j) {
            int rot_slot = 0;
            for (auto c : out_.channels[j]) {
                const double v = values[k++];
                if (c <= Channel::z_position) {
                    root[static_cast<int>(c)] += v * opt_.length_scale;
                } else {
                    pose.euler_deg[base + j][rot_slot++] = v;
                }
            }
        }
        pose.root_translation.push_back(root);
    }

    std::string_view text_;
    BvhOptions opt_;
    std::string_view source_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t last_line_ = 1;
    std::optional<std::size_t> motion_line_;
    std::size_t body_offset_ = 0;
    std::size_t total_channels_ = 0;
    BvhFile out_;
};

}  // namespace

BvhFile parse_bvh(std::string_view text, const BvhOptions& options, std::string_view source) {
    if (!(options.length_scale > 0.0)) throw InvalidArgument("BVH length scale must be positive");
    return BvhParser(text, options, source).run();
}

// --------------------------------------------------------------------- CSV

MotionSequence parse_joint_csv(std::string_view text, const JointCsvSpec& spec, std::string_view source) {
    if (spec.joints.empty()) throw InvalidArgument("joint CSV spec names no joints");
    std::optional<double> rate = spec.frame_rate;
    std::size_t line_no = 0;
    std::size_t start = 0;
    std::vector<std::string_view> header;
    std::vector<std::array<std::size_t, 3>> cols;
    MotionSequence m;
    m.joint_count = spec.joints.size();
    std::size_t header_line = 0;

    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        start = end + 1;
        if (header.empty()) {
            if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.remove_prefix(3);
            if (line.starts_with("#")) {
                auto body = trim(line.substr(1));
                if (body.starts_with("frame_rate=") && !spec.frame_rate) {
                    double r = 0;
                    if (!parse_double(body.substr(11), r) || !(r > 0)) throw ParseError(source, line_no, "invalid frame_rate comment");
                    rate = r;
                }
                continue;
            }
            if (trim(line).empty()) continue;
            header = split(line, ',');
            for (auto& h : header) h = trim(h);
            header_line = line_no;
            for (const auto& joint : spec.joints) {
                std::array<std::size_t, 3> idx{};
                for (int a = 0; a < 3; ++a) {
                    const std::string want = joint + "_" + "xyz"[a];
                    auto it = std::find(header.begin(), header.end(), want);
                    if (it == header.end()) throw ParseError(source, line_no, fmt::format("missing column '{}'", want));
                    idx[a] = static_cast<std::size_t>(it - header.begin());
                }
                cols.push_back(idx);
            }
            continue;
        }
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw ParseError(source, line_no, fmt::format("row has {} cells, header has {}", cells.size(), header.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            Vec3 p;
            for (int a = 0; a < 3; ++a) {
                if (!parse_double(cells[cols[j][a]], p[a]))
                    throw ParseError(source, line_no, fmt::format("non-numeric cell '{}' in column '{}'", cells[cols[j][a]], header[cols[j][a]]));
            }
            m.positions.push_back(p * spec.length_scale);
        }
    }
    if (header.empty()) throw ParseError(source, line_no, "missing header row");
    if (!rate) throw ParseError(source, header_line, "frame rate neither given nor declared by '# frame_rate=' comment");
    m.frame_rate = *rate;
    try {
        m.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(source, line_no, e.what());
    }
    return m;
}

std::string write_joint_csv(const MotionSequence& motion, const std::vector<std::string>& joint_names) {
    if (joint_names.size() != motion.joint_count) throw InvalidArgument("joint name count does not match motion");
    std::string out = "# frame_rate=" + format_double(motion.frame_rate) + "\n";
    for (std::size_t j = 0; j < joint_names.size(); ++j) {
        for (char a : {'x', 'y', 'z'}) {
            if (j || a != 'x') out += ',';
            out += joint_names[j] + "_" + a;
        }
    }
    out += '\n';
    for (std::size_t f = 0; f < motion.frames(); ++f) {
        for (std::size_t j = 0; j < motion.joint_count; ++j) {
            const Vec3& p = motion.at(f, j);
            for (int a = 0; a < 3; ++a) {
                if (j || a) out += ',';
                out += format_double(p[a]);
            }
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------- FK

MotionSequence forward_kinematics(const Skeleton& skeleton, const ChannelPose& pose) {
    skeleton.validate();
    if (pose.joint_count != skeleton.size())
        throw InvalidArgument(fmt::format("pose has {} joints, skeleton {}", pose.joint_count, skeleton.size()));
    const std::size_t nj = skeleton.size();
    const auto order = skeleton.topological_order();
    MotionSequence m;
    m.frame_rate = pose.frame_rate;
    m.joint_count = nj;
    m.positions.resize(pose.frames() * nj);
    std::vector<Quaternion> global(nj);
    for (std::size_t f = 0; f < pose.frames(); ++f) {
        for (auto j : order) {
            const Quaternion local = quat_from_euler_deg(pose.rotation_order[j], pose.angles(f, j));
            const int p = skeleton.parent_index[j];
            if (p == kNoParent) {
                m.at(f, j) = pose.root_translation[f];
                global[j] = local;
            } else {
                const auto pj = static_cast<std::size_t>(p);
                m.at(f, j) = m.at(f, pj) + global[pj].rotate(skeleton.rest_offset[j]);
                global[j] = global[pj] * local;
            }
        }
    }
    return m;
}

std::string write_bvh(const Skeleton& skeleton, const ChannelPose& pose, double length_unit) {
    skeleton.validate();
    if (pose.joint_count != skeleton.size() || pose.rotation_order.size() != skeleton.size())
        throw InvalidArgument("pose does not match skeleton");
    if (!(length_unit > 0.0)) throw InvalidArgument("length unit must be positive");
    const auto kids = skeleton.children();
    const std::size_t root = skeleton.root_index;
    auto vec = [&](const Vec3& v) {
        return fmt::format("{} {} {}", format_double(v.x() / length_unit), format_double(v.y() / length_unit),
                           format_double(v.z() / length_unit));
    };
    auto rot_channels = [&](std::size_t j) {
        std::string c;
        for (int a : pose.rotation_order[j].axes) c += fmt::format(" {}rotation", "XYZ"[a]);
        return c;
    };
    std::string out = "HIERARCHY\n";
    std::vector<std::size_t> preorder;
    auto emit = [&](auto&& self, std::size_t j, int depth) -> void {
        const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
        preorder.push_back(j);
        out += fmt::format("{}{} {}\n{}{{\n", pad, j == root ? "ROOT" : "JOINT", skeleton.joint_names[j], pad);
        out += fmt::format("{}  OFFSET {}\n", pad, vec(skeleton.rest_offset[j]));
        if (j == root)
            out += fmt::format("{}  CHANNELS 6 Xposition Yposition Zposition{}\n", pad, rot_channels(j));
        else
            out += fmt::format("{}  CHANNELS 3{}\n", pad, rot_channels(j));
        for (auto c : kids[j]) self(self, c, depth + 1);
        if (kids[j].empty()) {
            Vec3 tip = skeleton.rest_offset[j] * 0.25;
            if (j == root) tip = Vec3(0, 0, 0.1);
            out += fmt::format("{}  End Site\n{}  {{\n{}    OFFSET {}\n{}  }}\n", pad, pad, pad, vec(tip), pad);
        }
        out += pad + "}\n";
    };
    emit(emit, root, 0);
    out += fmt::format("MOTION\nFrames: {}\nFrame Time: {}\n", pose.frames(), format_double(1.0 / pose.frame_rate));
    for (std::size_t f = 0; f < pose.frames(); ++f) {
        out += vec(pose.root_translation[f] - skeleton.rest_offset[root]);
        for (auto j : preorder) {
            const Vec3& e = pose.angles(f, j);
            out += fmt::format(" {} {} {}", format_double(e[0]), format_double(e[1]), format_double(e[2]));
        }
        out += '\n';
    }
    return out;
}

// ------------------------------------------------------------ world frame

UpAxis up_axis_from_string(std::string_view s) {
    if (s == "y" || s == "Y") return UpAxis::y;
    if (s == "z" || s == "Z") return UpAxis::z;
    throw InvalidArgument(fmt::format("unknown up axis '{}' (expected y or z)", s));
}

namespace {
Vec3 y_up_to_z_up(const Vec3& v) { return {v.x(), -v.z(), v.y()}; }
}  // namespace

void to_z_up(Skeleton& skeleton, UpAxis up) {
    if (up == UpAxis::z) return;
    for (auto& v : skeleton.rest_offset) v = y_up_to_z_up(v);
}

void to_z_up(MotionSequence& motion, UpAxis up) {
    if (up == UpAxis::z) return;
    for (auto& v : motion.positions) v = y_up_to_z_up(v);
}

// ----------------------------------------------------------- body skeleton

Skeleton body22_skeleton() {
    // x: subject's right, y: forward, z: up. T-pose.
    struct Row {
        const char* name;
        int parent;
        double x, y, z;
    };
    static constexpr Row rows[] = {
        {"pelvis", kNoParent, 0.0, 0.0, 0.95},
        {"left_hip", 0, -0.09, 0.0, -0.07},
        {"right_hip", 0, 0.09, 0.0, -0.07},
        {"spine1", 0, 0.0, -0.02, 0.11},
        {"left_knee", 1, -0.01, 0.0, -0.38},
        {"right_knee", 2, 0.01, 0.0, -0.38},
        {"spine2", 3, 0.0, 0.01, 0.13},
        {"left_ankle", 4, 0.0, -0.02, -0.40},
        {"right_ankle", 5, 0.0, -0.02, -0.40},
        {"spine3", 6, 0.0, 0.0, 0.05},
        {"left_foot", 7, 0.0, 0.12, -0.06},
        {"right_foot", 8, 0.0, 0.12, -0.06},
        {"neck", 9, 0.0, -0.01, 0.21},
        {"left_collar", 9, -0.07, 0.0, 0.12},
        {"right_collar", 9, 0.07, 0.0, 0.12},
        {"head", 12, 0.0, 0.05, 0.09},
        {"left_shoulder", 13, -0.11, 0.0, 0.03},
        {"right_shoulder", 14, 0.11, 0.0, 0.03},
        {"left_elbow", 16, -0.26, 0.0, 0.0},
        {"right_elbow", 17, 0.26, 0.0, 0.0},
        {"left_wrist", 18, -0.25, 0.0, 0.0},
        {"right_wrist", 19, 0.25, 0.0, 0.0},
    };
    Skeleton s;
    for (const auto& r : rows) {
        s.joint_names.emplace_back(r.name);
        s.parent_index.push_back(r.parent);
        s.rest_offset.emplace_back(r.x, r.y, r.z);
    }
    s.root_index = 0;
    return s;
}

}  // namespace vimu
