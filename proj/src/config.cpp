#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "vimu/cli.hpp"
#include "vimu/io_util.hpp"

namespace vimu {

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef VIMU_VERSION
#define VIMU_VERSION "0.0.0"
#endif

std::string_view toolkit_version() { return VIMU_VERSION; }

namespace {

std::string join_violations(const std::vector<Violation>& v) {
    std::string s = "invalid configuration:";
    for (const auto& x : v) s += fmt::format("\n  {}: {}", x.path, x.message);
    return s;
}

// Reads optional typed fields and records type errors as violations.
class Reader {
public:
    explicit Reader(std::vector<Violation>& v) : v_(v) {}

    void fail(std::string path, std::string msg) { v_.push_back({std::move(path), std::move(msg)}); }

    const json* object(const json& parent, const std::string& key, const std::string& path, bool required) {
        if (!parent.contains(key)) {
            if (required) fail(path, "missing required section");
            return nullptr;
        }
        const json& j = parent.at(key);
        if (!j.is_object()) {
            fail(path, "expected an object");
            return nullptr;
        }
        return &j;
    }

    template <class T>
    void field(const json& obj, const std::string& key, const std::string& prefix, T& out) {
        if (!obj.contains(key)) return;
        const json& j = obj.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!j.is_number()) throw std::runtime_error("expected a number");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!j.is_boolean()) throw std::runtime_error("expected true or false");
            } else if constexpr (std::is_integral_v<T>) {
                if (!j.is_number_integer() || (std::is_unsigned_v<T> && j.get<long long>() < 0))
                    throw std::runtime_error("expected a non-negative integer");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!j.is_string()) throw std::runtime_error("expected a string");
            }
            out = j.get<T>();
        } catch (const std::exception& e) {
            fail(join(prefix, key), e.what());
        }
    }

    static std::string join(const std::string& prefix, const std::string& key) {
        return prefix.empty() ? key : prefix + "." + key;
    }

    // Runs a validate() and turns its exception into a violation.
    template <class F>
    void check(const std::string& path, F&& f) {
        try {
            f();
        } catch (const Error& e) {
            fail(path, e.what());
        }
    }

private:
    std::vector<Violation>& v_;
};

std::vector<fs::path> resolve_files(Reader& r, const json& obj, const std::string& path, const fs::path& base,
                                    std::string_view extension) {
    std::vector<fs::path> files;
    if (obj.contains("files")) {
        const json& f = obj.at("files");
        if (!f.is_array()) {
            r.fail(path + ".files", "expected a list of paths");
            return files;
        }
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (!f[i].is_string()) {
                r.fail(fmt::format("{}.files[{}]", path, i), "expected a path string");
                continue;
            }
            const fs::path p = base / f[i].get<std::string>();
            if (!fs::is_regular_file(p))
                r.fail(fmt::format("{}.files[{}]", path, i), fmt::format("file not found: {}", p.string()));
            files.push_back(p.lexically_normal());
        }
    } else if (obj.contains("dir")) {
        if (!obj.at("dir").is_string()) {
            r.fail(path + ".dir", "expected a path string");
            return files;
        }
        const fs::path d = base / obj.at("dir").get<std::string>();
        if (!fs::is_directory(d)) {
            r.fail(path + ".dir", fmt::format("directory not found: {}", d.string()));
            return files;
        }
        files = list_files(d, extension);
        if (files.empty()) r.fail(path + ".dir", fmt::format("no {} files in {}", extension, d.string()));
    } else {
        r.fail(path, "needs either \"files\" or \"dir\"");
    }
    return files;
}

std::optional<MotionSourceConfig> parse_motion_source(Reader& r, const json& doc, const std::string& key,
                                                      Provenance prov, const fs::path& base) {
    const json* obj = r.object(doc, key, key, false);
    if (!obj) return std::nullopt;
    MotionSourceConfig s;
    s.provenance = prov;
    r.field(*obj, "format", key, s.format);
    if (s.format != "csv" && s.format != "bvh") {
        r.fail(key + ".format", fmt::format("unknown motion format '{}' (csv or bvh)", s.format));
        return std::nullopt;
    }
    r.field(*obj, "skeleton", key, s.skeleton);
    if (s.format == "csv" && s.skeleton != "body22")
        r.fail(key + ".skeleton", fmt::format("unknown skeleton '{}' (only body22 is built in)", s.skeleton));
    std::string up = s.up_axis == UpAxis::y ? "y" : "z";
    r.field(*obj, "up_axis", key, up);
    r.check(key + ".up_axis", [&] { s.up_axis = up_axis_from_string(up); });
    r.field(*obj, "length_scale", key, s.length_scale);
    if (!(s.length_scale > 0.0) || !std::isfinite(s.length_scale))
        r.fail(key + ".length_scale", "must be positive");
    r.field(*obj, "include_end_sites", key, s.include_end_sites);
    if (obj->contains("frame_rate")) {
        double fr = 0.0;
        r.field(*obj, "frame_rate", key, fr);
        if (!(fr > 0.0)) r.fail(key + ".frame_rate", "must be positive");
        s.frame_rate = fr;
    }
    s.files = resolve_files(r, *obj, key, base, "." + s.format);
    return s;
}

std::vector<std::string> known_configs() {
    std::vector<std::string> out;
    for (auto c : kAllConfigs) out.emplace_back(to_string(c));
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<Violation> v) : Error(join_violations(v)), violations_(std::move(v)) {}

std::string ExperimentConfig::rel(const fs::path& p) const {
    return p.lexically_normal().lexically_relative(base_dir.lexically_normal()).generic_string();
}

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir, std::vector<Violation>& violations) {
    Reader r(violations);
    ExperimentConfig c;
    c.base_dir = base_dir;
    c.source_json = doc;
    if (!doc.is_object()) {
        r.fail("<root>", "configuration must be a JSON object");
        return c;
    }
    static const std::set<std::string> top = {"output_dir",   "real",   "virtual_text", "virtual_video",
                                              "placements",   "simulation", "window",   "augment",
                                              "features",     "forest", "evaluation"};
    for (const auto& [k, v] : doc.items())
        if (!top.count(k)) r.fail(k, "unknown key");

    std::string out = "out";
    r.field(doc, "output_dir", "", out);
    c.output_dir = base_dir / out;

    if (const json* real = r.object(doc, "real", "real", true)) {
        std::string adapter;
        r.field(*real, "adapter", "real", adapter);
        if (adapter.empty()) {
            r.fail("real.adapter", "missing adapter spec path");
        } else {
            c.real.adapter = (base_dir / adapter).lexically_normal();
            if (!fs::is_regular_file(c.real.adapter)) {
                r.fail("real.adapter", fmt::format("file not found: {}", c.real.adapter.string()));
            } else {
                r.check("real.adapter", [&] {
                    try {
                        (void)AdapterSpec::from_json(json::parse(read_file(c.real.adapter)));
                    } catch (const json::exception& e) {
                        throw InvalidArgument(e.what());
                    }
                });
            }
        }
        c.real.files = resolve_files(r, *real, "real", base_dir, ".txt");
    }
    c.virtual_text = parse_motion_source(r, doc, "virtual_text", Provenance::virtual_text, base_dir);
    c.virtual_video = parse_motion_source(r, doc, "virtual_video", Provenance::virtual_video, base_dir);

    if (!doc.contains("placements") || !doc.at("placements").is_array() || doc.at("placements").empty()) {
        r.fail("placements", "needs a nonempty list of joint names");
    } else {
        for (std::size_t i = 0; i < doc.at("placements").size(); ++i) {
            const json& p = doc.at("placements")[i];
            if (!p.is_string() || p.get<std::string>().empty())
                r.fail(fmt::format("placements[{}]", i), "expected a joint name");
            else
                c.synth.placements.push_back(p.get<std::string>());
        }
        std::set<std::string> uniq(c.synth.placements.begin(), c.synth.placements.end());
        if (uniq.size() != c.synth.placements.size()) r.fail("placements", "duplicate joint name");
        const Skeleton body = body22_skeleton();
        for (const auto* src : {&c.virtual_text, &c.virtual_video}) {
            if (!*src || (*src)->format != "csv") continue;
            for (const auto& p : c.synth.placements)
                if (!body.find(p)) r.fail("placements", fmt::format("joint '{}' is not in the body22 skeleton", p));
        }
    }

    if (const json* sim = r.object(doc, "simulation", "simulation", false)) {
        r.field(*sim, "accel_noise_std", "simulation", c.synth.accel_noise_std);
        r.field(*sim, "gyro_noise_std", "simulation", c.synth.gyro_noise_std);
        r.field(*sim, "accel_bias_range", "simulation", c.synth.accel_bias_range);
        r.field(*sim, "gyro_bias_range", "simulation", c.synth.gyro_bias_range);
        r.field(*sim, "seed", "simulation", c.synth.seed);
        r.check("simulation", [&] {
            SensorConfig s;
            s.accel_noise_std = c.synth.accel_noise_std;
            s.gyro_noise_std = c.synth.gyro_noise_std;
            s.accel_bias_range = c.synth.accel_bias_range;
            s.gyro_bias_range = c.synth.gyro_bias_range;
            s.validate();
        });
    }

    if (const json* w = r.object(doc, "window", "window", false)) {
        r.field(*w, "window_seconds", "window", c.window.window_seconds);
        r.field(*w, "overlap_seconds", "window", c.window.overlap_seconds);
        r.field(*w, "rate", "window", c.window.rate);
    }
    if (c.window.overlap_seconds >= c.window.window_seconds)
        r.fail("window.overlap_seconds", fmt::format("overlap {} s must be shorter than the {} s window",
                                                     c.window.overlap_seconds, c.window.window_seconds));
    else
        r.check("window", [&] { c.window.validate(); });
    c.synth.output_rate = c.window.rate;

    auto& ex = c.experiment;
    if (const json* a = r.object(doc, "augment", "augment", false)) {
        r.field(*a, "theta", "augment", ex.augment.theta);
        r.field(*a, "noise_std", "augment", ex.augment.noise_std);
        r.field(*a, "bias_halfwidth", "augment", ex.augment.bias_halfwidth);
        r.check("augment", [&] { ex.augment.validate(); });
    }
    if (const json* f = r.object(doc, "features", "features", false)) {
        r.field(*f, "n_components", "features", ex.ecdf.n_components);
        r.field(*f, "include_mean", "features", ex.ecdf.include_mean);
        r.check("features", [&] { ex.ecdf.validate(); });
    }
    if (const json* f = r.object(doc, "forest", "forest", false)) {
        r.check("forest", [&] {
            try {
                ex.forest = TrainParams::from_json(*f);
            } catch (const json::exception& e) {
                throw InvalidArgument(e.what());
            }
        });
    }
    if (const json* e = r.object(doc, "evaluation", "evaluation", false)) {
        std::string folds = "loso";
        r.field(*e, "folds", "evaluation", folds);
        if (folds == "loso") {
            ex.fold.kind = FoldSpec::Kind::loso;
        } else if (folds == "stratified") {
            ex.fold.kind = FoldSpec::Kind::stratified;
        } else {
            r.fail("evaluation.folds", fmt::format("unknown fold scheme '{}' (loso or stratified)", folds));
        }
        r.field(*e, "k", "evaluation", ex.fold.k);
        r.check("evaluation.k", [&] { ex.fold.validate(); });
        if (e->contains("configurations")) {
            const json& cfgs = e->at("configurations");
            ex.configs.clear();
            if (!cfgs.is_array() || cfgs.empty()) r.fail("evaluation.configurations", "needs a nonempty list");
            for (std::size_t i = 0; cfgs.is_array() && i < cfgs.size(); ++i) {
                const std::string path = fmt::format("evaluation.configurations[{}]", i);
                if (!cfgs[i].is_string()) {
                    r.fail(path, "expected a configuration name");
                    continue;
                }
                const auto name = cfgs[i].get<std::string>();
                auto tc = training_config_from_string(name);
                if (!tc) {
                    r.fail(path, fmt::format("unknown configuration '{}' (expected one of {})", name,
                                             fmt::join(known_configs(), ", ")));
                    continue;
                }
                if (std::find(ex.configs.begin(), ex.configs.end(), *tc) != ex.configs.end())
                    r.fail(path, fmt::format("configuration '{}' listed twice", name));
                ex.configs.push_back(*tc);
            }
        }
        if (e->contains("fractions")) {
            const json& fr = e->at("fractions");
            ex.fractions.clear();
            if (!fr.is_array() || fr.empty()) r.fail("evaluation.fractions", "needs a nonempty list");
            for (std::size_t i = 0; fr.is_array() && i < fr.size(); ++i) {
                if (!fr[i].is_number() || !(fr[i].get<double>() > 0.0) || fr[i].get<double>() > 1.0)
                    r.fail(fmt::format("evaluation.fractions[{}]", i), "must be a number in (0, 1]");
                else
                    ex.fractions.push_back(fr[i].get<double>());
            }
        }
        if (e->contains("seeds")) {
            const json& sd = e->at("seeds");
            ex.seeds.clear();
            if (!sd.is_array() || sd.empty()) r.fail("evaluation.seeds", "needs a nonempty list");
            for (std::size_t i = 0; sd.is_array() && i < sd.size(); ++i) {
                if (!sd[i].is_number_unsigned())
                    r.fail(fmt::format("evaluation.seeds[{}]", i), "must be a non-negative integer");
                else
                    ex.seeds.push_back(sd[i].get<std::uint64_t>());
            }
        }
    }
    // Configurations that need a virtual source must have one.
    for (auto cfg : ex.configs) {
        const bool text = cfg == TrainingConfig::real_imugpt || cfg == TrainingConfig::real_imugpt_imutube;
        const bool video = cfg == TrainingConfig::real_imutube || cfg == TrainingConfig::real_imugpt_imutube;
        if (text && !c.virtual_text)
            r.fail("virtual_text", fmt::format("configuration '{}' needs a virtual_text source", to_string(cfg)));
        if (video && !c.virtual_video)
            r.fail("virtual_video", fmt::format("configuration '{}' needs a virtual_video source", to_string(cfg)));
    }
    return c;
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw InvalidArgument(fmt::format("override '{}' is not of the form key.path=value", assignment));
    const std::string_view key = assignment.substr(0, eq);
    const std::string value(assignment.substr(eq + 1));
    json* node = &doc;
    for (auto part : split(key, '.')) {
        if (part.empty()) throw InvalidArgument(fmt::format("override '{}' has an empty key segment", assignment));
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw InvalidArgument(fmt::format("override '{}' descends into a non-object", assignment));
        node = &(*node)[std::string(part)];
    }
    json parsed = json::parse(value, nullptr, false);
    *node = parsed.is_discarded() ? json(value) : parsed;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    std::vector<Violation> v;
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(std::vector<Violation>{{"<file>", fmt::format("{}: not valid JSON: {}", path.string(), e.what())}});
    } catch (const Error& e) {
        throw ConfigError(std::vector<Violation>{{"<file>", e.what()}});
    }
    for (const auto& o : overrides) {
        try {
            apply_override(doc, o);
        } catch (const Error& e) {
            v.push_back({"<override>", e.what()});
        }
    }
    fs::path base = path.parent_path();
    if (base.empty()) base = ".";
    ExperimentConfig c = parse_config(doc, base, v);
    if (!v.empty()) throw ConfigError(std::move(v));
    return c;
}

}  // namespace vimu
