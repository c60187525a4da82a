#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <ostream>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "vimu/cli.hpp"
#include "vimu/hash.hpp"
#include "vimu/io_util.hpp"

namespace vimu {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------- data access

std::vector<fs::path> list_files(const fs::path& dir, std::string_view extension) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == extension) out.push_back(e.path().lexically_normal());
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return a.generic_string() < b.generic_string();
    });
    return out;
}

LoadedMotion load_motion(const fs::path& file, const MotionSourceConfig& src) {
    const std::string text = read_file(file);
    LoadedMotion lm;
    if (src.format == "bvh") {
        BvhOptions opt;
        opt.length_scale = src.length_scale;
        opt.include_end_sites = src.include_end_sites;
        BvhFile b = parse_bvh(text, opt, file.string());
        lm.skeleton = std::move(b.skeleton);
        lm.motion = forward_kinematics(lm.skeleton, b.pose);
        to_z_up(lm.skeleton, src.up_axis);
    } else {
        // The built-in skeleton is already z-up; only the samples rotate.
        lm.skeleton = body22_skeleton();
        JointCsvSpec spec{lm.skeleton.joint_names, src.frame_rate, src.length_scale};
        lm.motion = parse_joint_csv(text, spec, file.string());
    }
    to_z_up(lm.motion, src.up_axis);
    lm.motion.activity_label = file.parent_path().filename().string();
    lm.motion.provenance = src.provenance;
    return lm;
}

std::string write_trace_csv(const ImuTrace& trace) {
    trace.validate();
    std::string out = "t,ax,ay,az,gx,gy,gz\n";
    for (std::size_t k = 0; k < trace.samples(); ++k) {
        out += format_double(static_cast<double>(k) / trace.sample_rate);
        for (const Vec3* v : {&trace.accel[k], &trace.gyro[k]})
            for (int a = 0; a < 3; ++a) out += "," + format_double((*v)[a]);
        out += '\n';
    }
    return out;
}

namespace {

// --------------------------------------------------------------- helpers

struct StageFailure : Error {
    StageFailure(std::string stage, std::string artifact, const std::string& what)
        : Error(fmt::format("stage '{}' failed on {}: {}", stage, artifact, what)) {}
};

AdapterSpec read_adapter(const fs::path& p) {
    try {
        return AdapterSpec::from_json(json::parse(read_file(p)));
    } catch (const json::exception& e) {
        throw InvalidArgument(fmt::format("{}: {}", p.string(), e.what()));
    }
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string trace_stem(const ExperimentConfig& c, const fs::path& motion) {
    std::string rel = c.rel(motion);
    if (rel.empty() || rel.rfind("..", 0) == 0) rel = motion.filename().generic_string();
    fs::path p(rel);
    std::string s = p.replace_extension().generic_string();
    std::replace(s.begin(), s.end(), '/', '_');
    return s;
}

struct SourceSynth {
    std::vector<fs::path> files;
    std::vector<std::string> ids;
    std::vector<SynthOutcome> outcomes;  // error set for failed files
};

// Loads and synthesizes every file, isolating failures per file.
SourceSynth synthesize_files(const ExperimentConfig& c, const MotionSourceConfig& src,
                             const std::vector<fs::path>& files) {
    SourceSynth s;
    s.files = files;
    std::vector<LoadedMotion> loaded(files.size());
    std::vector<std::string> load_error(files.size());
    for (std::size_t i = 0; i < files.size(); ++i) {
        s.ids.push_back(c.rel(files[i]));
        try {
            loaded[i] = load_motion(files[i], src);
            loaded[i].motion.subject_id = s.ids[i];
        } catch (const std::exception& e) {
            load_error[i] = e.what();
        }
    }
    std::vector<SynthJob> jobs;
    std::vector<std::size_t> job_file;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!load_error[i].empty()) continue;
        jobs.push_back(SynthJob{&loaded[i].skeleton, std::move(loaded[i].motion), s.ids[i]});
        job_file.push_back(i);
    }
    auto results = synthesize_batch(jobs, c.synth);
    s.outcomes.resize(files.size());
    for (std::size_t i = 0; i < files.size(); ++i)
        if (!load_error[i].empty()) s.outcomes[i].error = load_error[i];
    for (std::size_t k = 0; k < results.size(); ++k) s.outcomes[job_file[k]] = std::move(results[k]);
    return s;
}

json file_entry(const ExperimentConfig& c, const fs::path& p) {
    return {{"path", c.rel(p)}, {"sha256", sha256_file(p)}};
}

// A cached dataset stage: key from the inputs, a directory per key.
struct Stage {
    std::string name;
    json key_doc;
    std::string key;
    fs::path dir;
    bool cached = false;
    std::string output_hash;
};

Dataset run_stage(Stage& st, const fs::path& cache_root, const std::function<Dataset()>& compute) {
    st.key = sha256_hex(st.key_doc.dump());
    st.dir = cache_root / fmt::format("{}-{}", st.name, st.key.substr(0, 16));
    const fs::path manifest = st.dir / "manifest.json";
    Dataset ds;
    bool have = false;
    if (fs::exists(manifest)) {
        try {
            ds = load_dataset(st.dir);
            have = true;
            st.cached = true;
        } catch (const Error&) {
            have = false;  // damaged cache entry: rebuild it
        }
    }
    if (!have) {
        ds = compute();
        const fs::path tmp = st.dir.string() + ".tmp";
        fs::remove_all(tmp);
        save_dataset(ds, tmp);
        fs::remove_all(st.dir);
        fs::rename(tmp, st.dir);
    }
    st.output_hash = sha256_file(manifest);
    return ds;
}

json stage_json(const Stage& st) {
    return {{"name", st.name},
            {"key", st.key},
            {"cached", st.cached},
            {"inputs", st.key_doc.at("inputs")},
            {"output", {{"path", st.dir.generic_string()}, {"manifest_sha256", st.output_hash}}}};
}

json synth_params_json(const ExperimentConfig& c) {
    const auto& s = c.synth;
    return {{"placements", s.placements},           {"accel_noise_std", s.accel_noise_std},
            {"gyro_noise_std", s.gyro_noise_std},   {"accel_bias_range", s.accel_bias_range},
            {"gyro_bias_range", s.gyro_bias_range}, {"seed", s.seed},
            {"output_rate", s.output_rate}};
}

json window_json(const WindowSpec& w) {
    return {{"window_seconds", w.window_seconds}, {"overlap_seconds", w.overlap_seconds}, {"rate", w.rate}};
}

json motion_source_json(const MotionSourceConfig& s) {
    return {{"format", s.format},
            {"skeleton", s.skeleton},
            {"up_axis", s.up_axis == UpAxis::y ? "y" : "z"},
            {"length_scale", s.length_scale},
            {"include_end_sites", s.include_end_sites},
            {"frame_rate", s.frame_rate ? json(*s.frame_rate) : json(nullptr)}};
}

Dataset real_windows(const ExperimentConfig& c) {
    const AdapterSpec spec = read_adapter(c.real.adapter);
    std::vector<Recording> recs;
    Dataset ds;
    for (const auto& f : c.real.files) {
        try {
            recs.push_back(ingest_column_mapped(read_file(f), spec, c.rel(f)));
        } catch (const Error& e) {
            throw StageFailure("ingest", f.string(), e.what());
        }
        ds.meta.sources.push_back({c.rel(f), sha256_file(f)});
    }
    Dataset w = window_recordings(recs, c.window);
    w.meta = ds.meta;
    return w;
}

Dataset virtual_windows(const ExperimentConfig& c, const MotionSourceConfig& src, const std::string& stage) {
    SourceSynth s = synthesize_files(c, src, src.files);
    std::vector<Recording> recs;
    DatasetMeta meta;
    for (std::size_t i = 0; i < s.files.size(); ++i) {
        if (!s.outcomes[i].error.empty()) throw StageFailure(stage, s.files[i].string(), s.outcomes[i].error);
        recs.push_back(std::move(*s.outcomes[i].recording));
        meta.sources.push_back({s.ids[i], sha256_file(s.files[i])});
    }
    Dataset w = window_recordings(recs, c.window);
    meta.seeds["simulation"] = c.synth.seed;
    w.meta = std::move(meta);
    return w;
}

Dataset empty_like(const Dataset& real) {
    Dataset d;
    d.layout = real.layout;
    d.spec = real.spec;
    return d;
}

template <class F>
int guarded(std::ostream& err, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        fmt::print(err, "{}\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitStage;
    }
}

}  // namespace

// ---------------------------------------------------------------- commands

int cmd_validate(const fs::path& config, const std::vector<std::string>& overrides, std::ostream& out,
                 std::ostream& err) {
    try {
        const auto c = load_config(config, overrides);
        std::size_t motions = 0;
        for (const auto* s : {&c.virtual_text, &c.virtual_video})
            if (*s) motions += (*s)->files.size();
        fmt::print(out, "ok: {} real file(s), {} motion file(s), {} configuration(s)\n", c.real.files.size(), motions,
                   c.experiment.configs.size());
        return kExitOk;
    } catch (const ConfigError& e) {
        for (const auto& v : e.violations()) fmt::print(err, "{}: {}\n", v.path, v.message);
        return kExitValidation;
    }
}

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto c = load_config(o.config, o.overrides);
        const fs::path dir = o.out_dir.value_or(c.output_dir / "traces");
        std::vector<std::pair<MotionSourceConfig, std::vector<fs::path>>> groups;
        if (!o.motions.empty()) {
            MotionSourceConfig src;
            if (o.source == "virtual_text" && c.virtual_text) {
                src = *c.virtual_text;
            } else if (o.source == "virtual_video" && c.virtual_video) {
                src = *c.virtual_video;
            } else if (o.source != "virtual_text" && o.source != "virtual_video") {
                throw ConfigError(std::vector<Violation>{{"--source", fmt::format("unknown source '{}'", o.source)}});
            } else {
                src.provenance = o.source == "virtual_text" ? Provenance::virtual_text : Provenance::virtual_video;
            }
            // Each file's format follows its extension.
            std::vector<fs::path> csv, bvh;
            for (const auto& m : o.motions) (m.extension() == ".bvh" ? bvh : csv).push_back(m);
            if (!csv.empty()) {
                src.format = "csv";
                groups.emplace_back(src, csv);
            }
            if (!bvh.empty()) {
                src.format = "bvh";
                groups.emplace_back(src, bvh);
            }
        } else {
            for (const auto* s : {&c.virtual_text, &c.virtual_video})
                if (*s) groups.emplace_back(**s, (*s)->files);
        }

        json traces = json::array();
        json errors = json::array();
        std::size_t failed = 0;
        for (const auto& [src, files] : groups) {
            SourceSynth s = synthesize_files(c, src, files);
            for (std::size_t i = 0; i < files.size(); ++i) {
                const auto& oc = s.outcomes[i];
                if (!oc.error.empty()) {
                    ++failed;
                    errors.push_back({{"motion", s.ids[i]}, {"message", oc.error}});
                    fmt::print(err, "{}: {}\n", s.ids[i], oc.error);
                    continue;
                }
                for (std::size_t p = 0; p < oc.traces.size(); ++p) {
                    const std::string name = fmt::format("{}__{}.csv", trace_stem(c, files[i]), c.synth.placements[p]);
                    const std::string body = write_trace_csv(oc.traces[p]);
                    write_file(dir / name, body);
                    traces.push_back({{"motion", s.ids[i]},
                                      {"label", oc.recording->labels.empty() ? "" : oc.recording->labels.front()},
                                      {"provenance", std::string(to_string(src.provenance))},
                                      {"placement", c.synth.placements[p]},
                                      {"file", name},
                                      {"samples", oc.traces[p].samples()},
                                      {"sha256", sha256_hex(body)},
                                      {"ik_diagnostics", oc.diagnostics.size()}});
                }
            }
        }
        const json manifest = {{"format", "vimu-traces"},
                               {"toolkit_version", std::string(toolkit_version())},
                               {"sample_rate", c.synth.output_rate},
                               {"simulation", synth_params_json(c)},
                               {"traces", traces},
                               {"errors", errors}};
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
        fmt::print(out, "{} trace file(s) in {}, {} motion(s) failed\n", traces.size(), dir.string(), failed);
        return failed ? kExitStage : kExitOk;
    });
}

int cmd_ingest(const IngestOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const AdapterSpec spec = read_adapter(o.adapter);
        Recording rec = ingest_column_mapped(read_file(o.input), spec, o.input.generic_string());
        if (o.rate) rec = resample_recording(rec, *o.rate);
        auto [text, adapter] = export_recording(rec);
        write_file(o.output, text);
        write_file(o.output.string() + ".adapter.json", adapter.to_json().dump(2) + "\n");
        fmt::print(out, "{} sample(s) x {} channel(s) at {} Hz, {} dropped row(s)\n", rec.samples(), rec.channels(),
                   format_double(rec.sample_rate), rec.dropped_rows);
        return kExitOk;
    });
}

int cmd_window(const WindowOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        o.spec.validate();
        const AdapterSpec spec = read_adapter(o.adapter);
        std::vector<Recording> recs;
        DatasetMeta meta;
        for (const auto& f : o.inputs) {
            recs.push_back(ingest_column_mapped(read_file(f), spec, f.generic_string()));
            meta.sources.push_back({f.generic_string(), sha256_file(f)});
        }
        Dataset ds = window_recordings(recs, o.spec);
        ds.meta = std::move(meta);
        save_dataset(ds, o.out_dir);
        fmt::print(out, "{} window(s) of {} sample(s) in {}\n", ds.size(), o.spec.window_samples(), o.out_dir.string());
        return kExitOk;
    });
}

int cmd_augment(const AugmentOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset ds = load_dataset(o.in_dir);
        const Dataset aug = augment_dataset(ds, o.params);
        save_dataset(aug, o.out_dir);
        fmt::print(out, "{} -> {} window(s)\n", ds.size(), aug.size());
        return kExitOk;
    });
}

int cmd_featurize(const FeaturizeOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Dataset ds = load_dataset(o.in_dir);
        const auto feats = featurize(ds, o.spec);
        const std::size_t channels = ds.layout ? ds.layout->size() : 0;
        write_file(o.output, write_features_csv(feats, channels, o.spec));
        fmt::print(out, "{} vector(s) of length {}\n", feats.size(), channels * o.spec.per_channel());
        return kExitOk;
    });
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto feats = read_features_csv(read_file(o.features), o.features.generic_string());
        const ForestModel m = train_forest(feats, o.params);
        write_file(o.model, m.to_json().dump() + "\n");
        fmt::print(out, "{} tree(s), {} class(es), model sha256 {}\n", m.trees.size(), m.classes.size(), m.hash());
        return kExitOk;
    });
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ForestModel m = ForestModel::from_json(json::parse(read_file(o.model)));
        const auto feats = read_features_csv(read_file(o.features), o.features.generic_string());
        std::vector<std::string> classes = m.classes;
        for (const auto& f : feats)
            if (std::find(classes.begin(), classes.end(), f.label) == classes.end()) classes.push_back(f.label);
        ConfusionMatrix cm(classes);
        const auto preds = predict_batch(m, feats);
        for (std::size_t i = 0; i < feats.size(); ++i) cm.add(*cm.index_of(feats[i].label), preds[i].class_index);
        const F1Scores f1 = macro_f1(cm);
        fmt::print(out, "macro F1 {:.4f} over {} window(s)\n", f1.macro, feats.size());
        json per = json::object();
        for (std::size_t k = 0; k < classes.size(); ++k) {
            per[classes[k]] = f1.per_class[k] ? json(*f1.per_class[k]) : json(nullptr);
            if (f1.per_class[k]) fmt::print(out, "  {:<16} {:.4f}\n", classes[k], *f1.per_class[k]);
        }
        if (o.output) {
            json conf = json::array();
            for (std::size_t t = 0; t < cm.size(); ++t) {
                json row = json::array();
                for (std::size_t p = 0; p < cm.size(); ++p) row.push_back(cm.at(t, p));
                conf.push_back(row);
            }
            const json doc = {{"model_sha256", m.hash()},
                              {"features_sha256", sha256_file(o.features)},
                              {"classes", classes},
                              {"confusion", conf},
                              {"macro_f1", f1.macro},
                              {"per_class_f1", per}};
            write_file(*o.output, doc.dump(2) + "\n");
        }
        return kExitOk;
    });
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const std::string started = utc_now();
        const auto c = load_config(o.config, o.overrides);
        const fs::path out_dir = o.out_dir.value_or(c.output_dir);
        fs::path cache = out_dir / "cache";
        if (o.cache_dir) {
            cache = *o.cache_dir;
        } else if (const char* env = std::getenv("VIMU_CACHE_DIR"); env && *env) {
            cache = env;
        }
        const std::string version(toolkit_version());

        std::vector<Stage> stages;
        ExperimentSources src;
        {
            Stage st;
            st.name = "real";
            json inputs = json::array({file_entry(c, c.real.adapter)});
            for (const auto& f : c.real.files) inputs.push_back(file_entry(c, f));
            st.key_doc = {{"stage", "real"}, {"version", version}, {"window", window_json(c.window)}, {"inputs", inputs}};
            src.real = run_stage(st, cache, [&] { return real_windows(c); });
            stages.push_back(st);
            fmt::print(out, "real: {} window(s){}\n", src.real.size(), st.cached ? " (cached)" : "");
        }
        if (src.real.empty()) throw StageFailure("real", c.real.adapter.string(), "no labelled real windows");
        src.virtual_text = empty_like(src.real);
        src.virtual_video = empty_like(src.real);
        for (auto [name, cfg, target] : {std::tuple{"virtual_text", &c.virtual_text, &src.virtual_text},
                                         std::tuple{"virtual_video", &c.virtual_video, &src.virtual_video}}) {
            if (!*cfg) continue;
            Stage st;
            st.name = name;
            json inputs = json::array();
            for (const auto& f : (*cfg)->files) inputs.push_back(file_entry(c, f));
            st.key_doc = {{"stage", name},
                          {"version", version},
                          {"source", motion_source_json(**cfg)},
                          {"simulation", synth_params_json(c)},
                          {"window", window_json(c.window)},
                          {"inputs", inputs}};
            *target = run_stage(st, cache, [&] { return virtual_windows(c, **cfg, name); });
            stages.push_back(st);
            fmt::print(out, "{}: {} window(s){}\n", name, target->size(), st.cached ? " (cached)" : "");
        }

        EvalReport report;
        try {
            report = run_experiment_matrix(src, c.experiment);
        } catch (const Error& e) {
            throw StageFailure("evaluate", out_dir.string(), e.what());
        }
        const std::string config_hash = sha256_hex(c.source_json.dump());
        report.metadata["config_sha256"] = config_hash;
        report.metadata["toolkit_version"] = version;
        emit_report(report, out_dir);

        json outputs = json::array();
        for (const char* f : {"results.csv", "per_class.csv", "summary.md", "report.json"})
            outputs.push_back({{"path", f}, {"sha256", sha256_file(out_dir / f)}});
        json stage_list = json::array();
        for (const auto& st : stages) stage_list.push_back(stage_json(st));
        const json manifest = {{"format", "vimu-run"},
                               {"toolkit_version", version},
                               {"config", c.rel(o.config)},
                               {"config_sha256", config_hash},
                               {"started_at", started},
                               {"finished_at", utc_now()},
                               {"stages", stage_list},
                               {"outputs", outputs}};
        write_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
        fmt::print(out, "{} result row(s); summary at {}\n", report.entries.size(), (out_dir / "summary.md").string());
        return kExitOk;
    });
}

int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        EvalReport r;
        try {
            r = EvalReport::from_json(json::parse(read_file(o.report)));
        } catch (const json::exception& e) {
            throw ParseError(o.report.string(), 1, e.what());
        }
        emit_report(r, o.out_dir);
        fmt::print(out, "{} entr{} written to {}\n", r.entries.size(), r.entries.size() == 1 ? "y" : "ies",
                   o.out_dir.string());
        return kExitOk;
    });
}

int cmd_demo(const fs::path& dir, const DemoParams& params, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const fs::path cfg = write_demo_task(dir, params);
        fmt::print(out, "demo task written; run with: vimu run --config {}\n", cfg.string());
        return kExitOk;
    });
}

}  // namespace vimu
