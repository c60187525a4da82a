#include "vimu/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "vimu/hash.hpp"
#include "vimu/imu_sim.hpp"
#include "vimu/io_util.hpp"
#include "vimu/rng.hpp"

namespace vimu {

// ----------------------------------------------------------- adapter spec

namespace {

ColumnRef column_from_json(const nlohmann::json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_unsigned()) return j.get<std::size_t>();
    throw InvalidArgument(fmt::format("column reference must be a name or a non-negative index, got {}", j.dump()));
}

nlohmann::json column_to_json(const ColumnRef& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    return std::get<std::size_t>(c);
}

}  // namespace

AdapterSpec AdapterSpec::from_json(const nlohmann::json& j) {
    AdapterSpec s;
    try {
        if (j.contains("delimiter")) {
            const auto d = j.at("delimiter").get<std::string>();
            if (d == "whitespace" || d == " ") s.delimiter = ' ';
            else if (d == "\\t" || d == "\t" || d == "tab") s.delimiter = '\t';
            else if (d.size() == 1) s.delimiter = d[0];
            else throw InvalidArgument(fmt::format("unsupported delimiter '{}'", d));
        }
        s.has_header = j.value("has_header", true);
        if (j.contains("sample_rate")) s.sample_rate = j.at("sample_rate").get<double>();
        if (j.contains("timestamp_column")) s.timestamp_column = column_from_json(j.at("timestamp_column"));
        s.timestamp_scale = j.value("timestamp_scale", 1.0);
        if (j.contains("label_column")) s.label_column = column_from_json(j.at("label_column"));
        if (j.contains("label")) s.label = j.at("label").get<std::string>();
        if (j.contains("subject_column")) s.subject_column = column_from_json(j.at("subject_column"));
        if (j.contains("subject")) s.subject = j.at("subject").get<std::string>();
        if (j.contains("label_map")) s.label_map = j.at("label_map").get<std::map<std::string, std::string>>();
        if (j.contains("provenance")) s.provenance = provenance_from_string(j.at("provenance").get<std::string>());
        for (const auto& sj : j.at("sensors")) {
            SensorColumns sc{sj.at("name").get<std::string>(), {std::string{}, std::string{}, std::string{}}, sj.value("scale", 1.0)};
            const auto& cols = sj.at("columns");
            if (!cols.is_array() || cols.size() != 3) throw InvalidArgument(fmt::format("sensor '{}' must list three columns", sc.name));
            for (std::size_t a = 0; a < 3; ++a) sc.columns[a] = column_from_json(cols[a]);
            s.sensors.push_back(std::move(sc));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("adapter spec: {}", e.what()));
    }
    if (s.sensors.empty()) throw InvalidArgument("adapter spec maps no sensors");
    if (s.sample_rate && !(*s.sample_rate > 0)) throw InvalidArgument("adapter sample_rate must be positive");
    return s;
}

nlohmann::json AdapterSpec::to_json() const {
    nlohmann::json j;
    j["delimiter"] = delimiter == ' ' ? std::string("whitespace") : delimiter == '\t' ? std::string("tab") : std::string(1, delimiter);
    j["has_header"] = has_header;
    if (sample_rate) j["sample_rate"] = *sample_rate;
    if (timestamp_column) j["timestamp_column"] = column_to_json(*timestamp_column);
    j["timestamp_scale"] = timestamp_scale;
    if (label_column) j["label_column"] = column_to_json(*label_column);
    if (label) j["label"] = *label;
    if (subject_column) j["subject_column"] = column_to_json(*subject_column);
    if (subject) j["subject"] = *subject;
    if (!label_map.empty()) j["label_map"] = label_map;
    j["provenance"] = std::string(to_string(provenance));
    for (const auto& s : sensors) {
        nlohmann::json sj;
        sj["name"] = s.name;
        for (const auto& c : s.columns) sj["columns"].push_back(column_to_json(c));
        sj["scale"] = s.scale;
        j["sensors"].push_back(sj);
    }
    return j;
}

// ----------------------------------------------------------------- ingest

namespace {

std::vector<std::string_view> split_cells(std::string_view line, char delim) {
    if (delim != ' ') return split(line, delim);
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace

Recording ingest_column_mapped(std::string_view text, const AdapterSpec& spec, std::string_view source_id) {
    std::vector<std::string_view> header;
    bool header_done = !spec.has_header;
    std::size_t line_no = 0, start = 0;

    auto resolve = [&](const ColumnRef& c) -> std::size_t {
        if (const auto* idx = std::get_if<std::size_t>(&c)) return *idx;
        const auto& name = std::get<std::string>(c);
        if (!spec.has_header) throw InvalidArgument(fmt::format("column '{}' referenced by name but the adapter declares no header", name));
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError(source_id, 1, fmt::format("missing mapped column '{}'", name));
        return static_cast<std::size_t>(it - header.begin());
    };

    std::vector<std::array<std::size_t, 3>> chan_idx;
    std::optional<std::size_t> ts_idx, label_idx, subject_idx;
    auto resolve_all = [&] {
        for (const auto& s : spec.sensors) chan_idx.push_back({resolve(s.columns[0]), resolve(s.columns[1]), resolve(s.columns[2])});
        if (spec.timestamp_column) ts_idx = resolve(*spec.timestamp_column);
        if (spec.label_column) label_idx = resolve(*spec.label_column);
        if (spec.subject_column) subject_idx = resolve(*spec.subject_column);
        if (!header.empty()) {
            auto check = [&](std::size_t i) {
                if (i >= header.size()) throw ParseError(source_id, 1, fmt::format("missing mapped column #{}", i));
            };
            for (const auto& c : chan_idx)
                for (auto i : c) check(i);
            for (const auto& o : {ts_idx, label_idx, subject_idx})
                if (o) check(*o);
        }
    };
    if (header_done) resolve_all();

    auto layout = std::make_shared<ChannelLayout>();
    for (const auto& s : spec.sensors)
        for (char a : {'x', 'y', 'z'}) layout->push_back({s.name, a});

    Recording rec;
    rec.layout = layout;
    rec.provenance = spec.provenance;
    rec.source_id = std::string(source_id);
    std::vector<double> stamps;
    std::optional<std::string> subject;
    std::vector<double> row(layout->size());

    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty() || line.starts_with("#")) continue;
        const auto cells = split_cells(line, spec.delimiter);
        if (!header_done) {
            header = cells;
            for (auto& h : header) h = trim(h);
            header_done = true;
            resolve_all();
            continue;
        }
        bool ok = true;
        auto cell = [&](std::size_t i) -> std::string_view {
            if (i >= cells.size()) {
                ok = false;
                return {};
            }
            return cells[i];
        };
        for (std::size_t s = 0; s < chan_idx.size() && ok; ++s) {
            for (std::size_t a = 0; a < 3 && ok; ++a) {
                double v = 0;
                if (!parse_double(cell(chan_idx[s][a]), v)) ok = false;
                row[3 * s + a] = v * spec.sensors[s].scale;
            }
        }
        double ts = 0;
        if (ok && ts_idx && !parse_double(cell(*ts_idx), ts)) ok = false;
        std::string label;
        if (ok && label_idx) {
            const auto raw = trim(cell(*label_idx));
            if (!ok || raw.empty()) ok = false;
            label = std::string(raw);
            if (!spec.label_map.empty()) {
                auto it = spec.label_map.find(label);
                label = it == spec.label_map.end() ? std::string{} : it->second;
            }
        } else if (!label_idx) {
            label = spec.label.value_or("");
        }
        std::string subj;
        if (ok && subject_idx) subj = std::string(trim(cell(*subject_idx)));
        if (!ok) {
            ++rec.dropped_rows;
            continue;
        }
        if (subject_idx) {
            if (!subject) subject = subj;
            else if (*subject != subj)
                throw ParseError(source_id, line_no, fmt::format("subject changes from '{}' to '{}'; split the file per subject", *subject, subj));
        }
        rec.values.insert(rec.values.end(), row.begin(), row.end());
        rec.labels.push_back(std::move(label));
        if (ts_idx) stamps.push_back(ts * spec.timestamp_scale);
    }
    if (rec.samples() == 0) throw ParseError(source_id, line_no, "no usable rows");
    rec.subject_id = subject.value_or(spec.subject.value_or(""));
    if (spec.sample_rate) {
        rec.sample_rate = *spec.sample_rate;
    } else {
        if (stamps.size() < 2) throw InvalidArgument(fmt::format("{}: sample rate not given and not inferable from timestamps", source_id));
        std::vector<double> dt;
        for (std::size_t i = 1; i < stamps.size(); ++i)
            if (stamps[i] > stamps[i - 1]) dt.push_back(stamps[i] - stamps[i - 1]);
        if (dt.empty()) throw InvalidArgument(fmt::format("{}: timestamps never increase", source_id));
        std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
        rec.sample_rate = 1.0 / dt[dt.size() / 2];
    }
    rec.validate();
    return rec;
}

std::pair<std::string, AdapterSpec> export_recording(const Recording& rec) {
    rec.validate();
    if (!is_triple_grouped(*rec.layout)) throw InvalidArgument("export needs a triple-grouped layout");
    std::string out = "t,label,subject";
    for (const auto& c : *rec.layout) out += "," + c.name();
    out += '\n';
    const std::size_t c = rec.channels();
    for (std::size_t i = 0; i < rec.samples(); ++i) {
        out += format_double(static_cast<double>(i) / rec.sample_rate);
        out += ',';
        out += rec.labels.empty() ? std::string("-") : (rec.labels[i].empty() ? std::string("-") : rec.labels[i]);
        out += ',';
        out += rec.subject_id.empty() ? std::string("-") : rec.subject_id;
        for (std::size_t k = 0; k < c; ++k) {
            out += ',';
            out += format_double(rec.values[i * c + k]);
        }
        out += '\n';
    }
    AdapterSpec spec;
    spec.sample_rate = rec.sample_rate;
    spec.timestamp_column = std::string("t");
    spec.label_column = std::string("label");
    spec.provenance = rec.provenance;
    if (!rec.subject_id.empty()) spec.subject_column = std::string("subject");
    std::set<std::string> labels(rec.labels.begin(), rec.labels.end());
    for (const auto& l : labels)
        if (!l.empty()) spec.label_map[l] = l;
    spec.label_map["-"] = "";
    for (std::size_t k = 0; k < c; k += 3) {
        const auto& l = *rec.layout;
        spec.sensors.push_back({l[k].sensor, {l[k].name(), l[k + 1].name(), l[k + 2].name()}, 1.0});
    }
    return {std::move(out), std::move(spec)};
}

// -------------------------------------------------------------- windowing

std::size_t window_count(std::size_t samples, std::size_t window, std::size_t stride) {
    if (window == 0 || stride == 0) throw InvalidArgument("window and stride must be positive");
    return samples < window ? 0 : (samples - window) / stride + 1;
}

Dataset sliding_windows(const Recording& rec, const WindowSpec& spec) {
    spec.validate();
    rec.validate();
    if (std::abs(rec.sample_rate - spec.rate) > 1e-9 * spec.rate)
        throw InvalidArgument(fmt::format("recording '{}' is at {} Hz; resample to {} Hz before windowing", rec.source_id, rec.sample_rate, spec.rate));
    const std::size_t t = spec.window_samples(), stride = spec.stride_samples(), c = rec.channels();
    const std::size_t n = window_count(rec.samples(), t, stride);
    Dataset ds;
    ds.layout = rec.layout;
    ds.spec = spec;
    std::vector<std::pair<std::string_view, std::size_t>> tally;  // first-occurrence order
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t s0 = w * stride;
        tally.clear();
        for (std::size_t i = s0; i < s0 + t; ++i) {
            std::string_view l = rec.labels.empty() ? std::string_view{} : std::string_view(rec.labels[i]);
            auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& p) { return p.first == l; });
            if (it == tally.end()) tally.emplace_back(l, 1);
            else ++it->second;
        }
        const auto* best = &tally.front();
        for (const auto& p : tally)
            if (p.second > best->second) best = &p;
        if (best->first.empty() || 2 * best->second < t) continue;
        Window win;
        win.data = SegmentMatrix(t, c, rec.layout);
        std::copy_n(rec.values.begin() + static_cast<std::ptrdiff_t>(s0 * c), t * c, win.data.values.begin());
        win.label = std::string(best->first);
        win.subject_id = rec.subject_id;
        win.provenance = rec.provenance;
        win.id = fmt::format("{}@{}", rec.source_id, s0);
        ds.windows.push_back(std::move(win));
    }
    return ds;
}

namespace {

Dataset concat_windowed(std::vector<Dataset>& parts, const WindowSpec& spec) {
    Dataset out;
    out.spec = spec;
    for (auto& p : parts) {
        if (!out.layout) out.layout = p.layout;
        else if (p.layout && !(*p.layout == *out.layout)) throw InvalidArgument("recordings have different channel layouts");
        std::move(p.windows.begin(), p.windows.end(), std::back_inserter(out.windows));
    }
    return out;
}

Dataset window_one(const Recording& r, const WindowSpec& spec) {
    return sliding_windows(std::abs(r.sample_rate - spec.rate) > 1e-9 * spec.rate ? resample_recording(r, spec.rate) : r, spec);
}

}  // namespace

Dataset window_recordings_serial(const std::vector<Recording>& recs, const WindowSpec& spec) {
    std::vector<Dataset> parts;
    for (const auto& r : recs) parts.push_back(window_one(r, spec));
    return concat_windowed(parts, spec);
}

Dataset window_recordings(const std::vector<Recording>& recs, const WindowSpec& spec) {
    spec.validate();
    std::vector<Dataset> parts(recs.size());
    std::vector<std::string> errors(recs.size());
    const auto n = static_cast<std::ptrdiff_t>(recs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            parts[k] = window_one(recs[k], spec);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw InvalidArgument(e);
    return concat_windowed(parts, spec);
}

// ------------------------------------------------------------ composition

std::string_view to_string(TrainingConfig c) {
    switch (c) {
        case TrainingConfig::real_only: return "RealOnly";
        case TrainingConfig::real_imugpt: return "Real+IMUGPT";
        case TrainingConfig::real_imutube: return "Real+IMUTube";
        case TrainingConfig::real_imugpt_imutube: return "Real+IMUGPT+IMUTube";
        case TrainingConfig::real_augmentation: return "Real+Augmentation";
    }
    return "?";
}

std::optional<TrainingConfig> training_config_from_string(std::string_view s) {
    for (auto c : kAllConfigs)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

Dataset restrict_to(const Dataset& v, const Dataset& real) {
    if (!real.layout) throw InvalidArgument("real dataset has no layout");
    Dataset out;
    out.layout = real.layout;
    out.spec = real.spec;
    out.meta = v.meta;
    if (v.empty()) return out;
    if (!(v.spec == real.spec)) throw InvalidArgument("virtual and real datasets use different window specs");
    std::vector<std::size_t> cols;
    for (const auto& ch : *real.layout) {
        auto it = std::find(v.layout->begin(), v.layout->end(), ch);
        if (it == v.layout->end())
            throw InvalidArgument(fmt::format("layout mismatch: virtual data lacks real channel '{}'", ch.name()));
        cols.push_back(static_cast<std::size_t>(it - v.layout->begin()));
    }
    const auto labels = real.labels();
    const std::set<std::string> keep(labels.begin(), labels.end());
    const std::size_t t = real.spec.window_samples();
    for (const auto& w : v.windows) {
        if (!keep.contains(w.label)) continue;
        Window c = w;
        c.data = SegmentMatrix(t, cols.size(), real.layout);
        for (std::size_t r = 0; r < t; ++r)
            for (std::size_t k = 0; k < cols.size(); ++k) c.data.at(r, k) = w.data.at(r, cols[k]);
        out.windows.push_back(std::move(c));
    }
    return out;
}

Dataset compose_configuration(const Dataset& real, const Dataset& virtual_text, const Dataset& virtual_video,
                              TrainingConfig cfg, const AugmentParams& augment) {
    if (real.empty()) throw InvalidArgument("real training dataset is empty");
    switch (cfg) {
        case TrainingConfig::real_only: return real;
        case TrainingConfig::real_augmentation: return augment_dataset(real, augment);
        default: break;
    }
    Dataset out = real;
    if (cfg == TrainingConfig::real_imugpt || cfg == TrainingConfig::real_imugpt_imutube) append(out, restrict_to(virtual_text, real));
    if (cfg == TrainingConfig::real_imutube || cfg == TrainingConfig::real_imugpt_imutube) append(out, restrict_to(virtual_video, real));
    return out;
}

Dataset subsample_fraction(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) throw InvalidArgument(fmt::format("fraction {} outside (0, 1]", fraction));
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.windows[i].label].push_back(i);
    std::vector<char> keep(ds.size(), 0);
    for (auto& [label, idx] : by_class) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ds.windows[a].id < ds.windows[b].id; });
        Rng rng = substream(seed, "subsample/" + label);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size()))));
        for (std::size_t i = 0; i < k; ++i) keep[idx[i]] = 1;
    }
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (keep[i]) chosen.push_back(i);
    Dataset out = select(ds, chosen);
    out.meta.seeds["subsample"] = seed;
    return out;
}

// ------------------------------------------------------------ persistence

namespace {

constexpr int kDatasetSchema = 1;

std::string window_csv(const Window& w, const ChannelLayout& layout) {
    std::string out;
    for (std::size_t k = 0; k < layout.size(); ++k) {
        if (k) out += ',';
        out += layout[k].name();
    }
    out += '\n';
    for (std::size_t r = 0; r < w.data.rows; ++r) {
        for (std::size_t k = 0; k < w.data.cols; ++k) {
            if (k) out += ',';
            out += format_double(w.data.at(r, k));
        }
        out += '\n';
    }
    return out;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    ds.validate();
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    fs::remove_all(dir / "windows");
    fs::remove(dir / "manifest.json");
    nlohmann::json m;
    m["format"] = "vimu-dataset";
    m["schema_version"] = kDatasetSchema;
    m["window_spec"] = {{"window_seconds", ds.spec.window_seconds}, {"overlap_seconds", ds.spec.overlap_seconds}, {"rate", ds.spec.rate}};
    m["layout"] = nlohmann::json::array();
    for (const auto& c : *ds.layout) m["layout"].push_back(c.name());
    m["seeds"] = ds.meta.seeds;
    m["sources"] = nlohmann::json::array();
    for (const auto& s : ds.meta.sources) m["sources"].push_back({{"path", s.path}, {"sha256", s.sha256}});
    m["window_count"] = ds.size();
    m["windows"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& w = ds.windows[i];
        const std::string rel = fmt::format("windows/{:06d}.csv", i);
        const std::string body = window_csv(w, *ds.layout);
        write_file(dir / rel, body);
        m["windows"].push_back({{"file", rel},
                                {"id", w.id},
                                {"label", w.label},
                                {"subject", w.subject_id},
                                {"provenance", std::string(to_string(w.provenance))},
                                {"origin", w.origin_id},
                                {"sha256", sha256_hex(body)}});
    }
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(fmt::format("corrupt manifest '{}': {}", manifest_path.string(), e.what()));
    }
    Dataset ds;
    try {
        if (m.at("format") != "vimu-dataset" || m.at("schema_version") != kDatasetSchema)
            throw Error(fmt::format("'{}' is not a schema-{} dataset manifest", manifest_path.string(), kDatasetSchema));
        const auto& ws = m.at("window_spec");
        ds.spec = {ws.at("window_seconds").get<double>(), ws.at("overlap_seconds").get<double>(), ws.at("rate").get<double>()};
        ds.spec.validate();
        auto layout = std::make_shared<ChannelLayout>();
        for (const auto& c : m.at("layout")) layout->push_back(ChannelId::parse(c.get<std::string>()));
        ds.layout = layout;
        ds.meta.seeds = m.at("seeds").get<std::map<std::string, std::uint64_t>>();
        for (const auto& s : m.at("sources")) ds.meta.sources.push_back({s.at("path"), s.at("sha256")});
        const auto& entries = m.at("windows");
        if (m.at("window_count").get<std::size_t>() != entries.size())
            throw Error(fmt::format("corrupt manifest '{}': window_count {} but {} entries", manifest_path.string(),
                                    m.at("window_count").get<std::size_t>(), entries.size()));
        const std::size_t t = ds.spec.window_samples();
        for (const auto& e : entries) {
            const auto rel = e.at("file").get<std::string>();
            const std::string body = read_file(dir / rel);
            if (sha256_hex(body) != e.at("sha256").get<std::string>())
                throw Error(fmt::format("checksum mismatch for '{}'", (dir / rel).string()));
            Window w;
            w.id = e.at("id");
            w.label = e.at("label");
            w.subject_id = e.at("subject");
            w.provenance = provenance_from_string(e.at("provenance").get<std::string>());
            w.origin_id = e.at("origin");
            w.data = SegmentMatrix(t, layout->size(), ds.layout);
            const auto lines = split(body, '\n');
            if (lines.size() < t + 1) throw Error(fmt::format("'{}' has fewer than {} rows", rel, t));
            for (std::size_t r = 0; r < t; ++r) {
                const auto cells = split(lines[r + 1], ',');
                if (cells.size() != layout->size()) throw ParseError(rel, r + 2, "row length does not match layout");
                for (std::size_t k = 0; k < cells.size(); ++k)
                    if (!parse_double(cells[k], w.data.at(r, k))) throw ParseError(rel, r + 2, "non-numeric cell");
            }
            ds.windows.push_back(std::move(w));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(fmt::format("corrupt manifest '{}': {}", manifest_path.string(), e.what()));
    }
    ds.validate();
    return ds;
}

}  // namespace vimu
