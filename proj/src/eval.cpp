#include "vimu/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "vimu/io_util.hpp"
#include "vimu/rng.hpp"

namespace vimu {

// ------------------------------------------------------------------ folds

void FoldSpec::validate() const {
    if (kind == Kind::stratified && k < 2) throw InvalidArgument("stratified cross-validation needs k >= 2");
}

std::string FoldSpec::name() const { return kind == Kind::loso ? "loso" : fmt::format("stratified-{}", k); }

std::vector<Fold> loso_folds(const Dataset& ds) {
    std::set<std::string> subjects;
    for (const auto& w : ds.windows)
        if (w.provenance == Provenance::real) subjects.insert(w.subject_id);
    if (subjects.size() < 2) throw InvalidArgument(fmt::format("leave-one-subject-out needs >= 2 subjects, found {}", subjects.size()));
    std::vector<Fold> folds;
    for (const auto& s : subjects) {
        Fold f;
        f.name = s;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const auto& w = ds.windows[i];
            (w.provenance == Provenance::real && w.subject_id == s ? f.test : f.train).push_back(i);
        }
        folds.push_back(std::move(f));
    }
    return folds;
}

std::vector<Fold> stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw InvalidArgument("stratified cross-validation needs k >= 2");
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.windows[i].provenance == Provenance::real) by_class[ds.windows[i].label].push_back(i);
    std::vector<std::size_t> fold_of(ds.size(), k);  // k marks "always train"
    for (auto& [label, idx] : by_class) {
        if (idx.size() < k)
            throw InvalidArgument(fmt::format("class '{}' has {} windows, fewer than k = {}", label, idx.size(), k));
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ds.windows[a].id < ds.windows[b].id; });
        Rng rng = substream(seed, "kfold/" + label);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < idx.size(); ++i) fold_of[idx[i]] = i % k;
    }
    std::vector<Fold> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        folds[f].name = fmt::format("fold{}", f);
        for (std::size_t i = 0; i < ds.size(); ++i) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
    }
    return folds;
}

std::vector<Fold> make_folds(const Dataset& ds, const FoldSpec& spec) {
    spec.validate();
    return spec.kind == FoldSpec::Kind::loso ? loso_folds(ds) : stratified_kfold(ds, spec.k, spec.seed);
}

// ---------------------------------------------------------------- metrics

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), k_(classes_.size()), counts_(k_ * k_, 0) {
    if (k_ == 0) throw InvalidArgument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
    if (truth >= k_ || predicted >= k_) throw InvalidArgument("class index out of range");
    counts_[truth * k_ + predicted] += n;
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) throw InvalidArgument("confusion matrices have different classes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

std::optional<std::size_t> ConfusionMatrix::index_of(const std::string& label) const {
    auto it = std::find(classes_.begin(), classes_.end(), label);
    if (it == classes_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - classes_.begin());
}

F1Scores macro_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw InvalidArgument("macro F1 of an empty confusion matrix");
    const std::size_t k = cm.size();
    F1Scores s;
    s.per_class.resize(k);
    double sum = 0.0;
    std::size_t included = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (std::size_t o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        if (tp + fn == 0 && tp + fp == 0) continue;
        double f1 = 0.0;
        if (tp > 0) {
            const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
            const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
            f1 = 2.0 * p * r / (p + r);
        }
        s.per_class[c] = f1;
        sum += f1;
        ++included;
    }
    s.macro = sum / static_cast<double>(included);
    return s;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

// ------------------------------------------------------------- experiment

namespace {

class FeatureCache {
public:
    FeatureCache(const EcdfSpec& spec) : spec_(spec) {}

    void add(const Dataset& ds) {
        auto fs = featurize(ds, spec_);
        for (auto& f : fs) map_.emplace(f.id, std::move(f));
    }

    std::vector<FeatureVector> lookup(const Dataset& ds) {
        Dataset missing;
        missing.layout = ds.layout;
        missing.spec = ds.spec;
        for (const auto& w : ds.windows)
            if (!map_.contains(w.id)) missing.windows.push_back(w);
        if (!missing.empty()) add(missing);
        std::vector<FeatureVector> out;
        out.reserve(ds.size());
        for (const auto& w : ds.windows) {
            const auto& f = map_.at(w.id);
            if (f.label != w.label || f.provenance != w.provenance) throw Error(fmt::format("feature cache conflict for window '{}'", w.id));
            out.push_back(f);
        }
        return out;
    }

private:
    EcdfSpec spec_;
    std::unordered_map<std::string, FeatureVector> map_;
};

void summarize(ReportEntry& e, std::size_t k) {
    std::vector<double> scores;
    for (const auto& r : e.repeats) scores.push_back(r.macro_f1);
    std::tie(e.mean, e.stdev) = mean_std(scores);
    e.per_class_mean.assign(k, std::nullopt);
    e.per_class_std.assign(k, std::nullopt);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> v;
        for (const auto& r : e.repeats)
            if (r.per_class[c]) v.push_back(*r.per_class[c]);
        if (v.empty()) continue;
        auto [m, s] = mean_std(v);
        e.per_class_mean[c] = m;
        e.per_class_std[c] = s;
    }
}

}  // namespace

EvalReport run_experiment_matrix(const ExperimentSources& src, const ExperimentParams& p) {
    if (src.real.empty()) throw InvalidArgument("no real windows to evaluate on");
    for (const auto& w : src.real.windows)
        if (w.provenance != Provenance::real) throw InvalidArgument(fmt::format("window '{}' in the real source is not real", w.id));
    if (p.configs.empty() || p.fractions.empty() || p.seeds.empty()) throw InvalidArgument("experiment matrix is empty");
    p.fold.validate();

    const Dataset& real = src.real;
    const Dataset vt = restrict_to(src.virtual_text, real);
    const Dataset vv = restrict_to(src.virtual_video, real);

    EvalReport report;
    report.classes = real.labels();
    report.fold_kind = p.fold.name();
    report.metadata["seeds"] = p.seeds;
    report.metadata["forest"] = p.forest.to_json();
    report.metadata["ecdf"] = {{"n_components", p.ecdf.n_components}, {"include_mean", p.ecdf.include_mean}};
    report.metadata["augment"] = {{"theta", p.augment.theta}, {"noise_std", p.augment.noise_std}, {"bias_halfwidth", p.augment.bias_halfwidth}};
    report.metadata["windows"] = {{"real", real.size()}, {"virtual_text", vt.size()}, {"virtual_video", vv.size()}};
    const std::size_t k = report.classes.size();

    FeatureCache base(p.ecdf);
    base.add(real);
    base.add(vt);
    base.add(vv);

    for (auto cfg : p.configs) {
        for (double fraction : p.fractions) {
            ReportEntry entry;
            entry.config = cfg;
            entry.fraction = fraction;
            for (auto seed : p.seeds) {
                FoldSpec fs = p.fold;
                fs.seed = derive_seed(seed, "folds");
                const auto folds = make_folds(real, fs);
                FeatureCache cache = base;  // augmented copies depend on the seed
                ConfusionMatrix total(report.classes);
                RepeatResult rr;
                rr.seed = seed;
                for (const auto& fold : folds) {
                    Dataset train_real = select(real, fold.train);
                    const Dataset test = select(real, fold.test);
                    if (test.empty()) continue;
                    if (fraction < 1.0) train_real = subsample_fraction(train_real, fraction, derive_seed(seed, "subsample/" + fold.name));
                    AugmentParams ap = p.augment;
                    ap.seed = derive_seed(seed, "augment");
                    const Dataset train = compose_configuration(train_real, vt, vv, cfg, ap);
                    for (const auto& w : test.windows)
                        if (w.provenance != Provenance::real) throw Error("test split contains a non-real window");

                    TrainParams tp = p.forest;
                    tp.seed = derive_seed(seed, "forest/" + fold.name);
                    const auto model = train_forest(cache.lookup(train), tp);
                    const auto test_features = cache.lookup(test);
                    const auto preds = predict_batch(model, test_features);
                    ConfusionMatrix cm(report.classes);
                    for (std::size_t i = 0; i < preds.size(); ++i)
                        cm.add(*cm.index_of(test_features[i].label), *cm.index_of(preds[i].label));
                    rr.folds.push_back({fold.name, macro_f1(cm).macro, test.size()});
                    rr.test_windows += test.size();
                    rr.train_windows += train.size();
                    total.add(cm);
                }
                const auto scores = macro_f1(total);
                rr.macro_f1 = scores.macro;
                rr.per_class = scores.per_class;
                entry.repeats.push_back(std::move(rr));
            }
            summarize(entry, k);
            report.entries.push_back(std::move(entry));
        }
    }
    return report;
}

// ----------------------------------------------------------------- report

namespace {

nlohmann::json opt_vec(const std::vector<std::optional<double>>& v) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& x : v) j.push_back(x ? nlohmann::json(*x) : nlohmann::json(nullptr));
    return j;
}

std::vector<std::optional<double>> opt_vec_from(const nlohmann::json& j) {
    std::vector<std::optional<double>> v;
    for (const auto& x : j) v.push_back(x.is_null() ? std::nullopt : std::optional<double>(x.get<double>()));
    return v;
}

std::string fixed(double v, int digits = 6) { return fmt::format("{:.{}f}", v, digits); }
std::string fraction_str(double f) { return fmt::format("{:g}", f); }

}  // namespace

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["format"] = "vimu-report";
    j["version"] = 1;
    j["classes"] = classes;
    j["fold_kind"] = fold_kind;
    j["metadata"] = metadata;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json ej{{"config", std::string(to_string(e.config))}, {"fraction", e.fraction}, {"mean", e.mean}, {"std", e.stdev}};
        ej["per_class_mean"] = opt_vec(e.per_class_mean);
        ej["per_class_std"] = opt_vec(e.per_class_std);
        ej["repeats"] = nlohmann::json::array();
        for (const auto& r : e.repeats) {
            nlohmann::json rj{{"seed", r.seed}, {"macro_f1", r.macro_f1}, {"test_windows", r.test_windows}, {"train_windows", r.train_windows}};
            rj["per_class"] = opt_vec(r.per_class);
            rj["folds"] = nlohmann::json::array();
            for (const auto& f : r.folds) rj["folds"].push_back({{"fold", f.fold}, {"macro_f1", f.macro_f1}, {"test_windows", f.test_windows}});
            ej["repeats"].push_back(std::move(rj));
        }
        j["entries"].push_back(std::move(ej));
    }
    return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        if (j.at("format") != "vimu-report") throw InvalidArgument("not a vimu report");
        r.classes = j.at("classes").get<std::vector<std::string>>();
        r.fold_kind = j.at("fold_kind");
        r.metadata = j.at("metadata");
        for (const auto& ej : j.at("entries")) {
            ReportEntry e;
            auto cfg = training_config_from_string(ej.at("config").get<std::string>());
            if (!cfg) throw InvalidArgument("unknown configuration in report");
            e.config = *cfg;
            e.fraction = ej.at("fraction");
            e.mean = ej.at("mean");
            e.stdev = ej.at("std");
            e.per_class_mean = opt_vec_from(ej.at("per_class_mean"));
            e.per_class_std = opt_vec_from(ej.at("per_class_std"));
            for (const auto& rj : ej.at("repeats")) {
                RepeatResult rr;
                rr.seed = rj.at("seed");
                rr.macro_f1 = rj.at("macro_f1");
                rr.test_windows = rj.at("test_windows");
                rr.train_windows = rj.at("train_windows");
                rr.per_class = opt_vec_from(rj.at("per_class"));
                for (const auto& fj : rj.at("folds")) rr.folds.push_back({fj.at("fold"), fj.at("macro_f1"), fj.at("test_windows")});
                e.repeats.push_back(std::move(rr));
            }
            r.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("malformed report: {}", e.what()));
    }
    return r;
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
    if (report.entries.empty()) throw InvalidArgument("refusing to emit an empty report");

    std::string results = "config,fraction,repeat,seed,fold,macro_f1\n";
    for (const auto& e : report.entries) {
        for (std::size_t r = 0; r < e.repeats.size(); ++r) {
            const auto& rr = e.repeats[r];
            for (const auto& f : rr.folds)
                results += fmt::format("{},{},{},{},{},{}\n", to_string(e.config), fraction_str(e.fraction), r, rr.seed, f.fold, fixed(f.macro_f1));
            results += fmt::format("{},{},{},{},all,{}\n", to_string(e.config), fraction_str(e.fraction), r, rr.seed, fixed(rr.macro_f1));
        }
    }

    std::string per_class = "config,fraction,class,f1_mean,f1_std\n";
    for (const auto& e : report.entries)
        for (std::size_t c = 0; c < report.classes.size(); ++c)
            per_class += fmt::format("{},{},{},{},{}\n", to_string(e.config), fraction_str(e.fraction), report.classes[c],
                                     e.per_class_mean[c] ? fixed(*e.per_class_mean[c]) : "",
                                     e.per_class_std[c] ? fixed(*e.per_class_std[c]) : "");

    std::string summary = "# Macro F1 by training configuration\n\n";
    summary += fmt::format("Cross-validation: {}. Repeats: {}. Classes: {}.\n\n", report.fold_kind,
                           report.entries.front().repeats.size(), report.classes.size());
    summary += "| Configuration | Real data | Macro F1 (mean ± std) |\n|---|---|---|\n";
    for (const auto& e : report.entries)
        summary += fmt::format("| {} | {}% | {} ± {} |\n", to_string(e.config), fmt::format("{:g}", e.fraction * 100.0), fixed(e.mean, 4), fixed(e.stdev, 4));

    write_file(dir / "results.csv", results);
    write_file(dir / "per_class.csv", per_class);
    write_file(dir / "summary.md", summary);
    write_file(dir / "report.json", report.to_json().dump(2) + "\n");
}

}  // namespace vimu
