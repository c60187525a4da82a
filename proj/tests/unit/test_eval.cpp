#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <doctest.h>
#include <fmt/format.h>

#include "support.hpp"
#include "vimu/eval.hpp"
#include "vimu/io_util.hpp"

using namespace vimu;

namespace {

const LayoutPtr kLayout = vtest::layout_of({"w.acc_x", "w.acc_y", "w.acc_z"});

// Real windows whose level encodes the class, with noise so folds disagree.
Dataset toy_real(std::size_t subjects, std::size_t per_class, Rng& rng, std::vector<std::string> classes = {"jog", "walk"}) {
    Dataset ds;
    ds.layout = kLayout;
    std::normal_distribution<double> n(0, 0.8);
    for (std::size_t s = 0; s < subjects; ++s)
        for (std::size_t c = 0; c < classes.size(); ++c)
            for (std::size_t i = 0; i < per_class; ++i) {
                Window w = vtest::make_window(kLayout, 40, 0.0, classes[c], fmt::format("s{}", s), Provenance::real,
                                              fmt::format("s{}-{}@{}", s, classes[c], i));
                for (auto& v : w.data.values) v = static_cast<double>(c) + n(rng);
                ds.windows.push_back(std::move(w));
            }
    return ds;
}

Dataset toy_virtual(Provenance prov, std::size_t per_class, Rng& rng) {
    Dataset ds = toy_real(1, per_class, rng, {"jog", "walk", "squat"});
    for (auto& w : ds.windows) {
        w.provenance = prov;
        w.subject_id = "";
        w.id = std::string(to_string(prov)) + "/" + w.id;
    }
    return ds;
}

ConfusionMatrix cm_of(std::vector<std::vector<std::uint64_t>> rows, std::vector<std::string> classes) {
    ConfusionMatrix cm(std::move(classes));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t p = 0; p < rows[t].size(); ++p) cm.add(t, p, rows[t][p]);
    return cm;
}

void check_partition(const Dataset& ds, const std::vector<Fold>& folds) {
    std::vector<int> in_test(ds.size(), 0);
    for (const auto& f : folds) {
        std::set<std::size_t> tr(f.train.begin(), f.train.end()), te(f.test.begin(), f.test.end());
        for (auto i : f.test) {
            CHECK_FALSE(tr.contains(i));
            CHECK(ds.windows[i].provenance == Provenance::real);
            ++in_test[i];
        }
        CHECK(tr.size() + te.size() == ds.size());
    }
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(in_test[i] == (ds.windows[i].provenance == Provenance::real ? 1 : 0));
}

}  // namespace

TEST_CASE("leave-one-subject-out with three subjects") {
    Rng rng(1);
    const Dataset ds = toy_real(3, 4, rng);
    const auto folds = loso_folds(ds);
    REQUIRE(folds.size() == 3);
    for (const auto& f : folds) {
        std::set<std::string> subj;
        for (auto i : f.test) subj.insert(ds.windows[i].subject_id);
        CHECK(subj.size() == 1);
        CHECK(f.test.size() == 8);
    }
    check_partition(ds, folds);
    CHECK_THROWS_AS(loso_folds(toy_real(1, 4, rng)), InvalidArgument);
}

TEST_CASE("virtual windows stay in every training split") {
    Rng rng(2);
    Dataset ds = toy_real(2, 3, rng);
    append(ds, toy_virtual(Provenance::virtual_text, 2, rng));
    const auto folds = loso_folds(ds);
    REQUIRE(folds.size() == 2);
    for (const auto& f : folds)
        for (std::size_t i = 12; i < ds.size(); ++i) CHECK(std::find(f.train.begin(), f.train.end(), i) != f.train.end());
    check_partition(ds, folds);
}

TEST_CASE("stratified five folds of ten per class") {
    Rng rng(3);
    const Dataset ds = toy_real(1, 10, rng, {"a", "b", "c"});
    const auto folds = stratified_kfold(ds, 5, 17);
    REQUIRE(folds.size() == 5);
    for (const auto& f : folds)
        for (const char* c : {"a", "b", "c"})
            CHECK(std::count_if(f.test.begin(), f.test.end(), [&](std::size_t i) { return ds.windows[i].label == c; }) == 2);
    check_partition(ds, folds);

    const auto other = stratified_kfold(ds, 5, 29);
    bool differ = false;
    for (std::size_t k = 0; k < 5; ++k) differ |= std::set<std::size_t>(other[k].test.begin(), other[k].test.end()) !=
                                                  std::set<std::size_t>(folds[k].test.begin(), folds[k].test.end());
    CHECK(differ);
    CHECK_THROWS_AS(stratified_kfold(toy_real(1, 4, rng), 5, 1), InvalidArgument);
    CHECK_THROWS_AS(stratified_kfold(ds, 1, 1), InvalidArgument);
}

TEST_CASE("property: uneven classes deal to folds within one") {
    Rng rng(4);
    for (std::size_t n = 5; n < 23; ++n) {
        const Dataset ds = toy_real(1, n, rng);
        const auto folds = stratified_kfold(ds, 5, n);
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& f : folds) {
            lo = std::min(lo, f.test.size());
            hi = std::max(hi, f.test.size());
        }
        CHECK(hi - lo <= 2);  // two classes, each off by at most one
        check_partition(ds, folds);
    }
}

TEST_CASE("macro F1 worked examples") {
    CHECK(macro_f1(cm_of({{3, 0}, {0, 5}}, {"A", "B"})).macro == 1.0);
    // A: TP 1, FP 1, FN 0; B: TP 1, FP 0, FN 1
    const F1Scores s = macro_f1(cm_of({{1, 0}, {1, 1}}, {"A", "B"}));
    CHECK(s.macro == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(s.macro - 0.6667) < 5e-5);
    CHECK(*s.per_class[0] == doctest::Approx(2.0 / 3.0));
    CHECK(*s.per_class[1] == doctest::Approx(2.0 / 3.0));
    CHECK(macro_f1(cm_of({{0, 4}, {2, 0}}, {"A", "B"})).macro == 0.0);
}

TEST_CASE("absent classes leave the average, never-predicted ones score zero") {
    const F1Scores s = macro_f1(cm_of({{2, 0, 0}, {1, 0, 0}, {0, 0, 0}}, {"A", "B", "C"}));
    CHECK_FALSE(s.per_class[2].has_value());
    CHECK(*s.per_class[1] == 0.0);
    CHECK(s.macro == doctest::Approx((0.8 + 0.0) / 2));
    CHECK_THROWS_AS(macro_f1(ConfusionMatrix({"A", "B"})), InvalidArgument);
}

TEST_CASE("property: macro F1 ignores class order") {
    Rng rng(5);
    std::uniform_int_distribution<int> u(0, 9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + static_cast<std::size_t>(trial % 4);
        std::vector<std::vector<std::uint64_t>> rows(k, std::vector<std::uint64_t>(k));
        for (auto& r : rows)
            for (auto& v : r) v = static_cast<std::uint64_t>(u(rng));
        rows[0][0] += 1;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < k; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::vector<std::uint64_t>> prow(k, std::vector<std::uint64_t>(k));
        std::vector<std::string> pnames(k);
        for (std::size_t i = 0; i < k; ++i) {
            pnames[i] = names[perm[i]];
            for (std::size_t j = 0; j < k; ++j) prow[i][j] = rows[perm[i]][perm[j]];
        }
        CHECK(macro_f1(cm_of(rows, names)).macro == doctest::Approx(macro_f1(cm_of(prow, pnames)).macro).epsilon(1e-12));
    }
}

TEST_CASE("mean and population standard deviation") {
    const auto [m, s] = mean_std({0.8, 0.9, 1.0});
    CHECK(m == doctest::Approx(0.9));
    CHECK(s == doctest::Approx(std::sqrt(0.02 / 3.0)).epsilon(1e-12));
}

TEST_CASE("experiment matrix: shape, test purity, totals") {
    Rng rng(6);
    ExperimentSources src;
    src.real = toy_real(3, 10, rng);
    src.virtual_text = toy_virtual(Provenance::virtual_text, 8, rng);
    src.virtual_video = toy_virtual(Provenance::virtual_video, 5, rng);
    ExperimentParams p;
    p.forest.n_trees = 8;
    const EvalReport r = run_experiment_matrix(src, p);
    REQUIRE(r.entries.size() == 5 * 2);
    CHECK(r.classes == std::vector<std::string>{"jog", "walk"});
    CHECK(r.fold_kind == "loso");
    for (const auto& e : r.entries) {
        REQUIRE(e.repeats.size() == 3);
        std::vector<double> f1s;
        for (const auto& rr : e.repeats) {
            CHECK(rr.test_windows == 60);  // every real window tested once, at either fraction
            CHECK(rr.folds.size() == 3);
            f1s.push_back(rr.macro_f1);
            std::size_t fold_total = 0;
            for (const auto& f : rr.folds) fold_total += f.test_windows;
            CHECK(fold_total == rr.test_windows);
        }
        const double mean = (f1s[0] + f1s[1] + f1s[2]) / 3;
        double var = 0;
        for (double x : f1s) var += (x - mean) * (x - mean);
        CHECK(e.mean == doctest::Approx(mean).epsilon(1e-12));
        CHECK(e.stdev == doctest::Approx(std::sqrt(var / 3)).epsilon(1e-12).scale(1));
        CHECK(e.stdev >= 0);
        for (const auto& pc : e.per_class_mean)
            if (pc) CHECK((*pc >= 0 && *pc <= 1));
    }
    auto train_of = [&](TrainingConfig c, double f) {
        for (const auto& e : r.entries)
            if (e.config == c && e.fraction == f) return e.repeats[0].train_windows;
        return std::size_t{0};
    };
    // three folds, 40 real training windows each; squat windows never enter
    CHECK(train_of(TrainingConfig::real_only, 1.0) == 3 * 40);
    CHECK(train_of(TrainingConfig::real_only, 0.1) == 3 * 4);
    CHECK(train_of(TrainingConfig::real_imugpt, 1.0) == 3 * (40 + 16));
    CHECK(train_of(TrainingConfig::real_imugpt_imutube, 0.1) == 3 * (4 + 16 + 10));
    CHECK(train_of(TrainingConfig::real_augmentation, 0.1) == 3 * 16);
    CHECK(r.metadata.at("windows").at("virtual_text") == 16);

    CHECK(run_experiment_matrix(src, p).to_json() == r.to_json());
    p.fold.kind = FoldSpec::Kind::stratified;
    p.configs = {TrainingConfig::real_only};
    CHECK(run_experiment_matrix(src, p).fold_kind == "stratified-5");
}

TEST_CASE("experiment matrix rejects a non-real evaluation source") {
    Rng rng(7);
    ExperimentSources src;
    src.real = toy_virtual(Provenance::virtual_text, 4, rng);
    CHECK_THROWS_AS(run_experiment_matrix(src, ExperimentParams{}), InvalidArgument);
}

TEST_CASE("report emission") {
    Rng rng(8);
    ExperimentSources src;
    src.real = toy_real(2, 6, rng);
    ExperimentParams p;
    p.forest.n_trees = 4;
    p.configs = {TrainingConfig::real_only, TrainingConfig::real_augmentation};
    const EvalReport r = run_experiment_matrix(src, p);

    vtest::TempDir a, b;
    emit_report(r, a.path());
    emit_report(EvalReport::from_json(r.to_json()), b.path());
    for (const char* f : {"results.csv", "per_class.csv", "summary.md", "report.json"})
        CHECK(read_file(a.path() / f) == read_file(b.path() / f));

    const std::string summary = read_file(a / "summary.md");
    CHECK(std::count(summary.begin(), summary.end(), '\n') - 6 == 4);  // 2 configs x 2 fractions
    CHECK(summary.find("| Real+Augmentation | 10% |") != std::string::npos);
    const std::string results = read_file(a / "results.csv");
    // 4 entries x 3 repeats x (2 folds + "all")
    CHECK(std::count(results.begin(), results.end(), '\n') == 1 + 4 * 3 * 3);

    vtest::TempDir c;
    CHECK_THROWS_AS(emit_report(EvalReport{}, c.path()), InvalidArgument);
    CHECK_FALSE(std::filesystem::exists(c / "results.csv"));
}

TEST_CASE("confusion matrix bookkeeping") {
    ConfusionMatrix a({"x", "y"});
    a.add(0, 1, 3);
    a.add(1, 1);
    ConfusionMatrix b({"x", "y"});
    b.add(0, 0, 2);
    a.add(b);
    CHECK(a.total() == 6);
    CHECK(a.at(0, 1) == 3);
    CHECK(a.index_of("y") == 1);
    CHECK_FALSE(a.index_of("z").has_value());
    CHECK_THROWS_AS(a.add(ConfusionMatrix({"x", "z"})), InvalidArgument);
    CHECK_THROWS_AS(a.add(2, 0), InvalidArgument);
}
