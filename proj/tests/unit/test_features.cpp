#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>

#include "support.hpp"
#include "vimu/features.hpp"

using namespace vimu;

namespace {

// Textbook quantile: sort, then interpolate at h = p (n - 1).
double quantile_oracle(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    const double h = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - std::floor(h)) * (x[hi] - x[lo]);
}

Window random_window(std::size_t rows, Rng& rng) {
    const auto layout = vtest::layout_of({"a.acc_x", "a.acc_y", "a.acc_z", "a.gyro_x", "a.gyro_y", "a.gyro_z"});
    Window w = vtest::make_window(layout, rows, 0.0, "walk", "s1", Provenance::real, "r@0");
    std::normal_distribution<double> n(0, 4);
    for (auto& v : w.data.values) v = n(rng);
    return w;
}

}  // namespace

TEST_CASE("constant channel gives copies of the constant") {
    const std::vector<double> c(40, 3.25);
    CHECK(inverse_ecdf(c, 15) == std::vector<double>(15, 3.25));
    CHECK(inverse_ecdf(std::vector<double>{7.0}, 4) == std::vector<double>(4, 7.0));
}

TEST_CASE("two-point channel at quartiles") {
    const std::vector<double> x{1.0, 0.0};
    const auto q = inverse_ecdf(x, 2);
    CHECK(q == std::vector<double>{0.25, 0.75});
}

TEST_CASE("property: quantiles are sorted and match the textbook oracle") {
    Rng rng(11);
    std::uniform_int_distribution<int> len(1, 80);
    std::normal_distribution<double> n(0, 10);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> x(static_cast<std::size_t>(len(rng)));
        for (auto& v : x) v = n(rng);
        const std::size_t m = 1 + static_cast<std::size_t>(trial % 20);
        const auto q = inverse_ecdf(x, m);
        REQUIRE(q.size() == m);
        CHECK(std::is_sorted(q.begin(), q.end()));
        for (std::size_t i = 0; i < m; ++i)
            CHECK(q[i] == doctest::Approx(quantile_oracle(x, (static_cast<double>(i) + 0.5) / static_cast<double>(m))).epsilon(1e-12));
    }
}

TEST_CASE("inverse ecdf rejects empty input") {
    CHECK_THROWS_AS(inverse_ecdf(std::vector<double>{}, 3), InvalidArgument);
    CHECK_THROWS_AS(inverse_ecdf(std::vector<double>{1.0}, 0), InvalidArgument);
}

TEST_CASE("constant 2.0 channel gives sixteen 2.0 features") {
    const Window w = vtest::make_window(vtest::layout_of({"a.acc_x"}), 40, 2.0, "walk", "s", Provenance::real, "x");
    const FeatureVector f = ecdf_features(w, EcdfSpec{});
    CHECK(f.values == std::vector<double>(16, 2.0));
    CHECK(f.label == "walk");
    CHECK(f.id == "x");
}

TEST_CASE("feature layout: quantiles then mean, channel by channel") {
    Rng rng(12);
    const Window w = random_window(40, rng);
    const FeatureVector f = ecdf_features(w, EcdfSpec{});
    REQUIRE(f.values.size() == 6 * 16);
    for (std::size_t c = 0; c < 6; ++c) {
        std::vector<double> col;
        for (std::size_t r = 0; r < 40; ++r) col.push_back(w.data.at(r, c));
        const auto q = inverse_ecdf(col, 15);
        for (std::size_t i = 0; i < 15; ++i) CHECK(f.values[c * 16 + i] == q[i]);
        CHECK(f.values[c * 16 + 15] == doctest::Approx(std::accumulate(col.begin(), col.end(), 0.0) / 40.0));
    }
    EcdfSpec no_mean;
    no_mean.include_mean = false;
    CHECK(ecdf_features(w, no_mean).values.size() == 6 * 15);
    const auto names = feature_names(6, EcdfSpec{});
    CHECK(names.size() == 96);
    CHECK(names[0] == "ch0_q1");
    CHECK(names[15] == "ch0_mean");
    CHECK(names[16] == "ch1_q1");
}

TEST_CASE("property: time order does not matter") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const Window w = random_window(40, rng);
        std::vector<std::size_t> perm(40);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Window p = w;
        for (std::size_t r = 0; r < 40; ++r)
            for (std::size_t c = 0; c < 6; ++c) p.data.at(r, c) = w.data.at(perm[r], c);
        const auto a = ecdf_features(w, EcdfSpec{}).values;
        const auto b = ecdf_features(p, EcdfSpec{}).values;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i % 16 == 15) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));  // summation order
            else CHECK(a[i] == b[i]);
        }
    }
}

TEST_CASE("property: shifting a channel shifts every feature") {
    Rng rng(14);
    std::uniform_real_distribution<double> u(-20, 20);
    for (int trial = 0; trial < 100; ++trial) {
        const Window w = random_window(40, rng);
        const double c = u(rng);
        Window s = w;
        for (auto& v : s.data.values) v += c;
        const auto a = ecdf_features(w, EcdfSpec{}).values;
        const auto b = ecdf_features(s, EcdfSpec{}).values;
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b[i] - (a[i] + c)) < 1e-12);
    }
}

TEST_CASE("parallel featurization and csv round trip") {
    Rng rng(15);
    Dataset ds;
    ds.layout = random_window(40, rng).data.layout;
    for (int i = 0; i < 30; ++i) {
        Window w = random_window(40, rng);
        w.id = "r@" + std::to_string(i);
        w.provenance = i % 3 ? Provenance::real : Provenance::virtual_video;
        w.subject_id = i % 3 ? "s" + std::to_string(i % 4) : "";
        ds.windows.push_back(w);
    }
    const auto f = featurize(ds, EcdfSpec{});
    CHECK(f == featurize_serial(ds, EcdfSpec{}));
    const std::string csv = write_features_csv(f, 6, EcdfSpec{});
    CHECK(csv.rfind("ch0_q1,", 0) == 0);
    const auto back = read_features_csv(csv);
    REQUIRE(back.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(back[i].label == f[i].label);
        CHECK(back[i].subject_id == f[i].subject_id);
        CHECK(back[i].provenance == f[i].provenance);
        CHECK(back[i].id == f[i].id);
        for (std::size_t k = 0; k < f[i].values.size(); ++k)
            CHECK(std::abs(back[i].values[k] - f[i].values[k]) <= 1e-9 * std::max(1.0, std::abs(f[i].values[k])));
    }
    CHECK_THROWS_AS(read_features_csv("ch0_q1,label\n1,walk\n"), ParseError);
}
