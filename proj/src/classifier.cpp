#include "vimu/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "vimu/hash.hpp"
#include "vimu/rng.hpp"

namespace vimu {

void TrainParams::validate() const {
    if (n_trees < 1) throw InvalidArgument("n_trees must be >= 1");
    if (max_depth < 1) throw InvalidArgument("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw InvalidArgument("min_samples_leaf must be >= 1");
    if (features_per_split && *features_per_split < 1) throw InvalidArgument("features_per_split must be >= 1");
}

nlohmann::json TrainParams::to_json() const {
    nlohmann::json j{{"n_trees", n_trees}, {"max_depth", max_depth}, {"min_samples_leaf", min_samples_leaf},
                     {"bootstrap", bootstrap}, {"seed", seed}};
    j["features_per_split"] = features_per_split ? nlohmann::json(*features_per_split) : nlohmann::json("sqrt");
    return j;
}

TrainParams TrainParams::from_json(const nlohmann::json& j) {
    TrainParams p;
    p.n_trees = j.value("n_trees", p.n_trees);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    p.seed = j.value("seed", p.seed);
    if (j.contains("features_per_split")) {
        const auto& f = j.at("features_per_split");
        if (f.is_string()) {
            if (f.get<std::string>() != "sqrt") throw InvalidArgument("features_per_split must be \"sqrt\" or an integer");
        } else {
            p.features_per_split = f.get<std::size_t>();
        }
    }
    p.validate();
    return p;
}

const DecisionTree::Node& DecisionTree::leaf_for(std::span<const double> x) const {
    const Node* n = &nodes.front();
    while (!n->is_leaf()) n = &nodes[x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right];
    return *n;
}

std::size_t DecisionTree::vote(std::span<const double> x) const {
    const auto& c = leaf_for(x).counts;
    return static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
}

double gini_impurity(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) {
        if (c < 0.0) throw InvalidArgument("class counts must be nonnegative");
        total += c;
    }
    if (!(total > 0.0)) throw InvalidArgument("gini impurity of an empty node");
    double sq = 0.0;
    for (double c : counts) sq += (c / total) * (c / total);
    return 1.0 - sq;
}

namespace {

struct TrainingData {
    std::size_t n = 0, d = 0, k = 0;
    std::vector<double> x;  // n x d
    std::vector<std::uint32_t> y;
    std::vector<std::string> classes;
    std::string hash;
};

TrainingData prepare(const std::vector<FeatureVector>& fs, const TrainParams& params) {
    params.validate();
    if (fs.empty()) throw InvalidArgument("no training samples");
    TrainingData td;
    td.n = fs.size();
    td.d = fs.front().values.size();
    if (td.d == 0) throw InvalidArgument("feature vectors are empty");
    for (const auto& f : fs)
        if (f.values.size() != td.d) throw InvalidArgument("inconsistent feature vector lengths");
    for (const auto& f : fs) td.classes.push_back(f.label);
    std::sort(td.classes.begin(), td.classes.end());
    td.classes.erase(std::unique(td.classes.begin(), td.classes.end()), td.classes.end());
    if (td.classes.size() < 2) throw InvalidArgument("training data needs at least two classes");
    td.k = td.classes.size();

    std::vector<std::size_t> order(td.n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a].id < fs[b].id; });
    td.x.resize(td.n * td.d);
    td.y.resize(td.n);
    Sha256 h;
    for (std::size_t i = 0; i < td.n; ++i) {
        const auto& f = fs[order[i]];
        std::copy(f.values.begin(), f.values.end(), td.x.begin() + static_cast<std::ptrdiff_t>(i * td.d));
        td.y[i] = static_cast<std::uint32_t>(std::lower_bound(td.classes.begin(), td.classes.end(), f.label) - td.classes.begin());
        h.update(f.id).update("\x1f").update(f.label).update("\x1f");
        h.update(std::string_view(reinterpret_cast<const char*>(f.values.data()), f.values.size() * sizeof(double)));
    }
    td.hash = h.hex_digest();
    return td;
}

class TreeBuilder {
public:
    TreeBuilder(const TrainingData& td, const TrainParams& p, std::size_t tree_index)
        : td_(td), p_(p), rng_(substream(p.seed, static_cast<std::uint64_t>(tree_index))) {
        mtry_ = p.features_per_split ? std::min(*p.features_per_split, td.d)
                                     : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(td.d)))));
        feature_pool_.resize(td.d);
        left_counts_.resize(td.k);
        right_counts_.resize(td.k);
    }

    DecisionTree build() {
        std::vector<std::uint32_t> samples(td_.n);
        if (p_.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, td_.n - 1);
            for (auto& s : samples) s = static_cast<std::uint32_t>(pick(rng_));
            std::sort(samples.begin(), samples.end());
        } else {
            std::iota(samples.begin(), samples.end(), 0u);
        }
        samples_ = std::move(samples);
        grow(0, samples_.size(), 0);
        return std::move(tree_);
    }

private:
    struct Split {
        bool found = false;
        double gain = -1.0;
        std::size_t feature = 0;
        double threshold = 0.0;
    };

    std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        std::vector<std::uint32_t> counts(td_.k, 0);
        for (std::size_t i = begin; i < end; ++i) ++counts[td_.y[samples_[i]]];
        const std::size_t n = end - begin;
        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
        Split best;
        if (!pure && depth < p_.max_depth && n >= 2 * p_.min_samples_leaf) best = find_split(begin, end, counts);
        if (!best.found) {
            tree_.nodes[id].counts = std::move(counts);
            return id;
        }
        const auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin), samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::uint32_t s) { return value(s, best.feature) <= best.threshold; });
        const auto split_at = static_cast<std::size_t>(mid - samples_.begin());
        // Keep each child's sample order canonical so the result does not
        // depend on the partition algorithm.
        std::sort(samples_.begin() + static_cast<std::ptrdiff_t>(begin), mid);
        std::sort(mid, samples_.begin() + static_cast<std::ptrdiff_t>(end));
        const auto left = grow(begin, split_at, depth + 1);
        const auto right = grow(split_at, end, depth + 1);
        auto& node = tree_.nodes[id];
        node.feature = static_cast<int>(best.feature);
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    double value(std::uint32_t sample, std::size_t feature) const { return td_.x[sample * td_.d + feature]; }

    Split find_split(std::size_t begin, std::size_t end, const std::vector<std::uint32_t>& counts) {
        const std::size_t n = end - begin;
        const double nd = static_cast<double>(n);
        double parent_sq = 0.0;
        for (auto c : counts) parent_sq += static_cast<double>(c) * c;
        const double parent_gini = 1.0 - parent_sq / (nd * nd);

        std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
        for (std::size_t i = 0; i < mtry_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, td_.d - 1);
            std::swap(feature_pool_[i], feature_pool_[pick(rng_)]);
        }

        Split best;
        scratch_.resize(n);
        for (std::size_t fi = 0; fi < mtry_; ++fi) {
            const std::size_t f = feature_pool_[fi];
            for (std::size_t i = 0; i < n; ++i) scratch_[i] = {value(samples_[begin + i], f), td_.y[samples_[begin + i]]};
            std::sort(scratch_.begin(), scratch_.end());
            std::fill(left_counts_.begin(), left_counts_.end(), 0.0);
            for (std::size_t c = 0; c < td_.k; ++c) right_counts_[c] = counts[c];
            double left_sq = 0.0, right_sq = parent_sq;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto c = scratch_[i].second;
                left_sq += 2.0 * left_counts_[c] + 1.0;
                right_sq -= 2.0 * right_counts_[c] - 1.0;
                left_counts_[c] += 1.0;
                right_counts_[c] -= 1.0;
                const std::size_t nl = i + 1, nr = n - nl;
                if (nl < p_.min_samples_leaf || nr < p_.min_samples_leaf) continue;
                const double a = scratch_[i].first, b = scratch_[i + 1].first;
                if (!(a < b)) continue;
                const double nld = static_cast<double>(nl), nrd = static_cast<double>(nr);
                const double gini_l = 1.0 - left_sq / (nld * nld);
                const double gini_r = 1.0 - right_sq / (nrd * nrd);
                const double gain = parent_gini - (nld / nd) * gini_l - (nrd / nd) * gini_r;
                double thr = a + 0.5 * (b - a);
                if (!(thr < b)) thr = a;
                const bool better = !best.found || gain > best.gain ||
                                    (gain == best.gain && (f < best.feature || (f == best.feature && thr < best.threshold)));
                if (better) best = {true, gain, f, thr};
            }
        }
        return best;
    }

    const TrainingData& td_;
    const TrainParams& p_;
    Rng rng_;
    std::size_t mtry_ = 1;
    std::vector<std::uint32_t> samples_;
    std::vector<std::size_t> feature_pool_;
    std::vector<std::pair<double, std::uint32_t>> scratch_;
    std::vector<double> left_counts_, right_counts_;
    DecisionTree tree_;
};

ForestModel make_model(const TrainingData& td, const TrainParams& p) {
    ForestModel m;
    m.classes = td.classes;
    m.feature_length = td.d;
    m.params = p;
    m.data_hash = td.hash;
    m.trees.resize(p.n_trees);
    return m;
}

}  // namespace

ForestModel train_forest_serial(const std::vector<FeatureVector>& features, const TrainParams& params) {
    const auto td = prepare(features, params);
    auto m = make_model(td, params);
    for (std::size_t t = 0; t < params.n_trees; ++t) m.trees[t] = TreeBuilder(td, params, t).build();
    return m;
}

ForestModel train_forest(const std::vector<FeatureVector>& features, const TrainParams& params) {
    const auto td = prepare(features, params);
    auto m = make_model(td, params);
    const auto n = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < n; ++t) m.trees[static_cast<std::size_t>(t)] = TreeBuilder(td, params, static_cast<std::size_t>(t)).build();
    return m;
}

Prediction predict(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.feature_length)
        throw InvalidArgument(fmt::format("feature length {} does not match model ({})", x.size(), model.feature_length));
    std::vector<std::size_t> votes(model.classes.size(), 0);
    for (const auto& t : model.trees) ++votes[t.vote(x)];
    Prediction p;
    p.class_index = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    p.label = model.classes[p.class_index];
    p.vote_fraction.resize(votes.size());
    for (std::size_t c = 0; c < votes.size(); ++c)
        p.vote_fraction[c] = static_cast<double>(votes[c]) / static_cast<double>(model.trees.size());
    return p;
}

std::vector<Prediction> predict_batch_serial(const ForestModel& model, const std::vector<FeatureVector>& xs) {
    std::vector<Prediction> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(predict(model, x.values));
    return out;
}

std::vector<Prediction> predict_batch(const ForestModel& model, const std::vector<FeatureVector>& xs) {
    for (const auto& x : xs)
        if (x.values.size() != model.feature_length) throw InvalidArgument("feature length does not match model");
    std::vector<Prediction> out(xs.size());
    const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict(model, xs[static_cast<std::size_t>(i)].values);
    return out;
}

// ---------------------------------------------------------- serialization

nlohmann::json ForestModel::to_json() const {
    nlohmann::json j;
    j["format"] = "vimu-forest";
    j["version"] = 1;
    j["classes"] = classes;
    j["feature_length"] = feature_length;
    j["params"] = params.to_json();
    j["data_hash"] = data_hash;
    j["trees"] = nlohmann::json::array();
    for (const auto& t : trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) nodes.push_back({{"c", n.counts}});
            else nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
        }
        j["trees"].push_back(std::move(nodes));
    }
    return j;
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
    ForestModel m;
    try {
        if (j.at("format") != "vimu-forest" || j.at("version") != 1) throw InvalidArgument("not a version-1 vimu forest model");
        m.classes = j.at("classes").get<std::vector<std::string>>();
        m.feature_length = j.at("feature_length");
        m.params = TrainParams::from_json(j.at("params"));
        m.data_hash = j.at("data_hash");
        for (const auto& tj : j.at("trees")) {
            DecisionTree t;
            for (const auto& nj : tj) {
                DecisionTree::Node n;
                if (nj.contains("c")) {
                    n.counts = nj.at("c").get<std::vector<std::uint32_t>>();
                    if (n.counts.size() != m.classes.size()) throw InvalidArgument("leaf count vector has the wrong length");
                } else {
                    n.feature = nj.at("f");
                    n.threshold = nj.at("t");
                    n.left = nj.at("l");
                    n.right = nj.at("r");
                }
                t.nodes.push_back(std::move(n));
            }
            for (const auto& n : t.nodes)
                if (!n.is_leaf() && (n.left >= t.nodes.size() || n.right >= t.nodes.size() ||
                                     static_cast<std::size_t>(n.feature) >= m.feature_length))
                    throw InvalidArgument("tree node references out of range");
            if (t.nodes.empty()) throw InvalidArgument("empty tree");
            m.trees.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("malformed model: {}", e.what()));
    }
    return m;
}

std::string ForestModel::hash() const { return sha256_hex(to_json().dump()); }

}  // namespace vimu
