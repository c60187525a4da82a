// Serial references against their OpenMP counterparts on demo-sized inputs.
// Run with --benchmark_filter to pick kernels; thread count from OMP_NUM_THREADS.

#include <omp.h>

#include <cmath>
#include <random>

#include <benchmark/benchmark.h>
#include <fmt/format.h>

#include "vimu/augment.hpp"
#include "vimu/classifier.hpp"
#include "vimu/features.hpp"
#include "vimu/imu_sim.hpp"
#include "vimu/pipeline.hpp"

using namespace vimu;

namespace {

std::vector<Recording> make_recordings(std::size_t count, std::size_t samples) {
    Rng rng(1);
    std::normal_distribution<double> n(0, 2);
    const auto layout = std::make_shared<const ChannelLayout>(imu_layout({"right_wrist", "right_ankle"}));
    std::vector<Recording> out;
    for (std::size_t r = 0; r < count; ++r) {
        Recording rec;
        rec.sample_rate = 50;
        rec.layout = layout;
        rec.values.resize(samples * layout->size());
        for (auto& v : rec.values) v = n(rng);
        for (std::size_t i = 0; i < samples; ++i) rec.labels.push_back(i * 4 / samples % 2 ? "walking" : "boxing");
        rec.subject_id = fmt::format("s{}", r % 4);
        rec.source_id = fmt::format("rec{}", r);
        out.push_back(std::move(rec));
    }
    return out;
}

const std::vector<Recording>& recordings() {
    static const auto r = make_recordings(16, 3000);
    return r;
}

const Dataset& windows() {
    static const Dataset d = window_recordings_serial(recordings(), WindowSpec{});
    return d;
}

const std::vector<FeatureVector>& features() {
    static const auto f = featurize_serial(windows(), EcdfSpec{});
    return f;
}

std::vector<SynthJob> synth_jobs(const Skeleton& sk) {
    std::vector<SynthJob> jobs;
    for (int j = 0; j < 12; ++j) {
        RotationTrack t;
        t.joint_count = sk.size();
        std::vector<Vec3> roots;
        for (int f = 0; f < 240; ++f) {
            for (std::size_t k = 0; k < sk.size(); ++k)
                t.local.push_back(quat_from_axis_angle({1, 0, 0}, 0.4 * std::sin(0.2 * f + 0.3 * static_cast<double>(k) + j)));
            roots.emplace_back(0.03 * f, 0, 1);
        }
        compose_globals(sk, t);
        SynthJob job;
        job.skeleton = &sk;
        job.motion = forward_kinematics(sk, t, roots, 30);
        job.motion.activity_label = "walking";
        job.source_id = fmt::format("m{}", j);
        jobs.push_back(std::move(job));
    }
    return jobs;
}

template <bool Parallel>
void BM_window(benchmark::State& st) {
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? window_recordings(recordings(), WindowSpec{})
                                          : window_recordings_serial(recordings(), WindowSpec{}));
}

template <bool Parallel>
void BM_augment(benchmark::State& st) {
    const AugmentParams p{};
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? augment_dataset(windows(), p) : augment_dataset_serial(windows(), p));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(windows().size()));
}

template <bool Parallel>
void BM_featurize(benchmark::State& st) {
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? featurize(windows(), EcdfSpec{}) : featurize_serial(windows(), EcdfSpec{}));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(windows().size()));
}

template <bool Parallel>
void BM_train(benchmark::State& st) {
    TrainParams p;
    p.n_trees = 32;
    p.seed = 17;
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? train_forest(features(), p) : train_forest_serial(features(), p));
}

template <bool Parallel>
void BM_synthesize(benchmark::State& st) {
    static const Skeleton sk = body22_skeleton();
    static const auto jobs = synth_jobs(sk);
    SynthParams p;
    p.placements = {"right_wrist", "right_ankle"};
    for (auto _ : st)
        benchmark::DoNotOptimize(Parallel ? synthesize_batch(jobs, p) : synthesize_batch_serial(jobs, p));
}

}  // namespace

BENCHMARK(BM_window<false>)->Name("window/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_window<true>)->Name("window/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_augment<false>)->Name("augment/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_augment<true>)->Name("augment/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_featurize<false>)->Name("featurize/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_featurize<true>)->Name("featurize/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_train<false>)->Name("train_forest/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_train<true>)->Name("train_forest/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_synthesize<false>)->Name("synthesize/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_synthesize<true>)->Name("synthesize/omp")->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
