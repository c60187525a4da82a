// vimu: virtual IMU synthesis and HAR evaluation from the command line.

#include <iostream>

#include <CLI11.hpp>

#include "vimu/cli.hpp"

namespace {

void add_window_flags(CLI::App* app, vimu::WindowSpec& w) {
    app->add_option("--window", w.window_seconds, "Window length in seconds")->capture_default_str();
    app->add_option("--overlap", w.overlap_seconds, "Overlap between windows in seconds")->capture_default_str();
    app->add_option("--rate", w.rate, "Sampling rate in Hz")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace vimu;
    CLI::App app{"Virtual IMU synthesis, augmentation and HAR evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(toolkit_version()));

    std::filesystem::path config;
    std::vector<std::string> overrides;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config, "Experiment config (JSON)")->required();
        sub->add_option("--set", overrides, "Override a config field, e.g. --set forest.n_trees=50");
    };

    auto* validate = app.add_subcommand("validate", "Check a config file and list every violation");
    add_config(validate);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Simulate IMU traces from motion files");
    add_config(synth_cmd);
    synth_cmd->add_option("motions", synth.motions, "Motion files (default: every configured motion)");
    synth_cmd->add_option("--source", synth.source, "Source settings for explicit files")
        ->check(CLI::IsMember({"virtual_text", "virtual_video"}))
        ->capture_default_str();
    synth_cmd->add_option("-o,--out", synth.out_dir, "Trace directory (default: <output_dir>/traces)");

    IngestOptions ingest;
    double ingest_rate = 0.0;
    auto* ingest_cmd = app.add_subcommand("ingest", "Read a vendor recording through an adapter spec");
    ingest_cmd->add_option("-a,--adapter", ingest.adapter, "Adapter spec (JSON)")->required();
    ingest_cmd->add_option("input", ingest.input, "Recording file")->required();
    ingest_cmd->add_option("-o,--out", ingest.output, "Normalised CSV output")->required();
    auto* rate_opt = ingest_cmd->add_option("--rate", ingest_rate, "Resample to this rate (Hz)");

    WindowOptions window;
    auto* window_cmd = app.add_subcommand("window", "Ingest recordings and cut them into labelled windows");
    window_cmd->add_option("-a,--adapter", window.adapter, "Adapter spec (JSON)")->required();
    window_cmd->add_option("inputs", window.inputs, "Recording files")->required();
    window_cmd->add_option("-o,--out", window.out_dir, "Dataset directory")->required();
    add_window_flags(window_cmd, window.spec);

    AugmentOptions augment;
    auto* augment_cmd = app.add_subcommand("augment", "Append rotated, noisy and biased copies of a dataset");
    augment_cmd->add_option("-i,--in", augment.in_dir, "Input dataset directory")->required();
    augment_cmd->add_option("-o,--out", augment.out_dir, "Output dataset directory")->required();
    augment_cmd->add_option("--theta", augment.params.theta, "Rotation about z (radians)")->capture_default_str();
    augment_cmd->add_option("--noise-std", augment.params.noise_std, "Gaussian noise sigma")->capture_default_str();
    augment_cmd->add_option("--bias-halfwidth", augment.params.bias_halfwidth, "Uniform bias half-width")
        ->capture_default_str();
    augment_cmd->add_option("--seed", augment.params.seed, "Seed")->capture_default_str();

    FeaturizeOptions featurize;
    bool no_mean = false;
    auto* feat_cmd = app.add_subcommand("featurize", "ECDF features of every window");
    feat_cmd->add_option("-i,--in", featurize.in_dir, "Dataset directory")->required();
    feat_cmd->add_option("-o,--out", featurize.output, "Feature CSV")->required();
    feat_cmd->add_option("--components", featurize.spec.n_components, "Quantiles per channel")->capture_default_str();
    feat_cmd->add_flag("--no-mean", no_mean, "Leave out the per-channel mean");

    TrainOptions train;
    std::size_t mtry = 0;
    auto* train_cmd = app.add_subcommand("train", "Fit a random forest on a feature CSV");
    train_cmd->add_option("-f,--features", train.features, "Feature CSV")->required();
    train_cmd->add_option("-o,--out", train.model, "Model file (JSON)")->required();
    train_cmd->add_option("--trees", train.params.n_trees, "Number of trees")->capture_default_str();
    train_cmd->add_option("--max-depth", train.params.max_depth, "Maximum depth")->capture_default_str();
    train_cmd->add_option("--min-leaf", train.params.min_samples_leaf, "Minimum samples per leaf")
        ->capture_default_str();
    auto* mtry_opt = train_cmd->add_option("--mtry", mtry, "Features tried per split (default sqrt)");
    train_cmd->add_option("--seed", train.params.seed, "Seed")->capture_default_str();

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score a model on a feature CSV");
    eval_cmd->add_option("-m,--model", eval.model, "Model file")->required();
    eval_cmd->add_option("-f,--features", eval.features, "Feature CSV")->required();
    eval_cmd->add_option("-o,--out", eval.output, "Write confusion matrix and scores as JSON");

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Full experiment matrix from a config");
    add_config(run_cmd);
    run_cmd->add_option("-o,--out", run.out_dir, "Output directory (default: config output_dir)");
    run_cmd->add_option("--cache-dir", run.cache_dir, "Stage cache (default: $VIMU_CACHE_DIR or <out>/cache)");

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "Re-emit report tables from report.json");
    report_cmd->add_option("-i,--in", report.report, "report.json")->required();
    report_cmd->add_option("-o,--out", report.out_dir, "Output directory")->required();

    std::filesystem::path demo_dir;
    DemoParams demo;
    auto* demo_cmd = app.add_subcommand("demo", "Write the bundled synthetic task");
    demo_cmd->add_option("-o,--out", demo_dir, "Target directory")->required();
    demo_cmd->add_option("--seed", demo.seed, "Generator seed")->capture_default_str();
    demo_cmd->add_option("--subjects", demo.subjects, "Number of real subjects")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    auto& out = std::cout;
    auto& err = std::cerr;
    if (*validate) return cmd_validate(config, overrides, out, err);
    if (*synth_cmd) {
        synth.config = config;
        synth.overrides = overrides;
        return cmd_synth(synth, out, err);
    }
    if (*ingest_cmd) {
        if (*rate_opt) ingest.rate = ingest_rate;
        return cmd_ingest(ingest, out, err);
    }
    if (*window_cmd) return cmd_window(window, out, err);
    if (*augment_cmd) return cmd_augment(augment, out, err);
    if (*feat_cmd) {
        featurize.spec.include_mean = !no_mean;
        return cmd_featurize(featurize, out, err);
    }
    if (*train_cmd) {
        if (*mtry_opt) train.params.features_per_split = mtry;
        return cmd_train(train, out, err);
    }
    if (*eval_cmd) return cmd_eval(eval, out, err);
    if (*run_cmd) {
        run.config = config;
        run.overrides = overrides;
        return cmd_run(run, out, err);
    }
    if (*report_cmd) return cmd_report(report, out, err);
    if (*demo_cmd) return cmd_demo(demo_dir, demo, out, err);
    return kExitValidation;
}
