#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vimu/augment.hpp"
#include "vimu/classifier.hpp"
#include "vimu/demo.hpp"
#include "vimu/eval.hpp"
#include "vimu/features.hpp"
#include "vimu/imu_sim.hpp"
#include "vimu/pipeline.hpp"

namespace vimu {

std::string_view toolkit_version();

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitStage = 2;

// ----------------------------------------------------------------- config

struct Violation {
    std::string path;  // dotted config path, e.g. "window.overlap_seconds"
    std::string message;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<Violation> v);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// A directory (or explicit list) of motion files of one provenance.
struct MotionSourceConfig {
    Provenance provenance = Provenance::virtual_text;
    std::string format = "csv";        // csv | bvh
    std::vector<std::filesystem::path> files;  // resolved, sorted
    std::string skeleton = "body22";   // csv only
    UpAxis up_axis = UpAxis::z;
    double length_scale = 1.0;
    bool include_end_sites = true;     // bvh only
    std::optional<double> frame_rate;  // csv only; else the file's comment
};

struct RealSourceConfig {
    std::filesystem::path adapter;
    std::vector<std::filesystem::path> files;
};

struct ExperimentConfig {
    std::filesystem::path base_dir;  // relative paths resolve against this
    std::filesystem::path output_dir;
    RealSourceConfig real;
    std::optional<MotionSourceConfig> virtual_text;
    std::optional<MotionSourceConfig> virtual_video;
    SynthParams synth;  // placements, noise, bias, seed
    WindowSpec window;
    ExperimentParams experiment;
    nlohmann::json source_json;  // the document after overrides

    /// Path relative to base_dir, '/'-separated; used as a stable source id.
    std::string rel(const std::filesystem::path& p) const;
};

/// Collects every violation instead of stopping at the first.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                              std::vector<Violation>& violations);

/// Reads, applies "a.b.c=value" overrides, parses; throws ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Sets a dotted path in `doc`; the value is parsed as JSON, else taken as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// ------------------------------------------------------------- data access

struct LoadedMotion {
    Skeleton skeleton;
    MotionSequence motion;
};

/// Parses one motion file per the source settings, converts to z-up and
/// labels it with its parent directory's name.
LoadedMotion load_motion(const std::filesystem::path& file, const MotionSourceConfig& src);

/// Motion files under `dir` with the given extension, recursively, sorted.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, std::string_view extension);

/// t,ax,ay,az,gx,gy,gz
std::string write_trace_csv(const ImuTrace& trace);

// ---------------------------------------------------------------- commands

struct SynthOptions {
    std::filesystem::path config;
    std::vector<std::string> overrides;
    std::vector<std::filesystem::path> motions;  // empty: every configured motion
    std::string source = "virtual_text";         // settings used for explicit motions
    std::optional<std::filesystem::path> out_dir;
};

struct IngestOptions {
    std::filesystem::path adapter;
    std::filesystem::path input;
    std::filesystem::path output;
    std::optional<double> rate;
};

struct WindowOptions {
    std::filesystem::path adapter;
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out_dir;
    WindowSpec spec;
};

struct AugmentOptions {
    std::filesystem::path in_dir;
    std::filesystem::path out_dir;
    AugmentParams params;
};

struct FeaturizeOptions {
    std::filesystem::path in_dir;
    std::filesystem::path output;
    EcdfSpec spec;
};

struct TrainOptions {
    std::filesystem::path features;
    std::filesystem::path model;
    TrainParams params;
};

struct EvalOptions {
    std::filesystem::path model;
    std::filesystem::path features;
    std::optional<std::filesystem::path> output;  // JSON with confusion and scores
};

struct RunOptions {
    std::filesystem::path config;
    std::vector<std::string> overrides;
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::filesystem::path> cache_dir;  // else $VIMU_CACHE_DIR, else <out>/cache
};

struct ReportOptions {
    std::filesystem::path report;
    std::filesystem::path out_dir;
};

int cmd_validate(const std::filesystem::path& config, const std::vector<std::string>& overrides, std::ostream& out,
                 std::ostream& err);
int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err);
int cmd_ingest(const IngestOptions& o, std::ostream& out, std::ostream& err);
int cmd_window(const WindowOptions& o, std::ostream& out, std::ostream& err);
int cmd_augment(const AugmentOptions& o, std::ostream& out, std::ostream& err);
int cmd_featurize(const FeaturizeOptions& o, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err);
int cmd_demo(const std::filesystem::path& dir, const DemoParams& params, std::ostream& out, std::ostream& err);

}  // namespace vimu
