#include "vimu/imu_sim.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "vimu/rng.hpp"

namespace vimu {

void SensorConfig::validate() const {
    if (!(accel_noise_std >= 0.0) || !(gyro_noise_std >= 0.0)) throw InvalidArgument("noise std must be >= 0");
    if (!(accel_bias_range >= 0.0) || !(gyro_bias_range >= 0.0)) throw InvalidArgument("bias range must be >= 0");
    if (!gravity.allFinite()) throw InvalidArgument("gravity must be finite");
}

void ImuTrace::validate() const {
    if (!(sample_rate > 0.0)) throw InvalidArgument("trace sample rate must be positive");
    if (accel.size() != gyro.size()) throw InvalidArgument("accel and gyro lengths differ");
    for (std::size_t i = 0; i < accel.size(); ++i)
        if (!accel[i].allFinite() || !gyro[i].allFinite()) throw InvalidArgument("trace contains non-finite samples");
}

std::vector<Vec3> linear_acceleration(const MotionSequence& motion, std::size_t joint) {
    motion.validate();
    const std::size_t n = motion.frames();
    if (n < 3) throw InvalidArgument("linear acceleration needs at least three frames");
    if (joint >= motion.joint_count) throw InvalidArgument(fmt::format("joint index {} out of range", joint));
    const double r2 = motion.frame_rate * motion.frame_rate;
    std::vector<Vec3> a(n);
    for (std::size_t k = 1; k + 1 < n; ++k)
        a[k] = (motion.at(k + 1, joint) - 2.0 * motion.at(k, joint) + motion.at(k - 1, joint)) * r2;
    a[0] = a[1];
    a[n - 1] = a[n - 2];
    return a;
}

ImuTrace simulate_imu(const MotionSequence& motion, const RotationTrack& rotations, const SensorConfig& config) {
    config.validate();
    if (rotations.joint_count != motion.joint_count || rotations.frames() != motion.frames())
        throw InvalidArgument("rotation track is not aligned with the motion");
    if (config.joint_index >= motion.joint_count) throw InvalidArgument("sensor joint index out of range");

    const auto acc_world = linear_acceleration(motion, config.joint_index);
    const auto orient = rotations.joint_series(config.joint_index);
    ImuTrace t;
    t.sample_rate = motion.frame_rate;
    t.joint_index = config.joint_index;
    t.activity_label = motion.activity_label;
    t.subject_id = motion.subject_id;
    t.provenance = motion.provenance;
    t.gyro = angular_velocity(orient, motion.frame_rate);
    t.accel.resize(acc_world.size());
    for (std::size_t k = 0; k < acc_world.size(); ++k) t.accel[k] = orient[k].inverse().rotate(acc_world[k] - config.gravity);

    const bool any_noise = config.accel_noise_std > 0 || config.gyro_noise_std > 0 || config.accel_bias_range > 0 ||
                           config.gyro_bias_range > 0;
    if (!any_noise) return t;

    Rng rng(config.seed);
    auto draw_bias = [&rng](double half) {
        Vec3 b = Vec3::Zero();
        if (half > 0) {
            std::uniform_real_distribution<double> u(-half, half);
            for (int i = 0; i < 3; ++i) b[i] = u(rng);
        }
        return b;
    };
    const Vec3 acc_bias = draw_bias(config.accel_bias_range);
    const Vec3 gyro_bias = draw_bias(config.gyro_bias_range);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < t.samples(); ++k) {
        for (int i = 0; i < 3; ++i) {
            t.accel[k][i] += acc_bias[i];
            if (config.accel_noise_std > 0) t.accel[k][i] += config.accel_noise_std * unit(rng);
        }
        for (int i = 0; i < 3; ++i) {
            t.gyro[k][i] += gyro_bias[i];
            if (config.gyro_noise_std > 0) t.gyro[k][i] += config.gyro_noise_std * unit(rng);
        }
    }
    return t;
}

namespace {

struct Interp {
    std::size_t lo;
    std::size_t hi;
    double w;
};

// Source sample positions for each output sample of a uniform resampling.
std::vector<Interp> resample_plan(std::size_t n, double src_rate, double target_rate) {
    if (!(target_rate > 0.0)) throw InvalidArgument("target rate must be positive");
    if (n == 0) throw InvalidArgument("cannot resample an empty stream");
    std::vector<Interp> plan;
    if (target_rate == src_rate) {
        for (std::size_t i = 0; i < n; ++i) plan.push_back({i, i, 0.0});
        return plan;
    }
    const double ratio = src_rate / target_rate;
    const double last = static_cast<double>(n - 1);
    const auto count = static_cast<std::size_t>(std::floor(last / ratio + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
        double pos = static_cast<double>(i) * src_rate / target_rate;
        if (pos > last) pos = last;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, n - 1);
        plan.push_back({lo, hi, pos - static_cast<double>(lo)});
    }
    return plan;
}

inline double lerp(double a, double b, double w) { return w == 0.0 ? a : a + w * (b - a); }

}  // namespace

ImuTrace resample_trace(const ImuTrace& trace, double target_rate) {
    trace.validate();
    const auto plan = resample_plan(trace.samples(), trace.sample_rate, target_rate);
    ImuTrace out = trace;
    out.sample_rate = target_rate;
    out.accel.resize(plan.size());
    out.gyro.resize(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& p = plan[i];
        for (int c = 0; c < 3; ++c) {
            out.accel[i][c] = lerp(trace.accel[p.lo][c], trace.accel[p.hi][c], p.w);
            out.gyro[i][c] = lerp(trace.gyro[p.lo][c], trace.gyro[p.hi][c], p.w);
        }
    }
    return out;
}

Recording resample_recording(const Recording& rec, double target_rate) {
    rec.validate();
    const auto plan = resample_plan(rec.samples(), rec.sample_rate, target_rate);
    const std::size_t c = rec.channels();
    Recording out = rec;
    out.sample_rate = target_rate;
    out.values.assign(plan.size() * c, 0.0);
    if (!rec.labels.empty()) out.labels.assign(plan.size(), {});
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& p = plan[i];
        for (std::size_t k = 0; k < c; ++k) out.values[i * c + k] = lerp(rec.at(p.lo, k), rec.at(p.hi, k), p.w);
        if (!rec.labels.empty()) out.labels[i] = rec.labels[p.w <= 0.5 ? p.lo : p.hi];
    }
    return out;
}

SynthOutcome synthesize(const SynthJob& job, const SynthParams& params) {
    if (job.skeleton == nullptr) throw InvalidArgument("synthesis job has no skeleton");
    if (params.placements.empty()) throw InvalidArgument("no sensor placements configured");
    const Skeleton& sk = *job.skeleton;
    std::vector<std::size_t> joints;
    for (const auto& name : params.placements) {
        auto j = sk.find(name);
        if (!j) throw InvalidArgument(fmt::format("placement '{}' is not a skeleton joint", name));
        joints.push_back(*j);
    }
    auto ik = inverse_kinematics(sk, job.motion, params.ik);

    SynthOutcome out;
    out.diagnostics = std::move(ik.diagnostics);
    Recording rec;
    rec.layout = std::make_shared<const ChannelLayout>(imu_layout(params.placements));
    rec.sample_rate = params.output_rate;
    rec.subject_id = job.motion.subject_id.value_or("");
    rec.provenance = job.motion.provenance;
    rec.source_id = job.source_id;

    for (std::size_t s = 0; s < joints.size(); ++s) {
        SensorConfig cfg;
        cfg.joint_index = joints[s];
        cfg.gravity = params.gravity;
        cfg.accel_noise_std = params.accel_noise_std;
        cfg.gyro_noise_std = params.gyro_noise_std;
        cfg.accel_bias_range = params.accel_bias_range;
        cfg.gyro_bias_range = params.gyro_bias_range;
        cfg.seed = derive_seed(params.seed, job.source_id + "/" + params.placements[s]);
        out.traces.push_back(resample_trace(simulate_imu(job.motion, ik.track, cfg), params.output_rate));
    }
    const std::size_t n = out.traces.front().samples();
    const std::size_t c = rec.layout->size();
    rec.values.assign(n * c, 0.0);
    for (std::size_t s = 0; s < out.traces.size(); ++s) {
        const auto& t = out.traces[s];
        for (std::size_t k = 0; k < n; ++k) {
            for (int a = 0; a < 3; ++a) {
                rec.values[k * c + 6 * s + static_cast<std::size_t>(a)] = t.accel[k][a];
                rec.values[k * c + 6 * s + 3 + static_cast<std::size_t>(a)] = t.gyro[k][a];
            }
        }
    }
    rec.labels.assign(n, job.motion.activity_label.value_or(""));
    out.recording = std::move(rec);
    return out;
}

namespace {

SynthOutcome run_isolated(const SynthJob& job, const SynthParams& params) {
    try {
        return synthesize(job, params);
    } catch (const std::exception& e) {
        SynthOutcome failed;
        failed.error = e.what();
        return failed;
    }
}

}  // namespace

std::vector<SynthOutcome> synthesize_batch_serial(const std::vector<SynthJob>& jobs, const SynthParams& params) {
    std::vector<SynthOutcome> out;
    out.reserve(jobs.size());
    for (const auto& job : jobs) out.push_back(run_isolated(job, params));
    return out;
}

std::vector<SynthOutcome> synthesize_batch(const std::vector<SynthJob>& jobs, const SynthParams& params) {
    std::vector<SynthOutcome> out(jobs.size());
    const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = run_isolated(jobs[static_cast<std::size_t>(i)], params);
    return out;
}

}  // namespace vimu
