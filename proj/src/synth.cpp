// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gpuscale/io.hpp"
#include "gpuscale/rng.hpp"
#include "gpuscale/serialize.hpp"

namespace gpuscale {

namespace {

// Stream purposes, folded into derived seeds so every (purpose, N, cap,
// gpu) tuple gets its own independent stream.
constexpr std::uint64_t kSeriesStream = 1;
constexpr std::uint64_t kEpochTimeStream = 2;
constexpr std::uint64_t kPowerStream = 3;
constexpr std::uint64_t kUtilStream = 4;

std::uint64_t cap_key(double cap_w) {
    return static_cast<std::uint64_t>(std::llround(cap_w * 1000.0));
}

double clamp_pct(double v) { return std::clamp(v, 0.0, 100.0); }

// --- ground-truth helpers ----------------------------------------------------
// Plain two-pass and trapezoid loops, written independently of the metrics
// module so generated runs carry an answer the pipeline can be checked
// against rather than one produced by the code under test.

double truth_mean(const std::vector<double>& v) {
    double sum = 0.0;
    for (const double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

std::optional<double> truth_cv(const std::vector<double>& v) {
    const double m = truth_mean(v);
    if (m == 0.0) return std::nullopt;
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size())) / m;
}

// Trapezoid of one GPU's piecewise-linear power trace over [a, b], with
// the trace held constant outside its sampled span.
double truth_trace_energy(const std::vector<double>& ts, const std::vector<double>& power, double a,
                          double b) {
    auto value_at = [&](double t) {
        if (t <= ts.front()) return power.front();
        if (t >= ts.back()) return power.back();
        const auto it = std::lower_bound(ts.begin(), ts.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
        if (ts[hi] == t) return power[hi];
        const std::size_t lo = hi - 1;
        return power[lo] + (power[hi] - power[lo]) * (t - ts[lo]) / (ts[hi] - ts[lo]);
    };

    double total = 0.0;
    double prev_t = a;
    double prev_p = value_at(a);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] <= a) continue;
        if (ts[i] >= b) break;
        total += 0.5 * (prev_p + power[i]) * (ts[i] - prev_t);
        prev_t = ts[i];
        prev_p = power[i];
    }
    total += 0.5 * (prev_p + value_at(b)) * (b - prev_t);
    return total;
}

double truth_mean_in_window(const std::vector<double>& ts, const std::vector<double>& v, double a, double b,
                            std::size_t* count_out) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i] < a || ts[i] > b) continue;
        sum += v[i];
        ++count;
    }
    if (count_out) *count_out = count;
    return count ? sum / static_cast<double>(count) : 0.0;
}

} // namespace

void SyntheticSpec::validate() const {
    if (model.empty()) throw ValidationError("synthetic spec: model must be non-empty");
    if (!(alpha > 0.0)) throw ValidationError("synthetic spec: alpha must be > 0");
    if (beta < 0.0) throw ValidationError("synthetic spec: beta must be >= 0");
    if (gpu_counts.empty()) throw ValidationError("synthetic spec: gpu_counts must be non-empty");
    std::set<int> seen;
    for (const int n : gpu_counts) {
        if (n < 1) throw ValidationError("synthetic spec: gpu_counts entries must be >= 1");
        if (!seen.insert(n).second)
            throw ValidationError("synthetic spec: duplicate gpu count " + std::to_string(n));
    }
    if (epochs_per_run < 1) throw ValidationError("synthetic spec: epochs_per_run must be >= 1");
    if (noise_sigma < 0.0) throw ValidationError("synthetic spec: noise_sigma must be >= 0");
    if (knee) {
        if (knee->n_star < 1) throw ValidationError("synthetic spec: knee n_star must be >= 1");
        if (knee->floor_time_s && !(*knee->floor_time_s > 0.0))
            throw ValidationError("synthetic spec: knee floor_time_s must be > 0");
    }
    for (const auto& [cap, profile] : power_profile) {
        if (!(cap > 0.0)) throw ValidationError("synthetic spec: power cap must be > 0");
        if (!(profile.mean_draw_w > 0.0))
            throw ValidationError("synthetic spec: mean_draw_w must be > 0 at cap " + std::to_string(cap));
        if (profile.mean_draw_w > cap)
            throw ValidationError("synthetic spec: mean_draw_w exceeds the cap at " + std::to_string(cap));
        if (profile.draw_jitter_w < 0.0)
            throw ValidationError("synthetic spec: draw_jitter_w must be >= 0 at cap " + std::to_string(cap));
        if (!(profile.time_scale > 0.0))
            throw ValidationError("synthetic spec: time_scale must be > 0 at cap " + std::to_string(cap));
    }
    if (!(clock_cap_mhz > 0.0)) throw ValidationError("synthetic spec: clock_cap_mhz must be > 0");
    if (batch_per_gpu < 1) throw ValidationError("synthetic spec: batch_per_gpu must be >= 1");
    if (!(sampling_interval_s > 0.0)) throw ValidationError("synthetic spec: sampling_interval_s must be > 0");
    for (const double v : {sm_util_mean_pct, mem_util_mean_pct})
        if (v < 0.0 || v > 100.0)
            throw ValidationError("synthetic spec: utilization means must lie in [0, 100]");
    for (const double v : {sm_util_jitter_pct, mem_util_jitter_pct})
        if (v < 0.0) throw ValidationError("synthetic spec: utilization jitters must be >= 0");
}

double SyntheticSpec::knee_floor_s() const {
    if (!knee) throw ValidationError("synthetic spec: knee_floor_s without a knee");
    if (knee->floor_time_s) return *knee->floor_time_s;
    return alpha * std::pow(static_cast<double>(knee->n_star), -beta);
}

double SyntheticSpec::base_epoch_time(int n) const {
    if (n < 1) throw ValidationError("synthetic spec: base_epoch_time needs n >= 1");
    if (knee && n > knee->n_star) return knee_floor_s();
    return alpha * std::pow(static_cast<double>(n), -beta);
}

ScalingSeries generate_scaling_series(const SyntheticSpec& spec) {
    spec.validate();
    std::vector<int> counts = spec.gpu_counts;
    std::sort(counts.begin(), counts.end());

    ScalingSeries series;
    series.points.reserve(counts.size() * static_cast<std::size_t>(spec.epochs_per_run));
    series.noiseless_epoch_time_s.reserve(series.points.capacity());
    for (const int n : counts) {
        RandomStream rs(derive_stream_seed(spec.seed, {kSeriesStream, static_cast<std::uint64_t>(n)}));
        const double base = spec.base_epoch_time(n);
        for (int k = 0; k < spec.epochs_per_run; ++k) {
            double t = base;
            if (spec.noise_sigma > 0.0) t *= std::exp(spec.noise_sigma * rs.normal());
            series.points.push_back({n, t});
            series.noiseless_epoch_time_s.push_back(base);
        }
    }
    return series;
}

GeneratedRun generate_run(const SyntheticSpec& spec, int num_gpus, double power_cap_w) {
    spec.validate();
    if (std::find(spec.gpu_counts.begin(), spec.gpu_counts.end(), num_gpus) == spec.gpu_counts.end())
        throw ValidationError("generate_run: " + std::to_string(num_gpus) +
                              " GPUs is not one of the spec's gpu_counts");
    const auto profile_it = spec.power_profile.find(power_cap_w);
    if (profile_it == spec.power_profile.end())
        throw ValidationError("generate_run: power cap " + std::to_string(power_cap_w) +
                              " W is not in the spec's power_profile");
    const PowerCapProfile& profile = profile_it->second;

    GeneratedRun run;
    run.manifest.model = spec.model;
    run.manifest.domain = spec.domain;
    run.manifest.num_gpus = num_gpus;
    run.manifest.power_cap_w = power_cap_w;
    run.manifest.clock_cap_mhz = spec.clock_cap_mhz;
    run.manifest.batch_per_gpu = spec.batch_per_gpu;
    run.manifest.epochs_planned = spec.epochs_per_run;

    // Epoch lengths and back-to-back windows.
    const std::uint64_t n_key = static_cast<std::uint64_t>(num_gpus);
    RandomStream time_stream(derive_stream_seed(spec.seed, {kEpochTimeStream, n_key, cap_key(power_cap_w)}));
    std::vector<double> epoch_times(static_cast<std::size_t>(spec.epochs_per_run));
    for (auto& t : epoch_times) {
        t = spec.base_epoch_time(num_gpus) * profile.time_scale;
        if (spec.noise_sigma > 0.0) t *= std::exp(spec.noise_sigma * time_stream.normal());
    }
    double cursor = 0.0;
    for (int e = 0; e < spec.epochs_per_run; ++e) {
        EpochWindow w;
        w.epoch_index = e;
        w.start_s = cursor;
        cursor += epoch_times[static_cast<std::size_t>(e)];
        w.end_s = cursor;
        run.epochs.push_back(w);
    }
    const double total_duration = cursor;

    // Every window must catch at least one grid sample, or the run could
    // not be aggregated back.
    for (const auto& w : run.epochs) {
        const double first_tick = std::ceil(w.start_s / spec.sampling_interval_s) * spec.sampling_interval_s;
        if (first_tick > w.end_s)
            throw ValidationError("generate_run: sampling_interval_s " +
                                  std::to_string(spec.sampling_interval_s) + " is too coarse for epoch " +
                                  std::to_string(w.epoch_index) + " of length " +
                                  std::to_string(w.end_s - w.start_s) + " s");
    }

    // Per-GPU traces on a shared sampling grid that covers every window.
    const double dt = spec.sampling_interval_s;
    std::size_t grid_points = static_cast<std::size_t>(std::ceil(total_duration / dt)) + 1;
    while (static_cast<double>(grid_points - 1) * dt < total_duration) ++grid_points;

    std::vector<double> grid(grid_points);
    for (std::size_t k = 0; k < grid_points; ++k) grid[k] = static_cast<double>(k) * dt;

    const std::size_t gpu_count = static_cast<std::size_t>(num_gpus);
    std::vector<std::vector<double>> power(gpu_count), sm(gpu_count), mem(gpu_count);
    for (std::size_t g = 0; g < gpu_count; ++g) {
        RandomStream ps(derive_stream_seed(spec.seed, {kPowerStream, n_key, cap_key(power_cap_w), g}));
        RandomStream us(derive_stream_seed(spec.seed, {kUtilStream, n_key, cap_key(power_cap_w), g}));
        power[g].resize(grid_points);
        sm[g].resize(grid_points);
        mem[g].resize(grid_points);
        for (std::size_t k = 0; k < grid_points; ++k) {
            power[g][k] =
                std::max(0.0, profile.mean_draw_w + profile.draw_jitter_w * (2.0 * ps.uniform01() - 1.0));
            sm[g][k] = clamp_pct(spec.sm_util_mean_pct + spec.sm_util_jitter_pct * (2.0 * us.uniform01() - 1.0));
            mem[g][k] =
                clamp_pct(spec.mem_util_mean_pct + spec.mem_util_jitter_pct * (2.0 * us.uniform01() - 1.0));
        }
    }

    // Interleaved rows, the way a collector daemon writes them: one tick,
    // all GPUs, next tick.
    run.telemetry.reserve(grid_points * gpu_count);
    for (std::size_t k = 0; k < grid_points; ++k) {
        for (std::size_t g = 0; g < gpu_count; ++g) {
            TelemetrySample s;
            s.timestamp_s = grid[k];
            s.gpu_id = static_cast<int>(g);
            s.power_w = power[g][k];
            s.sm_util_pct = sm[g][k];
            s.mem_util_pct = mem[g][k];
            s.sm_clock_mhz = spec.clock_cap_mhz;
            run.telemetry.push_back(s);
        }
    }

    // Ground truth per epoch, pooled gpu-major like the aggregation layer
    // but computed with this file's own plain loops.
    for (const auto& w : run.epochs) {
        EpochMetrics em;
        em.epoch_index = w.epoch_index;
        em.wall_time_s = w.end_s - w.start_s;
        std::vector<double> pooled_power, pooled_sm, pooled_mem;
        for (std::size_t g = 0; g < gpu_count; ++g) {
            GpuEpochStats stats;
            stats.gpu_id = static_cast<int>(g);
            stats.energy_j = truth_trace_energy(grid, power[g], w.start_s, w.end_s);
            stats.mean_power_w = truth_mean_in_window(grid, power[g], w.start_s, w.end_s, &stats.samples_in_window);
            stats.mean_sm_util = truth_mean_in_window(grid, sm[g], w.start_s, w.end_s, nullptr);
            stats.mean_mem_util = truth_mean_in_window(grid, mem[g], w.start_s, w.end_s, nullptr);
            em.per_gpu.push_back(stats);
            em.energy_j += stats.energy_j;
            for (std::size_t k = 0; k < grid_points; ++k) {
                if (grid[k] < w.start_s || grid[k] > w.end_s) continue;
                pooled_power.push_back(power[g][k]);
                pooled_sm.push_back(sm[g][k]);
                pooled_mem.push_back(mem[g][k]);
            }
        }
        em.mean_power_w = truth_mean(pooled_power);
        em.mean_sm_util = truth_mean(pooled_sm);
        em.mean_mem_util = truth_mean(pooled_mem);
        em.cv_sm_util = truth_cv(pooled_sm);
        em.cv_mem_util = truth_cv(pooled_mem);
        run.truth_epochs.push_back(std::move(em));
        run.truth_total_energy_j += run.truth_epochs.back().energy_j;
    }
    run.truth_mean_epoch_time_s = truth_mean(epoch_times);
    return run;
}

void write_run(const GeneratedRun& run, const std::filesystem::path& dir) {
    io::write_file(dir / "telemetry.csv", write_telemetry_csv(run.telemetry));
    io::write_file(dir / "epochs.csv", write_epoch_csv(run.epochs));
    io::write_file(dir / "manifest.txt", write_manifest(run.manifest));
    io::write_file(dir / "ground_truth.json", dump_document(ground_truth_document(run)));
}

} // namespace gpuscale
