// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpuscale/metrics.hpp"
#include "gpuscale/scaling.hpp"
#include "gpuscale/telemetry.hpp"

namespace gpuscale {

/// How GPUs behave under one power cap in a generated run.
struct PowerCapProfile {
    double mean_draw_w = 0.0;
    /// Half-width of the uniform jitter around mean_draw_w.
    double draw_jitter_w = 0.0;
    /// Epoch-time multiplier at this cap relative to the spec's base
    /// curve; 1.0 means the cap does not slow training. Lets a run family
    /// carry exactly known speed/energy ratios for trade-off analysis.
    double time_scale = 1.0;
};

/// Departure from power-law scaling: beyond n_star GPUs the noiseless
/// epoch time stops decreasing and stays at a flat floor.
struct KneeSpec {
    int n_star = 0;
    /// Floor value; defaults to the curve value at n_star.
    std::optional<double> floor_time_s;
};

/// Complete description of a synthetic workload family. Everything a
/// generated corpus contains derives deterministically from this spec and
/// its seed, and the generator retains closed-form ground truth so tests
/// can hold the analysis pipeline to known answers.
struct SyntheticSpec {
    std::string model = "synthetic";
    Domain domain = Domain::other;
    /// Epoch seconds at N = 1 on the base curve alpha * N^(-beta).
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<int> gpu_counts;
    int epochs_per_run = 1;
    /// Sigma of the lognormal multiplicative noise on epoch times; 0 makes
    /// generation noiseless.
    double noise_sigma = 0.0;
    std::optional<KneeSpec> knee;
    /// Cap in watts -> behaviour at that cap.
    std::map<double, PowerCapProfile> power_profile;
    double clock_cap_mhz = 1380.0;
    int batch_per_gpu = 1;
    double sampling_interval_s = 1.0;
    double sm_util_mean_pct = 90.0;
    double sm_util_jitter_pct = 4.0;
    double mem_util_mean_pct = 40.0;
    double mem_util_jitter_pct = 4.0;
    std::uint64_t seed = 1;

    void validate() const;

    /// Noiseless epoch time at n GPUs with the knee applied; excludes any
    /// per-cap time_scale.
    double base_epoch_time(int n) const;

    /// The knee's flat epoch time; only meaningful when knee is set.
    double knee_floor_s() const;
};

struct ScalingSeries {
    /// epochs_per_run observations per GPU count, in ascending N order.
    std::vector<ScalingPoint> points;
    /// The noiseless epoch time behind each observation, aligned with
    /// points.
    std::vector<double> noiseless_epoch_time_s;
};

/// Draws a scaling series from the spec's base curve with lognormal noise.
/// Each GPU count uses its own derived random stream, so output is
/// independent of generation order and identical for identical specs.
ScalingSeries generate_scaling_series(const SyntheticSpec& spec);

/// One generated run plus the ground truth the generator knows about it.
/// Truth values are computed in closed form from the generated traces,
/// independently of the metrics module.
struct GeneratedRun {
    RunManifest manifest;
    std::vector<TelemetrySample> telemetry;
    std::vector<EpochWindow> epochs;
    std::vector<EpochMetrics> truth_epochs;
    double truth_mean_epoch_time_s = 0.0;
    double truth_total_energy_j = 0.0;
};

/// Generates telemetry for one (GPU count, power cap) cell: per-GPU power
/// traces sampled every sampling_interval_s, epoch windows of the noisy
/// epoch lengths, a matching manifest, and retained ground truth.
GeneratedRun generate_run(const SyntheticSpec& spec, int num_gpus, double power_cap_w);

/// Writes telemetry.csv, epochs.csv, manifest.txt, and ground_truth.json
/// into dir, creating it if needed.
void write_run(const GeneratedRun& run, const std::filesystem::path& dir);

} // namespace gpuscale
