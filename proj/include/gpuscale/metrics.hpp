// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpuscale/telemetry.hpp"

namespace gpuscale {

enum class EnergyMethod {
    /// Trapezoidal integral of the piecewise-linear power trace over the
    /// window; exact for constant and linearly varying power.
    trapezoid,
    /// Mean of the in-window power samples times the wall time. Coarser,
    /// but matches plain mean-power arithmetic some reports use.
    mean_power,
};

struct MetricsOptions {
    EnergyMethod energy_method = EnergyMethod::trapezoid;
    /// Lenient mode downgrades coverage problems (window poorly covered by
    /// samples, missing GPUs) from errors to warnings and computes best
    /// effort values from whatever data is present.
    bool lenient = false;
};

/// Per-GPU drill-down kept alongside the pooled epoch statistics.
struct GpuEpochStats {
    int gpu_id = 0;
    double energy_j = 0.0;
    double mean_power_w = 0.0;
    double mean_sm_util = 0.0;
    double mean_mem_util = 0.0;
    std::size_t samples_in_window = 0;
};

/// Aggregates of one epoch window. Utilization means and CVs pool the
/// in-window samples of all GPUs; per-GPU values are retained in per_gpu.
struct EpochMetrics {
    int epoch_index = 0;
    double wall_time_s = 0.0;
    /// Joules summed over all GPUs.
    double energy_j = 0.0;
    double mean_power_w = 0.0;
    double mean_sm_util = 0.0;
    double mean_mem_util = 0.0;
    /// Population-sigma/mean; empty when the pooled mean is zero.
    std::optional<double> cv_sm_util;
    std::optional<double> cv_mem_util;
    std::vector<GpuEpochStats> per_gpu;
};

struct RunMetrics {
    RunManifest manifest;
    std::vector<EpochMetrics> epochs;
    /// Arithmetic mean of the per-epoch wall times.
    double mean_epoch_time_s = 0.0;
    /// Sum of the per-epoch energies.
    double total_energy_j = 0.0;
};

struct RunMetricsResult {
    RunMetrics metrics;
    std::vector<std::string> warnings;
};

/// Energy in joules drawn by one GPU over [window.start_s, window.end_s].
///
/// The power trace is treated as piecewise linear between samples and held
/// constant beyond the first/last sample. A window edge may extend past the
/// sampled span by at most one median sampling gap; beyond that the data
/// does not support the window (error in strict mode, warning in lenient).
/// `gpu_samples` must be one GPU's stream in increasing timestamp order.
double integrate_energy(std::span<const TelemetrySample> gpu_samples, const EpochWindow& window,
                        const MetricsOptions& opts = {}, std::vector<std::string>* warnings = nullptr);

/// Population coefficient of variation sigma/mu. Empty optional when the
/// mean is zero (undefined); throws on an empty series.
std::optional<double> coefficient_of_variation(std::span<const double> series);

/// Aggregates one epoch window from per-GPU sample streams. A sample is in
/// the window when start_s <= t <= end_s. Strict mode requires in-window
/// samples from exactly `expected_gpus` GPUs.
EpochMetrics epoch_metrics(const std::map<int, std::vector<TelemetrySample>>& by_gpu,
                           const EpochWindow& window, int expected_gpus, const MetricsOptions& opts = {},
                           std::vector<std::string>* warnings = nullptr);

/// Full per-run aggregation: split samples by GPU, compute every epoch,
/// then the run-level mean epoch time and total energy. In lenient mode an
/// epoch with no in-window samples at all is skipped with a warning.
RunMetricsResult run_metrics(std::span<const TelemetrySample> samples, std::span<const EpochWindow> windows,
                             const RunManifest& manifest, const MetricsOptions& opts = {});

/// One run expressed relative to a baseline run: how much faster it is
/// (baseline time over this time) and how much energy it uses (this energy
/// over baseline energy). The baseline itself maps to exactly (1, 1).
struct NormalizedPoint {
    std::string label;
    /// Numeric value along the varied manifest axis (GPU count or cap).
    double axis_value = 0.0;
    double relative_speed = 0.0;
    double relative_energy = 0.0;
};

/// Chooses the reference run for normalize_runs: either the run with the
/// fewest GPUs or the run at a specific power cap.
struct BaselineSelector {
    enum class Axis { num_gpus, power_cap };
    Axis axis = Axis::num_gpus;
    double cap_w = 0.0;

    static BaselineSelector smallest_n() { return {Axis::num_gpus, 0.0}; }
    static BaselineSelector at_cap(double cap_w) { return {Axis::power_cap, cap_w}; }
};

/// Normalizes a family of runs that differ along exactly one manifest axis
/// (GPU count or power cap) against the selected baseline run. All other
/// manifest fields must agree across the family. Points are returned in
/// increasing axis order.
std::vector<NormalizedPoint> normalize_runs(std::span<const RunMetrics> runs, const BaselineSelector& baseline);

} // namespace gpuscale
