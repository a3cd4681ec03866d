// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gpuscale/stats.hpp"

namespace gpuscale {

namespace {

std::string format_window(const EpochWindow& w) {
    return "epoch " + std::to_string(w.epoch_index) + " [" + std::to_string(w.start_s) + ", " +
           std::to_string(w.end_s) + "]";
}

// Routes a recoverable problem: throws in strict mode, records a warning in
// lenient mode.
void complain(const std::string& msg, const MetricsOptions& opts, std::vector<std::string>* warnings) {
    if (!opts.lenient) throw ValidationError(msg);
    if (warnings) warnings->push_back(msg);
}

// Median of the consecutive timestamp gaps; 0 when fewer than two samples.
double median_sampling_gap(std::span<const TelemetrySample> samples) {
    if (samples.size() < 2) return 0.0;
    std::vector<double> gaps;
    gaps.reserve(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i)
        gaps.push_back(samples[i].timestamp_s - samples[i - 1].timestamp_s);
    const std::size_t mid = gaps.size() / 2;
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(mid), gaps.end());
    double hi = gaps[mid];
    if (gaps.size() % 2 == 0) {
        const double lo = *std::max_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(mid));
        return 0.5 * (lo + hi);
    }
    return hi;
}

// Power of the piecewise-linear trace at time t, held constant outside the
// sampled span.
double power_at(std::span<const TelemetrySample> samples, double t) {
    if (t <= samples.front().timestamp_s) return samples.front().power_w;
    if (t >= samples.back().timestamp_s) return samples.back().power_w;
    const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                     [](const TelemetrySample& s, double v) { return s.timestamp_s < v; });
    // it points at the first sample with timestamp >= t; t is strictly
    // inside the span, so both neighbours exist.
    if (it->timestamp_s == t) return it->power_w;
    const auto prev = it - 1;
    const double frac = (t - prev->timestamp_s) / (it->timestamp_s - prev->timestamp_s);
    return prev->power_w + frac * (it->power_w - prev->power_w);
}

struct InWindowStats {
    std::size_t count = 0;
    double sum_power = 0.0;
    double sum_sm = 0.0;
    double sum_mem = 0.0;
};

} // namespace

double integrate_energy(std::span<const TelemetrySample> gpu_samples, const EpochWindow& window,
                        const MetricsOptions& opts, std::vector<std::string>* warnings) {
    if (gpu_samples.empty())
        throw ValidationError("energy integration: no samples for " + format_window(window));
    if (!(window.start_s < window.end_s))
        throw ValidationError("energy integration: degenerate window " + format_window(window));

    const double span_lo = gpu_samples.front().timestamp_s;
    const double span_hi = gpu_samples.back().timestamp_s;
    const double gap = median_sampling_gap(gpu_samples);
    if (window.start_s < span_lo - gap || window.end_s > span_hi + gap)
        complain("energy integration: " + format_window(window) + " extends beyond sampled span [" +
                     std::to_string(span_lo) + ", " + std::to_string(span_hi) +
                     "] by more than one sampling gap",
                 opts, warnings);

    if (opts.energy_method == EnergyMethod::mean_power) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& s : gpu_samples) {
            if (s.timestamp_s < window.start_s || s.timestamp_s > window.end_s) continue;
            sum += s.power_w;
            ++count;
        }
        if (count == 0) {
            complain("energy integration: no in-window samples for " + format_window(window), opts, warnings);
            // best effort in lenient mode: fall through to the trapezoid
        } else {
            return sum / static_cast<double>(count) * (window.end_s - window.start_s);
        }
    }

    // Trapezoid over the window: knots at the clipped edges plus every
    // strictly interior sample.
    double total = 0.0;
    double prev_t = window.start_s;
    double prev_p = power_at(gpu_samples, prev_t);
    for (const auto& s : gpu_samples) {
        if (s.timestamp_s <= window.start_s) continue;
        if (s.timestamp_s >= window.end_s) break;
        total += 0.5 * (prev_p + s.power_w) * (s.timestamp_s - prev_t);
        prev_t = s.timestamp_s;
        prev_p = s.power_w;
    }
    const double end_p = power_at(gpu_samples, window.end_s);
    total += 0.5 * (prev_p + end_p) * (window.end_s - prev_t);
    return total;
}

std::optional<double> coefficient_of_variation(std::span<const double> series) {
    return stats::coefficient_of_variation(stats::as_array(series));
}

EpochMetrics epoch_metrics(const std::map<int, std::vector<TelemetrySample>>& by_gpu,
                           const EpochWindow& window, int expected_gpus, const MetricsOptions& opts,
                           std::vector<std::string>* warnings) {
    if (expected_gpus < 1) throw ValidationError("epoch_metrics: expected_gpus must be >= 1");

    EpochMetrics em;
    em.epoch_index = window.epoch_index;
    em.wall_time_s = window.end_s - window.start_s;

    std::vector<double> pooled_power, pooled_sm, pooled_mem;
    int gpus_with_samples = 0;

    for (const auto& [gpu_id, samples] : by_gpu) {
        InWindowStats acc;
        for (const auto& s : samples) {
            if (s.timestamp_s < window.start_s || s.timestamp_s > window.end_s) continue;
            ++acc.count;
            acc.sum_power += s.power_w;
            acc.sum_sm += s.sm_util_pct;
            acc.sum_mem += s.mem_util_pct;
            pooled_power.push_back(s.power_w);
            pooled_sm.push_back(s.sm_util_pct);
            pooled_mem.push_back(s.mem_util_pct);
        }
        if (acc.count == 0) {
            complain("gpu " + std::to_string(gpu_id) + " has no samples in " + format_window(window), opts,
                     warnings);
            continue;
        }
        ++gpus_with_samples;

        GpuEpochStats g;
        g.gpu_id = gpu_id;
        g.energy_j = integrate_energy(samples, window, opts, warnings);
        g.mean_power_w = acc.sum_power / static_cast<double>(acc.count);
        g.mean_sm_util = acc.sum_sm / static_cast<double>(acc.count);
        g.mean_mem_util = acc.sum_mem / static_cast<double>(acc.count);
        g.samples_in_window = acc.count;
        em.per_gpu.push_back(g);
        em.energy_j += g.energy_j;
    }

    if (gpus_with_samples != expected_gpus)
        complain("expected in-window samples from " + std::to_string(expected_gpus) + " gpus, found " +
                     std::to_string(gpus_with_samples) + " in " + format_window(window),
                 opts, warnings);
    if (pooled_power.empty())
        throw ValidationError("no samples from any gpu in " + format_window(window));

    em.mean_power_w = stats::mean(stats::as_array(pooled_power));
    em.mean_sm_util = stats::mean(stats::as_array(pooled_sm));
    em.mean_mem_util = stats::mean(stats::as_array(pooled_mem));
    em.cv_sm_util = coefficient_of_variation(pooled_sm);
    em.cv_mem_util = coefficient_of_variation(pooled_mem);
    return em;
}

RunMetricsResult run_metrics(std::span<const TelemetrySample> samples, std::span<const EpochWindow> windows,
                             const RunManifest& manifest, const MetricsOptions& opts) {
    manifest.validate();
    if (windows.empty()) throw ValidationError("run_metrics: no epoch windows");

    const auto by_gpu = split_by_gpu(samples);

    RunMetricsResult out;
    out.metrics.manifest = manifest;
    for (const auto& w : windows) {
        if (opts.lenient) {
            bool any = false;
            for (const auto& [gpu_id, stream] : by_gpu) {
                (void)gpu_id;
                any = std::any_of(stream.begin(), stream.end(), [&](const TelemetrySample& s) {
                    return s.timestamp_s >= w.start_s && s.timestamp_s <= w.end_s;
                });
                if (any) break;
            }
            if (!any) {
                out.warnings.push_back(format_window(w) + " skipped: no samples in window");
                continue;
            }
        }
        out.metrics.epochs.push_back(epoch_metrics(by_gpu, w, manifest.num_gpus, opts, &out.warnings));
    }
    if (out.metrics.epochs.empty()) throw ValidationError("run_metrics: no usable epochs");

    double time_sum = 0.0;
    double energy_sum = 0.0;
    for (const auto& e : out.metrics.epochs) {
        time_sum += e.wall_time_s;
        energy_sum += e.energy_j;
    }
    out.metrics.mean_epoch_time_s = time_sum / static_cast<double>(out.metrics.epochs.size());
    out.metrics.total_energy_j = energy_sum;
    return out;
}

namespace {

std::string axis_field_name(BaselineSelector::Axis axis) {
    return axis == BaselineSelector::Axis::num_gpus ? "num_gpus" : "power_cap_w";
}

double axis_value_of(const RunMetrics& run, BaselineSelector::Axis axis) {
    return axis == BaselineSelector::Axis::num_gpus ? static_cast<double>(run.manifest.num_gpus)
                                                    : run.manifest.power_cap_w;
}

// The manifest fields that must agree across a normalization family: every
// field except the one being varied.
void check_family_consistency(std::span<const RunMetrics> runs, BaselineSelector::Axis axis) {
    const RunManifest& ref = runs.front().manifest;
    for (const auto& run : runs) {
        const RunManifest& m = run.manifest;
        auto mismatch = [&](const char* field) {
            throw ValidationError(std::string("normalize_runs: runs vary in \"") + field +
                                  "\"; only the " + axis_field_name(axis) + " axis may vary");
        };
        if (m.model != ref.model) mismatch("model");
        if (m.domain != ref.domain) mismatch("domain");
        if (m.clock_cap_mhz != ref.clock_cap_mhz) mismatch("clock_cap_mhz");
        if (m.batch_per_gpu != ref.batch_per_gpu) mismatch("batch_per_gpu");
        if (m.epochs_planned != ref.epochs_planned) mismatch("epochs");
        if (axis == BaselineSelector::Axis::num_gpus) {
            if (m.power_cap_w != ref.power_cap_w) mismatch("power_cap_w");
        } else {
            if (m.num_gpus != ref.num_gpus) mismatch("num_gpus");
        }
    }
}

} // namespace

std::vector<NormalizedPoint> normalize_runs(std::span<const RunMetrics> runs,
                                            const BaselineSelector& baseline) {
    if (runs.empty()) throw ValidationError("normalize_runs: no runs");
    check_family_consistency(runs, baseline.axis);

    std::vector<std::size_t> order(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return axis_value_of(runs[a], baseline.axis) < axis_value_of(runs[b], baseline.axis);
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const double v = axis_value_of(runs[order[i]], baseline.axis);
        if (v == axis_value_of(runs[order[i - 1]], baseline.axis))
            throw ValidationError("normalize_runs: duplicate " + axis_field_name(baseline.axis) + " value " +
                                  std::to_string(v));
    }

    const RunMetrics* base = nullptr;
    if (baseline.axis == BaselineSelector::Axis::num_gpus) {
        base = &runs[order.front()];
    } else {
        for (const auto& run : runs)
            if (run.manifest.power_cap_w == baseline.cap_w) base = &run;
        if (!base)
            throw ValidationError("normalize_runs: baseline power_cap_w " + std::to_string(baseline.cap_w) +
                                  " not present in the run family");
    }
    if (!(base->mean_epoch_time_s > 0.0))
        throw ValidationError("normalize_runs: baseline mean epoch time must be > 0");
    if (!(base->total_energy_j > 0.0))
        throw ValidationError("normalize_runs: baseline total energy must be > 0");

    std::vector<NormalizedPoint> points;
    points.reserve(runs.size());
    for (const std::size_t idx : order) {
        const RunMetrics& run = runs[idx];
        if (!(run.mean_epoch_time_s > 0.0))
            throw ValidationError("normalize_runs: run mean epoch time must be > 0");
        NormalizedPoint p;
        p.axis_value = axis_value_of(run, baseline.axis);
        if (baseline.axis == BaselineSelector::Axis::num_gpus) {
            p.label = "N=" + std::to_string(run.manifest.num_gpus);
        } else {
            const long long cap = std::llround(run.manifest.power_cap_w);
            p.label = "cap=" + std::to_string(cap) + "W";
        }
        p.relative_speed = base->mean_epoch_time_s / run.mean_epoch_time_s;
        p.relative_energy = run.total_energy_j / base->total_energy_j;
        points.push_back(std::move(p));
    }
    return points;
}

} // namespace gpuscale
