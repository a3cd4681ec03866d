// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpuscale/errors.hpp"

namespace gpuscale {

enum class Domain { geometric, nlp, vision, other };

std::string_view to_string(Domain d);
std::optional<Domain> domain_from_string(std::string_view s);

/// One instant of one GPU's readings, relative to run start.
struct TelemetrySample {
    double timestamp_s = 0.0;
    int gpu_id = 0;
    double power_w = 0.0;
    double sm_util_pct = 0.0;
    double mem_util_pct = 0.0;
    double sm_clock_mhz = 0.0;

    bool operator==(const TelemetrySample&) const = default;
};

/// Experiment descriptor: which model was trained, on how many GPUs, and
/// under which power/clock caps. Unrecognized manifest keys are kept
/// verbatim in extra_settings.
struct RunManifest {
    std::string model;
    Domain domain = Domain::other;
    int num_gpus = 0;
    double power_cap_w = 0.0;
    double clock_cap_mhz = 0.0;
    int batch_per_gpu = 0;
    int epochs_planned = 0;
    std::map<std::string, std::string> extra_settings;

    void validate() const;
};

/// Half-open-in-spirit epoch window [start_s, end_s]; samples on either
/// boundary count as inside.
struct EpochWindow {
    int epoch_index = 0;
    double start_s = 0.0;
    double end_s = 0.0;

    bool operator==(const EpochWindow&) const = default;
};

struct ParseOptions {
    /// Lenient mode drops malformed or invariant-violating telemetry rows
    /// and records one warning per dropped row instead of failing.
    bool lenient = false;
};

struct TelemetryParseResult {
    std::vector<TelemetrySample> samples;
    std::vector<std::string> warnings;
};

/// Parses telemetry CSV with header
///   timestamp,gpu_id,power_w,sm_util_pct,mem_util_pct,sm_clock_mhz
/// Rows for different GPUs may be interleaved; row order is preserved.
/// Timestamps are either plain seconds since run start, or ISO-8601
/// instants (all rows, consistently), in which case the first data row
/// anchors t = 0 and every timestamp is converted to seconds from it.
TelemetryParseResult parse_telemetry(std::string_view text, const ParseOptions& opts = {});

/// Parses a flat key=value manifest. Required keys: model, domain,
/// num_gpus, power_cap_w, clock_cap_mhz, batch_per_gpu, epochs. Blank
/// lines and lines starting with '#' are ignored.
RunManifest parse_manifest(std::string_view text);

/// Parses an epoch-window CSV with header epoch,start_s,end_s. Returned
/// windows are sorted by epoch index, validated non-overlapping.
std::vector<EpochWindow> parse_epoch_windows(std::string_view text);

std::string write_telemetry_csv(std::span<const TelemetrySample> samples);
std::string write_epoch_csv(std::span<const EpochWindow> windows);
std::string write_manifest(const RunManifest& manifest);

/// Demultiplexes an interleaved sample list into per-GPU streams,
/// preserving each stream's order.
std::map<int, std::vector<TelemetrySample>> split_by_gpu(std::span<const TelemetrySample> samples);

} // namespace gpuscale
