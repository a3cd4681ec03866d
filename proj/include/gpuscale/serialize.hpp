// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gpuscale/metrics.hpp"
#include "gpuscale/scaling.hpp"
#include "gpuscale/synth.hpp"
#include "gpuscale/tradeoff.hpp"

namespace gpuscale {

/// JSON object type used for every document. Keys live in a sorted map,
/// so serialization order is deterministic.
using Json = nlohmann::json;

/// (model, power cap, clock cap) identity of one fit group.
struct FitGroupKey {
    std::string model;
    double power_cap_w = 0.0;
    double clock_cap_mhz = 0.0;

    friend bool operator==(const FitGroupKey&, const FitGroupKey&) = default;
    friend bool operator<(const FitGroupKey& a, const FitGroupKey& b) {
        if (a.model != b.model) return a.model < b.model;
        if (a.power_cap_w != b.power_cap_w) return a.power_cap_w < b.power_cap_w;
        return a.clock_cap_mhz < b.clock_cap_mhz;
    }
};

/// One fitted group with the observations that entered the regression, so
/// downstream consumers can re-verify the fit.
struct FitRecord {
    FitGroupKey key;
    Domain domain = Domain::other;
    PowerLawFit fit;
    std::vector<ScalingPoint> points;
};

struct CarbonEstimate {
    double power_cap_w = 0.0;
    double total_energy_j = 0.0;
    double carbon_kg = 0.0;
};

/// Everything the trade-off analysis of one run family produced.
struct TradeoffDocument {
    std::string model;
    int num_gpus = 0;
    double clock_cap_mhz = 0.0;
    double baseline_cap_w = 0.0;
    double max_slowdown = 0.0;
    std::vector<TradeoffPoint> curve;
    CapRecommendation recommendation;
    std::optional<double> carbon_intensity_g_per_kwh;
    std::vector<CarbonEstimate> carbon;
};

struct InputDigest {
    std::string kind;
    std::string digest;
};

/// The material a consolidated report is assembled from. Input documents
/// are embedded verbatim, which is what makes a report reproducible from
/// itself.
struct ReportInputs {
    std::vector<Json> runs;
    std::optional<Json> fits;
    std::vector<Json> tradeoffs;
    std::vector<InputDigest> digests;
    std::vector<std::string> warnings;
};

// --- documents ---------------------------------------------------------------
// Analysis documents round every derived floating-point number to 9
// significant digits before serialization; identity fields (manifests) and
// the generator's ground-truth sidecar keep full precision.

Json run_metrics_document(const RunMetrics& metrics, std::span<const std::string> warnings);
RunMetricsResult run_metrics_from_document(const Json& doc);

Json fits_document(std::span<const FitRecord> records, std::span<const std::string> warnings);
std::pair<std::vector<FitRecord>, std::vector<std::string>> fits_from_document(const Json& doc);

Json tradeoff_document(const TradeoffDocument& doc);
TradeoffDocument tradeoff_from_document(const Json& doc);

Json ground_truth_document(const GeneratedRun& run);

Json report_document(const ReportInputs& inputs);
ReportInputs report_inputs_from_document(const Json& doc);

// --- synthetic spec files ------------------------------------------------------

SyntheticSpec synthetic_spec_from_json(const Json& j);
Json synthetic_spec_to_json(const SyntheticSpec& spec);

/// A spec file holds either one spec object or {"families": [spec, ...]}.
std::vector<SyntheticSpec> spec_families_from_json(const Json& doc);

// --- plot-data CSVs -------------------------------------------------------------

std::string per_epoch_csv(const RunMetrics& metrics);
std::string scaling_curves_csv(std::span<const FitRecord> records);
std::string tradeoff_bars_csv(std::span<const TradeoffDocument> docs);

// --- plumbing -------------------------------------------------------------------

/// Canonical dump: 2-space indent, sorted keys, trailing newline.
std::string dump_document(const Json& doc);

/// Parses JSON text; throws ParseError on malformed input.
Json parse_json(std::string_view text);

/// Checks schema_version and the document's kind tag; throws SchemaError.
void require_kind(const Json& doc, std::string_view kind);

/// "fnv1a64:" + 16 hex digits of the content digest.
std::string content_digest(std::string_view bytes);

} // namespace gpuscale
