// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace gpuscale {

/// Mirrors the global CLI flags; every subcommand receives a copy.
struct CommonOptions {
    /// Drop malformed telemetry rows and downgrade coverage errors to
    /// warnings instead of failing.
    bool lenient = false;
    /// Compute energy as mean in-window power times wall time instead of
    /// the trapezoidal integral.
    bool mean_power_energy = false;
    /// Average replicate observations per GPU count before fitting.
    bool collapse_replicates = false;
    /// Slowdown budget for power-cap selection.
    double max_slowdown = 0.05;
    /// Baseline cap for trade-off curves; defaults to the highest cap
    /// present in the run family.
    std::optional<double> baseline_cap;
    /// Overrides the seed of every family in a simulation spec file.
    std::optional<std::uint64_t> seed;
    /// Where output files go.
    std::filesystem::path out_dir = ".";
};

struct IngestArgs {
    /// Run directories, each holding telemetry.csv, epochs.csv, manifest.txt.
    std::vector<std::filesystem::path> run_dirs;
    /// Explicit single-run inputs; either all three or none.
    std::optional<std::filesystem::path> telemetry;
    std::optional<std::filesystem::path> epochs;
    std::optional<std::filesystem::path> manifest;
};

/// Parses and aggregates each run, writing one metrics JSON document and
/// one per-epoch CSV per run. Returns the written paths.
std::vector<std::filesystem::path> cmd_ingest(const IngestArgs& args, const CommonOptions& options);

struct FitArgs {
    std::vector<std::filesystem::path> metrics_files;
};

/// Groups observations by (model, power cap, clock cap), fits each group
/// with at least 3 distinct GPU counts, and writes fits.json. Groups that
/// cannot be fitted are skipped with a warning in the document.
std::filesystem::path cmd_fit(const FitArgs& args, const CommonOptions& options);

struct TradeoffArgs {
    std::vector<std::filesystem::path> metrics_files;
    /// Grid carbon intensity in g CO2 per kWh; carbon figures are only
    /// emitted when this is given.
    std::optional<double> carbon_intensity;
};

/// Builds the power-cap trade-off curve of one run family, selects the
/// optimal cap under the slowdown budget, and writes tradeoff.json.
std::filesystem::path cmd_tradeoff(const TradeoffArgs& args, const CommonOptions& options);

struct SimulateArgs {
    std::filesystem::path spec_file;
};

/// Generates every (GPU count, power cap) run of every family in the spec
/// file under out_dir/<model>/N<count>_cap<watts>W/. Returns the run
/// directories.
std::vector<std::filesystem::path> cmd_simulate(const SimulateArgs& args, const CommonOptions& options);

struct ReportArgs {
    std::vector<std::filesystem::path> metrics_files;
    std::optional<std::filesystem::path> fits_file;
    std::vector<std::filesystem::path> tradeoff_files;
    /// Rebuild a report from the inputs embedded in an existing report
    /// document instead of reading fresh inputs.
    std::optional<std::filesystem::path> from_report;
};

/// Assembles the consolidated report plus plot-data CSVs (scaling curves,
/// trade-off bars). Identical inputs produce byte-identical files.
std::vector<std::filesystem::path> cmd_report(const ReportArgs& args, const CommonOptions& options);

} // namespace gpuscale
