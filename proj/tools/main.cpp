// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "gpuscale/commands.hpp"
#include "gpuscale/errors.hpp"
#include "gpuscale/version.hpp"

namespace {

// Stable, documented exit codes. Success is 0 only.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitParse = 4;
constexpr int kExitValidation = 5;
constexpr int kExitSchema = 6;

void print_paths(const std::vector<std::filesystem::path>& paths) {
    for (const auto& p : paths) std::cout << p.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    using namespace gpuscale;

    CLI::App app{"GPU training telemetry toolkit: per-epoch metrics, power-law scaling fits, "
                 "power-cap trade-offs, and synthetic benchmark corpora"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    CommonOptions common;
    if (const char* env = std::getenv("GPUSCALE_OUT_DIR")) common.out_dir = env;

    bool strict_flag = false;
    auto* strict = app.add_flag("--strict", strict_flag, "Fail on any malformed input (default)");
    auto* lenient = app.add_flag("--lenient", common.lenient,
                                 "Drop malformed telemetry rows and record warnings instead of failing");
    strict->excludes(lenient);
    lenient->excludes(strict);
    app.add_flag("--paper-energy", common.mean_power_energy,
                 "Energy as mean in-window power times wall time instead of the trapezoidal integral");
    app.add_flag("--collapse-replicates", common.collapse_replicates,
                 "Average replicate observations per GPU count before fitting");
    app.add_option("--max-slowdown", common.max_slowdown, "Slowdown budget for power-cap selection")
        ->capture_default_str();
    app.add_option("--baseline-cap", common.baseline_cap,
                   "Baseline power cap in watts (default: highest cap present)");
    app.add_option("--seed", common.seed, "Override the seed of every simulated family");
    app.add_option("--out", common.out_dir,
                   "Output directory (default: $GPUSCALE_OUT_DIR, else the working directory)");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand(
        "ingest", "Aggregate raw runs into per-run metrics JSON and per-epoch CSV");
    ingest->fallthrough();
    ingest->add_option("runs", ingest_args.run_dirs,
                       "Run directories containing telemetry.csv, epochs.csv, manifest.txt");
    ingest->add_option("--telemetry", ingest_args.telemetry, "Telemetry CSV of a single run");
    ingest->add_option("--epochs", ingest_args.epochs, "Epoch-window CSV of a single run");
    ingest->add_option("--manifest", ingest_args.manifest, "Manifest of a single run");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit the power-law scaling model per (model, caps) group");
    fit->fallthrough();
    fit->add_option("metrics", fit_args.metrics_files, "Metrics JSON files from ingest")->required();

    TradeoffArgs tradeoff_args;
    auto* tradeoff =
        app.add_subcommand("tradeoff", "Recommend an energy-optimal power cap under a slowdown budget");
    tradeoff->fallthrough();
    tradeoff->add_option("metrics", tradeoff_args.metrics_files, "Metrics JSON files of one run family")
        ->required();
    tradeoff->add_option("--carbon-intensity", tradeoff_args.carbon_intensity,
                         "Grid intensity in g CO2 per kWh; enables carbon estimates");

    SimulateArgs simulate_args;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic corpus with known ground truth");
    simulate->fallthrough();
    simulate->add_option("spec", simulate_args.spec_file, "Synthetic spec JSON file")->required();

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Consolidate metrics, fits, and trade-offs into one report");
    report->fallthrough();
    report->add_option("metrics", report_args.metrics_files, "Metrics JSON files to embed");
    report->add_option("--fits", report_args.fits_file, "Fits JSON file to embed");
    report->add_option("--tradeoff", report_args.tradeoff_files, "Trade-off JSON file(s) to embed");
    report->add_option("--from-report", report_args.from_report,
                       "Rebuild from the inputs embedded in an existing report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) print_paths(cmd_ingest(ingest_args, common));
        if (*fit) std::cout << cmd_fit(fit_args, common).string() << "\n";
        if (*tradeoff) std::cout << cmd_tradeoff(tradeoff_args, common).string() << "\n";
        if (*simulate) print_paths(cmd_simulate(simulate_args, common));
        if (*report) print_paths(cmd_report(report_args, common));
        return kExitOk;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
