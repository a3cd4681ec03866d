// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "gpuscale/io.hpp"
#include "gpuscale/serialize.hpp"
#include "gpuscale/synth.hpp"

namespace gpuscale {

namespace {

namespace fs = std::filesystem;

MetricsOptions metrics_options(const CommonOptions& options) {
    MetricsOptions mo;
    mo.energy_method = options.mean_power_energy ? EnergyMethod::mean_power : EnergyMethod::trapezoid;
    mo.lenient = options.lenient;
    return mo;
}

std::string sanitize_name(std::string_view s) {
    std::string out;
    for (const char c : s) {
        const auto uc = static_cast<unsigned char>(c);
        out.push_back(std::isalnum(uc) || c == '-' || c == '_' ? c : '_');
    }
    return out.empty() ? std::string("run") : out;
}

std::string run_base_name(const RunManifest& m) {
    return "metrics_" + sanitize_name(m.model) + "_N" + std::to_string(m.num_gpus) + "_cap" +
           std::to_string(std::llround(m.power_cap_w)) + "W_clock" +
           std::to_string(std::llround(m.clock_cap_mhz)) + "MHz";
}

struct RunInput {
    fs::path telemetry;
    fs::path epochs;
    fs::path manifest;
};

RunMetricsResult ingest_one(const RunInput& input, const CommonOptions& options) {
    const RunManifest manifest = parse_manifest(io::read_file(input.manifest));
    const auto parsed = parse_telemetry(io::read_file(input.telemetry), ParseOptions{options.lenient});
    const auto windows = parse_epoch_windows(io::read_file(input.epochs));

    RunMetricsResult result = run_metrics(parsed.samples, windows, manifest, metrics_options(options));
    // Parse-stage warnings come first: they explain any downstream gaps.
    result.warnings.insert(result.warnings.begin(), parsed.warnings.begin(), parsed.warnings.end());
    return result;
}

std::vector<RunMetricsResult> load_metrics_files(std::span<const fs::path> files) {
    if (files.empty()) throw ValidationError("no metrics files given");
    std::vector<RunMetricsResult> runs;
    runs.reserve(files.size());
    for (const auto& path : files) runs.push_back(run_metrics_from_document(parse_json(io::read_file(path))));
    return runs;
}

} // namespace

std::vector<fs::path> cmd_ingest(const IngestArgs& args, const CommonOptions& options) {
    std::vector<RunInput> inputs;
    for (const auto& dir : args.run_dirs)
        inputs.push_back({dir / "telemetry.csv", dir / "epochs.csv", dir / "manifest.txt"});

    const int explicit_parts =
        (args.telemetry ? 1 : 0) + (args.epochs ? 1 : 0) + (args.manifest ? 1 : 0);
    if (explicit_parts == 3)
        inputs.push_back({*args.telemetry, *args.epochs, *args.manifest});
    else if (explicit_parts != 0)
        throw ValidationError("ingest: --telemetry, --epochs, and --manifest must be given together");
    if (inputs.empty()) throw ValidationError("ingest: no run directories or explicit inputs given");

    std::vector<fs::path> written;
    std::set<std::string> taken;
    for (const auto& input : inputs) {
        const RunMetricsResult result = ingest_one(input, options);

        std::string base = run_base_name(result.metrics.manifest);
        if (!taken.insert(base).second) {
            int suffix = 2;
            while (!taken.insert(base + "_" + std::to_string(suffix)).second) ++suffix;
            base += "_" + std::to_string(suffix);
        }

        const fs::path metrics_path = options.out_dir / (base + ".json");
        io::write_file(metrics_path, dump_document(run_metrics_document(result.metrics, result.warnings)));
        written.push_back(metrics_path);

        const fs::path csv_path = options.out_dir / (base + ".epochs.csv");
        io::write_file(csv_path, per_epoch_csv(result.metrics));
        written.push_back(csv_path);
    }
    return written;
}

std::filesystem::path cmd_fit(const FitArgs& args, const CommonOptions& options) {
    const auto runs = load_metrics_files(args.metrics_files);

    struct Group {
        Domain domain = Domain::other;
        std::vector<ScalingPoint> points;
        std::set<int> distinct_n;
    };
    std::map<FitGroupKey, Group> groups;
    for (const auto& run : runs) {
        const RunManifest& m = run.metrics.manifest;
        Group& g = groups[{m.model, m.power_cap_w, m.clock_cap_mhz}];
        g.domain = m.domain;
        for (const auto& e : run.metrics.epochs) {
            g.points.push_back({m.num_gpus, e.wall_time_s});
            g.distinct_n.insert(m.num_gpus);
        }
    }

    std::vector<FitRecord> records;
    std::vector<std::string> warnings;
    for (auto& [key, group] : groups) {
        std::stable_sort(group.points.begin(), group.points.end(),
                         [](const ScalingPoint& a, const ScalingPoint& b) { return a.num_gpus < b.num_gpus; });
        if (group.distinct_n.size() < 3) {
            warnings.push_back("group model=" + key.model + " power_cap_w=" +
                               io::format_double(key.power_cap_w) + " clock_cap_mhz=" +
                               io::format_double(key.clock_cap_mhz) + ": only " +
                               std::to_string(group.distinct_n.size()) +
                               " distinct GPU count(s), need 3; skipped");
            continue;
        }
        FitRecord rec;
        rec.key = key;
        rec.domain = group.domain;
        rec.fit = fit_power_law(group.points, FitOptions{options.collapse_replicates});
        rec.points = std::move(group.points);
        records.push_back(std::move(rec));
    }

    const fs::path out = options.out_dir / "fits.json";
    io::write_file(out, dump_document(fits_document(records, warnings)));
    return out;
}

std::filesystem::path cmd_tradeoff(const TradeoffArgs& args, const CommonOptions& options) {
    const auto loaded = load_metrics_files(args.metrics_files);
    std::vector<RunMetrics> runs;
    runs.reserve(loaded.size());
    for (const auto& r : loaded) runs.push_back(r.metrics);

    double baseline_cap = 0.0;
    if (options.baseline_cap) {
        baseline_cap = *options.baseline_cap;
    } else {
        for (const auto& run : runs) baseline_cap = std::max(baseline_cap, run.manifest.power_cap_w);
    }

    const auto curve = build_tradeoff_curve(runs, baseline_cap);
    const auto recommendation = select_optimal_cap(curve, options.max_slowdown);

    TradeoffDocument doc;
    doc.model = runs.front().manifest.model;
    doc.num_gpus = runs.front().manifest.num_gpus;
    doc.clock_cap_mhz = runs.front().manifest.clock_cap_mhz;
    doc.baseline_cap_w = baseline_cap;
    doc.max_slowdown = options.max_slowdown;
    doc.curve = curve;
    doc.recommendation = recommendation;
    if (args.carbon_intensity) {
        doc.carbon_intensity_g_per_kwh = *args.carbon_intensity;
        std::vector<const RunMetrics*> by_cap;
        for (const auto& run : runs) by_cap.push_back(&run);
        std::sort(by_cap.begin(), by_cap.end(), [](const RunMetrics* a, const RunMetrics* b) {
            return a->manifest.power_cap_w > b->manifest.power_cap_w;
        });
        for (const RunMetrics* run : by_cap)
            doc.carbon.push_back({run->manifest.power_cap_w, run->total_energy_j,
                                  estimate_carbon_kg(run->total_energy_j, *args.carbon_intensity)});
    }

    const fs::path out = options.out_dir / "tradeoff.json";
    io::write_file(out, dump_document(tradeoff_document(doc)));
    return out;
}

std::vector<fs::path> cmd_simulate(const SimulateArgs& args, const CommonOptions& options) {
    auto families = spec_families_from_json(parse_json(io::read_file(args.spec_file)));

    std::vector<fs::path> run_dirs;
    for (auto& spec : families) {
        if (options.seed) spec.seed = *options.seed;
        std::vector<int> counts = spec.gpu_counts;
        std::sort(counts.begin(), counts.end());
        for (const int n : counts) {
            for (const auto& [cap, profile] : spec.power_profile) {
                (void)profile;
                const GeneratedRun run = generate_run(spec, n, cap);
                const fs::path dir = options.out_dir / sanitize_name(spec.model) /
                                     ("N" + std::to_string(n) + "_cap" +
                                      std::to_string(std::llround(cap)) + "W");
                write_run(run, dir);
                run_dirs.push_back(dir);
            }
        }
    }
    return run_dirs;
}

std::vector<fs::path> cmd_report(const ReportArgs& args, const CommonOptions& options) {
    ReportInputs inputs;

    if (args.from_report) {
        if (!args.metrics_files.empty() || args.fits_file || !args.tradeoff_files.empty())
            throw ValidationError("report: --from-report cannot be combined with fresh inputs");
        inputs = report_inputs_from_document(parse_json(io::read_file(*args.from_report)));
    } else {
        if (args.metrics_files.empty() && !args.fits_file && args.tradeoff_files.empty())
            throw ValidationError("report: no inputs given");
        for (const auto& path : args.metrics_files) {
            const std::string text = io::read_file(path);
            const Json doc = parse_json(text);
            require_kind(doc, "run_metrics");
            inputs.runs.push_back(doc);
            inputs.digests.push_back({"run_metrics", content_digest(text)});
        }
        if (args.fits_file) {
            const std::string text = io::read_file(*args.fits_file);
            const Json doc = parse_json(text);
            require_kind(doc, "fits");
            inputs.fits = doc;
            inputs.digests.push_back({"fits", content_digest(text)});
        }
        for (const auto& path : args.tradeoff_files) {
            const std::string text = io::read_file(path);
            const Json doc = parse_json(text);
            require_kind(doc, "tradeoff");
            inputs.tradeoffs.push_back(doc);
            inputs.digests.push_back({"tradeoff", content_digest(text)});
        }
        // Surface every embedded warning at the top level as well, so a
        // report reader sees problems without walking the sections.
        auto collect = [&](const Json& doc) {
            if (const auto it = doc.find("warnings"); it != doc.end())
                for (const auto& w : *it) inputs.warnings.push_back(w.get<std::string>());
        };
        for (const auto& r : inputs.runs) collect(r);
        if (inputs.fits) collect(*inputs.fits);
        for (const auto& t : inputs.tradeoffs) collect(t);
    }

    std::vector<fs::path> written;
    const fs::path report_path = options.out_dir / "report.json";
    io::write_file(report_path, dump_document(report_document(inputs)));
    written.push_back(report_path);

    std::vector<FitRecord> fit_records;
    if (inputs.fits) fit_records = fits_from_document(*inputs.fits).first;
    const fs::path curves_path = options.out_dir / "scaling_curves.csv";
    io::write_file(curves_path, scaling_curves_csv(fit_records));
    written.push_back(curves_path);

    std::vector<TradeoffDocument> tradeoffs;
    tradeoffs.reserve(inputs.tradeoffs.size());
    for (const auto& t : inputs.tradeoffs) tradeoffs.push_back(tradeoff_from_document(t));
    const fs::path bars_path = options.out_dir / "tradeoff_bars.csv";
    io::write_file(bars_path, tradeoff_bars_csv(tradeoffs));
    written.push_back(bars_path);

    return written;
}

} // namespace gpuscale
