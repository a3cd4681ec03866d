// SPDX-License-Identifier: Apache-2.0
//
// Release gate for the toolkit: ten end-to-end checks, one line of output
// each. Every tolerance is pinned here next to the check it guards. The
// checks rely on independent oracles (closed forms, brute-force searches,
// high-resolution reference integrals) rather than on the library's own
// arithmetic wherever the two could disagree.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpuscale/commands.hpp"
#include "gpuscale/io.hpp"
#include "gpuscale/metrics.hpp"
#include "gpuscale/rng.hpp"
#include "gpuscale/scaling.hpp"
#include "gpuscale/serialize.hpp"
#include "gpuscale/synth.hpp"
#include "gpuscale/tradeoff.hpp"

using namespace gpuscale;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& detail) {
    std::printf("%s %2d: %s\n", pass ? "PASS" : "FAIL", index, detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<ScalingPoint> noiseless_curve(double alpha, double beta, const std::vector<int>& ns) {
    std::vector<ScalingPoint> pts;
    for (int n : ns) pts.push_back({n, alpha * std::pow(static_cast<double>(n), -beta)});
    return pts;
}

std::vector<ScalingPoint> noisy_curve(double alpha, double beta, const std::vector<int>& ns, int reps,
                                      double sigma, std::uint64_t seed) {
    std::vector<ScalingPoint> pts;
    for (int n : ns) {
        RandomStream rng(derive_stream_seed(seed, {1, static_cast<std::uint64_t>(n)}));
        for (int r = 0; r < reps; ++r)
            pts.push_back({n, alpha * std::pow(static_cast<double>(n), -beta) * std::exp(sigma * rng.normal())});
    }
    return pts;
}

const std::vector<int> kPow2To512 = {2, 4, 8, 16, 32, 64, 128, 256, 512};
const std::vector<int> kUpTo424 = {2, 4, 8, 16, 32, 64, 128, 256, 424};

// 1. Noiseless fits must return the generating constants to 1e-9 with a
//    perfect coefficient of determination, in under a second for all six
//    reference exponents.
void criterion_fit_round_trip() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::pair<double, double>> families = {
        {300.0, 0.82}, {80.0, 0.42}, {120.0, 0.87}, {200.0, 0.52}, {250.0, 0.64}, {220.0, 0.44}};
    bool ok = true;
    std::string detail;
    for (const auto& [alpha, beta] : families) {
        const auto fit = fit_power_law(noiseless_curve(alpha, beta, kPow2To512));
        const bool this_ok = std::abs(fit.beta - beta) <= 1e-9 && std::abs(fit.alpha - alpha) <= 1e-9 * alpha &&
                             std::abs(fit.r_squared - 1.0) <= 1e-9;
        if (!this_ok) {
            ok = false;
            detail = "beta " + std::to_string(beta) + " recovered as " + std::to_string(fit.beta) +
                     " r2 " + std::to_string(fit.r_squared);
        }
    }
    const double elapsed = seconds_since(t0);
    if (elapsed >= 1.0) {
        ok = false;
        detail += " too slow: " + std::to_string(elapsed) + " s";
    }
    report(1, ok,
           ok ? "noiseless fits recover all six exponents to 1e-9, R^2 = 1, in " +
                    std::to_string(elapsed) + " s"
              : "noiseless fit round trip: " + detail);
}

// 2. Under lognormal noise (sigma 0.05) the +-2 stderr interval around the
//    fitted exponent must cover the true value in at least 93% of 1000
//    seeded trials (nominal 95%, finite-sample slack), in under 10 s.
void criterion_noise_coverage() {
    const auto t0 = std::chrono::steady_clock::now();
    const double beta_true = 0.87;
    int covered = 0;
    const int trials = 1000;
    for (int s = 0; s < trials; ++s) {
        const auto pts =
            noisy_curve(100.0, beta_true, kUpTo424, 5, 0.05, derive_stream_seed(1, {static_cast<std::uint64_t>(s)}));
        const auto fit = fit_power_law(pts);
        if (std::abs(fit.beta - beta_true) <= 2.0 * fit.beta_stderr) ++covered;
    }
    const double elapsed = seconds_since(t0);
    const bool ok = covered >= 930 && elapsed < 10.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "2-stderr interval covers the true exponent in %d/%d trials (need >= 930), %.2f s",
                  covered, trials, elapsed);
    report(2, ok, buf);
}

// 3. Two families with stderr targets 0.03 and 0.05 and true exponents
//    0.82 and 0.42: the comparison must report a difference of 0.40 within
//    +-0.08 and flag it significant. Noise levels are back-solved from the
//    design (sigma = target_stderr * sqrt(Sxx)); the seed is fixed.
void criterion_fit_comparison() {
    double sx = 0.0, sxx = 0.0;
    int cnt = 0;
    for (int n : kUpTo424)
        for (int r = 0; r < 3; ++r) {
            const double x = std::log(static_cast<double>(n));
            sx += x;
            sxx += x * x;
            ++cnt;
        }
    const double design_sxx = sxx - static_cast<double>(cnt) * (sx / cnt) * (sx / cnt);
    const double sigma_a = 0.03 * std::sqrt(design_sxx);
    const double sigma_b = 0.05 * std::sqrt(design_sxx);

    const std::uint64_t seed = 17;
    const auto a = fit_power_law(noisy_curve(300.0, 0.82, kUpTo424, 3, sigma_a, derive_stream_seed(seed, {10})));
    const auto b = fit_power_law(noisy_curve(80.0, 0.42, kUpTo424, 3, sigma_b, derive_stream_seed(seed, {20})));
    const auto cmp = compare_fits(a, b);
    const bool ok = std::abs(cmp.beta_difference - 0.40) <= 0.08 && cmp.significant;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "exponent difference %.4f (target 0.40 +- 0.08), stderrs %.4f/%.4f, significant=%s",
                  cmp.beta_difference, a.beta_stderr, b.beta_stderr, cmp.significant ? "true" : "false");
    report(3, ok, buf);
}

// 4. Capping sweeps pushed through the ingest+fit commands: the fitted
//    scale factor alpha must strictly increase as the cap tightens, while
//    the fitted exponents stay close: the three clock-cap exponents
//    (0.82/0.90/0.97) may differ by at most 0.12 per adjacent step, the
//    three power-cap exponents (0.82/0.84/0.93) by 0.12 across the sweep.
void criterion_cap_sweep_pattern() {
    const fs::path dir = fs::temp_directory_path() / "gpuscale_acceptance_c4";
    fs::remove_all(dir);
    fs::create_directories(dir);

    struct Family {
        std::string model;
        double clock_mhz;
        double cap_w;
        double mean_draw;
        double alpha;
        double beta;
        std::uint64_t seed;
    };
    const std::vector<Family> families = {
        {"clocksweep", 1380.0, 250.0, 240.0, 300.0, 0.82, 41},
        {"clocksweep", 735.0, 250.0, 240.0, 380.0, 0.90, 42},
        {"clocksweep", 135.0, 250.0, 240.0, 520.0, 0.97, 43},
        {"powersweep", 1380.0, 250.0, 240.0, 300.0, 0.82, 44},
        {"powersweep", 1380.0, 200.0, 190.0, 330.0, 0.84, 45},
        {"powersweep", 1380.0, 100.0, 95.0, 420.0, 0.93, 46},
    };

    std::vector<fs::path> run_dirs;
    for (const auto& f : families) {
        SyntheticSpec spec;
        spec.model = f.model;
        spec.domain = Domain::other;
        spec.alpha = f.alpha;
        spec.beta = f.beta;
        spec.gpu_counts = {2, 4, 8, 16, 32, 64, 128};
        spec.epochs_per_run = 2;
        spec.noise_sigma = 0.01;
        spec.clock_cap_mhz = f.clock_mhz;
        spec.power_profile[f.cap_w] = {f.mean_draw, 5.0, 1.0};
        spec.sampling_interval_s = 0.25;
        spec.seed = f.seed;
        for (int n : spec.gpu_counts) {
            const auto run = generate_run(spec, n, f.cap_w);
            char cell[96];
            std::snprintf(cell, sizeof(cell), "%s_c%.0f_p%.0f_N%d", f.model.c_str(), f.clock_mhz, f.cap_w, n);
            const fs::path run_dir = dir / "runs" / cell;
            write_run(run, run_dir);
            run_dirs.push_back(run_dir);
        }
    }

    CommonOptions common;
    common.out_dir = dir / "metrics";
    IngestArgs ingest;
    ingest.run_dirs = run_dirs;
    std::vector<fs::path> metrics_files;
    for (const auto& p : cmd_ingest(ingest, common))
        if (p.extension() == ".json") metrics_files.push_back(p);

    common.out_dir = dir;
    FitArgs fit_args;
    fit_args.metrics_files = metrics_files;
    const auto fits_path = cmd_fit(fit_args, common);
    const auto doc = parse_json(io::read_file(fits_path));

    // key: cap value along the sweep -> (alpha, beta), with the clock sweep
    // keyed by clock MHz and the power sweep by cap W.
    std::vector<std::pair<double, std::pair<double, double>>> clock_fits, power_fits;
    for (const auto& g : doc.at("groups")) {
        const double alpha = g.at("fit").at("alpha").get<double>();
        const double beta = g.at("fit").at("beta").get<double>();
        if (g.at("model") == "clocksweep")
            clock_fits.push_back({g.at("clock_cap_mhz").get<double>(), {alpha, beta}});
        else
            power_fits.push_back({g.at("power_cap_w").get<double>(), {alpha, beta}});
    }
    std::sort(clock_fits.begin(), clock_fits.end());
    std::sort(power_fits.begin(), power_fits.end());

    bool ok = clock_fits.size() == 3 && power_fits.size() == 3;
    std::string detail;
    if (ok) {
        // Ascending cap order, so alpha must strictly decrease along the vector.
        for (std::size_t i = 1; i < 3; ++i) {
            if (clock_fits[i].second.first >= clock_fits[i - 1].second.first) ok = false;
            if (power_fits[i].second.first >= power_fits[i - 1].second.first) ok = false;
        }
        const double clock_step_1 = std::abs(clock_fits[1].second.second - clock_fits[0].second.second);
        const double clock_step_2 = std::abs(clock_fits[2].second.second - clock_fits[1].second.second);
        double power_min = power_fits[0].second.second, power_max = power_min;
        for (const auto& [cap, ab] : power_fits) {
            power_min = std::min(power_min, ab.second);
            power_max = std::max(power_max, ab.second);
        }
        if (clock_step_1 >= 0.12 || clock_step_2 >= 0.12) ok = false;
        if (power_max - power_min >= 0.12) ok = false;
        char buf[240];
        std::snprintf(buf, sizeof(buf),
                      "alpha strictly increases as caps tighten; exponent spread: clock steps %.3f/%.3f, "
                      "power range %.3f (bound 0.12)",
                      clock_step_1, clock_step_2, power_max - power_min);
        detail = buf;
    } else {
        detail = "expected 3 clock-cap and 3 power-cap fit groups";
    }
    report(4, ok, detail);
    fs::remove_all(dir);
}

// Reference integral for criterion 5: midpoint Riemann sum at 1000 cells
// per inter-sample interval over the same piecewise-linear power model.
double riemann_reference(const std::vector<TelemetrySample>& trace, double start, double end) {
    auto power_at = [&](double t) {
        if (t <= trace.front().timestamp_s) return trace.front().power_w;
        if (t >= trace.back().timestamp_s) return trace.back().power_w;
        for (std::size_t i = 1; i < trace.size(); ++i) {
            if (t <= trace[i].timestamp_s) {
                const double t0 = trace[i - 1].timestamp_s;
                const double t1 = trace[i].timestamp_s;
                const double w = (t - t0) / (t1 - t0);
                return trace[i - 1].power_w * (1.0 - w) + trace[i].power_w * w;
            }
        }
        return trace.back().power_w;
    };
    std::vector<double> edges = {start};
    for (const auto& s : trace)
        if (s.timestamp_s > start && s.timestamp_s < end) edges.push_back(s.timestamp_s);
    edges.push_back(end);
    double total = 0.0;
    for (std::size_t i = 1; i < edges.size(); ++i) {
        const double h = (edges[i] - edges[i - 1]) / 1000.0;
        for (int c = 0; c < 1000; ++c) total += power_at(edges[i - 1] + (c + 0.5) * h) * h;
    }
    return total;
}

// 5. Energy integration: constant power to 1e-12 relative, linear ramps to
//    the closed-form trapezoid, arbitrary traces to the Riemann reference
//    within 1e-9 relative.
void criterion_energy_exactness() {
    auto make_trace = [](const std::vector<std::pair<double, double>>& tp) {
        std::vector<TelemetrySample> trace;
        for (const auto& [t, p] : tp) {
            TelemetrySample s;
            s.timestamp_s = t;
            s.power_w = p;
            s.sm_util_pct = 50;
            s.mem_util_pct = 50;
            s.sm_clock_mhz = 1380;
            trace.push_back(s);
        }
        return trace;
    };

    bool ok = true;
    std::string detail = "constant, ramp, and 100 random traces match their references";

    for (const auto& [p, dt] : std::vector<std::pair<double, double>>{{200, 100}, {250, 3600}, {95, 12.5}}) {
        const auto trace = make_trace({{0, p}, {dt / 2, p}, {dt, p}});
        const double got = integrate_energy(trace, {0, 0.0, dt});
        if (std::abs(got - p * dt) > 1e-12 * p * dt) {
            ok = false;
            detail = "constant power off: " + std::to_string(got) + " vs " + std::to_string(p * dt);
        }
    }

    const auto ramp = make_trace({{0, 100}, {10, 300}});
    if (std::abs(integrate_energy(ramp, {0, 0.0, 10.0}) - 2000.0) > 1e-12 * 2000.0) {
        ok = false;
        detail = "linear ramp does not match the trapezoid closed form";
    }

    RandomStream rng(2024);
    for (int rep = 0; rep < 100 && ok; ++rep) {
        std::vector<std::pair<double, double>> tp;
        double t = 0.0;
        const int n = 4 + static_cast<int>(rng.next_u64() % 24);
        for (int i = 0; i < n; ++i) {
            tp.emplace_back(t, rng.uniform(20.0, 350.0));
            t += rng.uniform(0.1, 4.0);
        }
        const auto trace = make_trace(tp);
        const double span = tp.back().first;
        const double a = rng.uniform(0.0, span * 0.3);
        const double b = a + rng.uniform(span * 0.2, span - a);
        const double got = integrate_energy(trace, {0, a, b});
        const double want = riemann_reference(trace, a, b);
        if (std::abs(got - want) > 1e-9 * std::abs(want)) {
            ok = false;
            detail = "random trace " + std::to_string(rep) + ": " + std::to_string(got) + " vs riemann " +
                     std::to_string(want);
        }
    }
    report(5, ok, detail);
}

// 6. Coefficient of variation: the two closed-form identities plus scale
//    invariance across 100 random series.
void criterion_cv_identities() {
    bool ok = true;
    std::string detail = "constant -> 0, {0,100} -> 1, scale-invariant on 100 random series";

    const std::vector<double> constant = {50, 50, 50};
    const auto cv_const = coefficient_of_variation(constant);
    if (!cv_const || *cv_const != 0.0) {
        ok = false;
        detail = "constant series did not give CV 0";
    }
    const std::vector<double> swing = {0, 100};
    const auto cv_swing = coefficient_of_variation(swing);
    if (!cv_swing || std::abs(*cv_swing - 1.0) > 1e-12) {
        ok = false;
        detail = "{0,100} did not give CV 1";
    }

    RandomStream rng(6);
    for (int rep = 0; rep < 100 && ok; ++rep) {
        std::vector<double> xs;
        const int n = 2 + static_cast<int>(rng.next_u64() % 200);
        for (int i = 0; i < n; ++i) xs.push_back(rng.uniform(1.0, 99.0));
        const double k = rng.uniform(0.001, 1000.0);
        auto scaled = xs;
        for (double& x : scaled) x *= k;
        const double base = *coefficient_of_variation(xs);
        const double after = *coefficient_of_variation(scaled);
        if (std::abs(after - base) > 1e-12 * std::max(1.0, base)) {
            ok = false;
            detail = "scale invariance broken at k=" + std::to_string(k);
        }
    }
    report(6, ok, detail);
}

// 7. The cap selector must agree with brute-force enumeration on 1000
//    random curves, and pick 200 W with at least 10% energy saving on the
//    canonical three-cap curve under a 5% slowdown budget.
void criterion_selector_enumeration() {
    bool ok = true;
    std::string detail;

    RandomStream rng(70707);
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        std::vector<TradeoffPoint> curve;
        const int caps = 1 + static_cast<int>(rng.next_u64() % 10);
        double cap = 320.0;
        for (int c = 0; c < caps; ++c) {
            cap -= rng.uniform(5.0, 30.0);
            TradeoffPoint p;
            p.power_cap_w = cap;
            p.relative_speed = rng.uniform(0.3, 1.15);
            p.relative_energy = std::round(rng.uniform(0.4, 1.3) * 50.0) / 50.0;
            curve.push_back(p);
        }
        const double budget = rng.uniform(0.0, 0.7);
        const auto got = select_optimal_cap(curve, budget);

        const TradeoffPoint* best = nullptr;
        for (const auto& p : curve) {
            if (1.0 - p.relative_speed > budget) continue;
            if (!best || p.relative_energy < best->relative_energy ||
                (p.relative_energy == best->relative_energy && p.power_cap_w < best->power_cap_w))
                best = &p;
        }
        if (best) {
            if (!got.satisfied || got.chosen_cap_w != best->power_cap_w) {
                ok = false;
                detail = "selector disagrees with enumeration on curve " + std::to_string(rep);
            }
        } else {
            const auto top = std::max_element(curve.begin(), curve.end(),
                                              [](const TradeoffPoint& a, const TradeoffPoint& b) {
                                                  return a.power_cap_w < b.power_cap_w;
                                              });
            if (got.satisfied || got.chosen_cap_w != top->power_cap_w) {
                ok = false;
                detail = "fallback disagrees with enumeration on curve " + std::to_string(rep);
            }
        }
    }

    const std::vector<TradeoffPoint> canonical = {
        {250.0, 1.0, 1.0}, {200.0, 0.97, 0.88}, {100.0, 0.65, 0.80}};
    const auto rec = select_optimal_cap(canonical, 0.05);
    if (rec.chosen_cap_w != 200.0 || rec.energy_saving_fraction < 0.10 || !rec.satisfied) {
        ok = false;
        detail = "canonical curve: chose " + std::to_string(rec.chosen_cap_w) + " saving " +
                 std::to_string(rec.energy_saving_fraction);
    }
    if (ok)
        detail = "matches enumeration on 1000 random curves; canonical curve -> 200 W, 12% saving";
    report(7, ok, detail);
}

// 8. Knee detection: a curve flat beyond 64 GPUs must yield exactly 64; a
//    pure power law must yield nothing.
void criterion_knee_detection() {
    std::vector<ScalingPoint> flat;
    const double floor_t = 80.0 * std::pow(64.0, -0.42);
    for (int n : kPow2To512) flat.push_back({n, n <= 64 ? 80.0 * std::pow(n, -0.42) : floor_t});
    const auto knee = detect_saturation_knee(flat);
    const auto none = detect_saturation_knee(noiseless_curve(80.0, 0.42, kPow2To512));
    const bool ok = knee.has_value() && *knee == 64 && !none.has_value();
    report(8, ok,
           ok ? "flat tail beyond 64 GPUs detected at exactly 64; pure power law yields no knee"
              : std::string("knee: got ") + (knee ? std::to_string(*knee) : "none") + ", pure curve " +
                    (none ? std::to_string(*none) : "none"));
}

int run_cli(const std::string& args, const fs::path& workdir) {
    const std::string cmd =
        "cd '" + workdir.string() + "' && '" + GPUSCALE_CLI_PATH + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 9. Determinism end to end: the simulate -> ingest -> fit -> report chain
//    run twice with the same seed must produce byte-identical outputs.
void criterion_pipeline_determinism() {
    const fs::path dir = fs::temp_directory_path() / "gpuscale_acceptance_c9";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream spec(dir / "spec.json");
        spec << R"({"model":"det","domain":"nlp","alpha":90.0,"beta":0.75,
                    "gpu_counts":[2,4,8,16],"epochs_per_run":2,"noise_sigma":0.03,
                    "power_profile":{"250":{"mean_draw_w":230.0,"draw_jitter_w":8.0}},
                    "sampling_interval_s":0.5,"seed":33})";
    }

    bool ok = true;
    std::string detail = "two seeded pipeline runs produced byte-identical report and CSV outputs";
    for (const char* round : {"r1", "r2"}) {
        const std::string r(round);
        if (run_cli("--out " + r + "/runs simulate spec.json", dir) != 0 ||
            run_cli("--out " + r + "/metrics ingest " + r + "/runs/det/N2_cap250W " + r +
                        "/runs/det/N4_cap250W " + r + "/runs/det/N8_cap250W " + r + "/runs/det/N16_cap250W",
                    dir) != 0 ||
            run_cli("--out " + r + " fit " + r + "/metrics/*.json", dir) != 0 ||
            run_cli("--out " + r + "/rep report " + r + "/metrics/*.json --fits " + r + "/fits.json", dir) != 0) {
            ok = false;
            detail = "pipeline round " + r + " failed";
        }
    }
    if (ok) {
        for (const char* file : {"rep/report.json", "rep/scaling_curves.csv", "rep/tradeoff_bars.csv", "fits.json"}) {
            if (io::read_file(dir / "r1" / file) != io::read_file(dir / "r2" / file)) {
                ok = false;
                detail = std::string("outputs differ: ") + file;
            }
        }
    }
    report(9, ok, detail);
    fs::remove_all(dir);
}

// 10. Speedup arithmetic: an ideal-scaling fit gives exactly 128x from 2 to
//     256 GPUs; a 0.87-exponent fit extrapolated from 2 to 424 GPUs lands
//     in [100, 110] (closed form (424/2)^0.87 ~ 105.6).
void criterion_speedup_sanity() {
    PowerLawFit ideal;
    ideal.alpha = 100.0;
    ideal.beta = 1.0;
    ideal.n_points = 9;
    ideal.n_min = 2;
    ideal.n_max = 256;
    const double s_ideal = speedup(ideal, 2, 256);

    const auto fit = fit_power_law(noiseless_curve(120.0, 0.87, {2, 4, 8, 16, 32, 64, 128, 256}));
    const double s_extrap = speedup(fit, 2, 424);
    const bool extrapolated = predict_epoch_time(fit, 424).extrapolated;

    const bool ok = s_ideal == 128.0 && s_extrap >= 100.0 && s_extrap <= 110.0 && extrapolated;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "ideal fit: exactly %gx from 2->256; 0.87 fit extrapolates to %.1fx at 424 GPUs",
                  s_ideal, s_extrap);
    report(10, ok, buf);
}

} // namespace

int main() {
    try {
        criterion_fit_round_trip();
        criterion_noise_coverage();
        criterion_fit_comparison();
        criterion_cap_sweep_pattern();
        criterion_energy_exactness();
        criterion_cv_identities();
        criterion_selector_enumeration();
        criterion_knee_detection();
        criterion_pipeline_determinism();
        criterion_speedup_sanity();
    } catch (const std::exception& e) {
        std::printf("FAIL  ?: unexpected exception: %s\n", e.what());
        ++g_failures;
    }
    if (g_failures == 0) {
        std::printf("all 10 checks passed\n");
        return 0;
    }
    std::printf("%d check(s) failed\n", g_failures);
    return 1;
}
