// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "gpuscale/metrics.hpp"
#include "gpuscale/rng.hpp"

using namespace gpuscale;

namespace {

std::vector<TelemetrySample> power_trace(const std::vector<std::pair<double, double>>& time_power,
                                         int gpu_id = 0) {
    std::vector<TelemetrySample> samples;
    for (const auto& [t, p] : time_power) {
        TelemetrySample s;
        s.timestamp_s = t;
        s.gpu_id = gpu_id;
        s.power_w = p;
        s.sm_util_pct = 50.0;
        s.mem_util_pct = 50.0;
        s.sm_clock_mhz = 1380.0;
        samples.push_back(s);
    }
    return samples;
}

// Midpoint-Riemann reference for the same piecewise-linear power model the
// integrator is specified against: linear between samples, constant beyond
// the sampled span. Written against its own lerp so an integrator bug can't
// hide in shared code.
double riemann_energy(const std::vector<TelemetrySample>& samples, double start, double end,
                      int cells_per_interval = 1000) {
    auto power_at = [&](double t) {
        if (t <= samples.front().timestamp_s) return samples.front().power_w;
        if (t >= samples.back().timestamp_s) return samples.back().power_w;
        for (std::size_t i = 1; i < samples.size(); ++i) {
            if (t <= samples[i].timestamp_s) {
                const double t0 = samples[i - 1].timestamp_s;
                const double t1 = samples[i].timestamp_s;
                const double w = (t - t0) / (t1 - t0);
                return samples[i - 1].power_w * (1.0 - w) + samples[i].power_w * w;
            }
        }
        return samples.back().power_w;
    };
    // Integrate interval by interval so cell edges line up with the kinks
    // of the piecewise-linear trace.
    std::vector<double> edges = {start};
    for (const auto& s : samples)
        if (s.timestamp_s > start && s.timestamp_s < end) edges.push_back(s.timestamp_s);
    edges.push_back(end);
    double total = 0.0;
    for (std::size_t i = 1; i < edges.size(); ++i) {
        const double a = edges[i - 1];
        const double b = edges[i];
        const double h = (b - a) / cells_per_interval;
        for (int c = 0; c < cells_per_interval; ++c) total += power_at(a + (c + 0.5) * h) * h;
    }
    return total;
}

} // namespace

TEST_CASE("constant power integrates to power times duration") {
    const auto trace = power_trace({{0, 200}, {50, 200}, {100, 200}});
    const double e = integrate_energy(trace, {0, 0.0, 100.0});
    CHECK(e == doctest::Approx(20000.0).epsilon(1e-12));
}

TEST_CASE("linear ramp integrates to the trapezoid area exactly") {
    const auto trace = power_trace({{0, 100}, {10, 300}});
    CHECK(integrate_energy(trace, {0, 0.0, 10.0}) == doctest::Approx(2000.0).epsilon(1e-12));
    // Half windows of the ramp: [0,5] has mean power 150, [5,10] has 250.
    CHECK(integrate_energy(trace, {0, 0.0, 5.0}) == doctest::Approx(750.0).epsilon(1e-12));
    CHECK(integrate_energy(trace, {0, 5.0, 10.0}) == doctest::Approx(1250.0).epsilon(1e-12));
}

TEST_CASE("integrator agrees with a midpoint-Riemann reference on random traces") {
    RandomStream rng(911);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::pair<double, double>> tp;
        double t = 0.0;
        const int n = 5 + static_cast<int>(rng.next_u64() % 20);
        for (int i = 0; i < n; ++i) {
            tp.emplace_back(t, rng.uniform(50.0, 350.0));
            t += rng.uniform(0.2, 3.0);
        }
        const auto trace = power_trace(tp);
        const double span = tp.back().first;
        const double a = rng.uniform(0.0, span * 0.4);
        const double b = a + rng.uniform(span * 0.1, span - a);
        const double got = integrate_energy(trace, {0, a, b});
        const double want = riemann_energy(trace, a, b);
        REQUIRE(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("energy is additive across adjacent windows") {
    RandomStream rng(17);
    std::vector<std::pair<double, double>> tp;
    double t = 0.0;
    for (int i = 0; i < 30; ++i) {
        tp.emplace_back(t, rng.uniform(100.0, 300.0));
        t += rng.uniform(0.5, 2.0);
    }
    const auto trace = power_trace(tp);
    const double mid = t * 0.37;
    const double whole = integrate_energy(trace, {0, 0.0, t});
    const double left = integrate_energy(trace, {0, 0.0, mid});
    const double right = integrate_energy(trace, {0, mid, t});
    CHECK(left + right == doctest::Approx(whole).epsilon(1e-12));
}

TEST_CASE("energy scales linearly with power") {
    auto trace = power_trace({{0, 120}, {4, 180}, {9, 90}});
    const double base = integrate_energy(trace, {0, 0.0, 9.0});
    for (auto& s : trace) s.power_w *= 3.0;
    CHECK(integrate_energy(trace, {0, 0.0, 9.0}) == doctest::Approx(3.0 * base).epsilon(1e-12));
}

TEST_CASE("window extension beyond the trace is capped at one median gap") {
    const auto trace = power_trace({{0, 200}, {1, 200}, {2, 200}, {3, 200}});
    // Median gap is 1 s; 0.9 s past the last sample is tolerated with the
    // constant extension, 1.5 s is not.
    CHECK(integrate_energy(trace, {0, 0.0, 3.9}) == doctest::Approx(780.0).epsilon(1e-12));
    CHECK_THROWS_AS(integrate_energy(trace, {0, 0.0, 4.5}), ValidationError);
    std::vector<std::string> warnings;
    const MetricsOptions lenient{.energy_method = EnergyMethod::trapezoid, .lenient = true};
    CHECK(integrate_energy(trace, {0, 0.0, 4.5}, lenient, &warnings) ==
          doctest::Approx(900.0).epsilon(1e-12));
    CHECK(warnings.size() == 1);
}

TEST_CASE("mean-power method multiplies the in-window mean by wall time") {
    // Samples at 0,1,2,3 with values 100,200,300,400 in [0,3]: mean 250.
    const auto trace = power_trace({{0, 100}, {1, 200}, {2, 300}, {3, 400}});
    const MetricsOptions opts{.energy_method = EnergyMethod::mean_power, .lenient = false};
    CHECK(integrate_energy(trace, {0, 0.0, 3.0}, opts) == doctest::Approx(750.0).epsilon(1e-12));
    // The trapezoid of the same trace happens to agree here (linear trace).
    CHECK(integrate_energy(trace, {0, 0.0, 3.0}) == doctest::Approx(750.0).epsilon(1e-12));
}

TEST_CASE("coefficient of variation handles the defined cases") {
    const std::vector<double> constant = {50, 50, 50};
    CHECK(*coefficient_of_variation(constant) == 0.0);

    const std::vector<double> swing = {0, 100};
    CHECK(*coefficient_of_variation(swing) == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> zeros = {0, 0, 0};
    CHECK(!coefficient_of_variation(zeros).has_value());

    CHECK_THROWS_AS(coefficient_of_variation(std::vector<double>{}), ValidationError);
}

TEST_CASE("coefficient of variation matches a two-pass reference and is scale invariant") {
    RandomStream rng(5);
    std::vector<double> xs;
    for (int i = 0; i < 1000; ++i) xs.push_back(rng.uniform(10.0, 90.0));
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    const double want = std::sqrt(var) / mean;
    CHECK(*coefficient_of_variation(xs) == doctest::Approx(want).epsilon(1e-12));

    auto scaled = xs;
    for (double& x : scaled) x *= 7.25;
    CHECK(*coefficient_of_variation(scaled) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("epoch metrics pool all GPUs and keep per-GPU breakdowns") {
    auto g0 = power_trace({{0, 100}, {10, 100}}, 0);
    auto g1 = power_trace({{0, 300}, {10, 300}}, 1);
    g1[0].sm_util_pct = g1[1].sm_util_pct = 100.0;
    g0[0].sm_util_pct = g0[1].sm_util_pct = 0.0;
    std::map<int, std::vector<TelemetrySample>> by_gpu = {{0, g0}, {1, g1}};

    const auto m = epoch_metrics(by_gpu, {0, 0.0, 10.0}, 2);
    CHECK(m.wall_time_s == 10.0);
    CHECK(m.energy_j == doctest::Approx(4000.0).epsilon(1e-12));
    CHECK(m.mean_power_w == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(m.mean_sm_util == doctest::Approx(50.0).epsilon(1e-12));
    REQUIRE(m.cv_sm_util.has_value());
    CHECK(*m.cv_sm_util == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(m.per_gpu.size() == 2);
    CHECK(m.per_gpu[0].energy_j == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK(m.per_gpu[1].energy_j == doctest::Approx(3000.0).epsilon(1e-12));
    CHECK(m.per_gpu[1].samples_in_window == 2);
}

TEST_CASE("strict epoch metrics require every expected GPU in window") {
    std::map<int, std::vector<TelemetrySample>> by_gpu = {
        {0, power_trace({{0, 100}, {10, 100}}, 0)}};
    CHECK_THROWS_AS(epoch_metrics(by_gpu, {0, 0.0, 10.0}, 2), ValidationError);
    std::vector<std::string> warnings;
    const MetricsOptions lenient{.energy_method = EnergyMethod::trapezoid, .lenient = true};
    const auto m = epoch_metrics(by_gpu, {0, 0.0, 10.0}, 2, lenient, &warnings);
    CHECK(m.energy_j == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK(!warnings.empty());
}

TEST_CASE("boundary samples belong to the window on both edges") {
    const auto trace = power_trace({{0, 100}, {5, 100}, {10, 100}});
    const auto by_gpu = split_by_gpu(trace);
    const auto m = epoch_metrics(by_gpu, {0, 0.0, 10.0}, 1);
    CHECK(m.per_gpu[0].samples_in_window == 3);
    const auto m2 = epoch_metrics(by_gpu, {0, 5.0, 10.0}, 1);
    CHECK(m2.per_gpu[0].samples_in_window == 2);
}

TEST_CASE("run metrics aggregate epochs into run totals") {
    RunManifest manifest;
    manifest.model = "M";
    manifest.num_gpus = 2;
    manifest.power_cap_w = 250;
    manifest.clock_cap_mhz = 1380;
    manifest.batch_per_gpu = 8;
    manifest.epochs_planned = 2;

    std::vector<TelemetrySample> samples;
    for (int g = 0; g < 2; ++g)
        for (const auto& s : power_trace({{0, 200}, {5, 200}, {10, 200}, {15, 200}, {20, 200}}, g))
            samples.push_back(s);
    const std::vector<EpochWindow> windows = {{0, 0.0, 12.0}, {1, 12.0, 20.0}};

    const auto result = run_metrics(samples, windows, manifest);
    REQUIRE(result.metrics.epochs.size() == 2);
    CHECK(result.metrics.mean_epoch_time_s == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(result.metrics.total_energy_j == doctest::Approx(2 * 200.0 * 20.0).epsilon(1e-12));
    CHECK(result.warnings.empty());
}

TEST_CASE("lenient run metrics skip epochs with no samples at all") {
    RunManifest manifest;
    manifest.model = "M";
    manifest.num_gpus = 1;
    manifest.power_cap_w = 250;
    manifest.clock_cap_mhz = 1380;
    manifest.batch_per_gpu = 8;
    manifest.epochs_planned = 2;

    const auto samples = power_trace({{0, 200}, {10, 200}});
    const std::vector<EpochWindow> windows = {{0, 0.0, 10.0}, {1, 100.0, 110.0}};
    CHECK_THROWS_AS(run_metrics(samples, windows, manifest), ValidationError);

    const MetricsOptions lenient{.energy_method = EnergyMethod::trapezoid, .lenient = true};
    const auto result = run_metrics(samples, windows, manifest, lenient);
    CHECK(result.metrics.epochs.size() == 1);
    REQUIRE(!result.warnings.empty());
    CHECK(result.warnings.back().find("skipped") != std::string::npos);
}

namespace {

RunMetrics family_run(const std::string& model, int n, double cap, double mean_t, double energy) {
    RunMetrics run;
    run.manifest.model = model;
    run.manifest.domain = Domain::nlp;
    run.manifest.num_gpus = n;
    run.manifest.power_cap_w = cap;
    run.manifest.clock_cap_mhz = 1380;
    run.manifest.batch_per_gpu = 8;
    run.manifest.epochs_planned = 1;
    run.mean_epoch_time_s = mean_t;
    run.total_energy_j = energy;
    return run;
}

} // namespace

TEST_CASE("normalize_runs maps the baseline to exactly one-one") {
    const std::vector<RunMetrics> runs = {
        family_run("B", 4, 250, 30.0, 9000.0),
        family_run("B", 2, 250, 55.0, 8000.0),
        family_run("B", 8, 250, 17.0, 10000.0),
    };
    const auto points = normalize_runs(runs, BaselineSelector::smallest_n());
    REQUIRE(points.size() == 3);
    CHECK(points[0].label == "N=2");
    CHECK(points[0].relative_speed == 1.0);
    CHECK(points[0].relative_energy == 1.0);
    CHECK(points[1].axis_value == 4.0);
    CHECK(points[1].relative_speed == doctest::Approx(55.0 / 30.0).epsilon(1e-12));
    CHECK(points[2].relative_energy == doctest::Approx(10000.0 / 8000.0).epsilon(1e-12));
}

TEST_CASE("normalize_runs along the cap axis uses the requested baseline") {
    const std::vector<RunMetrics> runs = {
        family_run("B", 16, 250, 10.0, 12000.0),
        family_run("B", 16, 200, 10.5, 10000.0),
        family_run("B", 16, 100, 16.0, 9000.0),
    };
    const auto points = normalize_runs(runs, BaselineSelector::at_cap(250.0));
    REQUIRE(points.size() == 3);
    CHECK(points[0].label == "cap=100W");
    CHECK(points[2].label == "cap=250W");
    CHECK(points[2].relative_speed == 1.0);
    CHECK(points[1].relative_speed == doctest::Approx(10.0 / 10.5).epsilon(1e-12));

    CHECK_THROWS_AS(normalize_runs(runs, BaselineSelector::at_cap(777.0)), ValidationError);
}

TEST_CASE("normalize_runs rejects families varying along two axes") {
    const std::vector<RunMetrics> runs = {
        family_run("B", 2, 250, 55.0, 8000.0),
        family_run("B", 4, 200, 30.0, 9000.0),
    };
    CHECK_THROWS_AS(normalize_runs(runs, BaselineSelector::smallest_n()), ValidationError);

    const std::vector<RunMetrics> mixed_models = {
        family_run("A", 2, 250, 55.0, 8000.0),
        family_run("B", 4, 250, 30.0, 9000.0),
    };
    CHECK_THROWS_AS(normalize_runs(mixed_models, BaselineSelector::smallest_n()), ValidationError);

    const std::vector<RunMetrics> duplicate_axis = {
        family_run("B", 2, 250, 55.0, 8000.0),
        family_run("B", 2, 250, 54.0, 8100.0),
    };
    CHECK_THROWS_AS(normalize_runs(duplicate_axis, BaselineSelector::smallest_n()), ValidationError);
}
