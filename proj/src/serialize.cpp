// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "gpuscale/io.hpp"
#include "gpuscale/version.hpp"

namespace gpuscale {

namespace {

// Analysis values pass through libm, whose last-ulp rounding varies across
// platforms; 9 significant digits absorb that while keeping far more
// precision than any downstream use needs.
constexpr int kOutputDigits = 9;

double rounded(double v) { return io::round_sig(v, kOutputDigits); }

Json optional_to_json(const std::optional<double>& v, bool round) {
    if (!v) return nullptr;
    return round ? rounded(*v) : *v;
}

std::optional<double> optional_from_json(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

Json manifest_to_json(const RunManifest& m) {
    Json j;
    j["model"] = m.model;
    j["domain"] = std::string(to_string(m.domain));
    j["num_gpus"] = m.num_gpus;
    j["power_cap_w"] = m.power_cap_w;
    j["clock_cap_mhz"] = m.clock_cap_mhz;
    j["batch_per_gpu"] = m.batch_per_gpu;
    j["epochs"] = m.epochs_planned;
    Json extras = Json::object();
    for (const auto& [k, v] : m.extra_settings) extras[k] = v;
    j["extra_settings"] = std::move(extras);
    return j;
}

RunManifest manifest_from_json(const Json& j) {
    RunManifest m;
    m.model = j.at("model").get<std::string>();
    const auto domain = domain_from_string(j.at("domain").get<std::string>());
    if (!domain) throw SchemaError("manifest domain \"" + j.at("domain").get<std::string>() + "\" is unknown");
    m.domain = *domain;
    m.num_gpus = j.at("num_gpus").get<int>();
    m.power_cap_w = j.at("power_cap_w").get<double>();
    m.clock_cap_mhz = j.at("clock_cap_mhz").get<double>();
    m.batch_per_gpu = j.at("batch_per_gpu").get<int>();
    m.epochs_planned = j.at("epochs").get<int>();
    if (const auto it = j.find("extra_settings"); it != j.end())
        for (const auto& [k, v] : it->items()) m.extra_settings[k] = v.get<std::string>();
    m.validate();
    return m;
}

Json epoch_to_json(const EpochMetrics& e, bool round) {
    auto num = [&](double v) { return round ? rounded(v) : v; };
    Json j;
    j["epoch_index"] = e.epoch_index;
    j["wall_time_s"] = num(e.wall_time_s);
    j["energy_j"] = num(e.energy_j);
    j["mean_power_w"] = num(e.mean_power_w);
    j["mean_sm_util"] = num(e.mean_sm_util);
    j["mean_mem_util"] = num(e.mean_mem_util);
    j["cv_sm_util"] = optional_to_json(e.cv_sm_util, round);
    j["cv_mem_util"] = optional_to_json(e.cv_mem_util, round);
    Json per_gpu = Json::array();
    for (const auto& g : e.per_gpu) {
        Json gj;
        gj["gpu_id"] = g.gpu_id;
        gj["energy_j"] = num(g.energy_j);
        gj["mean_power_w"] = num(g.mean_power_w);
        gj["mean_sm_util"] = num(g.mean_sm_util);
        gj["mean_mem_util"] = num(g.mean_mem_util);
        gj["samples_in_window"] = g.samples_in_window;
        per_gpu.push_back(std::move(gj));
    }
    j["per_gpu"] = std::move(per_gpu);
    return j;
}

EpochMetrics epoch_from_json(const Json& j) {
    EpochMetrics e;
    e.epoch_index = j.at("epoch_index").get<int>();
    e.wall_time_s = j.at("wall_time_s").get<double>();
    e.energy_j = j.at("energy_j").get<double>();
    e.mean_power_w = j.at("mean_power_w").get<double>();
    e.mean_sm_util = j.at("mean_sm_util").get<double>();
    e.mean_mem_util = j.at("mean_mem_util").get<double>();
    e.cv_sm_util = optional_from_json(j.at("cv_sm_util"));
    e.cv_mem_util = optional_from_json(j.at("cv_mem_util"));
    for (const auto& gj : j.at("per_gpu")) {
        GpuEpochStats g;
        g.gpu_id = gj.at("gpu_id").get<int>();
        g.energy_j = gj.at("energy_j").get<double>();
        g.mean_power_w = gj.at("mean_power_w").get<double>();
        g.mean_sm_util = gj.at("mean_sm_util").get<double>();
        g.mean_mem_util = gj.at("mean_mem_util").get<double>();
        g.samples_in_window = gj.at("samples_in_window").get<std::size_t>();
        e.per_gpu.push_back(std::move(g));
    }
    return e;
}

Json fit_to_json(const PowerLawFit& f) {
    Json j;
    j["alpha"] = rounded(f.alpha);
    j["beta"] = rounded(f.beta);
    j["beta_stderr"] = rounded(f.beta_stderr);
    j["alpha_log_stderr"] = rounded(f.alpha_log_stderr);
    j["r_squared"] = rounded(f.r_squared);
    j["n_points"] = f.n_points;
    j["n_min"] = f.n_min;
    j["n_max"] = f.n_max;
    return j;
}

PowerLawFit fit_from_json(const Json& j) {
    PowerLawFit f;
    f.alpha = j.at("alpha").get<double>();
    f.beta = j.at("beta").get<double>();
    f.beta_stderr = j.at("beta_stderr").get<double>();
    f.alpha_log_stderr = j.at("alpha_log_stderr").get<double>();
    f.r_squared = j.at("r_squared").get<double>();
    f.n_points = j.at("n_points").get<int>();
    f.n_min = j.at("n_min").get<int>();
    f.n_max = j.at("n_max").get<int>();
    return f;
}

Json warnings_to_json(std::span<const std::string> warnings) {
    Json arr = Json::array();
    for (const auto& w : warnings) arr.push_back(w);
    return arr;
}

std::vector<std::string> warnings_from_json(const Json& doc) {
    std::vector<std::string> warnings;
    if (const auto it = doc.find("warnings"); it != doc.end())
        for (const auto& w : *it) warnings.push_back(w.get<std::string>());
    return warnings;
}

void append_csv_double(std::string& out, double v) { out += io::format_double(rounded(v)); }

} // namespace

Json run_metrics_document(const RunMetrics& metrics, std::span<const std::string> warnings) {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["kind"] = "run_metrics";
    doc["manifest"] = manifest_to_json(metrics.manifest);
    Json epochs = Json::array();
    for (const auto& e : metrics.epochs) epochs.push_back(epoch_to_json(e, true));
    doc["epochs"] = std::move(epochs);
    doc["mean_epoch_time_s"] = rounded(metrics.mean_epoch_time_s);
    doc["total_energy_j"] = rounded(metrics.total_energy_j);
    doc["warnings"] = warnings_to_json(warnings);
    return doc;
}

RunMetricsResult run_metrics_from_document(const Json& doc) {
    require_kind(doc, "run_metrics");
    RunMetricsResult out;
    out.metrics.manifest = manifest_from_json(doc.at("manifest"));
    for (const auto& ej : doc.at("epochs")) out.metrics.epochs.push_back(epoch_from_json(ej));
    out.metrics.mean_epoch_time_s = doc.at("mean_epoch_time_s").get<double>();
    out.metrics.total_energy_j = doc.at("total_energy_j").get<double>();
    out.warnings = warnings_from_json(doc);
    return out;
}

Json fits_document(std::span<const FitRecord> records, std::span<const std::string> warnings) {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["kind"] = "fits";
    Json groups = Json::array();
    for (const auto& rec : records) {
        Json g;
        g["model"] = rec.key.model;
        g["domain"] = std::string(to_string(rec.domain));
        g["power_cap_w"] = rec.key.power_cap_w;
        g["clock_cap_mhz"] = rec.key.clock_cap_mhz;
        g["fit"] = fit_to_json(rec.fit);
        Json points = Json::array();
        for (const auto& p : rec.points) {
            Json pj;
            pj["num_gpus"] = p.num_gpus;
            pj["epoch_time_s"] = rounded(p.epoch_time_s);
            points.push_back(std::move(pj));
        }
        g["points"] = std::move(points);
        groups.push_back(std::move(g));
    }
    doc["groups"] = std::move(groups);
    doc["warnings"] = warnings_to_json(warnings);
    return doc;
}

std::pair<std::vector<FitRecord>, std::vector<std::string>> fits_from_document(const Json& doc) {
    require_kind(doc, "fits");
    std::vector<FitRecord> records;
    for (const auto& g : doc.at("groups")) {
        FitRecord rec;
        rec.key.model = g.at("model").get<std::string>();
        const auto domain = domain_from_string(g.at("domain").get<std::string>());
        if (!domain) throw SchemaError("fit group domain is unknown");
        rec.domain = *domain;
        rec.key.power_cap_w = g.at("power_cap_w").get<double>();
        rec.key.clock_cap_mhz = g.at("clock_cap_mhz").get<double>();
        rec.fit = fit_from_json(g.at("fit"));
        for (const auto& pj : g.at("points"))
            rec.points.push_back({pj.at("num_gpus").get<int>(), pj.at("epoch_time_s").get<double>()});
        records.push_back(std::move(rec));
    }
    return {std::move(records), warnings_from_json(doc)};
}

Json tradeoff_document(const TradeoffDocument& d) {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["kind"] = "tradeoff";
    doc["model"] = d.model;
    doc["num_gpus"] = d.num_gpus;
    doc["clock_cap_mhz"] = d.clock_cap_mhz;
    doc["baseline_cap_w"] = d.baseline_cap_w;
    doc["max_slowdown"] = rounded(d.max_slowdown);
    Json curve = Json::array();
    for (const auto& p : d.curve) {
        Json pj;
        pj["power_cap_w"] = p.power_cap_w;
        pj["relative_speed"] = rounded(p.relative_speed);
        pj["relative_energy"] = rounded(p.relative_energy);
        curve.push_back(std::move(pj));
    }
    doc["curve"] = std::move(curve);
    Json rec;
    rec["chosen_cap_w"] = d.recommendation.chosen_cap_w;
    rec["energy_saving_fraction"] = rounded(d.recommendation.energy_saving_fraction);
    rec["slowdown_fraction"] = rounded(d.recommendation.slowdown_fraction);
    rec["satisfied"] = d.recommendation.satisfied;
    doc["recommendation"] = std::move(rec);
    if (d.carbon_intensity_g_per_kwh) {
        Json carbon;
        carbon["intensity_g_per_kwh"] = *d.carbon_intensity_g_per_kwh;
        Json per_cap = Json::array();
        for (const auto& c : d.carbon) {
            Json cj;
            cj["power_cap_w"] = c.power_cap_w;
            cj["total_energy_j"] = rounded(c.total_energy_j);
            cj["carbon_kg"] = rounded(c.carbon_kg);
            per_cap.push_back(std::move(cj));
        }
        carbon["per_cap"] = std::move(per_cap);
        doc["carbon"] = std::move(carbon);
    } else {
        doc["carbon"] = nullptr;
    }
    return doc;
}

TradeoffDocument tradeoff_from_document(const Json& doc) {
    require_kind(doc, "tradeoff");
    TradeoffDocument d;
    d.model = doc.at("model").get<std::string>();
    d.num_gpus = doc.at("num_gpus").get<int>();
    d.clock_cap_mhz = doc.at("clock_cap_mhz").get<double>();
    d.baseline_cap_w = doc.at("baseline_cap_w").get<double>();
    d.max_slowdown = doc.at("max_slowdown").get<double>();
    for (const auto& pj : doc.at("curve"))
        d.curve.push_back({pj.at("power_cap_w").get<double>(), pj.at("relative_speed").get<double>(),
                           pj.at("relative_energy").get<double>()});
    const Json& rec = doc.at("recommendation");
    d.recommendation.chosen_cap_w = rec.at("chosen_cap_w").get<double>();
    d.recommendation.energy_saving_fraction = rec.at("energy_saving_fraction").get<double>();
    d.recommendation.slowdown_fraction = rec.at("slowdown_fraction").get<double>();
    d.recommendation.satisfied = rec.at("satisfied").get<bool>();
    const Json& carbon = doc.at("carbon");
    if (!carbon.is_null()) {
        d.carbon_intensity_g_per_kwh = carbon.at("intensity_g_per_kwh").get<double>();
        for (const auto& cj : carbon.at("per_cap"))
            d.carbon.push_back({cj.at("power_cap_w").get<double>(), cj.at("total_energy_j").get<double>(),
                                cj.at("carbon_kg").get<double>()});
    }
    return d;
}

Json ground_truth_document(const GeneratedRun& run) {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["kind"] = "ground_truth";
    doc["manifest"] = manifest_to_json(run.manifest);
    Json epochs = Json::array();
    for (const auto& e : run.truth_epochs) epochs.push_back(epoch_to_json(e, false));
    doc["epochs"] = std::move(epochs);
    doc["mean_epoch_time_s"] = run.truth_mean_epoch_time_s;
    doc["total_energy_j"] = run.truth_total_energy_j;
    return doc;
}

Json report_document(const ReportInputs& inputs) {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["kind"] = "report";
    doc["tool_version"] = kToolVersion;
    Json digests = Json::array();
    for (const auto& d : inputs.digests) {
        Json dj;
        dj["kind"] = d.kind;
        dj["digest"] = d.digest;
        digests.push_back(std::move(dj));
    }
    doc["inputs"] = std::move(digests);
    Json runs = Json::array();
    for (const auto& r : inputs.runs) runs.push_back(r);
    doc["runs"] = std::move(runs);
    doc["fits"] = inputs.fits ? *inputs.fits : Json(nullptr);
    Json tradeoffs = Json::array();
    for (const auto& t : inputs.tradeoffs) tradeoffs.push_back(t);
    doc["tradeoffs"] = std::move(tradeoffs);
    doc["warnings"] = warnings_to_json(inputs.warnings);
    return doc;
}

ReportInputs report_inputs_from_document(const Json& doc) {
    require_kind(doc, "report");
    ReportInputs inputs;
    for (const auto& r : doc.at("runs")) inputs.runs.push_back(r);
    if (!doc.at("fits").is_null()) inputs.fits = doc.at("fits");
    for (const auto& t : doc.at("tradeoffs")) inputs.tradeoffs.push_back(t);
    for (const auto& dj : doc.at("inputs"))
        inputs.digests.push_back({dj.at("kind").get<std::string>(), dj.at("digest").get<std::string>()});
    inputs.warnings = warnings_from_json(doc);
    return inputs;
}

namespace {

double double_key(const std::string& key) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
    if (ec != std::errc{} || ptr != key.data() + key.size())
        throw SchemaError("power_profile key \"" + key + "\" is not a number");
    return v;
}

} // namespace

SyntheticSpec synthetic_spec_from_json(const Json& j) {
    SyntheticSpec spec;
    try {
        if (const auto it = j.find("model"); it != j.end()) spec.model = it->get<std::string>();
        if (const auto it = j.find("domain"); it != j.end()) {
            const auto d = domain_from_string(it->get<std::string>());
            if (!d) throw SchemaError("spec domain \"" + it->get<std::string>() + "\" is unknown");
            spec.domain = *d;
        }
        spec.alpha = j.at("alpha").get<double>();
        spec.beta = j.at("beta").get<double>();
        spec.gpu_counts = j.at("gpu_counts").get<std::vector<int>>();
        if (const auto it = j.find("epochs_per_run"); it != j.end()) spec.epochs_per_run = it->get<int>();
        if (const auto it = j.find("noise_sigma"); it != j.end()) spec.noise_sigma = it->get<double>();
        if (const auto it = j.find("knee"); it != j.end() && !it->is_null()) {
            KneeSpec knee;
            knee.n_star = it->at("n_star").get<int>();
            if (const auto fit = it->find("floor_time_s"); fit != it->end() && !fit->is_null())
                knee.floor_time_s = fit->get<double>();
            spec.knee = knee;
        }
        if (const auto it = j.find("power_profile"); it != j.end()) {
            spec.power_profile.clear();
            for (const auto& [key, pj] : it->items()) {
                PowerCapProfile profile;
                profile.mean_draw_w = pj.at("mean_draw_w").get<double>();
                if (const auto jit = pj.find("draw_jitter_w"); jit != pj.end())
                    profile.draw_jitter_w = jit->get<double>();
                if (const auto ts = pj.find("time_scale"); ts != pj.end())
                    profile.time_scale = ts->get<double>();
                spec.power_profile[double_key(key)] = profile;
            }
        }
        if (const auto it = j.find("clock_cap_mhz"); it != j.end()) spec.clock_cap_mhz = it->get<double>();
        if (const auto it = j.find("batch_per_gpu"); it != j.end()) spec.batch_per_gpu = it->get<int>();
        if (const auto it = j.find("sampling_interval_s"); it != j.end())
            spec.sampling_interval_s = it->get<double>();
        if (const auto it = j.find("sm_util_mean_pct"); it != j.end()) spec.sm_util_mean_pct = it->get<double>();
        if (const auto it = j.find("sm_util_jitter_pct"); it != j.end())
            spec.sm_util_jitter_pct = it->get<double>();
        if (const auto it = j.find("mem_util_mean_pct"); it != j.end())
            spec.mem_util_mean_pct = it->get<double>();
        if (const auto it = j.find("mem_util_jitter_pct"); it != j.end())
            spec.mem_util_jitter_pct = it->get<double>();
        if (const auto it = j.find("seed"); it != j.end()) spec.seed = it->get<std::uint64_t>();
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("synthetic spec: ") + e.what());
    }
    if (spec.power_profile.empty())
        spec.power_profile[250.0] = PowerCapProfile{240.0, 5.0, 1.0};
    spec.validate();
    return spec;
}

Json synthetic_spec_to_json(const SyntheticSpec& spec) {
    Json j;
    j["model"] = spec.model;
    j["domain"] = std::string(to_string(spec.domain));
    j["alpha"] = spec.alpha;
    j["beta"] = spec.beta;
    j["gpu_counts"] = spec.gpu_counts;
    j["epochs_per_run"] = spec.epochs_per_run;
    j["noise_sigma"] = spec.noise_sigma;
    if (spec.knee) {
        Json kj;
        kj["n_star"] = spec.knee->n_star;
        kj["floor_time_s"] = spec.knee->floor_time_s ? Json(*spec.knee->floor_time_s) : Json(nullptr);
        j["knee"] = std::move(kj);
    } else {
        j["knee"] = nullptr;
    }
    Json profile = Json::object();
    for (const auto& [cap, p] : spec.power_profile) {
        Json pj;
        pj["mean_draw_w"] = p.mean_draw_w;
        pj["draw_jitter_w"] = p.draw_jitter_w;
        pj["time_scale"] = p.time_scale;
        profile[io::format_double(cap)] = std::move(pj);
    }
    j["power_profile"] = std::move(profile);
    j["clock_cap_mhz"] = spec.clock_cap_mhz;
    j["batch_per_gpu"] = spec.batch_per_gpu;
    j["sampling_interval_s"] = spec.sampling_interval_s;
    j["sm_util_mean_pct"] = spec.sm_util_mean_pct;
    j["sm_util_jitter_pct"] = spec.sm_util_jitter_pct;
    j["mem_util_mean_pct"] = spec.mem_util_mean_pct;
    j["mem_util_jitter_pct"] = spec.mem_util_jitter_pct;
    j["seed"] = spec.seed;
    return j;
}

std::vector<SyntheticSpec> spec_families_from_json(const Json& doc) {
    std::vector<SyntheticSpec> specs;
    if (const auto it = doc.find("families"); it != doc.end()) {
        for (const auto& fj : *it) specs.push_back(synthetic_spec_from_json(fj));
    } else {
        specs.push_back(synthetic_spec_from_json(doc));
    }
    if (specs.empty()) throw SchemaError("spec file contains no families");
    return specs;
}

std::string per_epoch_csv(const RunMetrics& metrics) {
    std::string out =
        "epoch,wall_time_s,energy_j,mean_power_w,mean_sm_util,mean_mem_util,cv_sm_util,cv_mem_util\n";
    for (const auto& e : metrics.epochs) {
        out += std::to_string(e.epoch_index);
        out.push_back(',');
        append_csv_double(out, e.wall_time_s);
        out.push_back(',');
        append_csv_double(out, e.energy_j);
        out.push_back(',');
        append_csv_double(out, e.mean_power_w);
        out.push_back(',');
        append_csv_double(out, e.mean_sm_util);
        out.push_back(',');
        append_csv_double(out, e.mean_mem_util);
        out.push_back(',');
        if (e.cv_sm_util) append_csv_double(out, *e.cv_sm_util);
        out.push_back(',');
        if (e.cv_mem_util) append_csv_double(out, *e.cv_mem_util);
        out.push_back('\n');
    }
    return out;
}

std::string scaling_curves_csv(std::span<const FitRecord> records) {
    std::string out =
        "model,power_cap_w,clock_cap_mhz,num_gpus,mean_measured_epoch_time_s,fitted_epoch_time_s\n";
    for (const auto& rec : records) {
        // One row per distinct GPU count, ascending.
        std::vector<int> counts;
        for (const auto& p : rec.points) counts.push_back(p.num_gpus);
        std::sort(counts.begin(), counts.end());
        counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
        for (const int n : counts) {
            double sum = 0.0;
            std::size_t k = 0;
            for (const auto& p : rec.points) {
                if (p.num_gpus != n) continue;
                sum += p.epoch_time_s;
                ++k;
            }
            out += rec.key.model;
            out.push_back(',');
            out += io::format_double(rec.key.power_cap_w);
            out.push_back(',');
            out += io::format_double(rec.key.clock_cap_mhz);
            out.push_back(',');
            out += std::to_string(n);
            out.push_back(',');
            append_csv_double(out, sum / static_cast<double>(k));
            out.push_back(',');
            append_csv_double(out, predict_epoch_time(rec.fit, n).epoch_time_s);
            out.push_back('\n');
        }
    }
    return out;
}

std::string tradeoff_bars_csv(std::span<const TradeoffDocument> docs) {
    std::string out = "model,num_gpus,clock_cap_mhz,power_cap_w,relative_speed,relative_energy\n";
    for (const auto& d : docs) {
        for (const auto& p : d.curve) {
            out += d.model;
            out.push_back(',');
            out += std::to_string(d.num_gpus);
            out.push_back(',');
            out += io::format_double(d.clock_cap_mhz);
            out.push_back(',');
            out += io::format_double(p.power_cap_w);
            out.push_back(',');
            append_csv_double(out, p.relative_speed);
            out.push_back(',');
            append_csv_double(out, p.relative_energy);
            out.push_back('\n');
        }
    }
    return out;
}

std::string dump_document(const Json& doc) { return doc.dump(2) + "\n"; }

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

void require_kind(const Json& doc, std::string_view kind) {
    if (!doc.is_object()) throw SchemaError("document is not a JSON object");
    const auto version = doc.find("schema_version");
    if (version == doc.end()) throw SchemaError("document lacks schema_version");
    if (!version->is_number_integer() || version->get<int>() != kSchemaVersion)
        throw SchemaError("unsupported schema_version " + version->dump() + ", expected " +
                          std::to_string(kSchemaVersion));
    const auto k = doc.find("kind");
    if (k == doc.end() || !k->is_string() || k->get<std::string>() != kind)
        throw SchemaError("expected a \"" + std::string(kind) + "\" document, got " +
                          (k == doc.end() ? std::string("no kind tag") : k->dump()));
}

std::string content_digest(std::string_view bytes) { return "fnv1a64:" + io::hex64(io::fnv1a64(bytes)); }

} // namespace gpuscale
