// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gpuscale {

namespace {

// --- small text utilities ---------------------------------------------------

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Splits into lines on '\n'; a trailing '\r' is stripped by trim at use sites.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t c = line.find(sep, pos);
        if (c == std::string_view::npos) {
            out.push_back(trim(line.substr(pos)));
            break;
        }
        out.push_back(trim(line.substr(pos, c - pos)));
        pos = c + 1;
    }
    return out;
}

bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && !s.empty();
}

bool parse_int(std::string_view s, int& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && !s.empty();
}

// --- ISO-8601 timestamps -----------------------------------------------------

// Days since 1970-01-01 for a proleptic Gregorian civil date.
long long days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

// Accepts YYYY-MM-DDTHH:MM:SS[.frac][Z|±hh:mm|±hhmm]; no suffix means UTC.
// Returns seconds since the Unix epoch.
bool parse_iso8601(std::string_view s, double& out) {
    int year, mon, day, hh, mm;
    double ss;
    int consumed = 0;
    // sscanf needs a NUL-terminated buffer
    char buf[64];
    if (s.size() >= sizeof(buf)) return false;
    std::copy(s.begin(), s.end(), buf);
    buf[s.size()] = '\0';
    if (std::sscanf(buf, "%4d-%2d-%2dT%2d:%2d:%lf%n", &year, &mon, &day, &hh, &mm, &ss, &consumed) != 6)
        return false;
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss < 0 || ss >= 61)
        return false;

    double offset_s = 0.0;
    std::string_view rest = s.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty()) {
        if (rest == "Z" || rest == "z") {
            // UTC
        } else if (rest.size() >= 3 && (rest[0] == '+' || rest[0] == '-')) {
            int oh = 0, om = 0;
            std::string_view hv = rest.substr(1, 2);
            if (!parse_int(hv, oh)) return false;
            std::string_view tail = rest.substr(3);
            if (!tail.empty() && tail.front() == ':') tail.remove_prefix(1);
            if (!tail.empty() && !parse_int(tail, om)) return false;
            offset_s = (oh * 3600.0 + om * 60.0) * (rest[0] == '+' ? 1.0 : -1.0);
        } else {
            return false;
        }
    }

    const long long days = days_from_civil(year, static_cast<unsigned>(mon), static_cast<unsigned>(day));
    out = static_cast<double>(days) * 86400.0 + hh * 3600.0 + mm * 60.0 + ss - offset_s;
    return true;
}

// --- formatting ---------------------------------------------------------------

// Shortest decimal representation that parses back to the identical double;
// keeps CSV round trips exact and output byte-deterministic.
void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    out.append(buf, ptr);
}

struct RowError {
    std::string message;
};

bool validate_sample_fields(const TelemetrySample& s, std::string& why) {
    if (!(s.gpu_id >= 0)) {
        why = "gpu_id must be non-negative, got " + std::to_string(s.gpu_id);
        return false;
    }
    auto bad = [&](const char* field, double v, const char* constraint) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s out of range (%s), got %g", field, constraint, v);
        why = buf;
        return false;
    };
    if (!(s.power_w >= 0.0) || !std::isfinite(s.power_w))
        return bad("power_w", s.power_w, ">= 0");
    if (!(s.sm_util_pct >= 0.0 && s.sm_util_pct <= 100.0))
        return bad("sm_util_pct", s.sm_util_pct, "0..100");
    if (!(s.mem_util_pct >= 0.0 && s.mem_util_pct <= 100.0))
        return bad("mem_util_pct", s.mem_util_pct, "0..100");
    if (!(s.sm_clock_mhz > 0.0) || !std::isfinite(s.sm_clock_mhz))
        return bad("sm_clock_mhz", s.sm_clock_mhz, "> 0");
    if (!std::isfinite(s.timestamp_s))
        return bad("timestamp", s.timestamp_s, "finite");
    return true;
}

} // namespace

std::string_view to_string(Domain d) {
    switch (d) {
    case Domain::geometric: return "geometric";
    case Domain::nlp: return "nlp";
    case Domain::vision: return "vision";
    case Domain::other: return "other";
    }
    return "other";
}

std::optional<Domain> domain_from_string(std::string_view s) {
    if (s == "geometric") return Domain::geometric;
    if (s == "nlp") return Domain::nlp;
    if (s == "vision") return Domain::vision;
    if (s == "other") return Domain::other;
    return std::nullopt;
}

void RunManifest::validate() const {
    if (model.empty()) throw ValidationError("manifest: model must be non-empty");
    if (num_gpus < 1) throw ValidationError("manifest: num_gpus must be >= 1, got " + std::to_string(num_gpus));
    if (!(power_cap_w > 0.0)) throw ValidationError("manifest: power_cap_w must be > 0");
    if (!(clock_cap_mhz > 0.0)) throw ValidationError("manifest: clock_cap_mhz must be > 0");
    if (batch_per_gpu < 1) throw ValidationError("manifest: batch_per_gpu must be >= 1");
    if (epochs_planned < 1) throw ValidationError("manifest: epochs must be >= 1");
}

static constexpr std::string_view kTelemetryHeader =
    "timestamp,gpu_id,power_w,sm_util_pct,mem_util_pct,sm_clock_mhz";

TelemetryParseResult parse_telemetry(std::string_view text, const ParseOptions& opts) {
    TelemetryParseResult result;
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]).empty()) {
        if (lines.empty()) return result; // empty file -> empty list
    }

    std::size_t lineno = 0;
    bool header_seen = false;
    // -1: undecided, 0: numeric seconds, 1: ISO-8601 with first-row anchor
    int time_mode = -1;
    double iso_anchor_s = 0.0;
    std::map<int, double> last_ts;

    auto fail = [&](const std::string& msg, std::size_t ln) {
        if (opts.lenient) {
            result.warnings.push_back("line " + std::to_string(ln) + ": " + msg + " (row dropped)");
            return false;
        }
        throw ParseError(msg, ln);
    };

    for (const auto& raw : lines) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kTelemetryHeader)
                throw ParseError("expected header \"" + std::string(kTelemetryHeader) + "\"", lineno);
            header_seen = true;
            continue;
        }

        const auto fields = split_fields(line);
        if (fields.size() != 6) {
            fail("malformed row: expected 6 fields, got " + std::to_string(fields.size()), lineno);
            continue;
        }

        TelemetrySample s;
        double ts_value = 0.0;
        bool ts_ok = false;
        if (time_mode != 1 && parse_double(fields[0], ts_value)) {
            if (time_mode == -1) time_mode = 0;
            ts_ok = true;
        } else if (time_mode != 0) {
            double abs_s = 0.0;
            if (parse_iso8601(fields[0], abs_s)) {
                if (time_mode == -1) {
                    time_mode = 1;
                    iso_anchor_s = abs_s;
                }
                ts_value = abs_s - iso_anchor_s;
                ts_ok = true;
            }
        }
        if (!ts_ok) {
            fail("malformed row: unparseable timestamp \"" + std::string(fields[0]) + "\"", lineno);
            continue;
        }
        s.timestamp_s = ts_value;

        bool fields_ok = parse_int(fields[1], s.gpu_id) && parse_double(fields[2], s.power_w) &&
                         parse_double(fields[3], s.sm_util_pct) && parse_double(fields[4], s.mem_util_pct) &&
                         parse_double(fields[5], s.sm_clock_mhz);
        if (!fields_ok) {
            fail("malformed row: unparseable numeric field", lineno);
            continue;
        }

        std::string why;
        if (!validate_sample_fields(s, why)) {
            fail(why, lineno);
            continue;
        }

        auto [it, fresh] = last_ts.try_emplace(s.gpu_id, s.timestamp_s);
        if (!fresh) {
            if (s.timestamp_s <= it->second) {
                fail("non-monotonic timestamp for gpu " + std::to_string(s.gpu_id), lineno);
                continue;
            }
            it->second = s.timestamp_s;
        }

        result.samples.push_back(s);
    }
    return result;
}

RunManifest parse_manifest(std::string_view text) {
    RunManifest m;
    bool have_model = false, have_domain = false, have_gpus = false, have_power = false,
         have_clock = false, have_batch = false, have_epochs = false;

    std::size_t lineno = 0;
    for (const auto& raw : split_lines(text)) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("manifest line is not key=value", lineno);
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty()) throw ParseError("manifest line has empty key", lineno);

        auto need_int = [&](int& out) {
            if (!parse_int(value, out))
                throw ParseError("manifest key \"" + key + "\" has non-integer value \"" + value + "\"", lineno);
        };
        auto need_double = [&](double& out) {
            if (!parse_double(value, out))
                throw ParseError("manifest key \"" + key + "\" has non-numeric value \"" + value + "\"", lineno);
        };

        if (key == "model") {
            m.model = value;
            have_model = true;
        } else if (key == "domain") {
            auto d = domain_from_string(value);
            if (!d)
                throw ParseError("manifest domain must be one of geometric|nlp|vision|other, got \"" + value + "\"",
                                 lineno);
            m.domain = *d;
            have_domain = true;
        } else if (key == "num_gpus") {
            need_int(m.num_gpus);
            have_gpus = true;
        } else if (key == "power_cap_w") {
            need_double(m.power_cap_w);
            have_power = true;
        } else if (key == "clock_cap_mhz") {
            need_double(m.clock_cap_mhz);
            have_clock = true;
        } else if (key == "batch_per_gpu") {
            need_int(m.batch_per_gpu);
            have_batch = true;
        } else if (key == "epochs") {
            need_int(m.epochs_planned);
            have_epochs = true;
        } else {
            m.extra_settings[key] = value;
        }
    }

    auto require = [](bool have, const char* key) {
        if (!have) throw ValidationError(std::string("manifest missing required key \"") + key + "\"");
    };
    require(have_model, "model");
    require(have_domain, "domain");
    require(have_gpus, "num_gpus");
    require(have_power, "power_cap_w");
    require(have_clock, "clock_cap_mhz");
    require(have_batch, "batch_per_gpu");
    require(have_epochs, "epochs");

    m.validate();
    return m;
}

static constexpr std::string_view kEpochHeader = "epoch,start_s,end_s";

std::vector<EpochWindow> parse_epoch_windows(std::string_view text) {
    std::vector<EpochWindow> windows;
    std::size_t lineno = 0;
    bool header_seen = false;
    for (const auto& raw : split_lines(text)) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kEpochHeader)
                throw ParseError("expected header \"" + std::string(kEpochHeader) + "\"", lineno);
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 3)
            throw ParseError("malformed row: expected 3 fields, got " + std::to_string(fields.size()), lineno);
        EpochWindow w;
        if (!parse_int(fields[0], w.epoch_index) || !parse_double(fields[1], w.start_s) ||
            !parse_double(fields[2], w.end_s))
            throw ParseError("malformed row: unparseable numeric field", lineno);
        if (w.epoch_index < 0) throw ParseError("epoch_index must be non-negative", lineno);
        if (!(w.start_s < w.end_s))
            throw ParseError("epoch window start must be before end (start=" + std::string(fields[1]) +
                                 ", end=" + std::string(fields[2]) + ")",
                             lineno);
        windows.push_back(w);
    }

    std::stable_sort(windows.begin(), windows.end(),
                     [](const EpochWindow& a, const EpochWindow& b) { return a.epoch_index < b.epoch_index; });
    for (std::size_t i = 1; i < windows.size(); ++i) {
        if (windows[i].epoch_index == windows[i - 1].epoch_index)
            throw ValidationError("duplicate epoch_index " + std::to_string(windows[i].epoch_index));
        if (windows[i].start_s < windows[i - 1].end_s)
            throw ValidationError("epoch windows " + std::to_string(windows[i - 1].epoch_index) + " and " +
                                  std::to_string(windows[i].epoch_index) + " overlap");
    }
    return windows;
}

std::string write_telemetry_csv(std::span<const TelemetrySample> samples) {
    std::string out{kTelemetryHeader};
    out.push_back('\n');
    for (const auto& s : samples) {
        append_double(out, s.timestamp_s);
        out.push_back(',');
        out += std::to_string(s.gpu_id);
        out.push_back(',');
        append_double(out, s.power_w);
        out.push_back(',');
        append_double(out, s.sm_util_pct);
        out.push_back(',');
        append_double(out, s.mem_util_pct);
        out.push_back(',');
        append_double(out, s.sm_clock_mhz);
        out.push_back('\n');
    }
    return out;
}

std::string write_epoch_csv(std::span<const EpochWindow> windows) {
    std::string out{kEpochHeader};
    out.push_back('\n');
    for (const auto& w : windows) {
        out += std::to_string(w.epoch_index);
        out.push_back(',');
        append_double(out, w.start_s);
        out.push_back(',');
        append_double(out, w.end_s);
        out.push_back('\n');
    }
    return out;
}

std::string write_manifest(const RunManifest& m) {
    std::string out;
    out += "model=" + m.model + "\n";
    out += "domain=" + std::string(to_string(m.domain)) + "\n";
    out += "num_gpus=" + std::to_string(m.num_gpus) + "\n";
    out += "power_cap_w=";
    append_double(out, m.power_cap_w);
    out.push_back('\n');
    out += "clock_cap_mhz=";
    append_double(out, m.clock_cap_mhz);
    out.push_back('\n');
    out += "batch_per_gpu=" + std::to_string(m.batch_per_gpu) + "\n";
    out += "epochs=" + std::to_string(m.epochs_planned) + "\n";
    for (const auto& [k, v] : m.extra_settings) out += k + "=" + v + "\n";
    return out;
}

std::map<int, std::vector<TelemetrySample>> split_by_gpu(std::span<const TelemetrySample> samples) {
    std::map<int, std::vector<TelemetrySample>> by_gpu;
    for (const auto& s : samples) by_gpu[s.gpu_id].push_back(s);
    return by_gpu;
}

} // namespace gpuscale
