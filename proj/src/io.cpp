// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpuscale/errors.hpp"

namespace gpuscale::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open \"" + path.string() + "\" for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for \"" + path.string() + "\"");
    return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    const auto parent = path.parent_path();
    if (!parent.empty()) {
        std::filesystem::create_directories(parent, ec);
        if (ec) throw IoError("cannot create directory \"" + parent.string() + "\": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open \"" + path.string() + "\" for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for \"" + path.string() + "\"");
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

double round_sig(double v, int significant_digits) {
    if (!std::isfinite(v)) return v;
    if (significant_digits < 1) significant_digits = 1;
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general,
                                         significant_digits);
    if (ec != std::errc{}) return v;
    double out = v;
    std::from_chars(buf, ptr, out);
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

} // namespace gpuscale::io
