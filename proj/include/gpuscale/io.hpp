// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace gpuscale::io {

/// Reads a whole file; throws IoError with the path on failure.
std::string read_file(const std::filesystem::path& path);

/// Writes a whole file, creating parent directories as needed; throws
/// IoError with the path on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

/// Rounds v to the given number of significant decimal digits. Used for
/// analysis outputs so serialized numbers are stable across platforms
/// whose math libraries round transcendental functions differently.
double round_sig(double v, int significant_digits);

/// FNV-1a 64-bit content digest.
std::uint64_t fnv1a64(std::string_view bytes);

/// Fixed-width lowercase hex of a 64-bit value.
std::string hex64(std::uint64_t v);

} // namespace gpuscale::io
