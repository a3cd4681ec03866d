// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/rng.hpp"

#include <cmath>
#include <numbers>

namespace gpuscale {

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = mix64(base);
    for (std::uint64_t c : coords) {
        h = mix64(h ^ mix64(c));
    }
    return h;
}

} // namespace gpuscale
