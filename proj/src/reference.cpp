// SPDX-License-Identifier: Apache-2.0
#include "gpuscale/reference.hpp"

#include <cctype>

namespace gpuscale {

std::string_view to_string(Sweep s) {
    switch (s) {
    case Sweep::baseline: return "baseline";
    case Sweep::power_cap: return "power_cap";
    case Sweep::clock_cap: return "clock_cap";
    }
    return "baseline";
}

namespace {

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

} // namespace

const ReferenceFit* find_reference_fit(std::string_view model, Sweep sweep, double power_cap_w,
                                       double clock_cap_mhz) {
    for (const auto& ref : kReferenceFits)
        if (ref.sweep == sweep && ref.power_cap_w == power_cap_w && ref.clock_cap_mhz == clock_cap_mhz &&
            iequals(ref.model, model))
            return &ref;
    return nullptr;
}

} // namespace gpuscale
