// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace gpuscale {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

} // namespace gpuscale
