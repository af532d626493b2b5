// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace satlink {

inline constexpr const char* kToolName = "satlink";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace satlink
