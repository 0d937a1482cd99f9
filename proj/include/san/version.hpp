// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace san {

inline constexpr const char* kToolName = "san";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace san
