// Copyright 2026 The SAN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace san {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or usage. The CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor/shape/argument mismatch detected at runtime.
class InputError : public Error {
 public:
  using Error::Error;
};

// Missing or malformed files, incomplete stores, violated dataset invariants.
class DataError : public Error {
 public:
  using Error::Error;
};

inline void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline void require_input(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

}  // namespace san
