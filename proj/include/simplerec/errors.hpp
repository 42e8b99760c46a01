/*
 * Copyright 2026 The SimpleRec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace simplerec {

/// Bad arguments or configuration; maps to exit code 1 in the CLI.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& message)
      : std::runtime_error(message) {}
};

/// Malformed or inconsistent input data; maps to exit code 2 in the CLI.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& message)
      : std::runtime_error(message) {}
};

/// Numerical failure (NaN/Inf, divergence); maps to exit code 3 in the CLI.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& message)
      : std::runtime_error(message) {}
};

}  // namespace simplerec
