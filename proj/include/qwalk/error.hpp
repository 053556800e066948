/*
 * Copyright 2026 qwalk authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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

namespace qwalk {

// All recoverable failures carry a stable machine-readable kind plus an
// optional location string ("at"). The CLI maps these to a JSON error
// object on stderr and exit code 1.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& detail, std::string at = {})
        : std::runtime_error(detail), kind_(std::move(kind)), at_(std::move(at)) {}

    const std::string& kind() const noexcept { return kind_; }
    const std::string& at() const noexcept { return at_; }

private:
    std::string kind_;
    std::string at_;
};

namespace errkind {
inline constexpr const char* invalid_scale = "invalid-scale";
inline constexpr const char* invalid_value = "invalid-value";
inline constexpr const char* syntax_error = "syntax-error";
inline constexpr const char* unknown_function = "unknown-function";
inline constexpr const char* division_by_zero = "division-by-zero";
inline constexpr const char* sqrt_of_negative = "sqrt-of-negative";
inline constexpr const char* unbound_parameter = "unbound-parameter";
inline constexpr const char* non_finite_result = "non-finite-result";
inline constexpr const char* spec_not_found = "spec-not-found";
inline constexpr const char* spec_parse_error = "spec-parse-error";
inline constexpr const char* spec_invalid = "spec-invalid";
inline constexpr const char* config_error = "config-error";
inline constexpr const char* simulation_error = "simulation-error";
inline constexpr const char* io_error = "io-error";
inline constexpr const char* internal_error = "internal-error";
} // namespace errkind

} // namespace qwalk
