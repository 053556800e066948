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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qwalk {

inline constexpr const char* kToolVersion = "qwalk 0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);

// Hex digest of the FNV-1a hash of the canonical spec serialization.
std::string spec_hash_hex(const nlohmann::json& canonical_spec);

// Provenance record written next to every artifact. Equal fields except
// duration_seconds imply bit-identical artifacts (the outputs are pure
// functions of spec, scale, seed, and paths).
struct RunManifest {
    std::vector<std::string> command;
    std::string spec_hash;                // empty when no spec file is involved
    std::optional<std::string> spec_hash_b; // second spec (coupled runs)
    std::uint64_t seed = 0;
    std::int64_t n_q = 0;
    std::int64_t paths = 0;
    int threads = 1;
    std::string tool_version = kToolVersion;
    double duration_seconds = 0.0;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);

// Write-to-temp-then-rename; readers never observe a partial file.
void atomic_write_file(const std::string& path, std::string_view content);

} // namespace qwalk
