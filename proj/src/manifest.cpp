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

#include "qwalk/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "qwalk/error.hpp"
#include "qwalk/walk_spec.hpp"

namespace qwalk {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string spec_hash_hex(const nlohmann::json& canonical_spec) {
    const std::uint64_t h = fnv1a64(canonical_json(canonical_spec));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

nlohmann::json manifest_to_json(const RunManifest& manifest) {
    nlohmann::json j;
    j["command"] = manifest.command;
    if (!manifest.spec_hash.empty()) j["spec_hash"] = manifest.spec_hash;
    if (manifest.spec_hash_b) j["spec_hash_b"] = *manifest.spec_hash_b;
    j["seed"] = manifest.seed;
    j["n_q"] = manifest.n_q;
    j["paths"] = manifest.paths;
    j["threads"] = manifest.threads;
    j["tool_version"] = manifest.tool_version;
    j["duration_seconds"] = manifest.duration_seconds;
    return j;
}

void atomic_write_file(const std::string& path, std::string_view content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(errkind::io_error, "cannot open '" + tmp + "' for writing", tmp);
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw Error(errkind::io_error, "write failed for '" + tmp + "'", tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw Error(errkind::io_error, "rename failed for '" + path + "'", path);
    }
}

} // namespace qwalk
