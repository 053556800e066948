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

namespace qwalk {

// Exit codes shared by every subcommand.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;      // config / spec / IO errors
inline constexpr int kExitFail = 2;       // a verification verdict is negative
inline constexpr int kExitUnreliable = 3; // insufficient counts for a verdict

// Full command-line front end. Reports go to stdout as JSON; failures are a
// JSON object {"kind", "detail", "at"} on stderr with exit code 1.
int run_cli(int argc, const char* const* argv);

} // namespace qwalk
