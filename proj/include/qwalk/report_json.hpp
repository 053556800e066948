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

// JSON views of every report type the CLI can emit. Keys are snake_case,
// nested objects mirror the struct layout, and nothing here is load-bearing
// for the statistics: these are write-only views.

#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "qwalk/diffusion.hpp"
#include "qwalk/equivalence.hpp"
#include "qwalk/estimators.hpp"
#include "qwalk/markov.hpp"
#include "qwalk/scale.hpp"
#include "qwalk/walk.hpp"

namespace qwalk {

nlohmann::json report_json(const TolerancePolicy& policy);
nlohmann::json report_json(const ClassificationCounts& counts);
nlohmann::json report_json(const HeisenbergReport& report);
nlohmann::json report_json(const EnsembleHeisenbergReport& report);
nlohmann::json report_json(const PhysicalScaleReport& report);
nlohmann::json report_json(const EquiprobabilityReport& report);

// Per-cell detail is emitted only up to 4096 cells; past that the report
// carries "cells_omitted": true plus the aggregate counters.
nlohmann::json report_json(const DecompositionReport& report);
nlohmann::json report_json(const DecompositionCheck& check);
nlohmann::json report_json(const ResidualMomentsReport& report);
nlohmann::json report_json(const MarkovReport& report);
nlohmann::json report_json(const EquivalenceReport& report);
nlohmann::json report_json(const DiffusionChecklist& checklist);
nlohmann::json report_json(const WeakConvergenceReport& report);
nlohmann::json report_json(const DimensionReport& report);

nlohmann::json summary_json(const EnsembleSummary& summary, std::uint64_t seed, std::int64_t n_q);

} // namespace qwalk
