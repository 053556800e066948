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

#include <map>
#include <string>

#include "qwalk/expr.hpp"

namespace qwalk {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

// Grid estimates of coefficient regularity over t_range x x_range:
// sup |f|, and the largest one-step divided differences in x and in t.
// These are finite surrogates for boundedness and Lipschitz constants;
// they lower-bound the true values and converge as the grid refines.
struct RegularityReport {
    double sup_abs = 0.0;
    double lip_x = 0.0;
    double lip_t = 0.0;
    std::int64_t grid_n = 0;
};

// Evaluates on a grid_n x grid_n lattice (grid_n >= 2). Evaluation errors
// propagate with the failing grid location in the "at" field.
RegularityReport regularity_probe(const CoefficientExpr& expr,
                                  const std::map<std::string, double>& params, Range t_range,
                                  Range x_range, std::int64_t grid_n);

} // namespace qwalk
