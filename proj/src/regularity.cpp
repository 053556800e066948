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

#include "qwalk/regularity.hpp"

#include <cmath>
#include <vector>

#include "qwalk/error.hpp"
#include "qwalk/format.hpp"

namespace qwalk {

RegularityReport regularity_probe(const CoefficientExpr& expr,
                                  const std::map<std::string, double>& params, Range t_range,
                                  Range x_range, std::int64_t grid_n) {
    if (grid_n < 2 || grid_n > 65536) {
        throw Error(errkind::invalid_value, "regularity grid_n must be in [2, 65536]");
    }
    for (const Range& r : {t_range, x_range}) {
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo <= r.hi)) {
            throw Error(errkind::invalid_value, "regularity ranges must be finite with lo <= hi");
        }
    }
    const CompiledExpr compiled = compile_expr(expr, params);

    const auto n = static_cast<std::size_t>(grid_n);
    const double t_step = (t_range.hi - t_range.lo) / static_cast<double>(grid_n - 1);
    const double x_step = (x_range.hi - x_range.lo) / static_cast<double>(grid_n - 1);

    auto grid_t = [&](std::size_t i) { return t_range.lo + t_step * static_cast<double>(i); };
    auto grid_x = [&](std::size_t j) { return x_range.lo + x_step * static_cast<double>(j); };

    RegularityReport out;
    out.grid_n = grid_n;
    std::vector<double> prev_row(n), row(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid_t(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double x = grid_x(j);
            double v;
            try {
                v = compiled.eval(t, x);
            } catch (const Error& e) {
                throw Error(e.kind(), e.what(),
                            "t=" + format_double(t) + ",x=" + format_double(x));
            }
            row[j] = v;
            out.sup_abs = std::max(out.sup_abs, std::fabs(v));
            if (j > 0 && x_step > 0.0) {
                out.lip_x = std::max(out.lip_x, std::fabs(row[j] - row[j - 1]) / x_step);
            }
            if (i > 0 && t_step > 0.0) {
                out.lip_t = std::max(out.lip_t, std::fabs(row[j] - prev_row[j]) / t_step);
            }
        }
        std::swap(prev_row, row);
    }
    return out;
}

} // namespace qwalk
