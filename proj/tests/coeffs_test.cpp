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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "qwalk/error.hpp"
#include "qwalk/expr.hpp"
#include "qwalk/regularity.hpp"
#include "qwalk/sign_stream.hpp"
#include "qwalk/walk_spec.hpp"

using namespace qwalk;

namespace {

const std::map<std::string, double> kNoParams;

double ev(const std::string& text, double t, double x,
          const std::map<std::string, double>& params = kNoParams) {
    return eval_expr(parse_expr(text), t, x, params);
}

struct Caught {
    std::string kind;
    std::string at;
};

Caught catch_error(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return {e.kind(), e.at()};
    }
    return {};
}

} // namespace

TEST_CASE("arithmetic follows the usual precedence and associativity") {
    CHECK(ev("0", 0, 0) == 0.0);
    CHECK(ev("2+3*4", 0, 0) == 14.0);
    CHECK(ev("(2+3)*4", 0, 0) == 20.0);
    CHECK(ev("2-3-4", 0, 0) == -5.0);
    CHECK(ev("16/4/2", 0, 0) == 2.0);
    CHECK(ev("2^3^2", 0, 0) == 512.0);   // right associative
    CHECK(ev("-2^2", 0, 0) == 4.0);      // unary minus binds tighter than ^
    CHECK(ev("-(2^2)", 0, 0) == -4.0);
    CHECK(ev("(-2)^2", 0, 0) == 4.0);
    CHECK(ev("2^-1", 0, 0) == 0.5);      // negated exponent needs no parens
    CHECK(ev("--3", 0, 0) == 3.0);
    CHECK(ev("t*x", 2, 3) == 6.0);
    CHECK(ev("t - x", 0.5, 0.25) == 0.25);
    CHECK(ev("1e2 + 0.5", 0, 0) == 100.5);
}

TEST_CASE("functions evaluate through the frozen table") {
    CHECK(ev("exp(0)", 0, 0) == 1.0);
    CHECK(ev("sqrt(4)", 0, 0) == 2.0);
    CHECK(ev("abs(-3)", 0, 0) == 3.0);
    CHECK(ev("sin(0)", 0, 0) == 0.0);
    CHECK(ev("cos(0)", 0, 0) == 1.0);
    CHECK(ev("exp(x)", 0, 1) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    CHECK(ev("sqrt(abs(x))", 0, -9) == 3.0);
}

TEST_CASE("parameters substitute as literals and unknown ones are compile errors") {
    std::map<std::string, double> params{{"a", 2.0}, {"sigma", 0.5}};
    CHECK(ev("a*x", 0, 5, params) == 10.0);
    CHECK(ev("sigma", 0.3, 0.7, params) == 0.5);
    CHECK(ev("a^2 + sigma", 0, 0, params) == 4.5);

    const Caught c = catch_error([&] { ev("b*x", 0, 1, params); });
    CHECK(c.kind == errkind::unbound_parameter);
}

TEST_CASE("evaluation errors carry the documented kinds") {
    CHECK(catch_error([] { ev("x/t", 0, 1); }).kind == errkind::division_by_zero);
    CHECK(catch_error([] { ev("sqrt(x)", 0, -1); }).kind == errkind::sqrt_of_negative);
    CHECK(catch_error([] { ev("exp(x)", 0, 1000); }).kind == errkind::non_finite_result);
    // Constant folding defers errors: compiling "1/0" succeeds and the
    // error surfaces on evaluation, the same as for state-dependent input.
    const CompiledExpr folded = compile_expr(parse_expr("1/0"), kNoParams);
    CHECK(catch_error([&] { (void)folded.eval(0.0, 0.0); }).kind ==
          errkind::division_by_zero);
}

TEST_CASE("syntax errors report a byte offset") {
    const Caught plus_star = catch_error([] { parse_expr("2+*3"); });
    CHECK(plus_star.kind == errkind::syntax_error);
    CHECK(plus_star.at == "2");

    CHECK(catch_error([] { parse_expr(""); }).kind == errkind::syntax_error);
    CHECK(catch_error([] { parse_expr("(1+2"); }).kind == errkind::syntax_error);
    CHECK(catch_error([] { parse_expr("1 2"); }).kind == errkind::syntax_error);
    CHECK(catch_error([] { parse_expr("1e400"); }).kind == errkind::syntax_error);

    const Caught unknown = catch_error([] { parse_expr("x + foo(1)"); });
    CHECK(unknown.kind == errkind::unknown_function);
    CHECK(unknown.at == "4");

    // Identifiers that are not calls are parameters, not function errors.
    const CoefficientExpr e = parse_expr("foo + 1");
    CHECK(e.referenced_params() == std::vector<std::string>{"foo"});
}

TEST_CASE("deeply nested input fails cleanly instead of overflowing") {
    std::string deep;
    for (int i = 0; i < 600; ++i) deep += "(";
    deep += "1";
    for (int i = 0; i < 600; ++i) deep += ")";
    CHECK(catch_error([&] { parse_expr(deep); }).kind == errkind::syntax_error);
}

TEST_CASE("print and reparse reproduce the structure and the value") {
    // Random ASTs from the builder, printed, reparsed, compared.
    for (std::uint64_t trial = 0; trial < 300; ++trial) {
        ExprBuilder b;
        std::uint64_t next = 0;
        auto draw = [&](std::uint64_t mod) {
            return counter_word(0xabcdef, trial, next++) % mod;
        };
        std::vector<std::uint32_t> stack;
        auto push_leaf = [&] {
            const std::uint64_t pick = draw(5);
            if (pick == 0) {
                stack.push_back(b.var_t());
            } else if (pick == 1) {
                stack.push_back(b.var_x());
            } else if (pick == 2) {
                stack.push_back(b.param(draw(2) == 0 ? "a" : "b"));
            } else {
                // Non-negative by construction: a negative literal prints as
                // "-c", which reparses as negation of a literal. The structure
                // property is stated for trees the grammar itself can produce.
                stack.push_back(b.literal(static_cast<double>(draw(19)) / 4.0));
            }
        };
        const int ops = 3 + static_cast<int>(draw(12));
        for (int i = 0; i < ops; ++i) {
            const std::uint64_t pick = draw(10);
            if (stack.empty() || (pick < 4 && stack.size() < 6)) {
                push_leaf();
            } else if (pick < 6 || stack.size() < 2) {
                static const ExprOp kUnary[4] = {ExprOp::neg, ExprOp::fn_abs, ExprOp::fn_cos,
                                                 ExprOp::fn_sin};
                stack.back() = b.unary(kUnary[draw(4)], stack.back());
            } else {
                static const ExprOp kBinary[5] = {ExprOp::add, ExprOp::sub, ExprOp::mul,
                                                  ExprOp::divide, ExprOp::pow};
                const std::uint32_t rhs = stack.back();
                stack.pop_back();
                stack.back() = b.binary(kBinary[draw(5)], stack.back(), rhs);
            }
        }
        while (stack.size() > 1) {
            const std::uint32_t rhs = stack.back();
            stack.pop_back();
            stack.back() = b.binary(ExprOp::add, stack.back(), rhs);
        }
        const CoefficientExpr built = b.finish(stack.back());
        const CoefficientExpr reparsed = parse_expr(built.source());
        CHECK(built.same_structure(reparsed));

        // Where both evaluate, they agree bitwise (same tree, same VM).
        const std::map<std::string, double> params{{"a", 1.25}, {"b", -0.5}};
        const double t = static_cast<double>(draw(8)) / 8.0;
        const double x = static_cast<double>(draw(16)) / 4.0 - 2.0;
        try {
            const double lhs = eval_expr(built, t, x, params);
            const double rhs = eval_expr(reparsed, t, x, params);
            CHECK(lhs == rhs);
        } catch (const Error&) {
            // domain errors are fine; both trees would raise the same one
        }
    }
}

TEST_CASE("printer emits minimal parentheses that survive a round trip") {
    auto canon = [](const std::string& s) { return print_expr(parse_expr(s)); };
    CHECK(canon("2 + 3 * 4") == "2+3*4");
    CHECK(canon("(2+3)*4") == "(2+3)*4");
    CHECK(canon("-(x+t)") == "-(x+t)");
    CHECK(canon("2^(3^2)") == "2^3^2");      // right association needs none
    CHECK(canon("(2^3)^2") == "(2^3)^2");
    CHECK(canon("-2^2") == "-2^2");          // negated base needs none
    CHECK(canon("-(2^2)") == "-(2^2)");
    CHECK(canon("2^-1") == "2^-1");
    CHECK(canon("x-(t-1)") == "x-(t-1)");
    CHECK(canon("x-t-1") == "x-t-1");
    CHECK(canon("exp(x*t)") == "exp(x*t)");
}

TEST_CASE("regularity probe recovers exact constants for affine coefficients") {
    const Range tr{0.0, 1.0};
    const Range xr{-1.0, 1.0};
    const RegularityReport lin = regularity_probe(parse_expr("2*x"), kNoParams, tr, xr, 64);
    CHECK(lin.sup_abs == 2.0);
    CHECK(lin.lip_x == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(lin.lip_t == 0.0);

    const RegularityReport time_only = regularity_probe(parse_expr("3*t"), kNoParams, tr, xr, 64);
    CHECK(time_only.lip_t == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(time_only.lip_x == 0.0);

    // Divided differences of x^2 on [-1, 1] stay below the true slope 2 and
    // approach it as the grid refines.
    const RegularityReport quad = regularity_probe(parse_expr("x*x"), kNoParams, tr, xr, 256);
    CHECK(quad.lip_x > 1.9);
    CHECK(quad.lip_x <= 2.0);
}

TEST_CASE("regularity probe wraps evaluation failures with a location") {
    const Caught c = catch_error(
        [&] { regularity_probe(parse_expr("1/x"), kNoParams, {0.0, 1.0}, {-1.0, 1.0}, 65); });
    CHECK(c.kind == errkind::division_by_zero);
    CHECK(c.at.find("x=") != std::string::npos);
}

TEST_CASE("spec json round-trips bit-exactly through canonical form") {
    const std::string text = R"({
      "drift": "-theta*x",
      "volatility": "sigma",
      "params": {"theta": 1, "sigma": 0.5},
      "x0": {"point": 0.125}
    })";
    const nlohmann::json j = nlohmann::json::parse(text);
    const WalkSpec spec = spec_from_json(j);
    CHECK(canonical_json(spec_to_json(spec)) == canonical_json(j));

    CHECK(spec.drift.source() == "-theta*x");
    CHECK(std::get<X0Point>(spec.x0).value == 0.125);
    CHECK(spec.params.at("sigma") == 0.5);
}

TEST_CASE("spec json round-trips the optional blocks too") {
    const std::string text = R"({
      "drift": "0",
      "volatility": "1",
      "params": {},
      "x0": {"uniform": [-0.5, 0.5]},
      "non_markov": {"running_max_threshold": 0.25, "vol_factor": 2.0},
      "tolerance_policy": {"infinitesimal_cut": 0.001, "appreciable_low": 0.01,
                           "appreciable_high": 100.0, "limited_cut": 1000000.0}
    })";
    const nlohmann::json j = nlohmann::json::parse(text);
    const WalkSpec spec = spec_from_json(j);
    CHECK(canonical_json(spec_to_json(spec)) == canonical_json(j));
    CHECK(spec.running_max_vol.has_value());
    CHECK(spec.running_max_vol->threshold == 0.25);
    CHECK(spec.tolerance_policy.has_value());
    const X0Uniform u = std::get<X0Uniform>(spec.x0);
    CHECK(u.lo == -0.5);
    CHECK(u.hi == 0.5);
}

TEST_CASE("spec json rejects malformed input with precise kinds") {
    auto from_text = [](const std::string& text) {
        return spec_from_json(nlohmann::json::parse(text));
    };

    CHECK(catch_error([&] { from_text(R"({"volatility":"1","params":{},"x0":{"point":0}})"); })
              .kind == errkind::spec_invalid);
    CHECK(catch_error([&] {
              from_text(R"({"drift":"0","volatility":"1","params":{},"x0":{"point":0},"zzz":1})");
          }).kind == errkind::spec_invalid);
    CHECK(catch_error([&] {
              from_text(R"({"drift":"0","volatility":"1","params":{"t":1},"x0":{"point":0}})");
          }).kind == errkind::spec_invalid);
    CHECK(catch_error([&] {
              from_text(R"({"drift":"0","volatility":"1","params":{},"x0":{"uniform":[1,1]}})");
          }).kind == errkind::spec_invalid);

    // Expression errors keep their kind; the location names the key.
    const Caught c = catch_error(
        [&] { from_text(R"({"drift":"2+*3","volatility":"1","params":{},"x0":{"point":0}})"); });
    CHECK(c.kind == errkind::syntax_error);
    CHECK(c.at == "drift:2");

    // Parameters referenced by expressions must be bound.
    CHECK(catch_error([&] {
              from_text(R"({"drift":"a*x","volatility":"1","params":{},"x0":{"point":0}})");
          }).kind == errkind::spec_invalid);
}

TEST_CASE("load_spec_file distinguishes missing, unparsable, and invalid") {
    const Caught missing = catch_error([] { load_spec_file("/nonexistent/nowhere.json"); });
    CHECK(missing.kind == errkind::spec_not_found);

    const std::string bad_json = "/tmp/qwalk_coeffs_bad.json";
    {
        std::FILE* f = std::fopen(bad_json.c_str(), "w");
        std::fputs("{ not json", f);
        std::fclose(f);
    }
    const Caught parse = catch_error([&] { load_spec_file(bad_json); });
    CHECK(parse.kind == errkind::spec_parse_error);
    CHECK(parse.at == bad_json);

    const std::string bad_spec = "/tmp/qwalk_coeffs_invalid.json";
    {
        std::FILE* f = std::fopen(bad_spec.c_str(), "w");
        std::fputs(R"({"drift":"0","volatility":"1","params":{},"x0":{"point":0},"junk":1})", f);
        std::fclose(f);
    }
    const Caught invalid = catch_error([&] { load_spec_file(bad_spec); });
    CHECK(invalid.kind == errkind::spec_invalid);
    CHECK(invalid.at.find(bad_spec) == 0);
}
