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

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qwalk {

// Coefficient expressions over (t, x) with named parameters.
//
// Grammar (binary ops left-associative except '^', which is right-assoc):
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := unary ('^' factor)?
//   unary  := '-' unary | atom
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
// Functions are fixed: exp, sqrt, abs, sin, cos. Any other ident is 't',
// 'x', or a parameter name.

enum class ExprOp : std::uint8_t {
    literal,
    var_t,
    var_x,
    param,
    neg,
    add,
    sub,
    mul,
    divide,
    pow,
    fn_exp,
    fn_sqrt,
    fn_abs,
    fn_sin,
    fn_cos,
};

// Nodes are stored in evaluation (post) order: children always precede
// their parent and the root is the last node.
struct ExprNode {
    ExprOp op{};
    double value = 0.0;        // literal payload
    std::uint32_t a = 0;       // left / only child index
    std::uint32_t b = 0;       // right child index
    std::string name;          // param payload
};

class CoefficientExpr {
public:
    const std::vector<ExprNode>& nodes() const noexcept { return nodes_; }
    std::uint32_t root() const noexcept { return static_cast<std::uint32_t>(nodes_.size() - 1); }
    const std::string& source() const noexcept { return source_; }

    // Parameter names referenced, sorted, deduplicated.
    std::vector<std::string> referenced_params() const;

    // Structural equality (source text ignored).
    bool same_structure(const CoefficientExpr& other) const;

private:
    friend CoefficientExpr parse_expr(std::string_view text);
    friend class ExprBuilder;
    std::vector<ExprNode> nodes_;
    std::string source_;
};

// Parses `text`; throws syntax-error / unknown-function with the byte
// offset of the problem in the "at" field.
CoefficientExpr parse_expr(std::string_view text);

// Canonical text form; parse_expr(print_expr(e)) has the same structure
// as e for any parser-produced e.
std::string print_expr(const CoefficientExpr& expr);

// Tree-walking evaluation. Throws division-by-zero, sqrt-of-negative,
// unbound-parameter, or non-finite-result.
double eval_expr(const CoefficientExpr& expr, double t, double x,
                 const std::map<std::string, double>& params);

// Flat postfix program with parameters bound as constants; the per-step
// evaluation path of the simulator. eval() raises the same error kinds as
// eval_expr and is exception-free on valid inputs.
class CompiledExpr {
public:
    CompiledExpr() = default;

    double eval(double t, double x) const;

    bool is_constant() const noexcept { return constant_; }
    double constant_value() const noexcept { return constant_value_; }

private:
    friend CompiledExpr compile_expr(const CoefficientExpr&,
                                     const std::map<std::string, double>&);
    struct Instr {
        ExprOp op{};
        double value = 0.0;
    };
    std::vector<Instr> code_;
    int stack_need_ = 0;
    bool constant_ = false;
    double constant_value_ = 0.0;

    static constexpr int kInlineStack = 64;
    double eval_slow(double t, double x) const;
    [[noreturn]] static void raise(const char* kind, const char* detail);
};

inline double CompiledExpr::eval(double t, double x) const {
    if (constant_) return constant_value_;
    if (stack_need_ > kInlineStack) return eval_slow(t, x);
    double st[kInlineStack];
    int top = -1;
    for (const Instr& in : code_) {
        switch (in.op) {
        case ExprOp::literal: st[++top] = in.value; break;
        case ExprOp::var_t: st[++top] = t; break;
        case ExprOp::var_x: st[++top] = x; break;
        case ExprOp::neg: st[top] = -st[top]; break;
        case ExprOp::add: --top; st[top] += st[top + 1]; break;
        case ExprOp::sub: --top; st[top] -= st[top + 1]; break;
        case ExprOp::mul: --top; st[top] *= st[top + 1]; break;
        case ExprOp::divide:
            --top;
            if (st[top + 1] == 0.0) raise("division-by-zero", "division by zero");
            st[top] /= st[top + 1];
            break;
        case ExprOp::pow: --top; st[top] = std::pow(st[top], st[top + 1]); break;
        case ExprOp::fn_exp: st[top] = std::exp(st[top]); break;
        case ExprOp::fn_sqrt:
            if (st[top] < 0.0) raise("sqrt-of-negative", "sqrt of a negative value");
            st[top] = std::sqrt(st[top]);
            break;
        case ExprOp::fn_abs: st[top] = std::fabs(st[top]); break;
        case ExprOp::fn_sin: st[top] = std::sin(st[top]); break;
        case ExprOp::fn_cos: st[top] = std::cos(st[top]); break;
        case ExprOp::param: raise("internal-error", "unresolved parameter in compiled code"); break;
        }
    }
    if (!std::isfinite(st[0])) raise("non-finite-result", "expression evaluated to a non-finite value");
    return st[0];
}

CompiledExpr compile_expr(const CoefficientExpr& expr,
                          const std::map<std::string, double>& params);

// Programmatic construction, used by tests and by internal rewrites.
class ExprBuilder {
public:
    std::uint32_t literal(double v);
    std::uint32_t var_t();
    std::uint32_t var_x();
    std::uint32_t param(std::string name);
    std::uint32_t unary(ExprOp op, std::uint32_t child);
    std::uint32_t binary(ExprOp op, std::uint32_t lhs, std::uint32_t rhs);
    CoefficientExpr finish(std::uint32_t root);

private:
    std::vector<ExprNode> nodes_;
};

} // namespace qwalk
