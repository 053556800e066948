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

#include "qwalk/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "qwalk/error.hpp"
#include "qwalk/format.hpp"

namespace qwalk {

namespace {

constexpr int kMaxNesting = 512;

struct FnEntry {
    const char* name;
    ExprOp op;
};
constexpr std::array<FnEntry, 5> kFunctions = {{
    {"exp", ExprOp::fn_exp},
    {"sqrt", ExprOp::fn_sqrt},
    {"abs", ExprOp::fn_abs},
    {"sin", ExprOp::fn_sin},
    {"cos", ExprOp::fn_cos},
}};

bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) {
    return ident_start(c) || (c >= '0' && c <= '9');
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::vector<ExprNode> run() {
        const std::uint32_t root = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        (void)root;
        return std::move(nodes_);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    std::vector<ExprNode> nodes_;

    [[noreturn]] void fail(const std::string& what, std::size_t at_pos) const {
        throw Error(errkind::syntax_error, what, std::to_string(at_pos));
    }
    [[noreturn]] void fail(const std::string& what) const { fail(what, pos_); }

    void skip_ws() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else {
                break;
            }
        }
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::uint32_t push(ExprNode node) {
        nodes_.push_back(std::move(node));
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    std::uint32_t push_binary(ExprOp op, std::uint32_t lhs, std::uint32_t rhs) {
        ExprNode n;
        n.op = op;
        n.a = lhs;
        n.b = rhs;
        return push(std::move(n));
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxNesting) p.fail("expression nesting too deep");
        }
        ~DepthGuard() { --p.depth_; }
    };

    std::uint32_t parse_sum() {
        DepthGuard guard(*this);
        std::uint32_t lhs = parse_term();
        for (;;) {
            skip_ws();
            if (consume('+')) {
                lhs = push_binary(ExprOp::add, lhs, parse_term());
            } else if (consume('-')) {
                lhs = push_binary(ExprOp::sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    std::uint32_t parse_term() {
        DepthGuard guard(*this);
        std::uint32_t lhs = parse_factor();
        for (;;) {
            skip_ws();
            if (consume('*')) {
                lhs = push_binary(ExprOp::mul, lhs, parse_factor());
            } else if (consume('/')) {
                lhs = push_binary(ExprOp::divide, lhs, parse_factor());
            } else {
                return lhs;
            }
        }
    }

    std::uint32_t parse_factor() {
        DepthGuard guard(*this);
        const std::uint32_t base = parse_unary();
        skip_ws();
        if (consume('^')) {
            return push_binary(ExprOp::pow, base, parse_factor());
        }
        return base;
    }

    std::uint32_t parse_unary() {
        DepthGuard guard(*this);
        skip_ws();
        if (consume('-')) {
            const std::uint32_t child = parse_unary();
            ExprNode n;
            n.op = ExprOp::neg;
            n.a = child;
            return push(std::move(n));
        }
        return parse_atom();
    }

    std::uint32_t parse_atom() {
        DepthGuard guard(*this);
        skip_ws();
        const char c = peek();
        if (c == '(') {
            ++pos_;
            const std::uint32_t inner = parse_sum();
            skip_ws();
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (ident_start(c)) return parse_ident();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        fail("expected a number, name, or '('");
    }

    std::uint32_t parse_number() {
        const std::size_t start = pos_;
        double value = 0.0;
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        const auto res = std::from_chars(first, last, value);
        if (res.ec == std::errc::result_out_of_range) {
            fail("numeric literal out of range", start);
        }
        if (res.ec != std::errc() || res.ptr == first) {
            fail("malformed numeric literal", start);
        }
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        ExprNode n;
        n.op = ExprOp::literal;
        n.value = value;
        return push(std::move(n));
    }

    std::uint32_t parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        skip_ws();
        if (peek() == '(') {
            for (const FnEntry& fn : kFunctions) {
                if (name == fn.name) {
                    ++pos_; // '('
                    const std::uint32_t arg = parse_sum();
                    skip_ws();
                    if (!consume(')')) fail("expected ')'");
                    ExprNode n;
                    n.op = fn.op;
                    n.a = arg;
                    return push(std::move(n));
                }
            }
            throw Error(errkind::unknown_function,
                        "unknown function '" + std::string(name) + "'", std::to_string(start));
        }
        ExprNode n;
        if (name == "t") {
            n.op = ExprOp::var_t;
        } else if (name == "x") {
            n.op = ExprOp::var_x;
        } else {
            n.op = ExprOp::param;
            n.name = std::string(name);
        }
        return push(std::move(n));
    }
};

// Print precedence: larger binds tighter. A node may appear un-parenthesized
// in a context iff level(node) >= min level of the context; the context
// levels mirror the grammar positions exactly.
int node_level(ExprOp op) {
    switch (op) {
    case ExprOp::add:
    case ExprOp::sub: return 1;
    case ExprOp::mul:
    case ExprOp::divide: return 2;
    case ExprOp::pow: return 3;
    case ExprOp::neg: return 4;
    default: return 5;
    }
}

const char* fn_name(ExprOp op) {
    for (const FnEntry& fn : kFunctions) {
        if (fn.op == op) return fn.name;
    }
    return nullptr;
}

void print_node(const std::vector<ExprNode>& nodes, std::uint32_t idx, int min_level,
                std::string& out) {
    const ExprNode& n = nodes[idx];
    const bool parens = node_level(n.op) < min_level;
    if (parens) out += '(';
    switch (n.op) {
    case ExprOp::literal: out += format_double(n.value); break;
    case ExprOp::var_t: out += 't'; break;
    case ExprOp::var_x: out += 'x'; break;
    case ExprOp::param: out += n.name; break;
    case ExprOp::neg:
        out += '-';
        print_node(nodes, n.a, 4, out);
        break;
    case ExprOp::add:
    case ExprOp::sub:
        print_node(nodes, n.a, 1, out);
        out += (n.op == ExprOp::add) ? '+' : '-';
        print_node(nodes, n.b, 2, out);
        break;
    case ExprOp::mul:
    case ExprOp::divide:
        print_node(nodes, n.a, 2, out);
        out += (n.op == ExprOp::mul) ? '*' : '/';
        print_node(nodes, n.b, 3, out);
        break;
    case ExprOp::pow:
        print_node(nodes, n.a, 4, out);
        out += '^';
        print_node(nodes, n.b, 3, out);
        break;
    default: {
        const char* name = fn_name(n.op);
        out += name ? name : "?";
        out += '(';
        print_node(nodes, n.a, 1, out);
        out += ')';
        break;
    }
    }
    if (parens) out += ')';
}

bool is_function(ExprOp op) {
    return op == ExprOp::fn_exp || op == ExprOp::fn_sqrt || op == ExprOp::fn_abs ||
           op == ExprOp::fn_sin || op == ExprOp::fn_cos;
}

bool is_binary(ExprOp op) {
    return op == ExprOp::add || op == ExprOp::sub || op == ExprOp::mul ||
           op == ExprOp::divide || op == ExprOp::pow;
}

} // namespace

CoefficientExpr parse_expr(std::string_view text) {
    Parser parser(text);
    CoefficientExpr expr;
    expr.nodes_ = parser.run();
    expr.source_ = std::string(text);
    return expr;
}

std::string print_expr(const CoefficientExpr& expr) {
    std::string out;
    print_node(expr.nodes(), expr.root(), 1, out);
    return out;
}

std::vector<std::string> CoefficientExpr::referenced_params() const {
    std::vector<std::string> names;
    for (const ExprNode& n : nodes_) {
        if (n.op == ExprOp::param) names.push_back(n.name);
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

bool CoefficientExpr::same_structure(const CoefficientExpr& other) const {
    if (nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const ExprNode& a = nodes_[i];
        const ExprNode& b = other.nodes_[i];
        if (a.op != b.op || a.name != b.name) return false;
        if (a.op == ExprOp::literal) {
            // Bit-level equality; literals are data, not approximations.
            if (!(a.value == b.value) && !(std::isnan(a.value) && std::isnan(b.value))) return false;
        }
        if (is_binary(a.op) && (a.a != b.a || a.b != b.b)) return false;
        if ((a.op == ExprOp::neg || is_function(a.op)) && a.a != b.a) return false;
    }
    return true;
}

double eval_expr(const CoefficientExpr& expr, double t, double x,
                 const std::map<std::string, double>& params) {
    return compile_expr(expr, params).eval(t, x);
}

CompiledExpr compile_expr(const CoefficientExpr& expr,
                          const std::map<std::string, double>& params) {
    CompiledExpr out;
    out.code_.reserve(expr.nodes().size());
    int depth = 0;
    int max_depth = 0;
    bool has_vars = false;
    for (const ExprNode& n : expr.nodes()) {
        CompiledExpr::Instr in;
        in.op = n.op;
        switch (n.op) {
        case ExprOp::literal:
            in.value = n.value;
            ++depth;
            break;
        case ExprOp::param: {
            const auto it = params.find(n.name);
            if (it == params.end()) {
                throw Error(errkind::unbound_parameter, "parameter '" + n.name + "' is not bound",
                            n.name);
            }
            in.op = ExprOp::literal;
            in.value = it->second;
            ++depth;
            break;
        }
        case ExprOp::var_t:
        case ExprOp::var_x:
            has_vars = true;
            ++depth;
            break;
        default:
            if (is_binary(n.op)) --depth;
            break;
        }
        max_depth = std::max(max_depth, depth);
        out.code_.push_back(in);
    }
    out.stack_need_ = max_depth;
    if (!has_vars) {
        try {
            out.constant_value_ = out.eval(0.0, 0.0);
            out.constant_ = true;
        } catch (const Error&) {
            // Leave non-constant; eval() will surface the same error.
        }
    }
    return out;
}

double CompiledExpr::eval_slow(double t, double x) const {
    std::vector<double> st(static_cast<std::size_t>(stack_need_));
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

void CompiledExpr::raise(const char* kind, const char* detail) {
    throw Error(kind, detail);
}

std::uint32_t ExprBuilder::literal(double v) {
    ExprNode n;
    n.op = ExprOp::literal;
    n.value = v;
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t ExprBuilder::var_t() {
    ExprNode n;
    n.op = ExprOp::var_t;
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t ExprBuilder::var_x() {
    ExprNode n;
    n.op = ExprOp::var_x;
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t ExprBuilder::param(std::string name) {
    ExprNode n;
    n.op = ExprOp::param;
    n.name = std::move(name);
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t ExprBuilder::unary(ExprOp op, std::uint32_t child) {
    if (!(op == ExprOp::neg || is_function(op))) {
        throw Error(errkind::invalid_value, "unary builder needs neg or a function op");
    }
    ExprNode n;
    n.op = op;
    n.a = child;
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

std::uint32_t ExprBuilder::binary(ExprOp op, std::uint32_t lhs, std::uint32_t rhs) {
    if (!is_binary(op)) {
        throw Error(errkind::invalid_value, "binary builder needs a binary op");
    }
    ExprNode n;
    n.op = op;
    n.a = lhs;
    n.b = rhs;
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
}

// Re-serializes the reachable tree in strict post order (root last, every
// node used exactly once); shared subtrees are duplicated.
CoefficientExpr ExprBuilder::finish(std::uint32_t root) {
    if (root >= nodes_.size()) {
        throw Error(errkind::invalid_value, "builder root out of range");
    }
    std::vector<ExprNode> out;
    // Recursion depth is bounded by the builder tree height; builders are a
    // test/internal facility so the plain recursion is acceptable.
    auto emit = [&](auto&& self, std::uint32_t idx) -> std::uint32_t {
        const ExprNode& n = nodes_[idx];
        ExprNode copy = n;
        if (is_binary(n.op)) {
            copy.a = self(self, n.a);
            copy.b = self(self, n.b);
        } else if (n.op == ExprOp::neg || is_function(n.op)) {
            copy.a = self(self, n.a);
        }
        out.push_back(std::move(copy));
        return static_cast<std::uint32_t>(out.size() - 1);
    };
    emit(emit, root);
    CoefficientExpr expr;
    expr.nodes_ = std::move(out);
    expr.source_ = print_expr(expr);
    return expr;
}

} // namespace qwalk
