#include "bsdelab/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace bsdelab {

std::string slot_name(Slot s) {
    switch (s) {
    case Slot::Drift: return "drift";
    case Slot::Diffusion: return "diffusion";
    case Slot::Driver: return "driver";
    case Slot::Terminal: return "terminal";
    }
    return "?";
}

bool CoefficientExpr::node_is_vector(int i) const {
    const Op op = nodes_[static_cast<std::size_t>(i)].op;
    return op == Op::VecX || op == Op::VecZ;
}

double CoefficientExpr::vector_norm2(int i, std::span<const double> x,
                                     std::span<const double> z) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    std::span<const double> v = (n.op == Op::VecX) ? x : z;
    double s = 0.0;
    for (double c : v) s += c * c;
    return s;
}

double CoefficientExpr::eval_node(int i, double t, std::span<const double> x,
                                  double y, std::span<const double> z) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::VarT: return t;
    case Op::VarY: return y;
    case Op::VarX:
        if (static_cast<std::size_t>(n.index) >= x.size())
            throw EvalError("state component x" + std::to_string(n.index) +
                            " out of range for dimension " + std::to_string(x.size()));
        return x[static_cast<std::size_t>(n.index)];
    case Op::VarZ:
        if (static_cast<std::size_t>(n.index) >= z.size())
            throw EvalError("control component z" + std::to_string(n.index) +
                            " out of range for dimension " + std::to_string(z.size()));
        return z[static_cast<std::size_t>(n.index)];
    case Op::VecX:
    case Op::VecZ:
        throw EvalError("vector value outside norm/abs/dot");
    case Op::Add: return eval_node(n.a, t, x, y, z) + eval_node(n.b, t, x, y, z);
    case Op::Sub: return eval_node(n.a, t, x, y, z) - eval_node(n.b, t, x, y, z);
    case Op::Mul: return eval_node(n.a, t, x, y, z) * eval_node(n.b, t, x, y, z);
    case Op::Div: {
        const double denom = eval_node(n.b, t, x, y, z);
        if (denom == 0.0) throw EvalError("division by zero");
        return eval_node(n.a, t, x, y, z) / denom;
    }
    case Op::Pow: {
        const double base = eval_node(n.a, t, x, y, z);
        const double expo = eval_node(n.b, t, x, y, z);
        const double r = std::pow(base, expo);
        if (!std::isfinite(r))
            throw EvalError("pow(" + std::to_string(base) + ", " + std::to_string(expo) +
                            ") is not finite");
        return r;
    }
    case Op::Neg: return -eval_node(n.a, t, x, y, z);
    case Op::Exp: {
        const double r = std::exp(eval_node(n.a, t, x, y, z));
        if (!std::isfinite(r)) throw EvalError("exp overflow");
        return r;
    }
    case Op::Log: {
        const double arg = eval_node(n.a, t, x, y, z);
        if (arg <= 0.0) throw EvalError("log of nonpositive value");
        return std::log(arg);
    }
    case Op::Abs:
        if (node_is_vector(n.a)) return std::sqrt(vector_norm2(n.a, x, z));
        return std::abs(eval_node(n.a, t, x, y, z));
    case Op::Norm:
        return std::sqrt(vector_norm2(n.a, x, z));
    case Op::Sin: return std::sin(eval_node(n.a, t, x, y, z));
    case Op::Cos: return std::cos(eval_node(n.a, t, x, y, z));
    case Op::Min: return std::min(eval_node(n.a, t, x, y, z), eval_node(n.b, t, x, y, z));
    case Op::Max: return std::max(eval_node(n.a, t, x, y, z), eval_node(n.b, t, x, y, z));
    case Op::Dot: {
        const Node& na = nodes_[static_cast<std::size_t>(n.a)];
        const Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        std::span<const double> va = (na.op == Op::VecX) ? x : z;
        std::span<const double> vb = (nb.op == Op::VecX) ? x : z;
        if (va.size() != vb.size()) throw EvalError("dot of vectors with mismatched sizes");
        double s = 0.0;
        for (std::size_t k = 0; k < va.size(); ++k) s += va[k] * vb[k];
        return s;
    }
    }
    throw EvalError("corrupt expression node");
}

double CoefficientExpr::eval(double t, std::span<const double> x, double y,
                             std::span<const double> z) const {
    if (root_ < 0) throw EvalError("empty expression");
    const double r = eval_node(root_, t, x, y, z);
    if (!std::isfinite(r)) throw EvalError("expression evaluated to a non-finite value");
    return r;
}

bool CoefficientExpr::references_time() const {
    for (const Node& n : nodes_)
        if (n.op == Op::VarT) return true;
    return false;
}
bool CoefficientExpr::references_state() const {
    for (const Node& n : nodes_)
        if (n.op == Op::VarX || n.op == Op::VecX) return true;
    return false;
}
bool CoefficientExpr::references_value() const {
    for (const Node& n : nodes_)
        if (n.op == Op::VarY) return true;
    return false;
}
bool CoefficientExpr::references_control() const {
    for (const Node& n : nodes_)
        if (n.op == Op::VarZ || n.op == Op::VecZ) return true;
    return false;
}
int CoefficientExpr::max_state_index() const {
    int m = -1;
    for (const Node& n : nodes_)
        if (n.op == Op::VarX && n.index > m) m = n.index;
    return m;
}
int CoefficientExpr::max_control_index() const {
    int m = -1;
    for (const Node& n : nodes_)
        if (n.op == Op::VarZ && n.index > m) m = n.index;
    return m;
}
bool CoefficientExpr::uses_state_vector() const {
    for (const Node& n : nodes_)
        if (n.op == Op::VecX) return true;
    return false;
}
bool CoefficientExpr::uses_control_vector() const {
    for (const Node& n : nodes_)
        if (n.op == Op::VecZ) return true;
    return false;
}

bool CoefficientExpr::is_constant() const {
    for (const Node& n : nodes_)
        if (n.op != Op::Const && n.op != Op::Add && n.op != Op::Sub && n.op != Op::Mul &&
            n.op != Op::Div && n.op != Op::Pow && n.op != Op::Neg && n.op != Op::Exp &&
            n.op != Op::Log && n.op != Op::Abs && n.op != Op::Sin && n.op != Op::Cos &&
            n.op != Op::Min && n.op != Op::Max)
            return false;
    return !nodes_.empty();
}
bool CoefficientExpr::is_constant_zero() const {
    if (!is_constant()) return false;
    try {
        return eval(0.0, {}, 0.0, {}) == 0.0;
    } catch (const EvalError&) {
        return false;
    }
}

// --- builders ---

int CoefficientExpr::splice(const CoefficientExpr& other) {
    const int offset = static_cast<int>(nodes_.size());
    for (Node n : other.nodes_) {
        if (n.a >= 0) n.a += offset;
        if (n.b >= 0) n.b += offset;
        nodes_.push_back(n);
    }
    return other.root_ + offset;
}

CoefficientExpr CoefficientExpr::constant(double v) {
    CoefficientExpr e;
    e.nodes_.push_back({Op::Const, -1, -1, v, 0});
    e.root_ = 0;
    return e;
}
CoefficientExpr CoefficientExpr::time_var() {
    CoefficientExpr e;
    e.nodes_.push_back({Op::VarT, -1, -1, 0, 0});
    e.root_ = 0;
    return e;
}
CoefficientExpr CoefficientExpr::value_var() {
    CoefficientExpr e;
    e.nodes_.push_back({Op::VarY, -1, -1, 0, 0});
    e.root_ = 0;
    return e;
}
CoefficientExpr CoefficientExpr::state(int index) {
    CoefficientExpr e;
    e.nodes_.push_back({Op::VarX, -1, -1, 0, index});
    e.root_ = 0;
    return e;
}
CoefficientExpr CoefficientExpr::control(int index) {
    CoefficientExpr e;
    e.nodes_.push_back({Op::VarZ, -1, -1, 0, index});
    e.root_ = 0;
    return e;
}
CoefficientExpr CoefficientExpr::state_vector() {
    CoefficientExpr e;
    e.nodes_.push_back({Op::VecX, -1, -1, 0, 0});
    e.root_ = 0;
    return e;
}
CoefficientExpr CoefficientExpr::control_vector() {
    CoefficientExpr e;
    e.nodes_.push_back({Op::VecZ, -1, -1, 0, 0});
    e.root_ = 0;
    return e;
}

CoefficientExpr CoefficientExpr::binary(Op op, CoefficientExpr a, CoefficientExpr b) {
    if (a.root_ < 0 || b.root_ < 0) throw SpecError("binary op on empty expression");
    if (op != Op::Dot && (a.node_is_vector(a.root_) || b.node_is_vector(b.root_)))
        throw SpecError("vector operand outside norm/abs/dot");
    if (op == Op::Dot && (!a.node_is_vector(a.root_) || !b.node_is_vector(b.root_)))
        throw SpecError("dot expects two vector arguments");
    CoefficientExpr e = std::move(a);
    const int rb = e.splice(b);
    e.nodes_.push_back({op, e.root_, rb, 0, 0});
    e.root_ = static_cast<int>(e.nodes_.size()) - 1;
    return e;
}
CoefficientExpr CoefficientExpr::unary(Op op, CoefficientExpr a, bool vector_arg_ok) {
    if (a.root_ < 0) throw SpecError("unary op on empty expression");
    if (a.node_is_vector(a.root_) && !vector_arg_ok)
        throw SpecError("vector operand outside norm/abs/dot");
    if (op == Op::Norm && !a.node_is_vector(a.root_))
        throw SpecError("norm expects a vector argument");
    CoefficientExpr e = std::move(a);
    e.nodes_.push_back({op, e.root_, -1, 0, 0});
    e.root_ = static_cast<int>(e.nodes_.size()) - 1;
    return e;
}

CoefficientExpr CoefficientExpr::add(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Add, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::sub(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Sub, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::mul(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Mul, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::div(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Div, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::pow(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Pow, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::min(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Min, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::max(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Max, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::dot(CoefficientExpr a, CoefficientExpr b) { return binary(Op::Dot, std::move(a), std::move(b)); }
CoefficientExpr CoefficientExpr::neg(CoefficientExpr a) { return unary(Op::Neg, std::move(a)); }
CoefficientExpr CoefficientExpr::exp(CoefficientExpr a) { return unary(Op::Exp, std::move(a)); }
CoefficientExpr CoefficientExpr::log(CoefficientExpr a) { return unary(Op::Log, std::move(a)); }
CoefficientExpr CoefficientExpr::abs(CoefficientExpr a) { return unary(Op::Abs, std::move(a), true); }
CoefficientExpr CoefficientExpr::sin(CoefficientExpr a) { return unary(Op::Sin, std::move(a)); }
CoefficientExpr CoefficientExpr::cos(CoefficientExpr a) { return unary(Op::Cos, std::move(a)); }
CoefficientExpr CoefficientExpr::norm(CoefficientExpr a) { return unary(Op::Norm, std::move(a), true); }

// --- printing ---

namespace {
std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

void CoefficientExpr::append_to_string(int i, std::string& out, int parent_prec) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    auto binary_infix = [&](const char* sym, int prec, int rhs_extra) {
        const bool paren = prec < parent_prec;
        if (paren) out += '(';
        append_to_string(n.a, out, prec);
        out += sym;
        append_to_string(n.b, out, prec + rhs_extra);
        if (paren) out += ')';
    };
    auto call1 = [&](const char* name) {
        out += name;
        out += '(';
        append_to_string(n.a, out, 0);
        out += ')';
    };
    switch (n.op) {
    case Op::Const: out += format_double(n.value); return;
    case Op::VarT: out += 't'; return;
    case Op::VarY: out += 'y'; return;
    case Op::VarX: out += 'x' + std::to_string(n.index); return;
    case Op::VarZ: out += 'z' + std::to_string(n.index); return;
    case Op::VecX: out += 'x'; return;
    case Op::VecZ: out += 'z'; return;
    case Op::Add: binary_infix(" + ", 1, 0); return;
    case Op::Sub: binary_infix(" - ", 1, 1); return;
    case Op::Mul: binary_infix("*", 2, 0); return;
    case Op::Div: binary_infix("/", 2, 1); return;
    case Op::Pow: {
        const bool paren = 4 < parent_prec;
        if (paren) out += '(';
        append_to_string(n.a, out, 5); // right associative: parenthesize a nested lhs pow
        out += '^';
        append_to_string(n.b, out, 4);
        if (paren) out += ')';
        return;
    }
    case Op::Neg:
        out += "-";
        append_to_string(n.a, out, 3);
        return;
    case Op::Exp: call1("exp"); return;
    case Op::Log: call1("log"); return;
    case Op::Abs: call1("abs"); return;
    case Op::Sin: call1("sin"); return;
    case Op::Cos: call1("cos"); return;
    case Op::Norm: call1("norm"); return;
    case Op::Min:
    case Op::Max:
    case Op::Dot:
        out += (n.op == Op::Min) ? "min" : (n.op == Op::Max) ? "max" : "dot";
        out += '(';
        append_to_string(n.a, out, 0);
        out += ", ";
        append_to_string(n.b, out, 0);
        out += ')';
        return;
    }
}

std::string CoefficientExpr::to_string() const {
    if (root_ < 0) return "";
    std::string out;
    append_to_string(root_, out, 0);
    return out;
}

// --- parser ---

namespace {

struct Token {
    enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End } kind;
    std::string text;
    std::size_t pos;
    double number = 0.0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
        const std::size_t p = i_;
        if (i_ >= src_.size()) return {Token::End, "", p};
        const char c = src_[i_];
        switch (c) {
        case '+': ++i_; return {Token::Plus, "+", p};
        case '-': ++i_; return {Token::Minus, "-", p};
        case '*': ++i_; return {Token::Star, "*", p};
        case '/': ++i_; return {Token::Slash, "/", p};
        case '^': ++i_; return {Token::Caret, "^", p};
        case '(': ++i_; return {Token::LParen, "(", p};
        case ')': ++i_; return {Token::RParen, ")", p};
        case ',': ++i_; return {Token::Comma, ",", p};
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t j = i_;
            while (j < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.')) ++j;
            if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
                if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                    ++k;
                    while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
                    j = k;
                }
            }
            double value = 0.0;
            const auto res = std::from_chars(src_.data() + i_, src_.data() + j, value);
            if (res.ec != std::errc() || res.ptr != src_.data() + j)
                throw ParseError("malformed number '" + std::string(src_.substr(i_, j - i_)) + "'", p);
            Token t{Token::Number, std::string(src_.substr(i_, j - i_)), p};
            t.number = value;
            i_ = j;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i_;
            while (j < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
                ++j;
            Token t{Token::Ident, std::string(src_.substr(i_, j - i_)), p};
            i_ = j;
            return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", p);
    }

private:
    std::string_view src_;
    std::size_t i_ = 0;
};

} // namespace

class Parser {
public:
    Parser(std::string_view src, Slot slot) : lexer_(src), slot_(slot) { advance(); }

    CoefficientExpr parse() {
        CoefficientExpr e = parse_expr();
        if (cur_.kind != Token::End)
            throw ParseError("unexpected trailing input '" + cur_.text + "'", cur_.pos);
        if (e.node_is_vector(e.root_))
            throw ParseError("expression must be scalar-valued; wrap the vector in abs()/norm()", 0);
        return e;
    }

private:
    Lexer lexer_;
    Slot slot_;
    Token cur_;

    void advance() { cur_ = lexer_.next(); }

    void expect(Token::Kind k, const char* what) {
        if (cur_.kind != k) throw ParseError(std::string("expected ") + what, cur_.pos);
        advance();
    }

    CoefficientExpr parse_expr() {
        CoefficientExpr e = parse_term();
        while (cur_.kind == Token::Plus || cur_.kind == Token::Minus) {
            const bool plus = cur_.kind == Token::Plus;
            const std::size_t pos = cur_.pos;
            advance();
            CoefficientExpr rhs = parse_term();
            require_scalar(e, pos);
            require_scalar(rhs, pos);
            e = plus ? CoefficientExpr::add(std::move(e), std::move(rhs))
                     : CoefficientExpr::sub(std::move(e), std::move(rhs));
        }
        return e;
    }

    CoefficientExpr parse_term() {
        CoefficientExpr e = parse_unary();
        while (cur_.kind == Token::Star || cur_.kind == Token::Slash) {
            const bool mul = cur_.kind == Token::Star;
            const std::size_t pos = cur_.pos;
            advance();
            CoefficientExpr rhs = parse_unary();
            require_scalar(e, pos);
            require_scalar(rhs, pos);
            e = mul ? CoefficientExpr::mul(std::move(e), std::move(rhs))
                    : CoefficientExpr::div(std::move(e), std::move(rhs));
        }
        return e;
    }

    CoefficientExpr parse_unary() {
        if (cur_.kind == Token::Minus) {
            const std::size_t pos = cur_.pos;
            advance();
            CoefficientExpr e = parse_unary();
            require_scalar(e, pos);
            return CoefficientExpr::neg(std::move(e));
        }
        if (cur_.kind == Token::Plus) {
            advance();
            return parse_unary();
        }
        return parse_power();
    }

    CoefficientExpr parse_power() {
        CoefficientExpr e = parse_primary();
        if (cur_.kind == Token::Caret) {
            const std::size_t pos = cur_.pos;
            advance();
            CoefficientExpr rhs = parse_unary(); // right associative, unary exponents allowed
            require_scalar(e, pos);
            require_scalar(rhs, pos);
            e = CoefficientExpr::pow(std::move(e), std::move(rhs));
        }
        return e;
    }

    void require_scalar(const CoefficientExpr& e, std::size_t pos) {
        if (e.node_is_vector(e.root_))
            throw ParseError("vector value may only appear inside abs()/norm()/dot()", pos);
    }

    CoefficientExpr parse_primary() {
        switch (cur_.kind) {
        case Token::Number: {
            CoefficientExpr e = CoefficientExpr::constant(cur_.number);
            advance();
            return e;
        }
        case Token::LParen: {
            advance();
            CoefficientExpr e = parse_expr();
            expect(Token::RParen, "')'");
            return e;
        }
        case Token::Ident: {
            const Token id = cur_;
            advance();
            if (cur_.kind == Token::LParen) return parse_call(id);
            return parse_variable(id);
        }
        default:
            throw ParseError("expected a number, variable, function call or '('", cur_.pos);
        }
    }

    CoefficientExpr parse_call(const Token& id) {
        expect(Token::LParen, "'('");
        std::vector<CoefficientExpr> args;
        if (cur_.kind != Token::RParen) {
            args.push_back(parse_expr_or_vector());
            while (cur_.kind == Token::Comma) {
                advance();
                args.push_back(parse_expr_or_vector());
            }
        }
        expect(Token::RParen, "')'");
        const std::string& f = id.text;
        auto need = [&](std::size_t n) {
            if (args.size() != n)
                throw ParseError(f + " expects " + std::to_string(n) + " argument(s), got " +
                                     std::to_string(args.size()),
                                 id.pos);
        };
        try {
            if (f == "exp") { need(1); return CoefficientExpr::exp(std::move(args[0])); }
            if (f == "log") { need(1); return CoefficientExpr::log(std::move(args[0])); }
            if (f == "abs") { need(1); return CoefficientExpr::abs(std::move(args[0])); }
            if (f == "sin") { need(1); return CoefficientExpr::sin(std::move(args[0])); }
            if (f == "cos") { need(1); return CoefficientExpr::cos(std::move(args[0])); }
            if (f == "norm") { need(1); return CoefficientExpr::norm(std::move(args[0])); }
            if (f == "min") { need(2); return CoefficientExpr::min(std::move(args[0]), std::move(args[1])); }
            if (f == "max") { need(2); return CoefficientExpr::max(std::move(args[0]), std::move(args[1])); }
            if (f == "dot") { need(2); return CoefficientExpr::dot(std::move(args[0]), std::move(args[1])); }
        } catch (const SpecError& err) {
            throw ParseError(err.what(), id.pos);
        }
        throw ParseError("unknown identifier '" + f + "'", id.pos);
    }

    // Inside a call argument a bare vector identifier is admissible.
    CoefficientExpr parse_expr_or_vector() {
        if (cur_.kind == Token::Ident && (cur_.text == "x" || cur_.text == "z")) {
            // peek manually: vector only when the identifier stands alone
            const Token id = cur_;
            advance();
            if (cur_.kind == Token::RParen || cur_.kind == Token::Comma) {
                check_slot_allows(id, /*vector=*/true);
                return id.text == "x" ? CoefficientExpr::state_vector()
                                      : CoefficientExpr::control_vector();
            }
            // not a lone vector: treat as the start of a scalar expression
            CoefficientExpr lead = parse_variable(id);
            return continue_expr(std::move(lead));
        }
        return parse_expr();
    }

    // finish expr / term / power chains that started with `lead`
    CoefficientExpr continue_expr(CoefficientExpr lead) {
        // power
        if (cur_.kind == Token::Caret) {
            advance();
            CoefficientExpr rhs = parse_unary();
            lead = CoefficientExpr::pow(std::move(lead), std::move(rhs));
        }
        // term
        while (cur_.kind == Token::Star || cur_.kind == Token::Slash) {
            const bool mul = cur_.kind == Token::Star;
            advance();
            CoefficientExpr rhs = parse_unary();
            lead = mul ? CoefficientExpr::mul(std::move(lead), std::move(rhs))
                       : CoefficientExpr::div(std::move(lead), std::move(rhs));
        }
        // expr
        while (cur_.kind == Token::Plus || cur_.kind == Token::Minus) {
            const bool plus = cur_.kind == Token::Plus;
            advance();
            CoefficientExpr rhs = parse_term();
            lead = plus ? CoefficientExpr::add(std::move(lead), std::move(rhs))
                        : CoefficientExpr::sub(std::move(lead), std::move(rhs));
        }
        return lead;
    }

    void check_slot_allows(const Token& id, bool vector) {
        const std::string& v = id.text;
        const bool is_x = vector ? (v == "x") : (v[0] == 'x');
        const bool is_z = vector ? (v == "z") : (v[0] == 'z');
        const bool is_t = !vector && v == "t";
        const bool is_y = !vector && v == "y";
        bool ok = false;
        switch (slot_) {
        case Slot::Drift:
        case Slot::Diffusion: ok = is_t || is_x; break;
        case Slot::Driver: ok = is_t || is_x || is_y || is_z; break;
        case Slot::Terminal: ok = is_x; break;
        }
        if (!ok)
            throw ParseError("unknown identifier '" + v + "' for slot " + slot_name(slot_), id.pos);
    }

    CoefficientExpr parse_variable(const Token& id) {
        const std::string& v = id.text;
        if (v == "t") {
            check_slot_allows(id, false);
            return CoefficientExpr::time_var();
        }
        if (v == "y") {
            check_slot_allows(id, false);
            return CoefficientExpr::value_var();
        }
        if ((v[0] == 'x' || v[0] == 'z') && v.size() > 1) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(v[i])))
                    throw ParseError("unknown identifier '" + v + "'", id.pos);
            check_slot_allows(id, false);
            if (v.size() > 7) throw ParseError("component index too large in '" + v + "'", id.pos);
            const int idx = std::stoi(v.substr(1));
            return v[0] == 'x' ? CoefficientExpr::state(idx) : CoefficientExpr::control(idx);
        }
        if (v == "x" || v == "z")
            throw ParseError("bare vector '" + v + "' may only appear inside abs()/norm()/dot()",
                             id.pos);
        throw ParseError("unknown identifier '" + v + "'", id.pos);
    }
};

CoefficientExpr parse_coefficient(std::string_view source, Slot slot) {
    Parser p(source, slot);
    return p.parse();
}

} // namespace bsdelab
