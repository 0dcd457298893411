#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsdelab/errors.hpp"

namespace bsdelab {

// Which coefficient of the problem an expression stands for. The slot fixes
// the set of admissible variables:
//   drift     b(t, x)
//   diffusion sigma(t, x)
//   driver    f(t, x, y, z)
//   terminal  g(x)
enum class Slot { Drift, Diffusion, Driver, Terminal };

std::string slot_name(Slot s);

/// Scalar-valued expression over t, the state components x0..x{d-1}, y and
/// the control components z0..z{d-1}. The bare names `x` and `z` denote the
/// whole vectors and may appear only inside abs/norm/dot.
class CoefficientExpr {
public:
    CoefficientExpr() = default;

    double eval(double t, std::span<const double> x, double y,
                std::span<const double> z) const;

    // Convenience for terminal-style expressions g(x).
    double eval_x(std::span<const double> x) const { return eval(0.0, x, 0.0, {}); }

    bool references_time() const;
    bool references_state() const;
    bool references_value() const;
    bool references_control() const;
    // Largest component index used (x or z), -1 when none. Vector uses
    // (norm(x), dot(x,z), ...) do not constrain the dimension.
    int max_state_index() const;
    int max_control_index() const;
    bool uses_state_vector() const;
    bool uses_control_vector() const;

    bool is_constant() const;
    bool is_constant_zero() const;

    std::string to_string() const;

    bool empty() const { return nodes_.empty(); }

    // --- structural builders (used by the catalog and by tests) ---
    static CoefficientExpr constant(double v);
    static CoefficientExpr time_var();
    static CoefficientExpr value_var();
    static CoefficientExpr state(int index);
    static CoefficientExpr control(int index);
    static CoefficientExpr state_vector();
    static CoefficientExpr control_vector();
    static CoefficientExpr add(CoefficientExpr a, CoefficientExpr b);
    static CoefficientExpr sub(CoefficientExpr a, CoefficientExpr b);
    static CoefficientExpr mul(CoefficientExpr a, CoefficientExpr b);
    static CoefficientExpr div(CoefficientExpr a, CoefficientExpr b);
    static CoefficientExpr pow(CoefficientExpr a, CoefficientExpr b);
    static CoefficientExpr neg(CoefficientExpr a);
    static CoefficientExpr exp(CoefficientExpr a);
    static CoefficientExpr log(CoefficientExpr a);
    static CoefficientExpr abs(CoefficientExpr a);
    static CoefficientExpr sin(CoefficientExpr a);
    static CoefficientExpr cos(CoefficientExpr a);
    static CoefficientExpr min(CoefficientExpr a, CoefficientExpr b);
    static CoefficientExpr max(CoefficientExpr a, CoefficientExpr b);
    static CoefficientExpr norm(CoefficientExpr vec);
    static CoefficientExpr dot(CoefficientExpr a, CoefficientExpr b);

private:
    enum class Op : std::uint8_t {
        Const, VarT, VarY, VarX, VarZ, VecX, VecZ,
        Add, Sub, Mul, Div, Pow, Neg,
        Exp, Log, Abs, Sin, Cos, Min, Max, Norm, Dot,
    };
    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        double value = 0.0;
        int index = 0;
    };

    std::vector<Node> nodes_;
    int root_ = -1;

    bool node_is_vector(int i) const;
    double eval_node(int i, double t, std::span<const double> x, double y,
                     std::span<const double> z) const;
    double vector_norm2(int i, std::span<const double> x, std::span<const double> z) const;
    void append_to_string(int i, std::string& out, int parent_prec) const;
    int splice(const CoefficientExpr& other);
    static CoefficientExpr unary(Op op, CoefficientExpr a, bool vector_arg_ok = false);
    static CoefficientExpr binary(Op op, CoefficientExpr a, CoefficientExpr b);

    friend class Parser;
};

/// Parses `source` in the documented grammar (see docs/grammar.md), rejecting
/// variables the slot does not admit. Throws ParseError with a byte position.
CoefficientExpr parse_coefficient(std::string_view source, Slot slot);

} // namespace bsdelab
