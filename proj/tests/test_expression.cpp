#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bsdelab/expression.hpp"

using namespace bsdelab;

namespace {
double ev(const CoefficientExpr& e, double t, std::initializer_list<double> x, double y,
          std::initializer_list<double> z) {
    std::vector<double> xv(x), zv(z);
    return e.eval(t, xv, y, zv);
}
} // namespace

TEST_CASE("quadratic driver text parses to |z|^2/2") {
    const auto e = parse_coefficient("abs(z)^2 / 2", Slot::Driver);
    CHECK(ev(e, 0, {0.0}, 0, {3.0}) == doctest::Approx(4.5));
    CHECK(ev(e, 0, {0.0, 0.0}, 0, {3.0, 4.0}) == doctest::Approx(12.5));
    CHECK(e.references_control());
    CHECK(!e.references_state());
}

TEST_CASE("zero constant parses in the drift slot") {
    const auto e = parse_coefficient("0", Slot::Drift);
    CHECK(e.is_constant_zero());
    CHECK(ev(e, 1.0, {2.0}, 0, {}) == 0.0);
}

TEST_CASE("slot rules reject variables the slot does not admit") {
    CHECK_NOTHROW(parse_coefficient("sin(x0) + t*y", Slot::Driver));
    CHECK_THROWS_AS(parse_coefficient("sin(x0) + t*y", Slot::Terminal), ParseError);
    CHECK_THROWS_AS(parse_coefficient("z0", Slot::Terminal), ParseError);
    CHECK_THROWS_AS(parse_coefficient("y", Slot::Diffusion), ParseError);
    try {
        parse_coefficient("sin(x0) + t", Slot::Terminal);
        CHECK(false);
    } catch (const ParseError& err) {
        CHECK(std::string(err.what()).find("'t'") != std::string::npos);
        CHECK(err.position == 10);
    }
}

TEST_CASE("syntax errors carry a position") {
    try {
        parse_coefficient("1 + * 2", Slot::Drift);
        CHECK(false);
    } catch (const ParseError& err) {
        CHECK(err.position == 4);
    }
    CHECK_THROWS_AS(parse_coefficient("min(x0)", Slot::Terminal), ParseError); // arity
    CHECK_THROWS_AS(parse_coefficient("frob(x0)", Slot::Terminal), ParseError);
    CHECK_THROWS_AS(parse_coefficient("(x0", Slot::Terminal), ParseError);
    CHECK_THROWS_AS(parse_coefficient("x0 x1", Slot::Terminal), ParseError);
}

TEST_CASE("evaluation yields finite values or domain errors") {
    const auto elog = parse_coefficient("log(x0)", Slot::Terminal);
    CHECK(ev(elog, 0, {1.0}, 0, {}) == 0.0);
    CHECK_THROWS_AS(ev(elog, 0, {0.0}, 0, {}), EvalError);
    CHECK_THROWS_AS(ev(elog, 0, {-1.0}, 0, {}), EvalError);

    const auto ediv = parse_coefficient("1 / x0", Slot::Terminal);
    CHECK_THROWS_AS(ev(ediv, 0, {0.0}, 0, {}), EvalError);

    const auto epow = parse_coefficient("x0 ^ 0.5", Slot::Terminal);
    CHECK(ev(epow, 0, {4.0}, 0, {}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(ev(epow, 0, {-4.0}, 0, {}), EvalError); // pow -> nan

    const auto eexp = parse_coefficient("exp(x0)", Slot::Terminal);
    CHECK_THROWS_AS(ev(eexp, 0, {1e6}, 0, {}), EvalError); // overflow
}

TEST_CASE("grammar corners") {
    CHECK(ev(parse_coefficient("-x0^2", Slot::Terminal), 0, {3.0}, 0, {}) == -9.0);
    CHECK(ev(parse_coefficient("2^3^2", Slot::Terminal), 0, {0.0}, 0, {}) == 512.0);
    CHECK(ev(parse_coefficient("1 - 2 - 3", Slot::Terminal), 0, {0.0}, 0, {}) == -4.0);
    CHECK(ev(parse_coefficient("6 / 2 / 3", Slot::Terminal), 0, {0.0}, 0, {}) == 1.0);
    CHECK(ev(parse_coefficient("min(max(x0, 0), 1)", Slot::Terminal), 0, {7.0}, 0, {}) == 1.0);
    CHECK(ev(parse_coefficient("dot(x, x)", Slot::Terminal), 0, {3.0, 4.0}, 0, {}) == 25.0);
    CHECK(ev(parse_coefficient("dot(x, z)", Slot::Driver), 0, {1.0, 2.0}, 0, {5.0, 7.0}) == 19.0);
    CHECK(ev(parse_coefficient("norm(z)", Slot::Driver), 0, {0.0, 0.0}, 0, {3.0, 4.0}) == 5.0);
    CHECK(ev(parse_coefficient("1.5e2 + .5", Slot::Drift), 0, {0.0}, 0, {}) == 150.5);
    CHECK_THROWS_AS(parse_coefficient("x + 1", Slot::Terminal), ParseError); // bare vector
    CHECK_THROWS_AS(parse_coefficient("abs(x) * z", Slot::Driver), ParseError);
}

TEST_CASE("builders and parser produce the same trees") {
    using E = CoefficientExpr;
    const auto built =
        E::div(E::pow(E::abs(E::control_vector()), E::constant(2.0)), E::constant(2.0));
    const auto parsed = parse_coefficient(built.to_string(), Slot::Driver);
    for (double zv : {0.0, 0.5, -2.5, 7.0}) {
        CHECK(ev(built, 0, {0.0}, 0, {zv}) == ev(parsed, 0, {0.0}, 0, {zv}));
    }
    // round-trip of a nastier tree
    const auto e2 = parse_coefficient("sin(x0) - cos(t*x1)^3 + exp(-abs(z)/2)", Slot::Driver);
    const auto e3 = parse_coefficient(e2.to_string(), Slot::Driver);
    CHECK(ev(e2, 0.3, {0.7, -1.2}, 0, {0.4, 0.1}) ==
          doctest::Approx(ev(e3, 0.3, {0.7, -1.2}, 0, {0.4, 0.1})).epsilon(1e-15));
}

TEST_CASE("component indices are validated against the dimension at evaluation") {
    const auto e = parse_coefficient("x3", Slot::Terminal);
    CHECK(e.max_state_index() == 3);
    CHECK_THROWS_AS(ev(e, 0, {1.0}, 0, {}), EvalError);
}
