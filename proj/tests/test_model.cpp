#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bsdelab/problem.hpp"
#include "bsdelab/problem_io.hpp"
#include "bsdelab/rng.hpp"

using namespace bsdelab;

namespace {
std::vector<double> random_point(int d, std::uint64_t key, double scale) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        x[static_cast<std::size_t>(i)] =
            scale * (2.0 * counter_uniform(77, Stream::Probe, key, 0, static_cast<std::uint64_t>(i)) - 1.0);
    return x;
}
double norm(std::span<const double> v) {
    double s = 0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}
} // namespace

TEST_CASE("truncation is the identity inside the inner ball") {
    TruncationSpec tr(2.0);
    std::vector<double> x = {0.5, 0.0};
    auto out = smooth_truncation(x, tr);
    CHECK(out[0] == 0.5);
    CHECK(out[1] == 0.0);

    std::vector<double> zero = {0.0, 0.0};
    auto out0 = smooth_truncation(zero, tr);
    CHECK(out0[0] == 0.0);
    CHECK(out0[1] == 0.0);
}

TEST_CASE("truncation profile value beyond the ball") {
    // M = 2, |x| = 3: psi(3) = 2 - e^{-2}, output = (psi(3)/3) * (3, 0)
    TruncationSpec tr(2.0);
    std::vector<double> x = {3.0, 0.0};
    auto out = smooth_truncation(x, tr);
    CHECK(out[0] == doctest::Approx(2.0 - std::exp(-2.0)).epsilon(1e-15));
    CHECK(out[0] == doctest::Approx(1.8646647167633873).epsilon(1e-12));
    CHECK(out[1] == 0.0);
    CHECK(norm(out) < 2.0);
}

TEST_CASE("truncation is 1-Lipschitz and bounded on random pairs") {
    for (double M : {1.5, 2.0, 5.0, 32.0}) {
        TruncationSpec tr(M);
        for (int i = 0; i < 10000; ++i) {
            auto a = random_point(3, static_cast<std::uint64_t>(i) * 2, 2.0 * M);
            auto b = random_point(3, static_cast<std::uint64_t>(i) * 2 + 1, 2.0 * M);
            auto ta = smooth_truncation(a, tr);
            auto tb = smooth_truncation(b, tr);
            CHECK(norm(ta) <= M);
            std::vector<double> dorig(3), dtr(3);
            for (int k = 0; k < 3; ++k) {
                dorig[k] = a[k] - b[k];
                dtr[k] = ta[k] - tb[k];
            }
            REQUIRE(norm(dtr) <= norm(dorig) * (1.0 + 1e-12));
        }
        // exact identity on the inner ball
        for (int i = 0; i < 1000; ++i) {
            auto a = random_point(3, 100000 + static_cast<std::uint64_t>(i), (M - 1.0) / 2.0);
            if (norm(a) > M - 1.0) continue;
            auto ta = smooth_truncation(a, tr);
            for (int k = 0; k < 3; ++k) REQUIRE(ta[k] == a[k]);
        }
    }
}

TEST_CASE("deterministic-sigma truncation wraps only the state slot") {
    auto p = catalog::linear_terminal(1.0, 1.0, 1.0, 0.0);
    auto pm = truncate_problem(p, 5.0, TruncationVariant::DeterministicSigma);
    const double x2[1] = {2.0};
    CHECK(pm.eval_g({x2, 1}) == 2.0); // inside the inner ball

    // f = |z|^2/2 has no x dependence: truncation leaves it unchanged
    const double z[1] = {3.0};
    for (double xv : {0.0, 2.0, 50.0}) {
        const double xa[1] = {xv};
        CHECK(pm.eval_f(0.1, {xa, 1}, 0.4, {z, 1}) == p.eval_f(0.1, {xa, 1}, 0.4, {z, 1}));
    }
}

TEST_CASE("random-sigma truncation records both radii") {
    auto p = catalog::quadratic_sine();
    p.regime = Regime::B3Bounded;
    p.params.r = 0.2;
    p.params.kappa = 0.3;
    auto pm = truncate_problem(p, 32.0, TruncationVariant::RandomSigma);
    REQUIRE(pm.x_trunc.has_value());
    REQUIRE(pm.z_trunc.has_value());
    CHECK(pm.x_trunc->M == doctest::Approx(1024.0).epsilon(1e-12)); // 32^{1/(0.2+0.3)}
    CHECK(pm.z_trunc->M == 32.0);

    // the control slot is now read through rho_M
    const double x0a[1] = {0.0};
    const double zbig[1] = {100.0};
    const double ztr = TruncationSpec(32.0).apply_scalar(100.0);
    CHECK(pm.eval_f(0.0, {x0a, 1}, 0.0, {zbig, 1}) == doctest::Approx(0.5 * ztr * ztr));
}

TEST_CASE("random-sigma truncation is rejected outside its regime") {
    auto p = catalog::quadratic_sine(); // regime B1-critical
    CHECK_THROWS_AS(truncate_problem(p, 8.0, TruncationVariant::RandomSigma), SpecError);
    CHECK_THROWS_AS(truncate_problem(p, 1.0, TruncationVariant::DeterministicSigma), SpecError);
    p.regime = Regime::B3Bounded;
    p.params.r = 0.0;
    p.params.kappa = 0.0;
    CHECK_THROWS_AS(truncate_problem(p, 8.0, TruncationVariant::RandomSigma), SpecError);
}

TEST_CASE("truncated evaluation matches the plain one inside the inner ball") {
    auto p = catalog::quadratic_sine();
    auto pm = truncate_problem(p, 4.0, TruncationVariant::DeterministicSigma);
    for (int i = 0; i < 200; ++i) {
        auto x = random_point(1, 5000 + static_cast<std::uint64_t>(i), 3.0);
        if (std::abs(x[0]) > 3.0) continue;
        const double z[1] = {1.3};
        CHECK(pm.eval_g(x) == p.eval_g(x));
        CHECK(pm.eval_f(0.5, x, 0.2, {z, 1}) == p.eval_f(0.5, x, 0.2, {z, 1}));
    }
}

TEST_CASE("truncated terminal keeps the local-Lipschitz envelope budget") {
    // declared (alpha, r) envelope: sampled two-point ratios of g_M must stay
    // below alpha*M^r + C_g for the catalog problems
    struct Case {
        ProblemSpec p;
        double C_g;
    };
    const Case cases[] = {{catalog::linear_terminal(1.0, 1.0, 1.0, 0.0, 0.3), 1.0},
                          {catalog::quadratic_sine(), 1.0},
                          {catalog::bounded_sine(), 2.0}};
    for (const auto& c : cases) {
        for (double M : {2.0, 8.0}) {
            auto pm = truncate_problem(c.p, M, TruncationVariant::DeterministicSigma);
            const double budget =
                c.p.params.alpha * std::pow(M, std::max(c.p.params.r, 1.0 / c.p.params.l)) +
                c.C_g + 1e-9;
            for (int i = 0; i < 2000; ++i) {
                auto a = random_point(1, 7000 + static_cast<std::uint64_t>(i) * 2, 3.0 * M);
                auto b = random_point(1, 7000 + static_cast<std::uint64_t>(i) * 2 + 1, 3.0 * M);
                if (a[0] == b[0]) continue;
                const double ratio =
                    std::abs(pm.eval_g(a) - pm.eval_g(b)) / std::abs(a[0] - b[0]);
                REQUIRE(ratio <= budget);
            }
        }
    }
}

TEST_CASE("problem json round-trip") {
    auto p = catalog::quadratic_sine(1.5, 1.0, 0.25);
    const auto j = problem_to_json(p);
    auto q = problem_from_json(j);
    CHECK(q.d == p.d);
    CHECK(q.T == p.T);
    CHECK(q.x0[0] == p.x0[0]);
    CHECK(q.regime == p.regime);
    CHECK(q.catalog_tag == p.catalog_tag);
    const double xa[1] = {0.7};
    const double z[1] = {-1.1};
    CHECK(q.eval_g({xa, 1}) == doctest::Approx(p.eval_g({xa, 1})).epsilon(1e-15));
    CHECK(q.eval_f(0.3, {xa, 1}, 0.2, {z, 1}) ==
          doctest::Approx(p.eval_f(0.3, {xa, 1}, 0.2, {z, 1})).epsilon(1e-15));

    const auto path = std::filesystem::temp_directory_path() / "bsdelab_problem_rt.json";
    save_problem(p, path);
    auto r = load_problem(path);
    CHECK(r.catalog_tag == p.catalog_tag);
    std::filesystem::remove(path);
}

TEST_CASE("problem validation rejects x-dependent sigma in deterministic regimes") {
    nlohmann::json j = {{"d", 1},
                        {"T", 1.0},
                        {"x0", {0.0}},
                        {"b", {"0"}},
                        {"sigma", {{"1 + x0^2"}}},
                        {"f", "abs(z)^2/2"},
                        {"g", "sin(x0)"},
                        {"regime", "B1-critical"}};
    CHECK_THROWS_AS(problem_from_json(j), SpecError);
    j["regime"] = "B3-bounded";
    CHECK_NOTHROW(problem_from_json(j));
}
