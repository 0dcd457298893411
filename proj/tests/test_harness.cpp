#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bsdelab/harness.hpp"
#include "bsdelab/problem_io.hpp"

using namespace bsdelab;

namespace {
DiscreteSolution small_linear_run(int n, std::size_t P, std::uint64_t seed) {
    auto p = catalog::linear_terminal(1.0, 1.0, 1.0, 0.0);
    auto pm = truncate_problem(p, 8.0, TruncationVariant::DeterministicSigma);
    auto ens = std::make_shared<PathEnsemble>(euler_paths(p, n, P, seed));
    return solve_backward(pm, ens, EstimatorSpec::global(3), 1);
}

ReferenceSolution self_reference(const DiscreteSolution& sol) {
    ReferenceSolution ref;
    ref.kind = ReferenceSolution::Kind::FineGrid;
    ref.grid = std::make_shared<DiscreteSolution>(sol);
    ref.y0 = sol.y0_mean;
    return ref;
}
} // namespace

TEST_CASE("a run measured against itself has zero error") {
    const auto sol = small_linear_run(8, 4000, 3);
    const auto rep = error_against(sol, self_reference(sol));
    CHECK(rep.y_error == 0.0);
    CHECK(rep.z_error == 0.0);
    CHECK(rep.total == 0.0);
}

TEST_CASE("constant problem against its closed form") {
    auto p = catalog::constant_terminal(2.0, 1.0, 1.0, 0.0);
    auto pm = truncate_problem(p, 8.0, TruncationVariant::DeterministicSigma);
    auto ens = std::make_shared<PathEnsemble>(euler_paths(p, 8, 20000, 6));
    const auto sol = solve_backward(pm, ens, EstimatorSpec::global(1), 1);
    const auto rep = error_against(sol, constant_reference(2.0));
    CHECK(rep.y_error <= 1e-20);
    CHECK(rep.z_error <= 4.0 * (2.0 * 2.0 / (1.0 / 8.0)) * 2.0 / 20000.0);
    CHECK(rep.total == rep.y_error + rep.z_error);
}

TEST_CASE("linear problem error budget at desk scale") {
    const auto sol = small_linear_run(64, 100000, 21);
    const auto rep = error_against(sol, linear_reference({1.0}, 1.0, 1.0));
    CHECK(rep.total <= 1e-2); // frozen desk-scale budget for n=64, P=1e5, q=3
}

TEST_CASE("grid incompatibility is rejected") {
    const auto coarse = small_linear_run(12, 2000, 3);
    const auto fine = small_linear_run(16, 2000, 4); // 16 not a multiple of 12
    CHECK_THROWS_AS(error_against(coarse, self_reference(fine)), SpecError);
}

TEST_CASE("radius schedules match hand evaluation") {
    RegularityParams p;
    p.r = 0.25;
    p.l = 1.0;
    CHECK(select_M(55.0, p, MRule::Thm56Subcritical, 2.0) ==
          doctest::Approx(std::log(55.0)).epsilon(1e-13));
    CHECK(std::abs(select_M(55.0, p, MRule::Thm56Subcritical, 2.0) - 4.007333185232471) <
          1e-12);
    CHECK(std::abs(select_M(std::exp(4.0), p, MRule::Thm56Critical, 2.0, 1.0) - 2.0) <
          1e-12);
    // rejections: p outside (1, 1/(r l)) = (1, 4)
    CHECK_THROWS_AS(select_M(55.0, p, MRule::Thm56Subcritical, 0.9), SpecError);
    CHECK_THROWS_AS(select_M(55.0, p, MRule::Thm56Subcritical, 4.0), SpecError);
    CHECK_THROWS_AS(select_M(55.0, p, MRule::Thm56Subcritical, 5.0), SpecError);

    RegularityParams q;
    q.r = 0.5;
    q.kappa = 0.5; // 2 kappa = 1 > 1 - r = 0.5
    CHECK_THROWS_AS(select_M(55.0, q, MRule::Thm57Strict, 0.5), SpecError);
    try {
        select_M(55.0, q, MRule::Thm57Strict, 0.5);
    } catch (const SpecError& err) {
        CHECK(std::string(err.what()).find("logarithmic") != std::string::npos);
    }
    q.kappa = 0.2; // 2 kappa = 0.4 < 0.5
    CHECK(select_M(55.0, q, MRule::Thm57Strict, 0.5) ==
          doctest::Approx(std::pow(std::log(55.0), 0.25)).epsilon(1e-13));
    q.kappa = 0.25; // boundary 2 kappa = 1 - r
    CHECK(select_M(std::exp(9.0), q, MRule::Thm57Boundary, 0.5, 2.0) ==
          doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("radius schedules are nondecreasing in n") {
    RegularityParams p;
    p.r = 0.25;
    p.l = 1.0;
    p.kappa = 0.1;
    double prev_a = 0.0, prev_b = 0.0, prev_c = 0.0;
    for (double n : {8.0, 16.0, 64.0, 256.0, 4096.0}) {
        const double a = select_M(n, p, MRule::Thm56Subcritical, 2.0);
        const double b = select_M(n, p, MRule::Thm56Critical, 2.0, 0.7);
        const double c = select_M(n, p, MRule::Thm57Strict, 0.5);
        CHECK(a >= prev_a);
        CHECK(b >= prev_b);
        CHECK(c >= prev_c);
        prev_a = a;
        prev_b = b;
        prev_c = c;
    }
}

TEST_CASE("micro convergence study runs and reports a fit") {
    StudyConfig cfg;
    cfg.problem = catalog::bounded_sine();
    cfg.n_values = {4, 8, 16};
    cfg.P = 4000;
    cfg.estimator = EstimatorSpec::partition(16);
    cfg.fixed_M = 8.0;
    cfg.seeds = {1234};
    cfg.reference = ReferenceStrategy::ClosedForm;
    const auto res = convergence_study(cfg);
    REQUIRE(!res.aborted);
    REQUIRE(res.runs.size() == 3);
    REQUIRE(res.fit.has_value());
    CHECK(res.runs[0].n == 4);
    CHECK(res.runs[2].h == doctest::Approx(1.0 / 16.0));
    for (const auto& r : res.runs) CHECK(r.total > 0.0);
}

TEST_CASE("study reruns are byte-identical") {
    StudyConfig cfg;
    cfg.problem = catalog::bounded_sine();
    cfg.n_values = {4, 8, 16};
    cfg.P = 3000;
    cfg.estimator = EstimatorSpec::partition(8);
    cfg.fixed_M = 8.0;
    cfg.seeds = {77};
    cfg.reference = ReferenceStrategy::ClosedForm;
    const auto a = convergence_study(cfg);
    cfg.threads = 8;
    const auto b = convergence_study(cfg);
    const auto csv_a = render_report_csv(a.runs, a.fit);
    const auto csv_b = render_report_csv(b.runs, b.fit);
    CHECK(csv_a == csv_b);
}

TEST_CASE("study failures keep partial results") {
    StudyConfig cfg;
    // driver Lipschitz-in-y constant 10 trips the step guard at n = 4
    nlohmann::json j = {{"d", 1},      {"T", 1.0},         {"x0", {0.0}},
                        {"b", {"0"}},  {"sigma", {{"1"}}}, {"f", "10*y"},
                        {"g", "sin(x0)"}, {"regime", "B1-critical"},
                        {"params", {{"K_f_y", 10.0}, {"M_g", 1.0}}}};
    cfg.problem = problem_from_json(j);
    cfg.n_values = {32, 64, 128};
    cfg.P = 500;
    cfg.estimator = EstimatorSpec::partition(8);
    cfg.fixed_M = 8.0;
    cfg.seeds = {5};
    cfg.reference = ReferenceStrategy::FineGrid;
    cfg.fine_grid_factor_n = 4;
    cfg.fine_grid_factor_P = 4;
    auto res = convergence_study(cfg);
    CHECK(!res.aborted); // this one is fine: h K <= 1/128 * 10 < 1/2 for all runs

    cfg.n_values = {4, 8, 16};
    res = convergence_study(cfg);
    CHECK(res.aborted);
    CHECK(res.runs.empty()); // the very first run trips the guard
    CHECK(res.failure.find("n=4") != std::string::npos);
}

TEST_CASE("field grid: terminal row is exact, interior rows near the closed form") {
    auto p = catalog::linear_terminal(1.0, 1.0, 1.0, 0.0);
    const std::vector<double> ts = {0.0, 0.5, 1.0};
    const std::vector<double> xs = {-1.0, -0.5, 0.0, 0.5, 1.0};
    const auto field = feynman_kac_grid(p, ts, xs, 16, 20000, 8.0,
                                        EstimatorSpec::global(2), 31,
                                        FieldStrategy::Rerun, 1);
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(field.values[2 * xs.size() + i] == xs[i]); // u(T, x) = g(x) exactly
    for (std::size_t it = 0; it < 2; ++it)
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double expected = xs[i] + 0.5 * (1.0 - ts[it]);
            CHECK(field.values[it * xs.size() + i] ==
                  doctest::Approx(expected).epsilon(0.08));
        }
    CHECK(field.growth_ratio > 0.0);
    CHECK(std::isfinite(field.max_adjacent_slope));
    // continuity probe: the closed form has unit x-slope; the empirical
    // adjacent-point slopes stay within a calibrated budget
    CHECK(field.max_adjacent_slope <= 1.5);
}

TEST_CASE("reports render deterministically and round-trip") {
    const auto path_csv = std::filesystem::temp_directory_path() / "bsdelab_report.csv";
    const auto path_json = std::filesystem::temp_directory_path() / "bsdelab_report.json";

    SUBCASE("empty report is header-only") {
        emit_report({}, std::nullopt, nlohmann::json::object(), ReportFormat::Csv, path_csv);
        std::ifstream in(path_csv);
        std::string line, rest;
        std::getline(in, line);
        CHECK(line == "n,h,P,M,estimator,seed,y_error,z_error,total,slope,intercept,r2");
        CHECK(!std::getline(in, rest));
    }

    SUBCASE("one report row re-parses bit-exact") {
        ErrorReport r;
        r.n = 16;
        r.h = 1.0 / 16.0;
        r.P = 1000;
        r.M = 3.5;
        r.estimator = "partition:8";
        r.seed = 42;
        r.y_error = 0.1234567890123456789;
        r.z_error = 2e-17;
        r.total = r.y_error + r.z_error;
        emit_report({r}, std::nullopt, nlohmann::json::object(), ReportFormat::Csv, path_csv);
        std::ifstream in(path_csv);
        std::string header, line;
        std::getline(in, header);
        std::getline(in, line);
        // parse back the three error fields and compare bit-exact
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else
                cur += c;
        }
        fields.push_back(cur);
        REQUIRE(fields.size() == 12);
        CHECK(std::stod(fields[6]) == r.y_error);
        CHECK(std::stod(fields[7]) == r.z_error);
        CHECK(std::stod(fields[8]) == r.total);
    }

    SUBCASE("json mirrors the csv rows with provenance") {
        ErrorReport r;
        r.n = 8;
        r.h = 0.125;
        r.P = 100;
        r.M = 2.0;
        r.estimator = "global:3";
        r.seed = 7;
        r.y_error = 0.25;
        r.z_error = 0.5;
        r.total = 0.75;
        SlopeFit fit{1.0, -2.0, 0.99};
        emit_report({r}, fit, {{"note", "unit"}}, ReportFormat::Json, path_json);
        std::ifstream in(path_json);
        nlohmann::json j;
        in >> j;
        CHECK(j.at("runs").size() == 1);
        CHECK(j.at("runs")[0].at("total").get<double>() == 0.75);
        CHECK(j.at("fit").at("slope").get<double>() == 1.0);
        CHECK(j.at("provenance").at("note").get<std::string>() == "unit");
    }

    std::filesystem::remove(path_csv);
    std::filesystem::remove(path_json);
}

TEST_CASE("slope fit on synthetic exact data") {
    std::vector<double> xs, ys;
    for (double x : {1.0, 2.0, 3.0, 4.0}) {
        xs.push_back(x);
        ys.push_back(0.9 * x - 0.2);
    }
    const auto fit = fit_line(xs, ys);
    CHECK(fit.slope == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
}
