// Command-line front end: check, solve, oracle, study, pde.
// Exit codes: 0 ok, 2 assumption violation, 3 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bsdelab/apriori.hpp"
#include "bsdelab/harness.hpp"
#include "bsdelab/oracle.hpp"
#include "bsdelab/problem_io.hpp"

using namespace bsdelab;

namespace {

std::filesystem::path out_path(const std::string& dir, const std::string& file) {
    if (file.empty()) return {};
    std::filesystem::path p(file);
    if (p.is_absolute() || dir.empty()) return p;
    return std::filesystem::path(dir) / p;
}

void write_json(const nlohmann::ordered_json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

std::vector<double> parse_grid(const std::string& text) {
    // "a,b,c" or "lo:hi:count"
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo, hi;
        int count;
        if (std::sscanf(text.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 1)
            throw SpecError("grid must be 'lo:hi:count' or a comma list");
        for (int i = 0; i < count; ++i)
            out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        return out;
    }
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stod(cur));
            cur.clear();
        } else
            cur += c;
    }
    if (out.empty()) throw SpecError("empty grid");
    return out;
}

struct CommonOpts {
    std::string problem_file;
    int threads = 1;
    std::string out_dir;
};

ProblemSpec load(const CommonOpts& c) {
    if (c.problem_file.empty()) throw SpecError("--problem is required");
    return load_problem(c.problem_file);
}

int run_check(const CommonOpts& c, double t, const std::string& json_out) {
    const auto spec = load(c);
    const auto& p = spec.params;

    nlohmann::ordered_json j;
    j["problem"] = c.problem_file;
    j["regime"] = regime_name(spec.regime);

    std::printf("%-28s %s\n", "regime", regime_name(spec.regime).c_str());
    bool admissible = true;
    if (p.gamma > 0.0 && p.sigma_sup > 0.0) {
        const auto th = check_b1_threshold(p);
        admissible = th.satisfied;
        std::printf("%-28s %.12g\n", "threshold", th.threshold);
        std::printf("%-28s %.12g\n", "alpha + T*beta", th.lhs);
        std::printf("%-28s %s\n", "admissible", th.satisfied ? "yes" : "no");
        std::printf("%-28s %.12g\n", "margin", th.margin);
        j["threshold"] = {{"value", th.threshold},
                          {"lhs", th.lhs},
                          {"satisfied", th.satisfied},
                          {"margin", th.margin}};
        const auto env = b1_envelope(p, t);
        std::printf("%-28s A=%.6g B=%.6g |X|^%.4g (converged=%s, %ld iter)\n",
                    "critical envelope", env.A, env.B, env.exponent,
                    env.converged ? "yes" : "no", env.iterations);
        j["critical_envelope"] = {{"A", env.A},
                                  {"B", env.B},
                                  {"exponent", env.exponent},
                                  {"converged", env.converged},
                                  {"iterations", env.iterations},
                                  {"C1", env.C1},
                                  {"C2", env.C2}};
        if (!th.satisfied && !env.converged)
            std::printf("%-28s %s\n", "note", "envelope recursion diverges past the threshold");
    }
    const double lip = lipschitz_z_bound(p);
    std::printf("%-28s %.12g\n", "lipschitz-data bound", lip);
    j["lipschitz_bound"] = lip;
    if (spec.regime == Regime::B2Subcritical) {
        const auto lim = b2_recursion_limit(p, 0.0);
        std::printf("%-28s %.12g (%ld iter)\n", "subcritical fixed point", lim.A_inf,
                    lim.iterations);
        j["subcritical_fixed_point"] = {{"A_inf", lim.A_inf}, {"iterations", lim.iterations}};
    }
    if (spec.regime == Regime::B3Bounded) {
        const auto env = b3_envelope(p, spec.regime);
        std::printf("%-28s A=%.6g B=%.6g |X|^%.4g%s\n", "bounded-regime envelope", env.A,
                    env.B, env.exponent,
                    env.slow_rate_regime ? " (slow truncation-rate regime)" : "");
        j["bounded_envelope"] = {{"A", env.A},
                                 {"B", env.B},
                                 {"exponent", env.exponent},
                                 {"slow_rate_regime", env.slow_rate_regime}};
    }
    j["envelope_C"] = p.envelope_C;
    std::printf("%-28s %.6g\n", "envelope constant C", p.envelope_C);
    if (!json_out.empty()) write_json(j, out_path(c.out_dir, json_out).string());

    return admissible ? 0 : 2;
}

int run_solve(const CommonOpts& c, int n, std::size_t P, double M,
              const std::string& est_text, std::uint64_t seed, const std::string& variant,
              const std::string& json_out, const std::string& steps_csv,
              const std::string& dump_ensemble) {
    const auto spec = load(c);
    const auto est = EstimatorSpec::parse(est_text);
    const auto var = variant == "random-sigma" ? TruncationVariant::RandomSigma
                                               : TruncationVariant::DeterministicSigma;
    const auto truncated = truncate_problem(spec, M, var);

    const auto start = std::chrono::steady_clock::now();
    auto ens = std::make_shared<PathEnsemble>(euler_paths(spec, n, P, seed, c.threads));
    if (!dump_ensemble.empty()) ens->write_binary(out_path(c.out_dir, dump_ensemble));
    const auto sol = solve_backward(truncated, ens, est, c.threads);
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    double z0 = 0.0;
    for (std::size_t p = 0; p < sol.P; ++p) z0 += sol.z_at(p, 0)[0];
    z0 /= static_cast<double>(sol.P);

    nlohmann::ordered_json j;
    j["Y0_mean"] = sol.y0_mean;
    j["Y0_stderr"] = sol.y0_stderr;
    j["Z0_mean"] = z0;
    j["runtime"] = runtime;
    j["n"] = n;
    j["P"] = P;
    j["M"] = M;
    j["estimator"] = est.name();
    j["seed"] = seed;
    j["variant"] = variant;
    write_json(j, json_out.empty() ? "-" : out_path(c.out_dir, json_out).string());

    if (!steps_csv.empty()) {
        std::ofstream out(out_path(c.out_dir, steps_csv));
        out << "k,t,mean_Y,mean_absZ\n";
        for (int k = 0; k <= sol.n; ++k) {
            double my = 0.0, mz = 0.0;
            for (std::size_t p = 0; p < sol.P; ++p) {
                my += sol.y_at(p, k);
                if (k < sol.n) {
                    double a = 0.0;
                    for (double v : sol.z_at(p, k)) a += v * v;
                    mz += std::sqrt(a);
                }
            }
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", k, ens->time_at(k),
                          my / static_cast<double>(sol.P),
                          k < sol.n ? mz / static_cast<double>(sol.P) : 0.0);
            out << buf;
        }
    }
    return 0;
}

int run_oracle(const CommonOpts& c, const std::string& kind, std::size_t samples,
               std::uint64_t seed, int n_inner, int n_ref, std::size_t P_ref,
               const std::string& est_text, const std::string& json_out) {
    const auto spec = load(c);
    nlohmann::ordered_json j;
    if (kind == "cole-hopf") {
        const auto r = cole_hopf_y(spec, 0.0, spec.x0, samples, seed, n_inner, c.threads);
        j["Y0"] = r.y;
        j["stderr"] = r.stderr;
        j["provenance"] = {{"kind", "cole-hopf-mc"},
                           {"samples", samples},
                           {"seed", seed},
                           {"n_inner", n_inner}};
    } else if (kind == "closed-form") {
        const auto ref = closed_form_reference(spec);
        j["Y0"] = ref.y_fn(0.0, spec.x0);
        j["stderr"] = 0.0;
        j["provenance"] = ref.provenance;
    } else if (kind == "fine-grid") {
        const auto est = EstimatorSpec::parse(est_text);
        const auto truncated =
            truncate_problem(spec, 8.0, TruncationVariant::DeterministicSigma);
        const auto ref = fine_grid_reference(truncated, n_ref, P_ref, est, seed, c.threads);
        j["Y0"] = ref.y0;
        j["stderr"] = ref.y0_stderr;
        j["provenance"] = ref.provenance;
    } else {
        throw SpecError("unknown oracle kind '" + kind + "'");
    }
    write_json(j, json_out.empty() ? "-" : out_path(c.out_dir, json_out).string());
    return 0;
}

int run_study(const CommonOpts& c, const std::string& mode, const std::string& n_list,
              std::size_t P, const std::string& est_text, const std::string& m_rule,
              double p_exp, double c_ratio, double fixed_M, const std::string& m_list,
              double m_ref, int n_fixed, std::uint64_t seed, const std::string& ref_name,
              std::size_t oracle_samples, const std::string& csv_out,
              const std::string& json_out, const std::string& plot_out,
              const std::string& variant) {
    StudyConfig cfg;
    cfg.problem = load(c);
    cfg.P = P;
    cfg.estimator = EstimatorSpec::parse(est_text);
    cfg.seeds = {seed};
    cfg.reference = reference_strategy_from_name(ref_name);
    cfg.oracle_samples = oracle_samples;
    cfg.threads = c.threads;
    cfg.variant = variant == "random-sigma" ? TruncationVariant::RandomSigma
                                            : TruncationVariant::DeterministicSigma;
    if (!m_rule.empty()) {
        cfg.rule = m_rule_from_name(m_rule);
        cfg.p_exp = p_exp;
        cfg.c_ratio = c_ratio;
    } else {
        cfg.fixed_M = fixed_M;
    }

    StudyResult res;
    if (mode == "rate") {
        for (double v : parse_grid(n_list)) cfg.n_values.push_back(static_cast<int>(v));
        res = convergence_study(cfg);
    } else if (mode == "truncation") {
        res = truncation_study(cfg, n_fixed, parse_grid(m_list), m_ref);
    } else {
        throw SpecError("unknown study mode '" + mode + "' (rate|truncation)");
    }

    if (!csv_out.empty())
        emit_report(res.runs, res.fit, res.provenance, ReportFormat::Csv,
                    out_path(c.out_dir, csv_out));
    if (!json_out.empty())
        emit_report(res.runs, res.fit, res.provenance, ReportFormat::Json,
                    out_path(c.out_dir, json_out));
    if (!plot_out.empty()) emit_plot_data(res.runs, out_path(c.out_dir, plot_out));

    for (const auto& r : res.runs)
        std::printf("n=%4d h=%.6g M=%.6g y_error=%.6g z_error=%.6g total=%.6g\n", r.n, r.h,
                    r.M, r.y_error, r.z_error, r.total);
    if (res.fit)
        std::printf("slope=%.6g intercept=%.6g r2=%.6g\n", res.fit->slope, res.fit->intercept,
                    res.fit->r2);
    if (res.aborted) {
        std::fprintf(stderr, "study aborted: %s\n", res.failure.c_str());
        return 3;
    }
    return 0;
}

int run_pde(const CommonOpts& c, const std::string& t_grid, const std::string& x_grid, int n,
            std::size_t P, double M, const std::string& est_text, std::uint64_t seed,
            const std::string& strategy, const std::string& csv_out) {
    const auto spec = load(c);
    const auto est = EstimatorSpec::parse(est_text);
    const auto strat =
        strategy == "evaluate" ? FieldStrategy::Evaluate : FieldStrategy::Rerun;
    const auto field = feynman_kac_grid(spec, parse_grid(t_grid), parse_grid(x_grid), n, P, M,
                                        est, seed, strat, c.threads);
    std::printf("growth ratio max|u|/(1+|x|^(1+1/l)) = %.6g\n", field.growth_ratio);
    std::printf("max adjacent slope = %.6g\n", field.max_adjacent_slope);
    if (!csv_out.empty()) {
        std::ofstream out(out_path(c.out_dir, csv_out));
        out << "t,x,u\n";
        for (std::size_t it = 0; it < field.t_grid.size(); ++it)
            for (std::size_t ix = 0; ix < field.x_grid.size(); ++ix) {
                char buf[128];
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", field.t_grid[it],
                              field.x_grid[ix], field.values[it * field.x_grid.size() + ix]);
                out << buf;
            }
    } else {
        for (std::size_t it = 0; it < field.t_grid.size(); ++it) {
            for (std::size_t ix = 0; ix < field.x_grid.size(); ++ix)
                std::printf("%s%.6g", ix ? " " : "",
                            field.values[it * field.x_grid.size() + ix]);
            std::printf("\n");
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver laboratory for Markovian quadratic and superquadratic BSDEs"};
    app.require_subcommand(1);

    CommonOpts common;
    if (const char* env = std::getenv("BSDELAB_OUTDIR")) common.out_dir = env;
    app.add_option("--threads", common.threads, "worker thread count")->capture_default_str();
    app.add_option("--out-dir", common.out_dir,
                   "directory for output files (env BSDELAB_OUTDIR)");

    auto* check = app.add_subcommand("check", "thresholds, envelopes and fixed points");
    double check_t = 0.0;
    std::string check_json;
    check->add_option("--problem", common.problem_file, "problem JSON file")->required();
    check->add_option("--t", check_t, "evaluation time for the envelope");
    check->add_option("--json", check_json, "machine-readable output file ('-' for stdout)");

    auto* solve = app.add_subcommand("solve", "backward dynamic-programming run");
    int n = 64;
    std::size_t P = 100000;
    double M = 8.0;
    std::string est = "global:3";
    std::uint64_t seed = 1;
    std::string variant = "deterministic-sigma";
    std::string solve_json, steps_csv, dump_ens;
    solve->add_option("--problem", common.problem_file, "problem JSON file")->required();
    solve->add_option("--n", n, "time steps")->capture_default_str();
    solve->add_option("--P", P, "particles")->capture_default_str();
    solve->add_option("--M", M, "truncation radius")->capture_default_str();
    solve->add_option("--estimator", est, "global:q or partition:bins")->capture_default_str();
    solve->add_option("--seed", seed, "random seed")->capture_default_str();
    solve->add_option("--variant", variant, "deterministic-sigma | random-sigma")
        ->capture_default_str();
    solve->add_option("--json", solve_json, "summary output file ('-' for stdout)");
    solve->add_option("--steps-csv", steps_csv, "per-step CSV output file");
    solve->add_option("--dump-ensemble", dump_ens, "binary path dump output file");

    auto* oracle = app.add_subcommand("oracle", "reference values");
    std::string okind = "cole-hopf";
    std::size_t samples = 1000000;
    int n_inner = 256;
    int n_ref = 256;
    std::size_t P_ref = 400000;
    std::string oracle_json;
    oracle->add_option("--problem", common.problem_file, "problem JSON file")->required();
    oracle->add_option("--kind", okind, "cole-hopf | closed-form | fine-grid")
        ->capture_default_str();
    oracle->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();
    oracle->add_option("--seed", seed, "random seed")->capture_default_str();
    oracle->add_option("--n-inner", n_inner, "inner Euler steps")->capture_default_str();
    oracle->add_option("--n-ref", n_ref, "fine-grid steps")->capture_default_str();
    oracle->add_option("--P-ref", P_ref, "fine-grid particles")->capture_default_str();
    oracle->add_option("--estimator", est, "fine-grid estimator")->capture_default_str();
    oracle->add_option("--json", oracle_json, "output file ('-' for stdout)");

    auto* study = app.add_subcommand("study", "convergence and truncation studies");
    std::string mode = "rate";
    std::string n_list = "8,16,32,64";
    std::string m_rule, m_list = "2,3,4,5,6";
    double p_exp = 2.0, c_ratio = 1.0, m_ref = 8.0;
    int n_fixed = 128;
    std::string ref_name = "closed-form";
    std::string csv_out, study_json, plot_out;
    study->add_option("--problem", common.problem_file, "problem JSON file")->required();
    study->add_option("--mode", mode, "rate | truncation")->capture_default_str();
    study->add_option("--n", n_list, "grid sizes, comma list")->capture_default_str();
    study->add_option("--P", P, "particles")->capture_default_str();
    study->add_option("--estimator", est, "estimator")->capture_default_str();
    study->add_option("--M-rule", m_rule,
                      "thm5_6_subcritical | thm5_6_critical | thm5_7_strict | thm5_7_boundary");
    study->add_option("--p-exp", p_exp, "power p for the power schedules")
        ->capture_default_str();
    study->add_option("--c-ratio", c_ratio, "ratio for the square-root schedules")
        ->capture_default_str();
    study->add_option("--M", M, "fixed truncation radius")->capture_default_str();
    study->add_option("--M-list", m_list, "truncation sweep radii")->capture_default_str();
    study->add_option("--M-ref", m_ref, "baseline radius for the sweep")->capture_default_str();
    study->add_option("--n-fixed", n_fixed, "grid size for the sweep")->capture_default_str();
    study->add_option("--seed", seed, "random seed")->capture_default_str();
    study->add_option("--reference", ref_name, "closed-form | cole-hopf | fine-grid")
        ->capture_default_str();
    study->add_option("--oracle-samples", samples, "cole-hopf reference samples")
        ->capture_default_str();
    study->add_option("--variant", variant, "truncation variant")->capture_default_str();
    study->add_option("--csv", csv_out, "CSV report file");
    study->add_option("--json", study_json, "JSON report file");
    study->add_option("--plot", plot_out, "gnuplot data file (log h vs log error)");

    auto* pde = app.add_subcommand("pde", "semilinear PDE field by probabilistic evaluation");
    std::string t_grid = "0,0.5,1", x_grid = "-2:2:9", strategy = "rerun";
    std::string pde_csv;
    pde->add_option("--problem", common.problem_file, "problem JSON file")->required();
    pde->add_option("--t-grid", t_grid, "times, comma list or lo:hi:count")
        ->capture_default_str();
    pde->add_option("--x-grid", x_grid, "states, comma list or lo:hi:count")
        ->capture_default_str();
    pde->add_option("--n", n, "time steps")->capture_default_str();
    pde->add_option("--P", P, "particles")->capture_default_str();
    pde->add_option("--M", M, "truncation radius")->capture_default_str();
    pde->add_option("--estimator", est, "estimator")->capture_default_str();
    pde->add_option("--seed", seed, "random seed")->capture_default_str();
    pde->add_option("--strategy", strategy, "rerun | evaluate")->capture_default_str();
    pde->add_option("--csv", pde_csv, "field CSV output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return run_check(common, check_t, check_json);
        if (solve->parsed())
            return run_solve(common, n, P, M, est, seed, variant, solve_json, steps_csv,
                             dump_ens);
        if (oracle->parsed())
            return run_oracle(common, okind, samples, seed, n_inner, n_ref, P_ref, est,
                              oracle_json);
        if (study->parsed())
            return run_study(common, mode, n_list, P, est, m_rule, p_exp, c_ratio, M, m_list,
                             m_ref, n_fixed, seed, ref_name, samples, csv_out, study_json,
                             plot_out, variant);
        if (pde->parsed())
            return run_pde(common, t_grid, x_grid, n, P, M, est, seed, strategy, pde_csv);
    } catch (const SpecError& err) {
        std::fprintf(stderr, "assumption violation: %s\n", err.what());
        return 2;
    } catch (const NumericalError& err) {
        std::fprintf(stderr, "numerical failure: %s\n", err.what());
        return 3;
    }
    return 0;
}
