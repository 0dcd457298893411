#include "bsdelab/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "bsdelab/parallel.hpp"

namespace bsdelab {

SlopeFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw SpecError("slope fit needs at least two points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    const double cxy = sxy - sx * sy / n;
    if (vx <= 0.0) throw SpecError("slope fit needs distinct abscissae");
    SlopeFit fit;
    fit.slope = cxy / vx;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.r2 = (vy > 0.0) ? (cxy * cxy) / (vx * vy) : 1.0;
    return fit;
}

ErrorReport error_against(const DiscreteSolution& sol, const ReferenceSolution& ref,
                          int threads) {
    ErrorReport rep;
    rep.n = sol.n;
    rep.h = sol.h;
    rep.P = sol.P;
    rep.M = sol.problem.x_trunc ? sol.problem.x_trunc->M : 0.0;
    rep.estimator = sol.estimator.name();
    rep.seed = sol.ensemble->seed;
    rep.variant = sol.problem.z_trunc ? "random-sigma" : "deterministic-sigma";
    rep.reference = ref.kind_name();

    if (!ref.pointwise()) {
        const double dy = sol.y0_mean - ref.y0;
        rep.y_error = dy * dy;
        rep.z_error = 0.0;
        rep.total = rep.y_error;
        return rep;
    }

    const int n = sol.n;
    const std::size_t P = sol.P;
    const int d = sol.d;
    const PathEnsemble& ens = *sol.ensemble;

    int stride = 1;
    const DiscreteSolution* grid = nullptr;
    if (ref.kind == ReferenceSolution::Kind::FineGrid) {
        grid = ref.grid.get();
        if (grid->n % n != 0)
            throw SpecError("reference grid (" + std::to_string(grid->n) +
                            ") is not a multiple of the run grid (" + std::to_string(n) + ")");
        stride = grid->n / n;
    }

    std::vector<double> y_acc(kParallelChunks * static_cast<std::size_t>(n + 1), 0.0);
    std::vector<double> z_acc(kParallelChunks * static_cast<std::size_t>(n), 0.0);

    // The control error integrates the reference's Z stepwise over each
    // interval. Closed-form references use the trapezoid over both interval
    // endpoints (this keeps the within-step fluctuation of Z in the metric);
    // grid references average their sub-steps at the run's node, which is the
    // subsampling of the finer grid and leaves a self-comparison at zero.
    parallel_chunks(P, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        double zbuf[kMaxDim];
        double ydummy;
        double* ya = y_acc.data() + chunk * static_cast<std::size_t>(n + 1);
        double* za = z_acc.data() + chunk * static_cast<std::size_t>(n);
        auto sqdiff = [&](std::span<const double> z, const double* refz) {
            double dz2 = 0.0;
            for (int i = 0; i < d; ++i) {
                const double dz = z[static_cast<std::size_t>(i)] - refz[i];
                dz2 += dz * dz;
            }
            return dz2;
        };
        for (std::size_t p = begin; p < end; ++p) {
            for (int k = 0; k <= n; ++k) {
                auto x = ens.state(p, k);
                const double t_k = ens.time_at(k);
                double yr;
                if (grid) {
                    grid->evaluate_into(k * stride, x, yr, {zbuf, static_cast<std::size_t>(d)});
                } else {
                    yr = ref.y_fn(t_k, x);
                }
                const double dy = sol.y_at(p, k) - yr;
                ya[k] += dy * dy;
            }
            for (int k = 0; k < n; ++k) {
                auto z = sol.z_at(p, k);
                if (grid) {
                    const auto xk = ens.state(p, k);
                    double acc = 0.0;
                    for (int j = 0; j < stride; ++j) {
                        grid->evaluate_into(k * stride + j, xk, ydummy,
                                            {zbuf, static_cast<std::size_t>(d)});
                        acc += sqdiff(z, zbuf);
                    }
                    za[k] += acc / stride;
                } else {
                    ref.z_fn(ens.time_at(k), ens.state(p, k),
                             {zbuf, static_cast<std::size_t>(d)});
                    double acc = 0.5 * sqdiff(z, zbuf);
                    ref.z_fn(ens.time_at(k + 1), ens.state(p, k + 1),
                             {zbuf, static_cast<std::size_t>(d)});
                    acc += 0.5 * sqdiff(z, zbuf);
                    za[k] += acc;
                }
            }
        }
    });

    double y_err = 0.0;
    for (int k = 0; k <= n; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < kParallelChunks; ++c)
            s += y_acc[c * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(k)];
        y_err = std::max(y_err, s / static_cast<double>(P));
    }
    double z_err = 0.0;
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < kParallelChunks; ++c)
            s += z_acc[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
        z_err += sol.h * s / static_cast<double>(P);
    }
    rep.y_error = y_err;
    rep.z_error = z_err;
    rep.total = y_err + z_err;
    return rep;
}

MRule m_rule_from_name(const std::string& name) {
    if (name == "thm5_6_subcritical" || name == "subcritical") return MRule::Thm56Subcritical;
    if (name == "thm5_6_critical" || name == "critical") return MRule::Thm56Critical;
    if (name == "thm5_7_strict" || name == "strict") return MRule::Thm57Strict;
    if (name == "thm5_7_boundary" || name == "boundary") return MRule::Thm57Boundary;
    throw SpecError("unknown schedule rule '" + name + "'");
}

std::string m_rule_name(MRule rule) {
    switch (rule) {
    case MRule::Thm56Subcritical: return "thm5_6_subcritical";
    case MRule::Thm56Critical: return "thm5_6_critical";
    case MRule::Thm57Strict: return "thm5_7_strict";
    case MRule::Thm57Boundary: return "thm5_7_boundary";
    }
    return "?";
}

double select_M(double n, const RegularityParams& params, MRule rule, double p_exp,
                double c_ratio) {
    if (!(n > 1.0)) throw SpecError("schedules need n > 1");
    const double logn = std::log(n);
    switch (rule) {
    case MRule::Thm56Subcritical: {
        const double rl = params.r * params.l;
        if (!(rl < 1.0)) throw SpecError("the subcritical power schedule requires r*l < 1");
        const double upper = (rl > 0.0) ? 1.0 / rl : std::numeric_limits<double>::infinity();
        if (!(p_exp > 1.0 && p_exp < upper))
            throw SpecError("the subcritical power schedule requires 1 < p < 1/(r*l)");
        return std::pow(logn, 0.5 * p_exp);
    }
    case MRule::Thm56Critical:
        if (!(c_ratio > 0.0)) throw SpecError("the critical schedule requires c_ratio > 0");
        return c_ratio * std::sqrt(logn);
    case MRule::Thm57Strict: {
        const double gap = 1.0 - params.r - 2.0 * params.kappa;
        if (gap <= 0.0)
            throw SpecError(
                "2*kappa " + std::string(gap < 0.0 ? ">" : "=") + " 1-r: the power schedule needs "
                "2*kappa < 1-r; beyond it only logarithmic-in-n truncation rates are available");
        if (!(p_exp > 0.0 && p_exp < 1.0))
            throw SpecError("the strict random-sigma schedule requires 0 < p < 1");
        return std::pow(logn, 0.5 * p_exp);
    }
    case MRule::Thm57Boundary: {
        const double gap = 1.0 - params.r - 2.0 * params.kappa;
        if (gap != 0.0)
            throw SpecError(gap < 0.0
                                ? "2*kappa > 1-r: only logarithmic-in-n truncation rates are "
                                  "available; no square-root schedule applies"
                                : "the boundary schedule requires 2*kappa = 1-r exactly");
        if (!(c_ratio > 0.0)) throw SpecError("the boundary schedule requires c_ratio > 0");
        return c_ratio * std::sqrt(logn);
    }
    }
    throw SpecError("unknown schedule rule");
}

ReferenceStrategy reference_strategy_from_name(const std::string& name) {
    if (name == "closed-form") return ReferenceStrategy::ClosedForm;
    if (name == "cole-hopf") return ReferenceStrategy::ColeHopf;
    if (name == "fine-grid") return ReferenceStrategy::FineGrid;
    throw SpecError("unknown reference strategy '" + name + "'");
}

namespace {

std::uint64_t run_seed(const StudyConfig& cfg, std::size_t index) {
    if (index < cfg.seeds.size()) return cfg.seeds[index];
    const std::uint64_t base = cfg.seeds.empty() ? 1 : cfg.seeds.front();
    return mix64(base ^ (0x5EEDULL + index));
}

ReferenceSolution make_reference(const StudyConfig& cfg) {
    switch (cfg.reference) {
    case ReferenceStrategy::ClosedForm:
        return closed_form_reference(cfg.problem);
    case ReferenceStrategy::ColeHopf:
        return cole_hopf_reference(cfg.problem, cfg.oracle_samples,
                                   mix64(run_seed(cfg, 0) ^ 0x0A0CULL), 256, cfg.threads);
    case ReferenceStrategy::FineGrid: {
        const int n_max = cfg.n_values.back();
        const int n_ref = cfg.fine_grid_factor_n * n_max;
        const std::size_t P_ref = static_cast<std::size_t>(cfg.fine_grid_factor_P) * cfg.P;
        if (n_ref < 4 * n_max || P_ref < 4 * cfg.P)
            throw SpecError("fine-grid reference needs n_ref >= 4*max(n) and P_ref >= 4*P");
        double M = cfg.fixed_M.value_or(0.0);
        if (cfg.rule) M = select_M(n_ref, cfg.problem.params, *cfg.rule, cfg.p_exp, cfg.c_ratio);
        ProblemSpec truncated =
            M > 1.0 ? truncate_problem(cfg.problem, M, cfg.variant) : cfg.problem;
        return fine_grid_reference(truncated, n_ref, P_ref, cfg.estimator,
                                   mix64(run_seed(cfg, 0) ^ 0xF1EEULL), cfg.threads);
    }
    }
    throw SpecError("unknown reference strategy");
}

nlohmann::json study_provenance(const StudyConfig& cfg, const ReferenceSolution& ref) {
    nlohmann::json j;
    j["problem"] = cfg.problem.catalog_tag.empty() ? "user" : cfg.problem.catalog_tag;
    j["estimator"] = cfg.estimator.name();
    j["P"] = cfg.P;
    j["n_values"] = cfg.n_values;
    if (cfg.rule)
        j["M_rule"] = m_rule_name(*cfg.rule);
    else if (cfg.fixed_M)
        j["M"] = *cfg.fixed_M;
    j["reference"] = ref.provenance;
    std::vector<std::uint64_t> seeds;
    const std::size_t n_runs = std::max<std::size_t>(cfg.n_values.size(), 1);
    for (std::size_t i = 0; i < n_runs; ++i) seeds.push_back(run_seed(cfg, i));
    j["seeds"] = seeds;
    return j;
}

} // namespace

StudyResult convergence_study(const StudyConfig& cfg) {
    if (cfg.n_values.size() < 3)
        throw SpecError("a convergence study needs at least three grid sizes");
    for (std::size_t i = 1; i < cfg.n_values.size(); ++i)
        if (cfg.n_values[i] <= cfg.n_values[i - 1])
            throw SpecError("grid sizes must be strictly increasing");
    if (!cfg.rule && !cfg.fixed_M) throw SpecError("a study needs a radius rule or a fixed M");

    StudyResult result;
    ReferenceSolution ref = make_reference(cfg);
    result.provenance = study_provenance(cfg, ref);

    for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
        const int n = cfg.n_values[i];
        try {
            const double M = cfg.rule ? select_M(n, cfg.problem.params, *cfg.rule, cfg.p_exp,
                                                 cfg.c_ratio)
                                      : *cfg.fixed_M;
            if (!(M > 1.0))
                throw SpecError("selected radius M <= 1; increase n or the schedule constants");
            ProblemSpec truncated = truncate_problem(cfg.problem, M, cfg.variant);
            auto ens = std::make_shared<PathEnsemble>(
                euler_paths(cfg.problem, n, cfg.P, run_seed(cfg, i), cfg.threads));
            DiscreteSolution sol = solve_backward(truncated, ens, cfg.estimator, cfg.threads);
            result.runs.push_back(error_against(sol, ref, cfg.threads));
        } catch (const std::exception& err) {
            result.aborted = true;
            result.failure = "run n=" + std::to_string(n) + " failed: " + err.what();
            break;
        }
    }

    if (!result.aborted && result.runs.size() >= 3) {
        std::vector<double> xs, ys;
        for (const auto& r : result.runs) {
            xs.push_back(std::log(r.h));
            ys.push_back(std::log(std::max(r.total, 1e-300)));
        }
        result.fit = fit_line(xs, ys);
    }
    return result;
}

StudyResult truncation_study(const StudyConfig& cfg, int n, std::vector<double> M_values,
                             double M_ref) {
    if (M_values.empty()) throw SpecError("the truncation sweep needs at least one radius");
    for (double M : M_values)
        if (!(M > 1.0) || !(M < M_ref))
            throw SpecError("sweep radii must satisfy 1 < M < M_ref");

    StudyResult result;

    // one shared ensemble: differences between runs isolate the truncation
    auto ens = std::make_shared<PathEnsemble>(
        euler_paths(cfg.problem, n, cfg.P, run_seed(cfg, 0), cfg.threads));

    ProblemSpec base_problem = truncate_problem(cfg.problem, M_ref, cfg.variant);
    auto baseline = std::make_shared<DiscreteSolution>(
        solve_backward(base_problem, ens, cfg.estimator, cfg.threads));
    ReferenceSolution ref;
    ref.kind = ReferenceSolution::Kind::FineGrid;
    ref.grid = baseline;
    ref.y0 = baseline->y0_mean;
    ref.y0_stderr = baseline->y0_stderr;
    ref.provenance = {{"kind", "fine-grid"},
                      {"surrogate", true},
                      {"baseline_M", M_ref},
                      {"n", n},
                      {"P", cfg.P},
                      {"estimator", cfg.estimator.name()},
                      {"shared_ensemble", true}};
    result.provenance = study_provenance(cfg, ref);
    result.provenance["sweep"] = "truncation";
    result.provenance["n"] = n;
    result.provenance["M_values"] = M_values;

    for (double M : M_values) {
        try {
            ProblemSpec truncated = truncate_problem(cfg.problem, M, cfg.variant);
            DiscreteSolution sol = solve_backward(truncated, ens, cfg.estimator, cfg.threads);
            result.runs.push_back(error_against(sol, ref, cfg.threads));
        } catch (const std::exception& err) {
            result.aborted = true;
            result.failure = "run M=" + std::to_string(M) + " failed: " + err.what();
            break;
        }
    }

    if (!result.aborted && result.runs.size() >= 3) {
        std::vector<double> xs, ys;
        for (const auto& r : result.runs) {
            xs.push_back(r.M * r.M);
            ys.push_back(std::log(std::max(r.total, 1e-300)));
        }
        result.fit = fit_line(xs, ys);
    }
    return result;
}

FieldResult feynman_kac_grid(const ProblemSpec& spec, std::vector<double> t_grid,
                             std::vector<double> x_grid, int n, std::size_t P, double M,
                             const EstimatorSpec& est, std::uint64_t seed,
                             FieldStrategy strategy, int threads) {
    if (t_grid.empty() || x_grid.empty()) throw SpecError("field grids must be nonempty");
    if (spec.d != 1) throw SpecError("the field evaluator covers d = 1 grids");
    for (double t : t_grid)
        if (t < 0.0 || t > spec.T) throw SpecError("field times must lie in [0, T]");

    FieldResult field;
    field.t_grid = t_grid;
    field.x_grid = x_grid;
    field.values.assign(t_grid.size() * x_grid.size(), 0.0);

    ProblemSpec truncated = truncate_problem(spec, M, TruncationVariant::DeterministicSigma);

    std::shared_ptr<DiscreteSolution> base;
    if (strategy == FieldStrategy::Evaluate) {
        auto ens = std::make_shared<PathEnsemble>(euler_paths(spec, n, P, seed, threads));
        base = std::make_shared<DiscreteSolution>(
            solve_backward(truncated, ens, est, threads));
    }

    for (std::size_t it = 0; it < t_grid.size(); ++it) {
        const double t = t_grid[it];
        const bool terminal_row = !(t < spec.T);
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            const double xv = x_grid[ix];
            const double xarr[1] = {xv};
            double u;
            if (terminal_row) {
                u = spec.g.eval_x({xarr, 1});
            } else if (strategy == FieldStrategy::Evaluate) {
                const int k = static_cast<int>(std::lround(t / base->h));
                u = base->evaluate(std::min(k, base->n), {xarr, 1}).first;
            } else {
                ProblemSpec from = spec;
                from.x0 = {xv};
                const std::uint64_t sub = mix64(seed ^ (it * 1000003ULL + ix));
                auto ens = std::make_shared<PathEnsemble>(
                    euler_paths_from(from, t, from.x0, n, P, sub, threads));
                DiscreteSolution sol = solve_backward(truncated, ens, est, threads);
                u = sol.y0_mean;
            }
            field.values[it * x_grid.size() + ix] = u;
        }
    }

    const double il = 1.0 / spec.params.l;
    double growth = 0.0;
    for (std::size_t it = 0; it < t_grid.size(); ++it)
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            const double u = field.values[it * x_grid.size() + ix];
            const double denom = 1.0 + std::pow(std::abs(x_grid[ix]), 1.0 + il);
            growth = std::max(growth, std::abs(u) / denom);
        }
    field.growth_ratio = growth;

    double max_slope = 0.0;
    for (std::size_t it = 0; it < t_grid.size(); ++it)
        for (std::size_t ix = 0; ix + 1 < x_grid.size(); ++ix) {
            const double du = field.values[it * x_grid.size() + ix + 1] -
                              field.values[it * x_grid.size() + ix];
            const double dx = x_grid[ix + 1] - x_grid[ix];
            if (dx > 0.0) max_slope = std::max(max_slope, std::abs(du / dx));
        }
    field.max_adjacent_slope = max_slope;
    return field;
}

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

std::string render_report_csv(const std::vector<ErrorReport>& reports,
                              const std::optional<SlopeFit>& fit) {
    std::string out = "n,h,P,M,estimator,seed,y_error,z_error,total,slope,intercept,r2\n";
    for (const auto& r : reports) {
        out += std::to_string(r.n) + ',' + fmt(r.h) + ',' + std::to_string(r.P) + ',' +
               fmt(r.M) + ',' + r.estimator + ',' + std::to_string(r.seed) + ',' +
               fmt(r.y_error) + ',' + fmt(r.z_error) + ',' + fmt(r.total) + ',';
        if (fit)
            out += fmt(fit->slope) + ',' + fmt(fit->intercept) + ',' + fmt(fit->r2);
        else
            out += ",,";
        out += '\n';
    }
    return out;
}

void emit_report(const std::vector<ErrorReport>& reports, const std::optional<SlopeFit>& fit,
                 const nlohmann::json& provenance, ReportFormat format,
                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path.string() + "' for writing");
    if (format == ReportFormat::Csv) {
        out << render_report_csv(reports, fit);
    } else {
        nlohmann::ordered_json j;
        j["runs"] = nlohmann::json::array();
        for (const auto& r : reports) {
            nlohmann::ordered_json rj;
            rj["n"] = r.n;
            rj["h"] = r.h;
            rj["P"] = r.P;
            rj["M"] = r.M;
            rj["estimator"] = r.estimator;
            rj["seed"] = r.seed;
            rj["y_error"] = r.y_error;
            rj["z_error"] = r.z_error;
            rj["total"] = r.total;
            rj["reference"] = r.reference;
            rj["variant"] = r.variant;
            j["runs"].push_back(rj);
        }
        if (fit) {
            j["fit"] = {{"slope", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r2}};
        }
        j["provenance"] = provenance;
        out << j.dump(2) << '\n';
    }
    if (!out) throw NumericalError("short write to '" + path.string() + "'");
}

void emit_plot_data(const std::vector<ErrorReport>& reports,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open '" + path.string() + "' for writing");
    out << "# log_h log_total\n";
    for (const auto& r : reports)
        out << fmt(std::log(r.h)) << ' ' << fmt(std::log(std::max(r.total, 1e-300))) << '\n';
}

} // namespace bsdelab
