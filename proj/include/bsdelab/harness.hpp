#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsdelab/oracle.hpp"

namespace bsdelab {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares of ys against xs.
SlopeFit fit_line(std::span<const double> xs, std::span<const double> ys);

// Error functionals of a run against a reference:
//   y_error = max_k mean_p |Y[p][k] - y_ref(t_k, X[p][k])|^2
//   z_error = sum_k h * mean_p |Z[p][k] - z_ref(t_k, X[p][k])|^2
// A fine-grid reference is subsampled to the run's grid (n_ref must be a
// multiple of n); a Y0-only reference contributes |Y0 - y0_ref|^2 alone.
struct ErrorReport {
    double y_error = 0.0;
    double z_error = 0.0;
    double total = 0.0;
    int n = 0;
    double h = 0.0;
    std::size_t P = 0;
    double M = 0.0;
    std::string estimator;
    std::uint64_t seed = 0;
    std::string variant;
    std::string reference;
};

ErrorReport error_against(const DiscreteSolution& sol, const ReferenceSolution& ref,
                          int threads = 1);

enum class MRule { Thm56Subcritical, Thm56Critical, Thm57Strict, Thm57Boundary };

MRule m_rule_from_name(const std::string& name);
std::string m_rule_name(MRule rule);

// Truncation-radius schedules: (log n)^{p/2} for the subcritical rules,
// c_ratio * sqrt(log n) for the critical/boundary ones. Preconditions follow
// the regime: the subcritical power rule needs r*l < 1 and 1 < p < 1/(r*l);
// the strict random-sigma rule needs 2*kappa < 1 - r (p in (0,1)); the
// boundary rule needs 2*kappa = 1 - r. 2*kappa > 1 - r is rejected: only
// logarithmic-in-n truncation rates exist there, no power schedule applies.
double select_M(double n, const RegularityParams& params, MRule rule, double p_exp = 2.0,
                double c_ratio = 1.0);

enum class ReferenceStrategy { ClosedForm, ColeHopf, FineGrid };
ReferenceStrategy reference_strategy_from_name(const std::string& name);

struct StudyConfig {
    ProblemSpec problem;
    std::vector<int> n_values; // strictly increasing
    std::size_t P = 10000;
    EstimatorSpec estimator;
    TruncationVariant variant = TruncationVariant::DeterministicSigma;

    std::optional<double> fixed_M; // used when no rule is set
    std::optional<MRule> rule;
    double p_exp = 2.0;
    double c_ratio = 1.0;

    std::vector<std::uint64_t> seeds; // one per run; extras derived by mixing

    ReferenceStrategy reference = ReferenceStrategy::ClosedForm;
    std::size_t oracle_samples = 1000000; // cole-hopf reference
    int fine_grid_factor_n = 4;           // n_ref = factor * max(n), P_ref likewise
    int fine_grid_factor_P = 4;

    int threads = 1;
};

struct StudyResult {
    std::vector<ErrorReport> runs;
    std::optional<SlopeFit> fit; // log(total) against log(h)
    nlohmann::json provenance;
    bool aborted = false; // a run failed; partial results kept
    std::string failure;
};

// For each n: select M, truncate, simulate, solve, measure against the
// declared reference; then fit log(total) against log(h).
StudyResult convergence_study(const StudyConfig& cfg);

// Truncation sweep at fixed n: every radius in M_values measured against a
// baseline run at M_ref on the same ensemble; the slope fit is log(total)
// against M^2.
StudyResult truncation_study(const StudyConfig& cfg, int n, std::vector<double> M_values,
                             double M_ref);

struct FieldResult {
    std::vector<double> t_grid;
    std::vector<double> x_grid;          // d = 1 grids
    std::vector<double> values;          // t-major: values[it * nx + ix]
    double growth_ratio = 0.0;           // max |u| / (1 + |x|^{1+1/l})
    double max_adjacent_slope = 0.0;     // max |u(t,x)-u(t,x')| / |x-x'|
};

enum class FieldStrategy { Rerun, Evaluate };

// u(t_j, x_i) = Y0 of the scheme started at (t_j, x_i) (strategy Rerun), or
// the evaluation of one solved run's step regressions (strategy Evaluate).
// The terminal row is the terminal function exactly.
FieldResult feynman_kac_grid(const ProblemSpec& spec, std::vector<double> t_grid,
                             std::vector<double> x_grid, int n, std::size_t P, double M,
                             const EstimatorSpec& est, std::uint64_t seed,
                             FieldStrategy strategy = FieldStrategy::Rerun,
                             int threads = 1);

enum class ReportFormat { Csv, Json };

// Deterministic column order: n, h, P, M, estimator, seed, y_error, z_error,
// total, slope, intercept, r2. JSON mirrors the rows plus provenance.
void emit_report(const std::vector<ErrorReport>& reports, const std::optional<SlopeFit>& fit,
                 const nlohmann::json& provenance, ReportFormat format,
                 const std::filesystem::path& path);

std::string render_report_csv(const std::vector<ErrorReport>& reports,
                              const std::optional<SlopeFit>& fit);

// gnuplot-compatible two-column file: log(h) log(total)
void emit_plot_data(const std::vector<ErrorReport>& reports,
                    const std::filesystem::path& path);

} // namespace bsdelab
