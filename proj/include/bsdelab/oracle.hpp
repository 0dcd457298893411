#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bsdelab/scheme.hpp"

namespace bsdelab {

// Independent reference for a solved problem. Closed-form references carry
// exact (t, x) callables with zero stderr; the exponential-transform Monte
// Carlo carries a Y0 estimate with its standard error; fine-grid references
// wrap a surrogate run on a refined grid.
struct ReferenceSolution {
    enum class Kind { ColeHopfMc, ClosedForm, FineGrid };
    Kind kind = Kind::ClosedForm;

    double y0 = 0.0;
    double y0_stderr = 0.0;

    std::function<double(double, std::span<const double>)> y_fn;
    std::function<void(double, std::span<const double>, std::span<double>)> z_fn;

    std::shared_ptr<const DiscreteSolution> grid;

    nlohmann::json provenance;

    std::string kind_name() const;
    bool pointwise() const { return kind != Kind::ColeHopfMc; }
};

// Exact value of the pure-quadratic-driver problem by exponential transform:
// y = log E[e^{g(X_T)}] along fine Euler paths from (t, x). Guards: the
// driver must be |z|^2/2 (checked by sampling or catalog tag), samples >= 100,
// e^{g} must not overflow. stderr by the delta method.
struct ColeHopfResult {
    double y = 0.0;
    double stderr = 0.0;
    std::size_t samples = 0;
};
ColeHopfResult cole_hopf_y(const ProblemSpec& spec, double t, std::span<const double> x,
                           std::size_t samples, std::uint64_t seed, int n_inner = 256,
                           int threads = 1);

ReferenceSolution cole_hopf_reference(const ProblemSpec& spec, std::size_t samples,
                                      std::uint64_t seed, int n_inner = 256, int threads = 1);

// Explicit solution for b = 0, sigma = s*I, f = |z|^2/2, g = theta.x:
// y = theta.x + s^2 |theta|^2 (T - t)/2, z = s theta.
void closed_form_linear(std::span<const double> theta, double s, double T,
                        std::span<const double> x, double t, double& y,
                        std::span<double> z);
ReferenceSolution linear_reference(std::vector<double> theta, double s, double T);

// Explicit solution of the bounded sinusoidal pair (d = 1, b = 0, sigma = s):
// y = a sin(omega x), z = s a omega cos(omega x).
ReferenceSolution bounded_sine_reference(double a, double omega, double s);

ReferenceSolution constant_reference(double c);

// Resolves a closed-form reference from a problem's catalog tag; throws when
// the catalog entry has no closed form.
ReferenceSolution closed_form_reference(const ProblemSpec& spec);

// Surrogate reference: the scheme itself on a refined grid, wrapped with
// provenance. Stands in for the exact truncated solution where no closed
// form exists.
ReferenceSolution fine_grid_reference(const ProblemSpec& truncated, int n_ref,
                                      std::size_t P_ref, const EstimatorSpec& est,
                                      std::uint64_t seed, int threads = 1);

} // namespace bsdelab
