#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsdelab/errors.hpp"
#include "bsdelab/expression.hpp"

namespace bsdelab {

enum class Regime { B2Subcritical, B1Critical, B3Bounded };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);

// The declared regularity record. The artifact never infers these from the
// coefficient expressions; it evaluates the estimates they imply and
// falsifies declared envelopes by sampling.
struct RegularityParams {
    double l = 1.0;        // growth exponent of the driver in z, >= 1
    double r = 0.0;        // local-Lipschitz exponent in x
    double alpha = 0.0;    // terminal local-Lipschitz weight
    double beta = 0.0;     // driver-in-x local-Lipschitz weight
    double gamma = 0.0;    // driver-in-z weight
    double K_b = 0.0;
    double K_f_y = 0.0;
    double K_f_x = 0.0;
    double K_f_z = 0.0;
    double K_g = 0.0;
    double sigma_sup = 0.0; // |sigma|_inf
    double kappa = 0.0;     // in [0, 1]
    double M_sigma = 0.0;
    double K_sigma = 0.0;
    double M_f = 0.0;
    double M_g = 0.0;
    double T = 1.0;
    double envelope_C = 1.0; // stand-in for the generic constants of the estimates

    void validate(Regime regime) const;
};

// Smooth radial truncation onto the ball of radius M: identity on |x| <= M-1,
// profile psi(rho) = M - exp(-(rho - (M-1))) beyond. psi is C^1 with
// psi' <= 1 and psi < M, hence the map is 1-Lipschitz and bounded by M.
struct TruncationSpec {
    double M = 0.0;

    explicit TruncationSpec(double radius);
    TruncationSpec() = default;

    double psi(double rho) const;
    // out may alias x
    void apply(std::span<const double> x, std::span<double> out) const;
    double apply_scalar(double x) const;
};

std::vector<double> smooth_truncation(std::span<const double> x, const TruncationSpec& trunc);

enum class TruncationVariant { DeterministicSigma, RandomSigma };

inline constexpr int kMaxDim = 16;

// A Markovian forward-backward problem: forward coefficients b and sigma,
// driver f, terminal g, with declared regularity parameters and regime tag.
// After truncate_problem, x_trunc / z_trunc wrap the corresponding arguments
// of f and g; the expressions themselves are never rewritten.
struct ProblemSpec {
    int d = 1;
    double T = 1.0;
    std::vector<double> x0;
    std::vector<CoefficientExpr> b;     // d entries
    std::vector<CoefficientExpr> sigma; // d*d entries, row-major
    CoefficientExpr f;
    CoefficientExpr g;
    RegularityParams params;
    Regime regime = Regime::B1Critical;
    std::string catalog_tag;          // empty for user-defined problems
    std::vector<double> catalog_args; // the arguments the catalog entry was built with

    std::optional<TruncationSpec> x_trunc;
    std::optional<TruncationSpec> z_trunc;

    bool sigma_deterministic() const; // sigma free of x (assumption on the forward SDE)
    void validate() const;

    void eval_b(double t, std::span<const double> x, std::span<double> out) const;
    // out is d*d row-major
    void eval_sigma(double t, std::span<const double> x, std::span<double> out) const;
    double eval_f(double t, std::span<const double> x, double y,
                  std::span<const double> z) const;
    double eval_g(std::span<const double> x) const;
};

// Builds the truncated approximating problem. Deterministic-sigma: terminal
// g(rho_M(x)) and driver f(t, rho_M(x), y, z). Random-sigma: terminal
// g(rho_{M^{1/(r+kappa)}}(x)) and driver f(t, rho_{M^{1/(r+kappa)}}(x), y,
// rho_M(z)); both radii recorded on the returned spec.
ProblemSpec truncate_problem(const ProblemSpec& spec, double M, TruncationVariant variant);

namespace catalog {

// f = |z|^2/2, g = a*sin(x0), b = 0, sigma = s. The exponential transform of
// the terminal value gives an exact reference for this driver.
ProblemSpec quadratic_sine(double s = 1.0, double T = 1.0, double x0 = 0.0, double a = 1.0);

// f = |z|^2/2, g = theta*x0, b = 0, sigma = s. Explicit solution
// y = theta*x + s^2 theta^2 (T-t)/2, z = s*theta. declared_alpha is the
// declared terminal local-Lipschitz weight (the admissibility margin knob).
ProblemSpec linear_terminal(double theta = 1.0, double s = 1.0, double T = 1.0,
                            double x0 = 0.0, double declared_alpha = 0.3);

// Bounded Lipschitz pair with a closed-form solution: g = a*sin(omega*x0),
// f = (s^2 omega^2 / 2) * a * sin(omega*x0); then y(t,x) = a*sin(omega*x),
// z(t,x) = s*a*omega*cos(omega*x).
ProblemSpec bounded_sine(double a = 1.0, double omega = 2.0, double s = 1.0,
                         double T = 1.0, double x0 = 0.0);

// Superquadratic driver f = gamma/(l+1) * |z|^(l+1) with bounded sinusoidal
// terminal g = a*sin(omega*x0).
ProblemSpec superquadratic_sine(double gamma = 0.5, double l = 2.0, double s = 1.0,
                                double T = 1.0, double x0 = 0.0, double a = 1.0,
                                double omega = 1.0);

// f = 0, g = c.
ProblemSpec constant_terminal(double c, double s = 1.0, double T = 1.0, double x0 = 0.0);

} // namespace catalog

} // namespace bsdelab
