#pragma once

#include <functional>
#include <optional>
#include <string>

#include "bsdelab/problem.hpp"

namespace bsdelab {

enum class EnvelopeKind { LipschitzBound, B2Envelope, B1Envelope, B3Envelope };

std::string envelope_kind_name(EnvelopeKind k);

// Pointwise bound |Z_t| <= A + B |X_t|^exponent.
struct EnvelopeReport {
    EnvelopeKind kind = EnvelopeKind::LipschitzBound;
    double A = 0.0;
    double B = 0.0;
    double exponent = 0.0;
    long iterations = 0;
    bool converged = true;
    // Set when only logarithmic-in-M truncation decay is guaranteed
    // (2*kappa > 1-r, or kappa = 1).
    bool slow_rate_regime = false;
    double C1 = 0.0; // iteration constants, b1 kind only
    double C2 = 0.0;
    double envelope_C_used = 1.0;

    double bound_at(double x_norm) const;
};

struct ThresholdReport {
    double threshold = 0.0;
    double lhs = 0.0;
    bool satisfied = false;
    double margin = 0.0;
};

// The admissibility inequality on alpha + T*beta: the right-hand side is
// 1 / (e^{1/l} 2^{1-1/l} gamma^{1/l} e^{((1+1/l)K_b + K_{f,y}) T}
//      |sigma|_inf^{1+1/l} T^{1/l}).
ThresholdReport check_b1_threshold(const RegularityParams& p);

// Lipschitz data bound: e^{(2 K_b + K_{f,y}) T} |sigma|_inf (K_g + T K_{f,x}).
double lipschitz_z_bound(const RegularityParams& p);

// Iterates B_{n+1}(t) = C1(t) exp(C2 B_n(t)^l / l) from B_0 = 0, with
// C1(t) = |sigma|_inf (alpha + beta T) e^{(K_b(1+1/l) + K_{f,y})(T-t)} and
// C2 = 2^{l-1} |sigma|_inf gamma T. On convergence the constant term is
// A_inf = envelope_C * B_inf / (1 - B_inf C2^{1/l}) and the bound is
// |Z_t| <= A_inf + B_inf |X_t|^{1/l}.
EnvelopeReport b1_envelope(const RegularityParams& p, double t, double tol = 1e-10,
                           long max_iter = 1000000);

struct RecursionLimit {
    double A_inf = 0.0;
    long iterations = 0;
};

// Contraction A_{n+1} = C (1 + A_n^{r l}) with C = envelope_C; requires r*l < 1.
RecursionLimit b2_recursion_limit(const RegularityParams& p, double A0, double tol = 1e-10);

EnvelopeReport b2_envelope(const RegularityParams& p, double A0 = 0.0, double tol = 1e-10);

// Lowest positive fixed point of
//   x -> 1 + C e^{K_{f,y} T} M_sigma (K_g + K_{f,x} T)
//            exp(K_sigma^2 T + (K_b + K_sigma (K_{f,z} + 2 phi(x)))^2 T^2),
// found by a 256-point geometric scan up to 1e9 followed by bisection.
// Returns nullopt when no crossing exists below the cap (horizon too large).
std::optional<double> small_time_radius(const RegularityParams& p,
                                        const std::function<double(double)>& phi,
                                        double C_const);
std::optional<double> small_time_radius(const RegularityParams& p,
                                        const CoefficientExpr& phi, double C_const);

// Generic-constant envelope |Z| <= C (1 + |X|^{r+kappa}) for the bounded
// quadratic regime.
EnvelopeReport b3_envelope(const RegularityParams& p, Regime regime);

} // namespace bsdelab
