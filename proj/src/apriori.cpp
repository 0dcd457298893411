#include "bsdelab/apriori.hpp"

#include <cmath>
#include <limits>

namespace bsdelab {

std::string envelope_kind_name(EnvelopeKind k) {
    switch (k) {
    case EnvelopeKind::LipschitzBound: return "lipschitz-bound";
    case EnvelopeKind::B2Envelope: return "b2-envelope";
    case EnvelopeKind::B1Envelope: return "b1-envelope";
    case EnvelopeKind::B3Envelope: return "b3-envelope";
    }
    return "?";
}

double EnvelopeReport::bound_at(double x_norm) const {
    return A + B * std::pow(x_norm, exponent);
}

ThresholdReport check_b1_threshold(const RegularityParams& p) {
    if (!(p.gamma > 0.0)) throw SpecError("threshold requires gamma > 0");
    if (!(p.sigma_sup > 0.0)) throw SpecError("threshold requires |sigma|_inf > 0");
    if (!(p.T > 0.0)) throw SpecError("threshold requires T > 0");
    if (p.l < 1.0) throw SpecError("threshold requires l >= 1");
    const double il = 1.0 / p.l;
    const double denom = std::exp(il) * std::pow(2.0, 1.0 - il) * std::pow(p.gamma, il) *
                         std::exp(((1.0 + il) * p.K_b + p.K_f_y) * p.T) *
                         std::pow(p.sigma_sup, 1.0 + il) * std::pow(p.T, il);
    ThresholdReport rep;
    rep.threshold = 1.0 / denom;
    rep.lhs = p.alpha + p.T * p.beta;
    rep.satisfied = rep.lhs < rep.threshold;
    rep.margin = rep.threshold - rep.lhs;
    return rep;
}

double lipschitz_z_bound(const RegularityParams& p) {
    return std::exp((2.0 * p.K_b + p.K_f_y) * p.T) * p.sigma_sup * (p.K_g + p.T * p.K_f_x);
}

EnvelopeReport b1_envelope(const RegularityParams& p, double t, double tol, long max_iter) {
    if (t < 0.0 || t > p.T) throw SpecError("t must lie in [0, T]");
    const double il = 1.0 / p.l;
    const double C1 = p.sigma_sup * (p.alpha + p.beta * p.T) *
                      std::exp((p.K_b * (1.0 + il) + p.K_f_y) * (p.T - t));
    const double C2 = std::pow(2.0, p.l - 1.0) * p.sigma_sup * p.gamma * p.T;

    EnvelopeReport rep;
    rep.kind = EnvelopeKind::B1Envelope;
    rep.exponent = il;
    rep.C1 = C1;
    rep.C2 = C2;
    rep.envelope_C_used = p.envelope_C;

    // any convergent limit satisfies B_inf < C1 e^{1/l} <= (e C2)^{-1/l} e^{1/l};
    // crossing ten times that level can only happen on a divergent orbit
    const double blow_up =
        (C2 > 0.0) ? 10.0 * std::pow(std::exp(1.0) * C2, -il)
                   : std::numeric_limits<double>::infinity();

    double B = 0.0;
    double prev_inc = std::numeric_limits<double>::infinity();
    int growing = 0;
    long it = 0;
    bool converged = false;
    for (; it < max_iter; ++it) {
        const double Bn = C1 * std::exp(C2 * std::pow(B, p.l) / p.l);
        const double inc = std::abs(Bn - B);
        B = Bn;
        if (!std::isfinite(B) || B > blow_up) {
            converged = false;
            growing = -1;
            break;
        }
        if (inc < tol) {
            converged = true;
            ++it;
            break;
        }
        if (inc > prev_inc) {
            if (++growing >= 50) {
                converged = false;
                growing = -1;
                break;
            }
        } else {
            growing = 0;
        }
        prev_inc = inc;
    }
    rep.iterations = it;
    rep.converged = converged;
    rep.B = B; // last iterate, kept for diagnostics on divergence
    if (converged) {
        const double c2il = (C2 > 0.0) ? std::pow(C2, il) : 0.0;
        const double denom = 1.0 - B * c2il;
        rep.A = (denom > 0.0) ? p.envelope_C * B / denom
                              : std::numeric_limits<double>::infinity();
    } else {
        rep.A = std::numeric_limits<double>::infinity();
    }
    return rep;
}

RecursionLimit b2_recursion_limit(const RegularityParams& p, double A0, double tol) {
    const double rl = p.r * p.l;
    if (!(rl < 1.0)) throw SpecError("the recursion requires r*l < 1");
    const double C = p.envelope_C;
    double A = A0;
    long it = 0;
    const long max_iter = 1000000;
    for (; it < max_iter; ++it) {
        const double An = C * (1.0 + std::pow(A, rl));
        const double inc = std::abs(An - A);
        A = An;
        if (inc < tol) {
            ++it;
            break;
        }
    }
    return {A, it};
}

EnvelopeReport b2_envelope(const RegularityParams& p, double A0, double tol) {
    const RecursionLimit lim = b2_recursion_limit(p, A0, tol);
    EnvelopeReport rep;
    rep.kind = EnvelopeKind::B2Envelope;
    rep.A = lim.A_inf;
    rep.B = p.envelope_C;
    rep.exponent = p.r;
    rep.iterations = lim.iterations;
    rep.converged = true;
    rep.envelope_C_used = p.envelope_C;
    return rep;
}

namespace {
constexpr double kScanCap = 1e9;
constexpr int kScanPoints = 256;
} // namespace

std::optional<double> small_time_radius(const RegularityParams& p,
                                        const std::function<double(double)>& phi,
                                        double C_const) {
    auto map = [&](double x) {
        const double inner = p.K_b + p.K_sigma * (p.K_f_z + 2.0 * phi(x));
        const double expo = p.K_sigma * p.K_sigma * p.T + inner * inner * p.T * p.T;
        if (expo > 700.0) return std::numeric_limits<double>::infinity();
        return 1.0 + C_const * std::exp(p.K_f_y * p.T) * p.M_sigma *
                         (p.K_g + p.K_f_x * p.T) * std::exp(expo);
    };
    // geometric scan for the first sign change of x - map(x)
    double lo = 0.0;
    double flo = lo - map(lo); // negative: map >= 1
    double hi = 0.0;
    bool found = false;
    double x = 1e-3;
    const double factor = std::pow(kScanCap / 1e-3, 1.0 / (kScanPoints - 1));
    for (int i = 0; i < kScanPoints; ++i) {
        const double fx = x - map(x);
        if (fx >= 0.0) {
            hi = x;
            found = true;
            break;
        }
        lo = x;
        flo = fx;
        x *= factor;
    }
    if (!found) return std::nullopt;
    (void)flo;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid - map(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<double> small_time_radius(const RegularityParams& p,
                                        const CoefficientExpr& phi, double C_const) {
    return small_time_radius(
        p,
        [&phi](double v) {
            const double arg[1] = {v};
            return phi.eval(0.0, {arg, 1}, 0.0, {});
        },
        C_const);
}

EnvelopeReport b3_envelope(const RegularityParams& p, Regime regime) {
    if (regime != Regime::B3Bounded)
        throw SpecError("the bounded-terminal envelope applies only to regime B3-bounded");
    EnvelopeReport rep;
    rep.kind = EnvelopeKind::B3Envelope;
    rep.A = p.envelope_C;
    rep.B = p.envelope_C;
    rep.exponent = p.r + p.kappa;
    rep.converged = true;
    rep.envelope_C_used = p.envelope_C;
    // only logarithmic truncation decay is guaranteed here
    rep.slow_rate_regime = (p.kappa >= 1.0) || (2.0 * p.kappa > 1.0 - p.r);
    return rep;
}

} // namespace bsdelab
