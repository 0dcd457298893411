#include "bsdelab/problem.hpp"

#include <algorithm>
#include <cmath>

namespace bsdelab {

std::string regime_name(Regime r) {
    switch (r) {
    case Regime::B2Subcritical: return "B2-subcritical";
    case Regime::B1Critical: return "B1-critical";
    case Regime::B3Bounded: return "B3-bounded";
    }
    return "?";
}

Regime regime_from_name(const std::string& name) {
    if (name == "B2-subcritical") return Regime::B2Subcritical;
    if (name == "B1-critical") return Regime::B1Critical;
    if (name == "B3-bounded") return Regime::B3Bounded;
    throw SpecError("unknown regime '" + name +
                    "' (expected B2-subcritical, B1-critical or B3-bounded)");
}

void RegularityParams::validate(Regime regime) const {
    if (l < 1.0) throw SpecError("growth exponent l must be >= 1");
    if (T <= 0.0) throw SpecError("horizon T must be positive");
    if (kappa < 0.0 || kappa > 1.0) throw SpecError("kappa must lie in [0, 1]");
    if (r < 0.0) throw SpecError("local-Lipschitz exponent r must be >= 0");
    if (regime == Regime::B2Subcritical && !(r < 1.0 / l))
        throw SpecError("subcritical regime requires r < 1/l");
    const double nonneg[] = {alpha, beta, gamma, K_b, K_f_y, K_f_x, K_f_z,
                             K_g,   sigma_sup, M_sigma, K_sigma, M_f, M_g};
    for (double v : nonneg)
        if (v < 0.0) throw SpecError("regularity constants must be nonnegative");
}

TruncationSpec::TruncationSpec(double radius) : M(radius) {
    if (!(M > 1.0)) throw SpecError("truncation radius M must exceed 1");
}

double TruncationSpec::psi(double rho) const {
    if (rho <= M - 1.0) return rho;
    return M - std::exp(-(rho - (M - 1.0)));
}

void TruncationSpec::apply(std::span<const double> x, std::span<double> out) const {
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    const double r = std::sqrt(r2);
    if (r <= M - 1.0) {
        if (out.data() != x.data())
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
        return;
    }
    const double scale = psi(r) / r; // r > M-1 > 0 here
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i];
    // rounding in the scaled products can overshoot the radius by an ulp
    double r2o = 0.0;
    for (double c : out) r2o += c * c;
    const double ro = std::sqrt(r2o);
    if (ro > M) {
        const double fix = M / ro;
        for (double& c : out) c *= fix;
    }
}

double TruncationSpec::apply_scalar(double x) const {
    const double r = std::abs(x);
    if (r <= M - 1.0) return x;
    const double v = (psi(r) / r) * x;
    return std::clamp(v, -M, M);
}

std::vector<double> smooth_truncation(std::span<const double> x, const TruncationSpec& trunc) {
    std::vector<double> out(x.size());
    trunc.apply(x, out);
    return out;
}

bool ProblemSpec::sigma_deterministic() const {
    for (const auto& e : sigma)
        if (e.references_state()) return false;
    return true;
}

void ProblemSpec::validate() const {
    if (d < 1) throw SpecError("state dimension d must be >= 1");
    if (d > kMaxDim) throw SpecError("state dimension exceeds the supported maximum");
    if (static_cast<int>(x0.size()) != d) throw SpecError("x0 must have d components");
    for (double v : x0)
        if (!std::isfinite(v)) throw SpecError("x0 must be finite");
    if (static_cast<int>(b.size()) != d) throw SpecError("drift must have d entries");
    if (static_cast<int>(sigma.size()) != d * d)
        throw SpecError("diffusion must have d*d entries");
    params.validate(regime);
    if (params.T != T) throw SpecError("params.T must match the problem horizon T");

    auto check_indices = [&](const CoefficientExpr& e, const char* what) {
        if (e.max_state_index() >= d)
            throw SpecError(std::string(what) + " references a state component beyond d");
        if (e.max_control_index() >= d)
            throw SpecError(std::string(what) + " references a control component beyond d");
    };
    for (const auto& e : b) {
        if (e.references_value() || e.references_control())
            throw SpecError("drift may depend on t and x only");
        check_indices(e, "drift");
    }
    for (const auto& e : sigma) {
        if (e.references_value() || e.references_control())
            throw SpecError("diffusion may depend on t and x only");
        check_indices(e, "diffusion");
    }
    if (g.references_time() || g.references_value() || g.references_control())
        throw SpecError("terminal condition may depend on x only");
    check_indices(g, "terminal");
    check_indices(f, "driver");

    if ((regime == Regime::B2Subcritical || regime == Regime::B1Critical) &&
        !sigma_deterministic())
        throw SpecError("regime " + regime_name(regime) +
                        " requires a deterministic (x-independent) diffusion");
}

void ProblemSpec::eval_b(double t, std::span<const double> x, std::span<double> out) const {
    for (int i = 0; i < d; ++i)
        out[static_cast<std::size_t>(i)] =
            b[static_cast<std::size_t>(i)].eval(t, x, 0.0, {});
}

void ProblemSpec::eval_sigma(double t, std::span<const double> x, std::span<double> out) const {
    for (int i = 0; i < d * d; ++i)
        out[static_cast<std::size_t>(i)] =
            sigma[static_cast<std::size_t>(i)].eval(t, x, 0.0, {});
}

double ProblemSpec::eval_f(double t, std::span<const double> x, double y,
                           std::span<const double> z) const {
    double bx[kMaxDim];
    double bz[kMaxDim];
    std::span<const double> xx = x;
    std::span<const double> zz = z;
    if (x_trunc) {
        x_trunc->apply(x, {bx, x.size()});
        xx = {bx, x.size()};
    }
    if (z_trunc && !z.empty()) {
        z_trunc->apply(z, {bz, z.size()});
        zz = {bz, z.size()};
    }
    return f.eval(t, xx, y, zz);
}

double ProblemSpec::eval_g(std::span<const double> x) const {
    double bx[kMaxDim];
    std::span<const double> xx = x;
    if (x_trunc) {
        x_trunc->apply(x, {bx, x.size()});
        xx = {bx, x.size()};
    }
    return g.eval(0.0, xx, 0.0, {});
}

ProblemSpec truncate_problem(const ProblemSpec& spec, double M, TruncationVariant variant) {
    if (!(M > 1.0)) throw SpecError("truncation radius M must exceed 1");
    ProblemSpec out = spec;
    switch (variant) {
    case TruncationVariant::DeterministicSigma:
        out.x_trunc = TruncationSpec(M);
        out.z_trunc.reset();
        break;
    case TruncationVariant::RandomSigma: {
        if (spec.regime != Regime::B3Bounded)
            throw SpecError("the random-sigma truncation applies only to regime B3-bounded");
        const double exponent_sum = spec.params.r + spec.params.kappa;
        if (!(exponent_sum > 0.0))
            throw SpecError("the random-sigma truncation requires r + kappa > 0");
        out.x_trunc = TruncationSpec(std::pow(M, 1.0 / exponent_sum));
        out.z_trunc = TruncationSpec(M);
        break;
    }
    }
    return out;
}

namespace catalog {

using E = CoefficientExpr;

namespace {
ProblemSpec base_1d(double s, double T, double x0) {
    ProblemSpec p;
    p.d = 1;
    p.T = T;
    p.x0 = {x0};
    p.b = {E::constant(0.0)};
    p.sigma = {E::constant(s)};
    p.params.T = T;
    p.params.sigma_sup = std::abs(s);
    p.params.M_sigma = std::abs(s);
    p.params.K_sigma = 0.0;
    p.params.K_b = 0.0;
    return p;
}
} // namespace

ProblemSpec quadratic_sine(double s, double T, double x0, double a) {
    ProblemSpec p = base_1d(s, T, x0);
    p.f = E::div(E::pow(E::abs(E::control_vector()), E::constant(2.0)), E::constant(2.0));
    p.g = E::mul(E::constant(a), E::sin(E::state(0)));
    p.regime = Regime::B1Critical;
    p.params.l = 1.0;
    p.params.gamma = 1.0;
    p.params.alpha = 0.0;
    p.params.beta = 0.0;
    p.params.K_g = std::abs(a);
    p.params.M_g = std::abs(a);
    p.params.M_f = 0.5;
    p.catalog_tag = "quadratic-sine";
    p.catalog_args = {s, T, x0, a};
    p.validate();
    return p;
}

ProblemSpec linear_terminal(double theta, double s, double T, double x0,
                            double declared_alpha) {
    ProblemSpec p = base_1d(s, T, x0);
    p.f = E::div(E::pow(E::abs(E::control_vector()), E::constant(2.0)), E::constant(2.0));
    p.g = E::mul(E::constant(theta), E::state(0));
    p.regime = Regime::B1Critical;
    p.params.l = 1.0;
    p.params.gamma = 1.0;
    p.params.alpha = declared_alpha;
    p.params.beta = 0.0;
    p.params.K_g = std::abs(theta);
    p.catalog_tag = "linear-terminal";
    p.catalog_args = {theta, s, T, x0, declared_alpha};
    p.validate();
    return p;
}

ProblemSpec bounded_sine(double a, double omega, double s, double T, double x0) {
    ProblemSpec p = base_1d(s, T, x0);
    const double fscale = 0.5 * s * s * omega * omega * a;
    p.f = E::mul(E::constant(fscale), E::sin(E::mul(E::constant(omega), E::state(0))));
    p.g = E::mul(E::constant(a), E::sin(E::mul(E::constant(omega), E::state(0))));
    p.regime = Regime::B1Critical;
    p.params.l = 1.0;
    p.params.gamma = 0.0;
    p.params.alpha = 0.0;
    p.params.beta = 0.0;
    p.params.K_g = std::abs(a * omega);
    p.params.K_f_x = std::abs(fscale * omega);
    p.params.M_g = std::abs(a);
    p.params.M_f = std::abs(fscale);
    p.catalog_tag = "bounded-sine";
    p.catalog_args = {a, omega, s, T, x0};
    p.validate();
    return p;
}

ProblemSpec superquadratic_sine(double gamma, double l, double s, double T, double x0,
                                double a, double omega) {
    ProblemSpec p = base_1d(s, T, x0);
    p.f = E::mul(E::constant(gamma / (l + 1.0)),
                 E::pow(E::abs(E::control_vector()), E::constant(l + 1.0)));
    p.g = E::mul(E::constant(a), E::sin(E::mul(E::constant(omega), E::state(0))));
    p.regime = Regime::B1Critical;
    p.params.l = l;
    p.params.gamma = gamma;
    p.params.alpha = 0.0;
    p.params.beta = 0.0;
    p.params.K_g = std::abs(a * omega);
    p.params.M_g = std::abs(a);
    p.catalog_tag = "superquadratic-sine";
    p.catalog_args = {gamma, l, s, T, x0, a, omega};
    p.validate();
    return p;
}

ProblemSpec constant_terminal(double c, double s, double T, double x0) {
    ProblemSpec p = base_1d(s, T, x0);
    p.f = E::constant(0.0);
    p.g = E::constant(c);
    p.regime = Regime::B1Critical;
    p.params.l = 1.0;
    p.params.gamma = 0.0;
    p.params.M_g = std::abs(c);
    p.catalog_tag = "constant-terminal";
    p.catalog_args = {c, s, T, x0};
    p.validate();
    return p;
}

} // namespace catalog

} // namespace bsdelab
