#include "bsdelab/oracle.hpp"

#include <cmath>

#include "bsdelab/parallel.hpp"

namespace bsdelab {

std::string ReferenceSolution::kind_name() const {
    switch (kind) {
    case Kind::ColeHopfMc: return "cole-hopf-mc";
    case Kind::ClosedForm: return "closed-form";
    case Kind::FineGrid: return "fine-grid";
    }
    return "?";
}

namespace {

// The exponential transform solves the driver |z|^2/2 and nothing else.
// Catalog tags assert it; otherwise falsify by sampling.
bool driver_is_pure_quadratic(const ProblemSpec& spec) {
    if (spec.catalog_tag == "quadratic-sine" || spec.catalog_tag == "linear-terminal")
        return true;
    const int d = spec.d;
    double x[kMaxDim];
    double z[kMaxDim];
    for (int probe = 0; probe < 64; ++probe) {
        double z2 = 0.0;
        for (int i = 0; i < d; ++i) {
            x[i] = 4.0 * counter_uniform(2024, Stream::Probe, probe, 0, static_cast<std::uint64_t>(i)) - 2.0;
            z[i] = 6.0 * counter_uniform(2024, Stream::Probe, probe, 1, static_cast<std::uint64_t>(i)) - 3.0;
            z2 += z[i] * z[i];
        }
        const double t = spec.T * counter_uniform(2024, Stream::Probe, probe, 2, 0);
        const double y = 2.0 * counter_uniform(2024, Stream::Probe, probe, 3, 0) - 1.0;
        double fv;
        try {
            fv = spec.f.eval(t, {x, static_cast<std::size_t>(d)}, y, {z, static_cast<std::size_t>(d)});
        } catch (const EvalError&) {
            return false;
        }
        if (std::abs(fv - 0.5 * z2) > 1e-9 * (1.0 + z2)) return false;
    }
    return true;
}

} // namespace

ColeHopfResult cole_hopf_y(const ProblemSpec& spec, double t, std::span<const double> x,
                           std::size_t samples, std::uint64_t seed, int n_inner,
                           int threads) {
    if (samples < 100) throw SpecError("the transform estimate needs at least 100 samples");
    if (!driver_is_pure_quadratic(spec))
        throw SpecError("the exponential-transform oracle applies only to the driver |z|^2/2");
    spec.validate();
    if (!(t < spec.T)) {
        // at the horizon the value is g(x) exactly
        ColeHopfResult res;
        res.y = spec.g.eval_x(x);
        res.stderr = 0.0;
        res.samples = samples;
        return res;
    }

    const int d = spec.d;
    const double h = (spec.T - t) / n_inner;
    const double sqrt_h = std::sqrt(h);
    const bool sigma_det = spec.sigma_deterministic();
    const bool drift_zero = [&] {
        for (const auto& e : spec.b)
            if (!e.is_constant_zero()) return false;
        return true;
    }();

    std::vector<double> sigma_cache;
    if (sigma_det) {
        sigma_cache.resize(static_cast<std::size_t>(n_inner) * d * d);
        for (int k = 0; k < n_inner; ++k)
            spec.eval_sigma(t + k * h, x,
                            {sigma_cache.data() + static_cast<std::size_t>(k) * d * d,
                             static_cast<std::size_t>(d * d)});
    }

    struct Acc {
        double sum = 0.0;
        double sumsq = 0.0;
        double max_g = -HUGE_VAL;
    };
    std::vector<Acc> acc(kParallelChunks);

    parallel_chunks(samples, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        double xs[kMaxDim];
        double bval[kMaxDim];
        double sval[kMaxDim * kMaxDim];
        double xnew[kMaxDim];
        Acc& a = acc[chunk];
        for (std::size_t s = begin; s < end; ++s) {
            for (int i = 0; i < d; ++i) xs[i] = x[static_cast<std::size_t>(i)];
            for (int k = 0; k < n_inner; ++k) {
                const double tk = t + k * h;
                std::span<const double> xspan{xs, static_cast<std::size_t>(d)};
                const double* sg;
                if (sigma_det) {
                    sg = sigma_cache.data() + static_cast<std::size_t>(k) * d * d;
                } else {
                    spec.eval_sigma(tk, xspan, {sval, static_cast<std::size_t>(d * d)});
                    sg = sval;
                }
                if (!drift_zero) {
                    spec.eval_b(tk, xspan, {bval, static_cast<std::size_t>(d)});
                } else {
                    for (int i = 0; i < d; ++i) bval[i] = 0.0;
                }
                for (int i = 0; i < d; ++i) xnew[i] = xs[i] + h * bval[i];
                for (int i = 0; i < d; ++i) {
                    const double g = counter_normal(seed, Stream::OracleIncrement, s,
                                                    static_cast<std::uint64_t>(k),
                                                    static_cast<std::uint64_t>(i));
                    const double dw = sqrt_h * g;
                    for (int j = 0; j < d; ++j) xnew[j] += sg[j * d + i] * dw;
                }
                for (int i = 0; i < d; ++i) xs[i] = xnew[i];
            }
            const double gv = spec.g.eval_x({xs, static_cast<std::size_t>(d)});
            a.max_g = std::max(a.max_g, gv);
            const double ev = std::exp(gv);
            if (!std::isfinite(ev))
                throw NumericalError("e^{g(X_T)} overflowed (g = " + std::to_string(gv) +
                                     "); rescale the terminal condition");
            a.sum += ev;
            a.sumsq += ev * ev;
        }
    });

    double sum = 0.0, sumsq = 0.0;
    for (const Acc& a : acc) {
        sum += a.sum;
        sumsq += a.sumsq;
    }
    const double N = static_cast<double>(samples);
    const double mean = sum / N;
    if (!(mean > 0.0) || !std::isfinite(mean))
        throw NumericalError("exponential-transform sample mean is not positive and finite");
    const double var = std::max(0.0, sumsq / N - mean * mean);
    ColeHopfResult res;
    res.y = std::log(mean);
    // delta method for log of a sample mean
    res.stderr = std::sqrt(var / N) / mean;
    res.samples = samples;
    return res;
}

ReferenceSolution cole_hopf_reference(const ProblemSpec& spec, std::size_t samples,
                                      std::uint64_t seed, int n_inner, int threads) {
    const ColeHopfResult r = cole_hopf_y(spec, 0.0, spec.x0, samples, seed, n_inner, threads);
    ReferenceSolution ref;
    ref.kind = ReferenceSolution::Kind::ColeHopfMc;
    ref.y0 = r.y;
    ref.y0_stderr = r.stderr;
    ref.provenance = {{"kind", "cole-hopf-mc"},
                      {"samples", samples},
                      {"seed", seed},
                      {"n_inner", n_inner},
                      {"stderr", r.stderr}};
    return ref;
}

void closed_form_linear(std::span<const double> theta, double s, double T,
                        std::span<const double> x, double t, double& y,
                        std::span<double> z) {
    double dot = 0.0, norm2 = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        dot += theta[i] * x[i];
        norm2 += theta[i] * theta[i];
    }
    y = dot + 0.5 * s * s * norm2 * (T - t);
    for (std::size_t i = 0; i < theta.size(); ++i) z[i] = s * theta[i];
}

ReferenceSolution linear_reference(std::vector<double> theta, double s, double T) {
    ReferenceSolution ref;
    ref.kind = ReferenceSolution::Kind::ClosedForm;
    auto th = std::make_shared<std::vector<double>>(std::move(theta));
    ref.y_fn = [th, s, T](double t, std::span<const double> x) {
        double y;
        std::vector<double> z(th->size());
        closed_form_linear(*th, s, T, x, t, y, z);
        return y;
    };
    ref.z_fn = [th, s](double, std::span<const double>, std::span<double> z) {
        for (std::size_t i = 0; i < th->size(); ++i) z[i] = s * (*th)[i];
    };
    ref.provenance = {{"kind", "closed-form"}, {"formula", "linear-terminal"}};
    return ref;
}

ReferenceSolution bounded_sine_reference(double a, double omega, double s) {
    ReferenceSolution ref;
    ref.kind = ReferenceSolution::Kind::ClosedForm;
    ref.y_fn = [a, omega](double, std::span<const double> x) {
        return a * std::sin(omega * x[0]);
    };
    ref.z_fn = [a, omega, s](double, std::span<const double> x, std::span<double> z) {
        z[0] = s * a * omega * std::cos(omega * x[0]);
    };
    ref.provenance = {{"kind", "closed-form"}, {"formula", "bounded-sine"}};
    return ref;
}

ReferenceSolution constant_reference(double c) {
    ReferenceSolution ref;
    ref.kind = ReferenceSolution::Kind::ClosedForm;
    ref.y_fn = [c](double, std::span<const double>) { return c; };
    ref.z_fn = [](double, std::span<const double>, std::span<double> z) {
        for (auto& v : z) v = 0.0;
    };
    ref.provenance = {{"kind", "closed-form"}, {"formula", "constant-terminal"}};
    return ref;
}

ReferenceSolution closed_form_reference(const ProblemSpec& spec) {
    const std::string& tag = spec.catalog_tag;
    const auto& args = spec.catalog_args;
    if (tag == "linear-terminal" && args.size() >= 2)
        return linear_reference({args[0]}, args[1], spec.T);
    if (tag == "bounded-sine" && args.size() >= 3)
        return bounded_sine_reference(args[0], args[1], args[2]);
    if (tag == "constant-terminal" && !args.empty()) return constant_reference(args[0]);
    throw SpecError("no closed-form reference for catalog tag '" + tag + "'");
}

ReferenceSolution fine_grid_reference(const ProblemSpec& truncated, int n_ref,
                                      std::size_t P_ref, const EstimatorSpec& est,
                                      std::uint64_t seed, int threads) {
    auto ens = std::make_shared<PathEnsemble>(
        euler_paths(truncated, n_ref, P_ref, seed, threads));
    auto sol = std::make_shared<DiscreteSolution>(
        solve_backward(truncated, ens, est, threads));
    ReferenceSolution ref;
    ref.kind = ReferenceSolution::Kind::FineGrid;
    ref.grid = sol;
    ref.y0 = sol->y0_mean;
    ref.y0_stderr = sol->y0_stderr;
    ref.provenance = {{"kind", "fine-grid"},
                      {"surrogate", true},
                      {"n_ref", n_ref},
                      {"P_ref", P_ref},
                      {"estimator", est.name()},
                      {"seed", seed}};
    return ref;
}

} // namespace bsdelab
