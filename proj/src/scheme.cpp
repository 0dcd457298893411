#include "bsdelab/scheme.hpp"

#include <cmath>

#include "bsdelab/parallel.hpp"

namespace bsdelab {

DiscreteSolution solve_backward(const ProblemSpec& truncated,
                                std::shared_ptr<const PathEnsemble> ens,
                                const EstimatorSpec& est, int threads) {
    if (!ens) throw SpecError("solve_backward needs an ensemble");
    truncated.validate();
    if (ens->d != truncated.d) throw SpecError("ensemble dimension does not match the problem");
    if (std::abs(ens->T - truncated.T) > 1e-12)
        throw SpecError("ensemble horizon does not match the problem");
    const double h = ens->h;
    if (truncated.params.K_f_y > 0.0 && !(h * truncated.params.K_f_y < 0.5))
        throw SpecError("explicit step needs h * K_{f,y} < 1/2; refine the grid");

    const int n = ens->n;
    const std::size_t P = ens->P;
    const int d = ens->d;

    DiscreteSolution sol;
    sol.problem = truncated;
    sol.estimator = est;
    sol.ensemble = ens;
    sol.n = n;
    sol.P = P;
    sol.d = d;
    sol.h = h;
    sol.Y.resize(P * (static_cast<std::size_t>(n) + 1));
    sol.Z.resize(P * static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
    sol.y_fits.resize(static_cast<std::size_t>(n));
    sol.z_fits.assign(static_cast<std::size_t>(n), {});

    auto y_ref = [&](std::size_t p, int k) -> double& {
        return sol.Y[p * (static_cast<std::size_t>(n) + 1) + static_cast<std::size_t>(k)];
    };

    // terminal slice: truncated terminal function, exactly
    parallel_chunks(P, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p)
            y_ref(p, n) = truncated.eval_g(ens->state(p, n));
    });

    std::vector<double> features(P * static_cast<std::size_t>(d));
    std::vector<double> responses(P);

    for (int k = n - 1; k >= 0; --k) {
        const double t_k = ens->time_at(k);

        parallel_chunks(P, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                auto xs = ens->state(p, k);
                for (int i = 0; i < d; ++i)
                    features[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] =
                        xs[static_cast<std::size_t>(i)];
            }
        });

        // control components: responses Y_{k+1} dW^{(i)} / h
        auto& zf = sol.z_fits[static_cast<std::size_t>(k)];
        zf.reserve(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            parallel_chunks(P, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
                for (std::size_t p = begin; p < end; ++p)
                    responses[p] =
                        y_ref(p, k + 1) * ens->increment(p, k)[static_cast<std::size_t>(i)] / h;
            });
            FittedRegression reg;
            try {
                reg = fit(features.data(), P, d, responses, est, threads);
            } catch (const NumericalError& err) {
                throw NumericalError("control regression failed at step " + std::to_string(k) +
                                     ", component " + std::to_string(i) + ": " + err.what());
            }
            parallel_chunks(P, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
                for (std::size_t p = begin; p < end; ++p)
                    sol.Z[(p * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)) *
                              static_cast<std::size_t>(d) +
                          static_cast<std::size_t>(i)] =
                        reg.predict({features.data() + p * static_cast<std::size_t>(d),
                                     static_cast<std::size_t>(d)});
            });
            zf.push_back(std::move(reg));
        }

        // value update: responses Y_{k+1} + h f(t_k, X_k, Y_{k+1}, Z_k)
        parallel_chunks(P, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const double y_next = y_ref(p, k + 1);
                std::span<const double> xk{features.data() + p * static_cast<std::size_t>(d),
                                           static_cast<std::size_t>(d)};
                const double fval = [&] {
                    try {
                        return truncated.eval_f(t_k, xk, y_next, sol.z_at(p, k));
                    } catch (const EvalError& err) {
                        std::string s = "driver evaluation failed at particle " +
                                        std::to_string(p) + ", step " + std::to_string(k) + ", x=(";
                        for (int i = 0; i < d; ++i)
                            s += (i ? "," : "") + std::to_string(xk[static_cast<std::size_t>(i)]);
                        s += "), z=(";
                        auto z = sol.z_at(p, k);
                        for (int i = 0; i < d; ++i)
                            s += (i ? "," : "") + std::to_string(z[static_cast<std::size_t>(i)]);
                        s += "): ";
                        throw NumericalError(s + err.what());
                    }
                }();
                responses[p] = y_next + h * fval;
            }
        });
        FittedRegression reg;
        try {
            reg = fit(features.data(), P, d, responses, est, threads);
        } catch (const NumericalError& err) {
            throw NumericalError("value regression failed at step " + std::to_string(k) + ": " +
                                 err.what());
        }
        parallel_chunks(P, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p)
                y_ref(p, k) = reg.predict({features.data() + p * static_cast<std::size_t>(d),
                                           static_cast<std::size_t>(d)});
        });
        sol.y_fits[static_cast<std::size_t>(k)] = std::move(reg);

        if (k == 0) {
            // Monte Carlo error bar of the final conditional-expectation step
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t p = 0; p < P; ++p) {
                sum += responses[p];
                sumsq += responses[p] * responses[p];
            }
            const double mean = sum / static_cast<double>(P);
            const double var = std::max(0.0, sumsq / static_cast<double>(P) - mean * mean);
            double y0sum = 0.0;
            for (std::size_t p = 0; p < P; ++p) y0sum += y_ref(p, 0);
            sol.y0_mean = y0sum / static_cast<double>(P);
            sol.y0_stderr = std::sqrt(var / static_cast<double>(P));
        }
    }

    // all stored values finite
    for (double v : sol.Y)
        if (!std::isfinite(v)) throw NumericalError("non-finite value in the solution");
    for (double v : sol.Z)
        if (!std::isfinite(v)) throw NumericalError("non-finite control in the solution");

    return sol;
}

void DiscreteSolution::evaluate_into(int k, std::span<const double> x, double& y,
                                     std::span<double> z) const {
    if (k < 0 || k > n) throw SpecError("step index out of range");
    const int zk = (k == n) ? n - 1 : k;
    for (int i = 0; i < d; ++i) z[static_cast<std::size_t>(i)] = 0.0;
    if (zk >= 0 && !z_fits[static_cast<std::size_t>(zk)].empty())
        for (int i = 0; i < d; ++i)
            z[static_cast<std::size_t>(i)] =
                z_fits[static_cast<std::size_t>(zk)][static_cast<std::size_t>(i)].predict(x);
    if (k == n)
        y = problem.eval_g(x);
    else
        y = y_fits[static_cast<std::size_t>(k)].predict(x);
}

std::pair<double, std::vector<double>> DiscreteSolution::evaluate(
    int k, std::span<const double> x) const {
    std::vector<double> z(static_cast<std::size_t>(d), 0.0);
    double y;
    evaluate_into(k, x, y, z);
    return {y, std::move(z)};
}

} // namespace bsdelab
