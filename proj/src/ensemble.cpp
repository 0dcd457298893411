#include "bsdelab/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "bsdelab/parallel.hpp"

namespace bsdelab {

namespace {

struct ChunkMoments {
    double sum = 0.0;
    double sumsq = 0.0;
};

} // namespace

PathEnsemble euler_paths_from(const ProblemSpec& spec, double t_start,
                              std::span<const double> x_start, int n, std::size_t P,
                              std::uint64_t seed, int threads, Stream stream) {
    if (n < 1) throw SpecError("step count n must be >= 1");
    if (P < 1) throw SpecError("particle count P must be >= 1");
    if (!(t_start < spec.T)) throw SpecError("start time must lie before the horizon");
    spec.validate();

    const int d = spec.d;
    PathEnsemble ens;
    ens.n = n;
    ens.P = P;
    ens.d = d;
    ens.t0 = t_start;
    ens.T = spec.T;
    ens.h = (spec.T - t_start) / n;
    ens.seed = seed;
    ens.states.resize(P * (static_cast<std::size_t>(n) + 1) * static_cast<std::size_t>(d));
    ens.increments.resize(P * static_cast<std::size_t>(n) * static_cast<std::size_t>(d));

    const double h = ens.h;
    const double sqrt_h = std::sqrt(h);
    const bool drift_zero = [&] {
        for (const auto& e : spec.b)
            if (!e.is_constant_zero()) return false;
        return true;
    }();
    const bool sigma_det = spec.sigma_deterministic();

    // x-independent diffusion: evaluate the n step matrices once
    std::vector<double> sigma_cache;
    if (sigma_det) {
        sigma_cache.resize(static_cast<std::size_t>(n) * d * d);
        for (int k = 0; k < n; ++k)
            spec.eval_sigma(ens.time_at(k), x_start,
                            {sigma_cache.data() + static_cast<std::size_t>(k) * d * d,
                             static_cast<std::size_t>(d * d)});
    }

    std::vector<ChunkMoments> moments(kParallelChunks * static_cast<std::size_t>(d));

    parallel_chunks(P, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        double bval[kMaxDim];
        double sval[kMaxDim * kMaxDim];
        ChunkMoments* mom = moments.data() + chunk * static_cast<std::size_t>(d);
        for (std::size_t p = begin; p < end; ++p) {
            double* xs = ens.states.data() +
                         p * (static_cast<std::size_t>(n) + 1) * static_cast<std::size_t>(d);
            double* dw = ens.increments.data() +
                         p * static_cast<std::size_t>(n) * static_cast<std::size_t>(d);
            for (int i = 0; i < d; ++i) xs[i] = x_start[static_cast<std::size_t>(i)];
            for (int k = 0; k < n; ++k) {
                const double t = ens.time_at(k);
                const double* xk = xs + static_cast<std::size_t>(k) * d;
                double* xk1 = xs + static_cast<std::size_t>(k + 1) * d;
                double* dwk = dw + static_cast<std::size_t>(k) * d;
                for (int i = 0; i < d; ++i) {
                    const double g = counter_normal(seed, stream, p, static_cast<std::uint64_t>(k),
                                                    static_cast<std::uint64_t>(i));
                    dwk[i] = sqrt_h * g;
                    mom[i].sum += dwk[i];
                    mom[i].sumsq += dwk[i] * dwk[i];
                }
                std::span<const double> xspan{xk, static_cast<std::size_t>(d)};
                const double* sg;
                if (sigma_det) {
                    sg = sigma_cache.data() + static_cast<std::size_t>(k) * d * d;
                } else {
                    try {
                        spec.eval_sigma(t, xspan, {sval, static_cast<std::size_t>(d * d)});
                    } catch (const EvalError& err) {
                        throw NumericalError("diffusion evaluation failed at particle " +
                                             std::to_string(p) + ", step " + std::to_string(k) +
                                             ": " + err.what());
                    }
                    sg = sval;
                }
                if (drift_zero) {
                    for (int i = 0; i < d; ++i) xk1[i] = xk[i];
                } else {
                    try {
                        spec.eval_b(t, xspan, {bval, static_cast<std::size_t>(d)});
                    } catch (const EvalError& err) {
                        throw NumericalError("drift evaluation failed at particle " +
                                             std::to_string(p) + ", step " + std::to_string(k) +
                                             ": " + err.what());
                    }
                    for (int i = 0; i < d; ++i) xk1[i] = xk[i] + h * bval[i];
                }
                for (int i = 0; i < d; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < d; ++j) acc += sg[i * d + j] * dwk[j];
                    xk1[i] += acc;
                }
            }
        }
    });

    // advisory moment diagnostics on the pooled increments, per component
    const double N = static_cast<double>(P) * n;
    double worst_mean = 0.0;
    double worst_var = 0.0;
    for (int i = 0; i < d; ++i) {
        double sum = 0.0;
        double sumsq = 0.0;
        for (std::size_t c = 0; c < kParallelChunks; ++c) {
            sum += moments[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)].sum;
            sumsq += moments[c * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)].sumsq;
        }
        const double mean = sum / N;
        const double var = sumsq / N - mean * mean;
        const double mean_se = std::sqrt(h / N);
        const double var_se = h * std::sqrt(2.0 / N);
        worst_mean = std::max(worst_mean, std::abs(mean) / mean_se);
        worst_var = std::max(worst_var, std::abs(var - h) / var_se);
    }
    ens.worst_mean_sigmas = worst_mean;
    ens.worst_var_sigmas = worst_var;
    ens.moments_flagged = worst_mean > 5.0 || worst_var > 5.0;

    return ens;
}

PathEnsemble euler_paths(const ProblemSpec& spec, int n, std::size_t P, std::uint64_t seed,
                         int threads) {
    return euler_paths_from(spec, 0.0, spec.x0, n, P, seed, threads);
}

void PathEnsemble::write_binary(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("cannot open '" + path.string() + "' for writing");
    const std::uint64_t header[4] = {static_cast<std::uint64_t>(n), P,
                                     static_cast<std::uint64_t>(d), seed};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(states.data()),
              static_cast<std::streamsize>(states.size() * sizeof(double)));
    if (!out) throw NumericalError("short write to '" + path.string() + "'");
}

PathEnsemble PathEnsemble::read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericalError("cannot open '" + path.string() + "' for reading");
    std::uint64_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw NumericalError("truncated ensemble file '" + path.string() + "'");
    PathEnsemble ens;
    ens.n = static_cast<int>(header[0]);
    ens.P = header[1];
    ens.d = static_cast<int>(header[2]);
    ens.seed = header[3];
    ens.states.resize(ens.P * (static_cast<std::size_t>(ens.n) + 1) *
                      static_cast<std::size_t>(ens.d));
    in.read(reinterpret_cast<char*>(ens.states.data()),
            static_cast<std::streamsize>(ens.states.size() * sizeof(double)));
    if (!in) throw NumericalError("truncated ensemble file '" + path.string() + "'");
    return ens;
}

} // namespace bsdelab
