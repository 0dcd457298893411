#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bsdelab/problem.hpp"
#include "bsdelab/rng.hpp"

namespace bsdelab {

// Dense ensemble of Euler paths on the grid t_k = t0 + k h, h = (T - t0)/n.
// states is P x (n+1) x d, increments P x n x d (variance h per component).
struct PathEnsemble {
    int n = 0;
    std::size_t P = 0;
    int d = 1;
    double t0 = 0.0;
    double T = 1.0;
    double h = 0.0;
    std::uint64_t seed = 0;

    std::vector<double> states;
    std::vector<double> increments;

    bool moments_flagged = false; // increment moment diagnostics (advisory)
    double worst_mean_sigmas = 0.0;
    double worst_var_sigmas = 0.0;

    double time_at(int k) const { return t0 + h * k; }

    std::span<const double> state(std::size_t p, int k) const {
        return {states.data() + (p * (static_cast<std::size_t>(n) + 1) +
                                 static_cast<std::size_t>(k)) *
                                    static_cast<std::size_t>(d),
                static_cast<std::size_t>(d)};
    }
    std::span<const double> increment(std::size_t p, int k) const {
        return {increments.data() +
                    (p * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)) *
                        static_cast<std::size_t>(d),
                static_cast<std::size_t>(d)};
    }

    // Little-endian dump: four uint64 {n, P, d, seed}, then the states
    // row-major as IEEE doubles (see docs/formats.md).
    void write_binary(const std::filesystem::path& path) const;
    static PathEnsemble read_binary(const std::filesystem::path& path);
};

// Classical Euler scheme X_{k+1} = X_k + h b(t_k, X_k) + sigma(t_k, X_k) dW_k
// with increments drawn from the counter generator keyed by (seed, p, k, i):
// the ensemble is bit-identical for every thread count.
PathEnsemble euler_paths(const ProblemSpec& spec, int n, std::size_t P, std::uint64_t seed,
                         int threads = 1);

// Same scheme started from (t_start, x_start); used by the field evaluator
// and the reference oracles.
PathEnsemble euler_paths_from(const ProblemSpec& spec, double t_start,
                              std::span<const double> x_start, int n, std::size_t P,
                              std::uint64_t seed, int threads = 1,
                              Stream stream = Stream::EulerIncrement);

} // namespace bsdelab
