#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "bsdelab/ensemble.hpp"
#include "bsdelab/regression.hpp"

namespace bsdelab {

// Output of the explicit backward dynamic-programming pass: per-step fitted
// regressions for the value continuation and each control component, plus the
// per-particle values. The terminal slice holds the truncated terminal
// exactly.
struct DiscreteSolution {
    ProblemSpec problem; // the truncated problem that was solved
    EstimatorSpec estimator;
    std::shared_ptr<const PathEnsemble> ensemble;

    int n = 0;
    std::size_t P = 0;
    int d = 1;
    double h = 0.0;

    std::vector<double> Y; // P x (n+1)
    std::vector<double> Z; // P x n x d, raw conditional-expectation fits

    std::vector<FittedRegression> y_fits;               // n entries, k = 0..n-1
    std::vector<std::vector<FittedRegression>> z_fits;  // n x d

    double y0_mean = 0.0;
    double y0_stderr = 0.0;

    double y_at(std::size_t p, int k) const {
        return Y[p * (static_cast<std::size_t>(n) + 1) + static_cast<std::size_t>(k)];
    }
    std::span<const double> z_at(std::size_t p, int k) const {
        return {Z.data() + (p * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)) *
                               static_cast<std::size_t>(d),
                static_cast<std::size_t>(d)};
    }

    // Evaluates the stored step-k regressions at x. At k = n the value is the
    // truncated terminal and z comes from step n-1's fit.
    std::pair<double, std::vector<double>> evaluate(int k, std::span<const double> x) const;
    void evaluate_into(int k, std::span<const double> x, double& y,
                       std::span<double> z) const;
};

// Backward loop for k = n-1 .. 0 over the ensemble:
//   Z_k = (1/h) E_k[ Y_{k+1} dW_k ]      (one regression per component)
//   Y_k = E_k[ Y_{k+1} + h f(t_k, X_k, Y_{k+1}, Z_k) ]
// with f and g read through the problem's recorded truncations; the driver is
// evaluated at each particle's own Z_k prediction (explicit scheme, no inner
// iteration). Requires h * K_{f,y} < 1/2.
DiscreteSolution solve_backward(const ProblemSpec& truncated,
                                std::shared_ptr<const PathEnsemble> ens,
                                const EstimatorSpec& est, int threads = 1);

} // namespace bsdelab
