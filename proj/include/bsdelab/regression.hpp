#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bsdelab/errors.hpp"

namespace bsdelab {

enum class EstimatorKind { GlobalLeastSquares, LocalPartitioning };

// Cell range policy for the partitioning estimator. StdDevClip spans
// mean +- range_sigmas * std per coordinate, so the boundary cells pool the
// tails and every cell keeps a workable count; MinMax spans the sample range
// exactly. Queries outside the range clamp to the boundary cell either way.
enum class RangePolicy { StdDevClip, MinMax };

// Empirical conditional-expectation estimator across a particle ensemble:
// either a global polynomial least-squares projection or a local
// equal-width partitioning average.
struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::GlobalLeastSquares;
    int degree = 3; // polynomial total degree (global)
    int bins = 64;  // bins per dimension (partitioning)
    RangePolicy range = RangePolicy::StdDevClip;
    double range_sigmas = 3.0;

    static EstimatorSpec global(int degree = 3);
    static EstimatorSpec partition(int bins = 64, RangePolicy range = RangePolicy::StdDevClip,
                                   double range_sigmas = 3.0);
    // "global:3", "partition:64", "partition:64:minmax", "partition:64:std3.5"
    static EstimatorSpec parse(const std::string& text);
    std::string name() const;
};

// Fitted conditional-expectation function, evaluable at any point.
struct FittedRegression {
    EstimatorKind kind = EstimatorKind::GlobalLeastSquares;
    int d = 1;

    // global least squares: coefficients over monomials of the standardized
    // features (per-coordinate affine map to mean 0, variance 1)
    int degree = 0;
    std::vector<double> shift;             // d
    std::vector<double> scale;             // d
    std::vector<std::vector<int>> powers;  // basis multi-indices, graded order
    std::vector<double> coeffs;
    bool rank_deficient = false;
    int rank = 0;

    // partitioning: equal-width cells over [lo, hi] per coordinate; queries
    // outside the range clamp to the boundary cell
    int bins = 0;
    std::vector<double> lo; // d
    std::vector<double> hi; // d
    std::vector<double> cell_values; // bins^d

    double predict(std::span<const double> x) const;

    nlohmann::json to_json() const;
    static FittedRegression from_json(const nlohmann::json& j);
};

// Least-squares / partitioning fit of responses against the P x d feature
// rows (row-major, contiguous). Global fits solve via a column-pivoted
// Householder QR; rank deficiency falls back to the revealed column subset
// and sets the flag. Non-finite responses are rejected.
FittedRegression fit(const double* features, std::size_t P, int d,
                     std::span<const double> responses, const EstimatorSpec& est,
                     int threads = 1);

std::size_t polynomial_basis_size(int d, int degree);

} // namespace bsdelab
