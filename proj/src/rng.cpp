#include "bsdelab/rng.hpp"

#include <cmath>

namespace bsdelab {

std::uint64_t mix64(std::uint64_t v) {
    v ^= v >> 30;
    v *= 0xBF58476D1CE4E5B9ULL;
    v ^= v >> 27;
    v *= 0x94D049BB133111EBULL;
    v ^= v >> 31;
    return v;
}

std::uint64_t counter_hash(std::uint64_t seed, Stream stream, std::uint64_t a,
                           std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    h = mix64(h ^ seed);
    h = mix64(h ^ static_cast<std::uint64_t>(stream));
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

double counter_uniform(std::uint64_t seed, Stream stream, std::uint64_t a,
                       std::uint64_t b, std::uint64_t c) {
    const std::uint64_t bits = counter_hash(seed, stream, a, b, c) >> 11;
    // (bits + 0.5) / 2^53 lies strictly inside (0, 1)
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Acklam's inverse normal CDF approximation. Central region |p-1/2| <= 0.47575
// uses a degree-5/5 rational in r = (p-1/2)^2; the tails use a degree-5/4
// rational in sqrt(-2 log q).
double inverse_normal_cdf(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p <= 0.0 || p >= 1.0) return p <= 0.0 ? -HUGE_VAL : HUGE_VAL;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley refinement step: e = Phi(x) - p, via the complementary error
    // function, brings the result to near machine precision.
    static const double inv_sqrt2 = 0.70710678118654752440;
    static const double sqrt_2pi = 2.50662827463100050242;
    const double e = 0.5 * std::erfc(-x * inv_sqrt2) - p;
    const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double counter_normal(std::uint64_t seed, Stream stream, std::uint64_t a,
                      std::uint64_t b, std::uint64_t c) {
    return inverse_normal_cdf(counter_uniform(seed, stream, a, b, c));
}

} // namespace bsdelab
